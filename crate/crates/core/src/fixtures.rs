//! Bundled example models.

use crate::dsl::{parse, Document};

pub const EX1: &str = include_str!("../models/ex1.scm");
pub const MICROSERVICE: &str = include_str!("../models/microservice.scm");

pub fn ex1() -> Document {
    parse(EX1).expect("bundled model parses")
}

pub fn microservice() -> Document {
    parse(MICROSERVICE).expect("bundled model parses")
}
