use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use super::Span;
use crate::logic::{ident, Formula};
use crate::model::{AtomSpecDef, Configuration, ModelSpec, Pattern, RowSpec, Settings, SystemModel, TransitionMode};

/// One query stanza.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum Query {
    Check {
        config: String,
        formula: Formula,
    },
    Cause {
        from: String,
        to: String,
        effect: Vec<String>,
        candidate: Option<Vec<String>>,
        strict: bool,
    },
    Chain {
        from: String,
        to: String,
        effect: Vec<String>,
        max: usize,
    },
    Bisim {
        left: String,
        right: String,
        /// Path of a second document holding `right`; the same document when absent.
        other: Option<String>,
    },
    Decompose {
        left: Vec<String>,
        right: Vec<String>,
    },
    Recover {
        config: String,
        fail: Formula,
    },
    Mincost {
        config: String,
        fail: Formula,
    },
    Utility {
        config: String,
        fail: Formula,
    },
}

/// A parsed and fully resolved model file.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub model: SystemModel,
    pub configs: Vec<(String, Configuration)>,
    /// Named formulas, with references to other named formulas inlined.
    pub formulas: Vec<(String, Formula)>,
    pub queries: Vec<Query>,
    /// Source position of each query, parallel to `queries`.
    pub query_spans: Vec<Span>,
}

impl Document {
    pub fn config(&self, name: &str) -> Option<&Configuration> {
        self.configs.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn formula(&self, name: &str) -> Option<&Formula> {
        self.formulas.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    /// Same content, ignoring source positions.
    pub fn same_content(&self, other: &Document) -> bool {
        self.model == other.model
            && self.configs == other.configs
            && self.formulas == other.formulas
            && self.queries == other.queries
    }

    pub fn with_settings(&self, settings: Settings) -> Document {
        Document {
            model: self.model.with_settings(settings),
            ..self.clone()
        }
    }
}

fn set(names: &[String]) -> String {
    let items: Vec<String> = names.iter().map(|n| ident(n)).collect();
    format!("{{{}}}", items.join(", "))
}

fn pattern(p: &Pattern<String>) -> String {
    match p {
        Pattern::Any => "_".into(),
        Pattern::Is(b) => ident(b),
    }
}

fn row(r: &RowSpec) -> String {
    let mut s = format!("rule {}", pattern(&r.own));
    if !r.context.is_empty() {
        let ctx: Vec<String> = r.context.iter().map(pattern).collect();
        let _ = write!(s, " ({})", ctx.join(", "));
    }
    let _ = write!(s, " -> {};", ident(&r.output));
    s
}

fn number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Check { config, formula } => write!(f, "check {} |= {};", ident(config), formula),
            Query::Cause {
                from,
                to,
                effect,
                candidate,
                strict,
            } => {
                write!(f, "cause from {} to {} effect {}", ident(from), ident(to), set(effect))?;
                if let Some(c) = candidate {
                    write!(f, " candidate {}", set(c))?;
                }
                if *strict {
                    f.write_str(" strict")?;
                }
                f.write_str(";")
            }
            Query::Chain { from, to, effect, max } => {
                write!(
                    f,
                    "chain from {} to {} effect {} max {};",
                    ident(from),
                    ident(to),
                    set(effect),
                    max
                )
            }
            Query::Bisim { left, right, other } => {
                write!(f, "bisim {} ~ {}", ident(left), ident(right))?;
                if let Some(p) = other {
                    write!(f, " in {p:?}")?;
                }
                f.write_str(";")
            }
            Query::Decompose { left, right } => write!(f, "decompose {} {};", set(left), set(right)),
            Query::Recover { config, fail } => write!(f, "recover {} fail {};", ident(config), fail),
            Query::Mincost { config, fail } => write!(f, "mincost {} fail {};", ident(config), fail),
            Query::Utility { config, fail } => write!(f, "utility {} fail {};", ident(config), fail),
        }
    }
}

fn print_spec(out: &mut String, spec: &ModelSpec) {
    if let Some(n) = &spec.name {
        let _ = writeln!(out, "model {n:?};");
    }
    let s = &spec.settings;
    let d = Settings::default();
    if s.mode == TransitionMode::Sync {
        out.push_str("mode sync;\n");
    }
    for (on, name) in [
        (s.self_loops, "self_loops"),
        (s.allow_trivial_split, "allow_trivial_split"),
        (s.literal_interface, "literal_interface"),
    ] {
        if on {
            let _ = writeln!(out, "option {name};");
        }
    }
    if s.max_states != d.max_states {
        let _ = writeln!(out, "option max_states {};", s.max_states);
    }
    for c in &spec.components {
        let _ = writeln!(out, "\ncomponent {} {{", ident(&c.name));
        let dom: Vec<String> = c.domain.iter().map(|b| ident(b)).collect();
        let _ = writeln!(out, "  domain {};", dom.join(", "));
        if !c.context.is_empty() {
            let ctx: Vec<String> = c.context.iter().map(|b| ident(b)).collect();
            let _ = writeln!(out, "  context {};", ctx.join(", "));
        }
        for r in &c.rules {
            let _ = writeln!(out, "  {}", row(r));
        }
        out.push_str("}\n");
    }
    if !spec.atoms.is_empty() {
        out.push('\n');
    }
    for a in &spec.atoms {
        match &a.def {
            AtomSpecDef::Behaviour { component, behaviour } | AtomSpecDef::OutOfScope { component, behaviour } => {
                let _ = writeln!(
                    out,
                    "atom {} = p[{}={}];",
                    ident(&a.name),
                    ident(component),
                    ident(behaviour)
                );
            }
            AtomSpecDef::Explicit(sets) => {
                let items: Vec<String> = sets
                    .iter()
                    .map(|pairs| {
                        let kv: Vec<String> = pairs
                            .iter()
                            .map(|(c, b)| format!("{}={}", ident(c), ident(b)))
                            .collect();
                        format!("{{{}}}", kv.join(", "))
                    })
                    .collect();
                let _ = writeln!(out, "atom {} = {{{}}};", ident(&a.name), items.join(", "));
            }
        }
    }
    for t in &spec.interventions {
        let _ = write!(out, "\nintervention {}", ident(&t.name));
        if let Some(c) = t.cost {
            let _ = write!(out, " cost {}", number(c));
        }
        if let Some(p) = t.penalty {
            let _ = write!(out, " penalty {}", number(p));
        }
        out.push_str(" {\n");
        for tg in &t.targets {
            let constant = tg.reads.is_empty()
                && tg.rules.len() == 1
                && tg.rules[0].own == Pattern::Any
                && tg.rules[0].context.is_empty();
            if constant {
                let _ = writeln!(out, "  {} -> {};", ident(&tg.component), ident(&tg.rules[0].output));
            } else {
                let reads: Vec<String> = tg.reads.iter().map(|r| ident(r)).collect();
                let _ = writeln!(out, "  {} reads ({}) {{", ident(&tg.component), reads.join(", "));
                for r in &tg.rules {
                    let _ = writeln!(out, "    {}", row(r));
                }
                out.push_str("  }\n");
            }
        }
        out.push_str("}\n");
    }
}

/// Canonical text; parsing it yields a document with the same content.
impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        print_spec(&mut out, &self.model.to_spec());
        if !self.configs.is_empty() {
            out.push('\n');
        }
        for (name, cfg) in &self.configs {
            let kv: Vec<String> = cfg
                .0
                .iter()
                .enumerate()
                .map(|(c, &b)| {
                    format!(
                        "{}={}",
                        ident(&self.model.component(c).name),
                        ident(self.model.behaviour_name(c, b))
                    )
                })
                .collect();
            let _ = writeln!(out, "config {} = {{{}}};", ident(name), kv.join(", "));
        }
        if !self.formulas.is_empty() {
            out.push('\n');
        }
        for (name, phi) in &self.formulas {
            let _ = writeln!(out, "formula {} = {};", ident(name), phi);
        }
        if !self.queries.is_empty() {
            out.push('\n');
        }
        for q in &self.queries {
            let _ = writeln!(out, "{q}");
        }
        f.write_str(&out)
    }
}
