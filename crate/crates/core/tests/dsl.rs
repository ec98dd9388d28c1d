mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syscause::dsl::{parse, parse_formula, parse_query, Document, Query};
use syscause::fixtures;
use syscause::logic::Formula;

fn first_error(src: &str) -> (usize, usize, String) {
    let d = parse(src).unwrap_err();
    let e = &d.0[0];
    (e.span.line, e.span.col, e.message.clone())
}

#[test]
fn ex1_transcription() {
    let doc = fixtures::ex1();
    assert_eq!(doc.model.num_components(), 3);
    assert!(doc.queries.iter().any(|q| matches!(q, Query::Decompose { .. })));
    assert_eq!(doc.configs.len(), 3);
}

#[test]
fn microservice_transcription() {
    let doc = fixtures::microservice();
    let costs: Vec<_> = doc
        .model
        .interventions()
        .iter()
        .map(|t| (t.name.as_str(), t.cost, t.penalty))
        .collect();
    assert_eq!(
        costs,
        [
            ("theta1", Some(10.0), Some(0.0)),
            ("theta2", Some(5.0), Some(4.0)),
            ("theta3", Some(2.0), Some(1.0))
        ]
    );
    assert_eq!(doc.model.num_components(), 5);
}

#[test]
fn diagnostics() {
    assert!(first_error("").2.contains("no components declared"));
    assert!(first_error("# only a comment\n").2.contains("no components declared"));

    let (line, _, msg) = first_error("component a { domain x; }\ncomponent a { domain y; }\n");
    assert_eq!(line, 2);
    assert!(msg.contains("a"), "{msg}");

    let (line, col, msg) = first_error("component a {\n  domain x;\n  rule x -> z;\n}\n");
    assert!(msg.contains("z"), "{msg}");
    assert_eq!(line, 3, "{line}:{col} {msg}");

    let (_, _, msg) = first_error("component a { domain x; }\ncheck nowhere |= true;\n");
    assert!(msg.contains("nowhere"), "{msg}");

    let (_, _, msg) = first_error("component a { domain x; }\nconfig f = {a=x};\ncheck f |= <nope>true;\n");
    assert!(msg.contains("nope"), "{msg}");
}

#[test]
fn star_operands_are_parenthesized() {
    let doc = fixtures::ex1();
    assert!(parse_formula("(latched) * (true)", &doc).is_ok());
    assert!(parse_formula("latched * true", &doc).is_err());
    let phi = parse_formula(
        "!(latched) * (<>latched) | [] latched -> <?>[]+ latched & <>+ true",
        &doc,
    )
    .unwrap();
    let again = parse_formula(&phi.to_string(), &doc).unwrap();
    assert_eq!(phi, again);
}

#[test]
fn behaviour_atoms_and_names() {
    let doc = fixtures::ex1();
    assert_eq!(parse_formula("p[c2=b22]", &doc).unwrap(), Formula::is("c2", "b22"));
    assert!(parse_formula("p[c2=b99]", &doc).is_err());
    assert!(parse_formula("p[c9=b22]", &doc).is_err());
}

#[test]
fn single_stanzas() {
    let doc = fixtures::microservice();
    let q = parse_query("cause from f1 to f2 effect {FrontEnd}", &doc).unwrap();
    assert_eq!(q, doc.queries[7]);
    let q = parse_query("mincost f2 fail phi_fail;", &doc).unwrap();
    assert_eq!(q.to_string(), "mincost f2 fail phi_fail;");
    assert!(parse_query("component x { domain a; }", &doc).is_err());
    assert!(parse_query("check f9 |= true", &doc).is_err());
    assert!(parse_query("check f2 |= true; check f2 |= true;", &doc).is_err());
}

#[test]
fn bundled_models_round_trip() {
    for doc in [fixtures::ex1(), fixtures::microservice()] {
        let printed = doc.to_string();
        let again = parse(&printed).unwrap();
        assert!(doc.same_content(&again), "{printed}");
        assert_eq!(again.to_string(), printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, 4, 3);
        let f = model.configurations().next().unwrap();
        let doc = Document {
            model,
            configs: vec![("f".into(), f)],
            formulas: vec![("phi".into(), Formula::atom("p0").diamond_plus())],
            queries: vec![Query::Check { config: "f".into(), formula: Formula::intervene("t0", Formula::atom("p1")) }],
            query_spans: Vec::new(),
        };
        let printed = doc.to_string();
        let again = parse(&printed).unwrap();
        prop_assert!(doc.same_content(&again), "{}", printed);
    }
}

#[test]
fn intervention_rows_are_located() {
    let src =
        "component a {\n  domain x, y;\n}\nintervention t {\n  a -> x;\n  a reads () {\n    rule _ -> z;\n  }\n}\n";
    let d = parse(src).unwrap_err();
    let e = d.0.iter().find(|e| e.message.contains("`z`")).unwrap();
    assert_eq!(e.span.line, 7, "{d}");
}
