mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syscause::dsl::parse;
use syscause::fixtures;
use syscause::model::{
    check_interface, enumerate_splits, restrict, validate_model, Configuration, Decomposition, LocalMove, Settings,
    SystemModel, TransitionMode,
};

fn model(src: &str) -> SystemModel {
    parse(src).unwrap().model
}

fn cfg(m: &SystemModel, pairs: &[(&str, &str)]) -> Configuration {
    m.configuration(pairs).unwrap()
}

fn set(m: &SystemModel, names: &[&str]) -> BTreeSet<usize> {
    m.component_set(names).unwrap()
}

const INERT: &str = "component a { domain x; }";

#[test]
fn validation() {
    let ex1 = fixtures::ex1().model.to_spec();
    assert!(validate_model(&ex1).is_empty());
    assert!(validate_model(&fixtures::microservice().model.to_spec()).is_empty());

    let mut bad = ex1.clone();
    bad.components[0].rules[0].output = "b99".into();
    let r = validate_model(&bad);
    assert_eq!(r.violations.len(), 1, "{r}");
    assert!(r.violations[0].location.contains("c1"), "{r}");
    assert!(r.violations[0].message.contains("b99"), "{r}");
    assert!(SystemModel::new(&bad).is_err());
}

#[test]
fn ex1_successors() {
    let m = fixtures::ex1().model;
    let g = cfg(&m, &[("c1", "b12"), ("c2", "b21"), ("c3", "b31")]);
    let want: BTreeSet<_> = [
        cfg(&m, &[("c1", "b13"), ("c2", "b21"), ("c3", "b31")]),
        cfg(&m, &[("c1", "b12"), ("c2", "b22"), ("c3", "b31")]),
    ]
    .into();
    assert_eq!(m.successors(&g).unwrap(), want);
}

#[test]
fn inert_component() {
    let m = model(INERT);
    let f = cfg(&m, &[("a", "x")]);
    assert!(m.successors(&f).unwrap().is_empty());
    assert!(m.reachable_plus(&f).unwrap().is_empty());
    let looped = m.with_settings(Settings {
        self_loops: true,
        ..Settings::default()
    });
    assert_eq!(looped.successors(&f).unwrap(), BTreeSet::from([f.clone()]));
    assert!(looped.reachable_plus(&f).unwrap().contains(&f));
}

#[test]
fn microservice_run() {
    let m = fixtures::microservice().model;
    let f = cfg(
        &m,
        &[
            ("Auth", "idle"),
            ("UserDB", "dbError"),
            ("ProfileSvc", "idle"),
            ("Logger", "idle"),
            ("FrontEnd", "serving"),
        ],
    );
    let auth = m.component_id("Auth").unwrap();
    let fail = m.component(auth).behaviour("authFail").unwrap();
    assert!(m.successors(&f).unwrap().iter().any(|g| g.get(auth) == fail));
    let doc = fixtures::microservice();
    let reach = m.reachable_plus(doc.config("f1").unwrap()).unwrap();
    assert!(reach.contains(doc.config("f2").unwrap()));
}

#[test]
fn reset_freezes_c2() {
    let m = fixtures::ex1().model;
    let reset = m.apply_intervention(m.intervention("reset").unwrap()).unwrap();
    let f = cfg(&m, &[("c1", "b11"), ("c2", "b21"), ("c3", "b31")]);
    let (c1, c2) = (m.component_id("c1").unwrap(), m.component_id("c2").unwrap());
    let reach = reset.reachable(&f).unwrap();
    assert!(reach.iter().all(|g| g.get(c1) == 0 && g.get(c2) == 0));
    // Only c1's rule changed.
    for c in 0..m.num_components() {
        assert_eq!(m.component(c) == reset.component(c), c != c1);
    }
    assert_eq!(m.atoms(), reset.atoms());
    assert_eq!(m.interventions(), reset.interventions());
}

#[test]
fn intervention_edge_cases() {
    let src = format!(
        "{}\nintervention same {{ c2 reads (c1) {{ rule b21 (b12) -> b22; }} }}",
        fixtures::EX1
    );
    let m = model(&src);
    let same = m.apply_intervention(m.intervention("same").unwrap()).unwrap();
    assert_eq!(same.components(), m.components());

    let ms = fixtures::microservice().model;
    let t2 = ms.apply_intervention(ms.intervention("theta2").unwrap()).unwrap();
    let fe = ms.component_id("FrontEnd").unwrap();
    let cache = ms.component(fe).behaviour("servingCache").unwrap();
    for f in ms.configurations().take(200) {
        assert_eq!(t2.update(fe, &f), cache);
    }
}

#[test]
fn ex1_interfaces() {
    let m = fixtures::ex1().model;
    let split = check_interface(&m, &set(&m, &["c1", "c2"]), &set(&m, &["c2", "c3"]))
        .unwrap()
        .unwrap();
    assert_eq!(split.interface, set(&m, &["c2"]));
    assert_eq!(
        check_interface(&m, &set(&m, &["c1"]), &set(&m, &["c2", "c3"])).unwrap(),
        None
    );
    // Both sides must cover the model.
    assert!(check_interface(&m, &set(&m, &["c1"]), &set(&m, &["c2"])).is_err());

    let all = set(&m, &["c1", "c2", "c3"]);
    assert_eq!(check_interface(&m, &all, &all).unwrap(), None);
    let trivial = m.with_settings(Settings {
        allow_trivial_split: true,
        ..Settings::default()
    });
    assert_eq!(check_interface(&trivial, &all, &all).unwrap().unwrap().interface, all);

    // Reading clause (b) literally, c2 may not read c1 from the interface.
    let literal = m.with_settings(Settings {
        literal_interface: true,
        ..Settings::default()
    });
    assert_eq!(
        check_interface(&literal, &set(&m, &["c1", "c2"]), &set(&m, &["c2", "c3"])).unwrap(),
        None
    );
}

#[test]
fn microservice_split_is_rejected() {
    let m = fixtures::microservice().model;
    let l = set(&m, &["Auth", "UserDB", "Logger"]);
    let r = set(&m, &["ProfileSvc", "FrontEnd", "Logger"]);
    assert_eq!(check_interface(&m, &l, &r).unwrap(), None);
}

#[test]
fn ex1_decomposition() {
    let m = fixtures::ex1().model;
    let split = check_interface(&m, &set(&m, &["c1", "c2"]), &set(&m, &["c2", "c3"]))
        .unwrap()
        .unwrap();
    let d = Decomposition::new(&m, &split).unwrap();
    let f = cfg(&m, &[("c1", "b11"), ("c2", "b21"), ("c3", "b31")]);
    let g = cfg(&m, &[("c1", "b12"), ("c2", "b21"), ("c3", "b31")]);
    assert_eq!(d.project_step(&f, &g), [LocalMove::Step, LocalMove::Stutter]);

    // The left half alone: c2 fires once c1 = b12.
    let local = restrict(&g, &split.left).local();
    let c2 = d.left.component_id("c2").unwrap();
    assert!(d
        .left
        .successors(&local)
        .unwrap()
        .iter()
        .any(|h| d.left.behaviour_name(c2, h.get(c2)) == "b22"));

    let all = set(&m, &["c1", "c2", "c3"]);
    let trivial = m.with_settings(Settings {
        allow_trivial_split: true,
        ..Settings::default()
    });
    let s = check_interface(&trivial, &all, &all).unwrap().unwrap();
    let d = Decomposition::new(&trivial, &s).unwrap();
    assert_eq!(d.left.components(), m.components());
    assert_eq!(d.right.components(), m.components());
}

#[test]
fn restriction() {
    let doc = fixtures::microservice();
    let m = &doc.model;
    let f1 = doc.config("f1").unwrap();
    let logger = m.component_id("Logger").unwrap();
    let p = restrict(f1, &BTreeSet::from([logger]));
    assert_eq!(
        p.assignment,
        vec![(logger, m.component(logger).behaviour("idle").unwrap())]
    );
    let full: BTreeSet<usize> = (0..m.num_components()).collect();
    assert_eq!(restrict(f1, &full).local(), *f1);
    assert!(restrict(f1, &BTreeSet::new()).assignment.is_empty());
}

#[test]
fn sync_mode() {
    let m = fixtures::ex1().model.with_settings(Settings {
        mode: TransitionMode::Sync,
        ..Settings::default()
    });
    let g = cfg(&m, &[("c1", "b12"), ("c2", "b21"), ("c3", "b31")]);
    let next = cfg(&m, &[("c1", "b13"), ("c2", "b22"), ("c3", "b31")]);
    assert_eq!(m.successors(&g).unwrap(), BTreeSet::from([next]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn async_steps_change_one_component(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(&mut rng, 4, 3);
        let m = m.with_settings(Settings { mode: TransitionMode::Async, ..*m.settings() });
        for f in m.configurations() {
            for g in m.successors(&f).unwrap() {
                prop_assert!(f.0.iter().zip(&g.0).filter(|(a, b)| a != b).count() <= 1);
            }
        }
    }

    #[test]
    fn every_tuple_matches_a_row(seed in any::<u64>()) {
        // update() panics on a missing row; the implicit identity default
        // must catch everything.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(&mut rng, 3, 3);
        for f in m.configurations() {
            for c in 0..m.num_components() {
                let b = m.update(c, &f);
                prop_assert!((b as usize) < m.component(c).domain.len());
            }
        }
    }

    #[test]
    fn interventions_touch_only_targets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(&mut rng, 3, 3);
        for t in m.interventions() {
            let mt = m.apply_intervention(t).unwrap();
            let targets = t.target_ids();
            for c in 0..m.num_components() {
                if !targets.contains(&c) {
                    prop_assert_eq!(
                        serde_json::to_string(m.component(c)).unwrap(),
                        serde_json::to_string(mt.component(c)).unwrap()
                    );
                }
            }
            prop_assert_eq!(m.atoms(), mt.atoms());
            prop_assert_eq!(m.settings(), mt.settings());
        }
    }

    #[test]
    fn decompositions_are_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(&mut rng, 4, 2);
        let m = m.with_settings(Settings { mode: TransitionMode::Async, ..*m.settings() });
        for split in enumerate_splits(&m) {
            let d = Decomposition::new(&m, &split).unwrap();
            for f in m.configurations() {
                for g in m.successors(&f).unwrap() {
                    let moves = d.project_step(&f, &g);
                    prop_assert!(moves.iter().all(|&x| x != LocalMove::Invalid), "{:?}", moves);
                    for &c in &split.interface {
                        prop_assert_eq!(restrict(&g, &split.left).get(c), restrict(&g, &split.right).get(c));
                    }
                }
            }
            // Interventions keep the contexts, so the split survives them.
            for t in m.interventions() {
                let mt = m.apply_intervention(t).unwrap();
                prop_assert!(check_interface(&mt, &split.left, &split.right).unwrap().is_some());
            }
        }
    }
}
