//! One PASS/FAIL line per acceptance criterion. Runs without the test
//! harness so the lines are always printed; exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use syscause::bisim::{check_bisim, BisimOutcome, PointedModel};
use syscause::causality::{
    check_cause, classify_intervention_effect, find_causal_chains, find_causes, replay_certificate, Ac1Mode,
    CauseCertificate, CauseQuery, ChainQuery, EffectClass,
};
use syscause::dsl::parse;
use syscause::fixtures;
use syscause::hp::{certificate_to_hp, hp_check_actual_cause, HpEffect};
use syscause::logic::{evaluate, Formula};
use syscause::model::{SystemModel, TransitionMode};
use syscause::query::min_cost_recovery;

type Outcome = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(t: Instant, limit: Duration) -> Result<Duration, String> {
    let took = t.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn micro_query(m: &SystemModel) -> CauseQuery {
    let doc = fixtures::microservice();
    CauseQuery::new(
        m,
        doc.config("f1").unwrap().clone(),
        doc.config("f2").unwrap().clone(),
        m.component_set(&["FrontEnd"]).unwrap(),
    )
    .unwrap()
}

fn recovery() -> Outcome {
    let doc = fixtures::microservice();
    let f2 = doc.config("f2").unwrap();
    let t = Instant::now();
    let mut got = Vec::new();
    for theta in ["theta1", "theta2", "theta3"] {
        let phi = Formula::intervene(theta, Formula::atom("phi_fail").not().boxed());
        got.push(evaluate(&doc.model, f2, &phi).map_err(|e| e.to_string())?);
    }
    let took = within(t, Duration::from_secs(1))?;
    ensure(got == [true, true, false], format!("got {got:?}"))?;
    Ok(format!("theta1/2/3 = {got:?} in {took:?}"))
}

fn min_cost() -> Outcome {
    let doc = fixtures::microservice();
    let chosen = min_cost_recovery(&doc.model, doc.config("f2").unwrap(), &Formula::atom("phi_fail"))
        .map_err(|e| e.to_string())?;
    ensure(chosen.as_deref() == Some("theta2"), format!("got {chosen:?}"))?;
    Ok("theta2".into())
}

fn actual_cause() -> Outcome {
    let m = fixtures::microservice().model;
    let q = micro_query(&m);
    let certs = find_causes(&m, &q, Ac1Mode::Example).map_err(|e| e.to_string())?;
    let causes: Vec<Vec<String>> = certs.iter().map(|c| m.component_names(&c.cause)).collect();
    ensure(causes == [["UserDB"]], format!("causes {causes:?}"))?;
    let cert = &certs[0];
    let w = cert.ac2.witness.as_ref().map(|w| m.component_names(w));
    let want = ["Auth", "ProfileSvc", "Logger", "FrontEnd"].map(String::from).to_vec();
    ensure(w.as_ref() == Some(&want), format!("witness {w:?}"))?;
    ensure(
        replay_certificate(&m, &q, cert).map_err(|e| e.to_string())?,
        "certificate does not replay",
    )?;
    let strict =
        check_cause(&m, &q, &m.component_set(&["UserDB"]).unwrap(), Ac1Mode::Strict).map_err(|e| e.to_string())?;
    ensure(!strict.ac1.holds && !strict.is_cause(), "strict AC1 accepted UserDB")?;
    Ok("{{UserDB}}, W = {Auth, ProfileSvc, Logger, FrontEnd}; strict AC1 rejects".into())
}

fn reset() -> Outcome {
    let doc = fixtures::ex1();
    let m = &doc.model;
    let t = Instant::now();
    let mt = m
        .apply_intervention(m.intervention("reset").unwrap())
        .map_err(|e| e.to_string())?;
    let f = m.configuration(&[("c1", "b11"), ("c2", "b21"), ("c3", "b31")]).unwrap();
    let reach = mt.reachable(&f).map_err(|e| e.to_string())?;
    let (c1, c2) = (m.component_id("c1").unwrap(), m.component_id("c2").unwrap());
    let (b11, b21) = (
        m.component(c1).behaviour("b11").unwrap(),
        m.component(c2).behaviour("b21").unwrap(),
    );
    let ok = reach.iter().all(|g| g.get(c1) == b11 && g.get(c2) == b21);
    let took = within(t, Duration::from_millis(100))?;
    ensure(ok, "a reachable configuration moved c1 or c2")?;
    Ok(format!(
        "{} reachable configuration(s) checked in {took:?}",
        reach.len()
    ))
}

fn interface() -> Outcome {
    use syscause::model::check_interface;
    let m = fixtures::ex1().model;
    let set = |names: &[&str]| m.component_set(names).unwrap();
    let split = check_interface(&m, &set(&["c1", "c2"]), &set(&["c2", "c3"])).map_err(|e| e.to_string())?;
    ensure(
        split.as_ref().map(|s| &s.interface) == Some(&set(&["c2"])),
        format!("accept case: {split:?}"),
    )?;
    let rejected = check_interface(&m, &set(&["c1"]), &set(&["c2", "c3"])).map_err(|e| e.to_string())?;
    ensure(rejected.is_none(), format!("reject case: {rejected:?}"))?;
    Ok("({c1,c2},{c2,c3}) accepted with {c2}; ({c1},{c2,c3}) rejected".into())
}

struct Case {
    m: SystemModel,
    q: CauseQuery,
    certs: Vec<CauseCertificate>,
}

/// The criterion 6 corpus, shared with criterion 7.
fn corpus() -> Vec<Case> {
    let mut rng = common::rng(6);
    (0..200)
        .map(|_| {
            let m = common::random_model(&mut rng, 3, 3);
            let (f1, f2, effect) = common::random_query(&mut rng, &m);
            let q = CauseQuery::new(&m, f1, f2, effect).unwrap();
            let certs = find_causes(&m, &q, Ac1Mode::Example).unwrap();
            Case { m, q, certs }
        })
        .collect()
}

fn oracle(cases: &[Case], search: Duration) -> Outcome {
    let t = Instant::now() - search;
    let mut agree = 0;
    for c in cases {
        let got: BTreeSet<_> = c.certs.iter().map(|x| x.cause.clone()).collect();
        let want = common::oracle_causes(&c.m, &c.q.start, &c.q.end, &c.q.effect, Ac1Mode::Example);
        let strict: BTreeSet<_> = find_causes(&c.m, &c.q, Ac1Mode::Strict)
            .unwrap()
            .into_iter()
            .map(|x| x.cause)
            .collect();
        let want_strict = common::oracle_causes(&c.m, &c.q.start, &c.q.end, &c.q.effect, Ac1Mode::Strict);
        if got == want && strict == want_strict {
            agree += 1;
        }
    }
    let took = within(t, Duration::from_secs(60))?;
    ensure(agree == cases.len(), format!("{agree}/{} agree", cases.len()))?;
    let causes: usize = cases.iter().map(|c| c.certs.len()).sum();
    Ok(format!(
        "{agree}/{} models agree in both AC1 modes, {causes} causes, {took:?}",
        cases.len()
    ))
}

fn hp_cross_validation(cases: &[Case]) -> Outcome {
    let mut total = 0;
    let mut reasons: BTreeMap<&str, usize> = BTreeMap::new();
    for c in cases {
        for cert in &c.certs {
            total += 1;
            let (hp, hq) =
                certificate_to_hp(&c.m, &c.q, cert, HpEffect::WholeConfiguration).map_err(|e| e.to_string())?;
            let v = hp_check_actual_cause(&hp, &hq).map_err(|e| e.to_string())?;
            if v.is_cause() {
                continue;
            }
            let clamps_effect = cert.ac2.witness.as_ref().is_some_and(|w| !w.is_disjoint(&c.q.effect));
            let reason = if !v.ac1 {
                "HP AC1"
            } else if v.ac2.is_none() && cert.ac2.deviations.is_empty() {
                "HP AC2, cause has no alternative behaviour"
            } else if v.ac2.is_none() && clamps_effect {
                "HP AC2, witness clamps an effect component"
            } else if v.ac2.is_none() {
                "HP AC2, other"
            } else {
                "HP AC3"
            };
            *reasons.entry(reason).or_default() += 1;
        }
    }
    let rejected: usize = reasons.values().sum();
    let detail: Vec<String> = reasons.iter().map(|(r, n)| format!("{r}: {n}")).collect();
    let summary = format!(
        "{}/{total} causes accepted; rejected by {}",
        total - rejected,
        detail.join(", ")
    );
    ensure(rejected == 0, summary.clone())?;
    Ok(summary)
}

fn bisim_soundness() -> Outcome {
    let mut rng = common::rng(8);
    for i in 0..50 {
        let spec = common::random_spec(&mut rng, 3, 3);
        let (renamed, map) = common::rename(&mut rng, &spec);
        let (m1, m2) = (SystemModel::new(&spec).unwrap(), SystemModel::new(&renamed).unwrap());
        let f = common::all_configs(&m1).choose(&mut rng).unwrap().clone();
        let g = map(&f);
        let out = check_bisim(
            &PointedModel::new(m1.clone(), f.clone()).unwrap(),
            &PointedModel::new(m2.clone(), g.clone()).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        ensure(out.is_bisimilar(), format!("pair {i} not bisimilar"))?;
        catch_unwind(AssertUnwindSafe(|| common::agree_on_suite(&m1, &f, &m2, &g)))
            .map_err(|_| format!("pair {i} disagrees on the suite"))?;
    }
    Ok("50 renamed pairs bisimilar, zero disagreements to depth 3".into())
}

fn bisim_completeness() -> Outcome {
    let mut rng = common::rng(9);
    let mut verified = 0;
    let mut drawn = 0;
    while verified < 50 {
        drawn += 1;
        ensure(drawn < 2000, "too few non-bisimilar mutants")?;
        let spec = common::random_spec(&mut rng, 3, 3);
        let mutant = common::mutate(&mut rng, &spec);
        let (m1, m2) = (SystemModel::new(&spec).unwrap(), SystemModel::new(&mutant).unwrap());
        let f = common::all_configs(&m1).choose(&mut rng).unwrap().clone();
        let out = check_bisim(
            &PointedModel::new(m1.clone(), f.clone()).unwrap(),
            &PointedModel::new(m2.clone(), f.clone()).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        if let BisimOutcome::Distinguished { formula } = out {
            ensure(!formula.contains_star(), format!("{formula} uses *"))?;
            let (l, r) = (
                evaluate(&m1, &f, &formula).unwrap(),
                evaluate(&m2, &f, &formula).unwrap(),
            );
            ensure(l && !r, format!("{formula} does not separate the pair"))?;
            verified += 1;
        }
    }
    Ok(format!(
        "50/50 distinguishing formulas verified ({drawn} mutants drawn)"
    ))
}

const QUIET: &str = "
intervention quiet {
  Logger reads (Auth, ProfileSvc, FrontEnd) {
    rule idle (authSucc, profileOK, _) -> logged;
    rule idle (authSucc, profileTimeout, _) -> logged;
    rule idle (authFail, profileOK, _) -> logged;
    rule idle (authFail, profileTimeout, _) -> logged;
  }
}
";

fn classification() -> Outcome {
    let doc = parse(&format!("{}{}", fixtures::MICROSERVICE, QUIET)).map_err(|e| e.to_string())?;
    let m = &doc.model;
    let q = micro_query(m);
    let cq = ChainQuery {
        start: q.start.clone(),
        end: q.end.clone(),
        effect: q.effect.clone(),
        max_len: 4,
        mode: Ac1Mode::Example,
    };
    let chain = find_causal_chains(m, &cq)
        .map_err(|e| e.to_string())?
        .into_iter()
        .next()
        .ok_or("no chain")?;

    let quiet = m.intervention("quiet").unwrap();
    let e = classify_intervention_effect(m, &chain, quiet).map_err(|e| e.to_string())?;
    ensure(
        e.class == EffectClass::Preserved,
        format!("Logger-only: {:?} ({})", e.class, e.reason),
    )?;
    ensure(e.overlapping.is_empty(), "Logger-only intervention overlaps a cause")?;
    let mq = m.apply_intervention(quiet).map_err(|e| e.to_string())?;
    let again = find_causal_chains(&mq, &cq).map_err(|e| e.to_string())?;
    ensure(
        again.iter().any(|c| c.configurations == chain.configurations),
        "preserved chain not found again",
    )?;

    let theta1 = m.intervention("theta1").unwrap();
    let e = classify_intervention_effect(m, &chain, theta1).map_err(|e| e.to_string())?;
    ensure(
        e.class == EffectClass::Disrupted,
        format!("theta1: {:?} ({})", e.class, e.reason),
    )?;
    let i = e.invalidated.ok_or("no invalidated link")?;
    let m1 = m.apply_intervention(theta1).map_err(|e| e.to_string())?;
    let still = m1.reachable_plus(&chain.configurations[i]).map_err(|e| e.to_string())?;
    ensure(
        !still.contains(&chain.configurations[i + 1]),
        "invalidated link still reachable",
    )?;
    Ok(format!(
        "quiet preserved (replayed), theta1 disrupted at link {i} (replayed)"
    ))
}

fn main() {
    let t = Instant::now();
    let cases = corpus();
    let search = t.elapsed();
    // The oracle corpus is asynchronous and synchronous alike.
    let sync = cases
        .iter()
        .filter(|c| c.m.settings().mode == TransitionMode::Sync)
        .count();
    let criteria: Vec<Criterion> = vec![
        (1, "guaranteed recovery", Box::new(recovery)),
        (2, "min-cost selection", Box::new(min_cost)),
        (3, "actual cause", Box::new(actual_cause)),
        (4, "intervention reset", Box::new(reset)),
        (5, "interface detection", Box::new(interface)),
        (
            6,
            "cause-oracle equivalence",
            Box::new(|| oracle(&cases, search).map(|s| format!("{s}, {sync} synchronous"))),
        ),
        (7, "HP cross-validation", Box::new(|| hp_cross_validation(&cases))),
        (8, "bisimulation soundness", Box::new(bisim_soundness)),
        (9, "bisimulation completeness", Box::new(bisim_completeness)),
        (10, "intervention effect classification", Box::new(classification)),
    ];
    let mut failed = 0;
    for (n, name, run) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
