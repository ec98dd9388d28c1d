//! Running query stanzas against a document and packaging the evidence into
//! machine-readable reports.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::bisim::{check_bisim, BisimError, BisimOutcome, PointedModel};
use crate::causality::{
    causal_projection, check_cause, find_causal_chains, find_causes, Ac1Mode, CausalChain, CausalProjection,
    CausalityError, CauseCertificate, CauseQuery, ChainQuery,
};
use crate::dsl::{parse, parse_query, Diagnostics, Document, Query};
use crate::logic::{evaluate, explain, Explanation, Formula, LogicError};
use crate::model::{check_interface, interface_violations, Configuration, ModelError, SystemModel};

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("unknown configuration `{0}`")]
    UnknownConfig(String),
    #[error("intervention `{0}` has no cost")]
    MissingCost(String),
    #[error("intervention `{0}` has no penalty")]
    MissingPenalty(String),
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("{path}:\n{diagnostics}")]
    Parse { path: String, diagnostics: Diagnostics },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl QueryError {
    /// Whether the query gave up because a state or variant cap was hit.
    pub fn is_cap(&self) -> bool {
        let model = |e: &ModelError| matches!(e, ModelError::CapExceeded { .. });
        match self {
            QueryError::Model(e) => model(e),
            QueryError::Logic(LogicError::Model(e)) => model(e),
            QueryError::Causality(CausalityError::Model(e)) => model(e),
            QueryError::Bisim(BisimError::Model(e)) => model(e),
            QueryError::Bisim(BisimError::TooManyStates(_) | BisimError::TooManyVariants(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory that `bisim ... in "path"` references are resolved against.
    pub base_dir: Option<PathBuf>,
    /// Force the strict reading of AC1 for every cause and chain stanza.
    pub strict_ac1: bool,
}

/// Per-intervention data behind a recovery decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub intervention: String,
    /// Whether `<θ>[]!fail` holds at the configuration.
    pub qualifies: bool,
    pub cost: Option<f64>,
    pub penalty: Option<f64>,
    pub utility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Check {
        explanation: Explanation,
    },
    Cause {
        /// Component names of each certificate's cause, in certificate order.
        causes: Vec<Vec<String>>,
        certificates: Vec<CauseCertificate>,
    },
    Chain {
        chains: Vec<CausalChain>,
        projection: CausalProjection,
    },
    Bisim {
        outcome: BisimOutcome,
    },
    Decompose {
        interface: Option<Vec<String>>,
        violations: Vec<String>,
    },
    Recovery {
        chosen: Option<String>,
        candidates: Vec<Candidate>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub model: Option<String>,
    /// The stanza as it would be written in the DSL; re-parse it with
    /// [`parse_query`] to replay.
    pub query: String,
    pub verdict: bool,
    pub evidence: Evidence,
    pub elapsed_ms: f64,
}

impl QueryReport {
    /// Verdict and evidence serialized, leaving out timing.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&(&self.query, self.verdict, &self.evidence)).expect("reports serialize")
    }
}

fn config<'a>(doc: &'a Document, name: &str) -> Result<&'a Configuration, QueryError> {
    doc.config(name)
        .ok_or_else(|| QueryError::UnknownConfig(name.to_string()))
}

fn mode(strict: bool, opts: &RunOptions) -> Ac1Mode {
    if strict || opts.strict_ac1 {
        Ac1Mode::Strict
    } else {
        Ac1Mode::Example
    }
}

/// The guaranteed-recovery formula `<θ>[]!fail`.
pub fn recovery_formula(theta: &str, fail: &Formula) -> Formula {
    Formula::intervene(theta, fail.clone().not().boxed())
}

/// Every declared intervention with whether it guarantees recovery from `f`.
pub fn recovery_candidates(
    model: &SystemModel,
    f: &Configuration,
    fail: &Formula,
) -> Result<Vec<Candidate>, QueryError> {
    model
        .interventions()
        .iter()
        .map(|t| {
            Ok(Candidate {
                intervention: t.name.clone(),
                qualifies: evaluate(model, f, &recovery_formula(&t.name, fail))?,
                cost: t.cost,
                penalty: t.penalty,
                utility: t.utility(),
            })
        })
        .collect()
}

fn require_costs(model: &SystemModel, penalties: bool) -> Result<(), QueryError> {
    for t in model.interventions() {
        if t.cost.is_none() {
            return Err(QueryError::MissingCost(t.name.clone()));
        }
        if penalties && t.penalty.is_none() {
            return Err(QueryError::MissingPenalty(t.name.clone()));
        }
    }
    Ok(())
}

/// First candidate with the best score; `better(a, b)` is strict so earlier
/// declarations win ties.
fn pick(cands: &[Candidate], score: impl Fn(&Candidate) -> f64, better: impl Fn(f64, f64) -> bool) -> Option<String> {
    let mut best: Option<&Candidate> = None;
    for c in cands.iter().filter(|c| c.qualifies) {
        if best.is_none_or(|b| better(score(c), score(b))) {
            best = Some(c);
        }
    }
    best.map(|c| c.intervention.clone())
}

/// The cheapest intervention after which `fail` never holds in one step.
pub fn min_cost_recovery(model: &SystemModel, f: &Configuration, fail: &Formula) -> Result<Option<String>, QueryError> {
    require_costs(model, false)?;
    let cands = recovery_candidates(model, f, fail)?;
    Ok(pick(&cands, |c| c.cost.unwrap(), |a, b| a < b))
}

/// The qualifying intervention maximizing `-cost - penalty`.
pub fn best_utility(model: &SystemModel, f: &Configuration, fail: &Formula) -> Result<Option<String>, QueryError> {
    require_costs(model, true)?;
    let cands = recovery_candidates(model, f, fail)?;
    Ok(pick(&cands, |c| c.utility.unwrap(), |a, b| a > b))
}

fn names(model: &SystemModel, set: &BTreeSet<usize>) -> Vec<String> {
    model.component_names(set)
}

fn load(path: &str, opts: &RunOptions) -> Result<Document, QueryError> {
    let full = match &opts.base_dir {
        Some(dir) => dir.join(path),
        None => PathBuf::from(path),
    };
    let text = std::fs::read_to_string(&full).map_err(|e| QueryError::Io {
        path: full.display().to_string(),
        message: e.to_string(),
    })?;
    parse(&text).map_err(|diagnostics| QueryError::Parse {
        path: full.display().to_string(),
        diagnostics,
    })
}

fn evidence(doc: &Document, q: &Query, opts: &RunOptions) -> Result<(bool, Evidence), QueryError> {
    let m = &doc.model;
    Ok(match q {
        Query::Check { config: c, formula } => {
            let explanation = explain(m, config(doc, c)?, formula)?;
            (explanation.holds, Evidence::Check { explanation })
        }
        Query::Cause {
            from,
            to,
            effect,
            candidate,
            strict,
        } => {
            let cq = CauseQuery::new(
                m,
                config(doc, from)?.clone(),
                config(doc, to)?.clone(),
                m.component_set(effect)?,
            )?;
            let certificates = match candidate {
                Some(c) => vec![check_cause(m, &cq, &m.component_set(c)?, mode(*strict, opts))?],
                None => find_causes(m, &cq, mode(*strict, opts))?,
            };
            let verdict = !certificates.is_empty() && certificates.iter().all(CauseCertificate::is_cause);
            let causes = certificates.iter().map(|c| names(m, &c.cause)).collect();
            (verdict, Evidence::Cause { causes, certificates })
        }
        Query::Chain { from, to, effect, max } => {
            let cq = ChainQuery {
                start: config(doc, from)?.clone(),
                end: config(doc, to)?.clone(),
                effect: m.component_set(effect)?,
                max_len: *max,
                mode: mode(false, opts),
            };
            let chains = find_causal_chains(m, &cq)?;
            let projection = causal_projection(m, &chains);
            (!chains.is_empty(), Evidence::Chain { chains, projection })
        }
        Query::Bisim { left, right, other } => {
            let a = PointedModel::new(m.clone(), config(doc, left)?.clone())?;
            let b = match other {
                None => PointedModel::new(m.clone(), config(doc, right)?.clone())?,
                Some(path) => {
                    let d = load(path, opts)?;
                    let g = config(&d, right)?.clone();
                    // The right-hand model runs under the same settings.
                    PointedModel::new(d.model.with_settings(*m.settings()), g)?
                }
            };
            let outcome = check_bisim(&a, &b)?;
            (outcome.is_bisimilar(), Evidence::Bisim { outcome })
        }
        Query::Decompose { left, right } => {
            let (l, r) = (m.component_set(left)?, m.component_set(right)?);
            let split = check_interface(m, &l, &r)?;
            let violations = if split.is_some() {
                Vec::new()
            } else {
                interface_violations(m, &l, &r)
            };
            let interface = split.as_ref().map(|s| names(m, &s.interface));
            (split.is_some(), Evidence::Decompose { interface, violations })
        }
        Query::Recover { config: c, fail } => {
            let candidates = recovery_candidates(m, config(doc, c)?, fail)?;
            let chosen = candidates.iter().find(|c| c.qualifies).map(|c| c.intervention.clone());
            (chosen.is_some(), Evidence::Recovery { chosen, candidates })
        }
        Query::Mincost { config: c, fail } => {
            let f = config(doc, c)?;
            let chosen = min_cost_recovery(m, f, fail)?;
            let candidates = recovery_candidates(m, f, fail)?;
            (chosen.is_some(), Evidence::Recovery { chosen, candidates })
        }
        Query::Utility { config: c, fail } => {
            let f = config(doc, c)?;
            let chosen = best_utility(m, f, fail)?;
            let candidates = recovery_candidates(m, f, fail)?;
            (chosen.is_some(), Evidence::Recovery { chosen, candidates })
        }
    })
}

/// Run one stanza and report the verdict with its evidence.
pub fn run_query(doc: &Document, q: &Query, opts: &RunOptions) -> Result<QueryReport, QueryError> {
    let t = Instant::now();
    let (verdict, evidence) = evidence(doc, q, opts)?;
    Ok(QueryReport {
        schema_version: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.to_string(),
        model: doc.model.name().map(str::to_string),
        query: q.to_string(),
        verdict,
        evidence,
        elapsed_ms: t.elapsed().as_secs_f64() * 1e3,
    })
}

/// Re-run the stanza echoed in `report`.
pub fn replay(doc: &Document, report: &QueryReport, opts: &RunOptions) -> Result<QueryReport, QueryError> {
    let q = parse_query(&report.query, doc).map_err(|diagnostics| QueryError::Parse {
        path: "<report>".into(),
        diagnostics,
    })?;
    run_query(doc, &q, opts)
}
