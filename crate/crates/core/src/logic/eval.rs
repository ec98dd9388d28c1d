use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::Formula;
use crate::model::{
    enumerate_splits, restrict, Configuration, Decomposition, InterfaceSplit, ModelError, PartialConfiguration,
    SystemModel,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown intervention `{0}`")]
    UnknownIntervention(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unknown behaviour `{behaviour}` for component `{component}`")]
    UnknownBehaviour { component: String, behaviour: String },
    #[error("the separating conjunction is not allowed here")]
    StarNotAllowed,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Check that every name in `phi` resolves against `model`.
pub fn resolve(model: &SystemModel, phi: &Formula) -> Result<(), LogicError> {
    match phi {
        Formula::Atom(p) => {
            model.atom(p).ok_or_else(|| LogicError::UnknownAtom(p.clone()))?;
        }
        Formula::BehaviourAtom { component, behaviour } => match model.component_id(component) {
            Some(c) => {
                if model.component(c).behaviour(behaviour).is_none() {
                    return Err(LogicError::UnknownBehaviour {
                        component: component.clone(),
                        behaviour: behaviour.clone(),
                    });
                }
            }
            None if model.universe().contains(component) => {}
            None => return Err(LogicError::UnknownComponent(component.clone())),
        },
        Formula::Intervene(t, _) => {
            model
                .intervention(t)
                .ok_or_else(|| LogicError::UnknownIntervention(t.clone()))?;
        }
        _ => {}
    }
    phi.children().into_iter().try_for_each(|c| resolve(model, c))
}

/// `(M, f) ⊨ φ`.
pub fn evaluate(model: &SystemModel, f: &Configuration, phi: &Formula) -> Result<bool, LogicError> {
    model.check_config(f)?;
    resolve(model, phi)?;
    eval(model, f, phi)
}

/// Evaluate on a partial model at a partial configuration over its domain.
pub fn evaluate_partial(model: &SystemModel, f: &PartialConfiguration, phi: &Formula) -> Result<bool, LogicError> {
    evaluate(model, &f.local(), phi)
}

fn holds_atom(model: &SystemModel, f: &Configuration, phi: &Formula) -> bool {
    match phi {
        Formula::Atom(p) => model.atom(p).is_some_and(|a| model.atom_holds(a, f)),
        Formula::BehaviourAtom { component, behaviour } => match model.component_id(component) {
            Some(c) => model.component(c).behaviour(behaviour) == Some(f.get(c)),
            None => false,
        },
        _ => unreachable!(),
    }
}

fn intervened(model: &SystemModel, theta: &str) -> Result<SystemModel, LogicError> {
    let t = model
        .intervention(theta)
        .ok_or_else(|| LogicError::UnknownIntervention(theta.to_string()))?;
    Ok(model.apply_intervention(t)?)
}

fn split_halves(
    model: &SystemModel,
    f: &Configuration,
    split: &InterfaceSplit,
) -> Result<(Decomposition, Configuration, Configuration), LogicError> {
    let d = Decomposition::new(model, split)?;
    let l = restrict(f, &split.left).local();
    let r = restrict(f, &split.right).local();
    Ok((d, l, r))
}

pub(crate) fn eval(model: &SystemModel, f: &Configuration, phi: &Formula) -> Result<bool, LogicError> {
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(_) | Formula::BehaviourAtom { .. } => holds_atom(model, f, phi),
        Formula::Not(a) => !eval(model, f, a)?,
        Formula::And(a, b) => eval(model, f, a)? && eval(model, f, b)?,
        Formula::Or(a, b) => eval(model, f, a)? || eval(model, f, b)?,
        Formula::Implies(a, b) => !eval(model, f, a)? || eval(model, f, b)?,
        Formula::Box(a) => {
            for g in model.successors_unchecked(f) {
                if !eval(model, &g, a)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Diamond(a) => {
            for g in model.successors_unchecked(f) {
                if eval(model, &g, a)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::BoxPlus(a) => {
            for g in model.reachable_plus(f)? {
                if !eval(model, &g, a)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::DiamondPlus(a) => {
            for g in model.reachable_plus(f)? {
                if eval(model, &g, a)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Intervene(t, a) => intervene_witness(model, f, t, a)?.is_some(),
        Formula::InterveneExists(a) => {
            for t in model.interventions() {
                if intervene_witness(model, f, &t.name, a)?.is_some() {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Star(a, b) => star_witness(model, f, a, b)?.is_some(),
    })
}

fn intervene_witness(
    model: &SystemModel,
    f: &Configuration,
    theta: &str,
    body: &Formula,
) -> Result<Option<Configuration>, LogicError> {
    let mt = intervened(model, theta)?;
    for g in mt.successors_unchecked(f) {
        if eval(&mt, &g, body)? {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

fn star_witness(
    model: &SystemModel,
    f: &Configuration,
    a: &Formula,
    b: &Formula,
) -> Result<Option<InterfaceSplit>, LogicError> {
    for split in enumerate_splits(model) {
        let (d, l, r) = split_halves(model, f, &split)?;
        if eval(&d.left, &l, a)? && eval(&d.right, &r, b)? {
            return Ok(Some(split));
        }
    }
    Ok(None)
}

/// `{f ∈ F : (M, f) ⊨ φ}`, refusing models above the state cap.
pub fn sat_set(model: &SystemModel, phi: &Formula) -> Result<BTreeSet<Configuration>, LogicError> {
    model.check_cap()?;
    resolve(model, phi)?;
    let mut out = BTreeSet::new();
    for f in model.configurations() {
        if eval(model, &f, phi)? {
            out.insert(f);
        }
    }
    Ok(out)
}

/// What made the top-level operator true.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Split {
        left: Vec<String>,
        right: Vec<String>,
        interface: Vec<String>,
    },
    Successor {
        configuration: String,
    },
    Intervention {
        intervention: String,
        successor: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub holds: bool,
    pub witness: Option<Witness>,
}

/// Evaluate and report the witness for the top-level ∗, ◊, ◊⁺, ⟨θ⟩ or ⟨?⟩.
pub fn explain(model: &SystemModel, f: &Configuration, phi: &Formula) -> Result<Explanation, LogicError> {
    model.check_config(f)?;
    resolve(model, phi)?;
    let found = |cfg: Option<Configuration>| {
        cfg.map(|g| Witness::Successor {
            configuration: model.format_config(&g),
        })
    };
    let witness = match phi {
        Formula::Star(a, b) => star_witness(model, f, a, b)?.map(|s| Witness::Split {
            left: model.component_names(&s.left),
            right: model.component_names(&s.right),
            interface: model.component_names(&s.interface),
        }),
        Formula::Diamond(a) => {
            let mut w = None;
            for g in model.successors_unchecked(f) {
                if eval(model, &g, a)? {
                    w = Some(g);
                    break;
                }
            }
            found(w)
        }
        Formula::DiamondPlus(a) => {
            let mut w = None;
            for g in model.reachable_plus(f)? {
                if eval(model, &g, a)? {
                    w = Some(g);
                    break;
                }
            }
            found(w)
        }
        Formula::Intervene(t, a) => intervene_witness(model, f, t, a)?.map(|g| Witness::Intervention {
            intervention: t.clone(),
            successor: model.format_config(&g),
        }),
        Formula::InterveneExists(a) => {
            let mut w = None;
            for t in model.interventions() {
                if let Some(g) = intervene_witness(model, f, &t.name, a)? {
                    w = Some(Witness::Intervention {
                        intervention: t.name.clone(),
                        successor: model.format_config(&g),
                    });
                    break;
                }
            }
            w
        }
        _ => None,
    };
    let holds = match (phi, &witness) {
        (Formula::Star(..) | Formula::Diamond(_) | Formula::DiamondPlus(_), _)
        | (Formula::Intervene(..) | Formula::InterveneExists(_), _) => witness.is_some(),
        _ => eval(model, f, phi)?,
    };
    Ok(Explanation { holds, witness })
}
