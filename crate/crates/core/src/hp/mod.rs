//! Export to structural-equation models and an independent actual-cause
//! checker for them.
//!
//! Two exports are provided. [`export_hp`] gives one variable per component
//! whose equation is the component's rule, its own value supplied by an
//! exogenous variable; it is flagged when the influence graph is cyclic, in
//! which case it has no unique solution. [`export_hp_path`] unrolls a run
//! into one layer of variables per step, which is always acyclic: the
//! variable for `c` at step `t` applies `c`'s rule to step `t-1` if `c` moved
//! at step `t`, and copies its step `t-1` value otherwise.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causality::{CauseCertificate, CauseQuery};
use crate::model::{CompId, Configuration, Pattern, SystemModel, TransitionMode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HpError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} out of range for variable `{variable}`")]
    BadValue { variable: String, value: u16 },
    #[error("the equations are cyclic; export along a run instead")]
    Cyclic,
    #[error("component `{0}` has no rule and cannot be exported")]
    OpenComponent(String),
    #[error("a run needs at least one configuration")]
    EmptyRun,
    #[error("the cause has no actuality path to unroll")]
    NoPath,
}

/// Where an equation reads a value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Endogenous(usize),
    Exogenous(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationRow {
    /// One entry per input; `None` matches anything.
    pub inputs: Vec<Option<u16>>,
    pub output: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<String>,
    pub inputs: Vec<Source>,
    /// First matching row wins.
    pub rows: Vec<EquationRow>,
    /// Input whose value is taken when no row matches.
    pub otherwise: usize,
}

impl Variable {
    pub fn parents(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .inputs
            .iter()
            .filter_map(|s| match s {
                Source::Endogenous(i) => Some(*i),
                Source::Exogenous(_) => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exogenous {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpModel {
    pub exogenous: Vec<Exogenous>,
    /// The context `ū`: one value per exogenous variable.
    pub context: Vec<u16>,
    pub variables: Vec<Variable>,
    pub acyclic: bool,
    /// Number of unrolled steps; absent for the one-layer export.
    pub steps: Option<usize>,
}

impl HpModel {
    pub fn variable(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn require(&self, name: &str, value: &str) -> Result<(usize, u16), HpError> {
        let i = self
            .variable(name)
            .ok_or_else(|| HpError::UnknownVariable(name.into()))?;
        let b = self.variables[i]
            .domain
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| HpError::UnknownVariable(format!("{name}={value}")))?;
        Ok((i, b as u16))
    }

    /// Evaluation order of the endogenous variables.
    fn order(&self) -> Result<Vec<usize>, HpError> {
        let n = self.variables.len();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (i, v) in self.variables.iter().enumerate() {
            for p in v.parents() {
                indeg[i] += 1;
                children[p].push(i);
            }
        }
        let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            out.push(i);
            for &c in children[i].iter().rev() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if out.len() == n {
            Ok(out)
        } else {
            Err(HpError::Cyclic)
        }
    }

    fn eval(&self, i: usize, values: &[u16]) -> u16 {
        let v = &self.variables[i];
        let read = |s: &Source| match *s {
            Source::Endogenous(j) => values[j],
            Source::Exogenous(j) => self.context[j],
        };
        let ins: Vec<u16> = v.inputs.iter().map(read).collect();
        v.rows
            .iter()
            .find(|r| r.inputs.iter().zip(&ins).all(|(p, x)| p.is_none_or(|p| p == *x)))
            .map_or(ins[v.otherwise], |r| r.output)
    }

    /// The unique solution under `ū` with the given variables held fixed.
    pub fn solve(&self, fixed: &[(usize, u16)]) -> Result<Vec<u16>, HpError> {
        let mut values = vec![0u16; self.variables.len()];
        for i in self.order()? {
            values[i] = match fixed.iter().find(|(j, _)| *j == i) {
                Some(&(_, b)) => b,
                None => self.eval(i, &values),
            };
        }
        Ok(values)
    }
}

fn row_to_equation(own: &Pattern<u16>, ctx: &[Pattern<u16>], output: u16) -> EquationRow {
    let pat = |p: &Pattern<u16>| match p {
        Pattern::Any => None,
        Pattern::Is(b) => Some(*b),
    };
    EquationRow {
        inputs: std::iter::once(pat(own)).chain(ctx.iter().map(pat)).collect(),
        output,
    }
}

fn check_closed(model: &SystemModel) -> Result<(), HpError> {
    match model.components().iter().find(|c| c.open.is_some()) {
        Some(c) => Err(HpError::OpenComponent(c.name.clone())),
        None => Ok(()),
    }
}

/// One variable per component; `U_c` supplies `c`'s current behaviour, set
/// to `f1(c)` by the context, and `V_c` applies `c`'s rule to it and to the
/// variables of its influence context.
pub fn export_hp(model: &SystemModel, f1: &Configuration) -> Result<HpModel, HpError> {
    check_closed(model)?;
    let exogenous = model
        .components()
        .iter()
        .map(|c| Exogenous {
            name: format!("U_{}", c.name),
            domain: c.domain.clone(),
        })
        .collect();
    let variables = model
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| Variable {
            name: c.name.clone(),
            domain: c.domain.clone(),
            inputs: std::iter::once(Source::Exogenous(i))
                .chain(c.context.iter().map(|&d| Source::Endogenous(d)))
                .collect(),
            rows: c
                .rule
                .rows
                .iter()
                .map(|r| row_to_equation(&r.own, &r.context, r.output))
                .collect(),
            otherwise: 0,
        })
        .collect();
    let mut hp = HpModel {
        exogenous,
        context: f1.0.clone(),
        variables,
        acyclic: true,
        steps: None,
    };
    hp.acyclic = hp.order().is_ok();
    Ok(hp)
}

/// Name of the unrolled variable for component `c` at `step`.
pub fn step_name(model: &SystemModel, c: CompId, step: usize) -> String {
    format!("{}@{}", model.component(c).name, step)
}

/// Unroll the run `path` into layers `0..=k`. Layer 0 copies the context,
/// which is the run's first configuration; a component is recomputed at
/// step `t` when it changed there, or always in synchronous models.
pub fn export_hp_path(model: &SystemModel, path: &[Configuration]) -> Result<HpModel, HpError> {
    check_closed(model)?;
    let first = path.first().ok_or(HpError::EmptyRun)?;
    let n = model.num_components();
    let comps = model.components();
    let exogenous = comps
        .iter()
        .map(|c| Exogenous {
            name: format!("U_{}", c.name),
            domain: c.domain.clone(),
        })
        .collect();
    let mut variables = Vec::with_capacity(n * path.len());
    for (c, comp) in comps.iter().enumerate() {
        variables.push(Variable {
            name: step_name(model, c, 0),
            domain: comp.domain.clone(),
            inputs: vec![Source::Exogenous(c)],
            rows: Vec::new(),
            otherwise: 0,
        });
    }
    for t in 1..path.len() {
        let prev = |d: CompId| Source::Endogenous((t - 1) * n + d);
        for (c, comp) in comps.iter().enumerate() {
            let moves = model.settings().mode == TransitionMode::Sync || path[t].get(c) != path[t - 1].get(c);
            let (inputs, rows) = if moves {
                (
                    std::iter::once(prev(c))
                        .chain(comp.context.iter().map(|&d| prev(d)))
                        .collect(),
                    comp.rule
                        .rows
                        .iter()
                        .map(|r| row_to_equation(&r.own, &r.context, r.output))
                        .collect(),
                )
            } else {
                (vec![prev(c)], Vec::new())
            };
            variables.push(Variable {
                name: step_name(model, c, t),
                domain: comp.domain.clone(),
                inputs,
                rows,
                otherwise: 0,
            });
        }
    }
    Ok(HpModel {
        exogenous,
        context: first.0.clone(),
        variables,
        acyclic: true,
        steps: Some(path.len() - 1),
    })
}

/// A candidate `X = x` and a conjunctive effect `φ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpCauseQuery {
    pub cause: Vec<(usize, u16)>,
    pub effect: Vec<(usize, u16)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpWitness {
    /// Variables held at their actual values.
    pub w: Vec<usize>,
    /// The alternative setting of the cause variables.
    pub setting: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpVerdict {
    pub ac1: bool,
    pub ac2: Option<HpWitness>,
    pub ac3: bool,
    /// A strict subset passing AC1 and AC2, when minimality fails.
    pub smaller: Option<Vec<(usize, u16)>>,
}

impl HpVerdict {
    pub fn is_cause(&self) -> bool {
        self.ac1 && self.ac2.is_some() && self.ac3
    }
}

fn check_query(hp: &HpModel, pairs: &[(usize, u16)]) -> Result<(), HpError> {
    for &(i, b) in pairs {
        let v = hp
            .variables
            .get(i)
            .ok_or_else(|| HpError::UnknownVariable(format!("#{i}")))?;
        if b as usize >= v.domain.len() {
            return Err(HpError::BadValue {
                variable: v.name.clone(),
                value: b,
            });
        }
    }
    Ok(())
}

fn holds(values: &[u16], pairs: &[(usize, u16)]) -> bool {
    pairs.iter().all(|&(i, b)| values[i] == b)
}

/// AC2(a^m): some setting of `x` and some set `W` held at actual values
/// make `φ` false. Only variables whose value departs from the actual one
/// need a choice, so the search branches there alone.
fn ac2(
    hp: &HpModel,
    order: &[usize],
    actual: &[u16],
    x: &[(usize, u16)],
    effect: &[(usize, u16)],
) -> Option<HpWitness> {
    let vars: Vec<usize> = x.iter().map(|p| p.0).collect();
    let mut settings: Vec<Vec<u16>> = vec![Vec::new()];
    for &i in &vars {
        let n = hp.variables[i].domain.len() as u16;
        settings = settings
            .into_iter()
            .flat_map(|s| {
                (0..n).map(move |b| {
                    let mut s = s.clone();
                    s.push(b);
                    s
                })
            })
            .collect();
    }
    for setting in settings {
        let mut values = actual.to_vec();
        let mut w = Vec::new();
        if branch(hp, order, 0, &vars, &setting, actual, &mut values, &mut w, effect) {
            return Some(HpWitness { w, setting });
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn branch(
    hp: &HpModel,
    order: &[usize],
    k: usize,
    vars: &[usize],
    setting: &[u16],
    actual: &[u16],
    values: &mut Vec<u16>,
    w: &mut Vec<usize>,
    effect: &[(usize, u16)],
) -> bool {
    if k == order.len() {
        return !holds(values, effect);
    }
    let i = order[k];
    if let Some(p) = vars.iter().position(|&v| v == i) {
        values[i] = setting[p];
        return branch(hp, order, k + 1, vars, setting, actual, values, w, effect);
    }
    let computed = hp.eval(i, values);
    values[i] = computed;
    if branch(hp, order, k + 1, vars, setting, actual, values, w, effect) {
        return true;
    }
    if computed != actual[i] {
        values[i] = actual[i];
        w.push(i);
        if branch(hp, order, k + 1, vars, setting, actual, values, w, effect) {
            return true;
        }
        w.pop();
    }
    false
}

/// Halpern's AC1, AC2(a^m) and AC3, by exhaustive search.
pub fn hp_check_actual_cause(hp: &HpModel, q: &HpCauseQuery) -> Result<HpVerdict, HpError> {
    check_query(hp, &q.cause)?;
    check_query(hp, &q.effect)?;
    let order = hp.order()?;
    let actual = hp.solve(&[])?;
    let passes = |x: &[(usize, u16)]| {
        let a1 = holds(&actual, x) && holds(&actual, &q.effect);
        (
            a1,
            if a1 {
                ac2(hp, &order, &actual, x, &q.effect)
            } else {
                None
            },
        )
    };
    let (ac1, witness) = passes(&q.cause);
    let mut smaller = None;
    let n = q.cause.len();
    for mask in 1..(1u64 << n).saturating_sub(1) {
        let sub: Vec<(usize, u16)> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| q.cause[i]).collect();
        if let (true, Some(_)) = passes(&sub) {
            smaller = Some(sub);
            break;
        }
    }
    Ok(HpVerdict {
        ac1,
        ac2: witness,
        ac3: smaller.is_none(),
        smaller,
    })
}

/// Which final-step variables the HP effect formula constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HpEffect {
    /// Every component at its end value.
    #[default]
    WholeConfiguration,
    /// Only the query's effect components.
    EffectSet,
}

/// The HP counterpart of a cause certificate: the run from its actuality
/// evidence unrolled, each cause component at the step from which it keeps
/// its end value, and the effect at the last step.
pub fn certificate_to_hp(
    model: &SystemModel,
    q: &CauseQuery,
    cert: &CauseCertificate,
    scope: HpEffect,
) -> Result<(HpModel, HpCauseQuery), HpError> {
    let path = &cert.ac1.path;
    if path.is_empty() {
        return Err(HpError::NoPath);
    }
    let hp = export_hp_path(model, path)?;
    let n = model.num_components();
    let k = path.len() - 1;
    let settled = |c: CompId| {
        let mut t = k;
        while t > 0 && path[t - 1].get(c) == q.end.get(c) {
            t -= 1;
        }
        t
    };
    let cause = cert.cause.iter().map(|&c| (settled(c) * n + c, q.end.get(c))).collect();
    let effect = match scope {
        HpEffect::WholeConfiguration => (0..n).map(|c| (k * n + c, q.end.get(c))).collect(),
        HpEffect::EffectSet => q.effect.iter().map(|&c| (k * n + c, q.end.get(c))).collect(),
    };
    Ok((hp, HpCauseQuery { cause, effect }))
}

/// Components whose variables appear in a witness, by unrolled name.
pub fn witness_names(hp: &HpModel, w: &HpWitness) -> BTreeSet<String> {
    w.w.iter().map(|&i| hp.variables[i].name.clone()).collect()
}
