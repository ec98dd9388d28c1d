use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    Atom, AtomDef, BehId, CompId, Component, Configuration, Intervention, ModelError, RuleTable, SystemModel, Target,
};

/// A cover `C₁ ∪ C₂ = C` whose overlap mediates all cross-side influence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InterfaceSplit {
    pub left: BTreeSet<CompId>,
    pub right: BTreeSet<CompId>,
    pub interface: BTreeSet<CompId>,
}

/// An assignment defined only on a chosen subset of components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialConfiguration {
    /// Sorted by component id.
    pub assignment: Vec<(CompId, BehId)>,
}

impl PartialConfiguration {
    pub fn domain(&self) -> BTreeSet<CompId> {
        self.assignment.iter().map(|&(c, _)| c).collect()
    }

    pub fn get(&self, c: CompId) -> Option<BehId> {
        self.assignment.iter().find(|&&(d, _)| d == c).map(|&(_, b)| b)
    }

    /// The values alone, as a configuration of the sub-model over the domain.
    pub fn local(&self) -> Configuration {
        Configuration(self.assignment.iter().map(|&(_, b)| b).collect())
    }
}

pub fn restrict(f: &Configuration, subset: &BTreeSet<CompId>) -> PartialConfiguration {
    PartialConfiguration {
        assignment: subset.iter().map(|&c| (c, f.get(c))).collect(),
    }
}

/// Why `(C₁, C₂)` fails to be an interface split; empty when it is one.
pub fn interface_violations(model: &SystemModel, left: &BTreeSet<CompId>, right: &BTreeSet<CompId>) -> Vec<String> {
    let mut out = Vec::new();
    let interface: BTreeSet<CompId> = left.intersection(right).copied().collect();
    let name = |c: CompId| model.component(c).name.as_str();
    if !model.settings().allow_trivial_split && (left.is_subset(right) || right.is_subset(left)) {
        out.push("one side contains the other; the split is trivial".to_string());
    }
    for (side, set) in [("left", left), ("right", right)] {
        for &c in set.difference(&interface) {
            for &d in &model.component(c).context {
                if !set.contains(&d) {
                    out.push(format!(
                        "{} on the {side} side is influenced by {} from outside it",
                        name(c),
                        name(d)
                    ));
                }
            }
        }
    }
    for &c in &interface {
        let ctx = &model.component(c).context;
        if model.settings().literal_interface {
            for &d in ctx {
                if !interface.contains(&d) {
                    out.push(format!(
                        "interface component {} is influenced by non-interface {}",
                        name(c),
                        name(d)
                    ));
                }
            }
        } else if !ctx.iter().all(|d| left.contains(d)) && !ctx.iter().all(|d| right.contains(d)) {
            out.push(format!("interface component {} is influenced from both sides", name(c)));
        }
    }
    out
}

fn check_cover(model: &SystemModel, left: &BTreeSet<CompId>, right: &BTreeSet<CompId>) -> Result<(), ModelError> {
    let n = model.num_components();
    let covers = left.iter().chain(right).all(|&c| c < n) && (0..n).all(|c| left.contains(&c) || right.contains(&c));
    if !covers {
        return Err(ModelError::NotACover {
            left: left
                .iter()
                .filter(|&&c| c < n)
                .map(|&c| model.component(c).name.clone())
                .collect(),
            right: right
                .iter()
                .filter(|&&c| c < n)
                .map(|&c| model.component(c).name.clone())
                .collect(),
        });
    }
    Ok(())
}

/// Return the split when `(C₁, C₂)` satisfies the locality conditions.
/// Trivial covers are admitted only when the model's settings allow them.
pub fn check_interface(
    model: &SystemModel,
    left: &BTreeSet<CompId>,
    right: &BTreeSet<CompId>,
) -> Result<Option<InterfaceSplit>, ModelError> {
    check_cover(model, left, right)?;
    if !interface_violations(model, left, right).is_empty() {
        return Ok(None);
    }
    Ok(Some(InterfaceSplit {
        left: left.clone(),
        right: right.clone(),
        interface: left.intersection(right).copied().collect(),
    }))
}

/// Every admissible split of `model`, in a fixed canonical order.
pub fn enumerate_splits(model: &SystemModel) -> Vec<InterfaceSplit> {
    let n = model.num_components();
    let total = 3usize.checked_pow(n as u32).unwrap_or(usize::MAX);
    let mut out = Vec::new();
    // Each component is left-only (0), right-only (1) or shared (2).
    for code in 0..total {
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        let mut k = code;
        for c in 0..n {
            match k % 3 {
                0 => {
                    left.insert(c);
                }
                1 => {
                    right.insert(c);
                }
                _ => {
                    left.insert(c);
                    right.insert(c);
                }
            }
            k /= 3;
        }
        if let Ok(Some(s)) = check_interface(model, &left, &right) {
            out.push(s);
        }
    }
    out
}

/// A local view of a global step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalMove {
    Step,
    Stutter,
    /// Neither a local step nor a stutter; never produced for a sound split.
    Invalid,
}

/// The two partial models of a validated split.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub split: InterfaceSplit,
    pub left: SystemModel,
    pub right: SystemModel,
}

impl Decomposition {
    pub fn new(model: &SystemModel, split: &InterfaceSplit) -> Result<Decomposition, ModelError> {
        check_cover(model, &split.left, &split.right)?;
        let v = interface_violations(model, &split.left, &split.right);
        if !v.is_empty() {
            return Err(ModelError::NotAnInterface(v.join("; ")));
        }
        Ok(Decomposition {
            split: split.clone(),
            left: model.sub_model(&split.left)?,
            right: model.sub_model(&split.right)?,
        })
    }

    /// Project the global step `f -> g` onto both halves.
    pub fn project_step(&self, f: &Configuration, g: &Configuration) -> [LocalMove; 2] {
        let one = |m: &SystemModel, side: &BTreeSet<CompId>| {
            let a = restrict(f, side).local();
            let b = restrict(g, side).local();
            if a == b {
                LocalMove::Stutter
            } else if m.successors_unchecked(&a).contains(&b) {
                LocalMove::Step
            } else {
                LocalMove::Invalid
            }
        };
        [one(&self.left, &self.split.left), one(&self.right, &self.split.right)]
    }
}

impl SystemModel {
    /// The partial model over `subset`. A component reading from outside the
    /// subset becomes an open input: it may move to any behaviour its rule
    /// can produce, so every global step still projects to a local one.
    pub fn sub_model(&self, subset: &BTreeSet<CompId>) -> Result<SystemModel, ModelError> {
        let ids: Vec<CompId> = subset.iter().copied().collect();
        let local = |c: CompId| ids.iter().position(|&d| d == c);
        let names = || {
            ids.iter()
                .filter(|&&c| c < self.num_components())
                .map(|&c| self.component(c).name.clone())
                .collect()
        };
        if ids.iter().any(|&c| c >= self.num_components()) {
            return Err(ModelError::NotClosed(names()));
        }
        let closed = |ctx: &[CompId]| ctx.iter().all(|&d| local(d).is_some());
        let mut components = Vec::with_capacity(ids.len());
        for &c in &ids {
            let comp = self.component(c);
            components.push(if comp.open.is_some() || closed(&comp.context) {
                Component {
                    name: comp.name.clone(),
                    domain: comp.domain.clone(),
                    context: comp.context.iter().map(|&d| local(d).unwrap()).collect(),
                    rule: comp.rule.clone(),
                    open: comp.open.clone(),
                }
            } else {
                Component {
                    name: comp.name.clone(),
                    domain: comp.domain.clone(),
                    context: Vec::new(),
                    rule: RuleTable::default(),
                    open: Some(comp.rule.possible_moves(comp.domain.len())),
                }
            });
        }
        let atoms = self
            .atoms()
            .iter()
            .map(|a| Atom {
                name: a.name.clone(),
                def: match &a.def {
                    AtomDef::Behaviour { component, behaviour } => match local(*component) {
                        Some(l) => AtomDef::Behaviour {
                            component: l,
                            behaviour: *behaviour,
                        },
                        None => AtomDef::OutOfScope {
                            component: self.component(*component).name.clone(),
                            behaviour: self.behaviour_name(*component, *behaviour).to_string(),
                        },
                    },
                    AtomDef::Explicit(set) => {
                        AtomDef::Explicit(set.iter().map(|f| restrict(f, subset).local()).collect())
                    }
                    AtomDef::OutOfScope { .. } => a.def.clone(),
                },
            })
            .collect();
        let interventions = self
            .interventions()
            .iter()
            .map(|t| Intervention {
                name: t.name.clone(),
                targets: t
                    .targets
                    .iter()
                    .filter_map(|tg| {
                        let component = local(tg.component)?;
                        let domain_len = self.component(tg.component).domain.len();
                        Some(match tg.reads.iter().map(|&d| local(d)).collect::<Option<Vec<_>>>() {
                            Some(reads) if tg.open.is_none() => Target {
                                component,
                                reads,
                                rule: tg.rule.clone(),
                                open: None,
                            },
                            _ => Target {
                                component,
                                reads: Vec::new(),
                                rule: RuleTable::default(),
                                open: Some(tg.open.clone().unwrap_or_else(|| tg.rule.possible_moves(domain_len))),
                            },
                        })
                    })
                    .collect(),
                cost: t.cost,
                penalty: t.penalty,
            })
            .collect();
        Ok(SystemModel {
            name: self.name.clone(),
            settings: self.settings,
            components,
            atoms,
            interventions,
            universe: self.universe.clone(),
        })
    }
}
