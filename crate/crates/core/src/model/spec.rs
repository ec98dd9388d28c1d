use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    Atom, AtomDef, BehId, Component, Configuration, Intervention, Pattern, RuleRow, RuleTable, Settings, SystemModel,
    Target,
};

/// A model as declared, with every reference by name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: Option<String>,
    pub settings: Settings,
    pub components: Vec<ComponentSpec>,
    pub atoms: Vec<AtomSpec>,
    pub interventions: Vec<InterventionSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub domain: Vec<String>,
    pub context: Vec<String>,
    pub rules: Vec<RowSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub own: Pattern<String>,
    pub context: Vec<Pattern<String>>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub name: String,
    pub def: AtomSpecDef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomSpecDef {
    Behaviour {
        component: String,
        behaviour: String,
    },
    /// Each inner list is a `component = behaviour` assignment.
    Explicit(Vec<Vec<(String, String)>>),
    OutOfScope {
        component: String,
        behaviour: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub name: String,
    pub targets: Vec<TargetSpec>,
    pub cost: Option<f64>,
    pub penalty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub component: String,
    pub reads: Vec<String>,
    pub rules: Vec<RowSpec>,
}

impl TargetSpec {
    /// Replace the component with a constant behaviour.
    pub fn constant(component: &str, behaviour: &str) -> Self {
        TargetSpec {
            component: component.to_string(),
            reads: Vec::new(),
            rules: vec![RowSpec {
                own: Pattern::Any,
                context: Vec::new(),
                output: behaviour.to_string(),
            }],
        }
    }
}

impl ModelSpec {
    pub fn component(&self, name: &str) -> Option<&ComponentSpec> {
        self.components.iter().find(|c| c.name == name)
    }
}

fn beh(domain: &[String], name: &str) -> BehId {
    domain.iter().position(|b| b == name).expect("validated") as BehId
}

fn pattern(domain: &[String], p: &Pattern<String>) -> Pattern<BehId> {
    match p {
        Pattern::Any => Pattern::Any,
        Pattern::Is(b) => Pattern::Is(beh(domain, b)),
    }
}

fn table(spec: &ModelSpec, own: &ComponentSpec, reads: &[String], rows: &[RowSpec]) -> RuleTable {
    let rows = rows
        .iter()
        .map(|row| RuleRow {
            own: pattern(&own.domain, &row.own),
            context: row
                .context
                .iter()
                .zip(reads)
                .map(|(p, d)| pattern(&spec.component(d).expect("validated").domain, p))
                .collect(),
            output: beh(&own.domain, &row.output),
        })
        .collect();
    RuleTable { rows }
}

pub(super) fn resolve(spec: &ModelSpec) -> SystemModel {
    let id = |n: &str| spec.components.iter().position(|c| c.name == n).expect("validated");
    let components = spec
        .components
        .iter()
        .map(|c| Component {
            name: c.name.clone(),
            domain: c.domain.clone(),
            context: c.context.iter().map(|d| id(d)).collect(),
            rule: table(spec, c, &c.context, &c.rules),
            open: None,
        })
        .collect();
    let atoms = spec
        .atoms
        .iter()
        .map(|a| Atom {
            name: a.name.clone(),
            def: match &a.def {
                AtomSpecDef::Behaviour { component, behaviour } => {
                    let c = id(component);
                    AtomDef::Behaviour {
                        component: c,
                        behaviour: beh(&spec.components[c].domain, behaviour),
                    }
                }
                AtomSpecDef::Explicit(sets) => AtomDef::Explicit(
                    sets.iter()
                        .map(|pairs| {
                            let mut v = vec![0; spec.components.len()];
                            for (c, b) in pairs {
                                let c = id(c);
                                v[c] = beh(&spec.components[c].domain, b);
                            }
                            Configuration(v)
                        })
                        .collect::<BTreeSet<_>>(),
                ),
                AtomSpecDef::OutOfScope { component, behaviour } => AtomDef::OutOfScope {
                    component: component.clone(),
                    behaviour: behaviour.clone(),
                },
            },
        })
        .collect();
    let interventions = spec
        .interventions
        .iter()
        .map(|t| Intervention {
            name: t.name.clone(),
            targets: t
                .targets
                .iter()
                .map(|tg| {
                    let c = id(&tg.component);
                    Target {
                        component: c,
                        reads: tg.reads.iter().map(|d| id(d)).collect(),
                        rule: table(spec, &spec.components[c], &tg.reads, &tg.rules),
                        open: None,
                    }
                })
                .collect(),
            cost: t.cost,
            penalty: t.penalty,
        })
        .collect();
    SystemModel {
        name: spec.name.clone(),
        settings: spec.settings,
        components,
        atoms,
        interventions,
        universe: spec.components.iter().map(|c| c.name.clone()).collect(),
    }
}

fn unpattern(m: &SystemModel, c: usize, p: &Pattern<BehId>) -> Pattern<String> {
    match p {
        Pattern::Any => Pattern::Any,
        Pattern::Is(b) => Pattern::Is(m.behaviour_name(c, *b).to_string()),
    }
}

fn unrows(m: &SystemModel, c: usize, reads: &[usize], t: &RuleTable) -> Vec<RowSpec> {
    t.rows
        .iter()
        .map(|r| RowSpec {
            own: unpattern(m, c, &r.own),
            context: r.context.iter().zip(reads).map(|(p, &d)| unpattern(m, d, p)).collect(),
            output: m.behaviour_name(c, r.output).to_string(),
        })
        .collect()
}

pub(super) fn unresolve(m: &SystemModel) -> ModelSpec {
    let name = |c: usize| m.components[c].name.clone();
    ModelSpec {
        name: m.name.clone(),
        settings: m.settings,
        components: m
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| ComponentSpec {
                name: c.name.clone(),
                domain: c.domain.clone(),
                context: c.context.iter().map(|&d| name(d)).collect(),
                rules: unrows(m, i, &c.context, &c.rule),
            })
            .collect(),
        atoms: m
            .atoms
            .iter()
            .map(|a| AtomSpec {
                name: a.name.clone(),
                def: match &a.def {
                    AtomDef::Behaviour { component, behaviour } => AtomSpecDef::Behaviour {
                        component: name(*component),
                        behaviour: m.behaviour_name(*component, *behaviour).to_string(),
                    },
                    AtomDef::Explicit(set) => AtomSpecDef::Explicit(
                        set.iter()
                            .map(|f| {
                                f.0.iter()
                                    .enumerate()
                                    .map(|(c, &b)| (name(c), m.behaviour_name(c, b).to_string()))
                                    .collect()
                            })
                            .collect(),
                    ),
                    AtomDef::OutOfScope { component, behaviour } => AtomSpecDef::OutOfScope {
                        component: component.clone(),
                        behaviour: behaviour.clone(),
                    },
                },
            })
            .collect(),
        interventions: m
            .interventions
            .iter()
            .map(|t| InterventionSpec {
                name: t.name.clone(),
                targets: t
                    .targets
                    .iter()
                    .map(|tg| TargetSpec {
                        component: name(tg.component),
                        reads: tg.reads.iter().map(|&d| name(d)).collect(),
                        rules: unrows(m, tg.component, &tg.reads, &tg.rule),
                    })
                    .collect(),
                cost: t.cost,
                penalty: t.penalty,
            })
            .collect(),
    }
}
