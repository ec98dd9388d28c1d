//! System models: components, behaviour domains, influence rules, atoms and
//! declared interventions.
//!
//! A model is declared by name through [`ModelSpec`] and resolved into a
//! [`SystemModel`], which works on dense indices. Resolution only succeeds
//! when [`validate_model`] reports no violations, so every `SystemModel` in
//! circulation satisfies the well-formedness invariants.

mod interface;
mod spec;
mod transition;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use interface::{
    check_interface, enumerate_splits, interface_violations, restrict, Decomposition, InterfaceSplit, LocalMove,
    PartialConfiguration,
};
pub use spec::{AtomSpec, AtomSpecDef, ComponentSpec, InterventionSpec, ModelSpec, RowSpec, TargetSpec};
pub use validate::{validate_model, ValidationReport, Violation};

/// Index of a component in declaration order.
pub type CompId = usize;
/// Index of a behaviour within its component's domain.
pub type BehId = u16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model is not well-formed:\n{0}")]
    Invalid(ValidationReport),
    #[error("configuration has {got} entries but the model has {expected} components")]
    ConfigArity { expected: usize, got: usize },
    #[error("behaviour index {behaviour} is outside the domain of component `{component}`")]
    ConfigDomain { component: String, behaviour: usize },
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unknown behaviour `{behaviour}` for component `{component}`")]
    UnknownBehaviour { component: String, behaviour: String },
    #[error("unknown intervention `{0}`")]
    UnknownIntervention(String),
    #[error("intervention `{name}`: {message}")]
    BadIntervention { name: String, message: String },
    #[error("components {left:?} and {right:?} do not cover the model")]
    NotACover { left: Vec<String>, right: Vec<String> },
    #[error("split is not an interface: {0}")]
    NotAnInterface(String),
    #[error("component subset {0:?} does not belong to the model")]
    NotClosed(Vec<String>),
    #[error("configuration space has {size} states, above the cap of {cap}")]
    CapExceeded { size: u128, cap: usize },
}

/// Asynchronous (one component per step) or synchronous (all at once) updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransitionMode {
    #[default]
    Async,
    Sync,
}

/// Semantic switches shared by a model and every model derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Settings {
    pub mode: TransitionMode,
    /// Keep `f -> f` edges when a rule is at a fixpoint.
    pub self_loops: bool,
    /// Admit covers where one side contains the other when searching splits.
    pub allow_trivial_split: bool,
    /// Largest configuration space the exhaustive procedures will enumerate.
    pub max_states: usize,
    /// Require interface components to read only interface components.
    /// The default lets each interface component read within one side.
    #[serde(default)]
    pub literal_interface: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            mode: TransitionMode::Async,
            self_loops: false,
            allow_trivial_split: false,
            max_states: 1 << 20,
            literal_interface: false,
        }
    }
}

/// A rule-row pattern: a literal behaviour or `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern<T> {
    Any,
    Is(T),
}

impl Pattern<BehId> {
    #[inline]
    fn matches(&self, b: BehId) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Is(x) => *x == b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleRow {
    pub own: Pattern<BehId>,
    pub context: Vec<Pattern<BehId>>,
    pub output: BehId,
}

/// Ordered rule rows; the first matching row wins and an unmatched input
/// keeps the current behaviour.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct RuleTable {
    pub rows: Vec<RuleRow>,
}

impl RuleTable {
    /// Index of the first row matching `own` and the context values read
    /// from `f` at positions `context`.
    pub fn matching_row(&self, own: BehId, context: &[CompId], f: &Configuration) -> Option<usize> {
        self.rows
            .iter()
            .position(|row| row.own.matches(own) && row.context.iter().zip(context).all(|(p, &d)| p.matches(f.0[d])))
    }

    pub fn apply(&self, own: BehId, context: &[CompId], f: &Configuration) -> BehId {
        match self.matching_row(own, context, f) {
            Some(i) => self.rows[i].output,
            None => own,
        }
    }

    /// Same as [`RuleTable::apply`] with the context values given directly.
    pub fn apply_values(&self, own: BehId, values: &[BehId]) -> BehId {
        self.rows
            .iter()
            .find(|row| row.own.matches(own) && row.context.iter().zip(values).all(|(p, &v)| p.matches(v)))
            .map_or(own, |row| row.output)
    }

    /// For each own behaviour, the other behaviours some row can produce.
    pub fn possible_moves(&self, domain_len: usize) -> Vec<Vec<BehId>> {
        (0..domain_len as BehId)
            .map(|b| {
                let mut outs: Vec<BehId> = self
                    .rows
                    .iter()
                    .filter(|r| r.own.matches(b) && r.output != b)
                    .map(|r| r.output)
                    .collect();
                outs.sort_unstable();
                outs.dedup();
                outs
            })
            .collect()
    }

    /// A table mapping every input to `output`.
    pub fn constant(output: BehId, context_len: usize) -> Self {
        RuleTable {
            rows: vec![RuleRow {
                own: Pattern::Any,
                context: vec![Pattern::Any; context_len],
                output,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub domain: Vec<String>,
    /// Influence context, in declared order.
    pub context: Vec<CompId>,
    pub rule: RuleTable,
    /// Set on interface components of a partial model whose influence comes
    /// from the other side: for each current behaviour, the behaviours the
    /// component may move to under some outside context.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<Vec<Vec<BehId>>>,
}

impl Component {
    pub fn behaviour(&self, name: &str) -> Option<BehId> {
        self.domain.iter().position(|b| b == name).map(|i| i as BehId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomDef {
    /// `component = behaviour`.
    Behaviour { component: CompId, behaviour: BehId },
    /// An explicit set of configurations.
    Explicit(BTreeSet<Configuration>),
    /// A behaviour predicate on a component outside a partial model; never holds.
    OutOfScope { component: String, behaviour: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub name: String,
    pub def: AtomDef,
}

/// Replacement rules for one intervention target. The table is written over
/// `reads`, a subset of the target's original influence context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    pub component: CompId,
    pub reads: Vec<CompId>,
    pub rule: RuleTable,
    /// Replacement moves for an open component of a partial model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<Vec<Vec<BehId>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub name: String,
    pub targets: Vec<Target>,
    pub cost: Option<f64>,
    pub penalty: Option<f64>,
}

impl Intervention {
    pub fn target_ids(&self) -> BTreeSet<CompId> {
        self.targets.iter().map(|t| t.component).collect()
    }

    pub fn utility(&self) -> Option<f64> {
        Some(-self.cost? - self.penalty?)
    }
}

/// A total assignment of behaviours to components, positional in component
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration(pub Vec<BehId>);

impl Configuration {
    #[inline]
    pub fn get(&self, c: CompId) -> BehId {
        self.0[c]
    }

    pub fn with(&self, c: CompId, b: BehId) -> Configuration {
        let mut v = self.0.clone();
        v[c] = b;
        Configuration(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    name: Option<String>,
    settings: Settings,
    components: Vec<Component>,
    atoms: Vec<Atom>,
    interventions: Vec<Intervention>,
    /// Component names of the global model this one was carved from.
    universe: Vec<String>,
}

impl SystemModel {
    /// Resolve a declaration. Fails with the full violation report when the
    /// declaration is not well-formed.
    pub fn new(spec: &ModelSpec) -> Result<SystemModel, ModelError> {
        let report = validate_model(spec);
        if !report.is_empty() {
            return Err(ModelError::Invalid(report));
        }
        Ok(spec::resolve(spec))
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn with_settings(&self, settings: Settings) -> SystemModel {
        SystemModel {
            settings,
            ..self.clone()
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, c: CompId) -> &Component {
        &self.components[c]
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn interventions(&self) -> &[Intervention] {
        &self.interventions
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn component_id(&self, name: &str) -> Option<CompId> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn atom(&self, name: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.name == name)
    }

    pub fn intervention(&self, name: &str) -> Option<&Intervention> {
        self.interventions.iter().find(|t| t.name == name)
    }

    pub fn require_component(&self, name: &str) -> Result<CompId, ModelError> {
        self.component_id(name)
            .ok_or_else(|| ModelError::UnknownComponent(name.to_string()))
    }

    pub fn require_behaviour(&self, c: CompId, name: &str) -> Result<BehId, ModelError> {
        self.components[c]
            .behaviour(name)
            .ok_or_else(|| ModelError::UnknownBehaviour {
                component: self.components[c].name.clone(),
                behaviour: name.to_string(),
            })
    }

    /// Resolve a component-name set.
    pub fn component_set<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<CompId>, ModelError> {
        names.iter().map(|n| self.require_component(n.as_ref())).collect()
    }

    pub fn component_names(&self, set: &BTreeSet<CompId>) -> Vec<String> {
        set.iter().map(|&c| self.components[c].name.clone()).collect()
    }

    /// Build a configuration from `component = behaviour` pairs covering
    /// every component exactly once.
    pub fn configuration<S: AsRef<str>>(&self, pairs: &[(S, S)]) -> Result<Configuration, ModelError> {
        let mut values: Vec<Option<BehId>> = vec![None; self.components.len()];
        for (c, b) in pairs {
            let cid = self.require_component(c.as_ref())?;
            values[cid] = Some(self.require_behaviour(cid, b.as_ref())?);
        }
        let got = values.iter().filter(|v| v.is_some()).count();
        if got != self.components.len() || pairs.len() != got {
            return Err(ModelError::ConfigArity {
                expected: self.components.len(),
                got: pairs.len(),
            });
        }
        Ok(Configuration(values.into_iter().map(Option::unwrap).collect()))
    }

    pub fn check_config(&self, f: &Configuration) -> Result<(), ModelError> {
        if f.len() != self.components.len() {
            return Err(ModelError::ConfigArity {
                expected: self.components.len(),
                got: f.len(),
            });
        }
        for (c, &b) in f.0.iter().enumerate() {
            if b as usize >= self.components[c].domain.len() {
                return Err(ModelError::ConfigDomain {
                    component: self.components[c].name.clone(),
                    behaviour: b as usize,
                });
            }
        }
        Ok(())
    }

    pub fn behaviour_name(&self, c: CompId, b: BehId) -> &str {
        &self.components[c].domain[b as usize]
    }

    pub fn format_config(&self, f: &Configuration) -> String {
        let body: Vec<String> =
            f.0.iter()
                .enumerate()
                .map(|(c, &b)| format!("{}={}", self.components[c].name, self.behaviour_name(c, b)))
                .collect();
        format!("{{{}}}", body.join(", "))
    }

    /// `|F|`, the product of the domain sizes (saturating).
    pub fn state_count(&self) -> u128 {
        self.components
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.domain.len() as u128))
    }

    /// Fail when `|F|` exceeds the configured cap.
    pub fn check_cap(&self) -> Result<(), ModelError> {
        let size = self.state_count();
        if size > self.settings.max_states as u128 {
            return Err(ModelError::CapExceeded {
                size,
                cap: self.settings.max_states,
            });
        }
        Ok(())
    }

    /// All configurations, in lexicographic order of behaviour indices.
    pub fn configurations(&self) -> ConfigIter<'_> {
        ConfigIter {
            model: self,
            next: Some(Configuration(vec![0; self.components.len()])),
        }
    }

    /// Whether `f` lies in the extension of a named atom.
    pub fn atom_holds(&self, atom: &Atom, f: &Configuration) -> bool {
        match &atom.def {
            AtomDef::Behaviour { component, behaviour } => f.get(*component) == *behaviour,
            AtomDef::Explicit(set) => set.contains(f),
            AtomDef::OutOfScope { .. } => false,
        }
    }

    /// `M_θ`: the same model with θ's targets running their replacement
    /// rules. Fails when θ reads outside a target's influence context.
    pub fn apply_intervention(&self, theta: &Intervention) -> Result<SystemModel, ModelError> {
        let mut out = self.clone();
        for t in &theta.targets {
            let comp = self
                .components
                .get(t.component)
                .ok_or_else(|| ModelError::BadIntervention {
                    name: theta.name.clone(),
                    message: format!("target index {} out of range", t.component),
                })?;
            let slot = &mut out.components[t.component];
            if t.open.is_some() {
                slot.open = t.open.clone();
                slot.context.clear();
                slot.rule = RuleTable::default();
            } else if comp.open.is_some() {
                slot.open = None;
                slot.context = t.reads.clone();
                slot.rule = t.rule.clone();
            } else {
                slot.rule = lift_rule(&theta.name, comp, t)?;
            }
        }
        Ok(out)
    }

    /// Apply a declared intervention by name.
    pub fn apply_named(&self, name: &str) -> Result<SystemModel, ModelError> {
        let theta = self
            .intervention(name)
            .ok_or_else(|| ModelError::UnknownIntervention(name.to_string()))?;
        self.apply_intervention(theta)
    }

    /// The rule tables alone; two models with equal signatures and equal
    /// declarations otherwise are the same variant.
    pub fn rule_signature(&self) -> Vec<RuleTable> {
        self.components.iter().map(|c| c.rule.clone()).collect()
    }

    /// Deterministic JSON encoding used for hashing and equality checks.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("models always serialize")
    }

    /// Convert back to a name-level declaration.
    pub fn to_spec(&self) -> ModelSpec {
        spec::unresolve(self)
    }
}

/// Re-index a replacement table written over `t.reads` onto the target's full
/// influence context.
fn lift_rule(theta: &str, comp: &Component, t: &Target) -> Result<RuleTable, ModelError> {
    let mut positions = Vec::with_capacity(t.reads.len());
    for &r in &t.reads {
        let pos = comp
            .context
            .iter()
            .position(|&d| d == r)
            .ok_or_else(|| ModelError::BadIntervention {
                name: theta.to_string(),
                message: format!(
                    "replacement rule for `{}` reads outside its influence context",
                    comp.name
                ),
            })?;
        positions.push(pos);
    }
    let rows = t
        .rule
        .rows
        .iter()
        .map(|row| {
            let mut context = vec![Pattern::Any; comp.context.len()];
            for (p, &pos) in row.context.iter().zip(&positions) {
                context[pos] = p.clone();
            }
            RuleRow {
                own: row.own.clone(),
                context,
                output: row.output,
            }
        })
        .collect();
    Ok(RuleTable { rows })
}

pub struct ConfigIter<'a> {
    model: &'a SystemModel,
    next: Option<Configuration>,
}

impl Iterator for ConfigIter<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let current = self.next.take()?;
        if self.model.components.iter().any(|c| c.domain.is_empty()) {
            return None;
        }
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if (succ.0[i] as usize) + 1 < self.model.components[i].domain.len() {
                succ.0[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ.0[i] = 0;
        }
        Some(current)
    }
}

impl fmt::Display for TransitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionMode::Async => f.write_str("async"),
            TransitionMode::Sync => f.write_str("sync"),
        }
    }
}
