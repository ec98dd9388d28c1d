use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AtomSpecDef, ModelSpec, Pattern, RowSpec};

/// One well-formedness failure, with a location such as
/// `component Auth, rule 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

fn duplicates<'a>(names: impl Iterator<Item = &'a String>) -> Vec<&'a String> {
    let mut seen = BTreeSet::new();
    let mut dups = Vec::new();
    for n in names {
        if !seen.insert(n) && !dups.contains(&n) {
            dups.push(n);
        }
    }
    dups
}

/// Check every structural invariant of a declaration and report all
/// violations found, not just the first.
pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut r = ValidationReport::default();
    if spec.components.is_empty() {
        r.push("model", "no components declared");
    }
    for d in duplicates(spec.components.iter().map(|c| &c.name)) {
        r.push(format!("component {d}"), "declared more than once");
    }
    let domains: BTreeMap<&str, &[String]> = spec
        .components
        .iter()
        .map(|c| (c.name.as_str(), c.domain.as_slice()))
        .collect();

    for c in &spec.components {
        let loc = format!("component {}", c.name);
        if c.name.is_empty() {
            r.push(&loc, "empty component name");
        }
        if c.domain.is_empty() {
            r.push(&loc, "empty behaviour domain");
        }
        for d in duplicates(c.domain.iter()) {
            r.push(&loc, format!("behaviour `{d}` listed twice in the domain"));
        }
        for d in duplicates(c.context.iter()) {
            r.push(&loc, format!("`{d}` listed twice in the influence context"));
        }
        for d in &c.context {
            if *d == c.name {
                r.push(&loc, "a component may not influence itself through its context");
            } else if !domains.contains_key(d.as_str()) {
                r.push(&loc, format!("influence context names unknown component `{d}`"));
            }
        }
        check_rows(&mut r, &loc, &c.domain, &c.context, &c.rules, &domains);
    }

    for d in duplicates(spec.atoms.iter().map(|a| &a.name)) {
        r.push(format!("atom {d}"), "declared more than once");
    }
    for a in &spec.atoms {
        let loc = format!("atom {}", a.name);
        match &a.def {
            AtomSpecDef::Behaviour { component, behaviour } => match domains.get(component.as_str()) {
                None => r.push(&loc, format!("unknown component `{component}`")),
                Some(dom) if !dom.contains(behaviour) => {
                    r.push(&loc, format!("`{behaviour}` is not a behaviour of `{component}`"))
                }
                _ => {}
            },
            AtomSpecDef::Explicit(sets) => {
                for (i, pairs) in sets.iter().enumerate() {
                    check_assignment(&mut r, &format!("{loc}, configuration {i}"), pairs, spec, &domains);
                }
            }
            AtomSpecDef::OutOfScope { component, .. } => {
                if domains.contains_key(component.as_str()) {
                    r.push(&loc, format!("`{component}` is in scope but marked out of scope"));
                }
            }
        }
    }

    for d in duplicates(spec.interventions.iter().map(|t| &t.name)) {
        r.push(format!("intervention {d}"), "declared more than once");
    }
    for t in &spec.interventions {
        let loc = format!("intervention {}", t.name);
        if t.targets.is_empty() {
            r.push(&loc, "no target components");
        }
        for d in duplicates(t.targets.iter().map(|tg| &tg.component)) {
            r.push(&loc, format!("`{d}` targeted twice"));
        }
        for (what, v) in [("cost", t.cost), ("penalty", t.penalty)] {
            if let Some(x) = v {
                if !x.is_finite() || x < 0.0 {
                    r.push(&loc, format!("{what} must be a finite non-negative number"));
                }
            }
        }
        for tg in &t.targets {
            let Some(comp) = spec.component(&tg.component) else {
                r.push(&loc, format!("unknown target component `{}`", tg.component));
                continue;
            };
            let tloc = format!("{loc}, target {}", tg.component);
            for d in duplicates(tg.reads.iter()) {
                r.push(&tloc, format!("`{d}` read twice"));
            }
            for d in &tg.reads {
                if !comp.context.contains(d) {
                    r.push(
                        &tloc,
                        format!("reads `{d}`, which is outside the original influence context"),
                    );
                }
            }
            let reads: Vec<String> = tg.reads.iter().filter(|d| comp.context.contains(d)).cloned().collect();
            if reads.len() == tg.reads.len() {
                check_rows(&mut r, &tloc, &comp.domain, &reads, &tg.rules, &domains);
            }
        }
    }
    r
}

fn check_rows(
    r: &mut ValidationReport,
    loc: &str,
    domain: &[String],
    context: &[String],
    rows: &[RowSpec],
    domains: &BTreeMap<&str, &[String]>,
) {
    for (i, row) in rows.iter().enumerate() {
        let rloc = format!("{loc}, rule {i}");
        if row.context.len() != context.len() {
            r.push(
                &rloc,
                format!(
                    "has {} context patterns but the context has {}",
                    row.context.len(),
                    context.len()
                ),
            );
        }
        if let Pattern::Is(b) = &row.own {
            if !domain.contains(b) {
                r.push(&rloc, format!("own pattern `{b}` is not in the domain"));
            }
        }
        if !domain.contains(&row.output) {
            r.push(&rloc, format!("output `{}` is not in the domain", row.output));
        }
        for (p, d) in row.context.iter().zip(context) {
            if let (Pattern::Is(b), Some(dom)) = (p, domains.get(d.as_str())) {
                if !dom.contains(b) {
                    r.push(&rloc, format!("pattern `{b}` is not a behaviour of `{d}`"));
                }
            }
        }
    }
}

fn check_assignment(
    r: &mut ValidationReport,
    loc: &str,
    pairs: &[(String, String)],
    spec: &ModelSpec,
    domains: &BTreeMap<&str, &[String]>,
) {
    for d in duplicates(pairs.iter().map(|(c, _)| c)) {
        r.push(loc, format!("`{d}` assigned twice"));
    }
    for (c, b) in pairs {
        match domains.get(c.as_str()) {
            None => r.push(loc, format!("unknown component `{c}`")),
            Some(dom) if !dom.contains(b) => r.push(loc, format!("`{b}` is not a behaviour of `{c}`")),
            _ => {}
        }
    }
    for c in &spec.components {
        if !pairs.iter().any(|(n, _)| *n == c.name) {
            r.push(loc, format!("no behaviour given for `{}`", c.name));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComponentSpec, InterventionSpec, TargetSpec};

    fn comp(name: &str, domain: &[&str], context: &[&str], rules: Vec<RowSpec>) -> ComponentSpec {
        ComponentSpec {
            name: name.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
            context: context.iter().map(|s| s.to_string()).collect(),
            rules,
        }
    }

    #[test]
    fn flags_bad_output_and_self_context() {
        let spec = ModelSpec {
            components: vec![comp(
                "c1",
                &["b1", "b2"],
                &["c1"],
                vec![RowSpec {
                    own: Pattern::Any,
                    context: vec![Pattern::Any],
                    output: "b99".into(),
                }],
            )],
            ..Default::default()
        };
        let r = validate_model(&spec);
        assert!(r.violations.iter().any(|v| v.message.contains("b99")));
        assert!(r.violations.iter().any(|v| v.message.contains("influence itself")));
    }

    #[test]
    fn flags_reads_outside_context() {
        let spec = ModelSpec {
            components: vec![comp("a", &["x"], &[], vec![]), comp("b", &["y"], &[], vec![])],
            interventions: vec![InterventionSpec {
                name: "t".into(),
                targets: vec![TargetSpec {
                    component: "a".into(),
                    reads: vec!["b".into()],
                    rules: vec![],
                }],
                cost: None,
                penalty: None,
            }],
            ..Default::default()
        };
        let r = validate_model(&spec);
        assert!(r.violations.iter().any(|v| v.message.contains("outside the original")));
    }

    #[test]
    fn empty_model_is_rejected() {
        assert!(!validate_model(&ModelSpec::default()).is_empty());
    }
}
