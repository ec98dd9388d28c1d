//! Graphviz output for transition graphs, causal projections and variant
//! graphs.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::bisim::VariantGraph;
use crate::causality::CausalProjection;
use crate::model::{Configuration, ModelError, SystemModel};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn label(model: &SystemModel, f: &Configuration) -> String {
    quote(&model.format_config(f))
}

/// The configurations reachable from `start`, with every transition.
pub fn reachable_dot(model: &SystemModel, start: &Configuration) -> Result<String, ModelError> {
    let mut out = String::from("digraph reachable {\n  node [shape=box];\n");
    let states = model.reachable(start)?;
    for f in &states {
        let style = if f == start { ", style=bold" } else { "" };
        let _ = writeln!(out, "  n{} [label={}{}];", model.encode(f), label(model, f), style);
    }
    for f in &states {
        for g in model.successors(f)? {
            let _ = writeln!(out, "  n{} -> n{};", model.encode(f), model.encode(&g));
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Projection edges solid, chain links dashed, and atoms listed under the
/// configurations that satisfy them.
pub fn projection_dot(model: &SystemModel, p: &CausalProjection) -> String {
    let mut out = String::from("digraph projection {\n  node [shape=box];\n");
    for f in &p.configurations {
        let atoms: BTreeSet<&str> = p
            .valuation
            .iter()
            .filter(|(_, ext)| ext.contains(f))
            .map(|(a, _)| a.as_str())
            .collect();
        let mut text = model.format_config(f);
        if !atoms.is_empty() {
            let _ = write!(text, "\n{}", atoms.into_iter().collect::<Vec<_>>().join(", "));
        }
        let _ = writeln!(out, "  n{} [label={}];", model.encode(f), quote(&text));
    }
    for (f, g) in &p.edges {
        let _ = writeln!(out, "  n{} -> n{};", model.encode(f), model.encode(g));
    }
    for (f, g) in &p.links {
        let _ = writeln!(
            out,
            "  n{} -> n{} [style=dashed, label=\"link\"];",
            model.encode(f),
            model.encode(g)
        );
    }
    out.push_str("}\n");
    out
}

/// Variants labelled by which components run replaced rules.
pub fn variant_dot(model: &SystemModel, g: &VariantGraph) -> String {
    let mut out = String::from("digraph variants {\n");
    for (i, v) in g.variants.iter().enumerate() {
        let changed: Vec<&str> = model
            .components()
            .iter()
            .zip(v.components())
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.name.as_str())
            .collect();
        let text = if changed.is_empty() {
            "original".to_string()
        } else {
            format!("replaced: {}", changed.join(", "))
        };
        let _ = writeln!(out, "  v{i} [label={}];", quote(&text));
    }
    for (a, t, b) in &g.edges {
        let _ = writeln!(out, "  v{a} -> v{b} [label={}];", quote(t));
    }
    out.push_str("}\n");
    out
}
