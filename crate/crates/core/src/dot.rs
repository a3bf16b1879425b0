//! Graphviz rendering of FM diagrams.
//!
//! Each sphere becomes a `cluster_` subgraph (nested like the spheres), each
//! machine stage becomes one node, flows are solid edges and triggers dashed
//! ones. Output depends only on the model, so it is byte-stable.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ids::SphereId;
use crate::model::{Location, Model};
use crate::validate::{validate, ValidationReport};

#[derive(Debug, Error)]
pub enum DotError {
    #[error("model has {} validation violation(s)", .0.len())]
    InvalidModel(ValidationReport),
}

/// Quotes a DOT identifier or label.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_id(loc: &Location) -> String {
    quote(&loc.to_string())
}

pub fn to_dot(model: &Model) -> Result<String, DotError> {
    let report = validate(model);
    if !report.is_empty() {
        return Err(DotError::InvalidModel(report));
    }
    let mut out = String::new();
    out.push_str("digraph fm {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, fontsize=10];\n");

    for root in model.spheres().iter().filter(|s| s.parent.is_none()) {
        write_sphere(model, &root.id, 1, &mut out);
    }

    for arc in model.flow_arcs() {
        let _ = writeln!(out, "  {} -> {};", node_id(&arc.src), node_id(&arc.dst));
    }
    for arc in model.trigger_arcs() {
        match &arc.guard {
            Some(g) => {
                let _ = writeln!(
                    out,
                    "  {} -> {} [style=dashed, label={}];",
                    node_id(&arc.src),
                    node_id(&arc.dst),
                    quote(&g.to_string())
                );
            }
            None => {
                let _ = writeln!(out, "  {} -> {} [style=dashed];", node_id(&arc.src), node_id(&arc.dst));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

fn write_sphere(model: &Model, id: &SphereId, depth: usize, out: &mut String) {
    let sphere = model.sphere(id).expect("validated model");
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}subgraph {} {{", quote(&format!("cluster_{}", sphere.id)));
    let _ = writeln!(out, "{pad}  label={};", quote(&format!("{} ({})", sphere.name, sphere.kind.as_str())));
    for m in model.machines().iter().filter(|m| &m.sphere == id) {
        for stage in &m.stages {
            let loc = Location::new(m.id.clone(), *stage);
            let _ = writeln!(
                out,
                "{pad}  {} [label={}];",
                node_id(&loc),
                quote(&format!("{}\n{}", m.thing_type, stage))
            );
        }
    }
    for child in model.spheres().iter().filter(|s| s.parent.as_ref() == Some(id)) {
        write_sphere(model, &child.id, depth + 1, out);
    }
    let _ = writeln!(out, "{pad}}}");
}
