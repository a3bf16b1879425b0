//! Control graphs: the expected chronology of labelled events.

use serde::{Deserialize, Serialize};

use crate::guard::{Counters, GuardExpr};
use crate::model::Location;

use super::{Event, EventKind};

/// Names an event by the location a thing enters (via a flow or a trigger).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPattern {
    pub label: String,
    pub at: Location,
}

impl EventPattern {
    pub fn matches(&self, event: &Event) -> bool {
        event.kind != EventKind::Guard && event.entered() == Some(&self.at)
    }
}

/// `to` may only occur after an occurrence of `from` whose counters satisfied
/// the guard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precedence {
    pub from: String,
    pub to: String,
    pub guard: Option<GuardExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControlGraph {
    pub nodes: Vec<EventPattern>,
    pub edges: Vec<Precedence>,
}

impl ControlGraph {
    pub fn node(&self, label: &str) -> Option<&EventPattern> {
        self.nodes.iter().find(|n| n.label == label)
    }

    /// Label of the first node matching the event.
    pub fn label_of(&self, event: &Event) -> Option<&str> {
        self.nodes.iter().find(|n| n.matches(event)).map(|n| n.label.as_str())
    }

    /// Copies the trace, replacing labels of matching events with node labels.
    pub fn label_trace(&self, trace: &[Event]) -> Vec<Event> {
        trace
            .iter()
            .map(|e| {
                let mut e = e.clone();
                if let Some(l) = self.label_of(&e) {
                    e.label = l.to_owned();
                }
                e
            })
            .collect()
    }

    /// Node labels of the trace in order, skipping unmatched events.
    pub fn labels(&self, trace: &[Event]) -> Vec<String> {
        trace.iter().filter_map(|e| self.label_of(e).map(str::to_owned)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConformanceReport {
    Ok,
    Violation {
        /// Position of the offending event in the trace.
        index: usize,
        event: String,
        node: String,
        /// Predecessor nodes that had no satisfying earlier occurrence.
        expected: Vec<String>,
    },
}

impl ConformanceReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, ConformanceReport::Ok)
    }
}

/// Checks every precedence edge against the trace and reports the first
/// event whose required predecessors have not occurred.
pub fn conforms(trace: &[Event], graph: &ControlGraph) -> ConformanceReport {
    // counters snapshots of past occurrences, per node
    let mut seen: Vec<Vec<&Counters>> = vec![Vec::new(); graph.nodes.len()];
    for (index, event) in trace.iter().enumerate() {
        let matched: Vec<usize> =
            graph.nodes.iter().enumerate().filter(|(_, n)| n.matches(event)).map(|(i, _)| i).collect();
        for &ni in &matched {
            let node = &graph.nodes[ni];
            let mut expected = Vec::new();
            for edge in graph.edges.iter().filter(|e| e.to == node.label) {
                let ok =
                    graph.nodes.iter().position(|n| n.label == edge.from).is_some_and(|pi| {
                        seen[pi].iter().any(|c| edge.guard.as_ref().is_none_or(|g| g.eval(c)))
                    });
                if !ok && !expected.contains(&edge.from) {
                    expected.push(edge.from.clone());
                }
            }
            if !expected.is_empty() {
                return ConformanceReport::Violation {
                    index,
                    event: event.id.clone(),
                    node: node.label.clone(),
                    expected,
                };
            }
        }
        for ni in matched {
            seen[ni].push(&event.counters);
        }
    }
    ConformanceReport::Ok
}
