//! Scenario (`.fms`) and control-graph syntax. Both resolve locations against
//! a model.
//!
//! ```text
//! counter <name> [= <int>] [counts <sphere>.<thing>.<Stage>];
//! place <sphere>.<thing>.<Stage> [stored] [{ <key> = <value>, ... }];
//! node <label> at <sphere>.<thing>.<Stage>;
//! edge <label> -> <label> [when <guard>];
//! ```
//!
//! A control-graph file holds only `node` and `edge` statements.

use std::collections::BTreeSet;

use crate::diagnostic::{Diagnostic, SourceSpan};
use crate::model::Model;
use crate::sim::{ControlGraph, CounterDef, EventPattern, Placement, Precedence, Scenario};

use super::cursor::Cursor;
use super::lexer::Tok;

pub fn parse_scenario(text: &str, model: &Model) -> Result<Scenario, Vec<Diagnostic>> {
    parse_scenario_named(text, "<input>", model)
}

pub fn parse_scenario_named(text: &str, file: &str, model: &Model) -> Result<Scenario, Vec<Diagnostic>> {
    parse(text, file, model, true)
}

pub fn parse_control_graph(text: &str, model: &Model) -> Result<ControlGraph, Vec<Diagnostic>> {
    parse(text, "<input>", model, false).map(|s| s.control.unwrap_or_default())
}

fn parse(text: &str, file: &str, model: &Model, full: bool) -> Result<Scenario, Vec<Diagnostic>> {
    let mut cur = Cursor::new(text, file);
    let mut sc = Scenario::default();
    let mut graph = ControlGraph::default();
    let mut edge_spans: Vec<(SourceSpan, SourceSpan)> = Vec::new();

    while !cur.at_eof() {
        let t = cur.peek().clone();
        let kw = match &t.tok {
            Tok::Ident(k) => k.clone(),
            _ => {
                cur.unexpected("a statement");
                cur.bump();
                cur.recover();
                continue;
            }
        };
        match kw.as_str() {
            "counter" if full => counter(&mut cur, model, &mut sc),
            "place" if full => place(&mut cur, model, &mut sc),
            "node" => node(&mut cur, model, &mut graph),
            "edge" => edge(&mut cur, &mut graph, &mut edge_spans),
            other => {
                let span = cur.span_of(&t);
                let expected = if full { "counter, place, node or edge" } else { "node or edge" };
                cur.error("UNKNOWN_KEYWORD", span, format!("unknown keyword `{other}`; expected {expected}"));
                cur.bump();
                cur.recover();
            }
        }
    }

    let labels: BTreeSet<&str> = graph.nodes.iter().map(|n| n.label.as_str()).collect();
    let mut missing = Vec::new();
    for (e, (from_span, to_span)) in graph.edges.iter().zip(&edge_spans) {
        for (label, span) in [(&e.from, from_span), (&e.to, to_span)] {
            if !labels.contains(label.as_str()) {
                missing.push((span.clone(), label.clone()));
            }
        }
    }
    for (span, label) in missing {
        cur.error("UNRESOLVED_REFERENCE", span, format!("no node labelled `{label}`"));
    }

    if !graph.nodes.is_empty() || !graph.edges.is_empty() {
        sc.control = Some(graph);
    }
    if cur.has_errors() {
        Err(cur.finish())
    } else {
        Ok(sc)
    }
}

fn counter(cur: &mut Cursor, model: &Model, sc: &mut Scenario) {
    cur.bump();
    let Some((name, span)) = cur.expect_ident("a counter name") else {
        return cur.recover();
    };
    let mut initial = 0;
    if cur.eat_sym("=") {
        match cur.peek().tok {
            Tok::Int(n) => {
                cur.bump();
                initial = n;
            }
            _ => {
                cur.unexpected("an integer");
                return cur.recover();
            }
        }
    }
    let mut counts = None;
    if cur.eat_kw("counts") {
        let Some(r) = cur.parse_ref() else {
            return cur.recover();
        };
        counts = cur.resolve_ref(model, &r);
        if counts.is_none() {
            return cur.recover();
        }
    }
    if !cur.expect_sym(";") {
        return cur.recover();
    }
    if sc.counters.iter().any(|c| c.name == name) {
        cur.error("DUPLICATE_ID", span, format!("counter `{name}` declared twice"));
        return;
    }
    sc.counters.push(CounterDef { name, initial, counts });
}

fn place(cur: &mut Cursor, model: &Model, sc: &mut Scenario) {
    cur.bump();
    let Some(r) = cur.parse_ref() else {
        return cur.recover();
    };
    let loc = cur.resolve_ref(model, &r);
    let stored = cur.eat_kw("stored");
    let mut p = loc.map(Placement::new);
    if cur.eat_sym("{") {
        while !cur.at_sym("}") && !cur.at_eof() {
            let Some((key, _)) = cur.expect_name("a payload key") else {
                return cur.recover();
            };
            if !cur.expect_sym("=") {
                return cur.recover();
            }
            let t = cur.peek().clone();
            let value = match &t.tok {
                Tok::Str(s) | Tok::Ident(s) => s.clone(),
                Tok::Int(n) => n.to_string(),
                _ => {
                    cur.unexpected("a payload value");
                    return cur.recover();
                }
            };
            cur.bump();
            if let Some(p) = p.as_mut() {
                p.payload.insert(key, value);
            }
            if !cur.eat_sym(",") {
                break;
            }
        }
        if !cur.expect_sym("}") {
            return cur.recover();
        }
    }
    if !cur.expect_sym(";") {
        return cur.recover();
    }
    if let Some(mut p) = p {
        p.stored = stored;
        sc.placements.push(p);
    }
}

fn node(cur: &mut Cursor, model: &Model, graph: &mut ControlGraph) {
    cur.bump();
    let Some((label, span)) = cur.expect_name("a node label") else {
        return cur.recover();
    };
    if !cur.eat_kw("at") {
        cur.unexpected("`at`");
        return cur.recover();
    }
    let Some(r) = cur.parse_ref() else {
        return cur.recover();
    };
    let at = cur.resolve_ref(model, &r);
    if !cur.expect_sym(";") {
        return cur.recover();
    }
    if graph.node(&label).is_some() {
        cur.error("DUPLICATE_ID", span, format!("node `{label}` declared twice"));
        return;
    }
    if let Some(at) = at {
        graph.nodes.push(EventPattern { label, at });
    }
}

fn edge(cur: &mut Cursor, graph: &mut ControlGraph, spans: &mut Vec<(SourceSpan, SourceSpan)>) {
    cur.bump();
    let Some((from, from_span)) = cur.expect_name("a node label") else {
        return cur.recover();
    };
    if !cur.expect_sym("->") {
        return cur.recover();
    }
    let Some((to, to_span)) = cur.expect_name("a node label") else {
        return cur.recover();
    };
    let mut guard = None;
    if cur.eat_kw("when") {
        match cur.parse_guard() {
            Some(g) => guard = Some(g),
            None => return cur.recover(),
        }
    }
    if !cur.expect_sym(";") {
        return cur.recover();
    }
    graph.edges.push(Precedence { from, to, guard });
    spans.push((from_span, to_span));
}
