//! `.fm` model syntax.
//!
//! ```text
//! thing <id> [name="<text>"];
//! sphere <id> [in <parent>] [kind=<kind>] [name="<text>"] { <machine | sphere>* }
//! sphere <id> [in <parent>] [kind=<kind>] [name="<text>"];
//! machine <thing> [as <id>] { stages: <Stage>, ...; }          (inside a sphere)
//! machine <sphere>.<thing> [as <id>] { stages: <Stage>, ...; } (top level)
//! flow [<id>:] <sphere>.<thing>.<Stage> -> <sphere>.<thing>.<Stage>;
//! trigger [<id>:] <sphere>.<thing>.<Stage> -> <sphere>.<thing>.<Stage> [when <guard>];
//! ```
//!
//! Thing types used by a machine are declared implicitly. Machine ids default
//! to `<sphere>.<thing>`, flow ids to `f<n>` and trigger ids to `t<n>`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::diagnostic::{Diagnostic, SourceSpan};
use crate::guard::GuardExpr;
use crate::ids::{MachineId, SphereId};
use crate::model::{
    assemble, AssemblyIssue, Declaration, FlowArc, Location, Machine, Model, Sphere, SphereKind, Stage,
    ThingType, TriggerArc,
};

use super::cursor::{Cursor, RawRef};
use super::lexer::{is_ident, Tok};

struct RawMachine {
    sphere: String,
    sphere_span: Option<SourceSpan>,
    thing: String,
    id: Option<String>,
    stages: BTreeSet<Stage>,
    span: SourceSpan,
}

struct RawArc {
    id: Option<String>,
    src: RawRef,
    dst: RawRef,
    guard: Option<GuardExpr>,
    span: SourceSpan,
}

#[derive(Default)]
struct RawModel {
    // each entry carries the span to blame for duplicate ids
    decls: Vec<(Declaration, SourceSpan)>,
    parents: Vec<(String, SourceSpan)>,
    machines: Vec<RawMachine>,
    flows: Vec<RawArc>,
    triggers: Vec<RawArc>,
    things: Vec<String>,
}

pub fn parse_model(text: &str) -> Result<Model, Vec<Diagnostic>> {
    parse_model_named(text, "<input>")
}

pub fn parse_model_named(text: &str, file: &str) -> Result<Model, Vec<Diagnostic>> {
    let mut cur = Cursor::new(text, file);
    let mut raw = RawModel::default();

    while !cur.at_eof() {
        let before = cur.peek().clone();
        match &before.tok {
            Tok::Ident(kw) => match kw.as_str() {
                "thing" => parse_thing(&mut cur, &mut raw),
                "sphere" => parse_sphere(&mut cur, &mut raw, None),
                "machine" => parse_machine(&mut cur, &mut raw, None),
                "flow" => parse_arc(&mut cur, &mut raw, false),
                "trigger" => parse_arc(&mut cur, &mut raw, true),
                other => {
                    let span = cur.span_of(&before);
                    cur.error(
                        "UNKNOWN_KEYWORD",
                        span,
                        format!(
                            "unknown keyword `{other}`; expected thing, sphere, machine, flow or trigger"
                        ),
                    );
                    cur.bump();
                    cur.recover();
                }
            },
            _ => {
                cur.unexpected("a declaration");
                cur.bump();
                cur.recover();
            }
        }
        if cur.peek() == &before && !cur.at_eof() {
            cur.bump();
        }
    }

    let model = resolve(&mut cur, raw);
    if cur.has_errors() {
        Err(cur.finish())
    } else {
        Ok(model.expect("no errors implies a model"))
    }
}

fn parse_thing(cur: &mut Cursor, raw: &mut RawModel) {
    let start = cur.bump();
    let Some((id, _)) = cur.expect_ident("a thing type name") else {
        return cur.recover();
    };
    let mut name = id.clone();
    if cur.eat_kw("name") {
        if !cur.expect_sym("=") {
            return cur.recover();
        }
        match cur.expect_str("a quoted name") {
            Some(n) => name = n,
            None => return cur.recover(),
        }
    }
    if !cur.expect_sym(";") {
        return cur.recover();
    }
    let span = cur.span_from(&start);
    raw.things.push(id.clone());
    raw.decls.push((Declaration::ThingType(ThingType { id: id.into(), name }), span));
}

fn parse_sphere(cur: &mut Cursor, raw: &mut RawModel, enclosing: Option<&str>) {
    let start = cur.bump();
    let Some((id, id_span)) = cur.expect_ident("a sphere name") else {
        return cur.recover();
    };
    let mut parent = enclosing.map(|p| (p.to_owned(), id_span.clone()));
    let mut kind = SphereKind::default();
    let mut name = id.clone();
    loop {
        if cur.at_kw("in") {
            let kw = cur.bump();
            let Some((p, pspan)) = cur.expect_ident("a parent sphere name") else {
                return cur.recover();
            };
            if enclosing.is_some() {
                let span = cur.span_of(&kw);
                cur.error(
                    "UNEXPECTED_TOKEN",
                    span,
                    "nested spheres take their parent from the enclosing block",
                );
            }
            parent = Some((p, pspan));
        } else if cur.eat_kw("kind") {
            if !cur.expect_sym("=") {
                return cur.recover();
            }
            let Some((k, kspan)) = cur.expect_ident("a sphere kind") else {
                return cur.recover();
            };
            match k.parse() {
                Ok(k) => kind = k,
                Err(msg) => cur.error("UNKNOWN_KIND", kspan, msg),
            }
        } else if cur.eat_kw("name") {
            if !cur.expect_sym("=") {
                return cur.recover();
            }
            match cur.expect_str("a quoted name") {
                Some(n) => name = n,
                None => return cur.recover(),
            }
        } else {
            break;
        }
    }
    let header_span = cur.span_from(&start);
    if let Some((p, pspan)) = &parent {
        raw.parents.push((p.clone(), pspan.clone()));
    }
    raw.decls.push((
        Declaration::Sphere(Sphere {
            id: id.as_str().into(),
            name,
            parent: parent.map(|(p, _)| SphereId::from(p)),
            kind,
        }),
        header_span,
    ));

    if cur.eat_sym(";") {
        return;
    }
    if !cur.expect_sym("{") {
        return cur.recover();
    }
    loop {
        if cur.eat_sym("}") {
            return;
        }
        if cur.at_eof() {
            cur.unexpected("`}`");
            return;
        }
        let before = cur.peek().clone();
        if cur.at_kw("machine") {
            parse_machine(cur, raw, Some(&id));
        } else if cur.at_kw("sphere") {
            parse_sphere(cur, raw, Some(&id));
        } else {
            match &before.tok {
                Tok::Ident(kw) => {
                    let span = cur.span_of(&before);
                    cur.error(
                        "UNKNOWN_KEYWORD",
                        span,
                        format!("unknown keyword `{kw}` in sphere body; expected machine or sphere"),
                    );
                }
                _ => cur.unexpected("`machine`, `sphere` or `}`"),
            }
            cur.bump();
            cur.recover();
        }
        if cur.peek() == &before && !cur.at_eof() {
            cur.bump();
        }
    }
}

fn parse_machine(cur: &mut Cursor, raw: &mut RawModel, enclosing: Option<&str>) {
    let start = cur.bump();
    let (sphere, sphere_span, thing) = match enclosing {
        Some(s) => {
            let Some((thing, _)) = cur.expect_ident("a thing type") else {
                return cur.recover();
            };
            (s.to_owned(), None, thing)
        }
        None => {
            let Some((sphere, sspan)) = cur.expect_ident("a sphere name") else {
                return cur.recover();
            };
            if !cur.expect_sym(".") {
                return cur.recover();
            }
            let Some((thing, _)) = cur.expect_ident("a thing type") else {
                return cur.recover();
            };
            (sphere, Some(sspan), thing)
        }
    };
    let mut id = None;
    if cur.eat_kw("as") {
        match cur.expect_name("a machine id") {
            Some((n, _)) => id = Some(n),
            None => return cur.recover(),
        }
    }
    let span = cur.span_from(&start);
    if !cur.expect_sym("{") {
        return cur.recover();
    }
    let mut stages = BTreeSet::new();
    if cur.eat_kw("stages") {
        if !cur.expect_sym(":") {
            return cur.recover();
        }
        loop {
            if let Some(s) = cur.parse_stage() {
                stages.insert(s);
            } else if !matches!(cur.peek().tok, Tok::Sym(",") | Tok::Sym(";")) {
                return cur.recover();
            }
            if !cur.eat_sym(",") {
                break;
            }
        }
        if !cur.expect_sym(";") {
            return cur.recover();
        }
    }
    if !cur.expect_sym("}") {
        return cur.recover();
    }
    raw.machines.push(RawMachine { sphere, sphere_span, thing, id, stages, span });
}

fn parse_arc(cur: &mut Cursor, raw: &mut RawModel, trigger: bool) {
    let start = cur.bump();
    let mut id = None;
    let named =
        matches!(cur.peek().tok, Tok::Ident(_) | Tok::Str(_)) && matches!(cur.peek_at(1).tok, Tok::Sym(":"));
    if named {
        id = cur.expect_name("an arc id").map(|(n, _)| n);
        cur.bump();
    }
    let Some(src) = cur.parse_ref() else {
        return cur.recover();
    };
    if !cur.expect_sym("->") {
        return cur.recover();
    }
    let Some(dst) = cur.parse_ref() else {
        return cur.recover();
    };
    let mut guard = None;
    if trigger && cur.eat_kw("when") {
        match cur.parse_guard() {
            Some(g) => guard = Some(g),
            None => return cur.recover(),
        }
    }
    if !cur.expect_sym(";") {
        return cur.recover();
    }
    let arc = RawArc { id, src, dst, guard, span: cur.span_from(&start) };
    if trigger {
        raw.triggers.push(arc);
    } else {
        raw.flows.push(arc);
    }
}

fn default_machine_id(sphere: &str, thing: &str) -> String {
    format!("{sphere}.{thing}")
}

/// Turns the parsed statements into declarations and assembles them.
fn resolve(cur: &mut Cursor, raw: RawModel) -> Option<Model> {
    let RawModel { mut decls, parents, machines, flows, triggers, mut things } = raw;

    let sphere_ids: Vec<String> = decls
        .iter()
        .filter_map(|(d, _)| match d {
            Declaration::Sphere(s) => Some(s.id.to_string()),
            _ => None,
        })
        .collect();
    for (p, span) in &parents {
        if !sphere_ids.contains(p) {
            cur.error("UNRESOLVED_REFERENCE", span.clone(), format!("unknown sphere `{p}`"));
        }
    }

    let mut by_pair: HashMap<(String, String), (MachineId, BTreeSet<Stage>)> = HashMap::new();
    for m in machines {
        if let Some(span) = &m.sphere_span {
            if !sphere_ids.contains(&m.sphere) {
                cur.error("UNRESOLVED_REFERENCE", span.clone(), format!("unknown sphere `{}`", m.sphere));
            }
        }
        if !things.contains(&m.thing) {
            things.push(m.thing.clone());
            decls.push((Declaration::thing(&m.thing), m.span.clone()));
        }
        let id = m.id.clone().unwrap_or_else(|| default_machine_id(&m.sphere, &m.thing));
        by_pair
            .entry((m.sphere.clone(), m.thing.clone()))
            .or_insert_with(|| (id.as_str().into(), m.stages.clone()));
        decls.push((
            Declaration::Machine(Machine {
                id: id.into(),
                sphere: m.sphere.into(),
                thing_type: m.thing.into(),
                stages: m.stages,
            }),
            m.span,
        ));
    }

    let lookup = |r: &RawRef, cur: &mut Cursor| -> Option<Location> {
        let stage = r.stage?;
        match by_pair.get(&(r.sphere.clone(), r.thing.clone())) {
            Some((id, stages)) if stages.contains(&stage) => Some(Location::new(id.clone(), stage)),
            Some((id, _)) => {
                cur.error(
                    "UNRESOLVED_REFERENCE",
                    r.span.clone(),
                    format!("machine `{id}` has no {stage} stage"),
                );
                None
            }
            None => {
                cur.error(
                    "UNRESOLVED_REFERENCE",
                    r.span.clone(),
                    format!("no `{}` machine in sphere `{}`", r.thing, r.sphere),
                );
                None
            }
        }
    };

    for (n, a) in flows.into_iter().enumerate() {
        let (src, dst) = (lookup(&a.src, cur), lookup(&a.dst, cur));
        if let (Some(src), Some(dst)) = (src, dst) {
            let id = a.id.unwrap_or_else(|| format!("f{}", n + 1));
            decls.push((Declaration::Flow(FlowArc { id: id.into(), src, dst }), a.span));
        }
    }
    for (n, a) in triggers.into_iter().enumerate() {
        let (src, dst) = (lookup(&a.src, cur), lookup(&a.dst, cur));
        if let (Some(src), Some(dst)) = (src, dst) {
            let id = a.id.unwrap_or_else(|| format!("t{}", n + 1));
            decls
                .push((Declaration::Trigger(TriggerArc { id: id.into(), src, dst, guard: a.guard }), a.span));
        }
    }

    // declaration order inside the model: things, spheres, machines, flows, triggers
    decls.sort_by_key(|(d, _)| match d {
        Declaration::ThingType(_) => 0,
        Declaration::Sphere(_) => 1,
        Declaration::Machine(_) => 2,
        Declaration::Flow(_) => 3,
        Declaration::Trigger(_) => 4,
    });
    let spans: Vec<SourceSpan> = decls.iter().map(|(_, s)| s.clone()).collect();
    match assemble(decls.into_iter().map(|(d, _)| d)) {
        Ok(m) => Some(m),
        Err(e) => {
            for issue in e.issues {
                let span = spans[issue.index()].clone();
                let code = match issue {
                    AssemblyIssue::DuplicateId { .. } => "DUPLICATE_ID",
                    AssemblyIssue::DanglingReference { .. } => "UNRESOLVED_REFERENCE",
                };
                cur.error(code, span, issue.to_string());
            }
            None
        }
    }
}

fn fmt_name(s: &str) -> String {
    if is_ident(s) {
        s.to_owned()
    } else {
        fmt_str(s)
    }
}

fn fmt_str(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn fmt_ref(model: &Model, loc: &Location) -> String {
    let m = model.machine(&loc.machine).expect("valid model");
    format!("{}.{}.{}", m.sphere, m.thing_type, loc.stage)
}

fn sphere_header(s: &Sphere, with_parent: bool) -> String {
    let mut out = format!("sphere {}", s.id);
    if with_parent {
        if let Some(p) = &s.parent {
            let _ = write!(out, " in {p}");
        }
    }
    if s.kind != SphereKind::Abstract {
        let _ = write!(out, " kind={}", s.kind.as_str());
    }
    if s.name != s.id.as_str() {
        let _ = write!(out, " name={}", fmt_str(&s.name));
    }
    out
}

fn machine_line(m: &Machine, qualified: bool) -> String {
    let mut out = String::from("machine ");
    if qualified {
        let _ = write!(out, "{}.", m.sphere);
    }
    out.push_str(m.thing_type.as_str());
    if m.id.as_str() != default_machine_id(m.sphere.as_str(), m.thing_type.as_str()) {
        let _ = write!(out, " as {}", fmt_name(m.id.as_str()));
    }
    let stages: Vec<&str> = m.stages.iter().map(|s| s.as_str()).collect();
    if stages.is_empty() {
        out.push_str(" { }");
    } else {
        let _ = write!(out, " {{ stages: {}; }}", stages.join(", "));
    }
    out
}

/// Sphere order produced by nested blocks: roots in model order, each followed
/// by its children depth-first.
fn nested_sphere_order(model: &Model) -> Vec<&SphereId> {
    fn visit<'a>(model: &'a Model, id: &'a SphereId, out: &mut Vec<&'a SphereId>) {
        out.push(id);
        for c in model.spheres().iter().filter(|s| s.parent.as_ref() == Some(id)) {
            visit(model, &c.id, out);
        }
    }
    let mut out = Vec::new();
    for root in model.spheres().iter().filter(|s| s.parent.is_none()) {
        visit(model, &root.id, &mut out);
    }
    out
}

/// Nested blocks reproduce the model's declaration order only when spheres are
/// listed depth-first and machines grouped by sphere in that order.
fn nesting_preserves_order(model: &Model) -> bool {
    let order = nested_sphere_order(model);
    let declared: Vec<&SphereId> = model.spheres().iter().map(|s| &s.id).collect();
    if order != declared {
        return false;
    }
    let grouped: Vec<&MachineId> = order
        .iter()
        .flat_map(|sid| model.machines().iter().filter(move |m| &m.sphere == *sid))
        .map(|m| &m.id)
        .collect();
    let machines: Vec<&MachineId> = model.machines().iter().map(|m| &m.id).collect();
    grouped == machines
}

fn write_nested(model: &Model, id: &SphereId, depth: usize, out: &mut String) {
    let s = model.sphere(id).expect("valid model");
    let pad = "    ".repeat(depth);
    let machines: Vec<&Machine> = model.machines().iter().filter(|m| &m.sphere == id).collect();
    let children: Vec<&Sphere> = model.spheres().iter().filter(|c| c.parent.as_ref() == Some(id)).collect();
    let header = sphere_header(s, false);
    if machines.is_empty() && children.is_empty() {
        let _ = writeln!(out, "{pad}{header} {{}}");
        return;
    }
    let _ = writeln!(out, "{pad}{header} {{");
    for m in machines {
        let _ = writeln!(out, "{pad}    {}", machine_line(m, false));
    }
    for c in children {
        write_nested(model, &c.id, depth + 1, out);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Renders a model in `.fm` syntax. Parsing the output yields an equal model.
pub fn format_model(model: &Model) -> String {
    let mut sections: Vec<String> = Vec::new();

    if !model.thing_types().is_empty() {
        let mut s = String::new();
        for t in model.thing_types() {
            if t.name == t.id.as_str() {
                let _ = writeln!(s, "thing {};", t.id);
            } else {
                let _ = writeln!(s, "thing {} name={};", t.id, fmt_str(&t.name));
            }
        }
        sections.push(s);
    }

    if nesting_preserves_order(model) {
        for root in model.spheres().iter().filter(|s| s.parent.is_none()) {
            let mut s = String::new();
            write_nested(model, &root.id, 0, &mut s);
            sections.push(s);
        }
    } else {
        if !model.spheres().is_empty() {
            let mut s = String::new();
            for sp in model.spheres() {
                let _ = writeln!(s, "{};", sphere_header(sp, true));
            }
            sections.push(s);
        }
        if !model.machines().is_empty() {
            let mut s = String::new();
            for m in model.machines() {
                let _ = writeln!(s, "{}", machine_line(m, true));
            }
            sections.push(s);
        }
    }

    if !model.flow_arcs().is_empty() {
        let mut s = String::new();
        for (n, a) in model.flow_arcs().iter().enumerate() {
            let label = if a.id.as_str() == format!("f{}", n + 1) {
                String::new()
            } else {
                format!("{}: ", fmt_name(a.id.as_str()))
            };
            let _ = writeln!(s, "flow {label}{} -> {};", fmt_ref(model, &a.src), fmt_ref(model, &a.dst));
        }
        sections.push(s);
    }

    if !model.trigger_arcs().is_empty() {
        let mut s = String::new();
        for (n, a) in model.trigger_arcs().iter().enumerate() {
            let label = if a.id.as_str() == format!("t{}", n + 1) {
                String::new()
            } else {
                format!("{}: ", fmt_name(a.id.as_str()))
            };
            let guard = a.guard.as_ref().map(|g| format!(" when {g}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "trigger {label}{} -> {}{guard};",
                fmt_ref(model, &a.src),
                fmt_ref(model, &a.dst)
            );
        }
        sections.push(s);
    }

    sections.join("\n")
}
