//! Fixture loading, random model/corpus generators and brute-force oracles
//! shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use fm_core::guard::{CmpOp, GuardExpr};
use fm_core::model::{assemble, Declaration, Machine, Model, Sphere, SphereKind, Stage, ThingType};
use fm_core::pii::{Assertion, Registry, Term, Truth};
use fm_core::validate::{flow_allowed, DEFAULT_FLOW_ADJACENCY};
use fm_core::{dsl, sim};
use proptest::prelude::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn model(name: &str) -> Model {
    dsl::parse_model_named(&fixture(name), name).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn registry() -> Registry {
    Registry::from_json(&fixture("registry.json")).unwrap()
}

pub fn scenario(model: &Model, name: &str) -> sim::Scenario {
    dsl::parse_scenario_named(&fixture(name), name, model).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn run_fixture(model: &Model, scenario_name: &str) -> sim::Trace {
    let sc = scenario(model, scenario_name);
    sim::run(model, sc.init_state(model).unwrap(), 1000)
}

/// Healthcare scenario in which the first `k` login attempts fail.
pub fn healthcare_scenario(model: &Model, k: i64) -> sim::Scenario {
    let text =
        fixture("healthcare_fail3.fms").replace("wrong_attempts = 3", &format!("wrong_attempts = {k}"));
    dsl::parse_scenario(&text, model).unwrap()
}

pub const MODEL_FIXTURES: &[&str] =
    &["electricity.fm", "healthcare.fm", "identifier.fm", "beach_house.fm", "consent.fm"];

/// (model, scenario) pairs shipped as fixtures.
pub const SCENARIO_FIXTURES: &[(&str, &str)] = &[
    ("healthcare.fm", "healthcare_success.fms"),
    ("healthcare.fm", "healthcare_fail3.fms"),
    ("healthcare.fm", "healthcare_block.fms"),
    ("beach_house.fm", "beach_house.fms"),
    ("consent.fm", "consent_self.fms"),
    ("consent.fm", "consent_insurer.fms"),
];

// ---------------------------------------------------------------------------
// random models

/// Raw choices from which a valid model is built. Indices are reduced modulo
/// the number of available targets, so every plan yields a model.
#[derive(Debug, Clone)]
pub struct ModelPlan {
    pub spheres: Vec<(Option<usize>, usize, Option<String>)>,
    pub things: Vec<Option<String>>,
    pub machines: Vec<(usize, usize, u8, bool)>,
    pub flows: Vec<(usize, usize, usize, usize, bool)>,
    pub triggers: Vec<(usize, usize, usize, usize, Option<GuardExpr>)>,
}

const KEYWORDS: &[&str] = &["and", "or", "not", "true", "false"];

pub fn counter_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,5}".prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

pub fn guard() -> impl Strategy<Value = GuardExpr> {
    let op = prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
    ];
    let atom = prop_oneof![
        (-50i64..50).prop_map(GuardExpr::Int),
        any::<bool>().prop_map(GuardExpr::Bool),
        counter_name().prop_map(GuardExpr::Counter),
    ];
    let cmp = (atom.clone(), op, atom.clone()).prop_map(|(a, o, b)| GuardExpr::compare(a, o, b));
    prop_oneof![atom, cmp].prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|g| GuardExpr::Not(Box::new(g))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GuardExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| GuardExpr::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn display_name() -> impl Strategy<Value = Option<String>> {
    proptest::option::of("[ -~é\n\t]{0,12}")
}

pub fn model_plan() -> impl Strategy<Value = ModelPlan> {
    (
        prop::collection::vec((proptest::option::of(0usize..64), 0usize..6, display_name()), 0..6),
        prop::collection::vec(display_name(), 1..4),
        prop::collection::vec((0usize..64, 0usize..64, 1u8..128, any::<bool>()), 0..10),
        prop::collection::vec((0usize..64, 0usize..8, 0usize..64, 0usize..8, any::<bool>()), 0..16),
        prop::collection::vec(
            (0usize..64, 0usize..8, 0usize..64, 0usize..2, proptest::option::of(guard())),
            0..6,
        ),
    )
        .prop_map(|(spheres, things, machines, flows, triggers)| ModelPlan {
            spheres,
            things,
            machines,
            flows,
            triggers,
        })
}

/// Declarations of a model that passes every validation rule.
pub fn build_declarations(plan: &ModelPlan) -> Vec<Declaration> {
    let mut decls = Vec::new();
    let thing_ids: Vec<String> = (0..plan.things.len()).map(|i| format!("t{i}")).collect();
    for (id, name) in thing_ids.iter().zip(&plan.things) {
        decls.push(Declaration::ThingType(ThingType {
            id: id.as_str().into(),
            name: name.clone().unwrap_or_else(|| id.clone()),
        }));
    }
    let sphere_ids: Vec<String> = (0..plan.spheres.len()).map(|i| format!("s{i}")).collect();
    for (i, (parent, kind, name)) in plan.spheres.iter().enumerate() {
        let parent = match parent {
            Some(p) if i > 0 => Some(sphere_ids[p % i].as_str().into()),
            _ => None,
        };
        decls.push(Declaration::Sphere(Sphere {
            id: sphere_ids[i].as_str().into(),
            name: name.clone().unwrap_or_else(|| sphere_ids[i].clone()),
            parent,
            kind: SphereKind::ALL[kind % SphereKind::ALL.len()],
        }));
    }

    let mut machines: Vec<Machine> = Vec::new();
    if !sphere_ids.is_empty() {
        for (i, (s, t, mask, custom)) in plan.machines.iter().enumerate() {
            let sphere = &sphere_ids[s % sphere_ids.len()];
            let thing = &thing_ids[t % thing_ids.len()];
            if machines.iter().any(|m| m.sphere.as_str() == sphere && m.thing_type.as_str() == thing) {
                continue;
            }
            let mut stages: BTreeSet<Stage> = Stage::ALL
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, s)| *s)
                .collect();
            if stages.contains(&Stage::Receive) {
                stages.remove(&Stage::Arrive);
                stages.remove(&Stage::Accept);
            }
            let id = if *custom { format!("m{i}") } else { format!("{sphere}.{thing}") };
            machines.push(Machine {
                id: id.into(),
                sphere: sphere.as_str().into(),
                thing_type: thing.as_str().into(),
                stages,
            });
        }
    }
    decls.extend(machines.iter().cloned().map(Declaration::Machine));

    if machines.is_empty() {
        return decls;
    }
    let stage_of = |m: &Machine, k: usize| *m.stages.iter().nth(k % m.stages.len()).expect("non-empty");
    for (i, (a, k, b, _, auto)) in plan.flows.iter().enumerate() {
        let ma = &machines[a % machines.len()];
        // legal (destination machine, from, to) choices leaving `ma`
        let legal: Vec<(&Machine, Stage, Stage)> = machines
            .iter()
            .filter(|mb| mb.thing_type == ma.thing_type)
            .flat_map(|mb| {
                ma.stages.iter().flat_map(move |&from| {
                    mb.stages
                        .iter()
                        .filter(move |&&to| flow_allowed(DEFAULT_FLOW_ADJACENCY, from, to, ma.id != mb.id))
                        .map(move |&to| (mb, from, to))
                })
            })
            .collect();
        if legal.is_empty() {
            continue;
        }
        let (mb, from, to) = legal[(b * 8 + k) % legal.len()];
        let id = if *auto { format!("f{}", i + 1) } else { format!("x{i}") };
        decls.push(Declaration::flow(&id, (ma.id.as_str(), from), (mb.id.as_str(), to)));
    }
    for (i, (a, sa, b, sb, g)) in plan.triggers.iter().enumerate() {
        let ma = &machines[a % machines.len()];
        let targets: Vec<(&Machine, Stage)> = machines
            .iter()
            .flat_map(|m| {
                [Stage::Create, Stage::Process]
                    .into_iter()
                    .filter(|s| m.stages.contains(s))
                    .map(move |s| (m, s))
            })
            .collect();
        if targets.is_empty() {
            break;
        }
        let (mb, to) = targets[(b * 2 + sb) % targets.len()];
        decls.push(Declaration::trigger(
            &format!("g{i}"),
            (ma.id.as_str(), stage_of(ma, *sa)),
            (mb.id.as_str(), to),
            g.clone(),
        ));
    }
    decls
}

pub fn valid_model() -> impl Strategy<Value = Model> {
    model_plan().prop_map(|p| assemble(build_declarations(&p)).expect("generated declarations assemble"))
}

// ---------------------------------------------------------------------------
// single-fault mutations

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    MixedFlow,
    ReceiveArrive,
    IllegalAdjacency,
    SphereCycle,
}

pub const FAULTS: [Fault; 4] =
    [Fault::MixedFlow, Fault::ReceiveArrive, Fault::IllegalAdjacency, Fault::SphereCycle];

impl Fault {
    pub fn code(self) -> &'static str {
        match self {
            Fault::MixedFlow => "MIXED_FLOW",
            Fault::ReceiveArrive => "RECEIVE_EXCLUSION",
            Fault::IllegalAdjacency => "ILLEGAL_ADJACENCY",
            Fault::SphereCycle => "SPHERE_CYCLE",
        }
    }
}

/// Injects one fault into a valid model. `pick` chooses among candidate
/// elements. Fragments are appended when the model lacks a suitable element.
pub fn mutate(model: &Model, fault: Fault, pick: usize) -> Model {
    let mut decls = model.to_declarations();
    let machines: Vec<usize> = decls
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, Declaration::Machine(_)))
        .map(|(i, _)| i)
        .collect();
    let spheres: Vec<usize> = decls
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, Declaration::Sphere(_)))
        .map(|(i, _)| i)
        .collect();
    match fault {
        Fault::MixedFlow => {
            decls.push(Declaration::thing("zz_a"));
            decls.push(Declaration::thing("zz_b"));
            decls.push(Declaration::sphere("zz_s", SphereKind::Abstract, None));
            decls.push(Declaration::machine("zz_ma", "zz_s", "zz_a", &[Stage::Transfer]));
            decls.push(Declaration::machine("zz_mb", "zz_s", "zz_b", &[Stage::Receive]));
            decls.push(Declaration::flow("zz_f", ("zz_ma", Stage::Transfer), ("zz_mb", Stage::Receive)));
        }
        Fault::ReceiveArrive => {
            if machines.is_empty() {
                decls.push(Declaration::thing("zz_a"));
                decls.push(Declaration::sphere("zz_s", SphereKind::Abstract, None));
                decls.push(Declaration::machine("zz_m", "zz_s", "zz_a", &[Stage::Receive, Stage::Arrive]));
            } else if let Declaration::Machine(m) = &mut decls[machines[pick % machines.len()]] {
                m.stages.insert(Stage::Receive);
                m.stages.insert(Stage::Arrive);
            }
        }
        Fault::IllegalAdjacency => {
            if machines.is_empty() {
                decls.push(Declaration::thing("zz_a"));
                decls.push(Declaration::sphere("zz_s", SphereKind::Abstract, None));
                decls.push(Declaration::machine("zz_m", "zz_s", "zz_a", &[Stage::Process, Stage::Create]));
                decls.push(Declaration::flow("zz_f", ("zz_m", Stage::Process), ("zz_m", Stage::Create)));
            } else if let Declaration::Machine(m) = &decls[machines[pick % machines.len()]] {
                let from = *m.stages.iter().nth(pick % m.stages.len()).expect("non-empty");
                let to = *m
                    .stages
                    .iter()
                    .cycle()
                    .skip(pick / 7)
                    .take(m.stages.len())
                    .find(|s| !flow_allowed(DEFAULT_FLOW_ADJACENCY, from, **s, false))
                    .expect("a self-loop is always illegal");
                let id = m.id.clone();
                decls.push(Declaration::flow("zz_f", (id.as_str(), from), (id.as_str(), to)));
            }
        }
        Fault::SphereCycle => {
            if spheres.is_empty() {
                decls.push(Declaration::sphere("zz_a", SphereKind::Abstract, Some("zz_b")));
                decls.push(Declaration::sphere("zz_b", SphereKind::Abstract, Some("zz_a")));
            } else {
                let target = spheres[pick % spheres.len()];
                let Declaration::Sphere(s) = &decls[target] else { unreachable!() };
                let start = s.id.clone();
                // any sphere in the subtree of `start`, including itself
                let below: Vec<_> = model
                    .spheres()
                    .iter()
                    .filter(|c| model.sphere_within(&c.id, &start))
                    .map(|c| c.id.clone())
                    .collect();
                let new_parent = below[pick % below.len()].clone();
                if let Declaration::Sphere(s) = &mut decls[target] {
                    s.parent = Some(new_parent);
                }
            }
        }
    }
    assemble(decls).expect("mutated declarations still assemble")
}

// ---------------------------------------------------------------------------
// registries and corpora

pub const PERSON_NAMES: &[&str] = &["Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace"];

/// Registry with seven uniquely named persons, two persons sharing the name
/// `Sam`, and an entity called `Acme`.
pub fn people_registry() -> Registry {
    let mut persons = Vec::new();
    let mut identifiers = Vec::new();
    let mut add = |id: &str, name: &str, extra: Option<(&str, &str)>| {
        persons.push(serde_json::json!({"id": id, "sphere": id}));
        let mut d = serde_json::Map::new();
        d.insert("name".into(), name.into());
        if let Some((k, v)) = extra {
            d.insert(k.into(), v.into());
        }
        identifiers.push(serde_json::json!({"person": id, "sphere": "world", "descriptors": d}));
    };
    for n in PERSON_NAMES {
        add(&n.to_lowercase(), n, None);
    }
    add("sam1", "Sam", Some(("eyes", "brown")));
    add("sam2", "Sam", Some(("eyes", "blue")));
    let json = serde_json::json!({
        "spheres": ["world"],
        "default_sphere": "world",
        "persons": persons,
        "identifiers": identifiers,
        "entities": [{"id": "acme", "sphere": "world", "kind": "company", "descriptors": {"name": "Acme"}}],
    });
    Registry::from_json(&json.to_string()).unwrap()
}

/// Argument pool: unique persons, the ambiguous `Sam`, an entity, an
/// unregistered name and plain constants.
pub fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        6 => (0..PERSON_NAMES.len()).prop_map(|i| Term::Name(PERSON_NAMES[i].to_owned())),
        1 => Just(Term::Name("Sam".to_owned())),
        1 => Just(Term::Name("Acme".to_owned())),
        1 => Just(Term::Name("Zed".to_owned())),
        2 => prop_oneof![Just("pen"), Just("42"), Just("blue"), Just("car")]
            .prop_map(|s| Term::Constant(s.to_owned())),
    ]
}

pub fn truth() -> impl Strategy<Value = Truth> {
    prop_oneof![Just(Truth::True), Just(Truth::False), Just(Truth::Unknown)]
}

pub fn assertion() -> impl Strategy<Value = Assertion> {
    (
        prop_oneof![Just("loves"), Just("give"), Just("met"), Just("honest"), Just("is")],
        prop::collection::vec(term(), 0..9),
        truth(),
    )
        .prop_map(|(p, args, t)| Assertion::new("a", p, args).with_truth(t))
}

/// Assertion with exactly `n` distinct uniquely named persons, some repeated,
/// mixed with constants.
pub fn cpii_assertion() -> impl Strategy<Value = (Assertion, usize)> {
    (2usize..=5)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::sample::subsequence((0..PERSON_NAMES.len()).collect::<Vec<_>>(), n),
                prop::collection::vec(0usize..16, 0..4),
                prop::collection::vec(0usize..4, 0..3),
                0usize..16,
            )
        })
        .prop_map(|(n, people, dups, consts, shuffle)| {
            let mut args: Vec<Term> =
                people.iter().map(|&i| Term::Name(PERSON_NAMES[i].to_owned())).collect();
            for d in dups {
                args.push(Term::Name(PERSON_NAMES[people[d % people.len()]].to_owned()));
            }
            for c in consts {
                args.push(Term::Constant(["pen", "42", "blue", "car"][c].to_owned()));
            }
            // rotation varies which person occurs first
            let k = shuffle % args.len();
            args.rotate_left(k);
            let text = args.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" and ") + " met";
            (Assertion::new("c", "met", args).with_text(&text), n)
        })
}

/// Independent referent counter: reads the registry tables directly and
/// counts distinct persons whose `name` descriptor is the argument, skipping
/// names that are shared or also name an entity.
pub fn oracle_referents(a: &Assertion, r: &Registry) -> BTreeSet<String> {
    let sphere = a.sphere.clone().or(r.default_sphere.clone()).unwrap_or_default();
    let mut by_name: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for i in &r.identifiers {
        if i.sphere == sphere {
            if let Some(n) = i.descriptors.get("name") {
                by_name.entry(n.as_str()).or_default().push(i.person.as_str());
            }
        }
    }
    let entity_names: BTreeSet<&str> = r
        .entities
        .iter()
        .filter(|e| e.sphere == sphere)
        .filter_map(|e| e.descriptors.get("name").map(String::as_str))
        .collect();
    let mut out = BTreeSet::new();
    for t in &a.arguments {
        if let Term::Name(n) = t {
            match by_name.get(n.as_str()) {
                Some(ps) if ps.len() == 1 && !entity_names.contains(n.as_str()) => {
                    out.insert(ps[0].to_owned());
                }
                _ => {}
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// healthcare control sequence

pub fn healthcare_graph(model: &Model) -> sim::ControlGraph {
    dsl::parse_control_graph(&fixture("healthcare.fmc"), model).unwrap()
}

/// Labelled events of the healthcare model for `k` failed logins.
pub fn healthcare_labels(model: &Model, k: i64) -> (Vec<String>, sim::ConformanceReport) {
    let state = healthcare_scenario(model, k).init_state(model).unwrap();
    let trace = sim::run(model, state, 1000);
    let graph = healthcare_graph(model);
    (graph.labels(&trace), sim::conforms(&trace, &graph))
}

/// Expected labels, written from the event list of the login story: the
/// server sends feedback, the doctor reads it and tries to log in; each
/// failure is an error, the third blocks the account, a success opens a
/// session through which instructions go out.
pub fn healthcare_expected(k: i64) -> Vec<&'static str> {
    let mut v = vec!["E1", "E3", "E4"];
    let fails = k.min(3);
    v.extend(std::iter::repeat_n("E5", fails as usize));
    if fails == 3 {
        v.push("E6");
    } else {
        v.extend(["E7", "E8"]);
    }
    v
}
