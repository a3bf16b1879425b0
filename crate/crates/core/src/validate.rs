//! Static structural rules of FM diagrams.
//!
//! Validation never stops at the first problem: every rule is checked over the
//! whole model and violations come back in declaration order (spheres,
//! machines, flow arcs, trigger arcs).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{MachineId, SphereId};
use crate::model::{Location, Model, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleId {
    DuplicateId,
    DanglingReference,
    SphereCycle,
    EmptyStages,
    ReceiveExclusion,
    DuplicateMachine,
    StageNotInMachine,
    MixedFlow,
    IllegalAdjacency,
    TriggerTarget,
}

impl RuleId {
    pub fn code(self) -> &'static str {
        match self {
            RuleId::DuplicateId => "DUPLICATE_ID",
            RuleId::DanglingReference => "DANGLING_REFERENCE",
            RuleId::SphereCycle => "SPHERE_CYCLE",
            RuleId::EmptyStages => "EMPTY_STAGES",
            RuleId::ReceiveExclusion => "RECEIVE_EXCLUSION",
            RuleId::DuplicateMachine => "DUPLICATE_MACHINE",
            RuleId::StageNotInMachine => "STAGE_NOT_IN_MACHINE",
            RuleId::MixedFlow => "MIXED_FLOW",
            RuleId::IllegalAdjacency => "ILLEGAL_ADJACENCY",
            RuleId::TriggerTarget => "TRIGGER_TARGET",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    /// Element the violation is attached to, e.g. `flow:f3` or `machine:m1`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn has(&self, rule: RuleId) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Violation> {
        self.violations.iter()
    }

    fn push(&mut self, rule: RuleId, location: String, message: String) {
        self.violations.push(Violation { rule, location, message });
    }
}

/// Where an adjacency rule applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcScope {
    /// Both endpoints in the same machine.
    Internal,
    /// Endpoints in different machines.
    CrossMachine,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjacencyRule {
    pub from: Stage,
    pub to: Stage,
    pub scope: ArcScope,
}

const fn rule(from: Stage, to: Stage, scope: ArcScope) -> AdjacencyRule {
    AdjacencyRule { from, to, scope }
}

/// Legal flow arcs. Only transfer crosses a machine boundary; process to
/// create is a trigger, never a flow.
pub const DEFAULT_FLOW_ADJACENCY: &[AdjacencyRule] = &[
    rule(Stage::Create, Stage::Release, ArcScope::Internal),
    rule(Stage::Create, Stage::Process, ArcScope::Internal),
    rule(Stage::Process, Stage::Release, ArcScope::Internal),
    rule(Stage::Release, Stage::Transfer, ArcScope::Internal),
    rule(Stage::Transfer, Stage::Transfer, ArcScope::CrossMachine),
    rule(Stage::Transfer, Stage::Arrive, ArcScope::Either),
    rule(Stage::Arrive, Stage::Accept, ArcScope::Internal),
    rule(Stage::Accept, Stage::Process, ArcScope::Internal),
    rule(Stage::Accept, Stage::Release, ArcScope::Internal),
    rule(Stage::Receive, Stage::Process, ArcScope::Internal),
    rule(Stage::Receive, Stage::Release, ArcScope::Internal),
    rule(Stage::Transfer, Stage::Receive, ArcScope::Either),
];

/// Whether a flow from `from` to `to` is allowed by `table`.
pub fn flow_allowed(table: &[AdjacencyRule], from: Stage, to: Stage, cross_machine: bool) -> bool {
    table.iter().any(|r| {
        r.from == from
            && r.to == to
            && match r.scope {
                ArcScope::Internal => !cross_machine,
                ArcScope::CrossMachine => cross_machine,
                ArcScope::Either => true,
            }
    })
}

/// Trigger arcs may only start activity: their target is Create or Process.
pub fn trigger_target_allowed(stage: Stage) -> bool {
    matches!(stage, Stage::Create | Stage::Process)
}

pub fn validate(model: &Model) -> ValidationReport {
    validate_with(model, DEFAULT_FLOW_ADJACENCY)
}

pub fn validate_with(model: &Model, adjacency: &[AdjacencyRule]) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_spheres(model, &mut report);
    check_machines(model, &mut report);
    check_flows(model, adjacency, &mut report);
    check_triggers(model, &mut report);
    report
}

fn check_spheres(model: &Model, report: &mut ValidationReport) {
    let mut seen: HashMap<&SphereId, ()> = HashMap::new();
    for s in model.spheres() {
        let loc = format!("sphere:{}", s.id);
        if seen.insert(&s.id, ()).is_some() {
            report.push(RuleId::DuplicateId, loc.clone(), format!("sphere id `{}` declared twice", s.id));
        }
        if let Some(p) = &s.parent {
            if model.sphere(p).is_none() {
                report.push(
                    RuleId::DanglingReference,
                    loc.clone(),
                    format!("parent sphere `{p}` does not exist"),
                );
            } else if on_parent_cycle(model, &s.id) {
                report.push(RuleId::SphereCycle, loc, format!("sphere `{}` is its own ancestor", s.id));
            }
        }
    }
}

fn on_parent_cycle(model: &Model, start: &SphereId) -> bool {
    let mut cur = model.sphere(start).and_then(|s| s.parent.as_ref());
    let mut steps = 0;
    while let Some(p) = cur {
        if p == start {
            return true;
        }
        steps += 1;
        if steps > model.spheres().len() {
            // entered a cycle that does not include `start`
            return false;
        }
        cur = model.sphere(p).and_then(|s| s.parent.as_ref());
    }
    false
}

fn check_machines(model: &Model, report: &mut ValidationReport) {
    let mut ids: HashMap<&MachineId, ()> = HashMap::new();
    let mut pairs = HashMap::new();
    let mut thing_ids = HashMap::new();
    for t in model.thing_types() {
        if thing_ids.insert(&t.id, ()).is_some() {
            report.push(
                RuleId::DuplicateId,
                format!("thing:{}", t.id),
                format!("thing type id `{}` declared twice", t.id),
            );
        }
    }
    for m in model.machines() {
        let loc = format!("machine:{}", m.id);
        if ids.insert(&m.id, ()).is_some() {
            report.push(RuleId::DuplicateId, loc.clone(), format!("machine id `{}` declared twice", m.id));
        }
        if model.sphere(&m.sphere).is_none() {
            report.push(
                RuleId::DanglingReference,
                loc.clone(),
                format!("sphere `{}` does not exist", m.sphere),
            );
        }
        if model.thing_type(&m.thing_type).is_none() {
            report.push(
                RuleId::DanglingReference,
                loc.clone(),
                format!("thing type `{}` does not exist", m.thing_type),
            );
        }
        if m.stages.is_empty() {
            report.push(RuleId::EmptyStages, loc.clone(), "machine has no stages".to_owned());
        }
        if m.stages.contains(&Stage::Receive)
            && (m.stages.contains(&Stage::Arrive) || m.stages.contains(&Stage::Accept))
        {
            report.push(
                RuleId::ReceiveExclusion,
                loc.clone(),
                "Receive combines Arrive and Accept and cannot appear alongside them".to_owned(),
            );
        }
        if let Some(first) = pairs.insert((&m.sphere, &m.thing_type), &m.id) {
            report.push(
                RuleId::DuplicateMachine,
                loc,
                format!(
                    "sphere `{}` already has machine `{first}` for thing type `{}`",
                    m.sphere, m.thing_type
                ),
            );
        }
    }
}

/// Reports missing machines or stages for one arc endpoint; returns whether
/// the endpoint resolved to a machine.
fn check_endpoint(model: &Model, end: &Location, loc: &str, report: &mut ValidationReport) -> bool {
    match model.machine(&end.machine) {
        None => {
            report.push(
                RuleId::DanglingReference,
                loc.to_owned(),
                format!("machine `{}` does not exist", end.machine),
            );
            false
        }
        Some(m) => {
            if !m.stages.contains(&end.stage) {
                report.push(
                    RuleId::StageNotInMachine,
                    loc.to_owned(),
                    format!("machine `{}` has no {} stage", m.id, end.stage),
                );
            }
            true
        }
    }
}

fn check_flows(model: &Model, adjacency: &[AdjacencyRule], report: &mut ValidationReport) {
    for a in model.flow_arcs() {
        let loc = format!("flow:{}", a.id);
        let src_ok = check_endpoint(model, &a.src, &loc, report);
        let dst_ok = check_endpoint(model, &a.dst, &loc, report);
        if !(src_ok && dst_ok) {
            continue;
        }
        let (src, dst) = (
            model.machine(&a.src.machine).expect("resolved"),
            model.machine(&a.dst.machine).expect("resolved"),
        );
        if src.thing_type != dst.thing_type {
            report.push(
                RuleId::MixedFlow,
                loc.clone(),
                format!("flow mixes thing types `{}` and `{}`", src.thing_type, dst.thing_type),
            );
        }
        let cross = src.id != dst.id;
        if !flow_allowed(adjacency, a.src.stage, a.dst.stage, cross) {
            let scope = if cross { "across machines" } else { "inside a machine" };
            report.push(
                RuleId::IllegalAdjacency,
                loc,
                format!("{} -> {} is not a legal flow {scope}", a.src.stage, a.dst.stage),
            );
        }
    }
}

fn check_triggers(model: &Model, report: &mut ValidationReport) {
    for a in model.trigger_arcs() {
        let loc = format!("trigger:{}", a.id);
        check_endpoint(model, &a.src, &loc, report);
        check_endpoint(model, &a.dst, &loc, report);
        if !trigger_target_allowed(a.dst.stage) {
            report.push(
                RuleId::TriggerTarget,
                loc,
                format!("trigger targets {}; only Create or Process can be triggered", a.dst.stage),
            );
        }
    }
}
