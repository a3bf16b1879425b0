//! In-memory FM diagrams.
//!
//! A [`Model`] is built once through [`assemble`] and is immutable afterwards.
//! Assembly only resolves identifiers; the structural rules of the language
//! are checked separately by [`crate::validate`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guard::GuardExpr;
use crate::ids::{ArcId, MachineId, SphereId, ThingTypeId};

/// The stages a thing can occupy inside a machine.
///
/// `Receive` is the combined form of `Arrive` followed by `Accept`; a machine
/// uses one form or the other. Being stored is not a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    Create,
    Process,
    Release,
    Transfer,
    Arrive,
    Accept,
    Receive,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Create,
        Stage::Process,
        Stage::Release,
        Stage::Transfer,
        Stage::Arrive,
        Stage::Accept,
        Stage::Receive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Create => "Create",
            Stage::Process => "Process",
            Stage::Release => "Release",
            Stage::Transfer => "Transfer",
            Stage::Arrive => "Arrive",
            Stage::Accept => "Accept",
            Stage::Receive => "Receive",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown stage `{0}`")]
pub struct UnknownStage(pub String);

impl FromStr for Stage {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| UnknownStage(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereKind {
    Person,
    Entity,
    Location,
    Channel,
    Device,
    #[default]
    Abstract,
}

impl SphereKind {
    pub const ALL: [SphereKind; 6] = [
        SphereKind::Person,
        SphereKind::Entity,
        SphereKind::Location,
        SphereKind::Channel,
        SphereKind::Device,
        SphereKind::Abstract,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SphereKind::Person => "person",
            SphereKind::Entity => "entity",
            SphereKind::Location => "location",
            SphereKind::Channel => "channel",
            SphereKind::Device => "device",
            SphereKind::Abstract => "abstract",
        }
    }
}

impl FromStr for SphereKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SphereKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown sphere kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sphere {
    pub id: SphereId,
    pub name: String,
    pub parent: Option<SphereId>,
    pub kind: SphereKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThingType {
    pub id: ThingTypeId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub id: MachineId,
    pub sphere: SphereId,
    pub thing_type: ThingTypeId,
    pub stages: BTreeSet<Stage>,
}

/// A stage of a specific machine: the position of a thing, or an arc endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub machine: MachineId,
    pub stage: Stage,
}

impl Location {
    pub fn new(machine: impl Into<MachineId>, stage: Stage) -> Self {
        Self { machine: machine.into(), stage }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.machine, self.stage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowArc {
    pub id: ArcId,
    pub src: Location,
    pub dst: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerArc {
    pub id: ArcId,
    pub src: Location,
    pub dst: Location,
    #[serde(default)]
    pub guard: Option<GuardExpr>,
}

/// An FM diagram. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Model {
    spheres: Vec<Sphere>,
    thing_types: Vec<ThingType>,
    machines: Vec<Machine>,
    flow_arcs: Vec<FlowArc>,
    trigger_arcs: Vec<TriggerArc>,
}

impl Model {
    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn thing_types(&self) -> &[ThingType] {
        &self.thing_types
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn flow_arcs(&self) -> &[FlowArc] {
        &self.flow_arcs
    }

    pub fn trigger_arcs(&self) -> &[TriggerArc] {
        &self.trigger_arcs
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
            && self.thing_types.is_empty()
            && self.machines.is_empty()
            && self.flow_arcs.is_empty()
            && self.trigger_arcs.is_empty()
    }

    pub fn sphere(&self, id: &SphereId) -> Option<&Sphere> {
        self.spheres.iter().find(|s| &s.id == id)
    }

    pub fn thing_type(&self, id: &ThingTypeId) -> Option<&ThingType> {
        self.thing_types.iter().find(|t| &t.id == id)
    }

    pub fn machine(&self, id: &MachineId) -> Option<&Machine> {
        self.machines.iter().find(|m| &m.id == id)
    }

    pub fn machine_index(&self, id: &MachineId) -> Option<usize> {
        self.machines.iter().position(|m| &m.id == id)
    }

    /// The machine handling `thing_type` inside `sphere`.
    pub fn machine_for(&self, sphere: &SphereId, thing_type: &ThingTypeId) -> Option<&Machine> {
        self.machines.iter().find(|m| &m.sphere == sphere && &m.thing_type == thing_type)
    }

    /// Whether `loc` names an existing machine that has the stage.
    pub fn has_location(&self, loc: &Location) -> bool {
        self.machine(&loc.machine).is_some_and(|m| m.stages.contains(&loc.stage))
    }

    /// Parent chain of a sphere, starting with the sphere itself. Stops before
    /// repeating a sphere, so cyclic parent links terminate.
    pub fn sphere_lineage(&self, id: &SphereId) -> Vec<&SphereId> {
        let mut out: Vec<&SphereId> = Vec::new();
        let mut cur = self.sphere(id);
        while let Some(s) = cur {
            if out.contains(&&s.id) {
                break;
            }
            out.push(&s.id);
            cur = s.parent.as_ref().and_then(|p| self.sphere(p));
        }
        out
    }

    /// Whether `inner` is `outer` or nested somewhere below it.
    pub fn sphere_within(&self, inner: &SphereId, outer: &SphereId) -> bool {
        self.sphere_lineage(inner).contains(&outer)
    }

    /// Whether a machine sits inside `sphere` (directly or in a subsphere).
    pub fn machine_within(&self, machine: &MachineId, sphere: &SphereId) -> bool {
        self.machine(machine).is_some_and(|m| self.sphere_within(&m.sphere, sphere))
    }

    pub fn flows_from<'a>(&'a self, loc: &Location) -> impl Iterator<Item = &'a FlowArc> + 'a {
        let loc = loc.clone();
        self.flow_arcs.iter().filter(move |a| a.src == loc)
    }

    pub fn triggers_from<'a>(&'a self, loc: &Location) -> impl Iterator<Item = &'a TriggerArc> + 'a {
        let loc = loc.clone();
        self.trigger_arcs.iter().filter(move |a| a.src == loc)
    }

    /// Directives that reassemble this exact model.
    pub fn to_declarations(&self) -> Vec<Declaration> {
        let mut out = Vec::new();
        out.extend(self.thing_types.iter().cloned().map(Declaration::ThingType));
        out.extend(self.spheres.iter().cloned().map(Declaration::Sphere));
        out.extend(self.machines.iter().cloned().map(Declaration::Machine));
        out.extend(self.flow_arcs.iter().cloned().map(Declaration::Flow));
        out.extend(self.trigger_arcs.iter().cloned().map(Declaration::Trigger));
        out
    }
}

/// One assembly directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Declaration {
    ThingType(ThingType),
    Sphere(Sphere),
    Machine(Machine),
    Flow(FlowArc),
    Trigger(TriggerArc),
}

impl Declaration {
    pub fn thing(id: &str) -> Self {
        Declaration::ThingType(ThingType { id: id.into(), name: id.to_owned() })
    }

    pub fn sphere(id: &str, kind: SphereKind, parent: Option<&str>) -> Self {
        Declaration::Sphere(Sphere {
            id: id.into(),
            name: id.to_owned(),
            parent: parent.map(SphereId::from),
            kind,
        })
    }

    pub fn machine(id: &str, sphere: &str, thing_type: &str, stages: &[Stage]) -> Self {
        Declaration::Machine(Machine {
            id: id.into(),
            sphere: sphere.into(),
            thing_type: thing_type.into(),
            stages: stages.iter().copied().collect(),
        })
    }

    pub fn flow(id: &str, src: (&str, Stage), dst: (&str, Stage)) -> Self {
        Declaration::Flow(FlowArc {
            id: id.into(),
            src: Location::new(src.0, src.1),
            dst: Location::new(dst.0, dst.1),
        })
    }

    pub fn trigger(id: &str, src: (&str, Stage), dst: (&str, Stage), guard: Option<GuardExpr>) -> Self {
        Declaration::Trigger(TriggerArc {
            id: id.into(),
            src: Location::new(src.0, src.1),
            dst: Location::new(dst.0, dst.1),
            guard,
        })
    }
}

/// A problem found while assembling, tied to the index of the directive.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyIssue {
    #[error("directive {index}: duplicate {what} id `{id}`")]
    DuplicateId { index: usize, what: &'static str, id: String },
    #[error("directive {index}: unknown {what} `{reference}`")]
    DanglingReference { index: usize, what: &'static str, reference: String },
}

impl AssemblyIssue {
    pub fn index(&self) -> usize {
        match self {
            AssemblyIssue::DuplicateId { index, .. } | AssemblyIssue::DanglingReference { index, .. } => {
                *index
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model assembly failed: {}", .issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct AssembleError {
    pub issues: Vec<AssemblyIssue>,
}

/// Applies the directives in order and resolves every cross-reference.
///
/// References may point forward (a sphere's parent can be declared later),
/// so resolution runs after all directives are collected. The result is not
/// validated.
pub fn assemble(declarations: impl IntoIterator<Item = Declaration>) -> Result<Model, AssembleError> {
    let mut model = Model::default();
    let mut issues = Vec::new();
    let mut spheres: HashSet<SphereId> = HashSet::new();
    let mut things: HashSet<ThingTypeId> = HashSet::new();
    let mut machines: HashMap<MachineId, BTreeSet<Stage>> = HashMap::new();
    let mut arcs: HashSet<ArcId> = HashSet::new();
    // (index, declaration) pairs kept for the resolution pass
    let mut pending = Vec::new();

    for (index, decl) in declarations.into_iter().enumerate() {
        let dup =
            |what: &'static str, id: &str| AssemblyIssue::DuplicateId { index, what, id: id.to_owned() };
        match &decl {
            Declaration::ThingType(t) => {
                if !things.insert(t.id.clone()) {
                    issues.push(dup("thing type", t.id.as_str()));
                    continue;
                }
            }
            Declaration::Sphere(s) => {
                if !spheres.insert(s.id.clone()) {
                    issues.push(dup("sphere", s.id.as_str()));
                    continue;
                }
            }
            Declaration::Machine(m) => {
                if machines.contains_key(&m.id) {
                    issues.push(dup("machine", m.id.as_str()));
                    continue;
                }
                machines.insert(m.id.clone(), m.stages.clone());
            }
            Declaration::Flow(FlowArc { id, .. }) | Declaration::Trigger(TriggerArc { id, .. }) => {
                if !arcs.insert(id.clone()) {
                    issues.push(dup("arc", id.as_str()));
                    continue;
                }
            }
        }
        pending.push((index, decl));
    }

    for (index, decl) in pending {
        let dangling = |what: &'static str, reference: String| AssemblyIssue::DanglingReference {
            index,
            what,
            reference,
        };
        match decl {
            Declaration::ThingType(t) => model.thing_types.push(t),
            Declaration::Sphere(s) => {
                if let Some(p) = &s.parent {
                    if !spheres.contains(p) {
                        issues.push(dangling("sphere", p.to_string()));
                    }
                }
                model.spheres.push(s);
            }
            Declaration::Machine(m) => {
                if !spheres.contains(&m.sphere) {
                    issues.push(dangling("sphere", m.sphere.to_string()));
                }
                if !things.contains(&m.thing_type) {
                    issues.push(dangling("thing type", m.thing_type.to_string()));
                }
                model.machines.push(m);
            }
            Declaration::Flow(a) => {
                for end in [&a.src, &a.dst] {
                    if !machines.contains_key(&end.machine) {
                        issues.push(dangling("machine", end.machine.to_string()));
                    }
                }
                model.flow_arcs.push(a);
            }
            Declaration::Trigger(a) => {
                for end in [&a.src, &a.dst] {
                    if !machines.contains_key(&end.machine) {
                        issues.push(dangling("machine", end.machine.to_string()));
                    }
                }
                model.trigger_arcs.push(a);
            }
        }
    }

    if issues.is_empty() {
        Ok(model)
    } else {
        issues.sort_by_key(AssemblyIssue::index);
        Err(AssembleError { issues })
    }
}
