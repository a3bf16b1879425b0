//! Privacy policies checked against models (structural kinds) or simulation
//! traces (behavioural kinds).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{SphereId, ThingTypeId};
use crate::model::{Location, Model, SphereKind, Stage};
use crate::pii::{Person, Registry};
use crate::sim::{Event, EventKind};

/// Payload key listing the persons a thing is about (comma separated ids).
pub const REFERENT_KEY: &str = "about";
/// Payload keys read by context selectors.
pub const TIME_KEY: &str = "time";
pub const ACTIVITY_KEY: &str = "activity";
pub const LOCATION_KEY: &str = "location";

/// Stage entered and thing type; `None` matches anything.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Action {
    pub stage: Option<Stage>,
    pub thing: Option<ThingTypeId>,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(s) => f.write_str(&s.as_str().to_lowercase())?,
            None => f.write_str("any")?,
        }
        match &self.thing {
            Some(t) => write!(f, " {t}"),
            None => f.write_str(" any"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContextConstraint {
    pub action: Action,
    /// Person id or group name of the actor.
    pub identity: Option<String>,
    /// Sphere the event happens in, or a `location` payload tag.
    pub location: Option<String>,
    pub time: Option<String>,
    pub activity: Option<String>,
}

impl ContextConstraint {
    pub fn selector_count(&self) -> usize {
        [&self.identity, &self.location, &self.time, &self.activity].iter().filter(|s| s.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// No arc may carry data reachable from the subject into a machine of an
    /// identifier thing type.
    CutOffSources {
        identifier_types: Vec<ThingTypeId>,
    },
    /// Releases of things about the subject must be triggered from inside the
    /// subject's sphere.
    SelfControlledRelease,
    /// No transfer crosses the subject's sphere boundary.
    Solitude,
    ContextProhibition(ContextConstraint),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::CutOffSources { .. } => "cutoff",
            PolicyKind::SelfControlledRelease => "self_release",
            PolicyKind::Solitude => "solitude",
            PolicyKind::ContextProhibition(_) => "deny",
        }
    }

    pub fn is_structural(&self) -> bool {
        matches!(self, PolicyKind::CutOffSources { .. } | PolicyKind::Solitude)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub id: String,
    pub subject: String,
    #[serde(flatten)]
    pub kind: PolicyKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    Arc { arc: String },
    Event { event: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub policy: String,
    pub evidence: Evidence,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("policy `{0}`: subject `{1}` is not a registered person")]
    UnknownSubject(String, String),
    #[error("policy `{0}`: subject sphere `{1}` is not in the model")]
    SubjectSphereMissing(String, String),
    #[error("policy `{0}` ({1}) needs a {2}")]
    NotApplicable(String, &'static str, &'static str),
}

/// Model and registry that give trace events their meaning.
#[derive(Debug, Clone, Copy)]
pub struct PiiContext<'a> {
    pub model: &'a Model,
    pub registry: &'a Registry,
}

/// Finds the subject by person id, then case-insensitively, then by name in
/// the registry's default sphere.
pub fn resolve_subject<'r>(registry: &'r Registry, subject: &str) -> Option<&'r Person> {
    registry
        .person(subject)
        .or_else(|| registry.persons.iter().find(|p| p.id.eq_ignore_ascii_case(subject)))
        .or_else(|| {
            let sphere = registry.default_sphere.as_deref()?;
            match registry.resolve_name(subject, sphere) {
                crate::pii::Resolution::Person(id) => registry.person(&id),
                _ => None,
            }
        })
}

fn subject_sphere(
    policy: &Policy,
    model: &Model,
    registry: &Registry,
) -> Result<(String, SphereId), CheckError> {
    let person = resolve_subject(registry, &policy.subject)
        .ok_or_else(|| CheckError::UnknownSubject(policy.id.clone(), policy.subject.clone()))?;
    let sphere = SphereId::from(person.sphere.as_str());
    if model.sphere(&sphere).is_none() {
        return Err(CheckError::SubjectSphereMissing(policy.id.clone(), person.sphere.clone()));
    }
    Ok((person.id.clone(), sphere))
}

/// Checks a structural policy against the model graph.
pub fn check_model(
    model: &Model,
    policy: &Policy,
    registry: &Registry,
) -> Result<Vec<Violation>, CheckError> {
    let (_, sphere) = subject_sphere(policy, model, registry)?;
    match &policy.kind {
        PolicyKind::CutOffSources { identifier_types } => {
            Ok(cut_off_sources(model, policy, &sphere, identifier_types))
        }
        PolicyKind::Solitude => Ok(solitude(model, policy, &sphere)),
        k => Err(CheckError::NotApplicable(policy.id.clone(), k.name(), "trace")),
    }
}

fn arcs(model: &Model) -> impl Iterator<Item = (&str, &Location, &Location)> {
    model
        .flow_arcs()
        .iter()
        .map(|a| (a.id.as_str(), &a.src, &a.dst))
        .chain(model.trigger_arcs().iter().map(|a| (a.id.as_str(), &a.src, &a.dst)))
}

/// Locations reachable along flow and trigger arcs, starting from every
/// stage of every machine inside `sphere`.
fn reachable_from(model: &Model, sphere: &SphereId) -> BTreeSet<Location> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for m in model.machines() {
        if model.sphere_within(&m.sphere, sphere) {
            for s in &m.stages {
                let loc = Location::new(m.id.clone(), *s);
                if seen.insert(loc.clone()) {
                    queue.push_back(loc);
                }
            }
        }
    }
    while let Some(loc) = queue.pop_front() {
        for (_, src, dst) in arcs(model) {
            if *src == loc && seen.insert(dst.clone()) {
                queue.push_back(dst.clone());
            }
        }
    }
    seen
}

fn thing_of<'m>(model: &'m Model, loc: &Location) -> Option<&'m ThingTypeId> {
    model.machine(&loc.machine).map(|m| &m.thing_type)
}

fn cut_off_sources(model: &Model, policy: &Policy, sphere: &SphereId, ids: &[ThingTypeId]) -> Vec<Violation> {
    let reach = reachable_from(model, sphere);
    let is_id = |loc: &Location| thing_of(model, loc).is_some_and(|t| ids.contains(t));
    arcs(model)
        .filter(|(_, src, dst)| is_id(dst) && !is_id(src) && reach.contains(*src))
        .map(|(arc, src, dst)| Violation {
            policy: policy.id.clone(),
            evidence: Evidence::Arc { arc: arc.to_owned() },
            explanation: format!(
                "arc {arc} feeds data reachable from `{sphere}` ({src}) into identifier machine at {dst}"
            ),
        })
        .collect()
}

fn solitude(model: &Model, policy: &Policy, sphere: &SphereId) -> Vec<Violation> {
    let inside = |loc: &Location| model.machine_within(&loc.machine, sphere);
    model
        .flow_arcs()
        .iter()
        .filter(|a| a.src.stage == Stage::Transfer && inside(&a.src) != inside(&a.dst))
        .map(|a| Violation {
            policy: policy.id.clone(),
            evidence: Evidence::Arc { arc: a.id.to_string() },
            explanation: format!("transfer {} -> {} crosses the boundary of `{sphere}`", a.src, a.dst),
        })
        .collect()
}

/// Person ids a thing is about, from its payload.
pub fn referents(payload: &crate::sim::Payload) -> BTreeSet<String> {
    payload
        .get(REFERENT_KEY)
        .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect())
        .unwrap_or_default()
}

/// The person acting at a location: nearest person-kind sphere enclosing its
/// machine that the registry knows.
pub fn actor<'r>(ctx: &PiiContext<'r>, loc: &Location) -> Option<&'r Person> {
    let m = ctx.model.machine(&loc.machine)?;
    ctx.model
        .sphere_lineage(&m.sphere)
        .into_iter()
        .filter(|s| ctx.model.sphere(s).is_some_and(|s| s.kind == SphereKind::Person))
        .find_map(|s| ctx.registry.person_for_sphere(s.as_str()))
}

/// Checks a behavioural policy against a trace.
pub fn check_trace(
    trace: &[Event],
    policy: &Policy,
    ctx: &PiiContext<'_>,
) -> Result<Vec<Violation>, CheckError> {
    let (subject, sphere) = subject_sphere(policy, ctx.model, ctx.registry)?;
    let mut out = Vec::new();
    match &policy.kind {
        PolicyKind::SelfControlledRelease => {
            for (index, e) in trace.iter().enumerate() {
                let Some(at) = e.entered() else { continue };
                if e.kind == EventKind::Guard
                    || at.stage != Stage::Release
                    || !referents(&e.metadata).contains(&subject)
                {
                    continue;
                }
                // things that were never triggered count as released by
                // whoever holds them
                let source = e.origin.as_ref().unwrap_or(at);
                if !ctx.model.machine_within(&source.machine, &sphere) {
                    let cause = match &e.origin {
                        Some(o) => format!("triggered from {o}"),
                        None => "without any trigger".to_owned(),
                    };
                    out.push(Violation {
                        policy: policy.id.clone(),
                        evidence: Evidence::Event { event: e.id.clone(), index },
                        explanation: format!(
                            "{} about `{subject}` released at {at} {cause}, outside `{sphere}`",
                            e.thing_type
                        ),
                    });
                }
            }
        }
        PolicyKind::ContextProhibition(c) => {
            for (index, e) in trace.iter().enumerate() {
                if let Some(why) = prohibited(c, &subject, e, ctx) {
                    out.push(Violation {
                        policy: policy.id.clone(),
                        evidence: Evidence::Event { event: e.id.clone(), index },
                        explanation: why,
                    });
                }
            }
        }
        k => return Err(CheckError::NotApplicable(policy.id.clone(), k.name(), "model")),
    }
    Ok(out)
}

/// Explanation if every present selector of `c` matches the event.
fn prohibited(c: &ContextConstraint, subject: &str, e: &Event, ctx: &PiiContext<'_>) -> Option<String> {
    let at = e.entered()?;
    if e.kind == EventKind::Guard
        || c.action.stage.is_some_and(|s| s != at.stage)
        || c.action.thing.as_ref().is_some_and(|t| *t != e.thing_type)
        || !referents(&e.metadata).contains(subject)
    {
        return None;
    }
    let mut why = vec![format!("{} {} about `{subject}` at {at}", at.stage, e.thing_type)];
    if let Some(id) = &c.identity {
        let who = actor(ctx, at)?;
        let member = who.id == *id || ctx.registry.group(id).is_some_and(|g| g.contains(&who.id));
        if !member {
            return None;
        }
        why.push(format!("by `{}` ({id})", who.id));
    }
    if let Some(place) = &c.location {
        let m = ctx.model.machine(&at.machine)?;
        let within = ctx.model.sphere_lineage(&m.sphere).iter().any(|s| s.as_str() == place);
        if !within && e.metadata.get(LOCATION_KEY) != Some(place) {
            return None;
        }
        why.push(format!("at {place}"));
    }
    for (sel, key, word) in [(&c.time, TIME_KEY, "during"), (&c.activity, ACTIVITY_KEY, "while")] {
        if let Some(v) = sel {
            if e.metadata.get(key) != Some(v) {
                return None;
            }
            why.push(format!("{word} {v}"));
        }
    }
    Some(why.join(" "))
}
