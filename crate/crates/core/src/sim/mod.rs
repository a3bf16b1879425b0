//! Deterministic token simulation of FM models.
//!
//! Things are tokens occupying exactly one machine stage. Each [`step`] has
//! two phases:
//!
//! 1. Flow phase. Machines are visited in declaration order and, inside a
//!    machine, things in the order they arrived there. A settled thing moves
//!    along the first declared flow arc leaving its stage. A thing moves at
//!    most once per step.
//! 2. Trigger phase. Every thing that is not yet settled (it just moved, was
//!    placed, or was created) evaluates the trigger arcs leaving its stage in
//!    declaration order. Guards read the counters as they stood at the start
//!    of the phase. Each firing trigger creates a new thing at its target.
//!    Things created here are settled during the next step's trigger phase,
//!    so creation occupies the Create (or Process) stage for one step.
//!
//! Counters can be bound to a location; they increase by one each time a
//! thing enters it during simulation.

mod control;
mod engine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guard::Counters;
use crate::ids::ThingTypeId;
use crate::model::Location;

pub use control::{conforms, ConformanceReport, ControlGraph, EventPattern, Precedence};
pub use engine::{init_state, is_quiescent, run, run_state, step};

pub type Payload = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThingId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThingInstance {
    pub id: ThingId,
    pub thing_type: ThingTypeId,
    pub location: Location,
    pub payload: Payload,
    /// Marks stored-created / stored-processed things. Metadata only.
    pub stored: bool,
    /// Source of the trigger that created this thing; `None` for placements.
    pub origin: Option<Location>,
    /// Ordering key for FIFO scheduling inside a machine.
    pub arrival: u64,
    /// Whether the triggers at the current location have been evaluated.
    pub settled: bool,
}

/// A counter increased whenever a thing enters `location`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub counter: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    pub step: u64,
    pub things: Vec<ThingInstance>,
    pub counters: Counters,
    pub tallies: Vec<Tally>,
    /// Reserved; the default semantics draw no random numbers.
    pub rng_seed: u64,
    next_thing: u64,
    next_event: u64,
    next_arrival: u64,
}

impl SimState {
    pub fn thing(&self, id: ThingId) -> Option<&ThingInstance> {
        self.things.iter().find(|t| t.id == id)
    }

    /// Number of things currently at `loc`.
    pub fn count_at(&self, loc: &Location) -> usize {
        self.things.iter().filter(|t| &t.location == loc).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A thing moved along a flow arc.
    Flow,
    /// A trigger fired and created a thing.
    Trigger,
    /// A guarded trigger was evaluated and did not fire.
    Guard,
}

/// Something that happened during one step. `region` lists the source and
/// the destination location, in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub label: String,
    pub kind: EventKind,
    pub time: u64,
    pub region: Vec<Location>,
    pub arc: String,
    pub thing: ThingId,
    pub thing_type: ThingTypeId,
    pub origin: Option<Location>,
    pub metadata: Payload,
    pub counters: Counters,
}

impl Event {
    /// The location entered by the event (trigger target or flow destination).
    pub fn entered(&self) -> Option<&Location> {
        self.region.last()
    }
}

pub type Trace = Vec<Event>;

/// Serializes a trace as JSON lines, one event per line.
pub fn trace_to_jsonl(trace: &[Event]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Trace, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub location: Location,
    pub payload: Payload,
    pub stored: bool,
}

impl Placement {
    pub fn new(location: Location) -> Self {
        Self { location, payload: Payload::new(), stored: false }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.payload.insert(key.to_owned(), value.to_owned());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterDef {
    pub name: String,
    pub initial: i64,
    pub counts: Option<Location>,
}

/// Contents of a `.fms` scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub counters: Vec<CounterDef>,
    pub placements: Vec<Placement>,
    pub control: Option<ControlGraph>,
}

impl Scenario {
    /// Initial state: placements plus counter values and tallies.
    pub fn init_state(&self, model: &crate::model::Model) -> Result<SimState, SimError> {
        let mut state = init_state(model, &self.placements)?;
        for c in &self.counters {
            state.counters.insert(c.name.clone(), c.initial);
            if let Some(loc) = &c.counts {
                if !model.has_location(loc) {
                    return Err(SimError::UnknownLocation(loc.clone()));
                }
                state.tallies.push(Tally { counter: c.name.clone(), location: loc.clone() });
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown location `{0}`")]
    UnknownLocation(Location),
}
