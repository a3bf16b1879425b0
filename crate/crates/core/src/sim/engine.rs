use crate::model::{Location, Model};

use super::{Event, EventKind, Placement, SimError, SimState, ThingId, ThingInstance, Trace};

pub fn init_state(model: &Model, initial: &[Placement]) -> Result<SimState, SimError> {
    let mut state = SimState {
        step: 0,
        things: Vec::with_capacity(initial.len()),
        counters: Default::default(),
        tallies: Vec::new(),
        rng_seed: 0,
        next_thing: 1,
        next_event: 1,
        next_arrival: 0,
    };
    for p in initial {
        if !model.has_location(&p.location) {
            return Err(SimError::UnknownLocation(p.location.clone()));
        }
        let thing_type = model.machine(&p.location.machine).expect("checked above").thing_type.clone();
        let thing = ThingInstance {
            id: ThingId(state.next_thing),
            thing_type,
            location: p.location.clone(),
            payload: p.payload.clone(),
            stored: p.stored,
            origin: None,
            arrival: state.next_arrival,
            settled: false,
        };
        state.next_thing += 1;
        state.next_arrival += 1;
        state.things.push(thing);
    }
    Ok(state)
}

/// No thing is waiting for trigger evaluation and none can move.
pub fn is_quiescent(model: &Model, state: &SimState) -> bool {
    state.things.iter().all(|t| t.settled && model.flows_from(&t.location).next().is_none())
}

fn bump_tallies(state: &mut SimState, entered: &Location) {
    for i in 0..state.tallies.len() {
        if &state.tallies[i].location == entered {
            let name = state.tallies[i].counter.clone();
            *state.counters.entry(name).or_insert(0) += 1;
        }
    }
}

fn next_event_id(state: &mut SimState) -> String {
    let id = format!("e{}", state.next_event);
    state.next_event += 1;
    id
}

/// Thing indices ordered by machine declaration order, then arrival.
fn schedule(model: &Model, state: &SimState, filter: impl Fn(&ThingInstance) -> bool) -> Vec<usize> {
    let mut idx: Vec<(usize, u64, usize)> = state
        .things
        .iter()
        .enumerate()
        .filter(|(_, t)| filter(t))
        .map(|(i, t)| {
            let m = model.machine_index(&t.location.machine).unwrap_or(usize::MAX);
            (m, t.arrival, i)
        })
        .collect();
    idx.sort_unstable();
    idx.into_iter().map(|(_, _, i)| i).collect()
}

/// Advances the simulation by one step and returns the events it fired.
pub fn step(model: &Model, mut state: SimState) -> (SimState, Vec<Event>) {
    state.step += 1;
    let time = state.step;
    let mut events = Vec::new();

    // flow phase
    let mut moved = vec![false; state.things.len()];
    for mi in 0..model.machines().len() {
        let machine_id = &model.machines()[mi].id;
        let here = schedule(model, &state, |t| &t.location.machine == machine_id);
        for i in here {
            if moved[i] || !state.things[i].settled {
                continue;
            }
            let Some(arc) = model.flows_from(&state.things[i].location).next() else {
                continue;
            };
            let src = state.things[i].location.clone();
            let dst = arc.dst.clone();
            {
                let t = &mut state.things[i];
                if dst.machine != src.machine {
                    t.arrival = state.next_arrival;
                    state.next_arrival += 1;
                }
                t.location = dst.clone();
                t.settled = false;
            }
            moved[i] = true;
            bump_tallies(&mut state, &dst);
            let t = &state.things[i];
            let (thing, thing_type, origin, metadata) =
                (t.id, t.thing_type.clone(), t.origin.clone(), t.payload.clone());
            events.push(Event {
                id: next_event_id(&mut state),
                label: format!("flow {src} -> {dst}"),
                kind: EventKind::Flow,
                time,
                region: vec![src, dst],
                arc: arc.id.to_string(),
                thing,
                thing_type,
                origin,
                metadata,
                counters: state.counters.clone(),
            });
        }
    }

    // trigger phase
    let snapshot = state.counters.clone();
    let pending = schedule(model, &state, |t| !t.settled);
    let mut created = Vec::new();
    for i in pending {
        let src = state.things[i].location.clone();
        for arc in model.triggers_from(&src) {
            let fires = arc.guard.as_ref().is_none_or(|g| g.eval(&snapshot));
            if !fires {
                let t = &state.things[i];
                let (thing, thing_type, origin, metadata) =
                    (t.id, t.thing_type.clone(), t.origin.clone(), t.payload.clone());
                events.push(Event {
                    id: next_event_id(&mut state),
                    label: format!("guard {src} -> {}", arc.dst),
                    kind: EventKind::Guard,
                    time,
                    region: vec![src.clone(), arc.dst.clone()],
                    arc: arc.id.to_string(),
                    thing,
                    thing_type,
                    origin,
                    metadata,
                    counters: state.counters.clone(),
                });
                continue;
            }
            let Some(target) = model.machine(&arc.dst.machine) else {
                continue;
            };
            let new = ThingInstance {
                id: ThingId(state.next_thing),
                thing_type: target.thing_type.clone(),
                location: arc.dst.clone(),
                payload: state.things[i].payload.clone(),
                stored: false,
                origin: Some(src.clone()),
                arrival: state.next_arrival,
                settled: false,
            };
            state.next_thing += 1;
            state.next_arrival += 1;
            bump_tallies(&mut state, &arc.dst);
            events.push(Event {
                id: next_event_id(&mut state),
                label: format!("trigger {src} -> {}", arc.dst),
                kind: EventKind::Trigger,
                time,
                region: vec![src.clone(), arc.dst.clone()],
                arc: arc.id.to_string(),
                thing: new.id,
                thing_type: new.thing_type.clone(),
                origin: new.origin.clone(),
                metadata: new.payload.clone(),
                counters: state.counters.clone(),
            });
            created.push(new);
        }
        state.things[i].settled = true;
    }
    state.things.extend(created);
    (state, events)
}

/// Steps until quiescence or `max_steps`, returning the final state and the
/// concatenated events.
pub fn run_state(model: &Model, mut state: SimState, max_steps: u64) -> (SimState, Trace) {
    let mut trace = Vec::new();
    for _ in 0..max_steps {
        if is_quiescent(model, &state) {
            break;
        }
        let (next, events) = step(model, state);
        state = next;
        trace.extend(events);
    }
    (state, trace)
}

pub fn run(model: &Model, state: SimState, max_steps: u64) -> Trace {
    run_state(model, state, max_steps).1
}
