//! Flowthing machine (FM) modeling toolkit.
//!
//! The crate is organised around the FM graph ([`model::Model`]): spheres hold
//! machines, machines hold a subset of the seven stages, and things move along
//! solid flow arcs or spawn new things through dashed trigger arcs. On top of
//! that graph sit a static validator, a Graphviz emitter, a textual syntax, a
//! deterministic token simulator, the PII calculus and privacy policy checks.

pub mod diagnostic;
pub mod dot;
pub mod dsl;
pub mod guard;
pub mod ids;
pub mod model;
pub mod pii;
pub mod policy;
pub mod sim;
pub mod validate;

pub use diagnostic::{Diagnostic, Severity, SourceSpan};
pub use guard::{CmpOp, Counters, GuardExpr};
pub use ids::{ArcId, MachineId, SphereId, ThingTypeId};
pub use model::{
    assemble, AssembleError, AssemblyIssue, Declaration, FlowArc, Location, Machine, Model, Sphere,
    SphereKind, Stage, ThingType, TriggerArc,
};
pub use validate::{validate, validate_with, RuleId, ValidationReport, Violation};
