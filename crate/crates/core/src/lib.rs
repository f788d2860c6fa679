//! Behavioral programming engine: b-threads synchronizing on requested,
//! waited-for and blocked events, with discrete and solver-backed
//! arbiters, probabilistic choice, model translation and analysis.

pub mod analysis;
pub mod bthread;
pub mod engine;
pub mod error;
pub mod event;
pub mod examples;
pub mod explore;
pub mod naming;
pub mod prism;
pub mod prob;
pub mod rlenv;
pub mod smt;
pub mod smv;
pub mod statement;

pub use bthread::{BProgram, BThread, Behavior, BodyResult, Instance, Snapshot, StateKey, Yielded};
pub use engine::{enabled_events, run, select_event, wakeup, Arbiter, Policy, RunConfig, Session, Terminal, Trace};
pub use error::{Error, Result};
pub use event::{Event, EventPredicate, EventSet, Scalar};
pub use prob::{expand_outcomes, sample, ChoiceSpec, Outcome};
pub use statement::{ConstraintStatement, Resume, Statement, SyncStatement};
