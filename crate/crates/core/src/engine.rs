//! The discrete arbiter loop.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bthread::{BProgram, Instance, StateKey};
use crate::error::{Error, Result};
use crate::event::Event;
use crate::prob;
use crate::statement::{Resume, Statement, SyncStatement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    /// No b-thread requested anything.
    Completed,
    /// Something was requested but every request was blocked.
    Deadlock,
    StepLimit,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Completed => "Completed",
            Terminal::Deadlock => "Deadlock",
            Terminal::StepLimit => "StepLimit",
        })
    }
}

/// An executed run. `T` is `Event` for discrete runs and `Assignment` for
/// solver runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T = Event> {
    pub events: Vec<T>,
    pub rewards: Vec<f64>,
    pub terminal: Terminal,
}

impl<T> Trace<T> {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    First,
    Random(u64),
    /// Earlier events in the ranking win; unranked events come last.
    Priority(Vec<Event>),
    /// Replays a fixed event sequence, failing if an event is not enabled.
    Scripted(Vec<Event>),
}

/// Stateful event selector built from a `Policy`.
#[derive(Debug, Clone)]
pub struct Arbiter {
    policy: Policy,
    rng: ChaCha8Rng,
    step: usize,
}

impl Arbiter {
    pub fn new(policy: Policy) -> Self {
        let seed = match &policy {
            Policy::Random(s) => *s,
            _ => 0,
        };
        Self { policy, rng: ChaCha8Rng::seed_from_u64(seed), step: 0 }
    }

    pub fn select(&mut self, enabled: &[Event]) -> Result<Event> {
        let step = self.step;
        self.step += 1;
        if let Policy::Scripted(script) = &self.policy {
            let expected =
                script.get(step).ok_or(Error::ScriptMismatch { step, expected: "<end of script>".into() })?;
            return if enabled.contains(expected) {
                Ok(expected.clone())
            } else {
                Err(Error::ScriptMismatch { step, expected: expected.to_string() })
            };
        }
        select_event(enabled, &self.policy, &mut self.rng)
    }
}

/// Picks one enabled event according to `policy`.
pub fn select_event<R: Rng + ?Sized>(enabled: &[Event], policy: &Policy, rng: &mut R) -> Result<Event> {
    if enabled.is_empty() {
        return Err(Error::EmptyEnabledSet);
    }
    let chosen = match policy {
        Policy::First | Policy::Scripted(_) => &enabled[0],
        Policy::Random(_) => &enabled[rng.gen_range(0..enabled.len())],
        Policy::Priority(ranking) => enabled
            .iter()
            .min_by_key(|e| ranking.iter().position(|r| r == *e).unwrap_or(usize::MAX))
            .expect("non-empty"),
    };
    Ok(chosen.clone())
}

/// Requested events blocked by no statement, in first-request order.
pub fn enabled_events<'a>(statements: impl IntoIterator<Item = &'a SyncStatement>) -> Vec<Event> {
    let statements: Vec<&SyncStatement> = statements.into_iter().collect();
    let mut out: Vec<Event> = Vec::new();
    for s in &statements {
        for e in s.requested() {
            if !out.contains(e) && !statements.iter().any(|b| b.is_blocking(e)) {
                out.push(e.clone());
            }
        }
    }
    out
}

pub fn wakeup(statement: &SyncStatement, e: &Event) -> bool {
    statement.wakeup(e)
}

/// Live state of a b-program: one paused instance per b-thread.
#[derive(Debug, Clone)]
pub struct Session {
    instances: Vec<Instance>,
}

impl Session {
    pub fn new(program: &BProgram) -> Result<Self> {
        let instances = program.threads().iter().map(|t| t.start()).collect::<Result<Vec<_>>>()?;
        Ok(Self { instances })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instances_mut(&mut self) -> &mut [Instance] {
        &mut self.instances
    }

    /// Index of the first b-thread (registration order) paused at a choice.
    pub fn pending_choice(&self) -> Option<usize> {
        self.instances.iter().position(|i| matches!(i.statement(), Some(Statement::Choice(_))))
    }

    /// Samples every pending choice, in registration order, until none remain.
    pub fn resolve_choices<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        while let Some(idx) = self.pending_choice() {
            let Some(Statement::Choice(spec)) = self.instances[idx].statement() else { unreachable!() };
            let name = self.instances[idx].name().to_string();
            let outcome =
                prob::sample(spec, rng).map_err(|e| Error::InvalidStatement { name, message: e.to_string() })?;
            self.instances[idx].resume(Resume::Outcome(outcome))?;
        }
        Ok(())
    }

    /// Sync statements of live threads; constraint statements are rejected.
    pub fn sync_statements(&self) -> Result<Vec<&SyncStatement>> {
        let mut out = Vec::new();
        for inst in &self.instances {
            match inst.statement() {
                None => {}
                Some(Statement::Sync(s)) => out.push(s),
                Some(Statement::Choice(_)) => {
                    return Err(Error::UnsupportedStatement(format!("unresolved choice in '{}'", inst.name())))
                }
                Some(Statement::Constraint(_)) => {
                    return Err(Error::UnsupportedStatement(format!(
                        "constraint statement from '{}' under the discrete arbiter",
                        inst.name()
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn enabled(&self) -> Result<Vec<Event>> {
        Ok(enabled_events(self.sync_statements()?))
    }

    pub fn has_requests(&self) -> Result<bool> {
        Ok(self.sync_statements()?.iter().any(|s| !s.requested().is_empty()))
    }

    /// Classification when nothing is enabled.
    pub fn stuck_terminal(&self) -> Result<Terminal> {
        Ok(if self.has_requests()? { Terminal::Deadlock } else { Terminal::Completed })
    }

    /// Sum of the active statements' local rewards.
    pub fn step_reward(&self) -> f64 {
        self.instances.iter().filter_map(Instance::statement).map(Statement::local_reward).sum()
    }

    /// Resumes every b-thread woken by `e`; the others keep their statement.
    pub fn fire(&mut self, e: &Event) -> Result<()> {
        for inst in &mut self.instances {
            let woken = matches!(inst.statement(), Some(Statement::Sync(s)) if s.wakeup(e));
            if woken {
                inst.resume(Resume::Event(e.clone()))?;
            }
        }
        Ok(())
    }

    pub fn keys(&self) -> Vec<StateKey> {
        self.instances.iter().map(Instance::key).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub policy: Policy,
    pub max_steps: usize,
    /// Seed for the RNG that resolves choices.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { policy: Policy::First, max_steps: 10_000, seed: 0 }
    }
}

/// Executes the synchronization loop.
pub fn run(program: &BProgram, config: &RunConfig) -> Result<Trace> {
    let mut session = Session::new(program)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut arbiter = Arbiter::new(config.policy.clone());
    let mut trace = Trace { events: Vec::new(), rewards: Vec::new(), terminal: Terminal::Completed };
    loop {
        session.resolve_choices(&mut rng)?;
        let enabled = session.enabled()?;
        if enabled.is_empty() {
            trace.terminal = session.stuck_terminal()?;
            return Ok(trace);
        }
        if trace.events.len() >= config.max_steps {
            trace.terminal = Terminal::StepLimit;
            return Ok(trace);
        }
        let e = arbiter.select(&enabled)?;
        trace.rewards.push(session.step_reward());
        session.fire(&e)?;
        trace.events.push(e);
    }
}
