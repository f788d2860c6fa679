//! What a b-thread declares at a synchronization point, and what it is
//! resumed with.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::prob::{ChoiceSpec, Outcome};
use crate::smt::{Assignment, Formula};

/// Discrete request/wait/block declaration.
#[derive(Debug, Clone, Default)]
pub struct SyncStatement {
    request: Vec<Event>,
    wait_for: EventSet,
    block: EventSet,
    local_reward: f64,
}

impl SyncStatement {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a requested event; duplicates are ignored.
    pub fn request(mut self, event: Event) -> Self {
        if !self.request.contains(&event) {
            self.request.push(event);
        }
        self
    }

    pub fn request_all(self, events: impl IntoIterator<Item = Event>) -> Self {
        events.into_iter().fold(self, SyncStatement::request)
    }

    pub fn wait_for(mut self, set: impl Into<EventSet>) -> Self {
        self.wait_for = set.into();
        self
    }

    pub fn block(mut self, set: impl Into<EventSet>) -> Self {
        self.block = set.into();
        self
    }

    pub fn reward(mut self, local_reward: f64) -> Self {
        self.local_reward = local_reward;
        self
    }

    pub fn requested(&self) -> &[Event] {
        &self.request
    }

    pub fn waited(&self) -> &EventSet {
        &self.wait_for
    }

    pub fn blocked(&self) -> &EventSet {
        &self.block
    }

    pub fn local_reward(&self) -> f64 {
        self.local_reward
    }

    pub fn is_blocking(&self, e: &Event) -> bool {
        self.block.contains(e)
    }

    /// Whether selecting `e` resumes the owner of this statement.
    pub fn wakeup(&self, e: &Event) -> bool {
        self.request.contains(e) || self.wait_for.contains(e)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.local_reward.is_finite() {
            return Err(format!("localReward {} is not finite", self.local_reward));
        }
        Ok(())
    }
}

impl PartialEq for SyncStatement {
    fn eq(&self, other: &Self) -> bool {
        self.request == other.request
            && self.wait_for == other.wait_for
            && self.block == other.block
            && self.local_reward.to_bits() == other.local_reward.to_bits()
    }
}

impl Eq for SyncStatement {}

impl Hash for SyncStatement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.request.hash(state);
        self.wait_for.hash(state);
        self.block.hash(state);
        self.local_reward.to_bits().hash(state);
    }
}

/// Request/wait/block declared as formulas over solver variables.
#[derive(Debug, Clone)]
pub struct ConstraintStatement {
    pub request: Formula,
    pub wait_for: Formula,
    pub block: Formula,
    pub local_reward: f64,
}

impl Default for ConstraintStatement {
    fn default() -> Self {
        Self { request: Formula::ff(), wait_for: Formula::ff(), block: Formula::ff(), local_reward: 0.0 }
    }
}

impl ConstraintStatement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn request(mut self, f: Formula) -> Self {
        self.request = f;
        self
    }

    pub fn wait_for(mut self, f: Formula) -> Self {
        self.wait_for = f;
        self
    }

    pub fn block(mut self, f: Formula) -> Self {
        self.block = f;
        self
    }

    pub fn reward(mut self, local_reward: f64) -> Self {
        self.local_reward = local_reward;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.local_reward.is_finite() {
            return Err(format!("localReward {} is not finite", self.local_reward));
        }
        for f in [&self.request, &self.wait_for, &self.block] {
            f.check_bool().map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

impl PartialEq for ConstraintStatement {
    fn eq(&self, other: &Self) -> bool {
        self.request == other.request
            && self.wait_for == other.wait_for
            && self.block == other.block
            && self.local_reward.to_bits() == other.local_reward.to_bits()
    }
}

impl Eq for ConstraintStatement {}

impl Hash for ConstraintStatement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.request.hash(state);
        self.wait_for.hash(state);
        self.block.hash(state);
        self.local_reward.to_bits().hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Statement {
    Sync(SyncStatement),
    Choice(ChoiceSpec),
    Constraint(ConstraintStatement),
}

impl Statement {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Statement::Sync(s) => s.validate(),
            Statement::Choice(c) => c.validate().map_err(|e| e.to_string()),
            Statement::Constraint(c) => c.validate(),
        }
    }

    pub fn as_sync(&self) -> Option<&SyncStatement> {
        match self {
            Statement::Sync(s) => Some(s),
            _ => None,
        }
    }

    pub fn local_reward(&self) -> f64 {
        match self {
            Statement::Sync(s) => s.local_reward,
            Statement::Constraint(c) => c.local_reward,
            Statement::Choice(_) => 0.0,
        }
    }
}

impl From<SyncStatement> for Statement {
    fn from(s: SyncStatement) -> Self {
        Statement::Sync(s)
    }
}

impl From<ChoiceSpec> for Statement {
    fn from(c: ChoiceSpec) -> Self {
        Statement::Choice(c)
    }
}

impl From<ConstraintStatement> for Statement {
    fn from(c: ConstraintStatement) -> Self {
        Statement::Constraint(c)
    }
}

/// The value a paused b-thread is resumed with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Resume {
    Event(Event),
    Outcome(Outcome),
    Assignment(Assignment),
}

impl Resume {
    pub fn event(&self) -> Option<&Event> {
        match self {
            Resume::Event(e) => Some(e),
            _ => None,
        }
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        match self {
            Resume::Outcome(o) => Some(o),
            _ => None,
        }
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            Resume::Assignment(a) => Some(a),
            _ => None,
        }
    }

    /// The event or assignment, failing on choice outcomes. Convenient in
    /// bodies that only expect a selection.
    pub fn expect_event(&self) -> Result<&Event> {
        self.event().ok_or_else(|| Error::Eval(format!("expected an event, resumed with {self:?}")))
    }
}
