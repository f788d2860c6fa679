//! B-thread bodies, their live instances, and b-programs.
//!
//! A body is either a *behavior* over an explicit, clonable state, or a
//! *replay* function that recomputes the current statement from the full
//! resume history. Both give exploration a way to fork a thread without
//! cloning a running coroutine.

use std::any::{Any, TypeId};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::statement::{Resume, Statement};

/// Failure reported by a body; the engine attaches the b-thread name.
pub type BodyResult<T> = std::result::Result<T, String>;

/// A b-thread written as an explicit state machine.
pub trait Behavior: Send + Sync + 'static {
    type State: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static;

    fn initial(&self) -> Self::State;

    /// Statement at `state`, or `None` once the thread has terminated.
    fn statement(&self, state: &Self::State) -> BodyResult<Option<Statement>>;

    fn resume(&self, state: &Self::State, with: &Resume) -> BodyResult<Self::State>;
}

/// A b-thread given as a pure function of its resume history.
pub trait ReplayBody: Send + Sync + 'static {
    fn replay(&self, history: &[Resume]) -> BodyResult<Option<Yielded>>;
}

/// One yield of a replayed body. `locals`, when provided, lets exploration
/// merge states reached through different histories.
#[derive(Debug, Clone)]
pub struct Yielded {
    pub statement: Statement,
    pub locals: Option<Snapshot>,
}

impl Yielded {
    pub fn new(statement: impl Into<Statement>) -> Self {
        Self { statement: statement.into(), locals: None }
    }

    pub fn with_locals<T>(statement: impl Into<Statement>, locals: T) -> Self
    where
        T: Eq + Hash + fmt::Debug + Send + Sync + 'static,
    {
        Self { statement: statement.into(), locals: Some(Snapshot::new(locals)) }
    }
}

impl<F> ReplayBody for F
where
    F: Fn(&[Resume]) -> BodyResult<Option<Yielded>> + Send + Sync + 'static,
{
    fn replay(&self, history: &[Resume]) -> BodyResult<Option<Yielded>> {
        self(history)
    }
}

pub trait DynState: Send + Sync + fmt::Debug {
    fn as_any(&self) -> &dyn Any;
    fn dyn_eq(&self, other: &dyn DynState) -> bool;
    fn dyn_hash(&self, state: &mut dyn Hasher);
}

impl<T> DynState for T
where
    T: Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    fn as_any(&self) -> &dyn Any {
        self
    }

    fn dyn_eq(&self, other: &dyn DynState) -> bool {
        other.as_any().downcast_ref::<T>().is_some_and(|o| o == self)
    }

    fn dyn_hash(&self, mut state: &mut dyn Hasher) {
        TypeId::of::<T>().hash(&mut state);
        self.hash(&mut state);
    }
}

/// Type-erased, shareable state capture.
#[derive(Clone)]
pub struct Snapshot(Arc<dyn DynState>);

impl Snapshot {
    pub fn new<T>(value: T) -> Self
    where
        T: Eq + Hash + fmt::Debug + Send + Sync + 'static,
    {
        Snapshot(Arc::new(value))
    }

    pub fn downcast<T: 'static>(&self) -> Option<&T> {
        self.0.as_any().downcast_ref()
    }
}

impl PartialEq for Snapshot {
    fn eq(&self, other: &Self) -> bool {
        self.0.dyn_eq(other.0.as_ref())
    }
}

impl Eq for Snapshot {}

impl Hash for Snapshot {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.dyn_hash(state);
    }
}

impl fmt::Debug for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

trait ErasedBehavior: Send + Sync {
    fn initial(&self) -> Snapshot;
    fn statement(&self, s: &Snapshot) -> BodyResult<Option<Statement>>;
    fn resume(&self, s: &Snapshot, with: &Resume) -> BodyResult<Snapshot>;
}

struct Erased<B>(B);

impl<B: Behavior> Erased<B> {
    fn state<'a>(&self, s: &'a Snapshot) -> &'a B::State {
        s.downcast::<B::State>().expect("snapshot produced by this behavior")
    }
}

impl<B: Behavior> ErasedBehavior for Erased<B> {
    fn initial(&self) -> Snapshot {
        Snapshot::new(self.0.initial())
    }

    fn statement(&self, s: &Snapshot) -> BodyResult<Option<Statement>> {
        self.0.statement(self.state(s))
    }

    fn resume(&self, s: &Snapshot, with: &Resume) -> BodyResult<Snapshot> {
        self.0.resume(self.state(s), with).map(Snapshot::new)
    }
}

/// A behavior assembled from an initial state and two closures.
pub struct FnBehavior<S, FS, FR> {
    initial: S,
    statement: FS,
    resume: FR,
}

impl<S, FS, FR> Behavior for FnBehavior<S, FS, FR>
where
    S: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
    FS: Fn(&S) -> BodyResult<Option<Statement>> + Send + Sync + 'static,
    FR: Fn(&S, &Resume) -> BodyResult<S> + Send + Sync + 'static,
{
    type State = S;

    fn initial(&self) -> S {
        self.initial.clone()
    }

    fn statement(&self, state: &S) -> BodyResult<Option<Statement>> {
        (self.statement)(state)
    }

    fn resume(&self, state: &S, with: &Resume) -> BodyResult<S> {
        (self.resume)(state, with)
    }
}

#[derive(Clone)]
enum Body {
    Snapshot(Arc<dyn ErasedBehavior>),
    Replay(Arc<dyn ReplayBody>),
}

#[derive(Clone)]
pub struct BThread {
    name: Arc<str>,
    body: Body,
}

impl BThread {
    pub fn new<B: Behavior>(name: impl AsRef<str>, behavior: B) -> Self {
        Self { name: Arc::from(name.as_ref()), body: Body::Snapshot(Arc::new(Erased(behavior))) }
    }

    pub fn from_fns<S, FS, FR>(name: impl AsRef<str>, initial: S, statement: FS, resume: FR) -> Self
    where
        S: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
        FS: Fn(&S) -> BodyResult<Option<Statement>> + Send + Sync + 'static,
        FR: Fn(&S, &Resume) -> BodyResult<S> + Send + Sync + 'static,
    {
        Self::new(name, FnBehavior { initial, statement, resume })
    }

    pub fn replay(name: impl AsRef<str>, body: impl ReplayBody) -> Self {
        Self { name: Arc::from(name.as_ref()), body: Body::Replay(Arc::new(body)) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.body, Body::Replay(_))
    }

    pub fn start(&self) -> Result<Instance> {
        Instance::start(self)
    }

    fn fail(&self, message: String) -> Error {
        Error::BThread { name: self.name.to_string(), message }
    }
}

impl fmt::Debug for BThread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BThread({})", self.name)
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Snap(Snapshot),
    Replay { history: Vec<Resume>, locals: Option<Snapshot> },
}

/// Identity of a b-thread state, used to merge states during exploration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StateKey {
    Snap(Snapshot),
    Locals(Box<Statement>, Snapshot),
    History(Vec<Resume>),
}

/// A running b-thread paused at a yield (or terminated).
#[derive(Clone, Debug)]
pub struct Instance {
    thread: BThread,
    repr: Repr,
    statement: Option<Statement>,
}

impl Instance {
    pub fn start(thread: &BThread) -> Result<Self> {
        let mut inst = match &thread.body {
            Body::Snapshot(b) => Instance { thread: thread.clone(), repr: Repr::Snap(b.initial()), statement: None },
            Body::Replay(_) => Instance {
                thread: thread.clone(),
                repr: Repr::Replay { history: Vec::new(), locals: None },
                statement: None,
            },
        };
        inst.refresh()?;
        Ok(inst)
    }

    fn compute(&self) -> Result<(Option<Statement>, Option<Snapshot>)> {
        let t = &self.thread;
        let (stmt, locals) = match (&t.body, &self.repr) {
            (Body::Snapshot(b), Repr::Snap(s)) => (b.statement(s).map_err(|m| t.fail(m))?, None),
            (Body::Replay(b), Repr::Replay { history, .. }) => match b.replay(history).map_err(|m| t.fail(m))? {
                Some(y) => (Some(y.statement), y.locals),
                None => (None, None),
            },
            _ => unreachable!("representation matches body kind"),
        };
        if let Some(s) = &stmt {
            s.validate().map_err(|message| Error::InvalidStatement { name: t.name.to_string(), message })?;
        }
        Ok((stmt, locals))
    }

    fn refresh(&mut self) -> Result<()> {
        let (stmt, locals) = self.compute()?;
        if let Repr::Replay { locals: l, .. } = &mut self.repr {
            *l = locals;
        }
        self.statement = stmt;
        Ok(())
    }

    pub fn thread(&self) -> &BThread {
        &self.thread
    }

    pub fn name(&self) -> &str {
        self.thread.name()
    }

    pub fn statement(&self) -> Option<&Statement> {
        self.statement.as_ref()
    }

    pub fn is_terminated(&self) -> bool {
        self.statement.is_none()
    }

    /// Advances past the current yield. Resuming a terminated thread is a
    /// no-op.
    pub fn resume(&mut self, with: Resume) -> Result<()> {
        if self.statement.is_none() {
            return Ok(());
        }
        match (&self.thread.body, &mut self.repr) {
            (Body::Snapshot(b), Repr::Snap(s)) => {
                *s = b.resume(s, &with).map_err(|m| self.thread.fail(m))?;
            }
            (Body::Replay(_), Repr::Replay { history, .. }) => history.push(with),
            _ => unreachable!("representation matches body kind"),
        }
        self.refresh()
    }

    pub fn resumed(&self, with: Resume) -> Result<Self> {
        let mut next = self.clone();
        next.resume(with)?;
        Ok(next)
    }

    /// Recomputes the statement from scratch and compares it with the one
    /// recorded.
    pub fn check_determinism(&self) -> Result<()> {
        let (stmt, _) = self.compute()?;
        if stmt != self.statement {
            return Err(Error::NonDeterministicBThread(self.name().to_string()));
        }
        Ok(())
    }

    pub fn key(&self) -> StateKey {
        match &self.repr {
            Repr::Snap(s) => StateKey::Snap(s.clone()),
            Repr::Replay { history, locals } => match (locals, &self.statement) {
                (Some(l), Some(stmt)) => StateKey::Locals(Box::new(stmt.clone()), l.clone()),
                _ => StateKey::History(history.clone()),
            },
        }
    }

    pub fn snapshot(&self) -> Option<&Snapshot> {
        match &self.repr {
            Repr::Snap(s) => Some(s),
            Repr::Replay { locals, .. } => locals.as_ref(),
        }
    }
}

/// A set of b-threads in registration order.
#[derive(Clone, Debug, Default)]
pub struct BProgram {
    name: String,
    threads: Vec<BThread>,
    extra_events: Vec<Event>,
}

impl BProgram {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn from_threads(name: impl Into<String>, threads: impl IntoIterator<Item = BThread>) -> Result<Self> {
        let mut p = Self::new(name);
        for t in threads {
            p.add(t)?;
        }
        Ok(p)
    }

    pub fn add(&mut self, thread: BThread) -> Result<()> {
        if self.threads.iter().any(|t| t.name() == thread.name()) {
            return Err(Error::DuplicateBThread(thread.name().to_string()));
        }
        self.threads.push(thread);
        Ok(())
    }

    /// Declares an event that belongs to the universe even if never requested.
    pub fn declare_event(&mut self, e: Event) {
        if !self.extra_events.contains(&e) {
            self.extra_events.push(e);
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn threads(&self) -> &[BThread] {
        &self.threads
    }

    pub fn extra_events(&self) -> &[Event] {
        &self.extra_events
    }
}
