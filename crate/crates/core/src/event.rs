//! Events and event sets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// A payload value attached to an event or produced by a choice.
#[derive(Debug, Clone)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl Scalar {
    fn rank(&self) -> u8 {
        match self {
            Scalar::Bool(_) => 0,
            Scalar::Int(_) => 1,
            Scalar::Real(_) => 2,
            Scalar::Str(_) => 3,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Scalar::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Real(a), Scalar::Real(b)) => a.total_cmp(b),
            (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Scalar::Bool(v) => v.hash(state),
            Scalar::Int(v) => v.hash(state),
            Scalar::Real(v) => v.to_bits().hash(state),
            Scalar::Str(v) => v.hash(state),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(v) => write!(f, "{v}"),
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Real(v) => write!(f, "{v}"),
            Scalar::Str(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Real(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Str(v)
    }
}

/// A named occurrence, optionally carrying an ordered payload.
///
/// Equality, ordering and hashing are structural on `(name, payload)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    name: Arc<str>,
    payload: BTreeMap<String, Scalar>,
}

impl Event {
    /// Creates a payload-free event.
    ///
    /// Panics if `name` is empty.
    pub fn new(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        assert!(!name.is_empty(), "event name must be non-empty");
        Self { name: Arc::from(name), payload: BTreeMap::new() }
    }

    pub fn with_payload<K, V>(name: impl AsRef<str>, payload: impl IntoIterator<Item = (K, V)>) -> Self
    where
        K: Into<String>,
        V: Into<Scalar>,
    {
        let mut event = Self::new(name);
        event.payload = payload.into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        event
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn payload(&self) -> &BTreeMap<String, Scalar> {
        &self.payload
    }

    pub fn get(&self, key: &str) -> Option<&Scalar> {
        self.payload.get(key)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.payload.is_empty() {
            f.write_str("(")?;
            for (i, (k, v)) in self.payload.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{k}={v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A named membership test. Two predicates are considered equal when their
/// names are equal, so a name must identify a single function.
#[derive(Clone)]
pub struct EventPredicate {
    name: Arc<str>,
    test: Arc<dyn Fn(&Event) -> bool + Send + Sync>,
}

impl EventPredicate {
    pub fn new(name: impl AsRef<str>, test: impl Fn(&Event) -> bool + Send + Sync + 'static) -> Self {
        Self { name: Arc::from(name.as_ref()), test: Arc::new(test) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn test(&self, event: &Event) -> bool {
        (self.test)(event)
    }
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.name)
    }
}

/// A (possibly infinite) set of events.
#[derive(Debug, Clone)]
pub enum EventSet {
    Explicit(BTreeSet<Event>),
    All,
    Predicate(EventPredicate),
    Union(Vec<EventSet>),
    Complement(Box<EventSet>),
}

impl EventSet {
    pub fn empty() -> Self {
        EventSet::Explicit(BTreeSet::new())
    }

    pub fn all() -> Self {
        EventSet::All
    }

    pub fn predicate(name: impl AsRef<str>, test: impl Fn(&Event) -> bool + Send + Sync + 'static) -> Self {
        EventSet::Predicate(EventPredicate::new(name, test))
    }

    /// Every event whose name is `name`, regardless of payload.
    pub fn named(name: &str) -> Self {
        let owned = name.to_string();
        EventSet::predicate(format!("named:{name}"), move |e| e.name() == owned)
    }

    pub fn complement(self) -> Self {
        EventSet::Complement(Box::new(self))
    }

    pub fn contains(&self, event: &Event) -> bool {
        match self {
            EventSet::Explicit(set) => set.contains(event),
            EventSet::All => true,
            EventSet::Predicate(p) => p.test(event),
            EventSet::Union(parts) => parts.iter().any(|p| p.contains(event)),
            EventSet::Complement(inner) => !inner.contains(event),
        }
    }

    /// True when the set is syntactically the empty explicit set.
    pub fn is_trivially_empty(&self) -> bool {
        match self {
            EventSet::Explicit(set) => set.is_empty(),
            EventSet::Union(parts) => parts.iter().all(EventSet::is_trivially_empty),
            _ => false,
        }
    }
}

impl Default for EventSet {
    fn default() -> Self {
        EventSet::empty()
    }
}

impl PartialEq for EventSet {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (EventSet::Explicit(a), EventSet::Explicit(b)) => a == b,
            (EventSet::All, EventSet::All) => true,
            (EventSet::Predicate(a), EventSet::Predicate(b)) => a.name == b.name,
            (EventSet::Union(a), EventSet::Union(b)) => a == b,
            (EventSet::Complement(a), EventSet::Complement(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for EventSet {}

impl Hash for EventSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            EventSet::Explicit(set) => set.hash(state),
            EventSet::All => {}
            EventSet::Predicate(p) => p.name.hash(state),
            EventSet::Union(parts) => parts.hash(state),
            EventSet::Complement(inner) => inner.hash(state),
        }
    }
}

impl From<Event> for EventSet {
    fn from(e: Event) -> Self {
        EventSet::Explicit(BTreeSet::from([e]))
    }
}

impl From<Vec<Event>> for EventSet {
    fn from(events: Vec<Event>) -> Self {
        EventSet::Explicit(events.into_iter().collect())
    }
}

impl From<BTreeSet<Event>> for EventSet {
    fn from(events: BTreeSet<Event>) -> Self {
        EventSet::Explicit(events)
    }
}

impl FromIterator<Event> for EventSet {
    fn from_iter<T: IntoIterator<Item = Event>>(iter: T) -> Self {
        EventSet::Explicit(iter.into_iter().collect())
    }
}
