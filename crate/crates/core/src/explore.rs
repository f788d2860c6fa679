//! Per-b-thread state graphs and their synchronous product.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use indexmap::IndexSet;
use rayon::prelude::*;
use serde_json::json;

use crate::bthread::{BProgram, BThread, Instance, StateKey};
use crate::engine::Terminal;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::prob;
use crate::statement::{Resume, Statement};

pub const DEFAULT_THREAD_STATE_CAP: usize = 1_000_000;
pub const DEFAULT_PRODUCT_NODE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ExploreConfig {
    pub thread_state_cap: usize,
    pub product_node_cap: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self { thread_state_cap: DEFAULT_THREAD_STATE_CAP, product_node_cap: DEFAULT_PRODUCT_NODE_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThreadState {
    /// Paused at a sync statement. `edges` maps universe event indices to
    /// successors, only for events that wake the thread.
    Sync { requested: Vec<usize>, blocked: Vec<usize>, edges: BTreeMap<usize, usize>, reward: f64 },
    /// Paused at a choice; probabilities sum to one.
    Choice { edges: Vec<(f64, usize)> },
    /// The thread has terminated.
    Final,
}

impl ThreadState {
    pub fn requested(&self) -> &[usize] {
        match self {
            ThreadState::Sync { requested, .. } => requested,
            _ => &[],
        }
    }

    pub fn blocked(&self) -> &[usize] {
        match self {
            ThreadState::Sync { blocked, .. } => blocked,
            _ => &[],
        }
    }

    pub fn is_choice(&self) -> bool {
        matches!(self, ThreadState::Choice { .. })
    }

    /// Successor on event `e`; threads not woken by `e` stay put.
    pub fn on_event(&self, here: usize, e: usize) -> usize {
        match self {
            ThreadState::Sync { edges, .. } => edges.get(&e).copied().unwrap_or(here),
            _ => here,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThreadGraph {
    pub name: String,
    pub states: Vec<ThreadState>,
}

impl ThreadGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn has_choices(&self) -> bool {
        self.states.iter().any(ThreadState::is_choice)
    }

    /// Universe indices this thread ever requests.
    pub fn ever_requested(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.states.iter().flat_map(|s| s.requested().iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn ever_blocked(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.states.iter().flat_map(|s| s.blocked().iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Explored graphs of every b-thread over a common event universe.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub universe: IndexSet<Event>,
    pub graphs: Vec<ThreadGraph>,
    /// Number of exploration rounds until the universe stopped growing.
    pub iterations: usize,
}

impl Exploration {
    pub fn event(&self, i: usize) -> &Event {
        &self.universe[i]
    }

    pub fn index_of(&self, e: &Event) -> Option<usize> {
        self.universe.get_index_of(e)
    }
}

/// Explores one b-thread by depth-first search over the given universe.
/// Events requested but missing from the universe are returned ordered by
/// the index of the first state requesting them.
pub fn explore_bthread(thread: &BThread, universe: &IndexSet<Event>, cap: usize) -> Result<(ThreadGraph, Vec<Event>)> {
    let mut ids: HashMap<StateKey, usize> = HashMap::new();
    let mut instances: Vec<Option<Instance>> = Vec::new();
    let mut states: Vec<Option<ThreadState>> = Vec::new();
    let mut final_id: Option<usize> = None;
    let mut fresh: BTreeMap<usize, Vec<Event>> = BTreeMap::new();

    let mut intern = |inst: Instance,
                      instances: &mut Vec<Option<Instance>>,
                      states: &mut Vec<Option<ThreadState>>,
                      stack: &mut Vec<usize>|
     -> Result<usize> {
        if inst.is_terminated() {
            if let Some(id) = final_id {
                return Ok(id);
            }
        } else if let Some(id) = ids.get(&inst.key()) {
            return Ok(*id);
        }
        let id = states.len();
        if id >= cap {
            return Err(Error::StateExplosion { what: "b-thread states", cap });
        }
        if thread.is_replay() {
            inst.check_determinism()?;
        }
        if inst.is_terminated() {
            final_id = Some(id);
            states.push(Some(ThreadState::Final));
            instances.push(None);
        } else {
            ids.insert(inst.key(), id);
            states.push(None);
            instances.push(Some(inst));
            stack.push(id);
        }
        Ok(id)
    };

    let mut stack = Vec::new();
    intern(thread.start()?, &mut instances, &mut states, &mut stack)?;
    while let Some(id) = stack.pop() {
        let inst = instances[id].take().expect("pending state has an instance");
        let state = match inst.statement().expect("live instance") {
            Statement::Constraint(_) => return Err(Error::ConstraintNotExplorable(thread.name().to_string())),
            Statement::Choice(spec) => {
                let outcomes = prob::expand_outcomes(spec)
                    .map_err(|e| Error::InvalidStatement { name: thread.name().to_string(), message: e.to_string() })?;
                let mut edges: Vec<(f64, usize)> = Vec::new();
                for (outcome, p) in outcomes {
                    let next = inst.resumed(Resume::Outcome(outcome))?;
                    let target = intern(next, &mut instances, &mut states, &mut stack)?;
                    match edges.iter_mut().find(|(_, t)| *t == target) {
                        Some(edge) => edge.0 += p,
                        None => edges.push((p, target)),
                    }
                }
                ThreadState::Choice { edges }
            }
            Statement::Sync(s) => {
                let mut requested = Vec::new();
                for e in s.requested() {
                    match universe.get_index_of(e) {
                        Some(i) => requested.push(i),
                        None => fresh.entry(id).or_default().push(e.clone()),
                    }
                }
                let blocked: Vec<usize> =
                    universe.iter().enumerate().filter(|(_, e)| s.is_blocking(e)).map(|(i, _)| i).collect();
                let mut edges = BTreeMap::new();
                for (i, e) in universe.iter().enumerate() {
                    if s.wakeup(e) {
                        let next = inst.resumed(Resume::Event(e.clone()))?;
                        edges.insert(i, intern(next, &mut instances, &mut states, &mut stack)?);
                    }
                }
                ThreadState::Sync { requested, blocked, edges, reward: s.local_reward() }
            }
        };
        states[id] = Some(state);
    }
    let states = states.into_iter().map(|s| s.expect("every state expanded")).collect();
    let fresh: IndexSet<Event> = fresh.into_values().flatten().collect();
    Ok((ThreadGraph { name: thread.name().to_string(), states }, fresh.into_iter().collect()))
}

/// Explores all b-threads, growing the universe until it is closed under
/// exploration.
pub fn explore_program(program: &BProgram, config: &ExploreConfig) -> Result<Exploration> {
    let extras: Vec<Event> = program.extra_events().to_vec();
    let mut discovered: IndexSet<Event> = IndexSet::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut working = discovered.clone();
        working.extend(extras.iter().cloned());
        let results: Vec<Result<(ThreadGraph, Vec<Event>)>> =
            program.threads().par_iter().map(|t| explore_bthread(t, &working, config.thread_state_cap)).collect();
        let mut graphs = Vec::with_capacity(results.len());
        let mut grew = false;
        for r in results {
            let (g, fresh) = r?;
            for e in fresh {
                grew |= discovered.insert(e);
            }
            graphs.push(g);
        }
        if !grew {
            // Requested events were all already present; reorder so that
            // discovered events precede undiscovered extras, and remap.
            let mut universe = discovered.clone();
            universe.extend(extras.iter().cloned());
            let graphs = if universe == working { graphs } else { remap(graphs, &working, &universe) };
            return Ok(Exploration { universe, graphs, iterations });
        }
    }
}

fn remap(graphs: Vec<ThreadGraph>, from: &IndexSet<Event>, to: &IndexSet<Event>) -> Vec<ThreadGraph> {
    let map: Vec<usize> = from.iter().map(|e| to.get_index_of(e).expect("same event set")).collect();
    graphs
        .into_iter()
        .map(|g| ThreadGraph {
            name: g.name,
            states: g
                .states
                .into_iter()
                .map(|s| match s {
                    ThreadState::Sync { requested, blocked, edges, reward } => {
                        let mut blocked: Vec<usize> = blocked.into_iter().map(|i| map[i]).collect();
                        blocked.sort_unstable();
                        ThreadState::Sync {
                            requested: requested.into_iter().map(|i| map[i]).collect(),
                            blocked,
                            edges: edges.into_iter().map(|(e, t)| (map[e], t)).collect(),
                            reward,
                        }
                    }
                    other => other,
                })
                .collect(),
        })
        .collect()
}

/// The fixed-point event universe of `program` with extra declared events.
pub fn event_universe(program: &BProgram, extra: &[Event]) -> Result<IndexSet<Event>> {
    let mut p = program.clone();
    for e in extra {
        p.declare_event(e.clone());
    }
    Ok(explore_program(&p, &ExploreConfig::default())?.universe)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Start,
    Running,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// The first component (registration order) at a choice state splits.
    Choice { thread: usize, edges: Vec<(f64, usize)> },
    /// Enabled events with their successors, in first-request order.
    Sync { edges: Vec<(usize, usize)> },
    /// Nothing enabled: a single transition into the DONE sink.
    Stuck { done: usize, terminal: Terminal },
    /// The DONE sink; every transition self-loops.
    Done { terminal: Terminal },
}

#[derive(Debug, Clone)]
pub struct ProductNode {
    pub tuple: Vec<u32>,
    pub phase: Phase,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct ProductGraph {
    pub exploration: Exploration,
    pub nodes: Vec<ProductNode>,
}

impl ProductGraph {
    pub fn start(&self) -> usize {
        0
    }

    pub fn universe(&self) -> &IndexSet<Event> {
        &self.exploration.universe
    }

    /// Nodes at which an event (or the terminal transition) is selected.
    pub fn sync_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Sync { .. } | NodeKind::Stuck { .. })).count()
    }

    pub fn thread_state(&self, node: usize, thread: usize) -> &ThreadState {
        let k = self.nodes[node].tuple[thread] as usize;
        &self.exploration.graphs[thread].states[k]
    }

    /// Enabled universe indices at a node (direct definition).
    pub fn enabled_at(&self, node: usize) -> Vec<usize> {
        enabled_indices(&self.exploration.graphs, &self.nodes[node].tuple)
    }

    /// Deterministic JSON text of the graph.
    pub fn to_json(&self) -> String {
        let name = |i: usize| self.exploration.universe[i].to_string();
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                let (kind, edges) = match &n.kind {
                    NodeKind::Choice { thread, edges } => (
                        json!({"choice": self.exploration.graphs[*thread].name}),
                        edges.iter().map(|(p, t)| json!({"p": p, "to": t})).collect::<Vec<_>>(),
                    ),
                    NodeKind::Sync { edges } => {
                        (json!("sync"), edges.iter().map(|(e, t)| json!({"event": name(*e), "to": t})).collect())
                    }
                    NodeKind::Stuck { done, terminal } => {
                        (json!({"stuck": terminal.to_string()}), vec![json!({"event": "BPROGRAM_DONE", "to": done})])
                    }
                    NodeKind::Done { terminal } => (json!({"done": terminal.to_string()}), vec![]),
                };
                json!({"id": id, "tuple": n.tuple, "phase": format!("{:?}", n.phase), "kind": kind, "edges": edges})
            })
            .collect();
        let doc = json!({
            "universe": self.exploration.universe.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "threads": self.exploration.graphs.iter().map(|g| json!({"name": g.name, "states": g.len()})).collect::<Vec<_>>(),
            "nodes": nodes,
        });
        let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
        out.push('\n');
        out
    }

    /// Human-readable summary line.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} nodes, {} sync nodes, {} events, threads:",
            self.nodes.len(),
            self.sync_node_count(),
            self.exploration.universe.len()
        );
        for g in &self.exploration.graphs {
            let _ = write!(s, " {}={}", g.name, g.len());
        }
        s
    }
}

fn enabled_indices(graphs: &[ThreadGraph], tuple: &[u32]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (t, g) in graphs.iter().enumerate() {
        for &e in g.states[tuple[t] as usize].requested() {
            if out.contains(&e) {
                continue;
            }
            let blocked = graphs.iter().enumerate().any(|(u, h)| h.states[tuple[u] as usize].blocked().contains(&e));
            if !blocked {
                out.push(e);
            }
        }
    }
    out
}

struct Builder {
    index: HashMap<(Vec<u32>, Phase), usize>,
    keys: Vec<(Vec<u32>, Phase)>,
    queue: VecDeque<usize>,
    cap: usize,
}

impl Builder {
    fn intern(&mut self, key: (Vec<u32>, Phase)) -> Result<usize> {
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let i = self.keys.len();
        if i >= self.cap {
            return Err(Error::StateExplosion { what: "product nodes", cap: self.cap });
        }
        self.index.insert(key.clone(), i);
        self.keys.push(key);
        self.queue.push_back(i);
        Ok(i)
    }
}

/// Composes the explored graphs into the product LTS/MDP.
pub fn build_product(exploration: &Exploration, cap: usize) -> Result<ProductGraph> {
    let graphs = &exploration.graphs;
    let mut b = Builder { index: HashMap::new(), keys: Vec::new(), queue: VecDeque::new(), cap };
    b.intern((vec![0; graphs.len()], Phase::Start))?;
    let mut kinds: Vec<Option<NodeKind>> = Vec::new();
    while let Some(id) = b.queue.pop_front() {
        let (tuple, phase) = b.keys[id].clone();
        let kind = expand(graphs, &tuple, phase, &mut b)?;
        if kinds.len() <= id {
            kinds.resize(id + 1, None);
        }
        kinds[id] = Some(kind);
    }
    let nodes = b
        .keys
        .into_iter()
        .zip(kinds)
        .map(|((tuple, phase), kind)| ProductNode { tuple, phase, kind: kind.expect("expanded") })
        .collect();
    Ok(ProductGraph { exploration: exploration.clone(), nodes })
}

fn any_request(graphs: &[ThreadGraph], tuple: &[u32]) -> bool {
    graphs.iter().enumerate().any(|(t, g)| !g.states[tuple[t] as usize].requested().is_empty())
}

fn expand(graphs: &[ThreadGraph], tuple: &[u32], phase: Phase, b: &mut Builder) -> Result<NodeKind> {
    let classify = |tuple: &[u32]| if any_request(graphs, tuple) { Terminal::Deadlock } else { Terminal::Completed };
    if phase == Phase::Done {
        return Ok(NodeKind::Done { terminal: classify(tuple) });
    }
    if let Some(t) = (0..graphs.len()).find(|&t| graphs[t].states[tuple[t] as usize].is_choice()) {
        let ThreadState::Choice { edges } = &graphs[t].states[tuple[t] as usize] else { unreachable!() };
        let mut out = Vec::with_capacity(edges.len());
        for &(p, target) in edges {
            let mut next = tuple.to_vec();
            next[t] = target as u32;
            out.push((p, b.intern((next, phase))?));
        }
        return Ok(NodeKind::Choice { thread: t, edges: out });
    }
    let enabled = enabled_indices(graphs, tuple);
    if enabled.is_empty() {
        let done = b.intern((tuple.to_vec(), Phase::Done))?;
        return Ok(NodeKind::Stuck { done, terminal: classify(tuple) });
    }
    let mut edges = Vec::with_capacity(enabled.len());
    for e in enabled {
        let next: Vec<u32> = graphs
            .iter()
            .enumerate()
            .map(|(t, g)| g.states[tuple[t] as usize].on_event(tuple[t] as usize, e) as u32)
            .collect();
        edges.push((e, b.intern((next, Phase::Running))?));
    }
    Ok(NodeKind::Sync { edges })
}

/// Explores `program` and builds its product with default caps.
pub fn product_of(program: &BProgram) -> Result<ProductGraph> {
    let config = ExploreConfig::default();
    let exploration = explore_program(program, &config)?;
    build_product(&exploration, config.product_node_cap)
}
