//! Verdict engines over the product graph: safety by breadth-first search,
//! reachability probabilities by value iteration, and Monte Carlo estimates.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bthread::BProgram;
use crate::engine::{run, Policy, RunConfig, Trace};
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::explore::{NodeKind, ProductGraph, ThreadState};

type NodePredicate = Box<dyn Fn(&ProductGraph, usize) -> bool + Send + Sync>;
type PairPredicate = Box<dyn Fn(&Event, &Event) -> bool + Send + Sync>;

/// What counts as a violation.
pub enum Bad {
    /// Firing any event of the set.
    Event(EventSet),
    /// Reaching a node satisfying the predicate.
    Node(NodePredicate),
    /// Firing `next` right after `prev`.
    Consecutive(PairPredicate),
}

impl Bad {
    pub fn event(set: impl Into<EventSet>) -> Self {
        Bad::Event(set.into())
    }

    pub fn node(f: impl Fn(&ProductGraph, usize) -> bool + Send + Sync + 'static) -> Self {
        Bad::Node(Box::new(f))
    }

    pub fn consecutive(f: impl Fn(&Event, &Event) -> bool + Send + Sync + 'static) -> Self {
        Bad::Consecutive(Box::new(f))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    /// Shortest event sequence leading to the violation.
    pub counterexample: Option<Vec<Event>>,
}

impl Verdict {
    /// A policy that replays the counterexample through [`run`].
    pub fn replay_policy(&self) -> Option<Policy> {
        self.counterexample.clone().map(Policy::Scripted)
    }
}

/// Successors of a node with the universe index of the fired event, if any.
fn successors(pg: &ProductGraph, node: usize) -> Vec<(Option<usize>, usize)> {
    match &pg.nodes[node].kind {
        NodeKind::Choice { edges, .. } => edges.iter().map(|(_, t)| (None, *t)).collect(),
        NodeKind::Sync { edges } => edges.iter().map(|(e, t)| (Some(*e), *t)).collect(),
        NodeKind::Stuck { done, .. } => vec![(None, *done)],
        NodeKind::Done { .. } => Vec::new(),
    }
}

/// Breadth-first search from START for the shortest violation.
pub fn check_safety(pg: &ProductGraph, bad: &Bad) -> Verdict {
    let u = pg.universe();
    // Search states carry the last fired event for consecutive predicates.
    type Key = (usize, Option<usize>);
    let memory = matches!(bad, Bad::Consecutive(_));
    let start: Key = (pg.start(), None);
    let mut parent: HashMap<Key, Option<(Key, Option<usize>)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    let path_to = |parent: &HashMap<Key, Option<(Key, Option<usize>)>>, mut k: Key, last: Option<usize>| {
        let mut events: Vec<Event> = last.map(|e| u[e].clone()).into_iter().collect();
        while let Some(Some((prev, e))) = parent.get(&k) {
            if let Some(e) = e {
                events.push(u[*e].clone());
            }
            k = *prev;
        }
        events.reverse();
        events
    };
    while let Some(key) = queue.pop_front() {
        let (node, last) = key;
        if let Bad::Node(pred) = bad {
            if pred(pg, node) {
                return Verdict { holds: false, counterexample: Some(path_to(&parent, key, None)) };
            }
        }
        for (e, to) in successors(pg, node) {
            let violated = match (bad, e) {
                (Bad::Event(set), Some(e)) => set.contains(&u[e]),
                (Bad::Consecutive(pred), Some(e)) => last.is_some_and(|l| pred(&u[l], &u[e])),
                _ => false,
            };
            if violated {
                return Verdict { holds: false, counterexample: Some(path_to(&parent, key, e)) };
            }
            let next: Key = (to, if memory { e.or(last) } else { None });
            if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(next) {
                slot.insert(Some((key, e)));
                queue.push_back(next);
            }
        }
    }
    Verdict { holds: true, counterexample: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbResult {
    pub value: f64,
    pub mode: Mode,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ValueIterationConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ValueIterationConfig {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 1_000_000 }
    }
}

/// Nodes from which some scheduler avoids `target` forever.
fn can_avoid(pg: &ProductGraph, is_target: &[bool]) -> Vec<bool> {
    let mut avoid = vec![true; pg.nodes.len()];
    loop {
        let mut changed = false;
        for (i, n) in pg.nodes.iter().enumerate() {
            if !avoid[i] {
                continue;
            }
            let ok = match &n.kind {
                NodeKind::Choice { edges, .. } => edges.iter().all(|(p, t)| *p == 0.0 || avoid[*t]),
                NodeKind::Sync { edges } => edges.iter().any(|(e, t)| !is_target[*e] && avoid[*t]),
                NodeKind::Stuck { .. } | NodeKind::Done { .. } => true,
            };
            if !ok {
                avoid[i] = false;
                changed = true;
            }
        }
        if !changed {
            return avoid;
        }
    }
}

/// Probability of firing an event of `target`, maximized or minimized over
/// the event selection.
pub fn reach_probability(
    pg: &ProductGraph,
    target: &EventSet,
    mode: Mode,
    cfg: &ValueIterationConfig,
) -> Result<ProbResult> {
    let is_target: Vec<bool> = pg.universe().iter().map(|e| target.contains(e)).collect();
    let fixed_zero = match mode {
        Mode::Min => can_avoid(pg, &is_target),
        Mode::Max => vec![false; pg.nodes.len()],
    };
    let mut v = vec![0.0f64; pg.nodes.len()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=cfg.max_iterations {
        residual = 0.0;
        // In-place sweeps in reverse BFS order reach deep nodes first.
        for i in (0..pg.nodes.len()).rev() {
            if fixed_zero[i] {
                continue;
            }
            let new = match &pg.nodes[i].kind {
                NodeKind::Choice { edges, .. } => edges.iter().map(|(p, t)| p * v[*t]).sum(),
                NodeKind::Sync { edges } => {
                    let vals = edges.iter().map(|(e, t)| if is_target[*e] { 1.0 } else { v[*t] });
                    match mode {
                        Mode::Max => vals.fold(0.0, f64::max),
                        Mode::Min => vals.fold(1.0, f64::min),
                    }
                }
                NodeKind::Stuck { .. } | NodeKind::Done { .. } => 0.0,
            };
            residual = residual.max((new - v[i]).abs());
            v[i] = new;
        }
        if residual < cfg.tolerance {
            return Ok(ProbResult { value: v[pg.start()], mode, iterations: iteration, residual });
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iterations, residual })
}

/// Sum of the local rewards of the threads' statements at a node.
pub fn node_reward(pg: &ProductGraph, node: usize) -> f64 {
    (0..pg.exploration.graphs.len())
        .map(|t| match pg.thread_state(node, t) {
            ThreadState::Sync { reward, .. } => *reward,
            _ => 0.0,
        })
        .sum()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `i` derived from the estimate's seed.
pub fn run_seed(seed: u64, i: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ i as u64)
}

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub runs: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { runs: 10_000, seed: 0, max_steps: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub hits: Vec<bool>,
    pub elapsed_per_run: Duration,
}

impl SampleEstimate {
    fn from_hits(hits: Vec<bool>, elapsed: Duration) -> Self {
        let n = hits.len() as f64;
        let mean = hits.iter().filter(|h| **h).count() as f64 / n;
        let standard_error = (mean * (1.0 - mean) / n).sqrt();
        let elapsed_per_run = elapsed / hits.len() as u32;
        Self { mean, standard_error, hits, elapsed_per_run }
    }

    /// Running statistics: `run_index,hit,cumulative_mean,cumulative_SE`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run_index,hit,cumulative_mean,cumulative_SE\n");
        let mut count = 0usize;
        for (i, hit) in self.hits.iter().enumerate() {
            count += usize::from(*hit);
            let n = (i + 1) as f64;
            let mean = count as f64 / n;
            let se = (mean * (1.0 - mean) / n).sqrt();
            let _ = writeln!(out, "{i},{},{mean},{se}", u8::from(*hit));
        }
        out
    }
}

fn hit(trace: &Trace, target: &EventSet) -> bool {
    trace.events.iter().any(|e| target.contains(e))
}

/// Runs the program `cfg.runs` times with uniformly random event selection
/// and reports the fraction of runs firing an event of `target`.
pub fn sample_estimate(program: &BProgram, target: &EventSet, cfg: &SampleConfig) -> Result<SampleEstimate> {
    if cfg.runs == 0 {
        return Err(Error::InvalidParameters("sampling needs at least one run".into()));
    }
    let started = Instant::now();
    let hits = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let seed = run_seed(cfg.seed, i);
            let rc = RunConfig { policy: Policy::Random(seed), max_steps: cfg.max_steps, seed };
            run(program, &rc).map(|t| hit(&t, target)).map_err(|e| Error::Run { index: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(SampleEstimate::from_hits(hits, started.elapsed()))
}
