//! Shared oracles: interpreters for the emitted models and brute-force
//! enumerations that do not go through the analysis code.
#![allow(dead_code)]

pub mod prism;
pub mod smv;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use bpk_core::analysis::Mode;
use bpk_core::explore::{NodeKind, Phase, ProductGraph};
use bpk_core::naming::{sanitize, Dialect};
use bpk_core::prob::expand_outcomes;
use bpk_core::{BProgram, Event, EventSet, Resume, Session, Statement, Terminal};

/// Every maximal trace of the discrete engine, by depth-first search over
/// live sessions with every enabled event tried in turn. Choices are
/// expanded, so identical event sequences may appear more than once.
pub fn maximal_traces(program: &BProgram, max_len: usize) -> Vec<(Vec<Event>, Terminal)> {
    let mut out = Vec::new();
    let mut stack = vec![(Session::new(program).unwrap(), Vec::new())];
    while let Some((s, trace)) = stack.pop() {
        if let Some(i) = s.pending_choice() {
            let Some(Statement::Choice(spec)) = s.instances()[i].statement() else { unreachable!() };
            for (outcome, _) in expand_outcomes(spec).unwrap() {
                let mut next = s.clone();
                next.instances_mut()[i].resume(Resume::Outcome(outcome)).unwrap();
                stack.push((next, trace.clone()));
            }
            continue;
        }
        let enabled = s.enabled().unwrap();
        if enabled.is_empty() {
            out.push((trace, s.stuck_terminal().unwrap()));
            continue;
        }
        if trace.len() >= max_len {
            out.push((trace, Terminal::StepLimit));
            continue;
        }
        for e in enabled {
            let mut next = s.clone();
            next.fire(&e).unwrap();
            let mut t = trace.clone();
            t.push(e);
            stack.push((next, t));
        }
    }
    out
}

fn is_acyclic(pg: &ProductGraph) -> bool {
    // Done sinks only self-loop, so they are leaves here.
    let succ = |n: usize| -> Vec<usize> {
        match &pg.nodes[n].kind {
            NodeKind::Choice { edges, .. } => edges.iter().map(|e| e.1).collect(),
            NodeKind::Sync { edges } => edges.iter().map(|e| e.1).collect(),
            NodeKind::Stuck { done, .. } => vec![*done],
            NodeKind::Done { .. } => vec![],
        }
    };
    let mut indeg = vec![0usize; pg.nodes.len()];
    for n in 0..pg.nodes.len() {
        for t in succ(n) {
            indeg[t] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..pg.nodes.len()).filter(|n| indeg[*n] == 0).collect();
    let mut seen = 0;
    while let Some(n) = queue.pop_front() {
        seen += 1;
        for t in succ(n) {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    seen == pg.nodes.len()
}

/// Extremal probability of firing an event of `target`, by brute force.
/// Acyclic graphs: explicit enumeration of every path (no memoization).
/// Cyclic graphs: every memoryless deterministic scheduler, each evaluated
/// by an exact linear solve.
pub fn brute_force_reach(pg: &ProductGraph, target: &EventSet, mode: Mode) -> f64 {
    let hit: Vec<bool> = pg.universe().iter().map(|e| target.contains(e)).collect();
    if is_acyclic(pg) {
        fn paths(pg: &ProductGraph, hit: &[bool], mode: Mode, n: usize) -> f64 {
            match &pg.nodes[n].kind {
                NodeKind::Choice { edges, .. } => edges.iter().map(|(p, t)| p * paths(pg, hit, mode, *t)).sum(),
                NodeKind::Sync { edges } => {
                    let vals = edges.iter().map(|(e, t)| if hit[*e] { 1.0 } else { paths(pg, hit, mode, *t) });
                    match mode {
                        Mode::Max => vals.fold(f64::NEG_INFINITY, f64::max),
                        Mode::Min => vals.fold(f64::INFINITY, f64::min),
                    }
                }
                NodeKind::Stuck { .. } | NodeKind::Done { .. } => 0.0,
            }
        }
        return paths(pg, &hit, mode, pg.start());
    }
    let decisions: Vec<usize> = (0..pg.nodes.len())
        .filter(|n| matches!(&pg.nodes[*n].kind, NodeKind::Sync { edges } if edges.len() > 1))
        .collect();
    let count: usize = decisions
        .iter()
        .map(|n| match &pg.nodes[*n].kind {
            NodeKind::Sync { edges } => edges.len(),
            _ => unreachable!(),
        })
        .product();
    assert!(count <= 100_000, "{count} schedulers is too many to enumerate");
    let mut best: Option<f64> = None;
    for mut code in 0..count {
        let mut pick: HashMap<usize, usize> = HashMap::new();
        for n in &decisions {
            let NodeKind::Sync { edges } = &pg.nodes[*n].kind else { unreachable!() };
            pick.insert(*n, code % edges.len());
            code /= edges.len();
        }
        let v = chain_value(pg, &hit, &pick);
        best = Some(match (best, mode) {
            (None, _) => v,
            (Some(b), Mode::Max) => b.max(v),
            (Some(b), Mode::Min) => b.min(v),
        });
    }
    best.unwrap()
}

/// Reach probability of the Markov chain induced by a scheduler.
fn chain_value(pg: &ProductGraph, hit: &[bool], pick: &HashMap<usize, usize>) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let n = pg.nodes.len();
    // (probability, successor or None for "target reached")
    let out: Vec<Vec<(f64, Option<usize>)>> = (0..n)
        .map(|i| match &pg.nodes[i].kind {
            NodeKind::Choice { edges, .. } => edges.iter().map(|(p, t)| (*p, Some(*t))).collect(),
            NodeKind::Sync { edges } => {
                let (e, t) = edges[pick.get(&i).copied().unwrap_or(0)];
                vec![(1.0, if hit[e] { None } else { Some(t) })]
            }
            _ => vec![],
        })
        .collect();
    // Nodes that can reach the target at all.
    let mut good = vec![false; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !good[i] && out[i].iter().any(|(p, t)| *p > 0.0 && t.is_none_or(|t| good[t])) {
                good[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let idx: Vec<usize> = (0..n).filter(|i| good[*i]).collect();
    if !good[pg.start()] {
        return 0.0;
    }
    let pos: HashMap<usize, usize> = idx.iter().enumerate().map(|(k, i)| (*i, k)).collect();
    let m = idx.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (k, i) in idx.iter().enumerate() {
        for (p, t) in &out[*i] {
            match t {
                None => b[k] += p,
                Some(t) => {
                    if let Some(j) = pos.get(t) {
                        a[(k, *j)] -= p;
                    }
                }
            }
        }
    }
    let x = a.lu().solve(&b).expect("nonsingular system");
    x[pos[&pg.start()]]
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Choice(usize, Vec<(String, Vec<u32>)>),
    Sync(BTreeSet<(String, Vec<u32>)>),
    Stuck,
}

/// Tuple-level shape of every non-sink product node.
fn product_shapes(pg: &ProductGraph, dialect: Dialect) -> Result<BTreeMap<Vec<u32>, Shape>, String> {
    let ev = |e: usize| sanitize(&pg.universe()[e].to_string(), dialect);
    let mut shapes = BTreeMap::new();
    for n in &pg.nodes {
        let shape = match &n.kind {
            NodeKind::Done { .. } => continue,
            NodeKind::Stuck { .. } => Shape::Stuck,
            NodeKind::Sync { edges } => {
                Shape::Sync(edges.iter().map(|(e, t)| (ev(*e), pg.nodes[*t].tuple.clone())).collect())
            }
            NodeKind::Choice { thread, edges } => {
                let mut e: Vec<(String, Vec<u32>)> =
                    edges.iter().map(|(p, t)| (format!("{p}"), pg.nodes[*t].tuple.clone())).collect();
                e.sort();
                Shape::Choice(*thread, e)
            }
        };
        if let Some(prev) = shapes.insert(n.tuple.clone(), shape.clone()) {
            if prev != shape {
                return Err(format!("tuple {:?} has two shapes ({:?}, phase {:?})", n.tuple, prev, n.phase));
            }
        }
    }
    Ok(shapes)
}

/// The interpreted PRISM MDP, projected on the b-thread variables, has the
/// same states and transitions as the product graph.
pub fn prism_matches_product(pg: &ProductGraph, text: &str) -> Result<(), String> {
    let mdp = prism::parse(text).build();
    let threads = pg.exploration.graphs.len();
    let expected = product_shapes(pg, Dialect::Prism)?;
    let event_var = mdp.vars.iter().position(|v| v == "event").ok_or("no event variable")?;
    let mut actual: BTreeMap<Vec<u32>, Shape> = BTreeMap::new();
    for (s, acts) in mdp.states.iter().zip(&mdp.actions) {
        let tuple: Vec<u32> = s[..threads].iter().map(|v| *v as u32).collect();
        let proj = |j: usize| -> Vec<u32> { mdp.states[j][..threads].iter().map(|v| *v as u32).collect() };
        let locals: Vec<_> = acts.iter().filter(|(a, _)| matches!(a, prism::Action::Local(_))).collect();
        let shape = if !locals.is_empty() {
            if locals.len() != 1 || acts.len() != 1 {
                return Err(format!("state {s:?} mixes {} choices with {} actions", locals.len(), acts.len()));
            }
            let (prism::Action::Local(m), dist) = locals[0] else { unreachable!() };
            let mut e: Vec<(String, Vec<u32>)> = dist.iter().map(|(p, j)| (format!("{p}"), proj(*j))).collect();
            e.sort();
            Shape::Choice(*m, e)
        } else if acts.is_empty() {
            Shape::Stuck
        } else {
            let mut set = BTreeSet::new();
            for (a, dist) in acts {
                let prism::Action::Label(l) = a else { unreachable!() };
                if dist.len() != 1 || dist[0].0 != 1.0 {
                    return Err(format!("event {l} at {s:?} is not deterministic"));
                }
                let e = pg
                    .universe()
                    .iter()
                    .position(|e| sanitize(&e.to_string(), Dialect::Prism) == *l)
                    .ok_or("unknown label")?;
                if mdp.states[dist[0].1][event_var] != e as i64 {
                    return Err(format!("event {l} does not set event={e}"));
                }
                set.insert((l.clone(), proj(dist[0].1)));
            }
            Shape::Sync(set)
        };
        if let Some(prev) = actual.insert(tuple.clone(), shape.clone()) {
            if prev != shape {
                return Err(format!("PRISM tuple {tuple:?} behaves differently under different event values"));
            }
        }
    }
    if actual != expected {
        let missing: Vec<_> = expected.keys().filter(|k| !actual.contains_key(*k)).take(3).collect();
        let extra: Vec<_> = actual.keys().filter(|k| !expected.contains_key(*k)).take(3).collect();
        let differ: Vec<_> = expected.iter().filter(|(k, v)| actual.get(*k).is_some_and(|a| a != *v)).take(2).collect();
        return Err(format!("PRISM/product mismatch: missing {missing:?}, extra {extra:?}, differing {differ:?}"));
    }
    Ok(())
}

/// Joint search of the product graph and the interpreted SMV model: at
/// every reachable pair the TRANS relation admits exactly the product's
/// events (DONE at stuck and done nodes) and the module states agree.
/// Equal trace sets follow.
pub fn smv_matches_product(pg: &ProductGraph, text: &str) -> Result<usize, String> {
    let model = smv::parse(text);
    let ev = |e: usize| sanitize(&pg.universe()[e].to_string(), Dialect::Smv);
    let done = bpk_core::smv::DONE.to_string();
    let start = (pg.start(), model.initial());
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some((node, config)) = queue.pop_front() {
        let n = &pg.nodes[node];
        let tuple: Vec<i64> = n.tuple.iter().map(|v| i64::from(*v)).collect();
        if config.states != tuple {
            return Err(format!("node {node}: SMV states {:?} vs tuple {tuple:?}", config.states));
        }
        if n.phase == Phase::Done && config.event != done {
            return Err(format!("node {node} is DONE but event={}", config.event));
        }
        let succ: Vec<(String, usize)> = match &n.kind {
            NodeKind::Choice { .. } => return Err("SMV cannot express choices".into()),
            NodeKind::Sync { edges } => edges.iter().map(|(e, t)| (ev(*e), *t)).collect(),
            NodeKind::Stuck { done: d, .. } => vec![(done.clone(), *d)],
            NodeKind::Done { .. } => vec![(done.clone(), node)],
        };
        let want: BTreeSet<&String> = succ.iter().map(|(e, _)| e).collect();
        let allowed = model.allowed(&config);
        let got: BTreeSet<&String> = allowed.iter().collect();
        if want != got {
            return Err(format!("node {node}: TRANS admits {got:?}, product has {want:?}"));
        }
        for (e, t) in succ {
            let next = (t, model.step(&config, &e));
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen.len())
}

/// Boards selected within `depth` sync points of the discrete bit-flip
/// game, by breadth-first search over live sessions.
pub fn discrete_bitflip_configs(n: usize, m: usize, depth: usize) -> BTreeSet<String> {
    use bpk_core::examples::{bitflip_discrete, Board};
    let mut seen = BTreeSet::new();
    let mut frontier = vec![Session::new(&bitflip_discrete(n, m).unwrap()).unwrap()];
    for _ in 0..depth {
        let mut next = Vec::new();
        let mut keys = HashSet::new();
        for s in &frontier {
            for e in s.enabled().unwrap() {
                seen.insert(Board::of_event(&e, n, m).unwrap().to_bit_string());
                let mut t = s.clone();
                t.fire(&e).unwrap();
                if keys.insert(t.keys()) {
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// The same search under the solver arbiter: every model of each sync
/// point's query is enumerated and fired.
pub fn smt_bitflip_configs(solver: &bpk_core::smt::Solver, n: usize, m: usize, depth: usize) -> BTreeSet<String> {
    use bpk_core::examples::{bitflip_smt, board_of};
    use bpk_core::smt::SmtSession;
    let mut seen = BTreeSet::new();
    let mut frontier = vec![SmtSession::new(&bitflip_smt(n, m).unwrap(), 0).unwrap()];
    for _ in 0..depth {
        let mut next = Vec::new();
        let mut keys = HashSet::new();
        for s in &frontier {
            let Some(query) = s.query().unwrap() else { continue };
            for a in solver.enumerate_solutions(&query, 1 << (n * m)).unwrap() {
                seen.insert(board_of(&a, n, m).expect("every cell assigned").to_bit_string());
                let mut t = s.clone();
                t.fire(&a).unwrap();
                if keys.insert(t.session().keys()) {
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    seen
}
