//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured values. Criteria run one at a time so that the time
//! budgets are measured without interference.

mod common;

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use bpk_core::analysis::{
    check_safety, reach_probability, sample_estimate, Bad, Mode, SampleConfig, ValueIterationConfig,
};
use bpk_core::examples::{
    self, bitflip_two_player, cinderella_smt, circled_polygon, coin_flip, hot_cold, in_circle, knuth_dice, monty_hall,
    outside_polygon, pancake, CinderellaParams, Kind, Params, BLUEBERRIES,
};
use bpk_core::explore::{build_product, explore_program, product_of, ExploreConfig};
use bpk_core::rlenv::{evaluate, rollout, train_tabular_q, BpEnv, GreedyStrategy, QConfig, SmtEnv};
use bpk_core::smt::{run_smt, SmtRunConfig, Solver};
use bpk_core::{prism, smv, Error, Event, EventSet, Terminal};

static SERIAL: Mutex<()> = Mutex::new(());

const HOT_COLD_SMV: &str = include_str!("golden/hot_cold.smv");
const COIN_FLIP_PRISM: &str = include_str!("golden/coin_flip.prism");

fn vi() -> ValueIterationConfig {
    ValueIterationConfig::default()
}

/// Prints the criterion's line and fails the test unless both the check
/// and the time budget hold.
fn verdict(n: u32, title: &str, ok: bool, details: String, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    let in_time = elapsed < budget;
    let status = if ok && in_time { "PASS" } else { "FAIL" };
    let line = format!("criterion {n} ({title}): {status}; {details}; {:.2?} of {:.0?}", elapsed, budget);
    println!("{line}");
    assert!(ok, "{line}");
    assert!(in_time, "over the time budget: {line}");
}

fn solver_or_skip(n: u32, title: &str) -> Option<Solver> {
    match Solver::from_env() {
        Ok(s) => Some(s),
        Err(e) => {
            let line = format!("criterion {n} ({title}): SKIP; warning: no SMT-LIB2 solver ({e})");
            println!("{line}");
            None
        }
    }
}

#[test]
fn criterion_01_knuth_dice_exactness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let rounded = [(6, 0.1667), (7, 0.1429), (8, 0.125), (10, 0.1), (16, 0.0625), (20, 0.05)];
    let mut worst = 0.0f64;
    let mut rounded_ok = true;
    for (n, printed) in rounded {
        let pg = product_of(&knuth_dice(n).unwrap()).unwrap();
        for i in 0..n {
            let target: EventSet = Event::new(format!("result_{i}")).into();
            let v = reach_probability(&pg, &target, Mode::Max, &vi()).unwrap().value;
            worst = worst.max((v - 1.0 / n as f64).abs());
            rounded_ok &= (v - printed).abs() < 5e-5;
        }
    }
    verdict(
        1,
        "Knuth dice exactness",
        worst < 1e-6 && rounded_ok,
        format!("max |P(result_i) - 1/n| = {worst:.2e}, 4-digit values matched = {rounded_ok}"),
        t,
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_02_coin_flip() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let p = coin_flip().unwrap();
    let heads: EventSet = Event::new("heads").into();
    let exact = reach_probability(&product_of(&p).unwrap(), &heads, Mode::Max, &vi()).unwrap().value;
    let est = sample_estimate(&p, &heads, &SampleConfig { runs: 10_000, seed: 2024, ..Default::default() }).unwrap();
    let z = (est.mean - exact).abs() / est.standard_error;
    verdict(
        2,
        "coin flip",
        (exact - 0.4).abs() < 1e-9 && z <= 3.0,
        format!("exact {exact}, sampled {:.4} +/- {:.4} ({z:.2} SE)", est.mean, est.standard_error),
        t,
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_03_hot_cold_semantics() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let program = hot_cold(3, 1).unwrap();
    let traces = common::maximal_traces(&program, 100);
    let hh = |a: &Event, b: &Event| a.name() == "HOT" && b.name() == "HOT";
    let well_formed = traces.iter().all(|(tr, _)| {
        tr.iter().filter(|e| e.name() == "HOT").count() == 3
            && tr.iter().filter(|e| e.name() == "COLD").count() == 3
            && !tr.windows(2).any(|w| hh(&w[0], &w[1]))
    });
    let safe = check_safety(&product_of(&program).unwrap(), &Bad::consecutive(hh)).holds;
    let deadlocks = traces.iter().filter(|(_, t)| *t == Terminal::Deadlock).count();
    verdict(
        3,
        "hot/cold semantics",
        traces.len() == 4 && well_formed && safe,
        format!(
            "{} maximal traces ({deadlocks} end in deadlock), all 3 HOT/3 COLD = {well_formed}, no HOT HOT = {safe}",
            traces.len()
        ),
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_04_hot_cold_state_count() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let pg = product_of(&hot_cold(30, 1).unwrap()).unwrap();
    let sync = pg.sync_node_count();
    verdict(
        4,
        "hot/cold state count",
        sync.abs_diff(121) <= 2,
        format!("{sync} sync nodes ({} nodes in all) vs 121 +/- 2", pg.nodes.len()),
        t,
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_05_translator_goldens() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let smv_text =
        smv::translate(&explore_program(&hot_cold(3, 1).unwrap(), &ExploreConfig::default()).unwrap()).unwrap();
    let prism_text =
        prism::translate(&explore_program(&coin_flip().unwrap(), &ExploreConfig::default()).unwrap()).unwrap();
    let (a, b) = (smv_text == HOT_COLD_SMV, prism_text == COIN_FLIP_PRISM);
    verdict(
        5,
        "translator goldens",
        a && b,
        format!("SMV identical = {a}, PRISM identical = {b}"),
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_06_semantics_preservation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let small = ExploreConfig { thread_state_cap: 10_000, product_node_cap: 10_000 };
    let mut checked = Vec::new();
    let mut skipped = Vec::new();
    let mut failures = Vec::new();
    for info in examples::REGISTRY.iter().filter(|i| i.kind == Kind::Discrete) {
        let program = examples::build(info.name, &Params::new()).unwrap();
        let pg = match explore_program(&program, &small).and_then(|x| build_product(&x, 10_000)) {
            Ok(pg) => pg,
            Err(Error::StateExplosion { .. }) => {
                skipped.push(info.name);
                continue;
            }
            Err(e) => panic!("{}: {e}", info.name),
        };
        if let Err(e) = common::prism_matches_product(&pg, &prism::translate(&pg.exploration).unwrap()) {
            failures.push(format!("{} PRISM: {e}", info.name));
        }
        match smv::translate(&pg.exploration) {
            Ok(text) => {
                if let Err(e) = common::smv_matches_product(&pg, &text) {
                    failures.push(format!("{} SMV: {e}", info.name));
                }
            }
            Err(Error::ProbabilisticUnsupported(_)) => {}
            Err(e) => failures.push(format!("{} SMV: {e}", info.name)),
        }
        checked.push(info.name);
    }
    verdict(
        6,
        "semantics preservation",
        failures.is_empty(),
        format!("checked {checked:?}, over 10^4 nodes {skipped:?}, failures {failures:?}"),
        t,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_07_smt_discrete_equivalence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let title = "SMT/discrete equivalence";
    let Some(solver) = solver_or_skip(7, title) else { return };
    let t = Instant::now();
    let mut sizes = Vec::new();
    let mut ok = true;
    for (n, m) in [(2, 2), (2, 3)] {
        for depth in 1..=4 {
            let d = common::discrete_bitflip_configs(n, m, depth);
            let s = common::smt_bitflip_configs(&solver, n, m, depth);
            ok &= d == s;
            if depth == 4 {
                sizes.push(format!("{n}x{m}: {} vs {}", d.len(), s.len()));
            }
        }
    }
    verdict(7, title, ok, format!("configurations within 4 steps {sizes:?}"), t, Duration::from_secs(30));
}

#[test]
fn criterion_08_cinderella_safety() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let title = "Cinderella safety";
    let Some(solver) = solver_or_skip(8, title) else { return };
    let t = Instant::now();
    let mut ok = true;
    let mut runs = Vec::new();
    for b in [6, 8] {
        let p = CinderellaParams { n: 5, b, c: 2, a: 5, steps: 100 };
        let trace = run_smt(&cinderella_smt(p).unwrap(), &solver, &SmtRunConfig { max_steps: 100, seed: 0 }).unwrap();
        let max = trace
            .events
            .iter()
            .flat_map(|a| (0..5).map(move |i| a.get(&format!("b{i}")).and_then(|v| v.as_int()).unwrap()))
            .max()
            .unwrap_or(0);
        ok &= max <= b;
        runs.push(format!("B={b}: {} steps, {}, fullest bucket {max}", trace.events.len(), trace.terminal));
    }
    verdict(8, title, ok, runs.join("; "), t, Duration::from_secs(60));
}

#[test]
fn criterion_09_circled_polygon() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let title = "circled polygon";
    let Some(solver) = solver_or_skip(9, title) else { return };
    let t = Instant::now();
    let mut ok = true;
    let mut points = Vec::new();
    for edges in [4, 8] {
        let trace = run_smt(&circled_polygon(edges).unwrap(), &solver, &SmtRunConfig::default()).unwrap();
        let Some(p) = trace.events.first() else {
            ok = false;
            points.push(format!("{edges} edges: no point ({})", trace.terminal));
            continue;
        };
        ok &= in_circle().eval_bool(p).unwrap() && outside_polygon(edges).eval_bool(p).unwrap();
        let coord = |v: &str| p.get(v).and_then(|x| x.to_f64()).unwrap_or(f64::NAN);
        points.push(format!("{edges} edges: ({:.6}, {:.6})", coord("x"), coord("y")));
    }
    verdict(9, title, ok, points.join("; "), t, Duration::from_secs(30));
}

#[test]
fn criterion_10_monty_hall_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let p = monty_hall(3, 1, 1).unwrap();
    let pg = product_of(&p).unwrap();
    let win: EventSet = Event::new("win").into();
    let exact = reach_probability(&pg, &win, Mode::Max, &vi()).unwrap().value;
    let brute = common::brute_force_reach(&pg, &win, Mode::Max);
    let est = sample_estimate(&p, &win, &SampleConfig { runs: 10_000, seed: 2024, ..Default::default() }).unwrap();
    let z = (est.mean - exact).abs() / est.standard_error;
    verdict(
        10,
        "Monty Hall oracle",
        (exact - brute).abs() < 1e-9 && z <= 3.0,
        format!(
            "exact max {exact:.6}, brute force {brute:.6}, sampled {:.4} +/- {:.4} ({z:.2} SE)",
            est.mean, est.standard_error
        ),
        t,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_11_rl_plumbing() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut env = BpEnv::new(pancake(2, 1).unwrap(), 1000).unwrap();
    let q = train_tabular_q(&mut env, &QConfig { episodes: 5000, seed: 1, ..Default::default() }).unwrap();
    let pancake_reward = rollout(&mut env, &mut q.policy.clone(), 0).unwrap();
    let berries = env.history().contains(&Event::new(BLUEBERRIES));
    let mut details = format!("pancake greedy rollout reward {pancake_reward:.4} (blueberries added = {berries})");
    let mut ok = pancake_reward >= 0.999 && berries;
    match Solver::from_env() {
        Ok(solver) => {
            let mut env = SmtEnv::new(bitflip_two_player(3, 3).unwrap(), Arc::new(solver), 3, 10).unwrap();
            let cfg = QConfig { episodes: 2000, gamma: 0.9, epsilon_decay: 0.998, seed: 5, ..Default::default() };
            let q = train_tabular_q(&mut env, &cfg).unwrap();
            let learned = evaluate(&mut env, &mut q.policy.clone(), 200, 77).unwrap();
            let greedy = evaluate(&mut env, &mut GreedyStrategy, 200, 77).unwrap();
            ok &= learned >= greedy;
            details.push_str(&format!("; bit-flip 3x3 mean reward learned {learned:.2} vs greedy {greedy:.2}"));
        }
        Err(e) => details.push_str(&format!("; bit-flip part skipped, warning: no SMT-LIB2 solver ({e})")),
    }
    verdict(11, "RL plumbing", ok, details, t, Duration::from_secs(300));
}
