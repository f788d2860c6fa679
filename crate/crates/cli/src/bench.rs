//! Benchmark suites. Each emits CSV with a fixed header row.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::bail;
use bpk_core::analysis::{reach_probability, sample_estimate, Mode, SampleConfig, ValueIterationConfig};
use bpk_core::examples::{self, Params};
use bpk_core::explore::{build_product, explore_program, ExploreConfig};
use bpk_core::smt::SmtRunConfig;
use bpk_core::{Event, EventSet};

/// Example name with integer parameters.
type Case<'a, X> = (&'a str, Vec<(&'a str, i64)>, X);

pub const SUITES: &[&str] = &["dice", "states", "sampling", "smt"];

pub fn run(suite: &str, seed: u64, solver: &Option<PathBuf>) -> anyhow::Result<String> {
    match suite {
        "dice" => dice(),
        "states" => states(),
        "sampling" => sampling(seed),
        "smt" => smt(seed, solver),
        _ => bail!("unknown suite '{suite}' (known: {})", SUITES.join(", ")),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn build(name: &str, params: &[(&str, i64)]) -> anyhow::Result<(bpk_core::BProgram, String)> {
    let p = params.iter().fold(Params::new(), |p, (k, v)| p.set(k, v));
    let label = params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    Ok((examples::build(name, &p)?, label))
}

fn dice() -> anyhow::Result<String> {
    let mut out = String::from("n,result_min,result_max,expected,max_abs_error,elapsed_ms\n");
    for n in [6, 7, 8, 10, 16, 20] {
        let t = Instant::now();
        let (p, _) = build("knuth_dice", &[("n", n)])?;
        let cfg = ExploreConfig::default();
        let pg = build_product(&explore_program(&p, &cfg)?, cfg.product_node_cap)?;
        let values = (0..n)
            .map(|i| {
                let target: EventSet = Event::new(format!("result_{i}")).into();
                Ok(reach_probability(&pg, &target, Mode::Max, &ValueIterationConfig::default())?.value)
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        let expected = 1.0 / n as f64;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let err = values.iter().map(|v| (v - expected).abs()).fold(0.0, f64::max);
        writeln!(out, "{n},{lo:.9},{hi:.9},{expected:.9},{err:.3e},{:.3}", ms(t))?;
    }
    Ok(out)
}

fn states() -> anyhow::Result<String> {
    let mut out = String::from("example,params,events,thread_states,sync_nodes,nodes,elapsed_ms\n");
    let mut cases: Vec<(&str, Vec<(&str, i64)>)> = Vec::new();
    for m in [1, 2] {
        for n in [10, 30, 60, 90] {
            cases.push(("hot_cold", vec![("n", n), ("m", m)]));
        }
    }
    for n in [6, 10, 20] {
        cases.push(("knuth_dice", vec![("n", n)]));
    }
    cases.push(("monty_hall", vec![("d", 3), ("p", 1), ("o", 1)]));
    cases.push(("monty_hall", vec![("d", 4), ("p", 1), ("o", 2)]));
    cases.push(("bitflip_discrete", vec![("n", 2), ("m", 2)]));
    cases.push(("bitflip_discrete", vec![("n", 2), ("m", 3)]));
    cases.push(("cinderella_discrete", vec![]));
    for (name, params) in cases {
        let t = Instant::now();
        let (p, label) = build(name, &params)?;
        let cfg = ExploreConfig::default();
        let x = explore_program(&p, &cfg)?;
        let thread_states: usize = x.graphs.iter().map(|g| g.states.len()).sum();
        let pg = build_product(&x, cfg.product_node_cap)?;
        writeln!(
            out,
            "{name},{label},{},{thread_states},{},{},{:.3}",
            pg.universe().len(),
            pg.sync_node_count(),
            pg.nodes.len(),
            ms(t)
        )?;
    }
    Ok(out)
}

fn sampling(seed: u64) -> anyhow::Result<String> {
    let mut out = String::from("example,target,runs,exact_max,exact_min,mean,standard_error,z,elapsed_ms\n");
    let cases: [Case<&str>; 3] = [
        ("coin_flip", vec![], "heads"),
        ("monty_hall", vec![("d", 3), ("p", 1), ("o", 1)], "win"),
        ("knuth_dice", vec![("n", 6)], "result_0"),
    ];
    for (name, params, target) in cases {
        let t = Instant::now();
        let (p, _) = build(name, &params)?;
        let set: EventSet = Event::new(target).into();
        let cfg = ExploreConfig::default();
        let pg = build_product(&explore_program(&p, &cfg)?, cfg.product_node_cap)?;
        let vi = ValueIterationConfig::default();
        let max = reach_probability(&pg, &set, Mode::Max, &vi)?.value;
        let min = reach_probability(&pg, &set, Mode::Min, &vi)?.value;
        let runs = 10_000;
        let est = sample_estimate(&p, &set, &SampleConfig { runs, seed, ..Default::default() })?;
        let z = if est.standard_error > 0.0 { (est.mean - max).abs() / est.standard_error } else { 0.0 };
        writeln!(
            out,
            "{name},{target},{runs},{max:.9},{min:.9},{:.6},{:.6},{z:.3},{:.3}",
            est.mean,
            est.standard_error,
            ms(t)
        )?;
    }
    Ok(out)
}

fn smt(seed: u64, solver: &Option<PathBuf>) -> anyhow::Result<String> {
    let solver = crate::solver(solver, seed)?;
    let mut out = String::from("example,params,steps,terminal,elapsed_ms\n");
    let cases: Vec<Case<usize>> = vec![
        ("cinderella_smt", vec![("n", 5), ("b", 6), ("c", 2), ("a", 5), ("steps", 100)], 100),
        ("cinderella_smt", vec![("n", 5), ("b", 8), ("c", 2), ("a", 5), ("steps", 100)], 100),
        ("circled_polygon", vec![("edges", 4)], 10),
        ("circled_polygon", vec![("edges", 8)], 10),
        ("bitflip_smt", vec![("n", 2), ("m", 2)], 20),
        ("bitflip_smt", vec![("n", 3), ("m", 3)], 20),
    ];
    for (name, params, max_steps) in cases {
        let t = Instant::now();
        let (p, label) = build(name, &params)?;
        let trace = bpk_core::smt::run_smt(&p, &solver, &SmtRunConfig { max_steps, seed })?;
        writeln!(out, "{name},{label},{},{},{:.3}", trace.events.len(), trace.terminal, ms(t))?;
    }
    Ok(out)
}
