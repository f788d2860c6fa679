//! Learning on the example environments.

use std::sync::Arc;

use bpk_core::examples::{bitflip_two_player, pancake, BLUEBERRIES};
use bpk_core::rlenv::{evaluate, rollout, train_tabular_q, BpEnv, Environment, GreedyStrategy, QConfig, SmtEnv};
use bpk_core::smt::Solver;
use bpk_core::{run, Event, Policy, RunConfig, Session};

#[test]
fn pancake_learns_blueberries() {
    let mut env = BpEnv::new(pancake(2, 1).unwrap(), 1000).unwrap();
    let result = train_tabular_q(&mut env, &QConfig { episodes: 5000, seed: 1, ..Default::default() }).unwrap();
    let mut policy = result.policy.clone();
    let total = rollout(&mut env, &mut policy, 0).unwrap();
    assert!(env.history().contains(&Event::new(BLUEBERRIES)), "{:?}", env.history());
    assert!(total >= 0.999, "greedy rollout reward {total}");
}

#[test]
fn pancake_masks_match_the_engine() {
    let mut env = BpEnv::new(pancake(2, 1).unwrap(), 1000).unwrap();
    let mut rng_seed = 0;
    for episode in 0..20 {
        env.reset(episode).unwrap();
        let mut session = Session::new(&pancake(2, 1).unwrap()).unwrap();
        while !env.done() {
            let enabled = session.enabled().unwrap();
            let mask = env.action_mask().to_vec();
            let unmasked: Vec<&Event> = (0..mask.len()).filter(|i| mask[*i]).map(|i| &env.universe()[i]).collect();
            assert_eq!(unmasked.len(), enabled.len());
            assert!(enabled.iter().all(|e| unmasked.contains(&e)));
            let options: Vec<usize> = (0..mask.len()).filter(|i| mask[*i]).collect();
            rng_seed += 1;
            let a = options[rng_seed % options.len()];
            session.fire(&env.universe()[a].clone()).unwrap();
            env.step(a).unwrap();
        }
        assert!(session.enabled().unwrap().is_empty() || env.history().len() >= 1000);
    }
}

#[test]
fn episode_reward_is_the_trace_reward() {
    let mut env = BpEnv::new(pancake(2, 1).unwrap(), 1000).unwrap();
    let mut greedy = GreedyStrategy;
    for seed in 0..5 {
        let total = rollout(&mut env, &mut greedy, seed).unwrap();
        let script = env.history().to_vec();
        let cfg = RunConfig { policy: Policy::Scripted(script.clone()), max_steps: script.len(), seed };
        let trace = run(&pancake(2, 1).unwrap(), &cfg).unwrap();
        assert_eq!(trace.events, script);
        assert!((trace.total_reward() - total).abs() < 1e-12);
    }
}

#[test]
fn two_player_learning_matches_greedy() {
    let Ok(solver) = Solver::from_env() else {
        eprintln!("warning: no SMT solver, skipping");
        return;
    };
    let mut env = SmtEnv::new(bitflip_two_player(3, 3).unwrap(), Arc::new(solver), 3, 10).unwrap();
    let t = std::time::Instant::now();
    let result = train_tabular_q(
        &mut env,
        &QConfig { episodes: 2000, gamma: 0.9, seed: 5, epsilon_decay: 0.998, ..Default::default() },
    )
    .unwrap();
    eprintln!("trained in {:?}, {} states", t.elapsed(), result.policy.table.len());
    let learned = evaluate(&mut env, &mut result.policy.clone(), 200, 77).unwrap();
    let greedy = evaluate(&mut env, &mut GreedyStrategy, 200, 77).unwrap();
    eprintln!("learned {learned} greedy {greedy}");
    assert!(learned >= greedy, "learned {learned} < greedy {greedy}");
}
