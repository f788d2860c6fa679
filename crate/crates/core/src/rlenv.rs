//! B-programs as episodic decision environments. Actions are masked by the
//! blocking semantics and rewards come from the statements' local rewards.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::run_seed;
use crate::bthread::{BProgram, StateKey};
use crate::engine::Session;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::examples::{self, Kind, Params, ACTION};
use crate::prob::expand_outcomes;
use crate::smt::{next_assignment_with, Formula, SmtSession, Solver};
use crate::statement::{Resume, Statement};

/// One state index per b-thread, in registration order.
pub type Observation = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub action_mask: Vec<bool>,
}

/// The episodic environment contract.
pub trait Environment: Send {
    fn num_actions(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Observation>;
    /// Fails with [`Error::IllegalAction`] when `action` is masked.
    fn step(&mut self, action: usize) -> Result<StepResult>;
    fn observation(&self) -> Observation;
    fn action_mask(&self) -> &[bool];
    fn done(&self) -> bool;
    fn boxed_clone(&self) -> Box<dyn Environment>;
}

/// Interns each b-thread's state keys into dense indices. Indices persist
/// across resets, so identical states get identical observations.
#[derive(Debug, Clone, Default)]
struct Interner(Vec<HashMap<StateKey, u32>>);

impl Interner {
    fn observe(&mut self, keys: Vec<StateKey>) -> Observation {
        self.0.resize_with(keys.len(), HashMap::new);
        keys.into_iter()
            .zip(&mut self.0)
            .map(|(k, table)| {
                let next = table.len() as u32;
                *table.entry(k).or_insert(next)
            })
            .collect()
    }
}

/// Live sync points visited when discovering the action universe.
pub const DISCOVERY_CAP: usize = 10_000;

/// Events enabled at the sync points reachable within `cap` distinct
/// sessions, in breadth-first order. Choices are expanded exhaustively.
pub fn discover_universe(program: &BProgram, cap: usize) -> Result<IndexSet<Event>> {
    let mut universe = IndexSet::new();
    let mut seen = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::from([Session::new(program)?]);
    while let Some(s) = queue.pop_front() {
        if let Some(i) = s.pending_choice() {
            let Some(Statement::Choice(spec)) = s.instances()[i].statement() else { unreachable!() };
            for (outcome, _) in expand_outcomes(spec)? {
                let mut next = s.clone();
                next.instances_mut()[i].resume(Resume::Outcome(outcome))?;
                queue.push_back(next);
            }
            continue;
        }
        if !seen.insert(s.keys()) || seen.len() > cap {
            continue;
        }
        for e in s.enabled()? {
            let mut next = s.clone();
            next.fire(&e)?;
            universe.insert(e);
            queue.push_back(next);
        }
    }
    Ok(universe)
}

/// Environment over the discrete arbiter. Actions index the events found by
/// [`discover_universe`]; events first enabled later are appended, so the
/// action space can grow during an episode.
#[derive(Debug, Clone)]
pub struct BpEnv {
    program: BProgram,
    universe: IndexSet<Event>,
    max_steps: usize,
    session: Session,
    rng: ChaCha8Rng,
    interner: Interner,
    observation: Observation,
    mask: Vec<bool>,
    done: bool,
    history: Vec<Event>,
}

impl BpEnv {
    pub fn new(program: BProgram, max_steps: usize) -> Result<Self> {
        let universe = discover_universe(&program, DISCOVERY_CAP)?;
        let session = Session::new(&program)?;
        let mut env = Self {
            program,
            universe,
            max_steps,
            session,
            rng: ChaCha8Rng::seed_from_u64(0),
            interner: Interner::default(),
            observation: Vec::new(),
            mask: Vec::new(),
            done: false,
            history: Vec::new(),
        };
        env.reset(0)?;
        Ok(env)
    }

    pub fn universe(&self) -> &IndexSet<Event> {
        &self.universe
    }

    /// Events selected since the last reset.
    pub fn history(&self) -> &[Event] {
        &self.history
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    fn settle(&mut self) -> Result<()> {
        self.session.resolve_choices(&mut self.rng)?;
        self.observation = self.interner.observe(self.session.keys());
        self.mask = vec![false; self.universe.len()];
        let enabled = self.session.enabled()?;
        self.done = enabled.is_empty() || self.history.len() >= self.max_steps;
        if !self.done {
            for e in enabled {
                let (i, _) = self.universe.insert_full(e);
                self.mask.resize(self.universe.len(), false);
                self.mask[i] = true;
            }
        }
        Ok(())
    }
}

impl Environment for BpEnv {
    fn num_actions(&self) -> usize {
        self.universe.len()
    }

    fn reset(&mut self, seed: u64) -> Result<Observation> {
        self.session = Session::new(&self.program)?;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.history.clear();
        self.settle()?;
        Ok(self.observation.clone())
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if !self.mask.get(action).copied().unwrap_or(false) {
            return Err(Error::IllegalAction(action));
        }
        let e = self.universe[action].clone();
        let reward = self.session.step_reward();
        self.session.fire(&e)?;
        self.history.push(e);
        self.settle()?;
        Ok(StepResult {
            observation: self.observation.clone(),
            reward,
            done: self.done,
            action_mask: self.mask.clone(),
        })
    }

    fn observation(&self) -> Observation {
        self.observation.clone()
    }

    fn action_mask(&self) -> &[bool] {
        &self.mask
    }

    fn done(&self) -> bool {
        self.done
    }

    fn boxed_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Environment over the solver arbiter. The agent acts at sync points whose
/// query mentions the Int variable `action`, choosing its value; the other
/// sync points are solved internally and their rewards are credited to the
/// agent's preceding action.
#[derive(Debug, Clone)]
pub struct SmtEnv {
    program: BProgram,
    solver: Arc<Solver>,
    num_actions: usize,
    max_actions: usize,
    max_syncs: usize,
    session: SmtSession,
    interner: Interner,
    observation: Observation,
    mask: Vec<bool>,
    done: bool,
    actions_taken: usize,
    syncs: usize,
}

fn action_is(k: usize) -> Formula {
    Formula::int_var(ACTION).equals(Formula::int(k as i64))
}

impl SmtEnv {
    /// `num_actions` values of `action` are offered; an episode ends after
    /// `max_actions` agent moves.
    pub fn new(program: BProgram, solver: Arc<Solver>, num_actions: usize, max_actions: usize) -> Result<Self> {
        let session = SmtSession::new(&program, 0)?;
        let mut env = Self {
            program,
            solver,
            num_actions,
            max_actions,
            max_syncs: 100_000,
            session,
            interner: Interner::default(),
            observation: Vec::new(),
            mask: Vec::new(),
            done: false,
            actions_taken: 0,
            syncs: 0,
        };
        env.reset(0)?;
        Ok(env)
    }

    /// Solves internal sync points until the agent must act or the episode
    /// ends. Returns the rewards collected on the way.
    fn advance(&mut self) -> Result<f64> {
        let mut reward = 0.0;
        self.mask = vec![false; self.num_actions];
        self.done = true;
        while self.actions_taken < self.max_actions && self.syncs < self.max_syncs {
            let Some(query) = self.session.query()? else { break };
            if query.variables()?.contains_key(ACTION) {
                for k in 0..self.num_actions {
                    self.mask[k] = next_assignment_with(&self.session, &self.solver, Some(&action_is(k)))?.is_ok();
                }
                self.done = !self.mask.contains(&true);
                break;
            }
            match next_assignment_with(&self.session, &self.solver, None)? {
                Err(_) => break,
                Ok(a) => {
                    reward += self.session.step_reward();
                    self.session.fire(&a)?;
                    self.syncs += 1;
                }
            }
        }
        self.observation = self.interner.observe(self.session.session().keys());
        Ok(reward)
    }
}

impl Environment for SmtEnv {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn reset(&mut self, seed: u64) -> Result<Observation> {
        self.session = SmtSession::new(&self.program, seed)?;
        self.actions_taken = 0;
        self.syncs = 0;
        self.advance()?;
        Ok(self.observation.clone())
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if !self.mask.get(action).copied().unwrap_or(false) {
            return Err(Error::IllegalAction(action));
        }
        let a = match next_assignment_with(&self.session, &self.solver, Some(&action_is(action)))? {
            Ok(a) => a,
            Err(_) => return Err(Error::IllegalAction(action)),
        };
        let mut reward = self.session.step_reward();
        self.session.fire(&a)?;
        self.syncs += 1;
        self.actions_taken += 1;
        reward += self.advance()?;
        Ok(StepResult {
            observation: self.observation.clone(),
            reward,
            done: self.done,
            action_mask: self.mask.clone(),
        })
    }

    fn observation(&self) -> Observation {
        self.observation.clone()
    }

    fn action_mask(&self) -> &[bool] {
        &self.mask
    }

    fn done(&self) -> bool {
        self.done
    }

    fn boxed_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

fn legal(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect()
}

/// Chooses actions during evaluation rollouts.
pub trait Strategy {
    fn act(&mut self, env: &dyn Environment) -> Result<usize>;
}

/// Uniform over the unmasked actions.
pub struct RandomStrategy(ChaCha8Rng);

impl RandomStrategy {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Strategy for RandomStrategy {
    fn act(&mut self, env: &dyn Environment) -> Result<usize> {
        legal(env.action_mask()).choose(&mut self.0).copied().ok_or(Error::EmptyEnabledSet)
    }
}

/// Maximizes the immediate reward by stepping a copy of the environment
/// with every unmasked action. Ties go to the lowest action index.
pub struct GreedyStrategy;

impl Strategy for GreedyStrategy {
    fn act(&mut self, env: &dyn Environment) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for a in legal(env.action_mask()) {
            let r = env.boxed_clone().step(a)?.reward;
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((a, r));
            }
        }
        best.map(|(a, _)| a).ok_or(Error::EmptyEnabledSet)
    }
}

/// Greedy policy extracted from a Q-table. Unseen observations fall back to
/// the lowest unmasked action.
#[derive(Debug, Clone, Default)]
pub struct GreedyPolicy {
    pub table: HashMap<Observation, Vec<f64>>,
}

impl GreedyPolicy {
    pub fn action(&self, obs: &Observation, mask: &[bool]) -> Option<usize> {
        let legal = legal(mask);
        match self.table.get(obs) {
            Some(q) => argmax(q, &legal),
            None => legal.first().copied(),
        }
    }
}

impl Strategy for GreedyPolicy {
    fn act(&mut self, env: &dyn Environment) -> Result<usize> {
        self.action(&env.observation(), env.action_mask()).ok_or(Error::EmptyEnabledSet)
    }
}

fn argmax(q: &[f64], legal: &[usize]) -> Option<usize> {
    let value = |a: usize| q.get(a).copied().unwrap_or(0.0);
    let mut best: Option<usize> = None;
    for &a in legal {
        if best.is_none_or(|b| value(a) > value(b)) {
            best = Some(a);
        }
    }
    best
}

/// Plays one episode and returns its total reward.
pub fn rollout(env: &mut dyn Environment, strategy: &mut dyn Strategy, seed: u64) -> Result<f64> {
    env.reset(seed)?;
    let mut total = 0.0;
    while !env.done() {
        let a = strategy.act(env)?;
        total += env.step(a)?.reward;
    }
    Ok(total)
}

/// Mean episode reward over `episodes` rollouts with seeds derived from `seed`.
pub fn evaluate(env: &mut dyn Environment, strategy: &mut dyn Strategy, episodes: usize, seed: u64) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..episodes {
        sum += rollout(env, strategy, run_seed(seed, i))?;
    }
    Ok(sum / episodes.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QConfig {
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_min: f64,
    /// Multiplicative decay of epsilon after every episode.
    pub epsilon_decay: f64,
    pub seed: u64,
}

impl Default for QConfig {
    fn default() -> Self {
        Self { episodes: 5000, alpha: 0.1, gamma: 1.0, epsilon: 1.0, epsilon_min: 0.05, epsilon_decay: 0.999, seed: 0 }
    }
}

/// Most Q-table entries (observations times actions) training may create.
pub const MAX_TABLE_ENTRIES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub episode: usize,
    pub reward: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct QResult {
    pub policy: GreedyPolicy,
    pub curve: Vec<CurvePoint>,
}

impl QResult {
    /// `episode,cumulative_reward,epsilon`, one row per training episode.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("episode,cumulative_reward,epsilon\n");
        for p in &self.curve {
            let _ = writeln!(out, "{},{},{}", p.episode, p.reward, p.epsilon);
        }
        out
    }
}

/// Tabular Q-learning with epsilon-greedy exploration over unmasked actions.
pub fn train_tabular_q(env: &mut dyn Environment, cfg: &QConfig) -> Result<QResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q: HashMap<Observation, Vec<f64>> = HashMap::new();
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut epsilon = cfg.epsilon;
    for episode in 0..cfg.episodes {
        let mut obs = env.reset(run_seed(cfg.seed, episode))?;
        let mut total = 0.0;
        while !env.done() {
            let options = legal(env.action_mask());
            let n = env.num_actions();
            let row = q.entry(obs.clone()).or_insert_with(|| vec![0.0; n]);
            row.resize(n, 0.0);
            let a = if rng.gen::<f64>() < epsilon {
                *options.choose(&mut rng).ok_or(Error::EmptyEnabledSet)?
            } else {
                argmax(row, &options).ok_or(Error::EmptyEnabledSet)?
            };
            let step = env.step(a)?;
            total += step.reward;
            let future = if step.done {
                0.0
            } else {
                let n = env.num_actions();
                let next = q.entry(step.observation.clone()).or_insert_with(|| vec![0.0; n]);
                next.resize(n, 0.0);
                argmax(next, &legal(&step.action_mask)).map_or(0.0, |b| next[b])
            };
            let entries = q.len() * env.num_actions();
            if entries > MAX_TABLE_ENTRIES {
                return Err(Error::StateSpaceTooLarge(entries));
            }
            let cell = &mut q.get_mut(&obs).expect("row inserted above")[a];
            *cell += cfg.alpha * (step.reward + cfg.gamma * future - *cell);
            obs = step.observation;
        }
        curve.push(CurvePoint { episode, reward: total, epsilon });
        epsilon = (epsilon * cfg.epsilon_decay).max(cfg.epsilon_min);
    }
    Ok(QResult { policy: GreedyPolicy { table: q }, curve })
}

/// Environment settings read from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub program: String,
    pub params: Params,
    pub seed: u64,
    pub max_steps: usize,
    pub q: QConfig,
}

impl EnvConfig {
    pub fn new(program: &str) -> Self {
        Self { program: program.to_string(), params: Params::new(), seed: 0, max_steps: 1000, q: QConfig::default() }
    }

    /// Known keys: `program`, `seed`, `max_steps`, `episodes`, `alpha`,
    /// `gamma`, `epsilon`, `epsilon_min`, `epsilon_decay`. Any other key is
    /// an example parameter. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new("");
        let bad = |k: &str, v: &str| Error::InvalidParameters(format!("cannot parse {k} = {v}"));
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::InvalidParameters(format!("expected key = value, got '{line}'")))?;
            let float = || v.parse::<f64>().map_err(|_| bad(k, v));
            let int = || v.parse::<u64>().map_err(|_| bad(k, v));
            match k {
                "program" => cfg.program = v.to_string(),
                "seed" => {
                    cfg.seed = int()?;
                    cfg.q.seed = cfg.seed;
                }
                "max_steps" => cfg.max_steps = int()? as usize,
                "episodes" => cfg.q.episodes = int()? as usize,
                "alpha" => cfg.q.alpha = float()?,
                "gamma" => cfg.q.gamma = float()?,
                "epsilon" => cfg.q.epsilon = float()?,
                "epsilon_min" => cfg.q.epsilon_min = float()?,
                "epsilon_decay" => cfg.q.epsilon_decay = float()?,
                _ => cfg.params = cfg.params.set(k, v),
            }
        }
        if cfg.program.is_empty() {
            return Err(Error::InvalidParameters("config names no program".into()));
        }
        Ok(cfg)
    }
}

/// Builds the environment for a registered example. Solver-backed examples
/// need a solver and an `action` variable; only the two-player bit-flip
/// game has one.
pub fn make_env(
    name: &str,
    params: &Params,
    max_steps: usize,
    solver: Option<Arc<Solver>>,
) -> Result<Box<dyn Environment>> {
    let info = examples::info(name)?;
    let program = examples::build(name, params)?;
    match info.kind {
        Kind::Discrete => Ok(Box::new(BpEnv::new(program, max_steps)?)),
        Kind::Smt if name == "bitflip_two_player" => {
            let solver = match solver {
                Some(s) => s,
                None => Arc::new(Solver::from_env()?),
            };
            let n: usize = params.get("n", 3)?;
            let m: usize = params.get("m", 3)?;
            Ok(Box::new(SmtEnv::new(program, solver, n.max(m), max_steps)?))
        }
        Kind::Smt => Err(Error::InvalidParameters(format!("{name} has no '{ACTION}' variable for an agent to set"))),
    }
}
