//! The solver-backed arbiter: events are satisfying assignments of the
//! composed request/block constraints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::formula::{Assignment, Formula};
use super::solver::{SatResult, Solver};
use crate::bthread::BProgram;
use crate::engine::{Session, Terminal, Trace};
use crate::error::{Error, Result};
use crate::statement::{ConstraintStatement, Resume, Statement};

/// `Or(requests) ∧ ¬block₁ ∧ … ∧ ¬blockₙ`.
pub fn compose_query<'a>(statements: impl IntoIterator<Item = &'a ConstraintStatement>) -> Result<Formula> {
    let statements: Vec<&ConstraintStatement> = statements.into_iter().collect();
    let mut parts = vec![Formula::or(statements.iter().map(|s| s.request.clone()).filter(|r| !r.is_false_literal()))];
    parts.extend(statements.iter().filter(|s| !s.block.is_false_literal()).map(|s| !s.block.clone()));
    let query = Formula::and(parts);
    query.check_bool()?;
    Ok(query)
}

/// Whether a b-thread paused at `s` resumes on `a`.
pub fn constraint_wakeup(s: &ConstraintStatement, a: &Assignment) -> Result<bool> {
    Ok(s.request.eval_bool(a)? || s.wait_for.eval_bool(a)?)
}

#[derive(Debug, Clone)]
pub struct SmtRunConfig {
    pub max_steps: usize,
    /// Seed for resolving choices.
    pub seed: u64,
}

impl Default for SmtRunConfig {
    fn default() -> Self {
        Self { max_steps: 1_000, seed: 0 }
    }
}

/// A live solver-backed program. Choices are resolved with the session's
/// RNG before every sync point.
#[derive(Debug, Clone)]
pub struct SmtSession {
    session: Session,
    rng: ChaCha8Rng,
}

impl SmtSession {
    pub fn new(program: &BProgram, seed: u64) -> Result<Self> {
        let mut s = Self { session: Session::new(program)?, rng: ChaCha8Rng::seed_from_u64(seed) };
        s.settle()?;
        Ok(s)
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    fn settle(&mut self) -> Result<()> {
        self.session.resolve_choices(&mut self.rng)
    }

    /// Statements of the live b-threads, with their index.
    pub fn constraints(&self) -> Result<Vec<(usize, &ConstraintStatement)>> {
        let mut out = Vec::new();
        for (i, inst) in self.session.instances().iter().enumerate() {
            match inst.statement() {
                None => {}
                Some(Statement::Constraint(c)) => out.push((i, c)),
                Some(Statement::Sync(_)) => {
                    return Err(Error::UnsupportedStatement(format!(
                        "discrete sync statement from '{}' under the solver arbiter",
                        inst.name()
                    )))
                }
                Some(Statement::Choice(_)) => {
                    return Err(Error::UnsupportedStatement(format!("unresolved choice in '{}'", inst.name())))
                }
            }
        }
        Ok(out)
    }

    /// The query at the current sync point, or `None` when every b-thread
    /// has terminated.
    pub fn query(&self) -> Result<Option<Formula>> {
        let cs = self.constraints()?;
        if cs.is_empty() {
            return Ok(None);
        }
        compose_query(cs.into_iter().map(|(_, c)| c)).map(Some)
    }

    pub fn step_reward(&self) -> f64 {
        self.session.step_reward()
    }

    /// Resumes every b-thread woken by `a`, then resolves new choices.
    pub fn fire(&mut self, a: &Assignment) -> Result<()> {
        let woken: Vec<usize> = {
            let mut w = Vec::new();
            for (i, c) in self.constraints()? {
                if constraint_wakeup(c, a)? {
                    w.push(i);
                }
            }
            w
        };
        for i in woken {
            self.session.instances_mut()[i].resume(Resume::Assignment(a.clone()))?;
        }
        self.settle()
    }

    pub fn is_done(&self) -> Result<bool> {
        Ok(self.constraints()?.is_empty())
    }
}

/// Solves the current sync point, or reports why the run is over.
pub fn next_assignment(s: &SmtSession, solver: &Solver) -> Result<std::result::Result<Assignment, Terminal>> {
    next_assignment_with(s, solver, None)
}

/// Like [`next_assignment`], with an additional constraint conjoined to the
/// query (an agent's choice of action, for instance).
pub fn next_assignment_with(
    s: &SmtSession,
    solver: &Solver,
    extra: Option<&Formula>,
) -> Result<std::result::Result<Assignment, Terminal>> {
    let Some(query) = s.query()? else { return Ok(Err(Terminal::Completed)) };
    let query = match extra {
        Some(f) => Formula::and([query, f.clone()]),
        None => query,
    };
    if query.is_false_literal() || matches!(&query, Formula::And(ps) if ps.iter().any(Formula::is_false_literal)) {
        return Ok(Err(Terminal::Deadlock));
    }
    // Wakeup also evaluates waitFor formulas, so their variables need values
    // even when no request mentions them.
    let mut vars = query.variables()?;
    let mut extra = Vec::new();
    for (_, c) in s.constraints()? {
        let w = c.wait_for.variables()?;
        if w.keys().any(|k| !vars.contains_key(k)) {
            vars.extend(w);
            extra.push(c.wait_for.clone() | !c.wait_for.clone());
        }
    }
    let query = if extra.is_empty() { query } else { Formula::and(std::iter::once(query).chain(extra)) };
    Ok(match solver.solve(&query)? {
        SatResult::Sat(a) => Ok(a),
        SatResult::Unsat => Err(Terminal::Deadlock),
    })
}

/// Executes the solver-backed synchronization loop.
pub fn run_smt(program: &BProgram, solver: &Solver, config: &SmtRunConfig) -> Result<Trace<Assignment>> {
    let mut s = SmtSession::new(program, config.seed)?;
    let mut trace = Trace { events: Vec::new(), rewards: Vec::new(), terminal: Terminal::Completed };
    loop {
        if s.is_done()? {
            trace.terminal = Terminal::Completed;
            return Ok(trace);
        }
        if trace.events.len() >= config.max_steps {
            trace.terminal = Terminal::StepLimit;
            return Ok(trace);
        }
        match next_assignment(&s, solver)? {
            Err(t) => {
                trace.terminal = t;
                return Ok(trace);
            }
            Ok(a) => {
                trace.rewards.push(s.step_reward());
                s.fire(&a)?;
                trace.events.push(a);
            }
        }
    }
}
