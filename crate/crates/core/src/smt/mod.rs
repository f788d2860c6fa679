//! Solver-backed statements: formulas, SMT-LIB2 emission, the external
//! solver and the constraint arbiter.

pub mod engine;
pub mod formula;
pub mod sexp;
pub mod smtlib;
pub mod solver;

pub use engine::{
    compose_query, constraint_wakeup, next_assignment, next_assignment_with, run_smt, SmtRunConfig, SmtSession,
};
pub use formula::{Assignment, CmpOp, Formula, SmtValue, Sort, Variable};
pub use solver::{SatResult, Solver, SolverConfig, SOLVER_ENV};
