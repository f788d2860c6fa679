//! SMT-LIB2 rendering of formulas and queries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::formula::{rational_literal, CmpOp, Formula, SmtValue, Sort};
use crate::error::Result;

pub fn term(f: &Formula) -> String {
    let mut out = String::new();
    write_term(&mut out, f);
    out
}

fn app(out: &mut String, op: &str, args: &[&Formula]) {
    out.push('(');
    out.push_str(op);
    for a in args {
        out.push(' ');
        write_term(out, a);
    }
    out.push(')');
}

fn nary(out: &mut String, op: &str, unit: &str, parts: &[Formula]) {
    match parts {
        [] => out.push_str(unit),
        [one] => write_term(out, one),
        _ => app(out, op, &parts.iter().collect::<Vec<_>>()),
    }
}

fn write_term(out: &mut String, f: &Formula) {
    match f {
        Formula::Const(SmtValue::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
        Formula::Const(SmtValue::Int(i)) if *i < 0 => {
            let _ = write!(out, "(- {})", i.unsigned_abs());
        }
        Formula::Const(SmtValue::Int(i)) => {
            let _ = write!(out, "{i}");
        }
        Formula::Const(SmtValue::Real(r)) => out.push_str(&rational_literal(r)),
        Formula::Var(v) => out.push_str(v.name()),
        Formula::Not(a) => app(out, "not", &[a]),
        Formula::And(ps) => nary(out, "and", "true", ps),
        Formula::Or(ps) => nary(out, "or", "false", ps),
        Formula::Implies(a, b) => app(out, "=>", &[a, b]),
        Formula::Cmp(op, a, b) => {
            let name = match op {
                CmpOp::Eq => "=",
                CmpOp::Ne => "distinct",
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
            };
            app(out, name, &[a, b]);
        }
        // Empty sums and products are rejected by sort checking.
        Formula::Add(ps) => nary(out, "+", "0", ps),
        Formula::Mul(ps) => nary(out, "*", "1", ps),
        Formula::Sub(a, b) => app(out, "-", &[a, b]),
        Formula::Neg(a) => app(out, "-", &[a]),
    }
}

/// The logic header for a query over `vars`.
pub fn logic(vars: &BTreeMap<String, Sort>, query: &Formula) -> &'static str {
    let ints = vars.values().any(|s| *s == Sort::Int);
    let reals = vars.values().any(|s| *s == Sort::Real);
    let linear = query.is_linear();
    match (ints, reals, linear) {
        (false, false, _) => "QF_UF",
        (true, false, true) => "QF_LIA",
        (false, true, true) => "QF_LRA",
        (true, true, true) => "QF_LIRA",
        (true, false, false) => "QF_NIA",
        (false, true, false) => "QF_NRA",
        (true, true, false) => "QF_NIRA",
    }
}

/// A complete one-shot script: options, declarations, the assertion,
/// `check-sat`, and `get-value` over every variable.
pub fn script(query: &Formula, seed: u64) -> Result<String> {
    script_with(query, seed, &[])
}

/// Like [`script`] with extra `set-option` lines placed before the logic.
pub fn script_with(query: &Formula, seed: u64, options: &[(&str, &str)]) -> Result<String> {
    query.check_bool()?;
    let vars = query.variables()?;
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    let _ = writeln!(out, "(set-option :random-seed {seed})");
    for (k, v) in options {
        let _ = writeln!(out, "(set-option :{k} {v})");
    }
    let _ = writeln!(out, "(set-logic {})", logic(&vars, query));
    for (name, sort) in &vars {
        let _ = writeln!(out, "(declare-const {name} {sort})");
    }
    let _ = writeln!(out, "(assert {})", term(query));
    out.push_str("(check-sat)\n");
    if !vars.is_empty() {
        let names: Vec<&str> = vars.keys().map(String::as_str).collect();
        let _ = writeln!(out, "(get-value ({}))", names.join(" "));
    }
    out.push_str("(exit)\n");
    Ok(out)
}
