//! Sorted first-order formulas over Bool, Int and Real variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
            Sort::Real => "Real",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    name: Arc<str>,
    sort: Sort,
}

impl Variable {
    /// Panics unless `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
    pub fn new(name: impl AsRef<str>, sort: Sort) -> Self {
        let name = name.as_ref();
        assert!(is_valid_name(name), "illegal variable name '{name}'");
        Self { name: Arc::from(name), sort }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A concrete value of some sort. Reals are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SmtValue {
    Bool(bool),
    Int(i64),
    Real(BigRational),
}

impl SmtValue {
    pub fn sort(&self) -> Sort {
        match self {
            SmtValue::Bool(_) => Sort::Bool,
            SmtValue::Int(_) => Sort::Int,
            SmtValue::Real(_) => Sort::Real,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            SmtValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            SmtValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<&BigRational> {
        match self {
            SmtValue::Real(v) => Some(v),
            _ => None,
        }
    }

    /// Exact rational image of a finite `f64`.
    pub fn real(v: f64) -> Self {
        SmtValue::Real(BigRational::from_float(v).expect("finite real constant"))
    }

    pub fn to_f64(&self) -> Option<f64> {
        match self {
            SmtValue::Int(v) => Some(*v as f64),
            SmtValue::Real(r) => r.to_f64(),
            SmtValue::Bool(_) => None,
        }
    }
}

impl fmt::Display for SmtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmtValue::Bool(b) => write!(f, "{b}"),
            SmtValue::Int(v) => write!(f, "{v}"),
            SmtValue::Real(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(SmtValue),
    Var(Variable),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Cmp(CmpOp, Box<Formula>, Box<Formula>),
    Add(Vec<Formula>),
    Sub(Box<Formula>, Box<Formula>),
    Mul(Vec<Formula>),
    Neg(Box<Formula>),
}

/// A value for each variable, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(pub BTreeMap<String, SmtValue>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: SmtValue) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&SmtValue> {
        self.0.get(name)
    }

    /// Value of a term under this assignment.
    pub fn eval(&self, f: &Formula) -> Result<SmtValue> {
        f.eval(self)
    }

    pub fn eval_bool(&self, f: &Formula) -> Result<bool> {
        f.eval_bool(self)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<(String, SmtValue)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, SmtValue)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl Formula {
    pub fn tt() -> Self {
        Formula::Const(SmtValue::Bool(true))
    }

    pub fn ff() -> Self {
        Formula::Const(SmtValue::Bool(false))
    }

    pub fn bool(v: bool) -> Self {
        Formula::Const(SmtValue::Bool(v))
    }

    pub fn int(v: i64) -> Self {
        Formula::Const(SmtValue::Int(v))
    }

    pub fn real(v: f64) -> Self {
        Formula::Const(SmtValue::real(v))
    }

    pub fn value(v: SmtValue) -> Self {
        Formula::Const(v)
    }

    pub fn var(v: &Variable) -> Self {
        Formula::Var(v.clone())
    }

    pub fn bool_var(name: &str) -> Self {
        Formula::Var(Variable::new(name, Sort::Bool))
    }

    pub fn int_var(name: &str) -> Self {
        Formula::Var(Variable::new(name, Sort::Int))
    }

    pub fn real_var(name: &str) -> Self {
        Formula::Var(Variable::new(name, Sort::Real))
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Self {
        Formula::And(parts.into_iter().collect())
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Self {
        Formula::Or(parts.into_iter().collect())
    }

    pub fn sum(parts: impl IntoIterator<Item = Formula>) -> Self {
        Formula::Add(parts.into_iter().collect())
    }

    pub fn product(parts: impl IntoIterator<Item = Formula>) -> Self {
        Formula::Mul(parts.into_iter().collect())
    }

    pub fn implies(self, other: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    fn cmp_with(self, op: CmpOp, other: Formula) -> Self {
        Formula::Cmp(op, Box::new(self), Box::new(other))
    }

    pub fn equals(self, other: Formula) -> Self {
        self.cmp_with(CmpOp::Eq, other)
    }

    pub fn not_equals(self, other: Formula) -> Self {
        self.cmp_with(CmpOp::Ne, other)
    }

    pub fn lt(self, other: Formula) -> Self {
        self.cmp_with(CmpOp::Lt, other)
    }

    pub fn le(self, other: Formula) -> Self {
        self.cmp_with(CmpOp::Le, other)
    }

    pub fn gt(self, other: Formula) -> Self {
        self.cmp_with(CmpOp::Gt, other)
    }

    pub fn ge(self, other: Formula) -> Self {
        self.cmp_with(CmpOp::Ge, other)
    }

    /// True for the literal `False` (and empty disjunctions).
    pub fn is_false_literal(&self) -> bool {
        match self {
            Formula::Const(SmtValue::Bool(false)) => true,
            Formula::Or(parts) => parts.iter().all(Formula::is_false_literal),
            _ => false,
        }
    }

    /// Sort of this term, checking operands recursively.
    pub fn sort(&self) -> Result<Sort> {
        match self {
            Formula::Const(v) => Ok(v.sort()),
            Formula::Var(v) => Ok(v.sort()),
            Formula::Not(a) => {
                expect(a, Sort::Bool, "not")?;
                Ok(Sort::Bool)
            }
            Formula::And(parts) | Formula::Or(parts) => {
                for p in parts {
                    expect(p, Sort::Bool, "connective")?;
                }
                Ok(Sort::Bool)
            }
            Formula::Implies(a, b) => {
                expect(a, Sort::Bool, "implies")?;
                expect(b, Sort::Bool, "implies")?;
                Ok(Sort::Bool)
            }
            Formula::Cmp(op, a, b) => {
                let (sa, sb) = (a.sort()?, b.sort()?);
                if sa != sb {
                    return Err(Error::Sort(format!("comparison between {sa} and {sb}")));
                }
                if sa == Sort::Bool && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(Error::Sort("ordering comparison on Bool".into()));
                }
                Ok(Sort::Bool)
            }
            Formula::Add(parts) | Formula::Mul(parts) => {
                if parts.is_empty() {
                    return Err(Error::Sort("empty arithmetic term".into()));
                }
                numeric_common(parts.iter())
            }
            Formula::Sub(a, b) => numeric_common([a.as_ref(), b.as_ref()].into_iter()),
            Formula::Neg(a) => numeric_common(std::iter::once(a.as_ref())),
        }
    }

    /// Fails unless this is a well-sorted Boolean formula.
    pub fn check_bool(&self) -> Result<()> {
        match self.sort()? {
            Sort::Bool => {
                self.variables()?;
                Ok(())
            }
            s => Err(Error::Sort(format!("expected Bool formula, found {s}"))),
        }
    }

    /// Free variables by name. Errors when one name is used at two sorts.
    pub fn variables(&self) -> Result<BTreeMap<String, Sort>> {
        let mut out = BTreeMap::new();
        self.collect_vars(&mut out)?;
        Ok(out)
    }

    pub fn collect_vars(&self, out: &mut BTreeMap<String, Sort>) -> Result<()> {
        match self {
            Formula::Const(_) => Ok(()),
            Formula::Var(v) => match out.get(v.name()) {
                Some(s) if *s != v.sort() => {
                    Err(Error::Sort(format!("variable '{}' used as {} and {}", v.name(), s, v.sort())))
                }
                _ => {
                    out.insert(v.name().to_string(), v.sort());
                    Ok(())
                }
            },
            Formula::Not(a) | Formula::Neg(a) => a.collect_vars(out),
            Formula::And(ps) | Formula::Or(ps) | Formula::Add(ps) | Formula::Mul(ps) => {
                ps.iter().try_for_each(|p| p.collect_vars(out))
            }
            Formula::Implies(a, b) | Formula::Cmp(_, a, b) | Formula::Sub(a, b) => {
                a.collect_vars(out)?;
                b.collect_vars(out)
            }
        }
    }

    /// Whether every product has at most one non-constant factor.
    pub fn is_linear(&self) -> bool {
        match self {
            Formula::Const(_) | Formula::Var(_) => true,
            Formula::Mul(ps) => ps.iter().filter(|p| !p.is_ground()).count() <= 1 && ps.iter().all(Formula::is_linear),
            Formula::Not(a) | Formula::Neg(a) => a.is_linear(),
            Formula::And(ps) | Formula::Or(ps) | Formula::Add(ps) => ps.iter().all(Formula::is_linear),
            Formula::Implies(a, b) | Formula::Cmp(_, a, b) | Formula::Sub(a, b) => a.is_linear() && b.is_linear(),
        }
    }

    fn is_ground(&self) -> bool {
        match self {
            Formula::Const(_) => true,
            Formula::Var(_) => false,
            Formula::Not(a) | Formula::Neg(a) => a.is_ground(),
            Formula::And(ps) | Formula::Or(ps) | Formula::Add(ps) | Formula::Mul(ps) => {
                ps.iter().all(Formula::is_ground)
            }
            Formula::Implies(a, b) | Formula::Cmp(_, a, b) | Formula::Sub(a, b) => a.is_ground() && b.is_ground(),
        }
    }

    pub fn eval_bool(&self, a: &Assignment) -> Result<bool> {
        match self.eval(a)? {
            SmtValue::Bool(b) => Ok(b),
            v => Err(Error::Sort(format!("expected Bool value, found {v}"))),
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<SmtValue> {
        match self {
            Formula::Const(v) => Ok(v.clone()),
            Formula::Var(v) => {
                let value = a.get(v.name()).ok_or_else(|| Error::MissingVariable(v.name().to_string()))?;
                if value.sort() != v.sort() {
                    return Err(Error::Sort(format!("'{}' is {} but assigned {value}", v.name(), v.sort())));
                }
                Ok(value.clone())
            }
            Formula::Not(x) => Ok(SmtValue::Bool(!x.eval_bool(a)?)),
            Formula::And(ps) => {
                let mut result = true;
                for p in ps {
                    result &= p.eval_bool(a)?;
                }
                Ok(SmtValue::Bool(result))
            }
            Formula::Or(ps) => {
                let mut result = false;
                for p in ps {
                    result |= p.eval_bool(a)?;
                }
                Ok(SmtValue::Bool(result))
            }
            Formula::Implies(x, y) => {
                let (x, y) = (x.eval_bool(a)?, y.eval_bool(a)?);
                Ok(SmtValue::Bool(!x || y))
            }
            Formula::Cmp(op, x, y) => {
                let (x, y) = (x.eval(a)?, y.eval(a)?);
                if x.sort() != y.sort() {
                    return Err(Error::Sort(format!("comparison between {x} and {y}")));
                }
                let ord = x.cmp(&y);
                Ok(SmtValue::Bool(match op {
                    CmpOp::Eq => ord.is_eq(),
                    CmpOp::Ne => ord.is_ne(),
                    CmpOp::Lt => ord.is_lt(),
                    CmpOp::Le => ord.is_le(),
                    CmpOp::Gt => ord.is_gt(),
                    CmpOp::Ge => ord.is_ge(),
                }))
            }
            Formula::Add(ps) => fold_numeric(ps, a, Num::add),
            Formula::Mul(ps) => fold_numeric(ps, a, Num::mul),
            Formula::Sub(x, y) => Num::sub(Num::of(x.eval(a)?)?, Num::of(y.eval(a)?)?).map(Num::value),
            Formula::Neg(x) => Num::neg(Num::of(x.eval(a)?)?).map(Num::value),
        }
    }
}

fn expect(f: &Formula, sort: Sort, ctx: &str) -> Result<()> {
    let s = f.sort()?;
    if s != sort {
        return Err(Error::Sort(format!("{ctx} expects {sort}, found {s}")));
    }
    Ok(())
}

fn numeric_common<'a>(parts: impl Iterator<Item = &'a Formula>) -> Result<Sort> {
    let mut sort = None;
    for p in parts {
        let s = p.sort()?;
        if s == Sort::Bool {
            return Err(Error::Sort("arithmetic on Bool".into()));
        }
        match sort {
            None => sort = Some(s),
            Some(prev) if prev != s => return Err(Error::Sort(format!("arithmetic mixes {prev} and {s}"))),
            _ => {}
        }
    }
    Ok(sort.expect("non-empty"))
}

enum Num {
    Int(i64),
    Real(BigRational),
}

impl Num {
    fn of(v: SmtValue) -> Result<Num> {
        match v {
            SmtValue::Int(i) => Ok(Num::Int(i)),
            SmtValue::Real(r) => Ok(Num::Real(r)),
            SmtValue::Bool(_) => Err(Error::Sort("arithmetic on Bool".into())),
        }
    }

    fn value(self) -> SmtValue {
        match self {
            Num::Int(i) => SmtValue::Int(i),
            Num::Real(r) => SmtValue::Real(r),
        }
    }

    fn combine(
        a: Num,
        b: Num,
        int: fn(i64, i64) -> Option<i64>,
        real: fn(BigRational, BigRational) -> BigRational,
    ) -> Result<Num> {
        match (a, b) {
            (Num::Int(x), Num::Int(y)) => int(x, y).map(Num::Int).ok_or_else(|| Error::Eval("integer overflow".into())),
            (Num::Real(x), Num::Real(y)) => Ok(Num::Real(real(x, y))),
            _ => Err(Error::Sort("arithmetic mixes Int and Real".into())),
        }
    }

    fn add(a: Num, b: Num) -> Result<Num> {
        Num::combine(a, b, i64::checked_add, |x, y| x + y)
    }

    fn sub(a: Num, b: Num) -> Result<Num> {
        Num::combine(a, b, i64::checked_sub, |x, y| x - y)
    }

    fn mul(a: Num, b: Num) -> Result<Num> {
        Num::combine(a, b, i64::checked_mul, |x, y| x * y)
    }

    fn neg(a: Num) -> Result<Num> {
        match a {
            Num::Int(x) => x.checked_neg().map(Num::Int).ok_or_else(|| Error::Eval("integer overflow".into())),
            Num::Real(x) => Ok(Num::Real(-x)),
        }
    }
}

fn fold_numeric(ps: &[Formula], a: &Assignment, op: fn(Num, Num) -> Result<Num>) -> Result<SmtValue> {
    let mut iter = ps.iter();
    let first = iter.next().ok_or_else(|| Error::Sort("empty arithmetic term".into()))?;
    let mut acc = Num::of(first.eval(a)?)?;
    for p in iter {
        acc = op(acc, Num::of(p.eval(a)?)?)?;
    }
    Ok(acc.value())
}

/// Renders a rational as an SMT-LIB real literal.
pub fn rational_literal(r: &BigRational) -> String {
    let abs = r.abs();
    let body = if abs.is_integer() {
        format!("{}.0", abs.numer())
    } else {
        format!("(/ {}.0 {}.0)", abs.numer(), abs.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl ops::Not for Formula {
    type Output = Formula;
    fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }
}

impl ops::BitAnd for Formula {
    type Output = Formula;
    fn bitand(self, rhs: Formula) -> Formula {
        Formula::And(vec![self, rhs])
    }
}

impl ops::BitOr for Formula {
    type Output = Formula;
    fn bitor(self, rhs: Formula) -> Formula {
        Formula::Or(vec![self, rhs])
    }
}

impl ops::Add for Formula {
    type Output = Formula;
    fn add(self, rhs: Formula) -> Formula {
        Formula::Add(vec![self, rhs])
    }
}

impl ops::Sub for Formula {
    type Output = Formula;
    fn sub(self, rhs: Formula) -> Formula {
        Formula::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Formula {
    type Output = Formula;
    fn mul(self, rhs: Formula) -> Formula {
        Formula::Mul(vec![self, rhs])
    }
}

impl ops::Neg for Formula {
    type Output = Formula;
    fn neg(self) -> Formula {
        Formula::Neg(Box::new(self))
    }
}
