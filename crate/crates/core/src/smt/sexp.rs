//! Minimal s-expression reader for solver responses.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::formula::{SmtValue, Sort};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }
}

/// Reads every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() {
        if chars[*pos].is_whitespace() {
            *pos += 1;
        } else if chars[*pos] == ';' {
            while *pos < chars.len() && chars[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_one(chars: &[char], pos: &mut usize) -> Result<Sexp> {
    skip_ws(chars, pos);
    match chars.get(*pos) {
        None => Err(Error::Parse("unexpected end of input".into())),
        Some(')') => Err(Error::Parse(format!("unexpected ')' at offset {}", *pos))),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    None => return Err(Error::Parse("unbalanced '('".into())),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_one(chars, pos)?),
                }
            }
        }
        Some(&quote @ ('"' | '|')) => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() && chars[*pos] != quote {
                *pos += 1;
            }
            if *pos >= chars.len() {
                return Err(Error::Parse("unterminated quoted token".into()));
            }
            *pos += 1;
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
        Some(_) => {
            let start = *pos;
            while *pos < chars.len() && !chars[*pos].is_whitespace() && !matches!(chars[*pos], '(' | ')' | ';') {
                *pos += 1;
            }
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
    }
}

/// Parses a numeral or decimal such as `12`, `0.25` or `0.7071?` (an
/// approximate decimal; the `?` is dropped) into an exact rational.
pub fn decimal(text: &str) -> Option<BigRational> {
    let text = text.strip_suffix('?').unwrap_or(text);
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() || !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{whole}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(digits, scale))
}

/// Value `s` under the declared sort.
pub fn value(s: &Sexp, sort: Sort) -> Result<SmtValue> {
    match sort {
        Sort::Bool => match s.atom() {
            Some("true") => Ok(SmtValue::Bool(true)),
            Some("false") => Ok(SmtValue::Bool(false)),
            _ => Err(Error::Parse(format!("expected a Bool value, got {s:?}"))),
        },
        Sort::Int => {
            let r = number(s)?;
            if !r.is_integer() {
                return Err(Error::Parse(format!("expected an Int value, got {s:?}")));
            }
            let i: i64 = r.to_integer().try_into().map_err(|_| Error::Parse(format!("Int value out of range: {r}")))?;
            Ok(SmtValue::Int(i))
        }
        Sort::Real => Ok(SmtValue::Real(number(s)?)),
    }
}

/// Whether the term is an algebraic number the reader cannot represent.
pub fn is_root_obj(s: &Sexp) -> bool {
    match s {
        Sexp::Atom(_) => false,
        Sexp::List(items) => items.first().and_then(Sexp::atom) == Some("root-obj") || items.iter().any(is_root_obj),
    }
}

fn number(s: &Sexp) -> Result<BigRational> {
    let bad = || Error::Parse(format!("not a numeric value: {s:?}"));
    match s {
        Sexp::Atom(a) => decimal(a).ok_or_else(bad),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Ok(-number(x)?),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = number(y)?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(number(x)? / d)
            }
            [Sexp::Atom(op), rest @ ..] if op == "+" => {
                rest.iter().try_fold(BigRational::zero(), |acc, x| Ok(acc + number(x)?))
            }
            [Sexp::Atom(op), rest @ ..] if op == "*" => {
                rest.iter().try_fold(BigRational::one(), |acc, x| Ok(acc * number(x)?))
            }
            _ => Err(bad()),
        },
    }
}
