use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::smt::{Assignment, Formula};
use crate::statement::{ConstraintStatement, Resume, SyncStatement};

/// Cinderella-Stepmother parameters: `n` buckets in a circle of capacity
/// `b`, Cinderella empties `c` adjacent buckets, the stepmother pours `a`
/// units, for `steps` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CinderellaParams {
    pub n: usize,
    pub b: i64,
    pub c: usize,
    pub a: i64,
    pub steps: u32,
}

impl CinderellaParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.b <= 0 || self.c == 0 || self.a <= 0 || self.steps == 0 {
            return Err(Error::InvalidParameters(format!("cinderella parameters must be positive: {self:?}")));
        }
        if self.c > self.n {
            return Err(Error::InvalidParameters(format!(
                "cinderella empties c={} of only n={} buckets",
                self.c, self.n
            )));
        }
        Ok(())
    }
}

pub fn buckets_event(levels: &[i64]) -> Event {
    Event::with_payload("buckets", levels.iter().enumerate().map(|(i, v)| (format!("b{i}"), *v)))
}

pub fn buckets_of(e: &Event, n: usize) -> Option<Vec<i64>> {
    (0..n).map(|i| e.get(&format!("b{i}")).and_then(|v| v.as_int())).collect()
}

/// Every way to add `a` non-negative units to `prev`.
pub fn pourings(prev: &[i64], a: i64) -> Vec<Vec<i64>> {
    fn go(prev: &[i64], left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let i = cur.len();
        if i + 1 == prev.len() {
            cur.push(prev[i] + left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for d in 0..=left {
            cur.push(prev[i] + d);
            go(prev, left - d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if !prev.is_empty() {
        go(prev, a, &mut Vec::with_capacity(prev.len()), &mut out);
    }
    out
}

/// The `n` results of emptying `c` adjacent buckets of the circle, starting
/// at each bucket. Duplicates are kept out.
pub fn emptyings(prev: &[i64], c: usize) -> Vec<Vec<i64>> {
    let n = prev.len();
    let mut out: Vec<Vec<i64>> = Vec::new();
    for start in 0..n {
        let mut next = prev.to_vec();
        for k in 0..c {
            next[(start + k) % n] = 0;
        }
        if !out.contains(&next) {
            out.push(next);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Round {
    levels: Option<Vec<i64>>,
    round: u32,
    stepmother: bool,
}

fn discrete_main(p: CinderellaParams) -> BThread {
    BThread::from_fns(
        "main",
        Round { levels: None, round: 0, stepmother: true },
        move |s: &Round| {
            let Some(levels) = &s.levels else {
                return Ok(Some(SyncStatement::new().request(buckets_event(&vec![0; p.n])).into()));
            };
            if s.round >= p.steps {
                return Ok(None);
            }
            let options = if s.stepmother { pourings(levels, p.a) } else { emptyings(levels, p.c) };
            Ok(Some(SyncStatement::new().request_all(options.iter().map(|l| buckets_event(l))).into()))
        },
        move |s: &Round, r: &Resume| {
            let levels =
                buckets_of(r.event().ok_or("expected a bucket event")?, p.n).ok_or("malformed bucket event")?;
            Ok(match s.levels {
                None => Round { levels: Some(levels), ..s.clone() },
                Some(_) if s.stepmother => Round { levels: Some(levels), round: s.round, stepmother: false },
                Some(_) => Round { levels: Some(levels), round: s.round + 1, stepmother: true },
            })
        },
    )
}

/// Blocks every bucket event with some level above `b`.
pub fn bucket_limit(n: usize, b: i64) -> BThread {
    let over = EventSet::predicate(format!("some bucket > {b}"), move |e| {
        e.name() == "buckets" && buckets_of(e, n).is_some_and(|l| l.iter().any(|v| *v > b))
    });
    BThread::from_fns(
        "bucket_limit",
        (),
        move |_: &()| Ok(Some(SyncStatement::new().block(over.clone()).into())),
        |_: &(), _: &Resume| Ok(()),
    )
}

/// Discrete version: every bucket configuration is its own event.
pub fn cinderella_discrete(p: CinderellaParams) -> Result<BProgram> {
    p.validate()?;
    BProgram::from_threads("cinderella_discrete", [bucket_limit(p.n, p.b), discrete_main(p)])
}

fn bucket_var(i: usize) -> Formula {
    Formula::int_var(&format!("b{i}"))
}

fn levels_of(a: &Assignment, n: usize) -> Option<Vec<i64>> {
    (0..n).map(|i| a.get(&format!("b{i}")).and_then(|v| v.as_int())).collect()
}

/// The stepmother adds exactly `a` units without removing any.
pub fn stepmother(prev: &[i64], a: i64) -> Formula {
    let deltas: Vec<Formula> = prev.iter().enumerate().map(|(i, p)| bucket_var(i) - Formula::int(*p)).collect();
    let added = Formula::sum(deltas.clone()).equals(Formula::int(a));
    let non_neg = Formula::and(deltas.into_iter().map(|d| d.ge(Formula::int(0))));
    Formula::and([added, non_neg])
}

/// Cinderella empties `c` adjacent buckets of the circle and leaves the
/// rest unchanged.
pub fn cinderella(prev: &[i64], c: usize) -> Formula {
    let n = prev.len();
    Formula::or((0..n).map(|start| {
        Formula::and((0..n).map(|j| {
            let emptied = (0..c).any(|k| (start + k) % n == j);
            bucket_var(j).equals(Formula::int(if emptied { 0 } else { prev[j] }))
        }))
    }))
}

/// Blocks any bucket above `b`, forever.
pub fn smt_bucket_limit(n: usize, b: i64) -> BThread {
    let over = Formula::or((0..n).map(|i| bucket_var(i).gt(Formula::int(b))));
    BThread::from_fns(
        "bucket_limit",
        (),
        move |_: &()| Ok(Some(ConstraintStatement::new().block(over.clone()).into())),
        |_: &(), _: &Resume| Ok(()),
    )
}

fn smt_main(p: CinderellaParams) -> BThread {
    BThread::from_fns(
        "main",
        Round { levels: None, round: 0, stepmother: true },
        move |s: &Round| {
            let Some(levels) = &s.levels else {
                let empty = Formula::and((0..p.n).map(|i| bucket_var(i).equals(Formula::int(0))));
                return Ok(Some(ConstraintStatement::new().request(empty).into()));
            };
            if s.round >= p.steps {
                return Ok(None);
            }
            let f = if s.stepmother { stepmother(levels, p.a) } else { cinderella(levels, p.c) };
            Ok(Some(ConstraintStatement::new().request(f).into()))
        },
        move |s: &Round, r: &Resume| {
            let a = r.assignment().ok_or("expected an assignment")?;
            let levels = levels_of(a, p.n).ok_or("assignment lacks a bucket level")?;
            Ok(match s.levels {
                None => Round { levels: Some(levels), ..s.clone() },
                Some(_) if s.stepmother => Round { levels: Some(levels), round: s.round, stepmother: false },
                Some(_) => Round { levels: Some(levels), round: s.round + 1, stepmother: true },
            })
        },
    )
}

/// Solver version over Int variables `b0..b{n-1}`.
pub fn cinderella_smt(p: CinderellaParams) -> Result<BProgram> {
    p.validate()?;
    BProgram::from_threads("cinderella_smt", [smt_bucket_limit(p.n, p.b), smt_main(p)])
}
