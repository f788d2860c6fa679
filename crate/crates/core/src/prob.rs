//! Categorical choices inside b-threads: sampling for execution and exact
//! outcome expansion for analysis.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;

use crate::error::{Error, Result};
use crate::event::Scalar;

/// Probability tolerance accepted when validating a distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of outcomes `expand_outcomes` will enumerate.
pub const DEFAULT_OUTCOME_CAP: u128 = 1_000_000;

/// A categorical draw, optionally repeated.
#[derive(Debug, Clone)]
pub struct ChoiceSpec {
    distribution: Vec<(Scalar, f64)>,
    pub repeat: usize,
    pub replace: bool,
    pub sorted: bool,
}

/// The value delivered back to a b-thread after its choice is resolved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    One(Scalar),
    Many(Vec<Scalar>),
}

impl Outcome {
    pub fn values(&self) -> &[Scalar] {
        match self {
            Outcome::One(v) => std::slice::from_ref(v),
            Outcome::Many(vs) => vs,
        }
    }

    pub fn single(&self) -> Option<&Scalar> {
        match self {
            Outcome::One(v) => Some(v),
            Outcome::Many(_) => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::One(v) => write!(f, "{v}"),
            Outcome::Many(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl ChoiceSpec {
    /// A single draw from `distribution` (value → probability, in the given order).
    pub fn new<V: Into<Scalar>>(distribution: impl IntoIterator<Item = (V, f64)>) -> Self {
        Self {
            distribution: distribution.into_iter().map(|(v, p)| (v.into(), p)).collect(),
            repeat: 1,
            replace: true,
            sorted: false,
        }
    }

    /// Uniform distribution over `values`.
    pub fn uniform<V: Into<Scalar>>(values: impl IntoIterator<Item = V>) -> Self {
        let values: Vec<Scalar> = values.into_iter().map(Into::into).collect();
        let p = 1.0 / values.len().max(1) as f64;
        Self::new(values.into_iter().map(|v| (v, p)))
    }

    pub fn repeat(mut self, repeat: usize) -> Self {
        self.repeat = repeat;
        self
    }

    pub fn replace(mut self, replace: bool) -> Self {
        self.replace = replace;
        self
    }

    pub fn sorted(mut self, sorted: bool) -> Self {
        self.sorted = sorted;
        self
    }

    pub fn distribution(&self) -> &[(Scalar, f64)] {
        &self.distribution
    }

    pub fn validate(&self) -> Result<()> {
        if self.distribution.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for (v, p) in &self.distribution {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p} of {v} is not a non-negative number")));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidDistribution(format!("value {v} listed twice")));
            }
            total += p;
        }
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        if self.repeat == 0 {
            return Err(Error::InvalidDistribution("repeat must be at least 1".into()));
        }
        let positive = self.distribution.iter().filter(|(_, p)| *p > 0.0).count();
        if !self.replace && self.repeat > positive {
            return Err(Error::InvalidDistribution(format!(
                "cannot draw {} values without replacement from {positive} with positive probability",
                self.repeat
            )));
        }
        Ok(())
    }

    fn wrap(&self, mut draws: Vec<Scalar>) -> Outcome {
        if self.repeat == 1 {
            Outcome::One(draws.pop().expect("one draw"))
        } else {
            if self.sorted {
                draws.sort();
            }
            Outcome::Many(draws)
        }
    }

    /// Upper bound on the number of ordered draw sequences.
    fn sequence_count(&self) -> u128 {
        let k = self.distribution.iter().filter(|(_, p)| *p > 0.0).count() as u128;
        let mut count: u128 = 1;
        for i in 0..self.repeat as u128 {
            let factor = if self.replace { k } else { k.saturating_sub(i) };
            count = count.saturating_mul(factor);
        }
        count
    }
}

impl PartialEq for ChoiceSpec {
    fn eq(&self, other: &Self) -> bool {
        self.repeat == other.repeat
            && self.replace == other.replace
            && self.sorted == other.sorted
            && self.distribution.len() == other.distribution.len()
            && self
                .distribution
                .iter()
                .zip(&other.distribution)
                .all(|((a, p), (b, q))| a == b && p.to_bits() == q.to_bits())
    }
}

impl Eq for ChoiceSpec {}

impl Hash for ChoiceSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.repeat.hash(state);
        self.replace.hash(state);
        self.sorted.hash(state);
        for (v, p) in &self.distribution {
            v.hash(state);
            p.to_bits().hash(state);
        }
    }
}

fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        last_positive = i;
        if u < *w {
            return i;
        }
        u -= w;
    }
    last_positive
}

/// Draws an outcome. Without replacement, each draw renormalizes over the
/// values not yet drawn.
pub fn sample<R: Rng + ?Sized>(spec: &ChoiceSpec, rng: &mut R) -> Result<Outcome> {
    spec.validate()?;
    let mut weights: Vec<f64> = spec.distribution.iter().map(|(_, p)| *p).collect();
    let mut draws = Vec::with_capacity(spec.repeat);
    for _ in 0..spec.repeat {
        let i = draw_index(&weights, rng);
        draws.push(spec.distribution[i].0.clone());
        if !spec.replace {
            weights[i] = 0.0;
        }
    }
    Ok(spec.wrap(draws))
}

/// Enumerates every outcome with its exact probability.
pub fn expand_outcomes(spec: &ChoiceSpec) -> Result<Vec<(Outcome, f64)>> {
    expand_outcomes_capped(spec, DEFAULT_OUTCOME_CAP)
}

pub fn expand_outcomes_capped(spec: &ChoiceSpec, cap: u128) -> Result<Vec<(Outcome, f64)>> {
    spec.validate()?;
    let count = spec.sequence_count();
    if count > cap {
        return Err(Error::SupportTooLarge { count, cap });
    }
    let mut sequences = Vec::new();
    let mut used = vec![false; spec.distribution.len()];
    let mut prefix = Vec::with_capacity(spec.repeat);
    enumerate(spec, &mut used, &mut prefix, 1.0, &mut sequences);

    if spec.repeat > 1 && spec.sorted {
        let mut merged: BTreeMap<Outcome, f64> = BTreeMap::new();
        for (draws, p) in sequences {
            *merged.entry(spec.wrap(draws)).or_insert(0.0) += p;
        }
        Ok(merged.into_iter().collect())
    } else {
        Ok(sequences.into_iter().map(|(d, p)| (spec.wrap(d), p)).collect())
    }
}

fn enumerate(
    spec: &ChoiceSpec,
    used: &mut [bool],
    prefix: &mut Vec<Scalar>,
    prob: f64,
    out: &mut Vec<(Vec<Scalar>, f64)>,
) {
    if prefix.len() == spec.repeat {
        out.push((prefix.clone(), prob));
        return;
    }
    let remaining: f64 = spec.distribution.iter().zip(used.iter()).filter(|(_, u)| !**u).map(|((_, p), _)| *p).sum();
    for i in 0..spec.distribution.len() {
        let (value, p) = &spec.distribution[i];
        if used[i] || *p <= 0.0 {
            continue;
        }
        let step = if spec.replace { *p } else { *p / remaining };
        prefix.push(value.clone());
        if !spec.replace {
            used[i] = true;
        }
        enumerate(spec, used, prefix, prob * step, out);
        used[i] = false;
        prefix.pop();
    }
}
