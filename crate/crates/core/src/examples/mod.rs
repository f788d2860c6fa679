//! Parameterized benchmark programs and a by-name registry for the CLI.

mod bitflip;
mod cinderella;
mod coin;
mod dice;
mod hot_cold;
mod monty;
mod pancake;
mod polygon;

use std::collections::BTreeMap;
use std::str::FromStr;

pub use bitflip::{
    bitflip_discrete, bitflip_smt, bitflip_two_player, board_formula, board_of, cell, count_reward, line_actions,
    Board, Line, ACTION,
};
pub use cinderella::{
    bucket_limit, buckets_event, buckets_of, cinderella, cinderella_discrete, cinderella_smt, emptyings, pourings,
    smt_bucket_limit, stepmother, CinderellaParams,
};
pub use coin::{coin_flip, coin_flip_thread};
pub use dice::{knuth_dice, layer_sizes};
pub use hot_cold::{control, hot_cold, repeat_request};
pub use monty::monty_hall;
pub use pancake::{blueberries, pancake, BLUEBERRIES, DOWN, DRY, UP, WET};
pub use polygon::{circled_polygon, in_circle, outside_polygon, vertex};

use crate::bthread::BProgram;
use crate::error::{Error, Result};

/// Which arbiter a registered example is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Discrete,
    Smt,
}

/// `key=value` overrides for an example's parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `["n=3", "m=1"]`.
    pub fn parse<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameters(format!("expected key=value, got '{item}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(map))
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::InvalidParameters(format!("cannot parse {key}={v}"))),
        }
    }

    fn check_known(&self, example: &str, known: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => {
                Err(Error::InvalidParameters(format!("{example} has no parameter '{k}' (known: {})", known.join(", "))))
            }
            None => Ok(()),
        }
    }
}

/// A registered example with its parameter names and defaults.
#[derive(Debug, Clone, Copy)]
pub struct ExampleInfo {
    pub name: &'static str,
    pub kind: Kind,
    pub params: &'static [(&'static str, &'static str)],
}

pub const REGISTRY: &[ExampleInfo] = &[
    ExampleInfo { name: "hot_cold", kind: Kind::Discrete, params: &[("n", "3"), ("m", "1")] },
    ExampleInfo { name: "coin_flip", kind: Kind::Discrete, params: &[] },
    ExampleInfo { name: "monty_hall", kind: Kind::Discrete, params: &[("d", "3"), ("p", "1"), ("o", "1")] },
    ExampleInfo { name: "knuth_dice", kind: Kind::Discrete, params: &[("n", "6")] },
    ExampleInfo { name: "pancake", kind: Kind::Discrete, params: &[("n", "2"), ("b", "1")] },
    ExampleInfo {
        name: "cinderella_discrete",
        kind: Kind::Discrete,
        params: &[("n", "3"), ("b", "2"), ("c", "1"), ("a", "1"), ("steps", "3")],
    },
    ExampleInfo { name: "bitflip_discrete", kind: Kind::Discrete, params: &[("n", "2"), ("m", "2")] },
    ExampleInfo {
        name: "cinderella_smt",
        kind: Kind::Smt,
        params: &[("n", "5"), ("b", "6"), ("c", "2"), ("a", "5"), ("steps", "20")],
    },
    ExampleInfo { name: "bitflip_smt", kind: Kind::Smt, params: &[("n", "2"), ("m", "2")] },
    ExampleInfo { name: "bitflip_two_player", kind: Kind::Smt, params: &[("n", "3"), ("m", "3")] },
    ExampleInfo { name: "circled_polygon", kind: Kind::Smt, params: &[("edges", "4")] },
];

pub fn info(name: &str) -> Result<&'static ExampleInfo> {
    REGISTRY.iter().find(|i| i.name == name).ok_or_else(|| Error::UnknownExample(name.to_string()))
}

fn param<T: FromStr>(info: &ExampleInfo, p: &Params, key: &str) -> Result<T> {
    let default = info.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or_default();
    let fallback = default.parse().map_err(|_| Error::InvalidParameters(format!("bad default for {key}")))?;
    p.get(key, fallback)
}

/// Builds a registered example, filling unspecified parameters with defaults.
pub fn build(name: &str, p: &Params) -> Result<BProgram> {
    let info = info(name)?;
    let known: Vec<&str> = info.params.iter().map(|(k, _)| *k).collect();
    p.check_known(name, &known)?;
    let int = |key: &str| param::<i64>(info, p, key);
    let nat = |key: &str| -> Result<u32> {
        let v = int(key)?;
        u32::try_from(v).map_err(|_| Error::InvalidParameters(format!("{key}={v} must be non-negative")))
    };
    match name {
        "hot_cold" => hot_cold(nat("n")?, nat("m")?),
        "coin_flip" => coin_flip(),
        "monty_hall" => monty_hall(nat("d")?, nat("p")?, nat("o")?),
        "knuth_dice" => knuth_dice(u64::from(nat("n")?)),
        "pancake" => pancake(nat("n")?, nat("b")?),
        "cinderella_discrete" => cinderella_discrete(cinderella_params(int, nat)?),
        "bitflip_discrete" => bitflip_discrete(nat("n")? as usize, nat("m")? as usize),
        "cinderella_smt" => cinderella_smt(cinderella_params(int, nat)?),
        "bitflip_smt" => bitflip_smt(nat("n")? as usize, nat("m")? as usize),
        "bitflip_two_player" => bitflip_two_player(nat("n")? as usize, nat("m")? as usize),
        "circled_polygon" => circled_polygon(nat("edges")?),
        _ => Err(Error::UnknownExample(name.to_string())),
    }
}

fn cinderella_params(int: impl Fn(&str) -> Result<i64>, nat: impl Fn(&str) -> Result<u32>) -> Result<CinderellaParams> {
    Ok(CinderellaParams {
        n: nat("n")? as usize,
        b: int("b")?,
        c: nat("c")? as usize,
        a: int("a")?,
        steps: nat("steps")?,
    })
}
