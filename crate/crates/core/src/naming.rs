//! Mapping event and b-thread names to identifiers legal in the target
//! modeling languages.
//!
//! Names that are already plain identifiers (and not keywords) pass through.
//! Anything else becomes `x_` followed by the name with every character
//! outside `[A-Za-z0-9]` written as `_XX` hex bytes, so the map is
//! injective and can be inverted.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Smv,
    Prism,
}

const SMV_RESERVED: &[&str] = &[
    "A",
    "ABF",
    "ABG",
    "AF",
    "AG",
    "ASSIGN",
    "AX",
    "BU",
    "COMPASSION",
    "COMPUTE",
    "CONSTANTS",
    "CONSTARRAY",
    "CTLSPEC",
    "DEFINE",
    "E",
    "EBF",
    "EBG",
    "EF",
    "EG",
    "EX",
    "F",
    "FAIRNESS",
    "FALSE",
    "FROZENVAR",
    "G",
    "H",
    "INIT",
    "INVAR",
    "INVARSPEC",
    "ISA",
    "IVAR",
    "JUSTICE",
    "LTLSPEC",
    "MAX",
    "MIN",
    "MODULE",
    "NAME",
    "O",
    "PRED",
    "PREDICATES",
    "PSLSPEC",
    "S",
    "SPEC",
    "T",
    "TRANS",
    "TRUE",
    "U",
    "V",
    "VAR",
    "X",
    "Y",
    "Z",
    "abs",
    "array",
    "bool",
    "boolean",
    "case",
    "count",
    "esac",
    "extend",
    "floor",
    "in",
    "init",
    "integer",
    "main",
    "max",
    "min",
    "mod",
    "next",
    "of",
    "process",
    "real",
    "resize",
    "self",
    "signed",
    "sizeof",
    "swconst",
    "toint",
    "typeof",
    "union",
    "unsigned",
    "uwconst",
    "word",
    "word1",
    "xnor",
    "xor",
    "BPROGRAM_START",
    "BPROGRAM_DONE",
    "state",
    "event",
];

const PRISM_RESERVED: &[&str] = &[
    "A",
    "C",
    "E",
    "F",
    "G",
    "I",
    "P",
    "Pmax",
    "Pmin",
    "R",
    "Rmax",
    "Rmin",
    "S",
    "U",
    "W",
    "X",
    "bool",
    "clock",
    "const",
    "ctmc",
    "double",
    "dtmc",
    "endinit",
    "endinvariant",
    "endmodule",
    "endrewards",
    "endsystem",
    "false",
    "filter",
    "formula",
    "func",
    "global",
    "init",
    "invariant",
    "int",
    "label",
    "main",
    "max",
    "mdp",
    "min",
    "module",
    "nondeterministic",
    "prob",
    "probabilistic",
    "pta",
    "rate",
    "rewards",
    "stochastic",
    "system",
    "true",
    "event",
];

fn is_plain(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn reserved(dialect: Dialect) -> &'static [&'static str] {
    match dialect {
        Dialect::Smv => SMV_RESERVED,
        Dialect::Prism => PRISM_RESERVED,
    }
}

pub fn sanitize(name: &str, dialect: Dialect) -> String {
    if is_plain(name) && !name.starts_with("x_") && !reserved(dialect).contains(&name) {
        return name.to_string();
    }
    let mut out = String::from("x_");
    for b in name.bytes() {
        if b.is_ascii_alphanumeric() {
            out.push(b as char);
        } else {
            out.push_str(&format!("_{b:02X}"));
        }
    }
    out
}

/// Inverse of `sanitize`.
pub fn unsanitize(ident: &str) -> Option<String> {
    let Some(rest) = ident.strip_prefix("x_") else {
        return Some(ident.to_string());
    };
    let bytes = rest.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'_' {
            let hex = rest.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

/// Tracks which source produced each identifier within one namespace.
#[derive(Debug, Default)]
pub struct Namespace {
    owners: HashMap<String, String>,
}

impl Namespace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `ident` as produced by `source`. Registering the same pair
    /// twice is allowed.
    pub fn claim(&mut self, ident: &str, source: &str) -> Result<()> {
        match self.owners.get(ident) {
            Some(owner) if owner != source => Err(Error::IdentifierCollision {
                first: owner.clone(),
                second: source.to_string(),
                ident: ident.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.owners.insert(ident.to_string(), source.to_string());
                Ok(())
            }
        }
    }
}
