//! External SMT-LIB2 solver driven as a child process, one fresh process
//! per query.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::formula::{Assignment, Formula, Sort};
use super::sexp::{self, Sexp};
use super::smtlib;
use crate::error::{Error, Result};

pub const SOLVER_ENV: &str = "BPK_SMT_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Executable; `None` means `$BPK_SMT_SOLVER`, then `z3` on `PATH`.
    pub path: Option<PathBuf>,
    /// Extra arguments; `None` picks defaults for z3 and cvc5.
    pub args: Option<Vec<String>>,
    pub timeout_ms: u64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { path: None, args: None, timeout_ms: 30_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn model(self) -> Option<Assignment> {
        match self {
            SatResult::Sat(a) => Some(a),
            SatResult::Unsat => None,
        }
    }
}

fn on_path(name: &str) -> Option<PathBuf> {
    let paths = std::env::var_os("PATH")?;
    std::env::split_paths(&paths).map(|d| d.join(name)).find(|p| p.is_file())
}

fn resolve(config: &SolverConfig) -> Result<PathBuf> {
    let candidate = match &config.path {
        Some(p) => p.clone(),
        None => match std::env::var_os(SOLVER_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => {
                return on_path("z3")
                    .ok_or_else(|| Error::SolverUnavailable(format!("no z3 on PATH and {SOLVER_ENV} unset")))
            }
        },
    };
    if candidate.components().count() == 1 {
        if let Some(found) = on_path(&candidate.to_string_lossy()) {
            return Ok(found);
        }
    }
    if candidate.is_file() {
        Ok(candidate)
    } else {
        Err(Error::SolverUnavailable(format!("{} not found", candidate.display())))
    }
}

fn default_args(path: &Path) -> Vec<String> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().to_lowercase()).unwrap_or_default();
    let args: &[&str] = if stem.starts_with("z3") {
        &["-in", "-smt2"]
    } else if stem.starts_with("cvc") {
        &["--lang=smt2"]
    } else {
        &[]
    };
    args.iter().map(|s| s.to_string()).collect()
}

/// A configured solver with a cache of answers keyed by script text.
#[derive(Debug)]
pub struct Solver {
    path: PathBuf,
    args: Vec<String>,
    timeout_ms: u64,
    seed: u64,
    cache: Mutex<HashMap<String, SatResult>>,
}

impl Solver {
    pub fn new(config: &SolverConfig) -> Result<Self> {
        let path = resolve(config)?;
        let args = config.args.clone().unwrap_or_else(|| default_args(&path));
        Ok(Self { path, args, timeout_ms: config.timeout_ms, seed: config.seed, cache: Mutex::new(HashMap::new()) })
    }

    /// The default solver, if one can be found.
    pub fn from_env() -> Result<Self> {
        Self::new(&SolverConfig::default())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Runs one script and returns the raw standard output.
    pub fn run_script(&self, script: &str) -> Result<String> {
        let mut child = Command::new(&self.path)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::SolverUnavailable(format!("{}: {e}", self.path.display())))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let text = script.to_string();
        let writer = std::thread::spawn(move || stdin.write_all(text.as_bytes()));
        let reader = std::thread::spawn(move || {
            let mut out = String::new();
            stdout.read_to_string(&mut out).map(|_| out)
        });
        let err_reader = std::thread::spawn(move || {
            let mut out = String::new();
            let _ = stderr.read_to_string(&mut out);
            out
        });
        let deadline = Instant::now() + Duration::from_millis(self.timeout_ms);
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| Error::SolverUnavailable(e.to_string()))? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::SolverTimeout(self.timeout_ms));
            }
            std::thread::sleep(Duration::from_millis(1));
        };
        let _ = writer.join();
        let out = reader.join().expect("reader thread").map_err(|e| Error::Parse(e.to_string()))?;
        let err = err_reader.join().unwrap_or_default();
        if out.trim().is_empty() && !status.success() {
            return Err(Error::SolverUnavailable(format!("solver exited with {status}: {}", err.trim())));
        }
        Ok(out)
    }

    /// Decides `query` and returns a model over all of its variables.
    pub fn solve(&self, query: &Formula) -> Result<SatResult> {
        let vars = query.variables()?;
        let script = smtlib::script(query, self.seed)?;
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&script) {
            return Ok(hit.clone());
        }
        let mut answer = parse_response(&self.run_script(&script)?, &vars);
        if matches!(answer, Err(Error::Parse(ref m)) if m.contains("root-obj")) {
            // Algebraic model values: ask for decimal approximations instead.
            let decimal =
                smtlib::script_with(query, self.seed, &[("pp.decimal", "true"), ("pp.decimal_precision", "40")])?;
            answer = parse_response(&self.run_script(&decimal)?, &vars);
        }
        let answer = answer?;
        self.cache.lock().expect("cache lock").insert(script, answer.clone());
        Ok(answer)
    }

    /// Up to `limit` distinct models of `query`, found by excluding each
    /// model in turn.
    pub fn enumerate_solutions(&self, query: &Formula, limit: usize) -> Result<Vec<Assignment>> {
        let mut found = Vec::new();
        let mut q = query.clone();
        while found.len() < limit {
            let Some(model) = self.solve(&q)?.model() else { break };
            if model.0.is_empty() {
                found.push(model);
                break;
            }
            let same = Formula::and(model.0.iter().map(|(name, v)| {
                let var = match v.sort() {
                    Sort::Bool => Formula::bool_var(name),
                    Sort::Int => Formula::int_var(name),
                    Sort::Real => Formula::real_var(name),
                };
                var.equals(Formula::value(v.clone()))
            }));
            q = q & !same;
            found.push(model);
        }
        Ok(found)
    }
}

fn parse_response(text: &str, vars: &std::collections::BTreeMap<String, Sort>) -> Result<SatResult> {
    let items = sexp::parse_all(text)?;
    let is_error = |item: &Sexp| matches!(item, Sexp::List(xs) if xs.first().and_then(Sexp::atom) == Some("error"));
    let mut iter = items.iter();
    match iter.next().and_then(Sexp::atom) {
        // get-value after unsat is answered with an error, which is expected.
        Some("unsat") => return Ok(SatResult::Unsat),
        Some("sat") if items.iter().any(is_error) => {
            return Err(Error::Parse(format!("solver error: {}", text.trim())))
        }
        Some("sat") => {}
        Some("unknown") => return Err(Error::Parse("solver answered unknown".into())),
        _ => return Err(Error::Parse(format!("expected sat/unsat, got: {}", text.trim()))),
    }
    let mut model = Assignment::new();
    if vars.is_empty() {
        return Ok(SatResult::Sat(model));
    }
    let Some(Sexp::List(pairs)) = iter.next() else {
        return Err(Error::Parse(format!("missing get-value response in: {}", text.trim())));
    };
    for pair in pairs {
        let Sexp::List(kv) = pair else { return Err(Error::Parse(format!("bad get-value entry {pair:?}"))) };
        let [Sexp::Atom(name), v] = kv.as_slice() else {
            return Err(Error::Parse(format!("bad get-value entry {pair:?}")));
        };
        let sort = *vars.get(name).ok_or_else(|| Error::Parse(format!("value for undeclared '{name}'")))?;
        if sexp::is_root_obj(v) {
            return Err(Error::Parse(format!("root-obj value for '{name}'")));
        }
        model.insert(name.clone(), sexp::value(v, sort)?);
    }
    if let Some(missing) = vars.keys().find(|k| model.get(k).is_none()) {
        return Err(Error::Parse(format!("no value for '{missing}'")));
    }
    Ok(SatResult::Sat(model))
}
