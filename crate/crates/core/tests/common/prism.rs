//! Interpreter for the PRISM subset the translator emits: formulas, bounded
//! integer module variables, labelled and unlabelled commands with
//! probabilistic updates, and label synchronization across modules.

use std::collections::{BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Ident(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Int(i64),
    Bool(bool),
}

#[derive(Debug, Clone)]
pub struct Command {
    pub label: Option<String>,
    pub guard: Expr,
    /// (probability, variable, new value)
    pub updates: Vec<(f64, String, i64)>,
}

#[derive(Debug, Clone)]
pub struct Module {
    pub name: String,
    pub vars: Vec<(String, i64, i64, i64)>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub formulas: HashMap<String, Expr>,
    pub modules: Vec<Module>,
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '\'' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || "_.'".contains(chars[i])) {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push("->".into());
            i += 2;
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    out
}

struct Parser {
    toks: Vec<String>,
    pos: usize,
}

impl Parser {
    fn new(s: &str) -> Self {
        Self { toks: tokenize(s), pos: 0 }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    fn next(&mut self) -> String {
        let t = self.toks.get(self.pos).cloned().unwrap_or_default();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: &str) {
        let got = self.next();
        assert_eq!(got, t, "expected '{t}' in {:?}", self.toks);
    }

    fn expr(&mut self) -> Expr {
        let mut e = self.conj();
        while self.peek() == Some("|") {
            self.next();
            e = Expr::Or(Box::new(e), Box::new(self.conj()));
        }
        e
    }

    fn conj(&mut self) -> Expr {
        let mut e = self.unary();
        while self.peek() == Some("&") {
            self.next();
            e = Expr::And(Box::new(e), Box::new(self.unary()));
        }
        e
    }

    fn unary(&mut self) -> Expr {
        if self.peek() == Some("!") {
            self.next();
            return Expr::Not(Box::new(self.unary()));
        }
        let e = self.primary();
        if self.peek() == Some("=") {
            self.next();
            return Expr::Eq(Box::new(e), Box::new(self.primary()));
        }
        e
    }

    fn primary(&mut self) -> Expr {
        let t = self.next();
        match t.as_str() {
            "(" => {
                let e = self.expr();
                self.expect(")");
                e
            }
            "true" => Expr::Bool(true),
            "false" => Expr::Bool(false),
            "-" => Expr::Int(-self.next().parse::<i64>().expect("integer")),
            _ => match t.parse::<i64>() {
                Ok(v) => Expr::Int(v),
                Err(_) => Expr::Ident(t),
            },
        }
    }

    fn int(&mut self) -> i64 {
        if self.peek() == Some("-") {
            self.next();
            return -self.next().parse::<i64>().expect("integer");
        }
        self.next().parse().expect("integer")
    }
}

fn parse_command(line: &str) -> Command {
    let mut p = Parser::new(line);
    p.expect("[");
    let label = if p.peek() == Some("]") { None } else { Some(p.next()) };
    p.expect("]");
    let guard = p.expr();
    p.expect("->");
    let mut updates = Vec::new();
    loop {
        let prob: f64 = p.next().parse().expect("probability");
        p.expect(":");
        p.expect("(");
        let var = p.next();
        let var = var.strip_suffix('\'').expect("primed variable").to_string();
        p.expect("=");
        let value = p.int();
        p.expect(")");
        updates.push((prob, var, value));
        match p.next().as_str() {
            "+" => continue,
            ";" => break,
            t => panic!("unexpected '{t}' in {line}"),
        }
    }
    Command { label, guard, updates }
}

pub fn parse(text: &str) -> Model {
    let mut formulas = HashMap::new();
    let mut modules = Vec::new();
    let mut current: Option<Module> = None;
    for raw in text.lines() {
        let line = raw.split("//").next().unwrap().trim();
        if line.is_empty() || line == "mdp" {
            continue;
        }
        if let Some(rest) = line.strip_prefix("formula ") {
            let (name, body) = rest.split_once('=').expect("formula body");
            let body = body.trim().strip_suffix(';').expect("semicolon");
            formulas.insert(name.trim().to_string(), Parser::new(body).expr());
        } else if let Some(name) = line.strip_prefix("module ") {
            current = Some(Module { name: name.trim().to_string(), vars: Vec::new(), commands: Vec::new() });
        } else if line == "endmodule" {
            modules.push(current.take().expect("open module"));
        } else if line.starts_with('[') {
            current.as_mut().expect("command inside module").commands.push(parse_command(line));
        } else {
            // name: [lo..hi] init k;
            let (name, rest) = line.split_once(':').expect("variable declaration");
            let rest = rest.trim().strip_prefix('[').expect("range");
            let (range, init) = rest.split_once(']').expect("range end");
            let (lo, hi) = range.split_once("..").expect("range dots");
            let init = init.trim().strip_prefix("init").expect("init").trim().trim_end_matches(';');
            let int = |t: &str| t.trim().parse::<i64>().expect("integer");
            let (name, lo, hi, init) = (name.trim().to_string(), int(lo), int(hi), int(init));
            current.as_mut().expect("variable inside module").vars.push((name, lo, hi, init));
        }
    }
    assert!(current.is_none(), "unterminated module");
    Model { formulas, modules }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Unlabelled command of the module with this index.
    Local(usize),
    Label(String),
}

/// Successor states with their probabilities.
pub type Distribution = Vec<(f64, usize)>;
type Updates = Vec<(String, i64)>;

/// Reachable MDP of the model.
#[derive(Debug, Clone)]
pub struct Mdp {
    pub vars: Vec<String>,
    pub states: Vec<Vec<i64>>,
    /// Actions per state with a distribution over successor states.
    pub actions: Vec<Vec<(Action, Distribution)>>,
}

impl Model {
    fn eval(&self, e: &Expr, vars: &HashMap<&str, i64>) -> Value {
        match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Ident(n) => match vars.get(n.as_str()) {
                Some(v) => Value::Int(*v),
                None => self.eval(self.formulas.get(n).unwrap_or_else(|| panic!("unknown identifier {n}")), vars),
            },
            Expr::Not(a) => Value::Bool(!self.truth(a, vars)),
            Expr::And(a, b) => Value::Bool(self.truth(a, vars) && self.truth(b, vars)),
            Expr::Or(a, b) => Value::Bool(self.truth(a, vars) || self.truth(b, vars)),
            Expr::Eq(a, b) => Value::Bool(self.eval(a, vars) == self.eval(b, vars)),
        }
    }

    fn truth(&self, e: &Expr, vars: &HashMap<&str, i64>) -> bool {
        match self.eval(e, vars) {
            Value::Bool(b) => b,
            Value::Int(v) => panic!("expected a boolean, got {v}"),
        }
    }

    pub fn build(&self) -> Mdp {
        let vars: Vec<String> = self.modules.iter().flat_map(|m| m.vars.iter().map(|v| v.0.clone())).collect();
        let bounds: Vec<(i64, i64)> = self.modules.iter().flat_map(|m| m.vars.iter().map(|v| (v.1, v.2))).collect();
        let init: Vec<i64> = self.modules.iter().flat_map(|m| m.vars.iter().map(|v| v.3)).collect();
        let alphabets: Vec<BTreeSet<String>> =
            self.modules.iter().map(|m| m.commands.iter().filter_map(|c| c.label.clone()).collect()).collect();
        let labels: BTreeSet<String> = alphabets.iter().flatten().cloned().collect();
        let mut index: HashMap<Vec<i64>, usize> = HashMap::from([(init.clone(), 0)]);
        let mut states = vec![init];
        let mut actions = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        let apply = |state: &[i64], ups: &[(String, i64)]| -> Vec<i64> {
            let mut next = state.to_vec();
            for (v, val) in ups {
                let i = vars.iter().position(|x| x == v).unwrap_or_else(|| panic!("unknown variable {v}"));
                assert!(bounds[i].0 <= *val && *val <= bounds[i].1, "{v}={val} out of range");
                next[i] = *val;
            }
            next
        };
        while let Some(id) = queue.pop_front() {
            let state = states[id].clone();
            let env: HashMap<&str, i64> = vars.iter().map(String::as_str).zip(state.iter().copied()).collect();
            // Joint distributions as lists of (probability, updates).
            let mut found: Vec<(Action, Vec<(f64, Updates)>)> = Vec::new();
            for (mi, m) in self.modules.iter().enumerate() {
                for c in m.commands.iter().filter(|c| c.label.is_none()) {
                    if self.truth(&c.guard, &env) {
                        found.push((
                            Action::Local(mi),
                            c.updates.iter().map(|(p, v, k)| (*p, vec![(v.clone(), *k)])).collect(),
                        ));
                    }
                }
            }
            for label in &labels {
                let mut joint: Vec<(f64, Vec<(String, i64)>)> = vec![(1.0, Vec::new())];
                let mut ok = true;
                for (m, alphabet) in self.modules.iter().zip(&alphabets) {
                    if !alphabet.contains(label) {
                        continue;
                    }
                    let enabled: Vec<&Command> = m
                        .commands
                        .iter()
                        .filter(|c| c.label.as_ref() == Some(label) && self.truth(&c.guard, &env))
                        .collect();
                    if enabled.is_empty() {
                        ok = false;
                        break;
                    }
                    assert_eq!(enabled.len(), 1, "module {} has overlapping [{label}] commands", m.name);
                    joint = joint
                        .iter()
                        .flat_map(|(p, ups)| {
                            enabled[0].updates.iter().map(move |(q, v, k)| {
                                let mut u = ups.clone();
                                u.push((v.clone(), *k));
                                (p * q, u)
                            })
                        })
                        .collect();
                }
                if ok {
                    found.push((Action::Label(label.clone()), joint));
                }
            }
            let mut acts = Vec::new();
            for (label, dist) in found {
                let mut succ = Vec::new();
                for (p, ups) in dist {
                    let next = apply(&state, &ups);
                    let j = *index.entry(next.clone()).or_insert_with(|| {
                        states.push(next);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    });
                    succ.push((p, j));
                }
                acts.push((label, succ));
            }
            actions.push(acts);
        }
        Mdp { vars, states, actions }
    }
}
