//! Interpreter for the emitted SMV subset: b-thread modules with a bounded
//! `state`, boolean `case` assignments and a `next(state)` case, and a
//! `main` module with an enumerated `event`, DEFINEs and a TRANS relation.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Ident(String),
    NextEvent,
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Neq(Box<Expr>, Box<Expr>),
    Case(Vec<(Expr, Expr)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Sym(String),
}

#[derive(Debug, Clone, Default)]
pub struct Module {
    pub name: String,
    pub range: (i64, i64),
    pub init: i64,
    pub assigns: HashMap<String, Expr>,
    pub next_state: Option<Expr>,
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    pub modules: HashMap<String, Module>,
    pub events: Vec<String>,
    /// Instance name and module type, in declaration order.
    pub instances: Vec<(String, String)>,
    pub init_event: String,
    pub defines: HashMap<String, Expr>,
    pub trans: Option<Expr>,
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let c: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < c.len() {
        if c[i].is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = c[i..(i + 2).min(c.len())].iter().collect();
        if [":=", "->", "!=", ".."].contains(&two.as_str()) {
            out.push(two);
            i += 2;
        } else if c[i].is_alphanumeric() || c[i] == '_' {
            let start = i;
            while i < c.len() && (c[i].is_alphanumeric() || c[i] == '_' || (c[i] == '.' && c.get(i + 1) != Some(&'.')))
            {
                i += 1;
            }
            out.push(c[start..i].iter().collect());
        } else {
            out.push(c[i].to_string());
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
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    fn peek_at(&self, k: usize) -> Option<&str> {
        self.toks.get(self.pos + k).map(String::as_str)
    }

    fn next(&mut self) -> String {
        let t = self.toks.get(self.pos).cloned().unwrap_or_else(|| panic!("unexpected end of input"));
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: &str) {
        let got = self.next();
        assert_eq!(got, t, "expected '{t}' at token {}", self.pos - 1);
    }

    fn at_section(&self) -> bool {
        matches!(self.peek(), None | Some("MODULE" | "VAR" | "INIT" | "ASSIGN" | "DEFINE" | "TRANS"))
    }

    fn expr(&mut self) -> Expr {
        let lhs = self.disj();
        if self.peek() == Some("->") {
            self.next();
            return Expr::Implies(Box::new(lhs), Box::new(self.expr()));
        }
        lhs
    }

    fn disj(&mut self) -> Expr {
        let mut e = self.conj();
        while self.peek() == Some("|") {
            self.next();
            e = Expr::Or(Box::new(e), Box::new(self.conj()));
        }
        e
    }

    fn conj(&mut self) -> Expr {
        let mut e = self.cmp();
        while self.peek() == Some("&") {
            self.next();
            e = Expr::And(Box::new(e), Box::new(self.cmp()));
        }
        e
    }

    fn cmp(&mut self) -> Expr {
        let lhs = self.unary();
        match self.peek() {
            Some("=") => {
                self.next();
                Expr::Eq(Box::new(lhs), Box::new(self.unary()))
            }
            Some("!=") => {
                self.next();
                Expr::Neq(Box::new(lhs), Box::new(self.unary()))
            }
            _ => lhs,
        }
    }

    fn unary(&mut self) -> Expr {
        if self.peek() == Some("!") {
            self.next();
            return Expr::Not(Box::new(self.unary()));
        }
        let t = self.next();
        match t.as_str() {
            "(" => {
                let e = self.expr();
                self.expect(")");
                e
            }
            "TRUE" => Expr::Bool(true),
            "FALSE" => Expr::Bool(false),
            "next" => {
                self.expect("(");
                let v = self.next();
                assert_eq!(v, "event", "only next(event) may appear in expressions");
                self.expect(")");
                Expr::NextEvent
            }
            "case" => {
                let mut arms = Vec::new();
                while self.peek() != Some("esac") {
                    let c = self.expr();
                    self.expect(":");
                    let v = self.expr();
                    self.expect(";");
                    arms.push((c, v));
                }
                self.next();
                Expr::Case(arms)
            }
            _ => match t.parse::<i64>() {
                Ok(v) => Expr::Int(v),
                Err(_) => Expr::Ident(t),
            },
        }
    }
}

pub fn parse(text: &str) -> Model {
    let mut p = Parser { toks: tokenize(text), pos: 0 };
    let mut model = Model::default();
    while p.peek().is_some() {
        p.expect("MODULE");
        let name = p.next();
        if name == "main" {
            parse_main(&mut p, &mut model);
        } else {
            p.expect("(");
            p.expect("event");
            p.expect(")");
            let m = parse_module(&mut p, name);
            model.modules.insert(m.name.clone(), m);
        }
    }
    model
}

fn parse_module(p: &mut Parser, name: String) -> Module {
    let mut m = Module { name, ..Default::default() };
    while p.peek().is_some() && p.peek() != Some("MODULE") {
        match p.next().as_str() {
            "VAR" => {
                while !p.at_section() {
                    let v = p.next();
                    p.expect(":");
                    if v == "state" {
                        let lo = p.next().parse().expect("range start");
                        p.expect("..");
                        let hi = p.next().parse().expect("range end");
                        m.range = (lo, hi);
                    } else {
                        p.expect("boolean");
                    }
                    p.expect(";");
                }
            }
            "INIT" => {
                p.expect("state");
                p.expect("=");
                m.init = p.next().parse().expect("initial state");
            }
            "ASSIGN" => {
                while !p.at_section() {
                    if p.peek() == Some("next") {
                        p.next();
                        p.expect("(");
                        p.expect("state");
                        p.expect(")");
                        p.expect(":=");
                        m.next_state = Some(p.expr());
                    } else {
                        let v = p.next();
                        p.expect(":=");
                        m.assigns.insert(v, p.expr());
                    }
                    p.expect(";");
                }
            }
            t => panic!("unexpected section {t} in module {}", m.name),
        }
    }
    m
}

fn parse_main(p: &mut Parser, model: &mut Model) {
    while p.peek().is_some() {
        match p.next().as_str() {
            "VAR" => {
                while !p.at_section() {
                    let v = p.next();
                    p.expect(":");
                    if v == "event" {
                        p.expect("{");
                        loop {
                            model.events.push(p.next());
                            if p.next() == "}" {
                                break;
                            }
                        }
                    } else {
                        let ty = p.next();
                        p.expect("(");
                        p.expect("event");
                        p.expect(")");
                        model.instances.push((v, ty));
                    }
                    p.expect(";");
                }
            }
            "INIT" => {
                p.expect("event");
                p.expect("=");
                model.init_event = p.next();
            }
            "DEFINE" => {
                while !p.at_section() {
                    let v = p.next();
                    p.expect(":=");
                    model.defines.insert(v, p.expr());
                    p.expect(";");
                }
            }
            "TRANS" => {
                model.trans = Some(p.expr());
                assert!(p.peek().is_none() || p.peek_at(0) == Some("MODULE"), "trailing input after TRANS");
            }
            t => panic!("unexpected section {t} in main"),
        }
    }
}

/// A configuration of the SMV model: current event and module states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    pub event: String,
    pub states: Vec<i64>,
}

struct Ctx<'a> {
    model: &'a Model,
    config: &'a Config,
    next_event: Option<&'a str>,
    /// Instance whose module scope is active, if any.
    scope: Option<usize>,
}

impl Ctx<'_> {
    fn truth(&self, e: &Expr) -> bool {
        match self.eval(e) {
            Value::Bool(b) => b,
            v => panic!("expected boolean, got {v:?}"),
        }
    }

    fn eval(&self, e: &Expr) -> Value {
        match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::NextEvent => Value::Sym(self.next_event.expect("next(event) outside TRANS/next").to_string()),
            Expr::Not(a) => Value::Bool(!self.truth(a)),
            Expr::And(a, b) => Value::Bool(self.truth(a) && self.truth(b)),
            Expr::Or(a, b) => Value::Bool(self.truth(a) || self.truth(b)),
            Expr::Implies(a, b) => Value::Bool(!self.truth(a) || self.truth(b)),
            Expr::Eq(a, b) => Value::Bool(self.eval(a) == self.eval(b)),
            Expr::Neq(a, b) => Value::Bool(self.eval(a) != self.eval(b)),
            Expr::Case(arms) => {
                let (_, v) = arms.iter().find(|(c, _)| self.truth(c)).expect("case without a matching arm");
                self.eval(v)
            }
            Expr::Ident(name) => self.lookup(name),
        }
    }

    fn lookup(&self, name: &str) -> Value {
        if name == "event" {
            return Value::Sym(self.config.event.clone());
        }
        if let Some(i) = self.scope {
            let m = &self.model.modules[&self.model.instances[i].1];
            if name == "state" {
                return Value::Int(self.config.states[i]);
            }
            if let Some(e) = m.assigns.get(name) {
                return self.eval(e);
            }
        } else {
            if let Some(e) = self.model.defines.get(name) {
                return self.eval(e);
            }
            if let Some((inst, var)) = name.split_once('.') {
                let i = self.model.instances.iter().position(|(n, _)| n == inst).expect("instance");
                let inner = Ctx { scope: Some(i), ..*self };
                return inner.lookup(var);
            }
        }
        assert!(self.model.events.iter().any(|e| e == name), "unknown identifier {name}");
        Value::Sym(name.to_string())
    }
}

impl Model {
    pub fn initial(&self) -> Config {
        Config {
            event: self.init_event.clone(),
            states: self.instances.iter().map(|(_, ty)| self.modules[ty].init).collect(),
        }
    }

    /// Values of `next(event)` admitted by TRANS at `config`.
    pub fn allowed(&self, config: &Config) -> Vec<String> {
        let trans = self.trans.as_ref().expect("TRANS");
        self.events
            .iter()
            .filter(|e| Ctx { model: self, config, next_event: Some(e), scope: None }.truth(trans))
            .cloned()
            .collect()
    }

    /// Successor configuration when `next(event) = e`.
    pub fn step(&self, config: &Config, e: &str) -> Config {
        let states = (0..self.instances.len())
            .map(|i| {
                let m = &self.modules[&self.instances[i].1];
                let ctx = Ctx { model: self, config, next_event: Some(e), scope: Some(i) };
                let Value::Int(s) = ctx.eval(m.next_state.as_ref().expect("next(state)")) else {
                    panic!("state must be an integer")
                };
                assert!(m.range.0 <= s && s <= m.range.1, "state {s} outside {:?}", m.range);
                s
            })
            .collect();
        Config { event: e.to_string(), states }
    }
}
