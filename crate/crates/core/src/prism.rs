//! PRISM `mdp` emission: per-b-thread modules with event-labelled commands
//! and probabilistic splits, and a `main` module selecting enabled events.

use std::fmt::Write as _;

use crate::error::Result;
use crate::explore::{Exploration, ThreadGraph, ThreadState};
use crate::naming::{sanitize, Dialect, Namespace};

struct Names {
    events: Vec<String>,
    threads: Vec<String>,
}

fn names(x: &Exploration) -> Result<Names> {
    let mut ns = Namespace::new();
    ns.claim("main", "main")?;
    ns.claim("event", "event")?;
    let mut events = Vec::new();
    for e in &x.universe {
        let id = sanitize(&e.to_string(), Dialect::Prism);
        let src = format!("event {e}");
        ns.claim(&id, &src)?;
        for suffix in ["req", "block", "enabled"] {
            ns.claim(&format!("{id}_{suffix}"), &src)?;
        }
        events.push(id);
    }
    let mut threads = Vec::new();
    for g in &x.graphs {
        let id = sanitize(&g.name, Dialect::Prism);
        let src = format!("b-thread {}", g.name);
        ns.claim(&id, &src)?;
        ns.claim(&format!("s_{id}"), &src)?;
        ns.claim(&format!("{id}_choosing"), &src)?;
        for (e, ev) in events.iter().enumerate() {
            let pair = format!("b-thread {}, event {}", g.name, x.universe[e]);
            ns.claim(&format!("{id}_req_{ev}"), &pair)?;
            ns.claim(&format!("{id}_block_{ev}"), &pair)?;
        }
        threads.push(id);
    }
    Ok(Names { events, threads })
}

fn state_predicate(var: &str, states: &[usize]) -> String {
    if states.is_empty() {
        "false".to_string()
    } else {
        format!("({})", states.iter().map(|k| format!("{var}={k}")).collect::<Vec<_>>().join(" | "))
    }
}

fn states_where(g: &ThreadGraph, f: impl Fn(&ThreadState) -> bool) -> Vec<usize> {
    g.states.iter().enumerate().filter(|(_, s)| f(s)).map(|(k, _)| k).collect()
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn probability_literal(p: f64) -> String {
    format!("{p}")
}

/// Whether a later b-thread's choice commands refer to this one.
fn guards_later(x: &Exploration, t: usize) -> bool {
    x.graphs[t].has_choices() && x.graphs[t + 1..].iter().any(ThreadGraph::has_choices)
}

fn emit_module(out: &mut String, x: &Exploration, n: &Names, t: usize) {
    let g = &x.graphs[t];
    let name = &n.threads[t];
    let var = format!("s_{name}");
    for (e, ev) in n.events.iter().enumerate() {
        let states = states_where(g, |s| s.requested().contains(&e));
        let _ = writeln!(out, "formula {name}_req_{ev} = {};", state_predicate(&var, &states));
    }
    for (e, ev) in n.events.iter().enumerate() {
        let states = states_where(g, |s| s.blocked().contains(&e));
        let _ = writeln!(out, "formula {name}_block_{ev} = {};", state_predicate(&var, &states));
    }
    if guards_later(x, t) {
        let choosing = state_predicate(&var, &states_where(g, ThreadState::is_choice));
        let _ = writeln!(out, "formula {name}_choosing = {choosing};");
    }
    let _ = writeln!(out, "module {name}");
    let _ = writeln!(out, "    {var}: [0..{}] init 0;", g.len() - 1);
    out.push('\n');
    // Choices of earlier b-threads are resolved first.
    let earlier: Vec<String> = n.threads[..t]
        .iter()
        .zip(&x.graphs[..t])
        .filter(|(_, h)| h.has_choices())
        .map(|(m, _)| format!("!{m}_choosing"))
        .collect();
    for (k, s) in g.states.iter().enumerate() {
        match s {
            ThreadState::Choice { edges } => {
                let mut guard = format!("({var}={k})");
                for e in &earlier {
                    guard.push_str(" & ");
                    guard.push_str(e);
                }
                let updates: Vec<String> =
                    edges.iter().map(|(p, to)| format!("{}: ({var}'={to})", probability_literal(*p))).collect();
                let _ = writeln!(out, "    [] {guard} -> {};", updates.join(" + "));
            }
            _ => {
                for (e, ev) in n.events.iter().enumerate() {
                    let to = s.on_event(k, e);
                    let _ = writeln!(out, "    [{ev}] ({var}={k}) -> 1: ({var}'={to});");
                }
            }
        }
    }
    out.push_str("endmodule\n");
}

/// Module and formulas for one b-thread.
pub fn translate_bthread(x: &Exploration, thread: usize) -> Result<String> {
    let n = names(x)?;
    let mut out = String::new();
    emit_module(&mut out, x, &n, thread);
    Ok(out)
}

fn disjunction(parts: Vec<String>) -> String {
    if parts.is_empty() {
        "false".to_string()
    } else {
        parts.join(" | ")
    }
}

fn emit_main(out: &mut String, x: &Exploration, n: &Names) {
    let involved = |e: usize, f: fn(&ThreadGraph) -> Vec<usize>| -> Vec<usize> {
        x.graphs.iter().enumerate().filter(|(_, g)| f(g).contains(&e)).map(|(i, _)| i).collect()
    };
    for (e, ev) in n.events.iter().enumerate() {
        let parts = involved(e, ThreadGraph::ever_requested)
            .into_iter()
            .map(|t| format!("({}_req_{ev}=true)", n.threads[t]))
            .collect();
        let _ = writeln!(out, "formula {ev}_req = {};", disjunction(parts));
    }
    for (e, ev) in n.events.iter().enumerate() {
        let parts = involved(e, ThreadGraph::ever_blocked)
            .into_iter()
            .map(|t| format!("({}_block_{ev}=true)", n.threads[t]))
            .collect();
        let _ = writeln!(out, "formula {ev}_block = {};", disjunction(parts));
    }
    for ev in &n.events {
        let _ = writeln!(out, "formula {ev}_enabled = ({ev}_req=true) & ({ev}_block=false);");
    }
    out.push_str("module main\n");
    let _ = writeln!(out, "    event: [-1..{}] init -1;", n.events.len() as i64 - 1);
    out.push('\n');
    for (i, ev) in n.events.iter().enumerate() {
        let _ = writeln!(out, "    [{ev}] ({ev}_enabled=true) -> 1: (event'={i});");
    }
    out.push_str("endmodule\n");
}

pub fn translate_main(x: &Exploration) -> Result<String> {
    let n = names(x)?;
    let mut out = String::new();
    emit_main(&mut out, x, &n);
    Ok(out)
}

/// The complete model file.
pub fn translate(x: &Exploration) -> Result<String> {
    let n = names(x)?;
    let mut out = String::from("mdp\n\n");
    out.push_str("// event indices\n");
    for (i, e) in x.universe.iter().enumerate() {
        let _ = writeln!(out, "// {i}: {e}");
    }
    out.push('\n');
    for t in 0..x.graphs.len() {
        emit_module(&mut out, x, &n, t);
        out.push('\n');
    }
    emit_main(&mut out, x, &n);
    Ok(out)
}

/// Sidecar property reaching the event with universe index `target`.
pub fn reach_property(target: usize, max: bool) -> String {
    format!("P{}=? [F event={target}]\n", if max { "max" } else { "min" })
}
