//! SMV model emission: one module per b-thread plus a `main` module that
//! implements the synchronization semantics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::explore::{Exploration, ThreadGraph, ThreadState};
use crate::naming::{sanitize, Dialect, Namespace};

pub const START: &str = "BPROGRAM_START";
pub const DONE: &str = "BPROGRAM_DONE";

struct Names {
    events: Vec<String>,
    modules: Vec<String>,
}

fn names(x: &Exploration) -> Result<Names> {
    let mut global = Namespace::new();
    global.claim(START, START)?;
    global.claim(DONE, DONE)?;
    global.claim("main", "main")?;
    let mut events = Vec::new();
    for e in &x.universe {
        let id = sanitize(&e.to_string(), Dialect::Smv);
        let src = format!("event {e}");
        global.claim(&id, &src)?;
        for suffix in ["requested", "blocked", "enabled"] {
            global.claim(&format!("{id}_{suffix}"), &src)?;
        }
        events.push(id);
    }
    let mut modules = Vec::new();
    for (i, g) in x.graphs.iter().enumerate() {
        let id = sanitize(&g.name, Dialect::Smv);
        global.claim(&id, &format!("b-thread {}", g.name))?;
        global.claim(&format!("bt{i}"), &format!("instance {i}"))?;
        modules.push(id);
    }
    Ok(Names { events, modules })
}

fn state_disjunction(states: &[usize]) -> String {
    states.iter().map(|k| format!("state = {k}")).collect::<Vec<_>>().join(" | ")
}

fn emit_boolean(out: &mut String, var: &str, states: &[usize]) {
    let _ = writeln!(out, "    {var} :=");
    out.push_str("      case\n");
    let _ = writeln!(out, "        {} : TRUE;", state_disjunction(states));
    out.push_str("        TRUE : FALSE;\n");
    out.push_str("      esac;\n");
}

fn emit_module(out: &mut String, g: &ThreadGraph, module: &str, events: &[String]) -> Result<()> {
    if g.has_choices() {
        return Err(Error::ProbabilisticUnsupported(g.name.clone()));
    }
    let requested = g.ever_requested();
    let blocked = g.ever_blocked();
    let at = |e: usize, f: fn(&ThreadState) -> &[usize]| -> Vec<usize> {
        g.states.iter().enumerate().filter(|(_, s)| f(s).contains(&e)).map(|(k, _)| k).collect()
    };

    let _ = writeln!(out, "MODULE {module}(event)");
    out.push_str("  VAR\n");
    let _ = writeln!(out, "    state: 0 .. {};", g.len() - 1);
    let mut booleans: Vec<(String, Vec<usize>)> = Vec::new();
    for (e, name) in events.iter().enumerate() {
        if requested.contains(&e) {
            booleans.push((format!("{name}_requested"), at(e, ThreadState::requested)));
        }
        if blocked.contains(&e) {
            booleans.push((format!("{name}_blocked"), at(e, ThreadState::blocked)));
        }
    }
    for (var, _) in &booleans {
        let _ = writeln!(out, "    {var}: boolean;");
    }
    out.push_str("  INIT\n    state = 0\n  ASSIGN\n");
    for (var, states) in &booleans {
        emit_boolean(out, var, states);
    }
    out.push_str("    next(state) :=\n      case\n");
    for (k, s) in g.states.iter().enumerate() {
        if let ThreadState::Sync { edges, .. } = s {
            for (&e, &t) in edges {
                if t != k {
                    let _ = writeln!(out, "        state = {k} & next(event) = {} : {t};", events[e]);
                }
            }
        }
    }
    out.push_str("        TRUE : state;\n      esac;\n");
    Ok(())
}

/// The module for a single b-thread graph.
pub fn translate_bthread(x: &Exploration, thread: usize) -> Result<String> {
    let n = names(x)?;
    let mut out = String::new();
    emit_module(&mut out, &x.graphs[thread], &n.modules[thread], &n.events)?;
    Ok(out)
}

fn contributors(x: &Exploration, e: usize, f: fn(&ThreadGraph) -> Vec<usize>, suffix: &str, ev: &str) -> String {
    let parts: Vec<String> = x
        .graphs
        .iter()
        .enumerate()
        .filter(|(_, g)| f(g).contains(&e))
        .map(|(i, _)| format!("bt{i}.{ev}_{suffix}"))
        .collect();
    if parts.is_empty() {
        "FALSE".to_string()
    } else {
        parts.join(" | ")
    }
}

pub fn translate_main(x: &Exploration) -> Result<String> {
    let n = names(x)?;
    let mut out = String::new();
    out.push_str("MODULE main\n  VAR\n");
    let mut values = vec![START.to_string(), DONE.to_string()];
    values.extend(n.events.iter().cloned());
    let _ = writeln!(out, "    event: {{{}}};", values.join(", "));
    for (i, m) in n.modules.iter().enumerate() {
        let _ = writeln!(out, "    bt{i}: {m}(event);");
    }
    let _ = writeln!(out, "  INIT\n    event = {START}");
    if !n.events.is_empty() {
        out.push_str("  DEFINE\n");
        for (e, ev) in n.events.iter().enumerate() {
            let req = contributors(x, e, ThreadGraph::ever_requested, "requested", ev);
            let blk = contributors(x, e, ThreadGraph::ever_blocked, "blocked", ev);
            let _ = writeln!(out, "    {ev}_requested := {req};");
            let _ = writeln!(out, "    {ev}_blocked := {blk};");
        }
        for ev in &n.events {
            let _ = writeln!(out, "    {ev}_enabled := {ev}_requested & !{ev}_blocked;");
        }
    }
    let mut trans = vec![format!("next(event) != {START}")];
    for ev in &n.events {
        trans.push(format!("(!{ev}_enabled -> next(event) != {ev})"));
    }
    if !n.events.is_empty() {
        let any: Vec<String> = n.events.iter().map(|ev| format!("{ev}_enabled")).collect();
        trans.push(format!("({} -> next(event) != {DONE})", any.join(" | ")));
    }
    trans.push(format!("(event = {DONE} -> next(event) = {DONE})"));
    let _ = writeln!(out, "  TRANS\n    {}", trans.join(" & "));
    Ok(out)
}

/// The whole model: every b-thread module followed by `main`.
pub fn translate(x: &Exploration) -> Result<String> {
    let n = names(x)?;
    let mut out = String::new();
    for (g, m) in x.graphs.iter().zip(&n.modules) {
        emit_module(&mut out, g, m, &n.events)?;
        out.push('\n');
    }
    out.push_str(&translate_main(x)?);
    Ok(out)
}
