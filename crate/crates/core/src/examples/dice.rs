use std::collections::BTreeSet;

use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::event::Event;
use crate::prob::ChoiceSpec;
use crate::statement::{Resume, Statement, SyncStatement};

fn node_event(u: u64, x: u64) -> Event {
    Event::new(format!("n{u}_{x}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Wait,
    Toss,
    Go(Option<u64>),
}

/// One node of the coin-tossing tree: `u` is the layer size, `x` the index
/// in the layer.
fn node(n: u64, u: u64, x: u64) -> BThread {
    BThread::from_fns(
        format!("node{u}_{x}"),
        Node::Wait,
        move |s: &Node| {
            let st: Statement = match s {
                Node::Wait => SyncStatement::new().wait_for(node_event(u, x)).into(),
                Node::Toss => ChoiceSpec::new([(0i64, 0.5), (1i64, 0.5)]).into(),
                Node::Go(flip) => {
                    let target = match flip {
                        Some(f) => node_event(2 * u, 2 * x + f),
                        None if x >= n => node_event(u - n, x - n),
                        None => Event::new(format!("result_{x}")),
                    };
                    SyncStatement::new().request(target).into()
                }
            };
            Ok(Some(st))
        },
        move |s: &Node, r: &Resume| {
            Ok(match s {
                Node::Wait if u < n => Node::Toss,
                Node::Wait => Node::Go(None),
                Node::Toss => {
                    let flip = r.outcome().and_then(|o| o.single()).and_then(|v| v.as_int()).ok_or("bad flip")?;
                    Node::Go(Some(flip as u64))
                }
                Node::Go(_) => Node::Wait,
            })
        },
    )
}

/// Layer sizes reachable from the root: inner layers double, and the last
/// layer folds indices `>= n` back into a layer of size `u - n`.
pub fn layer_sizes(n: u64) -> BTreeSet<u64> {
    let mut sizes = BTreeSet::new();
    let mut todo = vec![1u64];
    while let Some(u) = todo.pop() {
        if !sizes.insert(u) {
            continue;
        }
        if u < n {
            todo.push(2 * u);
        } else if u > n {
            todo.push(u - n);
        }
    }
    sizes
}

/// Knuth-Yao style fair die with `n` faces from fair coin flips, with
/// rejection of overflow indices.
pub fn knuth_dice(n: u64) -> Result<BProgram> {
    if n < 2 {
        return Err(Error::InvalidParameters("knuth_dice needs n >= 2".into()));
    }
    let start = Event::new("n1_0");
    let mut p = BProgram::new("knuth_dice");
    p.add(BThread::from_fns(
        "start",
        false,
        move |done: &bool| Ok((!done).then(|| SyncStatement::new().request(start.clone()).into())),
        |_: &bool, _: &Resume| Ok(true),
    ))?;
    for u in layer_sizes(n) {
        for x in 0..u {
            p.add(node(n, u, x))?;
        }
    }
    Ok(p)
}
