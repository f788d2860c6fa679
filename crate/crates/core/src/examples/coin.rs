use crate::bthread::{BProgram, BThread};
use crate::error::Result;
use crate::event::Event;
use crate::prob::ChoiceSpec;
use crate::statement::{Resume, SyncStatement};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Coin {
    Flip,
    Side(String),
    Done,
}

/// An uneven coin: heads with probability `p_heads`, then the side is
/// requested as an event.
pub fn coin_flip_thread(p_heads: f64) -> BThread {
    BThread::from_fns(
        "coin_flip",
        Coin::Flip,
        move |s: &Coin| {
            Ok(match s {
                Coin::Flip => Some(ChoiceSpec::new([("heads", p_heads), ("tails", 1.0 - p_heads)]).into()),
                Coin::Side(side) => Some(SyncStatement::new().request(Event::new(side)).into()),
                Coin::Done => None,
            })
        },
        |s: &Coin, r: &Resume| {
            Ok(match (s, r) {
                (Coin::Flip, Resume::Outcome(o)) => {
                    Coin::Side(o.single().and_then(|v| v.as_str()).ok_or("coin outcome is not a side")?.to_string())
                }
                _ => Coin::Done,
            })
        },
    )
}

pub fn coin_flip() -> Result<BProgram> {
    BProgram::from_threads("coin_flip", [coin_flip_thread(0.4)])
}
