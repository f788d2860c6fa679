use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::statement::{Resume, SyncStatement};

use super::hot_cold::repeat_request;

pub const DRY: &str = "DryMixture";
pub const WET: &str = "WetMixture";
pub const UP: &str = "ThicknessUp";
pub const DOWN: &str = "ThicknessDown";
pub const BLUEBERRIES: &str = "AddBlueberries";

fn mixture_add() -> EventSet {
    EventSet::from(vec![Event::new(DRY), Event::new(WET)])
}

fn any_thick() -> EventSet {
    EventSet::from(vec![Event::new(UP), Event::new(DOWN)])
}

fn thickness_meter() -> BThread {
    // None while waiting, otherwise the pending thickness event.
    BThread::from_fns(
        "thickness_meter",
        None::<bool>,
        |s: &Option<bool>| {
            Ok(Some(
                match s {
                    None => SyncStatement::new().wait_for(mixture_add()),
                    Some(up) => {
                        SyncStatement::new().request(Event::new(if *up { UP } else { DOWN })).block(mixture_add())
                    }
                }
                .into(),
            ))
        },
        |s: &Option<bool>, r: &Resume| {
            Ok(match s {
                None => Some(r.event().ok_or("expected a mixture")?.name() == DRY),
                Some(_) => None,
            })
        },
    )
}

fn range_arbiter(b: i64) -> BThread {
    // (thickness, whether the next statement waits for a thickness change)
    BThread::from_fns(
        "range_arbiter",
        (0i64, true),
        move |&(t, measuring): &(i64, bool)| {
            Ok(Some(
                if measuring {
                    SyncStatement::new().wait_for(any_thick())
                } else if t.abs() >= b {
                    SyncStatement::new().block(Event::new(if t > 0 { DRY } else { WET })).wait_for(mixture_add())
                } else {
                    SyncStatement::new().wait_for(mixture_add())
                }
                .into(),
            ))
        },
        |&(t, measuring): &(i64, bool), r: &Resume| {
            Ok(if measuring {
                let up = r.event().ok_or("expected a thickness change")?.name() == UP;
                (t + if up { 1 } else { -1 }, false)
            } else {
                (t, true)
            })
        },
    )
}

/// Requests the blueberries at a small cost, then collects a reward of 1 at
/// the following event.
pub fn blueberries() -> BThread {
    BThread::from_fns(
        "blueberries",
        0u8,
        |s: &u8| {
            Ok(match s {
                0 => Some(SyncStatement::new().request(Event::new(BLUEBERRIES)).reward(-0.0001).into()),
                1 => Some(SyncStatement::new().wait_for(EventSet::All).reward(1.0).into()),
                _ => None,
            })
        },
        |s: &u8, _: &Resume| Ok(s + 1),
    )
}

fn enough_batter(n: u32) -> BThread {
    let needed = (n * 3 / 2) as usize;
    BThread::from_fns(
        "enough_batter",
        0usize,
        move |j: &usize| {
            Ok((*j < needed)
                .then(|| SyncStatement::new().wait_for(mixture_add()).block(Event::new(BLUEBERRIES)).into()))
        },
        |j: &usize, _: &Resume| Ok(j + 1),
    )
}

fn batter_thin_enough() -> BThread {
    BThread::from_fns(
        "batter_thin_enough",
        0i64,
        |t: &i64| {
            let st = SyncStatement::new().wait_for(any_thick());
            Ok(Some(if *t >= 0 { st.block(Event::new(BLUEBERRIES)) } else { st }.into()))
        },
        |t: &i64, r: &Resume| Ok(t + if r.event().ok_or("expected a thickness change")?.name() == UP { 1 } else { -1 }),
    )
}

/// The blueberry pancake maker with `n` portions of each mixture and
/// thickness bound `b`, using the rewarding `blueberries` b-thread.
pub fn pancake(n: u32, b: u32) -> Result<BProgram> {
    if n == 0 || b == 0 {
        return Err(Error::InvalidParameters("pancake needs n >= 1 and b >= 1".into()));
    }
    BProgram::from_threads(
        "pancake",
        [
            repeat_request("add_dry_mixture", Event::new(DRY), n),
            repeat_request("add_wet_mixture", Event::new(WET), n),
            thickness_meter(),
            range_arbiter(i64::from(b)),
            blueberries(),
            enough_batter(n),
            batter_thin_enough(),
        ],
    )
}
