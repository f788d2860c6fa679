use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::statement::{Resume, SyncStatement};

/// Requests `event` `n` times, then terminates.
pub fn repeat_request(name: &str, event: Event, n: u32) -> BThread {
    BThread::from_fns(
        name,
        0u32,
        move |i: &u32| Ok((*i < n).then(|| SyncStatement::new().request(event.clone()).into())),
        |i: &u32, _: &Resume| Ok(i + 1),
    )
}

/// Forbids two consecutive HOT events.
pub fn control() -> BThread {
    let hot = Event::new("HOT");
    BThread::from_fns(
        "control",
        false,
        move |after_hot: &bool| {
            Ok(Some(
                if *after_hot {
                    SyncStatement::new().wait_for(EventSet::All).block(hot.clone())
                } else {
                    SyncStatement::new().wait_for(hot.clone())
                }
                .into(),
            ))
        },
        |after_hot: &bool, _: &Resume| Ok(!after_hot),
    )
}

/// `n` HOT portions, `m` cold taps each pouring `n` COLD portions, and the
/// no-two-HOTs-in-a-row control. With one cold tap its event is `COLD`;
/// otherwise tap `k` pours `COLD{k}`.
pub fn hot_cold(n: u32, m: u32) -> Result<BProgram> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameters("hot_cold needs n >= 1 and m >= 1".into()));
    }
    let mut p = BProgram::new("hot_cold");
    p.add(repeat_request("add_hot", Event::new("HOT"), n))?;
    for k in 0..m {
        let (name, event) = if m == 1 {
            ("add_cold".to_string(), "COLD".to_string())
        } else {
            (format!("add_cold{k}"), format!("COLD{k}"))
        };
        p.add(repeat_request(&name, Event::new(event), n))?;
    }
    p.add(control())?;
    Ok(p)
}
