use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::prob::{ChoiceSpec, Outcome};
use crate::statement::{Resume, Statement, SyncStatement};

fn ev(name: impl AsRef<str>) -> Event {
    Event::new(name)
}

fn all_open(doors: u32) -> Vec<Event> {
    (0..doors).map(|d| ev(format!("open{d}"))).collect()
}

fn door_of(e: &Event) -> Option<u32> {
    e.name().strip_prefix("open")?.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Host {
    Choose,
    Hide(Vec<u32>, usize),
    DoneHiding(Vec<u32>),
    Guard(Vec<u32>),
    Reveal(Vec<u32>),
    Announce(bool),
    End,
}

fn hide_prizes(doors: u32, prizes: u32) -> BThread {
    BThread::from_fns(
        "hide_prizes",
        Host::Choose,
        move |s: &Host| {
            let st: Statement = match s {
                Host::Choose => ChoiceSpec::uniform((0..doors).map(i64::from))
                    .repeat(prizes as usize)
                    .replace(false)
                    .sorted(true)
                    .into(),
                Host::Hide(ps, i) => SyncStatement::new().request(ev(format!("hide{}", ps[*i]))).into(),
                Host::DoneHiding(_) => SyncStatement::new().request(ev("done_hiding")).into(),
                Host::Guard(ps) => SyncStatement::new()
                    .block(ps.iter().map(|d| ev(format!("open{d}"))).collect::<EventSet>())
                    .wait_for(ev("done_opening"))
                    .into(),
                Host::Reveal(_) => SyncStatement::new().wait_for(EventSet::from(all_open(doors))).into(),
                Host::Announce(win) => SyncStatement::new().request(ev(if *win { "win" } else { "lose" })).into(),
                Host::End => return Ok(None),
            };
            Ok(Some(st))
        },
        |s: &Host, r: &Resume| {
            Ok(match s {
                Host::Choose => {
                    let outcome = r.outcome().ok_or("expected the hidden doors")?;
                    let ps: Vec<u32> = match outcome {
                        Outcome::One(v) => vec![v.as_int().ok_or("door is not an int")? as u32],
                        Outcome::Many(vs) => vs
                            .iter()
                            .map(|v| v.as_int().map(|d| d as u32))
                            .collect::<Option<_>>()
                            .ok_or("door is not an int")?,
                    };
                    Host::Hide(ps, 0)
                }
                Host::Hide(ps, i) if i + 1 < ps.len() => Host::Hide(ps.clone(), i + 1),
                Host::Hide(ps, _) => Host::DoneHiding(ps.clone()),
                Host::DoneHiding(ps) => Host::Guard(ps.clone()),
                Host::Guard(ps) => Host::Reveal(ps.clone()),
                Host::Reveal(ps) => {
                    let door = r.event().and_then(door_of).ok_or("expected an open event")?;
                    Host::Announce(ps.contains(&door))
                }
                Host::Announce(_) | Host::End => Host::End,
            })
        },
    )
}

fn make_a_guess() -> BThread {
    BThread::from_fns(
        "make_a_guess",
        0u8,
        |s: &u8| {
            Ok(Some(
                match s {
                    0 => SyncStatement::new().wait_for(ev("done_hiding")),
                    1 => SyncStatement::new().request(ev("guess0")),
                    _ => SyncStatement::new().block(ev("open0")),
                }
                .into(),
            ))
        },
        |s: &u8, _: &Resume| Ok((s + 1).min(2)),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Opener {
    AwaitGuess,
    Open(Vec<Event>),
    DoneOpening(Vec<Event>),
    Last(Vec<Event>),
    End,
}

fn open_doors(doors: u32, opened: u32) -> BThread {
    let guesses: EventSet = (0..doors).map(|d| ev(format!("guess{d}"))).collect();
    BThread::from_fns(
        "open_doors",
        Opener::AwaitGuess,
        move |s: &Opener| {
            Ok(Some(
                match s {
                    Opener::AwaitGuess => SyncStatement::new().wait_for(guesses.clone()),
                    Opener::Open(blocked) | Opener::Last(blocked) => {
                        SyncStatement::new().request_all(all_open(doors)).block(EventSet::from(blocked.clone()))
                    }
                    Opener::DoneOpening(_) => SyncStatement::new().request(ev("done_opening")),
                    Opener::End => return Ok(None),
                }
                .into(),
            ))
        },
        move |s: &Opener, r: &Resume| {
            let next_phase = |blocked: Vec<Event>| {
                if blocked.len() < opened as usize {
                    Opener::Open(blocked)
                } else {
                    Opener::DoneOpening(blocked)
                }
            };
            Ok(match s {
                Opener::AwaitGuess => next_phase(Vec::new()),
                Opener::Open(blocked) => {
                    let mut blocked = blocked.clone();
                    blocked.push(r.event().ok_or("expected an open event")?.clone());
                    next_phase(blocked)
                }
                Opener::DoneOpening(blocked) => Opener::Last(blocked.clone()),
                Opener::Last(_) | Opener::End => Opener::End,
            })
        },
    )
}

/// The generalized Monty Hall game: `d` doors, `p` prizes, `o` doors opened
/// by the host. The contestant guesses door 0.
pub fn monty_hall(d: u32, p: u32, o: u32) -> Result<BProgram> {
    if d < 2 || p < 1 || p >= d {
        return Err(Error::InvalidParameters(format!("monty_hall needs 1 <= p < d (got d={d}, p={p})")));
    }
    if o + p + 1 > d {
        return Err(Error::InvalidParameters(format!(
            "monty_hall needs o <= d - p - 1 so the guessed and prize doors stay closed (got d={d}, p={p}, o={o})"
        )));
    }
    BProgram::from_threads("monty_hall", [hide_prizes(d, p), make_a_guess(), open_doors(d, o)])
}
