use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::prob::ChoiceSpec;
use crate::smt::{Assignment, Formula};
use crate::statement::{ConstraintStatement, Resume, Statement, SyncStatement};

/// Row-major `n`×`m` Boolean board.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Board {
    pub n: usize,
    pub m: usize,
    pub bits: Vec<bool>,
}

/// A flippable line of the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Line {
    Row(usize),
    Col(usize),
}

impl Board {
    /// Alternating bits, with the top-left corner on.
    pub fn chess(n: usize, m: usize) -> Self {
        Board { n, m, bits: (0..n * m).map(|k| (k / m + k % m).is_multiple_of(2)).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.m + j]
    }

    pub fn lines(&self) -> impl Iterator<Item = Line> {
        (0..self.n).map(Line::Row).chain((0..self.m).map(Line::Col))
    }

    pub fn flip(&self, line: Line) -> Board {
        let mut next = self.clone();
        for i in 0..self.n {
            for j in 0..self.m {
                let hit = match line {
                    Line::Row(r) => r == i,
                    Line::Col(c) => c == j,
                };
                if hit {
                    next.bits[i * self.m + j] ^= true;
                }
            }
        }
        next
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Bits on in `self` that were off in `before`.
    pub fn turned_on_since(&self, before: &Board) -> usize {
        self.bits.iter().zip(&before.bits).filter(|(now, was)| **now && !**was).count()
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(n: usize, m: usize, s: &str) -> Option<Board> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '1' => Some(true),
                '0' => Some(false),
                _ => None,
            })
            .collect::<Option<_>>()?;
        (bits.len() == n * m).then_some(Board { n, m, bits })
    }

    pub fn event(&self) -> Event {
        Event::with_payload("board", [("bits", self.to_bit_string())])
    }

    pub fn of_event(e: &Event, n: usize, m: usize) -> Option<Board> {
        if e.name() != "board" {
            return None;
        }
        Board::from_bit_string(n, m, e.get("bits")?.as_str()?)
    }
}

pub(crate) fn check_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameters(format!("bit-flip board must be at least 1x1 (got {n}x{m})")));
    }
    Ok(())
}

fn init(n: usize, m: usize) -> BThread {
    let start = Board::chess(n, m).event();
    BThread::from_fns(
        "init",
        false,
        move |done: &bool| Ok((!done).then(|| SyncStatement::new().request(start.clone()).into())),
        |_: &bool, _: &Resume| Ok(true),
    )
}

fn flipper(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "flipper",
        None::<Board>,
        |b: &Option<Board>| {
            Ok(Some(
                match b {
                    None => SyncStatement::new().wait_for(EventSet::named("board")),
                    Some(b) => SyncStatement::new().request_all(b.lines().map(|l| b.flip(l).event())),
                }
                .into(),
            ))
        },
        move |_: &Option<Board>, r: &Resume| {
            let e = r.event().ok_or("expected a board event")?;
            Ok(Some(Board::of_event(e, n, m).ok_or("malformed board event")?))
        },
    )
}

/// Blocks the board seen before the latest move. Flipping a line twice
/// restores the earlier board, so this forbids flipping the most recently
/// flipped line again.
fn no_repeat(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "no_repeat",
        (None::<Board>, None::<Board>),
        |(before, _): &(Option<Board>, Option<Board>)| {
            let st = SyncStatement::new().wait_for(EventSet::named("board"));
            Ok(Some(
                match before {
                    Some(b) => st.block(b.event()),
                    None => st,
                }
                .into(),
            ))
        },
        move |(_, now): &(Option<Board>, Option<Board>), r: &Resume| {
            let e = r.event().ok_or("expected a board event")?;
            Ok((now.clone(), Some(Board::of_event(e, n, m).ok_or("malformed board event")?)))
        },
    )
}

/// Discrete bit-flip: starts from the chessboard and flips one row or
/// column per move, never undoing the previous move.
pub fn bitflip_discrete(n: usize, m: usize) -> Result<BProgram> {
    check_dims(n, m)?;
    BProgram::from_threads("bitflip_discrete", [init(n, m), flipper(n, m), no_repeat(n, m)])
}

pub const ACTION: &str = "action";

pub fn cell(i: usize, j: usize) -> Formula {
    Formula::bool_var(&format!("p{i}_{j}"))
}

/// The board as a conjunction of literals.
pub fn board_formula(b: &Board) -> Formula {
    Formula::and((0..b.n).flat_map(|i| (0..b.m).map(move |j| (i, j))).map(|(i, j)| {
        if b.get(i, j) {
            cell(i, j)
        } else {
            !cell(i, j)
        }
    }))
}

pub fn board_of(a: &Assignment, n: usize, m: usize) -> Option<Board> {
    let bits =
        (0..n * m).map(|k| a.get(&format!("p{}_{}", k / m, k % m)).and_then(|v| v.as_bool())).collect::<Option<_>>()?;
    Some(Board { n, m, bits })
}

fn settled_board(r: &Resume, n: usize, m: usize) -> Result<Board, String> {
    board_of(r.assignment().ok_or("expected an assignment")?, n, m)
        .ok_or_else(|| "assignment lacks a board cell".to_string())
}

fn smt_init(n: usize, m: usize) -> BThread {
    let chess = board_formula(&Board::chess(n, m));
    BThread::from_fns(
        "init",
        false,
        move |done: &bool| Ok((!done).then(|| ConstraintStatement::new().request(chess.clone()).into())),
        |_: &bool, _: &Resume| Ok(true),
    )
}

fn smt_flipper(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "flipper",
        None::<Board>,
        |b: &Option<Board>| {
            Ok(Some(
                match b {
                    None => ConstraintStatement::new().wait_for(Formula::tt()),
                    Some(b) => {
                        ConstraintStatement::new().request(Formula::or(b.lines().map(|l| board_formula(&b.flip(l)))))
                    }
                }
                .into(),
            ))
        },
        move |_: &Option<Board>, r: &Resume| Ok(Some(settled_board(r, n, m)?)),
    )
}

fn smt_no_repeat(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "no_repeat",
        (None::<Board>, None::<Board>),
        |(before, _): &(Option<Board>, Option<Board>)| {
            let st = ConstraintStatement::new().wait_for(Formula::tt());
            Ok(Some(
                match before {
                    Some(b) => st.block(board_formula(b)),
                    None => st,
                }
                .into(),
            ))
        },
        move |(_, now): &(Option<Board>, Option<Board>), r: &Resume| Ok((now.clone(), Some(settled_board(r, n, m)?))),
    )
}

/// Solver bit-flip over Bool variables `p{i}_{j}`, with the same rules as
/// [`bitflip_discrete`].
pub fn bitflip_smt(n: usize, m: usize) -> Result<BProgram> {
    check_dims(n, m)?;
    BProgram::from_threads("bitflip_smt", [smt_init(n, m), smt_flipper(n, m), smt_no_repeat(n, m)])
}

fn wait_any() -> Statement {
    ConstraintStatement::new().wait_for(Formula::tt()).into()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Opponent {
    Start,
    Pick(Board, bool),
    Flip(Board, Line),
    Await(bool),
}

/// Flips a uniformly random row, then after the player's move a uniformly
/// random column, and so on.
fn opponent(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "opponent",
        Opponent::Start,
        move |s: &Opponent| {
            Ok(Some(match s {
                Opponent::Start | Opponent::Await(_) => wait_any(),
                Opponent::Pick(_, row) => ChoiceSpec::uniform(0..(if *row { n } else { m }) as i64).into(),
                Opponent::Flip(b, line) => ConstraintStatement::new().request(board_formula(&b.flip(*line))).into(),
            }))
        },
        move |s: &Opponent, r: &Resume| {
            Ok(match s {
                Opponent::Start => Opponent::Pick(settled_board(r, n, m)?, true),
                Opponent::Pick(b, row) => {
                    let k =
                        r.outcome().and_then(|o| o.single()).and_then(|v| v.as_int()).ok_or("expected a line index")?;
                    let k = k as usize;
                    Opponent::Flip(b.clone(), if *row { Line::Row(k) } else { Line::Col(k) })
                }
                Opponent::Flip(_, line) => Opponent::Await(matches!(line, Line::Row(_))),
                // The player answered a row flip with a row flip; now a column.
                Opponent::Await(after_row) => Opponent::Pick(settled_board(r, n, m)?, !after_row),
            })
        },
    )
}

/// The player's move: flip the row (or column) selected by `action`.
pub fn line_actions(b: &Board, rows: bool) -> Formula {
    let count = if rows { b.n } else { b.m };
    let action = Formula::int_var(ACTION);
    Formula::or((0..count).map(|k| {
        let line = if rows { Line::Row(k) } else { Line::Col(k) };
        Formula::and([action.clone().equals(Formula::int(k as i64)), board_formula(&b.flip(line))])
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Controller {
    Start,
    AwaitOpponent(bool),
    Move(Board, bool),
}

fn controller(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "controller",
        Controller::Start,
        |s: &Controller| {
            Ok(Some(match s {
                Controller::Start | Controller::AwaitOpponent(_) => wait_any(),
                Controller::Move(b, rows) => ConstraintStatement::new().request(line_actions(b, *rows)).into(),
            }))
        },
        move |s: &Controller, r: &Resume| {
            Ok(match s {
                Controller::Start => Controller::AwaitOpponent(true),
                Controller::AwaitOpponent(rows) => Controller::Move(settled_board(r, n, m)?, *rows),
                Controller::Move(_, rows) => Controller::AwaitOpponent(!rows),
            })
        },
    )
}

/// `2^(bits turned on between the last two events)`, or 0 before two
/// events have happened.
pub fn count_reward(e0: Option<&Board>, e1: Option<&Board>) -> f64 {
    match (e0, e1) {
        (Some(a), Some(b)) => 2f64.powi(b.turned_on_since(a) as i32),
        _ => 0.0,
    }
}

fn reward_bt(n: usize, m: usize) -> BThread {
    BThread::from_fns(
        "reward_bt",
        (None::<Board>, None::<Board>),
        |(e0, e1): &(Option<Board>, Option<Board>)| {
            Ok(Some(
                ConstraintStatement::new()
                    .wait_for(Formula::tt())
                    .reward(count_reward(e0.as_ref(), e1.as_ref()))
                    .into(),
            ))
        },
        move |(_, e1): &(Option<Board>, Option<Board>), r: &Resume| Ok((e1.clone(), Some(settled_board(r, n, m)?))),
    )
}

/// Two-player bit-flip against a random opponent. The player's line is
/// the Int variable `action`.
pub fn bitflip_two_player(n: usize, m: usize) -> Result<BProgram> {
    check_dims(n, m)?;
    BProgram::from_threads("bitflip_two_player", [smt_init(n, m), opponent(n, m), controller(n, m), reward_bt(n, m)])
}
