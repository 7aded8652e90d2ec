//! The ZSG v1 text format.
//!
//! ```text
//! zsg 1 <n>
//! <i> <a> <b> <reward> <j1>:<p1> [<j2>:<p2> ...]
//! ```
//!
//! One record per `(i, a, b)`, whitespace separated, `#` starts a comment.
//! Action indices are contiguous from 0 per state (per `(state, a)` for `b`).

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::game::{Game, GameBuilder};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing header")]
    MissingHeader,
    #[error("state {0} has no records")]
    MissingState(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

struct Record {
    key: (usize, usize, usize),
    reward: f64,
    row: Vec<(usize, f64)>,
    line: usize,
}

fn parse_index(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| syntax(line, format!("invalid {what} `{tok}`")))
}

fn parse_real(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(syntax(line, format!("invalid {what} `{tok}`"))),
    }
}

/// Parses a game in ZSG v1 format.
pub fn parse_game(text: &str) -> Result<Game, ParseError> {
    let mut n = None;
    let mut records = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(first) = toks.next() else { continue };
        let Some(n) = n else {
            let (ver, cnt) = (toks.next(), toks.next());
            if first != "zsg" || ver != Some("1") || toks.next().is_some() {
                return Err(syntax(line, "malformed header, expected `zsg 1 <n>`"));
            }
            let cnt = cnt.ok_or_else(|| syntax(line, "malformed header, expected `zsg 1 <n>`"))?;
            n = Some(parse_index(cnt, line, "state count")?);
            continue;
        };
        let i = parse_index(first, line, "state")?;
        let a = parse_index(toks.next().ok_or_else(|| syntax(line, "missing MIN action"))?, line, "MIN action")?;
        let b = parse_index(toks.next().ok_or_else(|| syntax(line, "missing MAX action"))?, line, "MAX action")?;
        let reward = parse_real(toks.next().ok_or_else(|| syntax(line, "missing reward"))?, line, "reward")?;
        if i >= n {
            return Err(syntax(line, format!("state {i} out of range")));
        }
        let mut row = Vec::new();
        for t in toks {
            let (j, p) = t.split_once(':').ok_or_else(|| syntax(line, format!("expected `<j>:<p>`, got `{t}`")))?;
            let j = parse_index(j, line, "target")?;
            if j >= n {
                return Err(syntax(line, format!("target {j} out of range")));
            }
            row.push((j, parse_real(p, line, "probability")?));
        }
        if row.is_empty() {
            return Err(syntax(line, "empty transition row"));
        }
        records.push(Record { key: (i, a, b), reward, row, line });
    }
    let n = n.ok_or(ParseError::MissingHeader)?;
    records.sort_by_key(|r| r.key);
    let mut gb = GameBuilder::with_capacity(n, records.len(), 0);
    for r in &records {
        let (i, a, b) = r.key;
        gb.push(i, a, b, r.reward, &r.row).map_err(|e| syntax(r.line, e.to_string()))?;
    }
    let missing = records.last().map_or(0, |r| r.key.0 + 1);
    gb.finish().map_err(|_| ParseError::MissingState(missing))
}

/// Formats `x` like C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..17).contains(&exp) {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{exp}");
    }
    let s = format!("{:.*}", (16 - exp).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes the canonical ZSG v1 text of `game`.
pub fn write_game<W: Write>(game: &Game, out: &mut W) -> io::Result<()> {
    writeln!(out, "zsg 1 {}", game.n_states())?;
    let mut line = String::new();
    for (i, a, b) in game.records() {
        line.clear();
        write!(line, "{i} {a} {b} {}", format_g17(game.reward(i, a, b))).unwrap();
        for (j, p) in game.transition(i, a, b).iter() {
            write!(line, " {j}:{}", format_g17(p)).unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn serialize_game(game: &Game) -> String {
    let mut buf = Vec::new();
    write_game(game, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
