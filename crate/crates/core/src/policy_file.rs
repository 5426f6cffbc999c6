//! Policy and log files.
//!
//! Text policies start with `SFPOLICY v1 <game-id> <1|2|both>` followed by
//! one `key<TAB>p0,p1,...` line per information state, probabilities in
//! ascending cell order. A trailing `#defaults uniform` line lets readers
//! fill unlisted information states with the uniform distribution;
//! without it every information state must be listed. Files whose name
//! ends in `.bin` use the binary layout `SFPOLICY-BIN v1`: the same header
//! line, then fixed-width little-endian records (player byte, token
//! count, 18 token bytes `cell << 1 | occupied`, probability count, nine
//! `f64` slots).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::games::{Action, GameSpec, InfoStateKey, MoveOutcome, Player};
use crate::solvers::LogRow;
use crate::treeplex::{normalize, TabularPolicy, Treeplex};

pub const TEXT_MAGIC: &str = "SFPOLICY v1";
pub const BINARY_MAGIC: &str = "SFPOLICY-BIN v1";
const DEFAULTS_LINE: &str = "#defaults uniform";
const MAX_TOKENS: usize = 18;
const MAX_ACTIONS: usize = 9;
const RECORD_BYTES: usize = 1 + 1 + MAX_TOKENS + 1 + 8 * MAX_ACTIONS;

/// Which seats a file covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seats {
    One(Player),
    Both,
}

impl Seats {
    fn label(self) -> String {
        match self {
            Seats::One(p) => p.to_string(),
            Seats::Both => "both".into(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Seats::One(Player::One)),
            "2" => Ok(Seats::One(Player::Two)),
            "both" => Ok(Seats::Both),
            _ => Err(Error::Format(format!("unknown seat `{s}` in header"))),
        }
    }

    pub fn covers(self, p: Player) -> bool {
        self == Seats::Both || self == Seats::One(p)
    }
}

/// A parsed policy file: one table per covered seat.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    pub game: GameSpec,
    pub seats: Seats,
    pub tables: [Option<TabularPolicy>; 2],
}

impl PolicySet {
    pub fn table(&self, p: Player) -> Option<&TabularPolicy> {
        self.tables[p.index()].as_ref()
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

/// Writes the tables of `tps` (one entry per covered seat) to `path`; the
/// format follows the file extension.
pub fn write_policy(path: &Path, spec: &GameSpec, tables: &[(&Treeplex, &TabularPolicy)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if is_binary(path) {
        write_binary(&mut w, spec, tables)?;
    } else {
        write_text(&mut w, spec, tables)?;
    }
    w.flush()?;
    Ok(())
}

fn seats_of(tables: &[(&Treeplex, &TabularPolicy)]) -> Result<Seats> {
    match tables {
        [(tp, _)] => Ok(Seats::One(tp.player())),
        [(a, _), (b, _)] if a.player() == Player::One && b.player() == Player::Two => Ok(Seats::Both),
        _ => Err(Error::Unsupported(
            "a policy file holds player one, player two, or both in that order".into(),
        )),
    }
}

fn check_table(tp: &Treeplex, t: &TabularPolicy) -> Result<()> {
    if t.player != tp.player() || t.probs.len() != tp.num_sequences() {
        return Err(Error::DimensionMismatch {
            expected: tp.num_sequences(),
            got: t.probs.len(),
        });
    }
    Ok(())
}

pub fn write_text(w: &mut impl Write, spec: &GameSpec, tables: &[(&Treeplex, &TabularPolicy)]) -> Result<()> {
    let seats = seats_of(tables)?;
    writeln!(w, "{TEXT_MAGIC} {} {}", spec.id(), seats.label())?;
    let mut line = String::new();
    for &(tp, t) in tables {
        check_table(tp, t)?;
        let mut err = None;
        tp.for_each_key(|id, key| {
            if err.is_some() {
                return;
            }
            line.clear();
            use std::fmt::Write as _;
            let _ = write!(line, "{key}\t");
            for (i, p) in t.probs[tp.infoset(id).sequences()].iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{p:.16e}");
            }
            line.push('\n');
            if let Err(e) = w.write_all(line.as_bytes()) {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e.into());
        }
    }
    Ok(())
}

pub fn write_binary(w: &mut impl Write, spec: &GameSpec, tables: &[(&Treeplex, &TabularPolicy)]) -> Result<()> {
    let seats = seats_of(tables)?;
    writeln!(w, "{BINARY_MAGIC} {} {}", spec.id(), seats.label())?;
    let mut rec = [0u8; RECORD_BYTES];
    for &(tp, t) in tables {
        check_table(tp, t)?;
        let mut err = None;
        tp.for_each_key(|id, key| {
            if err.is_some() {
                return;
            }
            let probs = &t.probs[tp.infoset(id).sequences()];
            encode_record(key, probs, &mut rec);
            if let Err(e) = w.write_all(&rec) {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e.into());
        }
    }
    Ok(())
}

fn encode_record(key: &InfoStateKey, probs: &[f64], rec: &mut [u8; RECORD_BYTES]) {
    rec.fill(0);
    rec[0] = key.player.number();
    rec[1] = key.tokens.len() as u8;
    for (i, (a, o)) in key.tokens.iter().enumerate() {
        rec[2 + i] = a.0 << 1 | (*o == MoveOutcome::Occupied) as u8;
    }
    let base = 2 + MAX_TOKENS;
    rec[base] = probs.len() as u8;
    for (i, p) in probs.iter().enumerate() {
        let at = base + 1 + 8 * i;
        rec[at..at + 8].copy_from_slice(&p.to_le_bytes());
    }
}

fn decode_record(rec: &[u8; RECORD_BYTES], probs: &mut Vec<f64>) -> Result<InfoStateKey> {
    let bad = || Error::Format("corrupt binary record".into());
    let player = match rec[0] {
        1 => Player::One,
        2 => Player::Two,
        _ => return Err(bad()),
    };
    let n = rec[1] as usize;
    if n > MAX_TOKENS {
        return Err(bad());
    }
    let tokens = rec[2..2 + n]
        .iter()
        .map(|&b| {
            let o = if b & 1 == 1 { MoveOutcome::Occupied } else { MoveOutcome::Placed };
            (Action(b >> 1), o)
        })
        .collect();
    let base = 2 + MAX_TOKENS;
    let k = rec[base] as usize;
    if k == 0 || k > MAX_ACTIONS {
        return Err(bad());
    }
    probs.clear();
    for i in 0..k {
        let at = base + 1 + 8 * i;
        probs.push(f64::from_le_bytes(rec[at..at + 8].try_into().expect("8 bytes")));
    }
    Ok(InfoStateKey { player, tokens })
}

/// Reads a policy file for `spec`. `tps` are both players' treeplexes.
pub fn read_policy(path: &Path, spec: &GameSpec, tps: [&Treeplex; 2]) -> Result<PolicySet> {
    let mut r = BufReader::new(File::open(path)?);
    read_policy_from(&mut r, is_binary(path), spec, tps)
}

/// Tables being filled while a file is read.
struct Filling<'a> {
    tps: [&'a Treeplex; 2],
    tables: [Option<TabularPolicy>; 2],
    seen: [Vec<bool>; 2],
}

impl<'a> Filling<'a> {
    fn new(seats: Seats, tps: [&'a Treeplex; 2]) -> Self {
        let mk = |p: Player| seats.covers(p).then(|| TabularPolicy::uniform(tps[p.index()]));
        let seen = |p: Player| {
            if seats.covers(p) {
                vec![false; tps[p.index()].num_infosets()]
            } else {
                Vec::new()
            }
        };
        Self {
            tps,
            tables: [mk(Player::One), mk(Player::Two)],
            seen: [seen(Player::One), seen(Player::Two)],
        }
    }

    fn set(&mut self, key: &InfoStateKey, probs: &mut [f64], at: &str) -> Result<()> {
        let p = key.player.index();
        let Some(table) = self.tables[p].as_mut() else {
            return Err(Error::Format(format!("{at}: key `{key}` is for a seat the header does not cover")));
        };
        let tp = self.tps[p];
        let id = tp
            .find(key)
            .ok_or_else(|| Error::Format(format!("{at}: unknown information state `{key}`")))?;
        if std::mem::replace(&mut self.seen[p][id as usize], true) {
            return Err(Error::Format(format!("{at}: duplicate key `{key}`")));
        }
        let range = tp.infoset(id).sequences();
        if probs.len() != range.len() {
            return Err(Error::Format(format!(
                "{at}: `{key}` has {} legal actions but {} probabilities",
                range.len(),
                probs.len()
            )));
        }
        normalize(key, probs)?;
        table.probs[range].copy_from_slice(probs);
        Ok(())
    }

    fn finish(self, defaults: bool) -> Result<[Option<TabularPolicy>; 2]> {
        if !defaults {
            for p in 0..2 {
                if let Some(id) = self.seen[p].iter().position(|s| !s) {
                    return Err(Error::Format(format!(
                        "no entry for `{}` and no `{DEFAULTS_LINE}` line",
                        self.tps[p].key(id as u32)
                    )));
                }
            }
        }
        Ok(self.tables)
    }
}

fn parse_header(line: &str, magic: &str, spec: &GameSpec) -> Result<(Seats, bool)> {
    let rest = line
        .trim_end()
        .strip_prefix(magic)
        .ok_or_else(|| Error::Format(format!("expected `{magic}` header, got `{line}`")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    let (game, seats, defaults) = match fields[..] {
        [g, s] => (g, s, false),
        [g, s, "defaults-uniform"] => (g, s, true),
        _ => return Err(Error::Format(format!("bad header `{line}`"))),
    };
    if game != spec.id() {
        return Err(Error::Format(format!("file is for game `{game}`, expected `{spec}`")));
    }
    Ok((Seats::parse(seats)?, defaults))
}

pub fn read_policy_from(r: &mut impl BufRead, binary: bool, spec: &GameSpec, tps: [&Treeplex; 2]) -> Result<PolicySet> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let magic = if binary { BINARY_MAGIC } else { TEXT_MAGIC };
    let (seats, mut defaults) = parse_header(&header, magic, spec)?;
    let mut fill = Filling::new(seats, tps);
    let mut probs = Vec::with_capacity(MAX_ACTIONS);
    if binary {
        let mut rec = [0u8; RECORD_BYTES];
        let mut n = 0u64;
        loop {
            match read_full(r, &mut rec)? {
                0 => break,
                RECORD_BYTES => {}
                _ => return Err(Error::Format("truncated binary record".into())),
            }
            n += 1;
            let key = decode_record(&rec, &mut probs)?;
            fill.set(&key, &mut probs, &format!("record {n}"))?;
        }
    } else {
        let mut line = String::new();
        let mut n = 1u64;
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                break;
            }
            n += 1;
            let l = line.trim_end();
            if l.is_empty() {
                continue;
            }
            if l == DEFAULTS_LINE {
                defaults = true;
                continue;
            }
            if l.starts_with('#') {
                continue;
            }
            let at = format!("line {n}");
            let (key, values) = l
                .split_once('\t')
                .ok_or_else(|| Error::Format(format!("{at}: expected `key<TAB>probabilities`")))?;
            let key: InfoStateKey = key
                .parse()
                .map_err(|_| Error::Format(format!("{at}: malformed key `{key}`")))?;
            probs.clear();
            for v in values.split(',') {
                let p: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("{at}: bad probability `{v}`")))?;
                probs.push(p);
            }
            fill.set(&key, &mut probs, &at)?;
        }
    }
    Ok(PolicySet {
        game: *spec,
        seats,
        tables: fill.finish(defaults)?,
    })
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        let n = r.read(&mut buf[got..])?;
        if n == 0 {
            break;
        }
        got += n;
    }
    Ok(got)
}

pub const LOG_HEADER: &str = "iteration,value,nash_gap,exploitability,wall_seconds";

pub fn write_log_header(w: &mut impl Write) -> Result<()> {
    writeln!(w, "{LOG_HEADER}")?;
    Ok(())
}

pub fn write_log_row(w: &mut impl Write, row: &LogRow) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{},{:.3}",
        row.iteration, row.value, row.nash_gap, row.exploitability, row.wall_seconds
    )?;
    Ok(())
}

pub fn read_log(r: impl BufRead) -> Result<Vec<LogRow>> {
    let mut rows: Vec<LogRow> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 {
            if line.trim_end() != LOG_HEADER {
                return Err(Error::Format(format!("expected log header `{LOG_HEADER}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("log line {}: `{line}`", n + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
        let row = LogRow {
            iteration: f[0].parse().map_err(|_| bad())?,
            value: num(1)?,
            nash_gap: num(2)?,
            exploitability: num(3)?,
            wall_seconds: num(4)?,
        };
        if rows.last().is_some_and(|r| r.iteration >= row.iteration) {
            return Err(bad());
        }
        rows.push(row);
    }
    Ok(rows)
}
