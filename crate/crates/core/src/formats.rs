//! Text schemas for policies, value vectors and gain traces.
//!
//! Policy file:
//!
//! ```text
//! policy v1
//! owner controller        # optional, `controller` or `adversary`
//! <state> <action> <prob> [reach|cycle]
//! ```
//!
//! Only positive entries are listed. A mode tag, when present on any line
//! of a state, applies to the whole state.

use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{GameError, MixedPolicy, Owner, StochasticGame};
use crate::product::Mode;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("policy line {line}: {message}")]
    Policy { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}: {message}")]
    CsvRow { row: usize, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

fn policy_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Policy {
        line,
        message: message.into(),
    }
}

pub fn write_policy(g: &StochasticGame, mu: &MixedPolicy, modes: Option<&[Mode]>) -> String {
    let mut out = String::from("policy v1\n");
    if mu.owner == Owner::Adversary {
        out.push_str("owner adversary\n");
    }
    for (s, row) in mu.dist.iter().enumerate() {
        let names = match mu.owner {
            Owner::Controller => g.ctrl_actions(s),
            Owner::Adversary => g.adv_actions(s),
        };
        for (a, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let _ = write!(out, "{} {} {p}", g.state_names()[s], names[a]);
            match modes.map(|m| m[s]) {
                Some(Mode::Reach) => out.push_str(" reach"),
                Some(Mode::Cycle) => out.push_str(" cycle"),
                None => {}
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub policy: MixedPolicy,
    /// Present when every state carries a mode tag.
    pub modes: Option<Vec<Mode>>,
}

pub fn parse_policy(g: &StochasticGame, text: &str) -> Result<PolicyFile, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    match lines.next() {
        Some((_, "policy v1")) => {}
        Some((n, _)) => return Err(policy_err(n, "expected header `policy v1`")),
        None => return Err(policy_err(0, "empty file")),
    }
    let mut owner = Owner::Controller;
    if let Some(&(n, line)) = lines.peek() {
        if let Some(rest) = line.strip_prefix("owner ") {
            owner = match rest.trim() {
                "controller" => Owner::Controller,
                "adversary" => Owner::Adversary,
                other => return Err(policy_err(n, format!("unknown owner {other:?}"))),
            };
            lines.next();
        }
    }
    let actions = |s: usize| match owner {
        Owner::Controller => g.ctrl_actions(s),
        Owner::Adversary => g.adv_actions(s),
    };
    let mut dist: Vec<Vec<f64>> = (0..g.num_states()).map(|s| vec![0.0; actions(s).len()]).collect();
    let mut modes: Vec<Option<Mode>> = vec![None; g.num_states()];
    for (n, line) in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        if !(3..=4).contains(&words.len()) {
            return Err(policy_err(n, "expected `state action prob [reach|cycle]`"));
        }
        let s = g
            .state_index(words[0])
            .ok_or_else(|| policy_err(n, format!("unknown state {:?}", words[0])))?;
        let a = actions(s)
            .iter()
            .position(|x| x == words[1])
            .ok_or_else(|| policy_err(n, format!("unknown action {:?} at {}", words[1], words[0])))?;
        let p: f64 = words[2]
            .parse()
            .map_err(|_| policy_err(n, format!("bad probability {:?}", words[2])))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(policy_err(n, format!("probability {p} outside [0, 1]")));
        }
        dist[s][a] += p;
        if let Some(&tag) = words.get(3) {
            let m = match tag {
                "reach" => Mode::Reach,
                "cycle" => Mode::Cycle,
                _ => return Err(policy_err(n, format!("unknown mode tag {tag:?}"))),
            };
            if modes[s].is_some_and(|old| old != m) {
                return Err(policy_err(n, format!("conflicting mode tags at {}", words[0])));
            }
            modes[s] = Some(m);
        }
    }
    let policy = MixedPolicy::new(g, owner, dist)?;
    let modes = modes.into_iter().collect::<Option<Vec<Mode>>>();
    Ok(PolicyFile { policy, modes })
}

/// `state,value` CSV.
pub fn write_values(names: &[String], v: &[f64]) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["state", "value"])?;
    for (name, x) in names.iter().zip(v) {
        w.write_record([name.as_str(), &x.to_string()])?;
    }
    Ok(into_string(w))
}

pub fn parse_values(text: &str) -> Result<Vec<(String, f64)>, FormatError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let (Some(name), Some(x)) = (rec.get(0), rec.get(1)) else {
            return Err(FormatError::CsvRow {
                row: i + 1,
                message: "expected two fields".into(),
            });
        };
        let x = x.parse().map_err(|_| FormatError::CsvRow {
            row: i + 1,
            message: format!("bad number {x:?}"),
        })?;
        out.push((name.to_string(), x));
    }
    Ok(out)
}

/// `round,component,gain` CSV where `gain` is the largest gain over the
/// component's states after that round's evaluation.
pub fn write_trace(traces: &[Vec<f64>], component: usize) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["round", "component", "gain"])?;
    append_trace(&mut w, traces, component)?;
    Ok(into_string(w))
}

pub(crate) fn append_trace(w: &mut csv::Writer<Vec<u8>>, traces: &[Vec<f64>], component: usize) -> Result<(), FormatError> {
    for (round, j) in traces.iter().enumerate() {
        let gain = j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        w.write_record([(round + 1).to_string(), component.to_string(), gain.to_string()])?;
    }
    Ok(())
}

/// Writes several traces to one table.
pub fn write_traces(traces: &[(usize, Vec<Vec<f64>>)]) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["round", "component", "gain"])?;
    for (c, t) in traces {
        append_trace(&mut w, t, *c)?;
    }
    Ok(into_string(w))
}

/// `(round, component, gain)` rows.
pub fn parse_trace(text: &str) -> Result<Vec<(usize, usize, f64)>, FormatError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| FormatError::CsvRow { row: i + 1, message };
        if rec.len() != 3 {
            return Err(bad("expected three fields".into()));
        }
        let round = rec[0].parse().map_err(|_| bad(format!("bad round {:?}", &rec[0])))?;
        let comp = rec[1].parse().map_err(|_| bad(format!("bad component {:?}", &rec[1])))?;
        let gain = rec[2].parse().map_err(|_| bad(format!("bad gain {:?}", &rec[2])))?;
        out.push((round, comp, gain));
    }
    Ok(out)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("utf-8 records")
}
