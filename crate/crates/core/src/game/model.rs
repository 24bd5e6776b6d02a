use std::fmt::Write as _;
use std::path::Path;

use crate::game::GameError;
use crate::ltl::{Alphabet, Letter, PropSet};

/// Sparse distribution over successor states, sorted by state index.
pub type Row = Vec<(usize, f64)>;

pub const ROW_SUM_TOL: f64 = 1e-9;

/// A labeled concurrent stochastic game. The joint action `(uc, ua)` at
/// state `s` selects the row `kernel[s][uc * |U_A(s)| + ua]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGame {
    names: Vec<String>,
    alphabet: Alphabet,
    labels: Vec<Letter>,
    ctrl: Vec<Vec<String>>,
    adv: Vec<Vec<String>>,
    kernel: Vec<Vec<Row>>,
    initial: usize,
}

impl StochasticGame {
    pub fn new(
        names: Vec<String>,
        alphabet: Alphabet,
        labels: Vec<Letter>,
        ctrl: Vec<Vec<String>>,
        adv: Vec<Vec<String>>,
        kernel: Vec<Vec<Row>>,
        initial: usize,
    ) -> Result<Self, GameError> {
        let n = names.len();
        if n == 0 {
            return Err(GameError::format(0, "game has no states"));
        }
        if labels.len() != n || ctrl.len() != n || adv.len() != n || kernel.len() != n {
            return Err(GameError::format(0, "per-state tables have inconsistent lengths"));
        }
        if initial >= n {
            return Err(GameError::format(0, "initial state out of range"));
        }
        let letters = alphabet.letter_count() as Letter;
        let mut kernel = kernel;
        for s in 0..n {
            if ctrl[s].is_empty() || adv[s].is_empty() {
                return Err(GameError::EmptyActionSet(names[s].clone()));
            }
            if labels[s] >= letters {
                return Err(GameError::format(0, format!("label of {} outside alphabet", names[s])));
            }
            let na = adv[s].len();
            if kernel[s].len() != ctrl[s].len() * na {
                return Err(GameError::format(0, format!("kernel of {} has the wrong shape", names[s])));
            }
            for (j, row) in kernel[s].iter_mut().enumerate() {
                let fail = |sum: f64| GameError::RowSum {
                    state: names[s].clone(),
                    uc: ctrl[s][j / na].clone(),
                    ua: adv[s][j % na].clone(),
                    sum,
                };
                row.sort_by_key(|&(t, _)| t);
                let mut merged: Row = Vec::with_capacity(row.len());
                for &(t, p) in row.iter() {
                    if t >= n || !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) || p.is_nan() {
                        return Err(fail(p));
                    }
                    match merged.last_mut() {
                        Some((lt, lp)) if *lt == t => *lp += p,
                        _ => merged.push((t, p)),
                    }
                }
                merged.retain(|&(_, p)| p > 0.0);
                let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(fail(sum));
                }
                *row = merged;
            }
        }
        Ok(Self {
            names,
            alphabet,
            labels,
            ctrl,
            adv,
            kernel,
            initial,
        })
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn label(&self, s: usize) -> Letter {
        self.labels[s]
    }

    pub fn labels(&self) -> &[Letter] {
        &self.labels
    }

    pub fn label_set(&self, s: usize) -> PropSet {
        self.alphabet.props_of(self.labels[s])
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn ctrl_actions(&self, s: usize) -> &[String] {
        &self.ctrl[s]
    }

    pub fn adv_actions(&self, s: usize) -> &[String] {
        &self.adv[s]
    }

    pub fn num_ctrl(&self, s: usize) -> usize {
        self.ctrl[s].len()
    }

    pub fn num_adv(&self, s: usize) -> usize {
        self.adv[s].len()
    }

    pub fn row(&self, s: usize, uc: usize, ua: usize) -> &[(usize, f64)] {
        &self.kernel[s][uc * self.adv[s].len() + ua]
    }

    /// Probability of `s -> t` under the joint action.
    pub fn prob(&self, s: usize, uc: usize, ua: usize, t: usize) -> f64 {
        let row = self.row(s, uc, ua);
        row.binary_search_by_key(&t, |&(x, _)| x)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn num_transitions(&self) -> usize {
        self.kernel.iter().flatten().map(Vec::len).sum()
    }

    /// True when every state offers the adversary a single action.
    pub fn is_mdp(&self) -> bool {
        self.adv.iter().all(|a| a.len() == 1)
    }

    /// Serializes to the `sg v1` schema. Probabilities use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("sg v1\n");
        let _ = writeln!(out, "alphabet {}", self.alphabet.names().join(" "));
        let _ = writeln!(out, "states {}", self.names.join(" "));
        let _ = writeln!(out, "initial {}", self.names[self.initial]);
        out.push_str("labels\n");
        for (s, name) in self.names.iter().enumerate() {
            let props = self.label_set(s);
            if props.is_empty() {
                let _ = writeln!(out, "{name}");
            } else {
                let props: Vec<&str> = props.iter().map(String::as_str).collect();
                let _ = writeln!(out, "{name} {}", props.join(" "));
            }
        }
        out.push_str("actions\n");
        for (s, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{name} C:{} A:{}", self.ctrl[s].join(","), self.adv[s].join(","));
        }
        out.push_str("transitions\n");
        for (s, name) in self.names.iter().enumerate() {
            for (uc, cname) in self.ctrl[s].iter().enumerate() {
                for (ua, aname) in self.adv[s].iter().enumerate() {
                    for &(t, p) in self.row(s, uc, ua) {
                        let _ = writeln!(out, "{name} {cname} {aname} {} {p}", self.names[t]);
                    }
                }
            }
        }
        out
    }
}

pub fn load_game(path: impl AsRef<Path>) -> Result<StochasticGame, GameError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GameError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_game(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Labels,
    Actions,
    Transitions,
}

pub fn parse_game(text: &str) -> Result<StochasticGame, GameError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "sg v1")) => {}
        Some((n, _)) => return Err(GameError::format(n, "expected header `sg v1`")),
        None => return Err(GameError::format(0, "empty file")),
    }

    let mut alphabet: Option<Alphabet> = None;
    let mut names: Vec<String> = Vec::new();
    let mut initial: Option<String> = None;
    let mut label_lines = Vec::new();
    let mut action_lines = Vec::new();
    let mut trans_lines = Vec::new();
    let mut section = Section::Header;

    for (n, line) in lines {
        let next = match line {
            "labels" => Some(Section::Labels),
            "actions" => Some(Section::Actions),
            "transitions" => Some(Section::Transitions),
            _ => None,
        };
        if let Some(sec) = next {
            section = sec;
            continue;
        }
        match section {
            Section::Header => {
                let mut words = line.split_whitespace();
                let key = words.next().unwrap_or("");
                let rest: Vec<String> = words.map(String::from).collect();
                match key {
                    "alphabet" => {
                        alphabet = Some(Alphabet::new(rest).map_err(|e| GameError::format(n, e.to_string()))?)
                    }
                    "states" => names = rest,
                    "initial" if rest.len() == 1 => initial = Some(rest[0].clone()),
                    _ => return Err(GameError::format(n, format!("unexpected line {line:?}"))),
                }
            }
            Section::Labels => label_lines.push((n, line)),
            Section::Actions => action_lines.push((n, line)),
            Section::Transitions => trans_lines.push((n, line)),
        }
    }

    let alphabet = alphabet.ok_or_else(|| GameError::format(0, "missing `alphabet`"))?;
    if names.is_empty() {
        return Err(GameError::format(0, "missing `states`"));
    }
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != names.len() {
        return Err(GameError::format(0, "duplicate state name"));
    }
    let index = |n: usize, name: &str| -> Result<usize, GameError> {
        names
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| GameError::format(n, format!("unknown state {name:?}")))
    };
    let initial = initial.ok_or_else(|| GameError::format(0, "missing `initial`"))?;
    let initial = index(0, &initial)?;
    let ns = names.len();

    let mut labels = vec![0 as Letter; ns];
    for (n, line) in label_lines {
        let mut words = line.split_whitespace();
        let s = index(n, words.next().unwrap_or(""))?;
        let props: PropSet = words.map(String::from).collect();
        labels[s] = alphabet
            .letter(&props)
            .map_err(|e| GameError::format(n, e.to_string()))?;
    }

    let mut ctrl = vec![Vec::new(); ns];
    let mut adv = vec![Vec::new(); ns];
    for (n, line) in action_lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 3 {
            return Err(GameError::format(n, "expected `s C:a,b A:x,y`"));
        }
        let s = index(n, words[0])?;
        let list = |tok: &str, tag: &str| -> Result<Vec<String>, GameError> {
            let body = tok
                .strip_prefix(tag)
                .ok_or_else(|| GameError::format(n, format!("expected {tag}...")))?;
            let acts: Vec<String> = body
                .split(',')
                .filter(|a| !a.is_empty())
                .map(String::from)
                .collect();
            let mut d = acts.clone();
            d.sort();
            d.dedup();
            if d.len() != acts.len() {
                return Err(GameError::format(n, "duplicate action name"));
            }
            Ok(acts)
        };
        ctrl[s] = list(words[1], "C:")?;
        adv[s] = list(words[2], "A:")?;
    }
    for s in 0..ns {
        if ctrl[s].is_empty() || adv[s].is_empty() {
            return Err(GameError::EmptyActionSet(names[s].clone()));
        }
    }

    let mut kernel: Vec<Vec<Row>> = (0..ns)
        .map(|s| vec![Vec::new(); ctrl[s].len() * adv[s].len()])
        .collect();
    for (n, line) in trans_lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 5 {
            return Err(GameError::format(n, "expected `s uC uA s' prob`"));
        }
        let s = index(n, words[0])?;
        let uc = ctrl[s]
            .iter()
            .position(|a| a == words[1])
            .ok_or_else(|| GameError::format(n, format!("unknown controller action {:?}", words[1])))?;
        let ua = adv[s]
            .iter()
            .position(|a| a == words[2])
            .ok_or_else(|| GameError::format(n, format!("unknown adversary action {:?}", words[2])))?;
        let t = index(n, words[3])?;
        let p: f64 = words[4]
            .parse()
            .map_err(|_| GameError::format(n, format!("bad probability {:?}", words[4])))?;
        kernel[s][uc * adv[s].len() + ua].push((t, p));
    }

    StochasticGame::new(names, alphabet, labels, ctrl, adv, kernel, initial)
}
