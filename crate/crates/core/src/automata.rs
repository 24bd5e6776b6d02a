//! Deterministic Rabin automata over `2^Π`.
//!
//! Text schema (`#` starts a comment):
//!
//! ```text
//! dra v1
//! alphabet a b
//! states q0 q1
//! initial q0
//! edges
//! q0 !a q0
//! q0 a q1
//! q1 true q1
//! pairs
//! 1 L:{} K:{q1}
//! ```
//!
//! A guard is either an explicit proposition set such as `{a,b}` (exactly
//! that letter) or a propositional formula over the alphabet, which covers
//! every letter satisfying it.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::ltl::{parse_ltl, Alphabet, LassoWord, Letter, LtlError};

#[derive(Debug, Error)]
pub enum DraError {
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("state {state} has no transition on letter {{{letter}}}")]
    NonTotalTransition { state: String, letter: String },
    #[error("unknown state {0:?}")]
    DanglingState(String),
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error("cannot read {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn format_err(line: usize, message: impl Into<String>) -> DraError {
    DraError::Format {
        line,
        message: message.into(),
    }
}

/// One Rabin pair as membership masks over automaton states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinPair {
    pub l: Vec<bool>,
    pub k: Vec<bool>,
}

impl RabinPair {
    /// Accepting iff the infinitely visited set avoids `L` and meets `K`.
    pub fn accepts(&self, inf: &[bool]) -> bool {
        let hits = |set: &[bool]| set.iter().zip(inf).any(|(a, b)| *a && *b);
        !hits(&self.l) && hits(&self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dra {
    alphabet: Alphabet,
    states: Vec<String>,
    delta: Vec<usize>,
    initial: usize,
    pairs: Vec<RabinPair>,
}

impl Dra {
    /// `delta[q * 2^|Π| + letter]` is the successor of `q`.
    pub fn new(
        alphabet: Alphabet,
        states: Vec<String>,
        delta: Vec<usize>,
        initial: usize,
        pairs: Vec<RabinPair>,
    ) -> Result<Self, DraError> {
        let nq = states.len();
        if nq == 0 {
            return Err(format_err(0, "automaton has no states"));
        }
        if delta.len() != nq * alphabet.letter_count() {
            return Err(format_err(0, "transition table has the wrong size"));
        }
        if let Some(&bad) = delta.iter().find(|&&t| t >= nq) {
            return Err(DraError::DanglingState(format!("#{bad}")));
        }
        if initial >= nq {
            return Err(DraError::DanglingState(format!("#{initial}")));
        }
        if pairs.is_empty() {
            return Err(format_err(0, "at least one Rabin pair is required"));
        }
        if pairs.iter().any(|p| p.l.len() != nq || p.k.len() != nq) {
            return Err(format_err(0, "Rabin pair masks must cover every state"));
        }
        Ok(Self {
            alphabet,
            states,
            delta,
            initial,
            pairs,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Pairs in file order; the file numbers them from 1.
    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn step(&self, q: usize, letter: Letter) -> usize {
        self.delta[q * self.alphabet.letter_count() + letter as usize]
    }

    /// Rabin acceptance of a run whose infinitely visited states are `inf`.
    pub fn accepts_inf_set(&self, inf: &[bool]) -> bool {
        self.pairs.iter().any(|p| p.accepts(inf))
    }

    /// Runs the automaton on `prefix · cycle^ω`. The cycle is traversed in
    /// whole passes until the state at the start of a pass repeats; the
    /// states visited from the first repeated pass onward are exactly the
    /// ones visited infinitely often.
    pub fn accepts_lasso(&self, w: &LassoWord) -> Result<bool, DraError> {
        w.check_alphabet(&self.alphabet)?;
        let prefix: Vec<Letter> = w
            .prefix
            .iter()
            .map(|s| self.alphabet.letter(s))
            .collect::<Result<_, _>>()?;
        let cycle: Vec<Letter> = w
            .cycle
            .iter()
            .map(|s| self.alphabet.letter(s))
            .collect::<Result<_, _>>()?;
        let mut q = self.initial;
        for &a in &prefix {
            q = self.step(q, a);
        }
        let nq = self.num_states();
        let mut pass_of = vec![usize::MAX; nq];
        let mut visited: Vec<Vec<usize>> = Vec::new();
        loop {
            if pass_of[q] != usize::MAX {
                let mut inf = vec![false; nq];
                for pass in &visited[pass_of[q]..] {
                    for &s in pass {
                        inf[s] = true;
                    }
                }
                return Ok(self.accepts_inf_set(&inf));
            }
            pass_of[q] = visited.len();
            let mut seen = Vec::with_capacity(cycle.len());
            for &a in &cycle {
                q = self.step(q, a);
                seen.push(q);
            }
            visited.push(seen);
        }
    }

    /// Serializes with one explicit-set edge per (state, letter).
    pub fn to_text(&self) -> String {
        let mut out = String::from("dra v1\n");
        let _ = writeln!(out, "alphabet {}", self.alphabet.names().join(" "));
        let _ = writeln!(out, "states {}", self.states.join(" "));
        let _ = writeln!(out, "initial {}", self.states[self.initial]);
        out.push_str("edges\n");
        for (q, name) in self.states.iter().enumerate() {
            for letter in 0..self.alphabet.letter_count() as Letter {
                let set = self.alphabet.props_of(letter);
                let body: Vec<&str> = set.iter().map(String::as_str).collect();
                let _ = writeln!(
                    out,
                    "{name} {{{}}} {}",
                    body.join(","),
                    self.states[self.step(q, letter)]
                );
            }
        }
        out.push_str("pairs\n");
        for (z, p) in self.pairs.iter().enumerate() {
            let names = |mask: &[bool]| -> String {
                mask.iter()
                    .zip(&self.states)
                    .filter(|(m, _)| **m)
                    .map(|(_, s)| s.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let _ = writeln!(out, "{} L:{{{}}} K:{{{}}}", z + 1, names(&p.l), names(&p.k));
        }
        out
    }
}

pub fn load_dra(path: impl AsRef<Path>) -> Result<Dra, DraError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DraError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dra(&text)
}

#[derive(PartialEq)]
enum Section {
    Header,
    Edges,
    Pairs,
}

/// Splits `{a,b}` into names; `{}` is the empty set.
pub(crate) fn parse_brace_set(token: &str) -> Option<Vec<String>> {
    let inner = token.strip_prefix('{')?.strip_suffix('}')?;
    Some(
        inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
    )
}

pub fn parse_dra(text: &str) -> Result<Dra, DraError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, "dra v1")) => {}
        Some((n, _)) => return Err(format_err(n, "expected header `dra v1`")),
        None => return Err(format_err(0, "empty file")),
    }

    let mut alphabet: Option<Alphabet> = None;
    let mut states: Option<Vec<String>> = None;
    let mut initial: Option<(usize, String)> = None;
    let mut edges: Vec<(usize, String, String, String)> = Vec::new();
    let mut pair_lines: Vec<(usize, String)> = Vec::new();
    let mut section = Section::Header;

    for (n, line) in lines {
        match line {
            "edges" => {
                section = Section::Edges;
                continue;
            }
            "pairs" => {
                section = Section::Pairs;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let mut words = line.split_whitespace();
                let key = words.next().unwrap_or("");
                let rest: Vec<String> = words.map(String::from).collect();
                match key {
                    "alphabet" => {
                        alphabet = Some(
                            Alphabet::new(rest).map_err(|e| format_err(n, e.to_string()))?,
                        )
                    }
                    "states" => {
                        if rest.is_empty() {
                            return Err(format_err(n, "no states declared"));
                        }
                        let mut sorted = rest.clone();
                        sorted.sort();
                        sorted.dedup();
                        if sorted.len() != rest.len() {
                            return Err(format_err(n, "duplicate state name"));
                        }
                        states = Some(rest);
                    }
                    "initial" => {
                        if rest.len() != 1 {
                            return Err(format_err(n, "`initial` takes one state"));
                        }
                        initial = Some((n, rest[0].clone()));
                    }
                    other => return Err(format_err(n, format!("unknown key {other:?}"))),
                }
            }
            Section::Edges => {
                let words: Vec<&str> = line.split_whitespace().collect();
                if words.len() < 3 {
                    return Err(format_err(n, "edge needs `source guard target`"));
                }
                let guard = words[1..words.len() - 1].join(" ");
                edges.push((
                    n,
                    words[0].to_string(),
                    guard,
                    words[words.len() - 1].to_string(),
                ));
            }
            Section::Pairs => pair_lines.push((n, line.to_string())),
        }
    }

    let alphabet = alphabet.ok_or_else(|| format_err(0, "missing `alphabet`"))?;
    let states = states.ok_or_else(|| format_err(0, "missing `states`"))?;
    let (_, init_name) = initial.ok_or_else(|| format_err(0, "missing `initial`"))?;
    let index = |name: &str| -> Result<usize, DraError> {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| DraError::DanglingState(name.to_string()))
    };
    let initial = index(&init_name)?;

    let nl = alphabet.letter_count();
    let mut delta = vec![usize::MAX; states.len() * nl];
    for (n, src, guard, dst) in &edges {
        let q = index(src)?;
        let t = index(dst)?;
        for letter in guard_letters(&alphabet, guard, *n)? {
            let slot = &mut delta[q * nl + letter as usize];
            if *slot != usize::MAX && *slot != t {
                return Err(format_err(
                    *n,
                    format!("conflicting targets from {src} on {{{}}}", letter_text(&alphabet, letter)),
                ));
            }
            *slot = t;
        }
    }
    for (i, &t) in delta.iter().enumerate() {
        if t == usize::MAX {
            return Err(DraError::NonTotalTransition {
                state: states[i / nl].clone(),
                letter: letter_text(&alphabet, (i % nl) as Letter),
            });
        }
    }

    let mut pairs = Vec::new();
    for (n, line) in &pair_lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 3 {
            return Err(format_err(*n, "pair needs `z L:{..} K:{..}`"));
        }
        let z: usize = words[0]
            .parse()
            .map_err(|_| format_err(*n, "pair index must be an integer"))?;
        if z != pairs.len() + 1 {
            return Err(format_err(*n, "pairs must be numbered 1, 2, ... in order"));
        }
        let mask = |tok: &str, tag: &str| -> Result<Vec<bool>, DraError> {
            let body = tok
                .strip_prefix(tag)
                .and_then(parse_brace_set)
                .ok_or_else(|| format_err(*n, format!("expected {tag}{{...}}")))?;
            let mut m = vec![false; states.len()];
            for name in body {
                m[index(&name)?] = true;
            }
            Ok(m)
        };
        let l = mask(words[1], "L:")?;
        let k = mask(words[2], "K:")?;
        pairs.push(RabinPair { l, k });
    }
    if pairs.is_empty() {
        return Err(format_err(0, "at least one Rabin pair is required"));
    }

    Dra::new(alphabet, states, delta, initial, pairs)
}

fn letter_text(alphabet: &Alphabet, letter: Letter) -> String {
    alphabet
        .props_of(letter)
        .into_iter()
        .collect::<Vec<_>>()
        .join(",")
}

/// Letters matched by a guard; see the module docs for the two forms.
pub fn guard_letters(alphabet: &Alphabet, guard: &str, line: usize) -> Result<Vec<Letter>, DraError> {
    if let Some(names) = parse_brace_set(guard) {
        return Ok(vec![alphabet.letter(&names)?]);
    }
    let f = parse_ltl(guard).map_err(|e| format_err(line, format!("guard {guard:?}: {e}")))?;
    if !f.is_propositional() {
        return Err(format_err(line, format!("guard {guard:?} is not propositional")));
    }
    if let Some(a) = f.atoms().into_iter().find(|a| !alphabet.contains(a)) {
        return Err(DraError::Ltl(LtlError::UnknownProposition(a)));
    }
    Ok((0..alphabet.letter_count() as Letter)
        .filter(|&l| {
            f.eval_propositional(&|p| alphabet.holds(l, p))
                .unwrap_or(false)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::evaluate_on_lasso;

    const F_A: &str = "dra v1\nalphabet a\nstates q0 q1\ninitial q0\nedges\nq0 !a q0\nq0 a q1\nq1 true q1\npairs\n1 L:{} K:{q1}\n";

    fn word(prefix: &[&[&str]], cycle: &[&[&str]]) -> LassoWord {
        LassoWord::from_names(prefix, cycle).unwrap()
    }

    #[test]
    fn loads_reachability_automaton() {
        let d = parse_dra(F_A).unwrap();
        assert_eq!(d.num_states(), 2);
        assert_eq!(d.pairs().len(), 1);
        assert_eq!(d.step(0, 1), 1);
        assert_eq!(d.step(0, 0), 0);
    }

    #[test]
    fn missing_edge_is_non_total() {
        let text = F_A.replace("q0 !a q0\n", "");
        assert!(matches!(
            parse_dra(&text),
            Err(DraError::NonTotalTransition { ref state, ref letter }) if state == "q0" && letter.is_empty()
        ));
    }

    #[test]
    fn pair_on_unknown_state_is_dangling() {
        let text = F_A.replace("K:{q1}", "K:{q7}");
        assert!(matches!(parse_dra(&text), Err(DraError::DanglingState(s)) if s == "q7"));
    }

    #[test]
    fn conflicting_targets_rejected() {
        let text = F_A.replace("q1 true q1\n", "q1 true q1\nq1 a q0\n");
        assert!(matches!(parse_dra(&text), Err(DraError::Format { .. })));
    }

    #[test]
    fn acceptance_examples() {
        let d = parse_dra(F_A).unwrap();
        assert!(d.accepts_lasso(&word(&[&[]], &[&["a"]])).unwrap());
        assert!(!d.accepts_lasso(&word(&[], &[&[]])).unwrap());

        let bad = "dra v1\nalphabet a\nstates q0 q1 q2\ninitial q0\nedges\nq0 true q1\nq1 true q2\nq2 true q1\npairs\n1 L:{q1} K:{q2}\n";
        let d = parse_dra(bad).unwrap();
        assert!(!d.accepts_lasso(&word(&[], &[&[]])).unwrap());
    }

    #[test]
    fn unknown_proposition_reported() {
        let d = parse_dra(F_A).unwrap();
        assert!(matches!(
            d.accepts_lasso(&word(&[], &[&["zz"]])),
            Err(DraError::Ltl(LtlError::UnknownProposition(_)))
        ));
    }

    #[test]
    fn round_trips_through_text() {
        let d = parse_dra(F_A).unwrap();
        let again = parse_dra(&d.to_text()).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn agrees_with_formula_on_small_lassos() {
        let d = parse_dra(F_A).unwrap();
        let f = parse_ltl("F a").unwrap();
        let letters: [&[&str]; 2] = [&[], &["a"]];
        for p in 0..4usize {
            for c in 1..8usize {
                let prefix: Vec<&[&str]> = (0..2).map(|i| letters[(p >> i) & 1]).collect();
                let cycle: Vec<&[&str]> = (0..3).map(|i| letters[(c >> i) & 1]).collect();
                let w = word(&prefix, &cycle);
                assert_eq!(d.accepts_lasso(&w).unwrap(), evaluate_on_lasso(&f, &w));
            }
        }
    }
}
