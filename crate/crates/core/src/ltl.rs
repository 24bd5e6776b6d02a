//! Linear temporal logic: formulas, a parser for the ASCII concrete syntax,
//! and an exact evaluator over ultimately periodic (lasso) words.
//!
//! Concrete syntax, loosest binding first:
//!
//! ```text
//! f ::= f -> f          (right associative)
//!     | f | f
//!     | f & f
//!     | f U f           (right associative)
//!     | !f | X f | F f | G f
//!     | true | false | atom | ( f )
//! ```
//!
//! `false` is read as `!true`. Atoms match `[A-Za-z_][A-Za-z0-9_]*` and may
//! not collide with the keywords `X U F G true false`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A set of atomic propositions that hold at one position of a word.
pub type PropSet = BTreeSet<String>;

/// Bit-packed proposition set over an [`Alphabet`].
pub type Letter = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown token {found:?} at byte {offset}")]
    UnknownToken { offset: usize, found: String },
    #[error("proposition {0:?} is not in the alphabet")]
    UnknownProposition(String),
    #[error("alphabet of {0} propositions exceeds the supported maximum of 16")]
    AlphabetTooLarge(usize),
    #[error("lasso cycle must contain at least one position")]
    EmptyCycle,
    #[error("invalid proposition name {0:?}")]
    InvalidName(String),
}

/// Returns true when `name` is a legal atom: `[A-Za-z_][A-Za-z0-9_]*` and
/// not a reserved keyword.
pub fn is_valid_atom(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !is_keyword(name)
}

fn is_keyword(word: &str) -> bool {
    matches!(word, "X" | "U" | "F" | "G" | "true" | "false")
}

/// Sorted, duplicate-free set of proposition names. Letters are bitmasks
/// whose bit `i` stands for the `i`-th name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Alphabet {
    props: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, LtlError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        if let Some(bad) = set.iter().find(|n| !is_valid_atom(n)) {
            return Err(LtlError::InvalidName(bad.clone()));
        }
        if set.len() > 16 {
            return Err(LtlError::AlphabetTooLarge(set.len()));
        }
        Ok(Self {
            props: set.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.props
    }

    /// Number of distinct letters, `2^|props|`.
    pub fn letter_count(&self) -> usize {
        1usize << self.props.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.props.binary_search_by(|p| p.as_str().cmp(name)).ok()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn letter<I>(&self, names: I) -> Result<Letter, LtlError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut mask = 0;
        for name in names {
            let name = name.as_ref();
            let i = self
                .index_of(name)
                .ok_or_else(|| LtlError::UnknownProposition(name.to_string()))?;
            mask |= 1 << i;
        }
        Ok(mask)
    }

    pub fn props_of(&self, letter: Letter) -> PropSet {
        self.props
            .iter()
            .enumerate()
            .filter(|(i, _)| letter & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect()
    }

    pub fn holds(&self, letter: Letter, name: &str) -> bool {
        self.index_of(name)
            .map(|i| letter & (1 << i) != 0)
            .unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ltl {
    True,
    Atom(String),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Eventually(Box<Ltl>),
    Always(Box<Ltl>),
}

impl Ltl {
    pub fn atom(name: impl Into<String>) -> Self {
        Ltl::Atom(name.into())
    }

    pub fn not(f: Ltl) -> Self {
        Ltl::Not(Box::new(f))
    }

    pub fn and(a: Ltl, b: Ltl) -> Self {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Self {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Ltl, b: Ltl) -> Self {
        Ltl::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Ltl) -> Self {
        Ltl::Next(Box::new(f))
    }

    pub fn until(a: Ltl, b: Ltl) -> Self {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Ltl) -> Self {
        Ltl::Eventually(Box::new(f))
    }

    pub fn always(f: Ltl) -> Self {
        Ltl::Always(Box::new(f))
    }

    /// Rewrites the derived operators into the core grammar:
    /// `F f = true U f`, `G f = !(true U !f)`, `a -> b = !a | b`.
    pub fn desugar(&self) -> Ltl {
        match self {
            Ltl::True | Ltl::Atom(_) => self.clone(),
            Ltl::Not(f) => Ltl::not(f.desugar()),
            Ltl::And(a, b) => Ltl::and(a.desugar(), b.desugar()),
            Ltl::Or(a, b) => Ltl::or(a.desugar(), b.desugar()),
            Ltl::Implies(a, b) => Ltl::or(Ltl::not(a.desugar()), b.desugar()),
            Ltl::Next(f) => Ltl::next(f.desugar()),
            Ltl::Until(a, b) => Ltl::until(a.desugar(), b.desugar()),
            Ltl::Eventually(f) => Ltl::until(Ltl::True, f.desugar()),
            Ltl::Always(f) => Ltl::not(Ltl::until(Ltl::True, Ltl::not(f.desugar()))),
        }
    }

    /// True when the formula has no temporal operator.
    pub fn is_propositional(&self) -> bool {
        match self {
            Ltl::True | Ltl::Atom(_) => true,
            Ltl::Not(f) => f.is_propositional(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            Ltl::Next(_) | Ltl::Until(..) | Ltl::Eventually(_) | Ltl::Always(_) => false,
        }
    }

    /// Evaluates a propositional formula on one position. Temporal operators
    /// yield `None`.
    pub fn eval_propositional(&self, holds: &dyn Fn(&str) -> bool) -> Option<bool> {
        Some(match self {
            Ltl::True => true,
            Ltl::Atom(p) => holds(p),
            Ltl::Not(f) => !f.eval_propositional(holds)?,
            Ltl::And(a, b) => a.eval_propositional(holds)? & b.eval_propositional(holds)?,
            Ltl::Or(a, b) => a.eval_propositional(holds)? | b.eval_propositional(holds)?,
            Ltl::Implies(a, b) => !a.eval_propositional(holds)? | b.eval_propositional(holds)?,
            _ => return None,
        })
    }

    /// All atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Ltl::True => {}
            Ltl::Atom(p) => {
                out.insert(p.clone());
            }
            Ltl::Not(f) | Ltl::Next(f) | Ltl::Eventually(f) | Ltl::Always(f) => {
                f.collect_atoms(out)
            }
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Ltl::True | Ltl::Atom(_) => 1,
            Ltl::Not(f) | Ltl::Next(f) | Ltl::Eventually(f) | Ltl::Always(f) => 1 + f.size(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Until(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::True => write!(f, "true"),
            Ltl::Atom(p) => write!(f, "{p}"),
            Ltl::Not(x) => write!(f, "!{x}"),
            Ltl::Next(x) => write!(f, "X {x}"),
            Ltl::Eventually(x) => write!(f, "F {x}"),
            Ltl::Always(x) => write!(f, "G {x}"),
            Ltl::And(a, b) => write!(f, "({a} & {b})"),
            Ltl::Or(a, b) => write!(f, "({a} | {b})"),
            Ltl::Implies(a, b) => write!(f, "({a} -> {b})"),
            Ltl::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Next,
    Until,
    Eventually,
    Always,
    True,
    False,
    Ident(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'!' => {
                i += 1;
                Tok::Not
            }
            b'&' => {
                i += if bytes.get(i + 1) == Some(&b'&') { 2 } else { 1 };
                Tok::And
            }
            b'|' => {
                i += if bytes.get(i + 1) == Some(&b'|') { 2 } else { 1 };
                Tok::Or
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Implies
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                match &text[start..i] {
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    word => Tok::Ident(word.to_string()),
                }
            }
            _ => {
                let found = text[start..].chars().next().map(String::from).unwrap_or_default();
                return Err(LtlError::UnknownToken {
                    offset: start,
                    found,
                });
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn error(&self, message: &str) -> LtlError {
        LtlError::Syntax {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn implies(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Ltl::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Ltl::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.until()?;
            lhs = Ltl::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.pos += 1;
            let rhs = self.until()?;
            return Ok(Ltl::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ltl, LtlError> {
        let wrap: fn(Ltl) -> Ltl = match self.peek() {
            Some(Tok::Not) => Ltl::not,
            Some(Tok::Next) => Ltl::next,
            Some(Tok::Eventually) => Ltl::eventually,
            Some(Tok::Always) => Ltl::always,
            _ => return self.primary(),
        };
        self.pos += 1;
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<Ltl, LtlError> {
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Ltl::True)
            }
            Some(Tok::False) => {
                self.pos += 1;
                Ok(Ltl::not(Ltl::True))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Ltl::Atom(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.implies()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(self.error("expected an operand")),
            None => Err(self.error("unexpected end of input, expected an operand")),
        }
    }
}

/// Parses the ASCII concrete syntax. Derived operators are kept as written;
/// call [`Ltl::desugar`] to reduce to `true`, atoms, `!`, `&`, `|`, `X`, `U`.
pub fn parse_ltl(text: &str) -> Result<Ltl, LtlError> {
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let formula = parser.implies()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

/// An ultimately periodic word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWord {
    pub prefix: Vec<PropSet>,
    pub cycle: Vec<PropSet>,
}

impl LassoWord {
    pub fn new(prefix: Vec<PropSet>, cycle: Vec<PropSet>) -> Result<Self, LtlError> {
        if cycle.is_empty() {
            return Err(LtlError::EmptyCycle);
        }
        Ok(Self { prefix, cycle })
    }

    /// Builds a word from slices of proposition names, for fixtures.
    pub fn from_names(prefix: &[&[&str]], cycle: &[&[&str]]) -> Result<Self, LtlError> {
        let conv = |xs: &[&[&str]]| -> Vec<PropSet> {
            xs.iter()
                .map(|set| set.iter().map(|s| s.to_string()).collect())
                .collect()
        };
        Self::new(conv(prefix), conv(cycle))
    }

    /// Checks every proposition against `alphabet`.
    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<(), LtlError> {
        for set in self.prefix.iter().chain(&self.cycle) {
            alphabet.letter(set)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letter at position `i` of the infinite word.
    pub fn at(&self, i: usize) -> &PropSet {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// The same infinite word with the cycle unrolled `times` times.
    pub fn unrolled(&self, times: usize) -> LassoWord {
        let mut cycle = Vec::with_capacity(self.cycle.len() * times);
        for _ in 0..times.max(1) {
            cycle.extend(self.cycle.iter().cloned());
        }
        LassoWord {
            prefix: self.prefix.clone(),
            cycle,
        }
    }

    /// The same infinite word with `k` cycle positions moved into the prefix.
    pub fn shifted(&self, k: usize) -> LassoWord {
        let mut prefix = self.prefix.clone();
        let n = self.cycle.len();
        for j in 0..k {
            prefix.push(self.cycle[j % n].clone());
        }
        let cycle = (0..n).map(|j| self.cycle[(j + k) % n].clone()).collect();
        LassoWord { prefix, cycle }
    }
}

/// Decides `w ⊨ f` exactly. Each subformula gets a truth table over the
/// `|prefix| + |cycle|` distinct positions of the lasso, where the successor
/// of the last position loops back to the start of the cycle; `U` is the
/// least and `G` the greatest fixpoint over that successor relation.
pub fn evaluate_on_lasso(f: &Ltl, w: &LassoWord) -> bool {
    let n = w.len();
    let loop_start = w.prefix.len();
    let succ = |p: usize| if p + 1 < n { p + 1 } else { loop_start };
    let table = truth_table(f, w, n, &succ);
    table[0]
}

fn truth_table(f: &Ltl, w: &LassoWord, n: usize, succ: &dyn Fn(usize) -> usize) -> Vec<bool> {
    match f {
        Ltl::True => vec![true; n],
        Ltl::Atom(p) => (0..n).map(|i| w.at(i).contains(p)).collect(),
        Ltl::Not(x) => truth_table(x, w, n, succ).into_iter().map(|b| !b).collect(),
        Ltl::And(a, b) => zip_with(truth_table(a, w, n, succ), truth_table(b, w, n, succ), |x, y| x && y),
        Ltl::Or(a, b) => zip_with(truth_table(a, w, n, succ), truth_table(b, w, n, succ), |x, y| x || y),
        Ltl::Implies(a, b) => {
            zip_with(truth_table(a, w, n, succ), truth_table(b, w, n, succ), |x, y| !x || y)
        }
        Ltl::Next(x) => {
            let t = truth_table(x, w, n, succ);
            (0..n).map(|i| t[succ(i)]).collect()
        }
        Ltl::Until(a, b) => {
            let ta = truth_table(a, w, n, succ);
            let tb = truth_table(b, w, n, succ);
            fixpoint(n, false, succ, |i, next| tb[i] || (ta[i] && next))
        }
        Ltl::Eventually(x) => {
            let t = truth_table(x, w, n, succ);
            fixpoint(n, false, succ, |i, next| t[i] || next)
        }
        Ltl::Always(x) => {
            let t = truth_table(x, w, n, succ);
            fixpoint(n, true, succ, |i, next| t[i] && next)
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Iterates `val[i] = step(i, val[succ(i)])` from `init` until stable. The
/// update is monotone, so at most `n + 1` backward sweeps are needed.
fn fixpoint(
    n: usize,
    init: bool,
    succ: &dyn Fn(usize) -> usize,
    step: impl Fn(usize, bool) -> bool,
) -> Vec<bool> {
    let mut val = vec![init; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let v = step(i, val[succ(i)]);
            if v != val[i] {
                val[i] = v;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(prefix: &[&[&str]], cycle: &[&[&str]]) -> LassoWord {
        LassoWord::from_names(prefix, cycle).unwrap()
    }

    #[test]
    fn parses_always_not() {
        let f = parse_ltl("G !obstacle").unwrap();
        assert_eq!(f, Ltl::always(Ltl::not(Ltl::atom("obstacle"))));
    }

    #[test]
    fn eventually_expands_to_true_until() {
        let f = parse_ltl("F a").unwrap();
        assert_eq!(f.desugar(), Ltl::until(Ltl::True, Ltl::atom("a")));
    }

    #[test]
    fn missing_operand_reports_offset() {
        assert_eq!(
            parse_ltl("a U"),
            Err(LtlError::Syntax {
                offset: 3,
                message: "unexpected end of input, expected an operand".into()
            })
        );
    }

    #[test]
    fn illegal_symbol_is_unknown_token() {
        assert!(matches!(
            parse_ltl("a # b"),
            Err(LtlError::UnknownToken { offset: 2, .. })
        ));
    }

    #[test]
    fn unbalanced_parens_rejected() {
        assert!(matches!(parse_ltl("(a & b"), Err(LtlError::Syntax { offset: 6, .. })));
        assert!(matches!(parse_ltl("a & b)"), Err(LtlError::Syntax { offset: 5, .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        // unary > U > & > | > ->
        let f = parse_ltl("!a U b & c | d -> e -> g").unwrap();
        let lhs = Ltl::or(
            Ltl::and(
                Ltl::until(Ltl::not(Ltl::atom("a")), Ltl::atom("b")),
                Ltl::atom("c"),
            ),
            Ltl::atom("d"),
        );
        let expected = Ltl::implies(lhs, Ltl::implies(Ltl::atom("e"), Ltl::atom("g")));
        assert_eq!(f, expected);
        let u = parse_ltl("a U b U c").unwrap();
        assert_eq!(
            u,
            Ltl::until(Ltl::atom("a"), Ltl::until(Ltl::atom("b"), Ltl::atom("c")))
        );
    }

    #[test]
    fn false_is_negated_true() {
        assert_eq!(parse_ltl("false").unwrap(), Ltl::not(Ltl::True));
    }

    #[test]
    fn lasso_examples() {
        let f = parse_ltl("F a").unwrap();
        assert!(evaluate_on_lasso(&f, &word(&[&[]], &[&["a"]])));
        let g = parse_ltl("G a").unwrap();
        assert!(!evaluate_on_lasso(&g, &word(&[&["a"]], &[&["a"], &[]])));
        let gf = parse_ltl("G F a").unwrap();
        assert!(evaluate_on_lasso(&gf, &word(&[], &[&[], &["a"]])));
    }

    #[test]
    fn next_wraps_into_cycle() {
        let f = parse_ltl("X X X a").unwrap();
        // positions: 0:{} | cycle 1:{a} 2:{}  -> position 3 is {a}
        assert!(evaluate_on_lasso(&f, &word(&[&[]], &[&["a"], &[]])));
        let g = parse_ltl("X X a").unwrap();
        assert!(!evaluate_on_lasso(&g, &word(&[&[]], &[&["a"], &[]])));
    }

    #[test]
    fn until_requires_left_operand_until_right() {
        let f = parse_ltl("a U b").unwrap();
        assert!(evaluate_on_lasso(&f, &word(&[&["a"], &["a"]], &[&["b"]])));
        assert!(!evaluate_on_lasso(&f, &word(&[&["a"], &[]], &[&["b"]])));
        assert!(!evaluate_on_lasso(&f, &word(&[], &[&["a"]])));
    }

    #[test]
    fn fg_on_cycles() {
        let fg = parse_ltl("F G a").unwrap();
        assert!(evaluate_on_lasso(&fg, &word(&[&[], &[]], &[&["a"]])));
        assert!(!evaluate_on_lasso(&fg, &word(&[], &[&["a"], &["a"], &[]])));
    }

    #[test]
    fn empty_cycle_rejected() {
        assert_eq!(LassoWord::new(vec![], vec![]), Err(LtlError::EmptyCycle));
    }

    #[test]
    fn alphabet_letters() {
        let ab = Alphabet::new(["b", "a", "c"]).unwrap();
        assert_eq!(ab.names(), &["a", "b", "c"]);
        let set: PropSet = ["c".to_string(), "a".to_string()].into_iter().collect();
        let l = ab.letter(&set).unwrap();
        assert_eq!(l, 0b101);
        assert_eq!(ab.props_of(l), set);
        let bad: PropSet = ["z".to_string()].into_iter().collect();
        assert_eq!(ab.letter(&bad), Err(LtlError::UnknownProposition("z".into())));
        assert!(Alphabet::new(["X"]).is_err());
    }

    #[test]
    fn propositional_evaluation() {
        let f = parse_ltl("a & !b -> c").unwrap();
        assert!(f.is_propositional());
        let holds = |p: &str| p == "a";
        assert_eq!(f.eval_propositional(&holds), Some(false));
        assert_eq!(parse_ltl("F a").unwrap().eval_propositional(&holds), None);
    }
}
