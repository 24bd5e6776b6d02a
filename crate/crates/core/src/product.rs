//! Synchronous product of a stochastic game with a Rabin automaton.

use rayon::prelude::*;
use thiserror::Error;

use crate::automata::Dra;
use crate::game::{GameError, MixedPolicy, Row, StochasticGame};
use crate::ltl::Letter;
use crate::scc;

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("game alphabet {game:?} differs from automaton alphabet {automaton:?}")]
    AlphabetMismatch {
        game: Vec<String>,
        automaton: Vec<String>,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Lifted Rabin pair over product states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductPair {
    pub l: Vec<bool>,
    pub k: Vec<bool>,
}

/// Product game; state `(s, q)` has index `s * |Q| + q` and name `s|q`.
#[derive(Debug, Clone)]
pub struct ProductGame {
    pub game: StochasticGame,
    pub dra: Dra,
    pub base_states: usize,
    pub pairs: Vec<ProductPair>,
    pub reachable: Vec<bool>,
}

impl ProductGame {
    pub fn num_states(&self) -> usize {
        self.game.num_states()
    }

    pub fn nq(&self) -> usize {
        self.dra.num_states()
    }

    pub fn index(&self, s: usize, q: usize) -> usize {
        s * self.nq() + q
    }

    /// `(s, q)` of a product index.
    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.nq(), i % self.nq())
    }

    /// Product state entered when the game starts in `s`.
    pub fn start_of(&self, s: usize) -> usize {
        let q = self.dra.step(self.dra.initial(), self.game.label(self.index(s, 0)));
        self.index(s, q)
    }
}

/// Builds the product. A transition `(s, q) -> (s', q')` copies the base
/// probability when `q' = δ(q, L(s'))` and is absent otherwise. The
/// automaton reads the initial label immediately, so the initial product
/// state is `(s0, δ(q0, L(s0)))`.
pub fn build_product(g: &StochasticGame, d: &Dra) -> Result<ProductGame, ProductError> {
    if g.alphabet() != d.alphabet() {
        return Err(ProductError::AlphabetMismatch {
            game: g.alphabet().names().to_vec(),
            automaton: d.alphabet().names().to_vec(),
        });
    }
    let ns = g.num_states();
    let nq = d.num_states();
    let n = ns * nq;

    let per_base: Vec<Vec<(String, Letter, Vec<String>, Vec<String>, Vec<Row>)>> = (0..ns)
        .into_par_iter()
        .map(|s| {
            let na = g.num_adv(s);
            (0..nq)
                .map(|q| {
                    let mut rows = Vec::with_capacity(g.num_ctrl(s) * na);
                    for uc in 0..g.num_ctrl(s) {
                        for ua in 0..na {
                            let mut row: Row = g
                                .row(s, uc, ua)
                                .iter()
                                .map(|&(t, p)| (t * nq + d.step(q, g.label(t)), p))
                                .collect();
                            row.sort_by_key(|&(t, _)| t);
                            rows.push(row);
                        }
                    }
                    (
                        format!("{}|{}", g.state_names()[s], d.state_names()[q]),
                        g.label(s),
                        g.ctrl_actions(s).to_vec(),
                        g.adv_actions(s).to_vec(),
                        rows,
                    )
                })
                .collect()
        })
        .collect();

    let mut names = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut ctrl = Vec::with_capacity(n);
    let mut adv = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    for (name, label, c, a, rows) in per_base.into_iter().flatten() {
        names.push(name);
        labels.push(label);
        ctrl.push(c);
        adv.push(a);
        kernel.push(rows);
    }
    let s0 = g.initial();
    let initial = s0 * nq + d.step(d.initial(), g.label(s0));
    let game = StochasticGame::new(names, g.alphabet().clone(), labels, ctrl, adv, kernel, initial)?;

    let pairs = d
        .pairs()
        .iter()
        .map(|p| ProductPair {
            l: (0..n).map(|i| p.l[i % nq]).collect(),
            k: (0..n).map(|i| p.k[i % nq]).collect(),
        })
        .collect();

    // Reachable from any possible start (s, δ(q0, L(s))) under some actions.
    let adj = support_graph(&game);
    let mut reachable = vec![false; n];
    let mut stack: Vec<usize> = (0..ns).map(|s| s * nq + d.step(d.initial(), g.label(s))).collect();
    for &v in &stack {
        reachable[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !reachable[w] {
                reachable[w] = true;
                stack.push(w);
            }
        }
    }

    Ok(ProductGame {
        game,
        dra: d.clone(),
        base_states: ns,
        pairs,
        reachable,
    })
}

/// Successors under any joint action.
pub fn support_graph(g: &StochasticGame) -> Vec<Vec<usize>> {
    (0..g.num_states())
        .map(|s| {
            let mut succ: Vec<usize> = (0..g.num_ctrl(s))
                .flat_map(|uc| (0..g.num_adv(s)).flat_map(move |ua| g.row(s, uc, ua).iter().map(|&(t, _)| t)))
                .collect();
            succ.sort_unstable();
            succ.dedup();
            succ
        })
        .collect()
}

/// States that can reach `target` under some joint actions.
pub fn can_reach_any(g: &StochasticGame, target: &[bool]) -> Vec<bool> {
    scc::can_reach(&support_graph(g), target)
}

/// Game-level executor of a product policy. It tracks the automaton state
/// and emits the product policy's distribution at `(s, q)`.
#[derive(Debug, Clone)]
pub struct ExecutablePolicy<'a> {
    product: &'a ProductGame,
    policy: &'a MixedPolicy,
    modes: Option<&'a [Mode]>,
    q: usize,
    s: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Reach,
    Cycle,
}

impl<'a> ExecutablePolicy<'a> {
    /// Distribution for the first observed state `s`.
    pub fn start(&mut self, s: usize) -> &'a [f64] {
        self.s = s;
        self.q = self
            .product
            .dra
            .step(self.product.dra.initial(), self.product.game.label(self.product.index(s, 0)));
        &self.policy.dist[self.product.index(s, self.q)]
    }

    /// Advances `q ← δ(q, L(s'))` and returns the distribution at `(s', q)`.
    pub fn observe(&mut self, s_next: usize) -> &'a [f64] {
        let label = self.product.game.label(self.product.index(s_next, 0));
        self.q = self.product.dra.step(self.q, label);
        self.s = s_next;
        &self.policy.dist[self.product.index(s_next, self.q)]
    }

    pub fn automaton_state(&self) -> usize {
        self.q
    }

    pub fn mode(&self) -> Option<Mode> {
        self.modes.map(|m| m[self.product.index(self.s, self.q)])
    }
}

pub fn lift_policy<'a>(p: &'a ProductGame, mu: &'a MixedPolicy) -> ExecutablePolicy<'a> {
    lift_policy_with_modes(p, mu, None)
}

pub fn lift_policy_with_modes<'a>(
    p: &'a ProductGame,
    mu: &'a MixedPolicy,
    modes: Option<&'a [Mode]>,
) -> ExecutablePolicy<'a> {
    ExecutablePolicy {
        product: p,
        policy: mu,
        modes,
        q: p.dra.initial(),
        s: p.game.initial() / p.nq(),
    }
}
