//! Average cost per cycle inside an accepting end component.
//!
//! A cycle is completed at every visit to the cycle set `Q = K(z) ∩ C`.
//! For a policy pair with chain `P = P_in + P_out` (columns in and out of
//! `Q`), the gain `J`, bias `h` and auxiliary `v` satisfy
//!
//! ```text
//! J = P J
//! J + h = g + P h + P_out J
//! P v = (I − P_out) h + v
//! ```

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{MixedPolicy, Owner, StochasticGame};
use crate::gamec::Gamec;
use crate::ltl::Ltl;
use crate::matrix_game::{solve_min_max, MatrixGame, MatrixGameError};
use crate::product::ProductPair;
use crate::scc;

#[derive(Debug, Error)]
pub enum AcpcError {
    #[error("invariant must have the form G(propositional formula)")]
    NotInvariantForm,
    #[error("violation cost must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("policy pair is improper: {0}")]
    ImproperPolicy(String),
    #[error("gain-bias system is singular")]
    SingularSystem,
    #[error("policy iteration stopped after {0} rounds without converging")]
    IterationCap(usize),
    #[error("component is empty or inconsistent: {0}")]
    InvalidComponent(String),
    #[error(transparent)]
    Matrix(#[from] MatrixGameError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostAssignment {
    pub alpha: f64,
    /// `g(s) = α` if the label of `s` violates the invariant, else 0.
    pub g: Vec<f64>,
}

/// Body of an invariant `G body` with `body` propositional.
pub fn invariant_body(psi: &Ltl) -> Result<&Ltl, AcpcError> {
    match psi {
        Ltl::Always(body) if body.is_propositional() => Ok(body),
        _ => Err(AcpcError::NotInvariantForm),
    }
}

pub fn assign_costs(g: &StochasticGame, psi: &Ltl, alpha: f64) -> Result<CostAssignment, AcpcError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(AcpcError::InvalidAlpha(alpha));
    }
    let body = invariant_body(psi)?;
    let ab = g.alphabet();
    let costs = (0..g.num_states())
        .map(|s| {
            let letter = g.label(s);
            let ok = body
                .eval_propositional(&|p| ab.holds(letter, p))
                .unwrap_or(false);
            if ok {
                0.0
            } else {
                alpha
            }
        })
        .collect();
    Ok(CostAssignment { alpha, g: costs })
}

/// An end component with its enabled actions and cycle set, indexed
/// locally `0..m`.
#[derive(Debug, Clone)]
pub struct SubGame<'a> {
    pub game: &'a StochasticGame,
    pub states: Vec<usize>,
    pub enabled: Vec<Vec<usize>>,
    pub cycle: Vec<bool>,
    local: Vec<usize>,
}

/// Controller or adversary distributions over local states.
pub type LocalPolicy = Vec<Vec<f64>>;

impl<'a> SubGame<'a> {
    pub fn new(
        game: &'a StochasticGame,
        states: Vec<usize>,
        enabled: Vec<Vec<usize>>,
        cycle_global: &[bool],
    ) -> Result<Self, AcpcError> {
        if states.is_empty() || states.len() != enabled.len() {
            return Err(AcpcError::InvalidComponent("no states".into()));
        }
        let mut local = vec![usize::MAX; game.num_states()];
        for (i, &s) in states.iter().enumerate() {
            local[s] = i;
        }
        for (i, &s) in states.iter().enumerate() {
            if enabled[i].is_empty() {
                return Err(AcpcError::InvalidComponent(format!("no enabled action at {s}")));
            }
            for &uc in &enabled[i] {
                for ua in 0..game.num_adv(s) {
                    if game.row(s, uc, ua).iter().any(|&(t, _)| local[t] == usize::MAX) {
                        return Err(AcpcError::InvalidComponent(format!("action {uc} leaves the component at {s}")));
                    }
                }
            }
        }
        let cycle: Vec<bool> = states.iter().map(|&s| cycle_global[s]).collect();
        if !cycle.iter().any(|&c| c) {
            return Err(AcpcError::InvalidComponent("empty cycle set".into()));
        }
        Ok(Self {
            game,
            states,
            enabled,
            cycle,
            local,
        })
    }

    /// Cycle set `K_G(z) ∩ C_h` for the witnessing pair `z`.
    pub fn from_gamec(game: &'a StochasticGame, c: &Gamec, pairs: &[ProductPair]) -> Result<Self, AcpcError> {
        Self::new(game, c.states.clone(), c.enabled.clone(), &pairs[c.pair].k)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn local_index(&self, s: usize) -> Option<usize> {
        self.local.get(s).copied().filter(|&i| i != usize::MAX)
    }

    pub fn uniform_controller(&self) -> LocalPolicy {
        self.enabled
            .iter()
            .map(|e| vec![1.0 / e.len() as f64; e.len()])
            .collect()
    }

    pub fn uniform_adversary(&self) -> LocalPolicy {
        self.states
            .iter()
            .map(|&s| vec![1.0 / self.game.num_adv(s) as f64; self.game.num_adv(s)])
            .collect()
    }

    /// Local costs.
    pub fn costs(&self, cost: &CostAssignment) -> Vec<f64> {
        self.states.iter().map(|&s| cost.g[s]).collect()
    }

    /// Sparse local rows of `P` under `(mu, tau)`.
    pub fn chain(&self, mu: &LocalPolicy, tau: &LocalPolicy) -> Vec<Vec<(usize, f64)>> {
        let m = self.len();
        let mut acc = vec![0.0; m];
        let mut touched = Vec::new();
        (0..m)
            .map(|i| {
                let s = self.states[i];
                for (k, &uc) in self.enabled[i].iter().enumerate() {
                    let pc = mu[i][k];
                    if pc == 0.0 {
                        continue;
                    }
                    for (ua, &pa) in tau[i].iter().enumerate() {
                        let w = pc * pa;
                        if w == 0.0 {
                            continue;
                        }
                        for &(t, p) in self.game.row(s, uc, ua) {
                            let j = self.local[t];
                            if acc[j] == 0.0 {
                                touched.push(j);
                            }
                            acc[j] += w * p;
                        }
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                let row: Vec<(usize, f64)> = touched
                    .iter()
                    .map(|&j| (j, acc[j]))
                    .filter(|&(_, p)| p > 0.0)
                    .collect();
                for &j in &touched {
                    acc[j] = 0.0;
                }
                touched.clear();
                row
            })
            .collect()
    }

    /// Expands a local controller policy to the whole game, uniform over
    /// all actions outside the component.
    pub fn embed_controller(&self, mu: &LocalPolicy) -> MixedPolicy {
        let g = self.game;
        let dist = (0..g.num_states())
            .map(|s| match self.local_index(s) {
                Some(i) => {
                    let mut row = vec![0.0; g.num_ctrl(s)];
                    for (k, &uc) in self.enabled[i].iter().enumerate() {
                        row[uc] = mu[i][k];
                    }
                    row
                }
                None => vec![1.0 / g.num_ctrl(s) as f64; g.num_ctrl(s)],
            })
            .collect();
        MixedPolicy {
            owner: Owner::Controller,
            dist,
        }
    }

    /// Restricts a game-wide controller policy to the enabled actions,
    /// renormalizing; states with no mass on enabled actions become uniform.
    pub fn restrict_controller(&self, mu: &MixedPolicy) -> LocalPolicy {
        self.states
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut row: Vec<f64> = self.enabled[i].iter().map(|&uc| mu.dist[s][uc]).collect();
                let sum: f64 = row.iter().sum();
                if sum > 0.0 {
                    row.iter_mut().for_each(|x| *x /= sum);
                } else {
                    let u = 1.0 / row.len() as f64;
                    row.iter_mut().for_each(|x| *x = u);
                }
                row
            })
            .collect()
    }

    pub fn restrict_adversary(&self, tau: &MixedPolicy) -> LocalPolicy {
        self.states.iter().map(|&s| tau.dist[s].clone()).collect()
    }
}

/// First-passage quantities for the cycle chain `P̂` at a reference state
/// `r ∈ Q`: `o(s)` expected cycles and `ξ(s)` expected cost until the
/// next visit to `r`, with `ζ = ξ(r) / o(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassage {
    pub reference: usize,
    pub xi: Vec<f64>,
    pub o: Vec<f64>,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainBias {
    pub j: Vec<f64>,
    pub h: Vec<f64>,
    pub v: Vec<f64>,
    /// One anchor per recurrent class, where `v` is pinned to 0.
    pub anchors: Vec<usize>,
    /// Gain of each recurrent class, aligned with `anchors`.
    pub class_gains: Vec<f64>,
    /// True when the chain has a single recurrent class.
    pub unichain: bool,
    /// Sup-norm residuals of the three identities.
    pub residuals: [f64; 3],
    /// `P̂ = (I − P_out)⁻¹ P_in` row sums minus one, worst case.
    pub p_hat_row_error: f64,
    pub g_hat: Vec<f64>,
    pub first_passage: Option<FirstPassage>,
}

impl GainBias {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// How the gain-bias system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// The full `3m × 3m` system with anchor pins, by pivoted LU.
    Full,
    /// Block elimination through `P̂` and `ĝ`; same solution, cheaper.
    Reduced,
    /// `Full` up to 150 states, `Reduced` above.
    Auto,
}

/// Sparse-row chain with `split.0[i] = P_in`, `split.1[i] = P_out` rows.
fn dense(rows: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let m = rows.len();
    let mut p = DMatrix::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        for &(j, x) in row {
            p[(i, j)] = x;
        }
    }
    p
}

/// In/out split of a chain with respect to the cycle set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSplit {
    pub p_in: DMatrix<f64>,
    pub p_out: DMatrix<f64>,
}

impl KernelSplit {
    pub fn new(p: &DMatrix<f64>, cycle: &[bool]) -> Self {
        let mut p_in = p.clone();
        let mut p_out = p.clone();
        for (j, &c) in cycle.iter().enumerate() {
            if c {
                p_out.column_mut(j).fill(0.0);
            } else {
                p_in.column_mut(j).fill(0.0);
            }
        }
        Self { p_in, p_out }
    }

    /// `(P̂, ĝ)` with `P̂ = (I − P_out)⁻¹ P_in` and `ĝ = (I − P_out)⁻¹ g`.
    pub fn hat(&self, g: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>), AcpcError> {
        let m = self.p_out.nrows();
        let a = DMatrix::identity(m, m) - &self.p_out;
        let lu = a.lu();
        let p_hat = lu.solve(&self.p_in).ok_or(AcpcError::SingularSystem)?;
        let g_hat = lu
            .solve(&DVector::from_column_slice(g))
            .ok_or(AcpcError::SingularSystem)?;
        Ok((p_hat, g_hat))
    }
}

/// Recurrent classes (bottom components) and properness checks.
fn structure(rows: &[Vec<(usize, f64)>], cycle: &[bool]) -> Result<Vec<Vec<usize>>, AcpcError> {
    let adj: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().map(|&(j, _)| j).collect()).collect();
    let reach = scc::can_reach(&adj, cycle);
    if let Some(s) = reach.iter().position(|&r| !r) {
        return Err(AcpcError::ImproperPolicy(format!("local state {s} never reaches the cycle set")));
    }
    // Every state leaks into the cycle set, so ρ(P_out) < 1.
    Ok(scc::bottom_components(&adj))
}

fn residuals(p: &DMatrix<f64>, split: &KernelSplit, g: &[f64], j: &DVector<f64>, h: &DVector<f64>, v: &DVector<f64>) -> [f64; 3] {
    let m = p.nrows();
    let gv = DVector::from_column_slice(g);
    let r1 = j - p * j;
    let r2 = j + h - &gv - p * h - &split.p_out * j;
    let r3 = p * v - (DMatrix::identity(m, m) - &split.p_out) * h - v;
    [r1.amax(), r2.amax(), r3.amax()]
}

/// Solves the gain-bias system of a chain given as sparse rows.
pub fn evaluate_chain(
    rows: &[Vec<(usize, f64)>],
    g: &[f64],
    cycle: &[bool],
    solver: Solver,
) -> Result<GainBias, AcpcError> {
    let m = rows.len();
    let classes = structure(rows, cycle)?;
    let anchors: Vec<usize> = classes
        .iter()
        .map(|c| {
            c.iter()
                .copied()
                .find(|&s| cycle[s])
                .ok_or_else(|| AcpcError::ImproperPolicy("recurrent class avoids the cycle set".into()))
        })
        .collect::<Result<_, _>>()?;
    let p = dense(rows);
    let split = KernelSplit::new(&p, cycle);
    let (p_hat, g_hat) = split.hat(g)?;
    let p_hat_row_error = (0..m)
        .map(|i| (p_hat.row(i).sum() - 1.0).abs())
        .fold(0.0, f64::max);

    let use_full = match solver {
        Solver::Full => true,
        Solver::Reduced => false,
        Solver::Auto => m <= 150,
    };
    let (j, h, v) = if use_full {
        solve_full(&p, &split, g, cycle, &anchors)?
    } else {
        solve_reduced(&p_hat, &g_hat, cycle, &classes, &anchors)?
    };
    let res = residuals(&p, &split, g, &j, &h, &v);
    let class_gains = anchors.iter().map(|&a| j[a]).collect();
    let first_passage = (classes.len() == 1).then(|| first_passage(&p_hat, &g_hat, anchors[0]));
    Ok(GainBias {
        j: j.as_slice().to_vec(),
        h: h.as_slice().to_vec(),
        v: v.as_slice().to_vec(),
        anchors,
        class_gains,
        unichain: classes.len() == 1,
        residuals: res,
        p_hat_row_error,
        g_hat: g_hat.as_slice().to_vec(),
        first_passage,
    })
}

type Triple = (DVector<f64>, DVector<f64>, DVector<f64>);

/// Unknowns `[J, h, v]`; the `J = P J` row at each anchor is replaced by
/// the pin `v(anchor) = 0`.
fn solve_full(
    p: &DMatrix<f64>,
    split: &KernelSplit,
    g: &[f64],
    cycle: &[bool],
    anchors: &[usize],
) -> Result<Triple, AcpcError> {
    let m = p.nrows();
    let mut a = DMatrix::<f64>::zeros(3 * m, 3 * m);
    let mut b = DVector::<f64>::zeros(3 * m);
    for s in 0..m {
        // J − P J = 0
        a[(s, s)] += 1.0;
        for t in 0..m {
            a[(s, t)] -= p[(s, t)];
        }
        // J + h − P h − P_out J = g
        let r = m + s;
        a[(r, s)] += 1.0;
        a[(r, m + s)] += 1.0;
        for t in 0..m {
            a[(r, m + t)] -= p[(s, t)];
            if !cycle[t] {
                a[(r, t)] -= p[(s, t)];
            }
        }
        b[r] = g[s];
        // P v − v − (I − P_out) h = 0
        let r = 2 * m + s;
        a[(r, 2 * m + s)] -= 1.0;
        a[(r, m + s)] -= 1.0;
        for t in 0..m {
            a[(r, 2 * m + t)] += p[(s, t)];
            a[(r, m + t)] += split.p_out[(s, t)];
        }
    }
    for &an in anchors {
        a.row_mut(an).fill(0.0);
        a[(an, 2 * m + an)] = 1.0;
        b[an] = 0.0;
    }
    let x = a.lu().solve(&b).ok_or(AcpcError::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AcpcError::SingularSystem);
    }
    Ok((
        x.rows(0, m).into_owned(),
        x.rows(m, m).into_owned(),
        x.rows(2 * m, m).into_owned(),
    ))
}

/// Solves `(I − R) x = rhs` on the cycle states with `x(anchor) = 0`
/// replacing the anchor rows. `R = P̂` restricted to `Q × Q`.
fn pinned_solve(r: &DMatrix<f64>, rhs: &DVector<f64>, anchors: &[usize]) -> Result<DVector<f64>, AcpcError> {
    let k = r.nrows();
    let mut a = DMatrix::identity(k, k) - r;
    let mut b = rhs.clone();
    for &an in anchors {
        a.row_mut(an).fill(0.0);
        a[(an, an)] = 1.0;
        b[an] = 0.0;
    }
    a.lu().solve(&b).ok_or(AcpcError::SingularSystem)
}

fn solve_reduced(
    p_hat: &DMatrix<f64>,
    g_hat: &DVector<f64>,
    cycle: &[bool],
    classes: &[Vec<usize>],
    anchors: &[usize],
) -> Result<Triple, AcpcError> {
    let m = p_hat.nrows();
    let qs: Vec<usize> = (0..m).filter(|&s| cycle[s]).collect();
    let k = qs.len();
    let mut qi = vec![usize::MAX; m];
    for (i, &s) in qs.iter().enumerate() {
        qi[s] = i;
    }
    let r = DMatrix::from_fn(k, k, |a, b| p_hat[(qs[a], qs[b])]);
    let gq = DVector::from_fn(k, |a, _| g_hat[qs[a]]);
    let anchors_q: Vec<usize> = anchors.iter().map(|&a| qi[a]).collect();
    let mut class_of = vec![usize::MAX; k];
    for (c, cls) in classes.iter().enumerate() {
        for &s in cls {
            if cycle[s] {
                class_of[qi[s]] = c;
            }
        }
    }

    // Stationary distribution of each class of R.
    let mut pis: Vec<DVector<f64>> = Vec::new();
    for (c, &an) in anchors_q.iter().enumerate() {
        let members: Vec<usize> = (0..k).filter(|&i| class_of[i] == c).collect();
        let n = members.len();
        // πᵀ (I − R_cc) = 0 with Σπ = 1 replacing the anchor column.
        let mut a = DMatrix::zeros(n, n);
        for (x, &i) in members.iter().enumerate() {
            for (y, &jj) in members.iter().enumerate() {
                a[(y, x)] = if i == jj { 1.0 } else { 0.0 } - r[(i, jj)];
            }
        }
        let pos = members.iter().position(|&i| i == an).unwrap_or(0);
        a.row_mut(pos).fill(1.0);
        let mut b = DVector::zeros(n);
        b[pos] = 1.0;
        let pi_local = a.lu().solve(&b).ok_or(AcpcError::SingularSystem)?;
        let mut pi = DVector::zeros(k);
        for (x, &i) in members.iter().enumerate() {
            pi[i] = pi_local[x];
        }
        pis.push(pi);
    }

    // Gain: ζ_c on class c, J = R J on transient cycle states.
    let zetas: Vec<f64> = pis.iter().map(|pi| pi.dot(&gq)).collect();
    let mut aj = DMatrix::identity(k, k) - &r;
    let mut bj = DVector::zeros(k);
    for i in 0..k {
        if class_of[i] != usize::MAX {
            aj.row_mut(i).fill(0.0);
            aj[(i, i)] = 1.0;
            bj[i] = zetas[class_of[i]];
        }
    }
    let jq = aj.lu().solve(&bj).ok_or(AcpcError::SingularSystem)?;

    // Bias: (I − R) h = ĝ − J with π_c h = 0 replacing the anchor rows.
    let mut ah = DMatrix::identity(k, k) - &r;
    let mut bh = &gq - &jq;
    for (c, &an) in anchors_q.iter().enumerate() {
        ah.row_mut(an).copy_from(&pis[c].transpose());
        bh[an] = 0.0;
    }
    let hq = ah.lu().solve(&bh).ok_or(AcpcError::SingularSystem)?;

    // Auxiliary: (I − R) v = −h with v(anchor) = 0.
    let vq = pinned_solve(&r, &(-&hq), &anchors_q)?;

    // Extend to all states through P̂, whose columns live on Q.
    let p_hat_q = DMatrix::from_fn(m, k, |a, b| p_hat[(a, qs[b])]);
    let j_all = &p_hat_q * &jq;
    let h_all = g_hat - &j_all + &p_hat_q * &hq;
    let v_all = &p_hat_q * &vq - &h_all;
    let mut j = j_all;
    let mut h = h_all;
    let mut v = v_all;
    for (i, &s) in qs.iter().enumerate() {
        j[s] = jq[i];
        h[s] = hq[i];
        v[s] = vq[i];
    }
    Ok((j, h, v))
}

fn first_passage(p_hat: &DMatrix<f64>, g_hat: &DVector<f64>, reference: usize) -> FirstPassage {
    let m = p_hat.nrows();
    // x(s) = c(s) + Σ_{t ≠ r} P̂(s, t) x(t)
    let mut a = DMatrix::identity(m, m);
    for s in 0..m {
        for t in 0..m {
            if t != reference {
                a[(s, t)] -= p_hat[(s, t)];
            }
        }
    }
    let lu = a.lu();
    let o = lu
        .solve(&DVector::from_element(m, 1.0))
        .map(|x| x.as_slice().to_vec())
        .unwrap_or_else(|| vec![f64::NAN; m]);
    let xi = lu
        .solve(g_hat)
        .map(|x| x.as_slice().to_vec())
        .unwrap_or_else(|| vec![f64::NAN; m]);
    let zeta = xi[reference] / o[reference];
    FirstPassage {
        reference,
        xi,
        o,
        zeta,
    }
}

/// Gain-bias evaluation of `(mu, tau)` on the component.
pub fn evaluate_gain_bias(
    sub: &SubGame<'_>,
    mu: &LocalPolicy,
    tau: &LocalPolicy,
    cost: &CostAssignment,
    solver: Solver,
) -> Result<GainBias, AcpcError> {
    let rows = sub.chain(mu, tau);
    evaluate_chain(&rows, &sub.costs(cost), &sub.cycle, solver)
}

/// `M[uc][ua] = g(s) + Σ Pr h + Σ_{s' ∉ Q} Pr J` at local state `i`, rows
/// over the enabled actions.
pub fn improvement_matrix(sub: &SubGame<'_>, i: usize, gb: &GainBias, cost: &CostAssignment) -> MatrixGame {
    let s = sub.states[i];
    let g = sub.game;
    let na = g.num_adv(s);
    let mut a = Vec::with_capacity(sub.enabled[i].len() * na);
    for &uc in &sub.enabled[i] {
        for ua in 0..na {
            let mut x = cost.g[s];
            for &(t, p) in g.row(s, uc, ua) {
                let jl = sub.local[t];
                x += p * gb.h[jl];
                if !sub.cycle[jl] {
                    x += p * gb.j[jl];
                }
            }
            a.push(x);
        }
    }
    MatrixGame::from_flat(sub.enabled[i].len(), na, a).expect("finite payoff")
}

/// Per-state min-max improvement. Returns the new controller policy and
/// `T*(J, h)`.
pub fn improve_policy(
    sub: &SubGame<'_>,
    gb: &GainBias,
    cost: &CostAssignment,
) -> Result<(LocalPolicy, Vec<f64>), AcpcError> {
    let out: Vec<(Vec<f64>, f64)> = (0..sub.len())
        .into_par_iter()
        .map(|i| {
            let sol = solve_min_max(&improvement_matrix(sub, i, gb, cost))?;
            Ok((sol.row_strategy, sol.value))
        })
        .collect::<Result<_, AcpcError>>()?;
    Ok(out.into_iter().unzip())
}

/// `T_μ(J, h)` and the maximizing pure adversary action per state.
/// Relative margin an adversary action must win by before the response
/// switches.
const SWITCH_TOL: f64 = 1e-7;

fn adversary_step(
    sub: &SubGame<'_>,
    mu: &LocalPolicy,
    gb: &GainBias,
    cost: &CostAssignment,
    current: &[usize],
) -> (Vec<usize>, Vec<f64>) {
    (0..sub.len())
        .map(|i| {
            let m = improvement_matrix(sub, i, gb, cost);
            let na = m.cols();
            let val = |ua: usize| (0..m.rows()).map(|r| mu[i][r] * m.get(r, ua)).sum::<f64>();
            let gain = |ua: usize| {
                let s = sub.states[i];
                (0..m.rows())
                    .map(|r| {
                        let uc = sub.enabled[i][r];
                        mu[i][r]
                            * sub
                                .game
                                .row(s, uc, ua)
                                .iter()
                                .map(|&(t, p)| p * gb.j[sub.local[t]])
                                .sum::<f64>()
                    })
                    .sum::<f64>()
            };
            let gains: Vec<f64> = (0..na).map(gain).collect();
            let gmax = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let gtol = SWITCH_TOL * (1.0 + gmax.abs());
            let cur = current[i];
            let mut best = cur;
            if gains[cur] < gmax - gtol {
                best = (0..na).filter(|&ua| gains[ua] >= gmax - gtol).fold(usize::MAX, |b, ua| {
                    if b == usize::MAX || val(ua) > val(b) { ua } else { b }
                });
            } else {
                let mut bv = val(cur);
                for ua in 0..na {
                    if gains[ua] >= gmax - gtol && val(ua) > bv + SWITCH_TOL * (1.0 + bv.abs()) {
                        best = ua;
                        bv = val(ua);
                    }
                }
            }
            let bv = val(best);
            (best, bv)
        })
        .unzip()
}

fn pure_local(sub: &SubGame<'_>, choice: &[usize]) -> LocalPolicy {
    sub.states
        .iter()
        .zip(choice)
        .map(|(&s, &c)| {
            let mut row = vec![0.0; sub.game.num_adv(s)];
            row[c] = 1.0;
            row
        })
        .collect()
}

/// The adversary's cost-maximizing response to `mu`, by policy iteration
/// on `T_μ`. Requires `mu` to be trap-free.
pub fn adversary_best_response(
    sub: &SubGame<'_>,
    mu: &LocalPolicy,
    cost: &CostAssignment,
    solver: Solver,
) -> Result<(LocalPolicy, GainBias), AcpcError> {
    let (tau, gb, _) = adversary_response_from(sub, mu, cost, solver, vec![0; sub.len()], RESPONSE_ROUNDS, f64::INFINITY)?
        .expect("no cutoff");
    Ok((tau, gb))
}

/// Maximum policy-iteration rounds of the adversary response.
pub const RESPONSE_ROUNDS: usize = 1000;

/// Response rounds granted to a candidate during the line search; a
/// candidate whose response does not settle is rejected.
pub const SEARCH_RESPONSE_ROUNDS: usize = 100;

type Response = (LocalPolicy, GainBias, Vec<usize>);

/// [`adversary_best_response`] started from the pure choice `choice`; also
/// returns the final choice. Returns `None` as soon as some adversary
/// policy reaches a gain above `cutoff`, since the best response can only
/// be worse for the controller.
fn adversary_response_from(
    sub: &SubGame<'_>,
    mu: &LocalPolicy,
    cost: &CostAssignment,
    solver: Solver,
    mut choice: Vec<usize>,
    rounds: usize,
    cutoff: f64,
) -> Result<Option<Response>, AcpcError> {
    let mut tau = pure_local(sub, &choice);
    let mut gb = evaluate_gain_bias(sub, mu, &tau, cost, solver)?;
    for _ in 0..rounds {
        if gain_of(&gb) > cutoff {
            return Ok(None);
        }
        let (next, _) = adversary_step(sub, mu, &gb, cost, &choice);
        if next == choice {
            return Ok(Some((tau, gb, choice)));
        }
        choice = next;
        tau = pure_local(sub, &choice);
        gb = evaluate_gain_bias(sub, mu, &tau, cost, solver)?;
    }
    Err(AcpcError::IterationCap(rounds))
}

/// Local states where the adversary can keep the play away from the cycle
/// set forever when the controller plays `mu`.
pub fn trap_states(sub: &SubGame<'_>, mu: &LocalPolicy) -> Vec<bool> {
    let m = sub.len();
    let mut z: Vec<bool> = sub.cycle.iter().map(|&c| !c).collect();
    loop {
        let mut changed = false;
        for i in 0..m {
            if !z[i] {
                continue;
            }
            let s = sub.states[i];
            let stays = (0..sub.game.num_adv(s)).any(|ua| {
                sub.enabled[i].iter().enumerate().all(|(k, &uc)| {
                    mu[i][k] == 0.0 || sub.game.row(s, uc, ua).iter().all(|&(t, _)| z[sub.local[t]])
                })
            });
            if !stays {
                z[i] = false;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

/// Mixing weight of the uniform policy used to break adversary traps.
pub const TRAP_MIX: f64 = 1e-3;

/// Mixes `TRAP_MIX` of the uniform policy into trap states until none
/// remain. Returns the number of states touched.
pub fn repair_traps(sub: &SubGame<'_>, mu: &mut LocalPolicy) -> usize {
    let mut touched = vec![false; sub.len()];
    loop {
        let z = trap_states(sub, mu);
        let fresh: Vec<usize> = (0..sub.len()).filter(|&i| z[i] && !touched[i]).collect();
        if fresh.is_empty() {
            return touched.iter().filter(|&&t| t).count();
        }
        for i in fresh {
            touched[i] = true;
            let k = mu[i].len() as f64;
            for x in mu[i].iter_mut() {
                *x = (1.0 - TRAP_MIX) * *x + TRAP_MIX / k;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AcpcResult {
    pub mu: LocalPolicy,
    pub tau: LocalPolicy,
    pub gain_bias: GainBias,
    /// Gain vector after each evaluation.
    pub trace: Vec<Vec<f64>>,
    /// `sup |J + h − T*(J, h)|` at termination.
    pub optimality_residual: f64,
    pub rounds: usize,
    pub repairs: usize,
}

impl AcpcResult {
    /// Largest gain over the component.
    pub fn gain(&self) -> f64 {
        self.gain_bias.j.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PiOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub solver: Solver,
}

impl Default for PiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_rounds: 10_000,
            solver: Solver::Auto,
        }
    }
}

/// Sweep cap for [`progress_policy`].
pub const PROGRESS_SWEEPS: usize = 20_000;

/// Controller policy minimizing the worst-case expected number of steps to
/// the next visit of the cycle set, by value iteration on
/// `T(s) = min_μ max_{u_A} (1 + Σ_{s' ∉ Q} Pr T(s'))`. Returns the policy and
/// the step counts.
pub fn progress_policy(sub: &SubGame<'_>) -> Result<(LocalPolicy, Vec<f64>), AcpcError> {
    let g = sub.game;
    let matrix = |i: usize, t: &[f64]| {
        let s = sub.states[i];
        let na = g.num_adv(s);
        let mut a = Vec::with_capacity(sub.enabled[i].len() * na);
        for &uc in &sub.enabled[i] {
            for ua in 0..na {
                let mut x = 1.0;
                for &(k, p) in g.row(s, uc, ua) {
                    let l = sub.local[k];
                    if !sub.cycle[l] {
                        x += p * t[l];
                    }
                }
                a.push(x);
            }
        }
        MatrixGame::from_flat(sub.enabled[i].len(), na, a).expect("finite payoff")
    };
    let mut t = vec![0.0; sub.len()];
    for _ in 0..PROGRESS_SWEEPS {
        let next: Vec<f64> = (0..sub.len())
            .into_par_iter()
            .map(|i| solve_min_max(&matrix(i, &t)).map(|sol| sol.value))
            .collect::<Result<_, _>>()?;
        let change = next
            .iter()
            .zip(&t)
            .map(|(a, b)| (a - b).abs() / a.max(1.0))
            .fold(0.0, f64::max);
        t = next;
        if change <= 1e-10 {
            break;
        }
    }
    let mu = (0..sub.len())
        .into_par_iter()
        .map(|i| solve_min_max(&matrix(i, &t)).map(|sol| sol.row_strategy))
        .collect::<Result<_, _>>()?;
    Ok((mu, t))
}

/// Consecutive accepted rounds without a gain decrease after which policy
/// iteration stops.
pub const FLAT_ROUNDS: usize = 5;

/// Step sizes tried when an improvement step raises the gain.
pub const LINE_SEARCH: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];

fn mix(a: &LocalPolicy, b: &LocalPolicy, step: f64) -> LocalPolicy {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (1.0 - step) * p + step * q).collect())
        .collect()
}

fn gain_of(gb: &GainBias) -> f64 {
    gb.j.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Min-max policy iteration on the component. Starts from `mu0`, or the
/// uniform policy over the enabled actions, falling back to `fallback` if
/// the start admits an adversary trap.
///
/// Each round evaluates the controller against its best response and takes
/// the min-max improvement. A step that would raise the worst gain is
/// shortened along the segment to the improved policy; if no tried step
/// keeps the gain, iteration stops at the current policy. It also stops
/// after [`FLAT_ROUNDS`] rounds in a row that leave the worst gain unchanged.
pub fn policy_iteration(
    sub: &SubGame<'_>,
    cost: &CostAssignment,
    mu0: Option<LocalPolicy>,
    fallback: Option<LocalPolicy>,
    opts: &PiOptions,
) -> Result<AcpcResult, AcpcError> {
    let mut mu = mu0.unwrap_or_else(|| sub.uniform_controller());
    if trap_states(sub, &mu).iter().any(|&t| t) {
        if let Some(f) = fallback {
            mu = f;
        }
    }
    let mut repairs = repair_traps(sub, &mut mu);
    let (mut tau, mut gb, mut choice) =
        adversary_response_from(sub, &mu, cost, opts.solver, vec![0; sub.len()], RESPONSE_ROUNDS, f64::INFINITY)?
            .expect("no cutoff");
    let mut trace = vec![gb.j.clone()];
    let mut prev_t: Option<Vec<f64>> = None;
    let mut flat = 0;
    for round in 1..=opts.max_rounds {
        let (next, t_star) = improve_policy(sub, &gb, cost)?;
        let opt_res = (0..sub.len())
            .map(|i| (gb.j[i] + gb.h[i] - t_star[i]).abs())
            .fold(0.0, f64::max);
        let stalled = prev_t
            .as_ref()
            .map(|p| p.iter().zip(&t_star).all(|(a, b)| (a - b).abs() <= opts.tol))
            .unwrap_or(false);
        let done = |mu, tau, gb, trace| AcpcResult {
            mu,
            tau,
            gain_bias: gb,
            trace,
            optimality_residual: opt_res,
            rounds: round,
            repairs,
        };
        if opt_res <= opts.tol || stalled || flat >= FLAT_ROUNDS {
            return Ok(done(mu, tau, gb, trace));
        }
        prev_t = Some(t_star);
        let current = gain_of(&gb);
        let mut accepted = None;
        for &step in &LINE_SEARCH {
            let mut cand = mix(&mu, &next, step);
            let fixed = repair_traps(sub, &mut cand);
            let cutoff = current + 1e-11 * (1.0 + current.abs());
            let rr = adversary_response_from(sub, &cand, cost, opts.solver, choice.clone(), SEARCH_RESPONSE_ROUNDS, cutoff);
            if let Ok(Some(r)) = rr {
                accepted = Some((cand, r, fixed));
                break;
            }
        }
        match accepted {
            Some((cand, (t, g, c), fixed)) => {
                mu = cand;
                tau = t;
                gb = g;
                choice = c;
                repairs += fixed;
                if gain_of(&gb) < current - opts.tol * (1.0 + current.abs()) {
                    flat = 0;
                } else {
                    flat += 1;
                }
                trace.push(gb.j.clone());
            }
            None => return Ok(done(mu, tau, gb, trace)),
        }
    }
    Err(AcpcError::IterationCap(opts.max_rounds))
}

/// `μ*(s) = μ_cycle(s)` on `E`, `μ_reach(s)` elsewhere.
pub fn combine_policies(mu_reach: &MixedPolicy, mu_cycle: &MixedPolicy, accepting: &[bool]) -> MixedPolicy {
    let dist = accepting
        .iter()
        .enumerate()
        .map(|(s, &e)| if e { mu_cycle.dist[s].clone() } else { mu_reach.dist[s].clone() })
        .collect();
    MixedPolicy {
        owner: Owner::Controller,
        dist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    #[test]
    fn single_absorbing_state() {
        let gb = evaluate_chain(&[vec![(0, 1.0)]], &[0.0], &[true], Solver::Full).unwrap();
        assert_eq!(gb.j, vec![0.0]);
        assert_eq!(gb.h, vec![0.0]);
    }

    #[test]
    fn two_state_cycle_costs_twenty() {
        let rows = vec![vec![(1, 1.0)], vec![(0, 1.0)]];
        for solver in [Solver::Full, Solver::Reduced] {
            let gb = evaluate_chain(&rows, &[0.0, 20.0], &[true, false], solver).unwrap();
            assert!((gb.j[0] - 20.0).abs() <= 1e-9 && (gb.j[1] - 20.0).abs() <= 1e-9);
            assert!(gb.max_residual() <= 1e-8);
        }
    }

    #[test]
    fn three_state_cycle_costs_forty() {
        let rows = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let gb = evaluate_chain(&rows, &[0.0, 20.0, 20.0], &[true, false, false], Solver::Full).unwrap();
        for x in &gb.j {
            assert!((x - 40.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn improper_chain_detected() {
        let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)]];
        assert!(matches!(
            evaluate_chain(&rows, &[0.0, 0.0], &[true, false], Solver::Full),
            Err(AcpcError::ImproperPolicy(_))
        ));
    }

    #[test]
    fn solvers_agree_on_multichain() {
        // Two recurrent classes {0,1} and {2,3}, transient 4.
        let rows = vec![
            vec![(1, 1.0)],
            vec![(0, 0.5), (1, 0.5)],
            vec![(3, 1.0)],
            vec![(2, 1.0)],
            vec![(0, 0.3), (3, 0.7)],
        ];
        let g = [0.0, 5.0, 1.0, 3.0, 2.0];
        let cyc = [true, false, true, false, false];
        let a = evaluate_chain(&rows, &g, &cyc, Solver::Full).unwrap();
        let b = evaluate_chain(&rows, &g, &cyc, Solver::Reduced).unwrap();
        assert!(!a.unichain);
        for i in 0..5 {
            assert!((a.j[i] - b.j[i]).abs() < 1e-9);
            assert!((a.h[i] - b.h[i]).abs() < 1e-9);
            assert!((a.v[i] - b.v[i]).abs() < 1e-9);
        }
        assert!(a.max_residual() < 1e-9 && b.max_residual() < 1e-9);
    }

    #[test]
    fn invariant_form_required() {
        assert!(invariant_body(&parse_ltl("G !obstacle").unwrap()).is_ok());
        assert!(matches!(
            invariant_body(&parse_ltl("G F a").unwrap()),
            Err(AcpcError::NotInvariantForm)
        ));
        assert!(matches!(
            invariant_body(&parse_ltl("!a").unwrap()),
            Err(AcpcError::NotInvariantForm)
        ));
    }
}
