//! Max-min reachability of the accepting set.
//!
//! [`modify_product`] adds an absorbing `dest` state and an action `d` that
//! jumps there from accepting states. [`max_reach_value_iteration`] then
//! computes `v(s) = max_μ min_τ Pr(reach E ∪ {dest})` by Jacobi sweeps, each
//! state update being the value of a zero-sum matrix game.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{MixedPolicy, Owner, Row, StochasticGame};
use crate::gamec::{GamecSet, WinningRegion};
use crate::matrix_game::{solve_zero_sum, GameSolution, MatrixGame, MatrixGameError};
use crate::product::ProductGame;
use crate::scc;

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("value iteration did not converge within {0} sweeps")]
    NonConvergence(usize),
    #[error("relaxed iteration used {sweeps} sweeps, above the bound {bound}")]
    BoundExceeded { sweeps: usize, bound: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixGameError),
    #[error("linear solve failed: {0}")]
    Linear(String),
}

/// The modified game. State `dest` is the last state, and `d` is the last
/// controller action at every state.
#[derive(Debug, Clone)]
pub struct ReachGame {
    pub game: StochasticGame,
    /// `E`, extended with `false` for `dest`.
    pub accepting: Vec<bool>,
    pub dest: usize,
    /// Enabled actions `D_h(s)` for `s ∈ E`.
    pub enabled: Vec<Option<Vec<usize>>>,
    /// States the solvers look at; unreachable product states are skipped.
    pub active: Vec<bool>,
}

impl ReachGame {
    /// `E ∪ {dest}`.
    pub fn target(&self) -> Vec<bool> {
        let mut t = self.accepting.clone();
        t[self.dest] = true;
        t
    }

    pub fn d_action(&self, s: usize) -> usize {
        self.game.num_ctrl(s) - 1
    }

    /// Number of states of the original game.
    pub fn base_states(&self) -> usize {
        self.dest
    }
}

fn fresh_action_name(g: &StochasticGame) -> String {
    let mut name = String::from("d");
    while (0..g.num_states()).any(|s| g.ctrl_actions(s).contains(&name)) {
        name.push('_');
    }
    name
}

/// Adds `dest` and `d`. From `s ∈ E ∪ {dest}`, `d` moves to `dest` whatever
/// the adversary does; elsewhere `d` is a self-loop, which never increases
/// the value and is excluded when policies are extracted.
pub fn modify_game(
    g: &StochasticGame,
    accepting: &[bool],
    enabled: Vec<Option<Vec<usize>>>,
    active: &[bool],
) -> ReachGame {
    let n = g.num_states();
    let dest = n;
    let d = fresh_action_name(g);
    let mut names = g.state_names().to_vec();
    let mut dest_name = String::from("dest");
    while names.contains(&dest_name) {
        dest_name.push('_');
    }
    names.push(dest_name);
    let mut labels = g.labels().to_vec();
    labels.push(0);
    let mut ctrl = Vec::with_capacity(n + 1);
    let mut adv = Vec::with_capacity(n + 1);
    let mut kernel: Vec<Vec<Row>> = Vec::with_capacity(n + 1);
    for s in 0..n {
        let mut c = g.ctrl_actions(s).to_vec();
        c.push(d.clone());
        ctrl.push(c);
        adv.push(g.adv_actions(s).to_vec());
        let mut rows = Vec::with_capacity((g.num_ctrl(s) + 1) * g.num_adv(s));
        for uc in 0..g.num_ctrl(s) {
            for ua in 0..g.num_adv(s) {
                rows.push(g.row(s, uc, ua).to_vec());
            }
        }
        for _ in 0..g.num_adv(s) {
            let t = if accepting[s] { dest } else { s };
            rows.push(vec![(t, 1.0)]);
        }
        kernel.push(rows);
    }
    ctrl.push(vec![d]);
    adv.push(vec!["none".to_string()]);
    kernel.push(vec![vec![(dest, 1.0)]]);
    let game = StochasticGame::new(names, g.alphabet().clone(), labels, ctrl, adv, kernel, g.initial())
        .expect("modified game stays valid");
    let mut acc = accepting.to_vec();
    acc.push(false);
    let mut enabled = enabled;
    enabled.push(None);
    let mut act = active.to_vec();
    act.push(true);
    ReachGame {
        game,
        accepting: acc,
        dest,
        enabled,
        active: act,
    }
}

/// [`modify_game`] with the target set to the winning region.
pub fn modify_product_winning(p: &ProductGame, w: &WinningRegion) -> ReachGame {
    modify_game(&p.game, &w.states, w.enabled.clone(), &p.reachable)
}

pub fn modify_product(p: &ProductGame, gs: &GamecSet) -> ReachGame {
    let n = p.num_states();
    let mut enabled = vec![None; n];
    for c in &gs.components {
        for (s, e) in c.states.iter().zip(&c.enabled) {
            enabled[*s] = Some(e.clone());
        }
    }
    modify_game(&p.game, &gs.accepting, enabled, &p.reachable)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Strict,
    /// Relaxed update: a state changes only if the new value exceeds
    /// `(1 + ε)` times the current one.
    Epsilon(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStat {
    /// Smallest computed `val(M_v(s)) − v^k(s)` over the states solved in
    /// the sweep. The exact operator never lowers a value, so a computed
    /// decrease is rounding and is not applied.
    pub min_increment: f64,
    /// `sup |v^{k+1} − v^k|`.
    pub residual: f64,
    pub updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub trace: Vec<SweepStat>,
    /// In relaxed mode: `n · max_s log(1/v⁰(s)) / log(1+ε) + n`, with `v⁰(s)`
    /// the smallest positive value seen at `s`.
    pub sweep_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ViOptions {
    pub delta: f64,
    pub mode: Mode,
    pub max_sweeps: usize,
}

impl Default for ViOptions {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            mode: Mode::Strict,
            max_sweeps: 1_000_000,
        }
    }
}

/// `M[uc][ua] = Σ_{s'} v(s') Pr(s, uc, ua, s')` over the original actions.
pub fn state_matrix(rg: &ReachGame, s: usize, v: &[f64]) -> MatrixGame {
    let g = &rg.game;
    let m = rg.d_action(s).max(1);
    let k = g.num_adv(s);
    let mut a = Vec::with_capacity(m * k);
    for uc in 0..m {
        for ua in 0..k {
            a.push(g.row(s, uc, ua).iter().map(|&(t, p)| v[t] * p).sum());
        }
    }
    MatrixGame::from_flat(m, k, a).expect("finite payoff")
}

fn solve_state(rg: &ReachGame, s: usize, v: &[f64]) -> Result<GameSolution, MatrixGameError> {
    solve_zero_sum(&state_matrix(rg, s, v))
}

/// Predecessors under any joint action.
fn predecessors(g: &StochasticGame) -> Vec<Vec<usize>> {
    let adj = crate::product::support_graph(g);
    let mut pred = vec![Vec::new(); adj.len()];
    for (s, succ) in adj.iter().enumerate() {
        for &t in succ {
            pred[t].push(s);
        }
    }
    pred
}

pub fn max_reach_value_iteration(rg: &ReachGame, opts: &ViOptions) -> Result<ValueVector, ReachError> {
    let g = &rg.game;
    let n = g.num_states();
    let target = rg.target();
    let live = crate::product::can_reach_any(g, &target);
    // States whose value can change.
    let free: Vec<usize> = (0..n)
        .filter(|&s| rg.active[s] && !target[s] && live[s])
        .collect();
    let pred = predecessors(g);

    let mut v: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    let mut min_pos: Vec<f64> = v.iter().map(|&x| if x > 0.0 { x } else { f64::INFINITY }).collect();
    // v⁰ ≡ 0 → v¹: the first recorded sweep raises E ∪ {dest} to 1.
    let mut trace = vec![SweepStat {
        min_increment: 0.0,
        residual: if target.iter().any(|&t| t) { 1.0 } else { 0.0 },
        updates: target.iter().filter(|&&t| t).count(),
    }];
    let mut dirty = vec![false; n];
    for &s in &free {
        dirty[s] = true;
    }
    let mut sweeps = 0usize;
    let mut residual;

    loop {
        if sweeps >= opts.max_sweeps {
            return Err(ReachError::NonConvergence(sweeps));
        }
        let work: Vec<usize> = free.iter().copied().filter(|&s| dirty[s]).collect();
        let updates: Vec<(usize, f64)> = work
            .par_iter()
            .map(|&s| solve_state(rg, s, &v).map(|sol| (s, sol.value)))
            .collect::<Result<_, _>>()?;
        sweeps += 1;

        let mut stat = SweepStat {
            min_increment: if work.is_empty() { 0.0 } else { f64::INFINITY },
            residual: 0.0,
            updates: 0,
        };
        let mut changed: Vec<usize> = Vec::new();
        let mut next = v.clone();
        for (s, new) in updates {
            let old = v[s];
            let accept = match opts.mode {
                Mode::Strict => new > old,
                Mode::Epsilon(eps) => new > (1.0 + eps) * old,
            };
            let applied = if accept { new } else { old };
            stat.min_increment = stat.min_increment.min(new - old);
            stat.residual = stat.residual.max((applied - old).abs());
            if accept {
                next[s] = new;
                stat.updates += 1;
                changed.push(s);
                if new > 0.0 {
                    min_pos[s] = min_pos[s].min(new);
                }
            }
        }
        if stat.min_increment == f64::INFINITY {
            stat.min_increment = 0.0;
        }
        v = next;
        for s in 0..n {
            dirty[s] = false;
        }
        for &s in &changed {
            for &p in &pred[s] {
                dirty[p] = true;
            }
        }
        residual = stat.residual;
        let done = match opts.mode {
            Mode::Strict => stat.residual <= opts.delta,
            Mode::Epsilon(_) => stat.updates == 0,
        };
        trace.push(stat);
        if done {
            break;
        }
    }

    let sweep_bound = match opts.mode {
        Mode::Strict => None,
        Mode::Epsilon(eps) => {
            let worst = min_pos
                .iter()
                .filter(|x| x.is_finite())
                .map(|&x| (1.0 / x).ln())
                .fold(0.0f64, f64::max);
            let nf = n as f64;
            let bound = nf * worst / (1.0 + eps).ln() + nf;
            if sweeps as f64 > bound {
                return Err(ReachError::BoundExceeded { sweeps, bound });
            }
            Some(bound)
        }
    };

    Ok(ValueVector {
        v,
        iterations: sweeps,
        residual,
        trace,
        sweep_bound,
    })
}

/// `sup_s |v(s) − val(M_v(s))|` over the free states.
pub fn fixed_point_residual(rg: &ReachGame, v: &[f64]) -> Result<f64, ReachError> {
    let target = rg.target();
    let res: Vec<f64> = (0..rg.game.num_states())
        .into_par_iter()
        .filter(|&s| rg.active[s] && !target[s])
        .map(|s| solve_state(rg, s, v).map(|sol| (sol.value - v[s]).abs()))
        .collect::<Result<_, _>>()?;
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// Progress weights tried when policies are extracted, largest first.
pub const PROGRESS_WEIGHTS: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8];

/// Value a settled strategy may give up against `v(s)`. Larger slacks are
/// only used once the smaller ones settle nothing more.
pub const PROGRESS_SLACK: [f64; 5] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

/// `R[uc][ua] = Pr(s, uc, ua, settled)` over the original actions.
fn progress_matrix(rg: &ReachGame, s: usize, settled: &[bool]) -> Vec<f64> {
    let g = &rg.game;
    let m = rg.d_action(s);
    let k = g.num_adv(s);
    let mut r = Vec::with_capacity(m * k);
    for uc in 0..m {
        for ua in 0..k {
            r.push(g.row(s, uc, ua).iter().filter(|&&(t, _)| settled[t]).map(|&(_, p)| p).sum());
        }
    }
    r
}

/// A near-optimal strategy at `s` that moves into `settled` with positive
/// probability against every adversary action. The matrix game is solved
/// with a progress bonus `λ R`; the largest `λ` whose strategy stays within
/// `slack` of `v(s)` wins.
fn progressive_strategy(
    rg: &ReachGame,
    s: usize,
    v: &[f64],
    settled: &[bool],
    slack: f64,
) -> Result<Option<Vec<f64>>, ReachError> {
    let m = state_matrix(rg, s, v);
    let r = progress_matrix(rg, s, settled);
    let (rows, cols) = (m.rows(), m.cols());
    if r.iter().all(|&x| x == 0.0) {
        return Ok(None);
    }
    for &lambda in &PROGRESS_WEIGHTS {
        let perturbed: Vec<f64> = (0..rows * cols)
            .map(|i| m.get(i / cols, i % cols) + lambda * r[i])
            .collect();
        let sol = solve_zero_sum(&MatrixGame::from_flat(rows, cols, perturbed).expect("finite payoff"))?;
        let x = sol.row_strategy;
        let ok = (0..cols).all(|ua| {
            let val: f64 = (0..rows).map(|uc| x[uc] * m.get(uc, ua)).sum();
            let prog: f64 = (0..rows).map(|uc| x[uc] * r[uc * cols + ua]).sum();
            val >= v[s] - slack && prog > 1e-12
        });
        if ok {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Optimal stationary controller policy on the modified game: uniform over
/// `D_h(s)` inside `E` and `d` at `dest`. Elsewhere a matrix-game strategy
/// is chosen in rounds, settling a state once its strategy is near-optimal
/// and makes progress towards already settled states, so that the policy
/// does not idle in value-preserving loops. States that never settle keep
/// the plain optimal row strategy.
pub fn extract_policy(rg: &ReachGame, vv: &ValueVector) -> Result<MixedPolicy, ReachError> {
    let g = &rg.game;
    let n = g.num_states();
    let target = rg.target();
    let v = &vv.v;
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let nc = g.num_ctrl(s);
            let mut row = vec![0.0; nc];
            if s == rg.dest {
                row[nc - 1] = 1.0;
            } else if rg.accepting[s] {
                let en: Vec<usize> = rg.enabled[s]
                    .clone()
                    .unwrap_or_else(|| (0..nc - 1).collect());
                for &a in &en {
                    row[a] = 1.0 / en.len() as f64;
                }
            } else {
                for x in row.iter_mut().take(nc - 1) {
                    *x = 1.0 / (nc - 1) as f64;
                }
            }
            row
        })
        .collect();
    let free: Vec<bool> = (0..n)
        .map(|s| rg.active[s] && !target[s])
        .collect();
    let plain: Vec<(usize, Vec<f64>)> = (0..n)
        .into_par_iter()
        .filter(|&s| free[s])
        .map(|s| solve_state(rg, s, v).map(|sol| (s, sol.row_strategy)))
        .collect::<Result<_, _>>()?;
    for (s, x) in plain {
        dist[s][..x.len()].copy_from_slice(&x);
    }

    // Progress only counts towards the target or states already settled.
    let mut settled: Vec<bool> = (0..n).map(|s| rg.active[s] && target[s]).collect();
    let open: Vec<bool> = (0..n).map(|s| free[s] && v[s] > 0.0).collect();
    let mut level = 0;
    loop {
        let slack = PROGRESS_SLACK[level];
        let fresh: Vec<(usize, Vec<f64>)> = (0..n)
            .into_par_iter()
            .filter(|&s| open[s] && !settled[s])
            .map(|s| progressive_strategy(rg, s, v, &settled, slack).map(|x| x.map(|x| (s, x))))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        if fresh.is_empty() {
            if level + 1 == PROGRESS_SLACK.len() {
                break;
            }
            level += 1;
            continue;
        }
        level = 0;
        for (s, x) in fresh {
            dist[s][..x.len()].copy_from_slice(&x);
            dist[s][x.len()..].iter_mut().for_each(|p| *p = 0.0);
            settled[s] = true;
        }
    }
    improve_policy(rg, dist, &open)
}

/// Rounds of strategy improvement run after extraction.
pub const IMPROVEMENT_ROUNDS: usize = 100;

/// Gain a state needs before it switches strategy.
pub const IMPROVEMENT_MARGIN: f64 = 1e-8;

/// Strategy improvement against the exact best response: at every state
/// where the matrix game over the current worst-case reach probabilities
/// beats them strictly, switch to its optimal strategy. Stops when no state
/// switches or a round would lower some value.
fn improve_policy(rg: &ReachGame, mut dist: Vec<Vec<f64>>, open: &[bool]) -> Result<MixedPolicy, ReachError> {
    let g = &rg.game;
    let n = g.num_states();
    let target = rg.target();
    let policy = |dist: &Vec<Vec<f64>>| MixedPolicy {
        owner: Owner::Controller,
        dist: dist.clone(),
    };
    let (_, mut w) = best_response_adversary(g, &policy(&dist), &target)?;
    for _ in 0..IMPROVEMENT_ROUNDS {
        let switch: Vec<(usize, Vec<f64>)> = (0..n)
            .into_par_iter()
            .filter(|&s| open[s])
            .map(|s| {
                solve_state(rg, s, &w).map(|sol| (sol.value > w[s] + IMPROVEMENT_MARGIN).then_some((s, sol.row_strategy)))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        if switch.is_empty() {
            break;
        }
        let mut next = dist.clone();
        for (s, x) in switch {
            next[s][..x.len()].copy_from_slice(&x);
            next[s][x.len()..].iter_mut().for_each(|p| *p = 0.0);
        }
        let (_, w_next) = best_response_adversary(g, &policy(&next), &target)?;
        if w_next.iter().zip(&w).any(|(a, b)| *a < *b - 1e-9) {
            break;
        }
        dist = next;
        w = w_next;
    }
    Ok(policy(&dist))
}

/// Drops `dest` and `d` from a policy on the modified game.
pub fn project_policy(rg: &ReachGame, mu: &MixedPolicy) -> MixedPolicy {
    let dist = (0..rg.base_states())
        .map(|s| {
            let row = &mu.dist[s];
            let mut r = row[..row.len() - 1].to_vec();
            let sum: f64 = r.iter().sum();
            if sum > 0.0 {
                r.iter_mut().for_each(|x| *x /= sum);
            } else {
                let u = 1.0 / r.len() as f64;
                r.iter_mut().for_each(|x| *x = u);
            }
            r
        })
        .collect();
    MixedPolicy {
        owner: mu.owner,
        dist,
    }
}

/// Pads a product policy with a zero `d` column and a `dest` row.
pub fn embed_policy(rg: &ReachGame, mu: &MixedPolicy) -> MixedPolicy {
    let mut dist: Vec<Vec<f64>> = mu
        .dist
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(0.0);
            r
        })
        .collect();
    dist.push(vec![1.0]);
    debug_assert_eq!(dist.len(), rg.game.num_states());
    MixedPolicy {
        owner: mu.owner,
        dist,
    }
}

/// The adversary's MDP once the controller is fixed to `mu`:
/// `rows[s][ua]` is `Σ_uc μ(s, uc) Pr(s, uc, ua, ·)`.
pub fn adversary_mdp(g: &StochasticGame, mu: &MixedPolicy) -> Vec<Vec<Row>> {
    (0..g.num_states())
        .into_par_iter()
        .map(|s| {
            (0..g.num_adv(s))
                .map(|ua| {
                    let mut acc: Row = Vec::new();
                    for (uc, &pc) in mu.dist[s].iter().enumerate() {
                        if pc == 0.0 {
                            continue;
                        }
                        for &(t, p) in g.row(s, uc, ua) {
                            acc.push((t, pc * p));
                        }
                    }
                    acc.sort_by_key(|&(t, _)| t);
                    let mut merged: Row = Vec::with_capacity(acc.len());
                    for (t, p) in acc {
                        match merged.last_mut() {
                            Some((lt, lp)) if *lt == t => *lp += p,
                            _ => merged.push((t, p)),
                        }
                    }
                    merged
                })
                .collect()
        })
        .collect()
}

fn row_dot(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(t, p)| p * v[t]).sum()
}

/// Exact reach probabilities of `target` in the chain that picks
/// `mdp[s][choice[s]]`.
fn evaluate_choice(mdp: &[Vec<Row>], choice: &[usize], target: &[bool]) -> Result<Vec<f64>, ReachError> {
    let n = mdp.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|s| mdp[s][choice[s]].iter().map(|&(t, _)| t).collect())
        .collect();
    let live = scc::can_reach(&adj, target);
    let unknown: Vec<usize> = (0..n).filter(|&s| live[s] && !target[s]).collect();
    let mut v: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    if unknown.is_empty() {
        return Ok(v);
    }
    let mut local = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        local[s] = i;
    }
    let m = unknown.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &s) in unknown.iter().enumerate() {
        for &(t, p) in &mdp[s][choice[s]] {
            if target[t] {
                b[i] += p;
            } else if local[t] != usize::MAX {
                a[(i, local[t])] -= p;
            }
        }
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| ReachError::Linear("singular reachability system".into()))?;
    for (i, &s) in unknown.iter().enumerate() {
        v[s] = x[i].clamp(0.0, 1.0);
    }
    Ok(v)
}

const MIN_REACH_WARM_SWEEPS: usize = 500;

/// Minimum reach probabilities in `mdp` and an optimal deterministic
/// choice. States from which `target` can be avoided forever get 0 by
/// graph analysis; the rest are solved by value iteration, a greedy
/// choice, and policy iteration on exact evaluations.
pub fn min_reach(mdp: &[Vec<Row>], target: &[bool]) -> Result<(Vec<usize>, Vec<f64>), ReachError> {
    let n = mdp.len();
    // Greatest set Z ∌ target where some action keeps all mass in Z.
    let mut zero: Vec<bool> = target.iter().map(|&t| !t).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if zero[s] && !mdp[s].iter().any(|row| row.iter().all(|&(t, _)| zero[t])) {
                zero[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut v: Vec<f64> = (0..n)
        .map(|s| if target[s] { 1.0 } else { 0.0 })
        .collect();
    // A warm start only; policy iteration below makes it exact.
    for _ in 0..MIN_REACH_WARM_SWEEPS {
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                if target[s] || zero[s] {
                    v[s]
                } else {
                    mdp[s].iter().map(|r| row_dot(r, &v)).fold(f64::INFINITY, f64::min)
                }
            })
            .collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= 1e-10 {
            break;
        }
    }
    let greedy = |v: &[f64], prev: Option<&[usize]>| -> Vec<usize> {
        (0..n)
            .map(|s| {
                if zero[s] {
                    return mdp[s]
                        .iter()
                        .position(|row| row.iter().all(|&(t, _)| zero[t]))
                        .unwrap_or(0);
                }
                let vals: Vec<f64> = mdp[s].iter().map(|r| row_dot(r, v)).collect();
                let best = (0..vals.len()).fold(0, |b, a| if vals[a] < vals[b] { a } else { b });
                match prev {
                    Some(p) if vals[p[s]] <= vals[best] + 1e-12 => p[s],
                    _ => best,
                }
            })
            .collect()
    };
    let mut choice = greedy(&v, None);
    let mut val = evaluate_choice(mdp, &choice, target)?;
    for _ in 0..1000 {
        let next = greedy(&val, Some(&choice));
        if next == choice {
            break;
        }
        choice = next;
        val = evaluate_choice(mdp, &choice, target)?;
    }
    Ok((choice, val))
}

/// Maximum reach probabilities in `mdp` with an optimal deterministic
/// choice that makes progress towards `target`.
pub fn max_reach(mdp: &[Vec<Row>], target: &[bool]) -> Result<(Vec<usize>, Vec<f64>), ReachError> {
    let n = mdp.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut succ: Vec<usize> = mdp[s].iter().flatten().map(|&(t, _)| t).collect();
            succ.sort_unstable();
            succ.dedup();
            succ
        })
        .collect();
    let live = scc::can_reach(&adj, target);
    let mut v: Vec<f64> = (0..n).map(|s| if target[s] { 1.0 } else { 0.0 }).collect();
    for _ in 0..1_000_000 {
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                if target[s] || !live[s] {
                    v[s]
                } else {
                    mdp[s].iter().map(|r| row_dot(r, &v)).fold(0.0, f64::max)
                }
            })
            .collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= 1e-14 {
            break;
        }
    }
    // Among near-optimal actions, pick ones that move closer to the target
    // along an attractor order, so that value-preserving loops are avoided.
    let near = |s: usize, a: usize| row_dot(&mdp[s][a], &v) >= v[s] - 1e-9;
    let mut choice = vec![0usize; n];
    let mut settled = target.to_vec();
    let mut frontier = true;
    while frontier {
        frontier = false;
        for s in 0..n {
            if settled[s] || !live[s] {
                continue;
            }
            if let Some(a) = (0..mdp[s].len()).find(|&a| near(s, a) && mdp[s][a].iter().any(|&(t, _)| settled[t])) {
                choice[s] = a;
                settled[s] = true;
                frontier = true;
            }
        }
    }
    let val = evaluate_choice(mdp, &choice, target)?;
    Ok((choice, val))
}

fn pure_adversary(g: &StochasticGame, choice: &[usize]) -> MixedPolicy {
    MixedPolicy::pure(g, Owner::Adversary, choice)
}

/// The adversary's best response to `mu`: minimizes the probability of
/// reaching `target`. Returns a deterministic policy and its exact values.
pub fn best_response_adversary(
    g: &StochasticGame,
    mu: &MixedPolicy,
    target: &[bool],
) -> Result<(MixedPolicy, Vec<f64>), ReachError> {
    let mdp = adversary_mdp(g, mu);
    let (choice, v) = min_reach(&mdp, target)?;
    Ok((pure_adversary(g, &choice), v))
}

/// Maximal end components of an MDP restricted to `allowed` states, with
/// the actions that stay inside.
fn mdp_mecs(mdp: &[Vec<Row>], allowed: &[bool]) -> Vec<(Vec<usize>, Vec<Vec<usize>>)> {
    let n = mdp.len();
    let mut actions: Vec<Vec<usize>> = (0..n).map(|s| (0..mdp[s].len()).collect()).collect();
    let mut comp: Vec<usize> = (0..n).map(|s| if allowed[s] { 0 } else { usize::MAX }).collect();
    let mut pending: Vec<Vec<usize>> = vec![(0..n).filter(|&s| allowed[s]).collect()];
    let mut out = Vec::new();
    let mut next_id = 1usize;
    while let Some(cand) = pending.pop() {
        if cand.is_empty() {
            continue;
        }
        let id = next_id;
        next_id += 1;
        for &s in &cand {
            comp[s] = id;
        }
        loop {
            let mut changed = false;
            for &s in &cand {
                if comp[s] != id {
                    continue;
                }
                let before = actions[s].len();
                actions[s].retain(|&a| mdp[s][a].iter().all(|&(t, _)| comp[t] == id));
                if actions[s].is_empty() {
                    comp[s] = usize::MAX;
                    changed = true;
                } else if actions[s].len() != before {
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let members: Vec<usize> = cand.into_iter().filter(|&s| comp[s] == id).collect();
        if members.is_empty() {
            continue;
        }
        let adj: Vec<Vec<usize>> = members
            .iter()
            .map(|&s| {
                let mut succ: Vec<usize> = actions[s]
                    .iter()
                    .flat_map(|&a| mdp[s][a].iter().map(|&(t, _)| t))
                    .filter_map(|t| members.binary_search(&t).ok())
                    .collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect();
        let sccs = scc::strongly_connected_components(&adj);
        if sccs.len() == 1 {
            let acts = members.iter().map(|&s| actions[s].clone()).collect();
            out.push((members, acts));
        } else {
            for c in sccs {
                pending.push(c.into_iter().map(|i| members[i]).collect());
            }
        }
    }
    out
}

/// End components in which the adversary, facing the fixed controller, can
/// keep the play forever while violating every Rabin pair, with the
/// actions to randomize over inside each.
fn adversary_winning_components(
    mdp: &[Vec<Row>],
    l: &[Vec<bool>],
    k: &[Vec<bool>],
) -> Vec<(Vec<usize>, Vec<Vec<usize>>)> {
    let n = mdp.len();
    let mut out = Vec::new();
    let mut stack = vec![vec![true; n]];
    while let Some(region) = stack.pop() {
        for (states, acts) in mdp_mecs(mdp, &region) {
            let bad_pair = (0..l.len()).find(|&z| {
                states.iter().any(|&s| k[z][s]) && !states.iter().any(|&s| l[z][s])
            });
            match bad_pair {
                None => out.push((states, acts)),
                Some(z) => {
                    let mut sub = vec![false; n];
                    for &s in &states {
                        sub[s] = !k[z][s];
                    }
                    stack.push(sub);
                }
            }
        }
    }
    out
}

/// Exact worst-case probability that the play of `g` under `mu` satisfies
/// the Rabin condition given by `L` and `K` masks over states. The
/// adversary maximizes the chance of reaching an end component where it can
/// violate every pair forever, then randomizes uniformly inside it so every
/// state of the component recurs. Returns that adversary policy and the
/// satisfaction probabilities.
pub fn worst_case_satisfaction(
    g: &StochasticGame,
    mu: &MixedPolicy,
    l: &[Vec<bool>],
    k: &[Vec<bool>],
) -> Result<(MixedPolicy, Vec<f64>), ReachError> {
    let n = g.num_states();
    let mdp = adversary_mdp(g, mu);
    let comps = adversary_winning_components(&mdp, l, k);
    let mut win = vec![false; n];
    for (states, _) in &comps {
        for &s in states {
            win[s] = true;
        }
    }
    let (choice, reach) = max_reach(&mdp, &win)?;
    let mut tau = pure_adversary(g, &choice);
    for (states, acts) in &comps {
        for (s, a) in states.iter().zip(acts) {
            let row = &mut tau.dist[*s];
            row.iter_mut().for_each(|x| *x = 0.0);
            for &u in a {
                row[u] = 1.0 / a.len() as f64;
            }
        }
    }
    let sat = reach.iter().map(|r| 1.0 - r).collect();
    Ok((tau, sat))
}
