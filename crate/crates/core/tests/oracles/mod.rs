//! Reference solvers for the integration tests. Everything here is brute
//! force or textbook and shares no code with the library solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sls_core::game::{Row, StochasticGame};
use sls_core::ltl::Alphabet;
use sls_core::product::ProductPair;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distribution over `k` distinct random states out of `n`.
pub fn random_row(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Row {
    let mut support: Vec<usize> = sample(rng, n, k.clamp(1, n)).into_vec();
    support.sort_unstable();
    let w: Vec<f64> = support.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    support.into_iter().zip(w).map(|(t, x)| (t, x / total)).collect()
}

pub struct GameShape {
    pub states: usize,
    pub max_ctrl: usize,
    pub max_adv: usize,
    /// Largest support of a transition row.
    pub max_support: usize,
    pub alphabet: Vec<&'static str>,
}

/// Random game; each state gets a random letter, random action counts in
/// `1..=max` and random rows.
pub fn random_game(rng: &mut ChaCha8Rng, shape: &GameShape) -> StochasticGame {
    let n = shape.states;
    let alphabet = Alphabet::new(shape.alphabet.iter().copied()).unwrap();
    let letters = alphabet.letter_count() as u32;
    let mut labels = Vec::with_capacity(n);
    let mut ctrl = Vec::with_capacity(n);
    let mut adv = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(rng.random_range(0..letters));
        let nc = rng.random_range(1..=shape.max_ctrl);
        let na = rng.random_range(1..=shape.max_adv);
        ctrl.push((0..nc).map(|i| format!("c{i}")).collect());
        adv.push((0..na).map(|i| format!("a{i}")).collect());
        let rows: Vec<Row> = (0..nc * na)
            .map(|_| {
                let k = rng.random_range(1..=shape.max_support);
                random_row(rng, n, k)
            })
            .collect();
        kernel.push(rows);
    }
    let names = (0..n).map(|i| format!("s{i}")).collect();
    StochasticGame::new(names, alphabet, labels, ctrl, adv, kernel, 0).unwrap()
}

// ---------------------------------------------------------------------------
// Matrix games

/// Value of `max_x min_y xᵀ A y` by support enumeration: the first pair of
/// equal-size supports whose equalizing strategies are feasible and form
/// mutual best responses.
pub fn matrix_value(a: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), a[0].len());
    let subsets = |len: usize| -> Vec<Vec<usize>> {
        (1u32..1 << len)
            .map(|mask| (0..len).filter(|&i| mask >> i & 1 == 1).collect())
            .collect()
    };
    for rows in subsets(m) {
        for cols in subsets(n) {
            if rows.len() != cols.len() {
                continue;
            }
            let k = rows.len();
            // Unknowns [x_rows, v] and [y_cols, v].
            let mut bx = DMatrix::zeros(k + 1, k + 1);
            let mut by = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            rhs[k] = 1.0;
            for (r, &j) in cols.iter().enumerate() {
                for (c, &i) in rows.iter().enumerate() {
                    bx[(r, c)] = a[i][j];
                }
                bx[(r, k)] = -1.0;
            }
            for (r, &i) in rows.iter().enumerate() {
                for (c, &j) in cols.iter().enumerate() {
                    by[(r, c)] = a[i][j];
                }
                by[(r, k)] = -1.0;
            }
            for c in 0..k {
                bx[(k, c)] = 1.0;
                by[(k, c)] = 1.0;
            }
            let (Some(sx), Some(sy)) = (bx.lu().solve(&rhs), by.lu().solve(&rhs)) else {
                continue;
            };
            let v = sx[k];
            if (v - sy[k]).abs() > 1e-9 || (0..k).any(|c| sx[c] < -1e-12 || sy[c] < -1e-12) {
                continue;
            }
            let mut x = vec![0.0; m];
            let mut y = vec![0.0; n];
            for (c, &i) in rows.iter().enumerate() {
                x[i] = sx[c];
            }
            for (c, &j) in cols.iter().enumerate() {
                y[j] = sy[c];
            }
            let col_ok = (0..n).all(|j| (0..m).map(|i| x[i] * a[i][j]).sum::<f64>() >= v - 1e-9);
            let row_ok = (0..m).all(|i| (0..n).map(|j| a[i][j] * y[j]).sum::<f64>() <= v + 1e-9);
            if col_ok && row_ok {
                return v;
            }
        }
    }
    panic!("no equilibrium found by support enumeration");
}

/// Coarse check of the same value by a grid over the row simplex (2 or 3
/// rows).
pub fn matrix_value_grid(a: &[Vec<f64>], steps: usize) -> f64 {
    let n = a[0].len();
    let guarantee = |x: &[f64]| {
        (0..n)
            .map(|j| x.iter().zip(a).map(|(p, r)| p * r[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = f64::NEG_INFINITY;
    match a.len() {
        2 => {
            for i in 0..=steps {
                let p = i as f64 / steps as f64;
                best = best.max(guarantee(&[p, 1.0 - p]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (p, q) = (i as f64 / steps as f64, j as f64 / steps as f64);
                    best = best.max(guarantee(&[p, q, (1.0 - p - q).max(0.0)]));
                }
            }
        }
        _ => panic!("grid oracle covers 2 or 3 rows"),
    }
    best
}

// ---------------------------------------------------------------------------
// End components

fn subsets_of(items: &[usize]) -> Vec<Vec<usize>> {
    (1u32..1 << items.len())
        .map(|mask| (0..items.len()).filter(|&i| mask >> i & 1 == 1).map(|i| items[i]).collect())
        .collect()
}

/// `(C, D)` as a per-state optional action set.
pub type SubGameSpec = Vec<Option<Vec<usize>>>;

fn closed(g: &StochasticGame, c: &SubGameSpec) -> bool {
    (0..g.num_states()).all(|s| match &c[s] {
        None => true,
        Some(d) => d.iter().all(|&uc| {
            (0..g.num_adv(s)).all(|ua| g.row(s, uc, ua).iter().all(|&(t, _)| c[t].is_some()))
        }),
    })
}

fn strongly_connected(g: &StochasticGame, c: &SubGameSpec) -> bool {
    let n = g.num_states();
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        if let Some(d) = &c[s] {
            for &uc in d {
                for ua in 0..g.num_adv(s) {
                    for &(t, _) in g.row(s, uc, ua) {
                        if c[t].is_some() {
                            reach[s][t] = true;
                        }
                    }
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let members: Vec<usize> = (0..n).filter(|&s| c[s].is_some()).collect();
    members.iter().all(|&a| members.iter().all(|&b| reach[a][b]))
}

/// Every closed, strongly connected `(C, D)` with `C` non-empty.
pub fn all_end_components(g: &StochasticGame) -> Vec<SubGameSpec> {
    let n = g.num_states();
    let mut out = Vec::new();
    let mut cur: SubGameSpec = vec![None; n];
    fn rec(g: &StochasticGame, s: usize, cur: &mut SubGameSpec, out: &mut Vec<SubGameSpec>) {
        if s == g.num_states() {
            if cur.iter().any(Option::is_some) && closed(g, cur) && strongly_connected(g, cur) {
                out.push(cur.clone());
            }
            return;
        }
        cur[s] = None;
        rec(g, s + 1, cur, out);
        let actions: Vec<usize> = (0..g.num_ctrl(s)).collect();
        for d in subsets_of(&actions) {
            cur[s] = Some(d);
            rec(g, s + 1, cur, out);
        }
        cur[s] = None;
    }
    rec(g, 0, &mut cur, &mut out);
    out
}

fn contained(a: &SubGameSpec, b: &SubGameSpec) -> bool {
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(dx), Some(dy)) => dx.iter().all(|u| dy.contains(u)),
    })
}

/// Whether some non-empty `S ⊆ C \ K` lets the adversary keep the play in
/// `S` forever against every action of `D`.
pub fn adversary_can_avoid(g: &StochasticGame, c: &SubGameSpec, k: &[bool]) -> bool {
    let free: Vec<usize> = (0..g.num_states()).filter(|&s| c[s].is_some() && !k[s]).collect();
    if free.is_empty() {
        return false;
    }
    subsets_of(&free).into_iter().any(|set| {
        set.iter().all(|&s| {
            (0..g.num_adv(s)).any(|ua| {
                c[s].as_ref().unwrap().iter().all(|&uc| g.row(s, uc, ua).iter().all(|&(t, _)| set.contains(&t)))
            })
        })
    })
}

/// Accepting maximal end components as `(states, enabled, pair)`, ordered by
/// smallest state.
pub fn gamecs(g: &StochasticGame, pairs: &[ProductPair]) -> Vec<(Vec<usize>, Vec<Vec<usize>>, usize)> {
    let ecs = all_end_components(g);
    let maximal: Vec<&SubGameSpec> = ecs
        .iter()
        .filter(|e| !ecs.iter().any(|f| f != *e && contained(e, f)))
        .collect();
    let mut out = Vec::new();
    for e in maximal {
        let states: Vec<usize> = (0..g.num_states()).filter(|&s| e[s].is_some()).collect();
        let witness = pairs
            .iter()
            .position(|p| states.iter().all(|&s| !p.l[s]) && !adversary_can_avoid(g, e, &p.k));
        if let Some(z) = witness {
            let enabled = states.iter().map(|&s| e[s].clone().unwrap()).collect();
            out.push((states, enabled, z));
        }
    }
    out.sort_by_key(|c| c.0[0]);
    out
}

// ---------------------------------------------------------------------------
// One-player reachability and average cost

/// Maximum reachability probability of `target` on a game whose adversary
/// has a single action, by Gauss-Seidel value iteration.
pub fn mdp_max_reach(g: &StochasticGame, target: &[bool]) -> Vec<f64> {
    let n = g.num_states();
    let mut v: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for _ in 0..2_000_000 {
        let mut change = 0.0f64;
        for s in 0..n {
            if target[s] {
                continue;
            }
            let best = (0..g.num_ctrl(s))
                .map(|uc| g.row(s, uc, 0).iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                .fold(0.0f64, f64::max);
            change = change.max((best - v[s]).abs());
            v[s] = best;
        }
        if change <= 1e-15 {
            break;
        }
    }
    v
}

/// Stationary distribution of an irreducible-on-its-recurrent-class chain
/// reached from a chain with a single recurrent class.
pub fn stationary(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).expect("unichain")
}

/// Average cost per cycle `πᵀg / π(Q)` of a unichain chain.
pub fn cost_per_cycle(p: &DMatrix<f64>, g: &[f64], cycle: &[bool]) -> f64 {
    let pi = stationary(p);
    let cost: f64 = (0..p.nrows()).map(|i| pi[i] * g[i]).sum();
    let visits: f64 = (0..p.nrows()).filter(|&i| cycle[i]).map(|i| pi[i]).sum();
    cost / visits
}

/// Minimum average cost per cycle over the deterministic controller
/// policies of a one-adversary-action game whose every policy is unichain.
pub fn min_cost_per_cycle(g: &StochasticGame, cost: &[f64], cycle: &[bool]) -> f64 {
    let n = g.num_states();
    let mut choice = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut p = DMatrix::zeros(n, n);
        for s in 0..n {
            for &(t, q) in g.row(s, choice[s], 0) {
                p[(s, t)] += q;
            }
        }
        best = best.min(cost_per_cycle(&p, cost, cycle));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            choice[i] += 1;
            if choice[i] < g.num_ctrl(i) {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Random one-adversary-action game where every row reaches state 0, so
/// every policy has the single recurrent class containing 0.
pub fn random_unichain(rng: &mut ChaCha8Rng, n: usize, max_ctrl: usize) -> StochasticGame {
    let alphabet = Alphabet::new(["a"]).unwrap();
    let mut ctrl = Vec::new();
    let mut kernel = Vec::new();
    for _ in 0..n {
        let nc = rng.random_range(1..=max_ctrl);
        ctrl.push((0..nc).map(|i| format!("c{i}")).collect());
        let rows = (0..nc)
            .map(|_| {
                let k = rng.random_range(1..=3);
                let mut row = random_row(rng, n, k);
                if row[0].0 != 0 {
                    let w = rng.random_range(0.05..0.5);
                    row.iter_mut().for_each(|e| e.1 *= 1.0 - w);
                    row.insert(0, (0, w));
                }
                row
            })
            .collect();
        kernel.push(rows);
    }
    StochasticGame::new(
        (0..n).map(|i| format!("s{i}")).collect(),
        alphabet,
        vec![0; n],
        ctrl,
        vec![vec!["none".to_string()]; n],
        kernel,
        0,
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Binomial intervals

/// Two-sided Clopper-Pearson interval at level `1 − alpha`.
pub fn clopper_pearson(successes: u64, n: u64, alpha: f64) -> (f64, f64) {
    use statrs::distribution::{Beta, ContinuousCDF};
    let (k, n) = (successes as f64, n as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes as f64 == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Union over all `(S, D)` that are closed, avoid `L(z)` and leave the
/// adversary no way to dodge `K(z)`: the states won with probability 1 by
/// mixing over `D` for pair `z`.
pub fn winning_states(g: &StochasticGame, pair: &ProductPair) -> Vec<bool> {
    let n = g.num_states();
    let mut won = vec![false; n];
    let mut cur: SubGameSpec = vec![None; n];
    fn rec(g: &StochasticGame, s: usize, pair: &ProductPair, cur: &mut SubGameSpec, won: &mut [bool]) {
        if s == g.num_states() {
            if closed(g, cur) && !adversary_can_avoid(g, cur, &pair.k) {
                for t in 0..g.num_states() {
                    won[t] |= cur[t].is_some();
                }
            }
            return;
        }
        cur[s] = None;
        rec(g, s + 1, pair, cur, won);
        if !pair.l[s] {
            let actions: Vec<usize> = (0..g.num_ctrl(s)).collect();
            for d in subsets_of(&actions) {
                cur[s] = Some(d);
                rec(g, s + 1, pair, cur, won);
            }
            cur[s] = None;
        }
    }
    rec(g, 0, pair, &mut cur, &mut won);
    won
}
