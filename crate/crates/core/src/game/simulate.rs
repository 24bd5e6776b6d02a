use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::automata::Dra;
use crate::game::{MarkovChain, MixedPolicy, StochasticGame};
use crate::ltl::{evaluate_on_lasso, LassoWord, Ltl, PropSet};
use crate::scc;

/// How a policy is looked up during simulation.
#[derive(Debug, Clone, Copy)]
pub enum PolicySpec<'a> {
    /// Indexed by game state.
    Stationary(&'a MixedPolicy),
    /// Indexed by product state `s * |Q| + q`, tracking the automaton online.
    Tracked(&'a MixedPolicy),
}

impl PolicySpec<'_> {
    fn dist(&self, s: usize, q: usize, nq: usize) -> &[f64] {
        match self {
            PolicySpec::Stationary(p) => &p.dist[s],
            PolicySpec::Tracked(p) => &p.dist[s * nq + q],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationConfig<'a> {
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Start state; defaults to the game's initial state.
    pub start: Option<usize>,
    /// Per game state cost charged on every step taken from that state.
    pub cost: Option<&'a [f64]>,
    /// Accepting product states; a run succeeds if it enters this set and
    /// never leaves it. Without it, the Rabin condition is checked on the
    /// automaton states seen in the second half of the run.
    pub accepting: Option<&'a [bool]>,
    /// Product states whose visits count as completed cycles. Defaults to
    /// states whose automaton component lies in some `K(z)`.
    pub cycle_set: Option<&'a [bool]>,
    /// Number of leading runs whose state sequence is kept.
    pub keep_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationStats {
    pub runs: usize,
    pub horizon: usize,
    pub successes: usize,
    pub satisfaction_estimate: f64,
    pub cycles_completed: Vec<usize>,
    /// Mean and variance over runs with at least two cycle visits of the
    /// cost accumulated between the first and last visit divided by the
    /// number of cycles in between.
    pub violation_cost_per_cycle: (f64, f64),
    /// Total cost over total completed cycles, pooled across runs.
    pub pooled_cost_per_cycle: f64,
    pub trajectories: Vec<Vec<usize>>,
}

struct RunResult {
    success: bool,
    cycles: usize,
    cost: f64,
    trajectory: Option<Vec<usize>>,
}

/// Generator for run `run` under `seed`: one ChaCha stream per run, so the
/// outcome does not depend on scheduling.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

pub(crate) fn sample_index(rng: &mut impl Rng, weights: impl IntoIterator<Item = f64>) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.into_iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if r < acc {
            return i;
        }
    }
    last
}

/// Sum by recursive halving; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Samples trajectories of the game under `(mu, tau)` while running `dra`
/// on the labels. Satisfaction is a horizon-truncated estimate only.
pub fn simulate(
    g: &StochasticGame,
    mu: PolicySpec<'_>,
    tau: PolicySpec<'_>,
    dra: &Dra,
    cfg: &SimulationConfig<'_>,
) -> SimulationStats {
    let nq = dra.num_states();
    let default_cycle: Vec<bool>;
    let cycle_set = match cfg.cycle_set {
        Some(c) => c,
        None => {
            default_cycle = (0..g.num_states() * nq)
                .map(|i| dra.pairs().iter().any(|p| p.k[i % nq]))
                .collect();
            &default_cycle
        }
    };

    let results: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(cfg.seed, run as u64);
            let mut s = cfg.start.unwrap_or(g.initial());
            let mut q = dra.step(dra.initial(), g.label(s));
            let keep = run < cfg.keep_trajectories;
            let mut traj = keep.then(|| vec![s]);
            let mut entered_at: Option<usize> = None;
            let mut tail_inf = vec![false; nq];
            let mut visits = 0usize;
            let mut cost = 0.0;
            let mut pending = 0.0;
            let half = cfg.horizon / 2;
            for t in 0..=cfg.horizon {
                let ps = s * nq + q;
                if let Some(e) = cfg.accepting {
                    if e[ps] {
                        entered_at.get_or_insert(t);
                    } else {
                        entered_at = None;
                    }
                }
                if t >= half {
                    tail_inf[q] = true;
                }
                if cycle_set[ps] {
                    if visits > 0 {
                        cost += pending;
                    }
                    pending = 0.0;
                    visits += 1;
                }
                if t == cfg.horizon {
                    break;
                }
                if let Some(c) = cfg.cost {
                    pending += c[s];
                }
                let uc = sample_index(&mut rng, mu.dist(s, q, nq).iter().copied());
                let ua = sample_index(&mut rng, tau.dist(s, q, nq).iter().copied());
                let row = g.row(s, uc, ua);
                let k = sample_index(&mut rng, row.iter().map(|&(_, p)| p));
                s = row[k].0;
                q = dra.step(q, g.label(s));
                if let Some(tr) = traj.as_mut() {
                    tr.push(s);
                }
            }
            let success = match cfg.accepting {
                Some(_) => entered_at.is_some(),
                None => dra.accepts_inf_set(&tail_inf),
            };
            RunResult {
                success,
                cycles: visits,
                cost,
                trajectory: traj,
            }
        })
        .collect();

    let successes = results.iter().filter(|r| r.success).count();
    let per_run: Vec<f64> = results
        .iter()
        .filter(|r| r.cycles >= 2)
        .map(|r| r.cost / (r.cycles - 1) as f64)
        .collect();
    let mean = if per_run.is_empty() {
        0.0
    } else {
        pairwise_sum(&per_run) / per_run.len() as f64
    };
    let var = if per_run.len() < 2 {
        0.0
    } else {
        let sq: Vec<f64> = per_run.iter().map(|x| (x - mean) * (x - mean)).collect();
        pairwise_sum(&sq) / (per_run.len() - 1) as f64
    };
    let costs: Vec<f64> = results.iter().map(|r| r.cost).collect();
    let cycles: usize = results.iter().map(|r| r.cycles.saturating_sub(1)).sum();
    let pooled = if cycles == 0 {
        0.0
    } else {
        pairwise_sum(&costs) / cycles as f64
    };

    SimulationStats {
        runs: cfg.runs,
        horizon: cfg.horizon,
        successes,
        satisfaction_estimate: if cfg.runs == 0 {
            0.0
        } else {
            successes as f64 / cfg.runs as f64
        },
        cycles_completed: results.iter().map(|r| r.cycles).collect(),
        violation_cost_per_cycle: (mean, var),
        pooled_cost_per_cycle: pooled,
        trajectories: results.into_iter().filter_map(|r| r.trajectory).collect(),
    }
}

/// Shortest path from `from` to `to` inside the node set `inside`,
/// excluding `from` and including `to`.
fn bfs_path(chain: &MarkovChain, inside: &[bool], from: usize, to: usize) -> Vec<usize> {
    if from == to {
        return Vec::new();
    }
    let n = chain.num_states();
    let mut parent = vec![usize::MAX; n];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &(w, _) in chain.row(v) {
            if inside[w] && parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = to;
    while v != from {
        path.push(v);
        v = parent[v];
    }
    path.reverse();
    path
}

/// Monte Carlo satisfaction of `formula` on the chain's label sequence.
///
/// Each run follows the chain from `start` until it enters a bottom
/// strongly connected component, which almost surely it then never leaves
/// and covers infinitely often. The sampled path becomes the lasso prefix
/// and a closed walk through the whole component becomes the cycle, so the
/// lasso has the same infinitely-visited states as the sampled run.
/// Returns the number of satisfying runs.
pub fn lasso_satisfaction(
    chain: &MarkovChain,
    labels: &[PropSet],
    start: usize,
    formula: &Ltl,
    runs: usize,
    seed: u64,
) -> usize {
    let n = chain.num_states();
    let adj = chain.successors();
    let bottoms = scc::bottom_components(&adj);
    let mut bottom_of = vec![usize::MAX; n];
    for (i, b) in bottoms.iter().enumerate() {
        for &v in b {
            bottom_of[v] = i;
        }
    }
    // Per bottom component: closed walk from its smallest node covering all.
    let tours: Vec<Vec<usize>> = bottoms
        .iter()
        .map(|b| {
            let mut inside = vec![false; n];
            for &v in b {
                inside[v] = true;
            }
            let root = b[0];
            let mut tour = vec![root];
            let mut covered = vec![false; n];
            covered[root] = true;
            let mut cur = root;
            for &v in b {
                if !covered[v] {
                    for w in bfs_path(chain, &inside, cur, v) {
                        covered[w] = true;
                        tour.push(w);
                    }
                    cur = v;
                }
            }
            let back = bfs_path(chain, &inside, cur, root);
            tour.extend(&back[..back.len().saturating_sub(1)]);
            if b.len() == 1 {
                tour.truncate(1);
            }
            tour
        })
        .collect();

    (0..runs)
        .into_par_iter()
        .filter(|&run| {
            let mut rng = run_rng(seed, run as u64);
            let mut s = start;
            let mut prefix: Vec<PropSet> = Vec::new();
            while bottom_of[s] == usize::MAX {
                prefix.push(labels[s].clone());
                let row = chain.row(s);
                let k = sample_index(&mut rng, row.iter().map(|&(_, p)| p));
                s = row[k].0;
            }
            let b = bottom_of[s];
            let mut inside = vec![false; n];
            for &v in &bottoms[b] {
                inside[v] = true;
            }
            prefix.push(labels[s].clone());
            for w in bfs_path(chain, &inside, s, bottoms[b][0]) {
                prefix.push(labels[w].clone());
            }
            prefix.pop();
            let cycle: Vec<PropSet> = tours[b].iter().map(|&v| labels[v].clone()).collect();
            let word = LassoWord { prefix, cycle };
            evaluate_on_lasso(formula, &word)
        })
        .count()
}
