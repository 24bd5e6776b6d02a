//! Synthesis pipelines shared by the commands.

use rayon::prelude::*;

use sls_core::acpc::{
    adversary_best_response, assign_costs, policy_iteration, progress_policy, repair_traps, AcpcError, AcpcResult,
    CostAssignment, GainBias, LocalPolicy, PiOptions, SubGame,
};
use sls_core::automata::Dra;
use sls_core::game::{MixedPolicy, Owner, Row, StochasticGame};
use sls_core::gamec::{compute_gamecs, winning_region, Gamec, GamecSet, WinningRegion};
use sls_core::ltl::Ltl;
use sls_core::product::{build_product, Mode, ProductGame};
use sls_core::reachability::{
    extract_policy, max_reach_value_iteration, modify_product_winning, project_policy, worst_case_satisfaction,
    ReachGame, ValueVector, ViOptions,
};
use sls_core::Error;

/// Result of maximizing the worst-case satisfaction probability.
#[derive(Debug, Clone)]
pub struct MaxProb {
    pub product: ProductGame,
    pub gamecs: GamecSet,
    /// Reachability target; contains every GAMEC.
    pub winning: WinningRegion,
    pub reach: ReachGame,
    pub values: ValueVector,
    /// Controller policy on the product states.
    pub policy: MixedPolicy,
}

impl MaxProb {
    /// Value when the game starts in base state `s`.
    pub fn start_value(&self, s: usize) -> f64 {
        self.values.v[self.product.start_of(s)]
    }
}

pub fn max_prob(g: &StochasticGame, dra: &Dra, vi: &ViOptions) -> Result<MaxProb, Error> {
    let product = build_product(g, dra)?;
    let gamecs = compute_gamecs(&product);
    let winning = winning_region(&product.game, &product.pairs, &product.reachable);
    let reach = modify_product_winning(&product, &winning);
    let values = max_reach_value_iteration(&reach, vi)?;
    let ext = extract_policy(&reach, &values)?;
    let policy = project_policy(&reach, &ext);
    Ok(MaxProb {
        product,
        gamecs,
        winning,
        reach,
        values,
        policy,
    })
}

/// Rabin masks `(L, K)` over product states.
pub fn rabin_masks(p: &ProductGame) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    (
        p.pairs.iter().map(|z| z.l.clone()).collect(),
        p.pairs.iter().map(|z| z.k.clone()).collect(),
    )
}

/// Exact worst-case satisfaction of a product policy, with the adversary
/// that attains it.
pub fn worst_case(p: &ProductGame, mu: &MixedPolicy) -> Result<(MixedPolicy, Vec<f64>), Error> {
    let (l, k) = rabin_masks(p);
    Ok(worst_case_satisfaction(&p.game, mu, &l, &k)?)
}

/// The same game with a single adversary action `uniform` that averages
/// the original ones.
pub fn marginalize_adversary(g: &StochasticGame) -> StochasticGame {
    let n = g.num_states();
    let mut kernel: Vec<Vec<Row>> = Vec::with_capacity(n);
    for s in 0..n {
        let na = g.num_adv(s) as f64;
        let rows = (0..g.num_ctrl(s))
            .map(|uc| {
                let mut acc: Row = (0..g.num_adv(s))
                    .flat_map(|ua| g.row(s, uc, ua).iter().map(|&(t, p)| (t, p / na)))
                    .collect();
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
            .collect();
        kernel.push(rows);
    }
    StochasticGame::new(
        g.state_names().to_vec(),
        g.alphabet().clone(),
        g.labels().to_vec(),
        (0..n).map(|s| g.ctrl_actions(s).to_vec()).collect(),
        vec![vec!["uniform".to_string()]; n],
        kernel,
        g.initial(),
    )
    .expect("averaged rows stay stochastic")
}

/// The adversary-oblivious controller: optimal against a uniformly random
/// adversary. Its product has the same state indexing as the real one.
pub fn baseline_max_prob(g: &StochasticGame, dra: &Dra, vi: &ViOptions) -> Result<MaxProb, Error> {
    max_prob(&marginalize_adversary(g), dra, vi)
}

#[derive(Debug, Clone)]
pub struct CycleSolution {
    /// Index into the GAMEC list.
    pub component: usize,
    pub states: Vec<usize>,
    pub result: AcpcResult,
}

#[derive(Debug, Clone)]
pub struct MinViolation {
    pub max_prob: MaxProb,
    pub cost: CostAssignment,
    pub solutions: Vec<CycleSolution>,
    /// Components where policy iteration failed, with the reason.
    pub failures: Vec<(usize, String)>,
    /// `μ_cycle` on `E`, `μ_reach` elsewhere.
    pub policy: MixedPolicy,
    pub modes: Vec<Mode>,
}

impl MinViolation {
    /// Solution with the lowest gain.
    pub fn best(&self) -> Option<&CycleSolution> {
        self.solutions
            .iter()
            .min_by(|a, b| a.result.gain().total_cmp(&b.result.gain()).then(a.component.cmp(&b.component)))
    }
}

pub fn min_violation(
    g: &StochasticGame,
    dra: &Dra,
    psi: &Ltl,
    alpha: f64,
    vi: &ViOptions,
    pi: &PiOptions,
) -> Result<MinViolation, Error> {
    let cost_base = assign_costs(g, psi, alpha)?;
    let mp = max_prob(g, dra, vi)?;
    let p = &mp.product;
    let cost = CostAssignment {
        alpha,
        g: (0..p.num_states()).map(|i| cost_base.g[p.split(i).0]).collect(),
    };
    let outcomes: Vec<(usize, Result<AcpcResult, AcpcError>)> = mp
        .gamecs
        .components
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let r = SubGame::from_gamec(&p.game, c, &p.pairs).and_then(|sub| {
                let mu0 = progress_policy(&sub)?.0;
                policy_iteration(&sub, &cost, Some(mu0), None, pi)
            });
            (i, r)
        })
        .collect();

    let mut policy = mp.policy.clone();
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in outcomes {
        let c = &mp.gamecs.components[i];
        match r {
            Ok(result) => {
                for (k, &s) in c.states.iter().enumerate() {
                    let row = &mut policy.dist[s];
                    row.iter_mut().for_each(|x| *x = 0.0);
                    for (j, &uc) in c.enabled[k].iter().enumerate() {
                        row[uc] = result.mu[k][j];
                    }
                }
                solutions.push(CycleSolution {
                    component: i,
                    states: c.states.clone(),
                    result,
                });
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    let modes = mp
        .gamecs
        .accepting
        .iter()
        .map(|&e| if e { Mode::Cycle } else { Mode::Reach })
        .collect();
    Ok(MinViolation {
        max_prob: mp,
        cost,
        solutions,
        failures,
        policy,
        modes,
    })
}

/// Adversary-oblivious policy on a component: optimal against the uniform
/// adversary, with the same trap repair as the secure policy, then
/// evaluated against the real best response.
pub fn baseline_cycle(
    p: &ProductGame,
    marginal: &ProductGame,
    c: &Gamec,
    cost: &CostAssignment,
    pi: &PiOptions,
) -> Result<(LocalPolicy, GainBias), AcpcError> {
    let sub_m = SubGame::from_gamec(&marginal.game, c, &marginal.pairs)?;
    let mu0 = progress_policy(&sub_m)?.0;
    let mut mu = policy_iteration(&sub_m, cost, Some(mu0), None, pi)?.mu;
    let sub = SubGame::from_gamec(&p.game, c, &p.pairs)?;
    repair_traps(&sub, &mut mu);
    let (_, gb) = adversary_best_response(&sub, &mu, cost, pi.solver)?;
    Ok((mu, gb))
}

/// Product of the marginalized game, aligned with `p`.
pub fn marginal_product(g: &StochasticGame, dra: &Dra) -> Result<ProductGame, Error> {
    Ok(build_product(&marginalize_adversary(g), dra)?)
}

/// Uniform adversary on every product state.
pub fn uniform_adversary(p: &ProductGame) -> MixedPolicy {
    MixedPolicy::uniform(&p.game, Owner::Adversary)
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}
