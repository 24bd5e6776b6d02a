use nalgebra::DMatrix;

use crate::game::{GameError, Row, StochasticGame};

pub const POLICY_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Controller,
    Adversary,
}

/// A stationary randomized policy: `dist[s][a]` is the probability of the
/// owner's `a`-th action at state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPolicy {
    pub owner: Owner,
    pub dist: Vec<Vec<f64>>,
}

fn action_count(g: &StochasticGame, owner: Owner, s: usize) -> usize {
    match owner {
        Owner::Controller => g.num_ctrl(s),
        Owner::Adversary => g.num_adv(s),
    }
}

impl MixedPolicy {
    /// Validates shape and normalization against `g`.
    pub fn new(g: &StochasticGame, owner: Owner, dist: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let p = Self { owner, dist };
        p.validate(g)?;
        Ok(p)
    }

    pub fn uniform(g: &StochasticGame, owner: Owner) -> Self {
        let dist = (0..g.num_states())
            .map(|s| {
                let k = action_count(g, owner, s);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Self { owner, dist }
    }

    /// Point mass on `choice[s]` at every state.
    pub fn pure(g: &StochasticGame, owner: Owner, choice: &[usize]) -> Self {
        let dist = (0..g.num_states())
            .map(|s| {
                let mut row = vec![0.0; action_count(g, owner, s)];
                row[choice[s]] = 1.0;
                row
            })
            .collect();
        Self { owner, dist }
    }

    pub fn validate(&self, g: &StochasticGame) -> Result<(), GameError> {
        if self.dist.len() != g.num_states() {
            return Err(GameError::InvalidPolicy {
                state: self.dist.len().min(g.num_states()),
                message: "policy does not cover every state".into(),
            });
        }
        for (s, row) in self.dist.iter().enumerate() {
            if row.len() != action_count(g, self.owner, s) {
                return Err(GameError::InvalidPolicy {
                    state: s,
                    message: "wrong number of actions".into(),
                });
            }
            if row.iter().any(|&p| !(0.0..=1.0 + POLICY_SUM_TOL).contains(&p)) {
                return Err(GameError::InvalidPolicy {
                    state: s,
                    message: "probability outside [0, 1]".into(),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > POLICY_SUM_TOL {
                return Err(GameError::InvalidPolicy {
                    state: s,
                    message: format!("probabilities sum to {sum}"),
                });
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.dist.len()
    }

    /// True when every state puts all mass on one action.
    pub fn is_pure(&self) -> bool {
        self.dist
            .iter()
            .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1)
    }
}

/// A Markov chain stored as sparse rows sorted by successor.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    rows: Vec<Row>,
}

impl MarkovChain {
    pub fn from_rows(rows: Vec<Row>) -> Self {
        Self { rows }
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, s: usize) -> &[(usize, f64)] {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn prob(&self, s: usize, t: usize) -> f64 {
        let row = &self.rows[s];
        row.binary_search_by_key(&t, |&(x, _)| x)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                m[(s, t)] = p;
            }
        }
        m
    }

    /// Successor lists with positive probability.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(t, _)| t).collect())
            .collect()
    }
}

/// `P(s, s') = Σ_{uc, ua} μ(s, uc) τ(s, ua) Pr(s, uc, ua, s')`, accumulated
/// in `uc`-major, then `ua`, then successor order.
pub fn induced_chain(
    g: &StochasticGame,
    mu: &MixedPolicy,
    tau: &MixedPolicy,
) -> Result<MarkovChain, GameError> {
    if mu.owner != Owner::Controller {
        return Err(GameError::OwnerMismatch {
            expected: Owner::Controller,
        });
    }
    if tau.owner != Owner::Adversary {
        return Err(GameError::OwnerMismatch {
            expected: Owner::Adversary,
        });
    }
    mu.validate(g)?;
    tau.validate(g)?;
    let n = g.num_states();
    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for s in 0..n {
        for (uc, &pc) in mu.dist[s].iter().enumerate() {
            if pc == 0.0 {
                continue;
            }
            for (ua, &pa) in tau.dist[s].iter().enumerate() {
                let w = pc * pa;
                if w == 0.0 {
                    continue;
                }
                for &(t, p) in g.row(s, uc, ua) {
                    if acc[t] == 0.0 {
                        touched.push(t);
                    }
                    acc[t] += w * p;
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let row: Row = touched
            .iter()
            .map(|&t| (t, acc[t]))
            .filter(|&(_, p)| p > 0.0)
            .collect();
        for &t in &touched {
            acc[t] = 0.0;
        }
        touched.clear();
        rows.push(row);
    }
    Ok(MarkovChain { rows })
}
