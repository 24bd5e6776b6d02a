//! The labeled concurrent stochastic game, mixed policies, induced Markov
//! chains and trajectory simulation.

mod model;
mod policy;
mod simulate;

pub use model::{load_game, parse_game, Row, StochasticGame, ROW_SUM_TOL};
pub use policy::{induced_chain, MarkovChain, MixedPolicy, Owner};
pub use simulate::{
    lasso_satisfaction, pairwise_sum, simulate, PolicySpec, SimulationConfig, SimulationStats,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("row ({state}, {uc}, {ua}) sums to {sum}")]
    RowSum {
        state: String,
        uc: String,
        ua: String,
        sum: f64,
    },
    #[error("state {0} has an empty action set")]
    EmptyActionSet(String),
    #[error("expected a {expected:?} policy")]
    OwnerMismatch { expected: Owner },
    #[error("policy invalid at state {state}: {message}")]
    InvalidPolicy { state: usize, message: String },
    #[error("cannot read {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl GameError {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        GameError::Format {
            line,
            message: message.into(),
        }
    }
}
