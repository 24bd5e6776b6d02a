//! Secure control synthesis for concurrent stochastic Stackelberg games
//! under LTL constraints.
//!
//! The pipeline: a labeled stochastic game ([`game::StochasticGame`]) is
//! composed with a deterministic Rabin automaton ([`automata::Dra`]) into a
//! [`product::ProductGame`]. Accepting end components are found by
//! [`gamec::compute_gamecs`]. [`reachability`] then maximizes the worst-case
//! probability of reaching them, and [`acpc`] minimizes the long-run cost of
//! invariant violations inside them.

pub mod abstraction;
pub mod acpc;
pub mod automata;
pub mod error;
pub mod formats;
pub mod game;
pub mod gamec;
pub mod ltl;
pub mod matrix_game;
pub mod product;
pub mod reachability;
pub mod scc;

pub use error::Error;
