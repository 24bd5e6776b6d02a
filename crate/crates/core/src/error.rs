use thiserror::Error;

use crate::abstraction::AbstractionError;
use crate::acpc::AcpcError;
use crate::automata::DraError;
use crate::formats::FormatError;
use crate::game::GameError;
use crate::ltl::LtlError;
use crate::matrix_game::MatrixGameError;
use crate::product::ProductError;
use crate::reachability::ReachError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Dra(#[from] DraError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Matrix(#[from] MatrixGameError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Acpc(#[from] AcpcError),
}

impl Error {
    /// Errors caused by malformed or inconsistent inputs, as opposed to
    /// numerical failures during synthesis.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Ltl(_) | Error::Dra(_) | Error::Game(_) | Error::Product(_) | Error::Format(_) => true,
            Error::Abstraction(e) => !matches!(e, AbstractionError::DegenerateRegion(_)),
            Error::Acpc(e) => matches!(e, AcpcError::NotInvariantForm | AcpcError::InvalidAlpha(_)),
            Error::Matrix(e) => matches!(e, MatrixGameError::InvalidPayoff),
            Error::Reach(_) => false,
        }
    }
}
