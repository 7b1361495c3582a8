use thiserror::Error;

use crate::analysis::FateReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catenoid scale must be positive, got a = {0}")]
    NonPositiveScale(f64),

    #[error("graph chart not regular at y = {y}: phi = {phi} reaches bound {bound}")]
    Regularity { y: f64, phi: f64, bound: f64 },

    #[error("hyperbolicity lost at y = {y}: principal coefficient {coefficient}")]
    HyperbolicityLoss { y: f64, coefficient: f64 },

    #[error("state is not Lorentzian at y = {y}: K = {k}, B = {b}")]
    NonLorentzian { y: f64, k: f64, b: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no negative eigenvalue on [0, {y_max}]: domain too small")]
    DomainTooSmall { y_max: f64 },

    #[error("discretization produced {0} negative eigenvalues, expected exactly one")]
    SpuriousBoundStates(usize),

    #[error("eigenvalue iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("cylinder collapsed: R = {radius} at t = {t}")]
    CylinderCollapse { t: f64, radius: f64 },

    #[error("decay fit undefined: {0}")]
    FitUndefined(String),

    #[error("shooting bracket invalid: endpoint fates {:?} and {:?} do not differ", lo.fate, hi.fate)]
    BracketInvalid {
        lo: Box<FateReport>,
        hi: Box<FateReport>,
    },

    #[error("shooting inconclusive: {0}")]
    Inconclusive(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
