use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("wavefunctions live on different grids")]
    GridMismatch,

    #[error("requested {requested} bound states but only {found} were found")]
    TooFewBoundStates { requested: usize, found: usize },

    #[error("fit did not converge: {0}")]
    FitFailed(String),

    #[error("momentum {p} is below the Born-series cutoff {p_min}")]
    MomentumBelowCutoff { p: f64, p_min: f64 },

    #[error("Born series diverged at p = {p} after {order} orders")]
    BornDiverged { p: f64, order: usize },

    #[error("Born series did not reach tolerance at p = {p} within {order} orders (change {change:e})")]
    BornNotConverged { p: f64, order: usize, change: f64 },

    #[error("momentum {p} outside dipole table window [{lo}, {hi}]")]
    OutsideTable { p: f64, lo: f64, hi: f64 },

    #[error("time grid is not strictly increasing at index {0}")]
    UnsortedGrid(usize),

    #[error("wrap-around watchdog tripped at t = {t} (edge probability {probability:e})")]
    WrapAround { t: f64, probability: f64 },

    #[error("norm drift {drift:e} exceeds tolerance at t = {t}")]
    NormDrift { t: f64, drift: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("bound-state contamination: overlap {overlap:e} with bound state {index}")]
    BoundContamination { index: usize, overlap: f64 },

    #[error("no interior density minimum in [{lo}, {hi}]; the humps are merged, try a shorter XUV pulse")]
    NoSplitMinimum { lo: f64, hi: f64 },

    #[error("zero norm: {0}")]
    ZeroNorm(&'static str),

    #[error("found {found} fringes in window, need at least 3")]
    TooFewFringes { found: usize },

    #[error("negative radicand {0:e} in launch velocity")]
    NegativeRadicand(f64),

    #[error("reflected trajectory never reached the wall before t = {0}")]
    WallNotReached(f64),

    #[error("trajectory energy drift {drift:e} exceeds tolerance after step refinement")]
    EnergyDrift { drift: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
