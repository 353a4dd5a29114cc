use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cost kernel non-positive at source {i}, target {j}: K = {value:.6e}; increase ell")]
    NonPositiveKernel { i: usize, j: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible reduced path length: probe margin {margin:.6e} <= 0; increase ell")]
    InfeasibleEll { margin: f64 },

    #[error("no feasible ell found below cap {cap:.3e}")]
    NoFeasibleEll { cap: f64 },

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("total masses differ beyond tolerance: source {src:.12e}, target {tgt:.12e}")]
    MassMismatch { src: f64, tgt: f64 },

    #[error("unbalanced transport instance: source mass {src:.12e}, target mass {tgt:.12e}")]
    Unbalanced { src: f64, tgt: f64 },

    #[error("solver stalled after {pivots} pivots (duality gap above tolerance)")]
    Stalled {
        pivots: usize,
        /// Best solution found so far; its certificate records the violations.
        solution: Box<crate::transport::TransportSolution>,
    },

    #[error("instance too large for brute force: n = {0} (max 7)")]
    TooLarge(usize),

    #[error("brute-force oracle requires equal weights")]
    UnequalWeights,

    #[error("potentials are not tight: {0}")]
    NotTight(String),

    #[error("target {j} is not in the reflector map image of source {i}")]
    NotSupporting { i: usize, j: usize },

    #[error("point is not on the quadric surface (residual {0:.3e})")]
    NotOnSurface(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),
}
