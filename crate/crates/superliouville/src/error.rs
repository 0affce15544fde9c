//! Error type shared by every module of the library.

use crate::clifford2d::Vector2;
use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
///
/// Construction-time validation (grids, spin directions, thresholds) and
/// run-time failures (convergence, domain violations) share one enum so that
/// callers — in particular the CLI — can map every failure to a stable exit
/// code.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A grid with fewer than 3 nodes per axis cannot host the interior
    /// stencils.
    #[error("grid too small: {nx}x{ny} nodes (need at least 3 per axis)")]
    GridTooSmall { nx: usize, ny: usize },

    /// A point needed for interpolation or transformation lies outside the
    /// source grid hull.
    #[error("point ({}, {}) lies outside the grid domain", point.x1, point.x2)]
    OutOfDomain { point: Vector2 },

    /// A Kelvin-transform target node lies inside the excluded neighbourhood
    /// of the inversion centre.
    #[error("point ({}, {}) is within the excluded radius of the inversion singularity", point.x1, point.x2)]
    SingularPoint { point: Vector2 },

    /// A spin direction must be a unit spinor (|v| = 1 within 1e-12).
    #[error("spin direction has norm {norm}, expected a unit spinor")]
    InvalidSpinDirection { norm: f64 },

    /// Newton iteration exhausted `max_iters` (or stalled in backtracking)
    /// without meeting the residual tolerance.
    #[error("Newton iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The inner Krylov solve stagnated before reaching its tolerance.
    #[error("linear solver stagnated: relative residual {residual:.3e} after {iterations} iterations")]
    LinearSolveFailure { iterations: usize, residual: f64 },

    /// Holomorphy/stress diagnostics require a constant-curvature background
    /// (flat or sphere preset).
    #[error("diagnostic requires a constant-curvature metric preset")]
    NonConstantCurvature,

    /// Holomorphy of the quadratic differential is only meaningful on
    /// (approximate) solutions; the residual gate was exceeded.
    #[error("pair is not a solution: residual {residual:.3e} exceeds gate {gate:.3e}")]
    NotASolution { residual: f64, gate: f64 },

    /// An annulus for asymptotic fitting contains no grid nodes.
    #[error("annulus ({r1}, {r2}) contains no grid nodes")]
    EmptyAnnulus { r1: f64, r2: f64 },

    /// Concentration detection requires a small-energy threshold in (0, π).
    #[error("invalid concentration threshold {epsilon0}: must lie in (0, pi)")]
    InvalidThreshold { epsilon0: f64 },

    /// A ball for local-mass quadrature must lie inside the grid hull.
    #[error("ball of radius {radius} at ({}, {}) is not contained in the grid", center.x1, center.x2)]
    BallOutsideGrid { center: Vector2, radius: f64 },
}
