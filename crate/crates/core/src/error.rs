//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A phase point violates the sphere or tangency constraint beyond tolerance.
    #[error("invalid phase point: |<q,q>-1| = {q_defect:.3e}, |<q,p>| = {p_defect:.3e}")]
    InvalidPoint { q_defect: f64, p_defect: f64 },

    /// The constraint stage of an integration step failed to converge.
    #[error("constraint projection failed at t = {t}: {detail}")]
    ProjectionFailure { t: f64, detail: String },

    /// Invalid argument (step sizes, grid sizes, ranges, ids).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation that requires a Regular energy-momentum value got something else.
    #[error("value (I, E) = ({i}, {e}) is not Regular ({class})")]
    NonRegular { i: f64, e: f64, class: String },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed to converge: estimated error {err:.3e} > {tol:.3e}")]
    QuadratureFailure { err: f64, tol: f64 },

    /// Grid points of a scan are outside the Regular set.
    #[error("{count} grid points are not Regular; first offender (I, E) = ({i}, {e})")]
    NonRegularGrid { count: usize, i: f64, e: f64 },

    /// A root or inversion search failed to bracket/converge.
    #[error("root search failed: {0}")]
    RootSearch(String),

    /// Shrinking a frequency domain left nothing.
    #[error("frequency domain is empty after erosion by {erosion}")]
    EmptyDomain { erosion: f64 },

    /// Rotation-angle continuation ran out of refinement budget.
    #[error("refinement budget exhausted near ({i}, {e}); adjust the loop away from the singular set")]
    RefinementBudget { i: f64, e: f64 },

    /// The Newton iteration for an invariant torus diverged or stagnated.
    #[error("smallness violated: {0}")]
    SmallnessViolated(String),

    /// Fourier tail of a torus embedding does not decay to tail_tol at this grid size.
    #[error("grid too coarse: tail ratio {ratio:.3e} > {tol:.3e}; suggest N = {suggested}")]
    GridTooCoarse { ratio: f64, tol: f64, suggested: usize },

    /// A torus was requested at a frequency that fails the Diophantine test.
    #[error("frequency (omega1, omega2) = ({o1}, {o2}) fails the Diophantine condition (margin {margin:.3e})")]
    OffDiophantine { o1: f64, o2: f64, margin: f64 },

    /// Partition-of-unity cover leaves part of the domain uncovered.
    #[error("coverage gap: bump sum vanishes at (I, E) = ({i}, {e})")]
    CoverageGap { i: f64, e: f64 },

    /// Angle-difference field between two charts is not translation-like.
    #[error("overlap mismatch: deviation {deviation:.3e} exceeds {tol:.3e} at action ({a1}, {a2})")]
    OverlapMismatch { deviation: f64, tol: f64, a1: f64, a2: f64 },

    /// A torus solve inside a larger build failed.
    #[error("torus solve failed at action ({a1}, {a2}): {source}")]
    TorusSolve {
        a1: f64,
        a2: f64,
        #[source]
        source: Box<Error>,
    },

    /// Signal too short, constant, or otherwise unusable for frequency extraction.
    #[error("frequency extraction: {0}")]
    SignalUnusable(String),

    /// Serialized torus data is malformed.
    #[error("torus archive: {0}")]
    Archive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
