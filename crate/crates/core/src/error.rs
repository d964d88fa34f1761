use thiserror::Error;

/// Errors raised by the formation toolkit.
///
/// Vertex labels carried in errors are zero-based; user-facing layers add one
/// when printing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormationError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("no edge between vertices {0} and {1}")]
    UnknownEdge(usize, usize),

    #[error("infeasible separation for pair {{{i}, {j}}}: d = {distance} <= 2r = {}", 2.0 * radius)]
    Infeasible {
        i: usize,
        j: usize,
        distance: f64,
        radius: f64,
    },
    #[error("infeasible separation d = {distance} <= 2r = {}", 2.0 * radius)]
    BelowContact { distance: f64, radius: f64 },
    #[error("cosine {0} outside the feasible interval (1/2, 1)")]
    CosineOutOfRange(f64),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("angle error {e} outside the feasible interval ({lower}, {upper})")]
    ErrorOutOfDomain { e: f64, lower: f64, upper: f64 },
    #[error("bearing sum vanished for observer {0}; measurements are outside the feasible cone")]
    DegenerateBearing(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("edge {{{0}, {1}}} has no angle constraint")]
    MissingConstraint(usize, usize),
    #[error("constraint list is empty")]
    EmptyConstraints,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at t = {t}: edge {{{i}, {j}}} cannot be advanced feasibly (d = {distance}); the barrier is resolved too coarsely, try a smaller dt")]
    StepUnderflow {
        t: f64,
        i: usize,
        j: usize,
        distance: f64,
    },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("window [{start}, {end}] is outside the trace span [{t0}, {t1}]")]
    WindowOutsideTrace {
        start: f64,
        end: f64,
        t0: f64,
        t1: f64,
    },
    #[error("target framework is not infinitesimally rigid (rank {rank}, expected {expected})")]
    NotRigid { rank: usize, expected: usize },
    #[error("target framework is not minimally rigid ({edges} edges, expected {expected})")]
    NotMinimallyRigid { edges: usize, expected: usize },
    #[error("rejection sampling failed after {0} attempts")]
    SamplingFailed(usize),
    #[error("constraints are not realizable in the plane: {0}")]
    Realization(String),
}

pub type Result<T> = std::result::Result<T, FormationError>;
