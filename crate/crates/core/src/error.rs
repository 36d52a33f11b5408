use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank must be at least 2, got {0}")]
    RankTooSmall(usize),

    #[error("rank {0} exceeds the supported maximum of 7")]
    RankTooLarge(usize),

    #[error("expected {expected} differentials for rank {rank}, got {got}")]
    DifferentialCount {
        rank: usize,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not trace-free: |tr| = {trace:e} exceeds {tol:e}")]
    NotTraceFree { trace: f64, tol: f64 },

    #[error("metric weights do not sum to zero (sum = {0:e})")]
    WeightSum(f64),

    #[error("section Jacobian diagonal entry {degree} is degenerate ({value:e})")]
    DegenerateSection { degree: usize, value: f64 },

    #[error("Beltrami coefficient has sup norm {0} >= 1")]
    BeltramiTooLarge(f64),

    #[error("mesh identification mismatch: {0}")]
    Identification(String),

    #[error("map is not equivariant: {0}")]
    NotEquivariant(String),

    #[error("image point left the disk (|z| = {0})")]
    LeftDisk(f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("quadratic differential unbounded near boundary: {0}")]
    Unbounded(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("directions are linearly dependent (Gram eigenvalue ratio {0:e})")]
    DependentDirections(f64),

    #[error("disk cell ({i}, {j}) failed: {source}")]
    Cell {
        i: i64,
        j: i64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
