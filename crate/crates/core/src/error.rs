use thiserror::Error;

/// Errors raised by the polynomial, linear-algebra and construction layers.
///
/// Outcomes of a *check* (a representation that does not match, a sampled
/// counterexample to hyperbolicity) are reported through [`crate::Report`] or
/// [`crate::hyper::Verdict`], not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    VariableIndex { index: usize, nvars: usize },
    #[error("target degree {target} is below the polynomial degree {degree}")]
    DegreeTooLow { target: u32, degree: u32 },
    #[error("multidegree {multidegree:?} does not dominate degrees {degrees:?}")]
    NotDominated {
        multidegree: Vec<u32>,
        degrees: Vec<u32>,
    },
    #[error("singular Möbius map (ad - bc = {0:e})")]
    SingularMobius(f64),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("root {root} lies within {tol:e} of the region boundary")]
    AmbiguousRoot { root: String, tol: f64 },
    #[error("eigenvalue iteration did not converge after {0} iterations")]
    EigenNoConvergence(usize),
    #[error("matrix is not self-adjoint (relative defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("eigenvalue {value} is ill-separated from 1 (distance {distance:e})")]
    IllSeparated { value: String, distance: f64 },
    #[error("diagonal entry {0} equals 1 within the separation threshold")]
    EigenvalueAtOne(String),
    #[error("Gram matrices of the isometry pairs differ by {mismatch:e} (tolerance {tol:e})")]
    GramMismatch { mismatch: f64, tol: f64 },
    #[error("polynomial is not homogeneous (relative defect {0:e})")]
    NotHomogeneous(f64),
    #[error("point lies on the zero set")]
    OnZeroSet,
    #[error("pencil has no (B+, B-) split")]
    MissingSplit,
    #[error("interpolation failed: {0}")]
    Interpolation(String),
    #[error("identity violated: {0}")]
    IdentityViolation(String),
    #[error("inertia ({n1}, {n2}) inconsistent with {roots} roots in the disk")]
    InertiaMismatch { n1: usize, n2: usize, roots: usize },
    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("zero detected on the torus grid near {0}")]
    ZeroOnGrid(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no nonsingular direction among {0} candidates")]
    NoNonsingularDirection(usize),
    #[error("factor depending on z1 alone detected: {0}")]
    FirstVariableFactor(String),
    #[error("pencil size k = {k} differs from degree d = {d}: {evidence}")]
    SizeMismatch { k: usize, d: usize, evidence: String },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
