use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A single invariant violation found in a [`ProblemInstance`](crate::ProblemInstance).
///
/// Group and entry indices are zero-based; `Display` names groups the way
/// the model writes them (`W_1`, `A_2`, ...).
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `scatter.len()` and `weights.len()` disagree, or the stated group count is off.
    GroupCount { scatter: usize, weights: usize },
    /// The instance has no groups or zero dimension.
    Empty,
    /// `W_g` is not `p x p`.
    ScatterShape { group: usize, rows: usize, cols: usize },
    /// Diagonal of `A_g` does not have length `p`.
    WeightLength { group: usize, len: usize },
    /// `W_g` has a non-finite entry.
    NonFiniteScatter { group: usize },
    /// `W_g` deviates from symmetry by more than the relative tolerance.
    Asymmetric { group: usize, relative: f64 },
    /// Cholesky factorization of `W_g` failed.
    NotPositiveDefinite { group: usize },
    /// `a_{g,index}` is zero, negative or not finite.
    NonPositiveWeight { group: usize, index: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GroupCount { scatter, weights } => write!(
                f,
                "group count mismatch: {scatter} scatter matrices but {weights} weight vectors"
            ),
            Violation::Empty => write!(f, "instance must have p >= 1 and G >= 1"),
            Violation::ScatterShape { group, rows, cols } => {
                write!(f, "W_{} (group {}) is {rows}x{cols}, expected square p x p", group + 1, group + 1)
            }
            Violation::WeightLength { group, len } => {
                write!(f, "A_{} (group {}) has {len} diagonal entries, expected p", group + 1, group + 1)
            }
            Violation::NonFiniteScatter { group } => {
                write!(f, "W_{} (group {}) has a non-finite entry", group + 1, group + 1)
            }
            Violation::Asymmetric { group, relative } => write!(
                f,
                "W_{} (group {}) is not symmetric (relative asymmetry {relative:.3e})",
                group + 1,
                group + 1
            ),
            Violation::NotPositiveDefinite { group } => {
                write!(f, "W_{} (group {}) is not positive-definite", group + 1, group + 1)
            }
            Violation::NonPositiveWeight { group, index, value } => write!(
                f,
                "A_{} (group {}) entry {index} is {value}, expected > 0",
                group + 1,
                group + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CpcError {
    #[error("invalid problem instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not orthonormal: |D'D - I|_F = {0:.3e}")]
    NotOrthonormal(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("power iteration did not converge in {iterations} iterations (last estimate {estimate})")]
    PowerIterationNotConverged { estimate: f64, iterations: usize },
    #[error("singular value decomposition failed: {0}")]
    Svd(String),
    #[error("{0}")]
    InvalidArgument(String),
}

fn join(violations: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (k, v) in violations.iter().enumerate() {
        if k > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{v}");
    }
    out
}

pub type Result<T, E = CpcError> = core::result::Result<T, E>;
