//! Dense kernels used by the solvers: SVD-backed Procrustes steps, dominant
//! eigenvalues by power iteration, and the closed-form symmetric 2x2
//! eigensolver behind the pairwise rotation update.

use alloc::format;
use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, QR};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CpcError, Result};
use crate::problem::OrthonormalMatrix;

/// Default relative tolerance for [`power_iteration`].
pub const POWER_REL_TOL: f64 = 1e-12;
/// Default iteration cap for [`power_iteration`].
pub const POWER_MAX_ITER: usize = 10_000;

/// Symmetry tolerance on inputs to the eigenvalue routines, relative to the
/// largest entry magnitude (absolute below 1).
const SYMMETRY_TOL: f64 = 1e-10;

/// `F = left * diag(singulars) * right'`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub left: DMatrix<f64>,
    /// Non-negative, non-increasing.
    pub singulars: DVector<f64>,
    pub right: DMatrix<f64>,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (k, s) in self.singulars.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*s);
        }
        scaled * self.right.transpose()
    }
}

/// Full SVD of a square matrix with singular values sorted non-increasing.
pub fn svd(m: &DMatrix<f64>) -> Result<SvdTriple> {
    if !m.is_square() {
        return Err(CpcError::DimensionMismatch {
            what: "svd input columns",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(CpcError::NonFinite);
    }
    // nalgebra's implicit-shift SVD loses accuracy on nearly orthogonal
    // inputs, which is exactly what MM steps produce near convergence
    let n = m.nrows();
    let dec = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)])
        .svd()
        .map_err(|e| CpcError::Svd(format!("{e:?} on {n}x{n} input")))?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    Ok(SvdTriple {
        left: DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
        singulars: DVector::from_fn(n, |i, _| s[i]),
        right: DMatrix::from_fn(n, n, |i, j| v[(i, j)]),
    })
}

/// Minimizer of `tr(F D)` over orthonormal `D`.
///
/// With `F = P B R'`, `tr(F D) = tr(B R' D P)` is smallest when `R' D P = -I`,
/// so the minimizer is `-R P'` and the minimum is `-sum(singulars)`.
/// (`R P'` is the maximizer.)
pub fn procrustes_minimizer(f: &DMatrix<f64>) -> Result<OrthonormalMatrix> {
    let dec = svd(f)?;
    let d = -(&dec.right * dec.left.transpose());
    Ok(OrthonormalMatrix::from_raw(d))
}

/// Largest absolute asymmetry `max |s_ij - s_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(CpcError::DimensionMismatch {
            what: "symmetric matrix columns",
            expected: s.nrows(),
            found: s.ncols(),
        });
    }
    if s.nrows() == 0 {
        return Err(CpcError::InvalidArgument("empty matrix".into()));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(CpcError::NonFinite);
    }
    let scale = s.amax().max(1.0);
    let asym = asymmetry(s);
    if asym > SYMMETRY_TOL * scale {
        return Err(CpcError::NotSymmetric(asym));
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, ascending, from a dense
/// decomposition.
pub fn symmetric_eigenvalues(s: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_symmetric(s)?;
    let mut values: alloc::vec::Vec<f64> = SymmetricEigen::new(s.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(DVector::from_vec(values))
}

fn dense_dominant(s: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(s.clone()).eigenvalues.max()
}

/// Dominant eigenvalue of a symmetric positive-semidefinite matrix.
///
/// Starts from the normalized all-ones vector and iterates `v <- S v / |S v|`,
/// tracking the Rayleigh quotient. The quotient approaches its limit
/// geometrically, so the remaining error is extrapolated from the ratio of
/// successive changes. When that ratio sits at 1 (tied or nearly tied
/// dominant pair) or the limit is provably not the dominant eigenvalue
/// (below the largest diagonal entry) the estimate is replaced by a dense
/// symmetric decomposition.
pub fn power_iteration(s: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> Result<f64> {
    check_symmetric(s)?;
    if !(rel_tol > 0.0) {
        return Err(CpcError::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let n = s.nrows();
    if n == 1 {
        return Ok(s[(0, 0)]);
    }
    let diag_max = s.diagonal().max();

    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut w = s * &v;
    let mut lambda = v.dot(&w);
    let mut prev_delta: Option<f64> = None;

    // the Rayleigh quotient of a PSD matrix never exceeds lambda_max, so the
    // only way to land on a wrong eigenvalue is an exactly deficient start
    let accept = |estimate: f64| -> f64 {
        if estimate < diag_max * (1.0 - 1e-12) {
            dense_dominant(s)
        } else {
            estimate
        }
    };

    for _ in 0..max_iter {
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(accept(0.0));
        }
        v = w / norm;
        w = s * &v;
        let next = v.dot(&w);
        let delta = (next - lambda).abs();
        lambda = next;

        let scale = lambda.abs().max(f64::MIN_POSITIVE);
        let residual = (&w - &v * lambda).norm();
        if residual <= rel_tol * scale {
            return Ok(accept(lambda));
        }
        if delta <= rel_tol * scale {
            match prev_delta {
                Some(prev) if prev > 0.0 => {
                    let ratio = delta / prev;
                    if ratio < 1.0 - 1e-6 {
                        let tail = delta * ratio / (1.0 - ratio);
                        if tail <= 0.5 * rel_tol * scale {
                            return Ok(accept(lambda));
                        }
                    } else {
                        log::debug!("power iteration stagnated at ratio {ratio}; dense fallback");
                        return Ok(dense_dominant(s));
                    }
                }
                _ => {
                    if delta == 0.0 {
                        // quotient is stationary but the residual is not small
                        return Ok(dense_dominant(s));
                    }
                }
            }
        }
        prev_delta = Some(delta);
    }
    Err(CpcError::PowerIterationNotConverged {
        estimate: lambda,
        iterations: max_iter,
    })
}

/// [`power_iteration`] with default tolerances, falling back to a dense
/// decomposition if the iteration cap is hit.
pub fn dominant_eigenvalue(s: &DMatrix<f64>) -> Result<f64> {
    match power_iteration(s, POWER_REL_TOL, POWER_MAX_ITER) {
        Ok(v) => Ok(v),
        Err(CpcError::PowerIterationNotConverged { estimate, iterations }) => {
            log::debug!("power iteration hit {iterations} iterations at {estimate}; dense fallback");
            Ok(dense_dominant(s))
        }
        Err(e) => Err(e),
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    /// Ascending.
    pub values: [f64; 2],
    /// Column `k` pairs with `values[k]`; first nonzero component of each
    /// column is positive.
    pub vectors: Matrix2<f64>,
}

/// Closed-form eigen-decomposition of the symmetric 2x2 matrix `t`; only the
/// upper triangle is read. Equal eigenvalues give the identity basis.
pub fn sym_eig_2x2(t: &Matrix2<f64>) -> Eigen2 {
    let (a, b, c) = (t[(0, 0)], t[(0, 1)], t[(1, 1)]);
    if b == 0.0 {
        return if a <= c {
            Eigen2 {
                values: [a, c],
                vectors: Matrix2::identity(),
            }
        } else {
            Eigen2 {
                values: [c, a],
                vectors: Matrix2::new(0.0, 1.0, 1.0, 0.0),
            }
        };
    }
    let mid = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    // (cos, sin) of half the angle of (half_diff, b) spans the upper eigenvector
    let theta = 0.5 * b.atan2(half_diff);
    let (sin, cos) = (theta.sin(), theta.cos());
    let upper = canonical_sign([cos, sin]);
    let lower = canonical_sign([-sin, cos]);
    Eigen2 {
        values: [mid - radius, mid + radius],
        vectors: Matrix2::new(lower[0], upper[0], lower[1], upper[1]),
    }
}

fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    let first = if v[0] != 0.0 { v[0] } else { v[1] };
    if first < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Orthonormal factor `Q` of `M = Q R` with `diag(R) >= 0`.
pub fn orthonormal_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = QR::new(m.clone());
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..r.nrows().min(q.ncols()) {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}
