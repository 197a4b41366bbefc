//! Problem data for `f(D) = sum_g tr(W_g D A_g^-1 D')` and the orthonormal
//! decision variable.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CpcError, Result, Violation};
use crate::linalg;

/// A square matrix with `D'D = I`, checked to [`OrthonormalMatrix::TOLERANCE`]
/// on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalMatrix(DMatrix<f64>);

impl OrthonormalMatrix {
    /// Bound on `|D'D - I|_F` accepted by [`OrthonormalMatrix::new`].
    pub const TOLERANCE: f64 = 1e-8;
    /// Drift beyond which solvers re-project their iterate.
    pub const DRIFT_LIMIT: f64 = 1e-10;

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(CpcError::DimensionMismatch {
                what: "orthonormal matrix columns",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(CpcError::NonFinite);
        }
        let dev = orthonormality_defect(&m);
        if dev > Self::TOLERANCE {
            return Err(CpcError::NotOrthonormal(dev));
        }
        Ok(Self(m))
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    /// Nearest-in-QR-sense orthonormal matrix: the `Q` factor of `m` with
    /// non-negative `diag(R)`.
    pub fn orthonormalize(m: &DMatrix<f64>) -> Self {
        Self(linalg::orthonormal_factor(m))
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `|D'D - I|_F`.
    pub fn defect(&self) -> f64 {
        orthonormality_defect(&self.0)
    }

    /// Re-project onto the manifold if drift exceeds [`Self::DRIFT_LIMIT`].
    pub(crate) fn restore(&mut self) {
        if self.defect() > Self::DRIFT_LIMIT {
            self.0 = linalg::orthonormal_factor(&self.0);
        }
    }

    /// Projection of an ambient direction onto the tangent space at `self`:
    /// `M - D sym(D'M)`. The result `Z` satisfies `D'Z + Z'D = 0`.
    pub fn tangent_project(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_shape(m, self.dim(), "tangent direction")?;
        let dtm = self.0.transpose() * m;
        let sym = (&dtm + dtm.transpose()) * 0.5;
        Ok(m - &self.0 * sym)
    }
}

impl AsRef<DMatrix<f64>> for OrthonormalMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `|M'M - I|_F`.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).norm()
}

fn check_shape(m: &DMatrix<f64>, p: usize, what: &'static str) -> Result<()> {
    if m.nrows() != p {
        return Err(CpcError::DimensionMismatch { what, expected: p, found: m.nrows() });
    }
    if m.ncols() != p {
        return Err(CpcError::DimensionMismatch { what, expected: p, found: m.ncols() });
    }
    Ok(())
}

/// The `G` pairs `(W_g, A_g)`: symmetric positive-definite `p x p` scatter
/// matrices and positive diagonal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    p: usize,
    scatter: Vec<DMatrix<f64>>,
    weights: Vec<DVector<f64>>,
}

impl ProblemInstance {
    /// Relative Frobenius asymmetry tolerated in `W_g`.
    pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

    /// Symmetrizes every `W_g` as `(W + W')/2` (warning when the asymmetry
    /// exceeds [`Self::SYMMETRY_TOLERANCE`]) and validates the result.
    pub fn new(scatter: Vec<DMatrix<f64>>, weights: Vec<DVector<f64>>) -> Result<Self> {
        let mut inst = Self::from_parts_unchecked(scatter, weights);
        for (g, w) in inst.scatter.iter_mut().enumerate() {
            if !w.is_square() || w.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let rel = relative_asymmetry(w);
            if rel > Self::SYMMETRY_TOLERANCE {
                log::warn!("W_{} asymmetric (relative {rel:.3e}); symmetrizing", g + 1);
            }
            let t = w.transpose();
            *w += t;
            *w *= 0.5;
        }
        inst.validate().map_err(CpcError::InvalidInstance)?;
        Ok(inst)
    }

    /// Stores the parts as given; [`Self::validate`] reports what is wrong
    /// with them.
    pub fn from_parts_unchecked(scatter: Vec<DMatrix<f64>>, weights: Vec<DVector<f64>>) -> Self {
        let p = scatter
            .first()
            .map(|w| w.nrows())
            .or_else(|| weights.first().map(|a| a.len()))
            .unwrap_or(0);
        Self { p, scatter, weights }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn groups(&self) -> usize {
        self.scatter.len()
    }

    pub fn scatter(&self) -> &[DMatrix<f64>] {
        &self.scatter
    }

    pub fn weights(&self) -> &[DVector<f64>] {
        &self.weights
    }

    /// Every invariant violation, in group order.
    pub fn validate(&self) -> core::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.p == 0 || self.scatter.is_empty() {
            out.push(Violation::Empty);
        }
        if self.scatter.len() != self.weights.len() {
            out.push(Violation::GroupCount {
                scatter: self.scatter.len(),
                weights: self.weights.len(),
            });
        }
        for (g, w) in self.scatter.iter().enumerate() {
            if w.nrows() != self.p || w.ncols() != self.p {
                out.push(Violation::ScatterShape { group: g, rows: w.nrows(), cols: w.ncols() });
                continue;
            }
            if w.iter().any(|x| !x.is_finite()) {
                out.push(Violation::NonFiniteScatter { group: g });
                continue;
            }
            let rel = relative_asymmetry(w);
            if rel > Self::SYMMETRY_TOLERANCE {
                out.push(Violation::Asymmetric { group: g, relative: rel });
                continue;
            }
            if Cholesky::new(w.clone()).is_none() {
                out.push(Violation::NotPositiveDefinite { group: g });
            }
        }
        for (g, a) in self.weights.iter().enumerate() {
            if a.len() != self.p {
                out.push(Violation::WeightLength { group: g, len: a.len() });
                continue;
            }
            for (i, &v) in a.iter().enumerate() {
                if !(v > 0.0 && v.is_finite()) {
                    out.push(Violation::NonPositiveWeight { group: g, index: i, value: v });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Copy with every `W_g` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            p: self.p,
            scatter: self.scatter.iter().map(|w| w * c).collect(),
            weights: self.weights.clone(),
        }
    }

    /// `f(D) = sum_g sum_i d_i' W_g d_i / a_{g,i}`.
    pub fn objective(&self, d: &OrthonormalMatrix) -> Result<f64> {
        self.objective_at(d.as_matrix())
    }

    /// The objective at an arbitrary (not necessarily orthonormal) `p x p`
    /// matrix; used for finite differences in the ambient space.
    pub fn objective_at(&self, d: &DMatrix<f64>) -> Result<f64> {
        check_shape(d, self.p, "decision matrix")?;
        Ok(self.objective_from(d, &self.products(d)))
    }

    /// `2 sum_g W_g D A_g^-1`.
    pub fn euclidean_gradient(&self, d: &OrthonormalMatrix) -> Result<DMatrix<f64>> {
        self.euclidean_gradient_at(d.as_matrix())
    }

    pub fn euclidean_gradient_at(&self, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_shape(d, self.p, "decision matrix")?;
        Ok(self.gradient_from(&self.products(d)))
    }

    pub(crate) fn check_point(&self, d: &OrthonormalMatrix) -> Result<()> {
        check_shape(d.as_matrix(), self.p, "starting matrix")
    }

    /// `W_g D` for every group.
    pub(crate) fn products(&self, d: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.scatter.iter().map(|w| w * d).collect()
    }

    pub(crate) fn objective_from(&self, d: &DMatrix<f64>, products: &[DMatrix<f64>]) -> f64 {
        let mut total = 0.0;
        for (wd, a) in products.iter().zip(&self.weights) {
            for i in 0..self.p {
                total += d.column(i).dot(&wd.column(i)) / a[i];
            }
        }
        total
    }

    pub(crate) fn gradient_from(&self, products: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut grad = DMatrix::zeros(self.p, self.p);
        for (wd, a) in products.iter().zip(&self.weights) {
            for i in 0..self.p {
                grad.column_mut(i).axpy(2.0 / a[i], &wd.column(i), 1.0);
            }
        }
        grad
    }
}

fn relative_asymmetry(w: &DMatrix<f64>) -> f64 {
    let norm = w.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (w - w.transpose()).norm() / norm
}
