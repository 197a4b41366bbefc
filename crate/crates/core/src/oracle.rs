//! Solver-independent reference values: the closed-form single-group
//! minimum, exhaustive rotation search for `p = 2`, and finite-difference
//! gradients. Nothing here calls into [`crate::solvers`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CpcError, Result};
use crate::problem::{OrthonormalMatrix, ProblemInstance};

/// Default rotation-grid resolution.
pub const DEFAULT_GRID: usize = 100_000;

/// Exact minimum over orthonormal `D` of `tr(W D A^-1 D')` for one group.
///
/// By the rearrangement inequality the minimum pairs the `k`-th largest
/// eigenvalue of `W` with the `k`-th largest weight; the minimizer places
/// that eigenvector in the weight's column.
pub fn single_group_analytic_min(w: &DMatrix<f64>, a: &DVector<f64>) -> Result<(f64, OrthonormalMatrix)> {
    let inst = ProblemInstance::new(vec![w.clone()], vec![a.clone()])?;
    let w = &inst.scatter()[0];
    let p = inst.dim();
    let eig = SymmetricEigen::new(w.clone());

    let mut by_value: Vec<usize> = (0..p).collect();
    by_value.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut by_weight: Vec<usize> = (0..p).collect();
    by_weight.sort_by(|&x, &y| a[y].total_cmp(&a[x]));

    let mut d = DMatrix::zeros(p, p);
    let mut min = 0.0;
    for (&ev, &col) in by_value.iter().zip(&by_weight) {
        min += eig.eigenvalues[ev] / a[col];
        d.set_column(col, &eig.eigenvectors.column(ev));
    }
    Ok((min, OrthonormalMatrix::new(d)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    /// Minimum over every evaluated grid point.
    pub best_objective: f64,
    /// Rotation angle in `[0, pi)` of the best point.
    pub best_angle: f64,
    /// Whether the best point is the column-swapped rotation.
    pub swapped: bool,
    pub grid_size: usize,
    /// Upper bound on `best_objective - true minimum`.
    pub curvature_bound: f64,
}

/// Brute-force minimum for `p = 2` over `D(theta) = [[c, -s], [s, c]]` and its
/// column swap, `theta` on a uniform grid of `[0, pi)`.
///
/// For `p = 2` the objective is `const + amplitude * cos(2 theta - phase)`, so
/// the grid minimum overshoots the true one by at most
/// `amplitude * step^2 / 2`. The amplitude is estimated from the grid spread
/// and doubled for `curvature_bound`.
pub fn rotation_grid_min(inst: &ProblemInstance, grid_size: usize) -> Result<GridSearchResult> {
    if inst.dim() != 2 {
        return Err(CpcError::InvalidArgument(format!(
            "rotation grid search needs p = 2, got p = {}",
            inst.dim()
        )));
    }
    if grid_size < 1000 {
        return Err(CpcError::InvalidArgument(format!("grid_size must be at least 1000, got {grid_size}")));
    }
    let step = PI / grid_size as f64;
    let mut best = GridSearchResult {
        best_objective: f64::INFINITY,
        best_angle: 0.0,
        swapped: false,
        grid_size,
        curvature_bound: 0.0,
    };
    let mut worst = f64::NEG_INFINITY;
    for k in 0..grid_size {
        let theta = step * k as f64;
        let (s, c) = (theta.sin(), theta.cos());
        for (swapped, d) in [
            (false, DMatrix::from_row_slice(2, 2, &[c, -s, s, c])),
            (true, DMatrix::from_row_slice(2, 2, &[-s, c, c, s])),
        ] {
            let f = inst.objective_at(&d)?;
            worst = worst.max(f);
            if f < best.best_objective {
                best.best_objective = f;
                best.best_angle = theta;
                best.swapped = swapped;
            }
        }
    }
    best.curvature_bound = (worst - best.best_objective) * step * step / 2.0;
    Ok(best)
}

/// Central differences of the objective in each ambient entry of `d`.
///
/// Both objective values are accumulated in double-double arithmetic and the
/// difference is divided by the step actually representable in `f64`, so the
/// result is not limited by `eps * f / step` rounding when `f` is large.
pub fn fd_gradient(inst: &ProblemInstance, d: &OrthonormalMatrix, step: f64) -> Result<DMatrix<f64>> {
    if !(1e-8..=1e-4).contains(&step) {
        return Err(CpcError::InvalidArgument(format!("step {step} outside [1e-8, 1e-4]")));
    }
    inst.objective_at(d.as_matrix())?;
    let p = inst.dim();
    let base = d.as_matrix();
    let mut grad = DMatrix::zeros(p, p);
    let mut probe = base.clone();
    for r in 0..p {
        for c in 0..p {
            let x = base[(r, c)];
            let (hi, lo) = (x + step, x - step);
            probe[(r, c)] = hi;
            let up = objective_dd(inst, &probe);
            probe[(r, c)] = lo;
            let down = objective_dd(inst, &probe);
            probe[(r, c)] = x;
            let diff = dd_add(up, (-down.0, -down.1));
            grad[(r, c)] = (diff.0 + diff.1) / (hi - lo);
        }
    }
    Ok(grad)
}

type Dd = (f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    (p, Float::mul_add(a, b, -p))
}

fn dd_add(x: Dd, y: Dd) -> Dd {
    let (s, e) = two_sum(x.0, y.0);
    let (t, f) = two_sum(x.1, y.1);
    let (s, e) = two_sum(s, e + t);
    two_sum(s, e + f)
}

fn dd_mul(x: Dd, b: f64) -> Dd {
    let (p, e) = two_prod(x.0, b);
    two_sum(p, e + x.1 * b)
}

fn dd_div(x: Dd, b: f64) -> Dd {
    let q1 = x.0 / b;
    let r = dd_add(x, dd_mul((-q1, 0.0), b));
    two_sum(q1, r.0 / b)
}

/// `sum_g sum_i d_i' W_g d_i / a_{g,i}` in double-double.
fn objective_dd(inst: &ProblemInstance, d: &DMatrix<f64>) -> Dd {
    let p = inst.dim();
    let mut total = (0.0, 0.0);
    for (w, a) in inst.scatter().iter().zip(inst.weights()) {
        for i in 0..p {
            let mut q = (0.0, 0.0);
            for j in 0..p {
                for k in 0..p {
                    q = dd_add(q, dd_mul(two_prod(d[(j, i)], w[(j, k)]), d[(k, i)]));
                }
            }
            total = dd_add(total, dd_div(q, a[i]));
        }
    }
    total
}
