//! Pairwise rotation sweeps.
//!
//! Rotating columns `i` and `j` of `D` inside their plane leaves every other
//! column alone and keeps `d_i'W d_i + d_j'W d_j` fixed, so with `Q = [d_i d_j]`
//! and new columns `Q [v, v_perp]` the objective changes by
//! `v' T v` up to a constant, where
//!
//! ```text
//! T = sum_g (1/a_{g,i} - 1/a_{g,j}) Q' W_g Q.
//! ```
//!
//! The best rotation puts the eigenvector of the smallest eigenvalue of `T`
//! in position `i`.

use nalgebra::{DMatrix, DVector, Matrix2};

use super::{check_inputs, drive, Iterate, SolverConfig, SolverKind, SolverReport, Step, Stopwatch};
use crate::error::{CpcError, Result};
use crate::linalg::sym_eig_2x2;
use crate::problem::{OrthonormalMatrix, ProblemInstance};

/// The optimal replacement for columns `i < j` of `d`, returned as
/// `(d_i, d_j)`.
pub fn flury_pair_update(
    inst: &ProblemInstance,
    d: &OrthonormalMatrix,
    i: usize,
    j: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    inst.check_point(d)?;
    let p = inst.dim();
    if !(i < j && j < p) {
        return Err(CpcError::InvalidArgument(alloc::format!(
            "pair ({i}, {j}) must satisfy i < j < {p}"
        )));
    }
    let mut m = d.as_matrix().clone();
    rotate_pair(inst, &mut m, i, j);
    Ok((m.column(i).into_owned(), m.column(j).into_owned()))
}

fn rotate_pair(inst: &ProblemInstance, d: &mut DMatrix<f64>, i: usize, j: usize) {
    let mut t = Matrix2::<f64>::zeros();
    for (w, a) in inst.scatter().iter().zip(inst.weights()) {
        let c = 1.0 / a[i] - 1.0 / a[j];
        if c == 0.0 {
            continue;
        }
        let (di, dj) = (d.column(i), d.column(j));
        let wdi = w * di;
        let wdj = w * dj;
        t[(0, 0)] += c * di.dot(&wdi);
        t[(0, 1)] += c * di.dot(&wdj);
        t[(1, 1)] += c * dj.dot(&wdj);
    }
    t[(1, 0)] = t[(0, 1)];
    if t == Matrix2::zeros() {
        return;
    }
    let v = sym_eig_2x2(&t).vectors;
    if v == Matrix2::identity() {
        return;
    }
    let new_i = d.column(i) * v[(0, 0)] + d.column(j) * v[(1, 0)];
    let new_j = d.column(i) * v[(0, 1)] + d.column(j) * v[(1, 1)];
    d.set_column(i, &new_i);
    d.set_column(j, &new_j);
}

struct FluryState<'a> {
    inst: &'a ProblemInstance,
    d: DMatrix<f64>,
    f: f64,
}

impl Iterate for FluryState<'_> {
    fn objective(&self) -> f64 {
        self.f
    }

    fn step(&mut self) -> Result<Step> {
        let p = self.inst.dim();
        for i in 0..p {
            for j in (i + 1)..p {
                rotate_pair(self.inst, &mut self.d, i, j);
            }
        }
        let mut d = OrthonormalMatrix::from_raw(core::mem::replace(&mut self.d, DMatrix::zeros(0, 0)));
        d.restore();
        self.d = d.into_inner();
        self.f = self.inst.objective_from(&self.d, &self.inst.products(&self.d));
        Ok(Step::Moved)
    }

    fn into_point(self) -> OrthonormalMatrix {
        OrthonormalMatrix::from_raw(self.d)
    }
}

/// Cyclic sweeps of [`flury_pair_update`] over all pairs in lexicographic
/// order; one iteration is one sweep.
pub fn solve_flury(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    check_inputs(inst, d0, cfg)?;
    let clock = Stopwatch::start();
    let d = d0.as_matrix().clone();
    let f = inst.objective_from(&d, &inst.products(&d));
    drive(SolverKind::Flury, FluryState { inst, d, f }, cfg, clock)
}
