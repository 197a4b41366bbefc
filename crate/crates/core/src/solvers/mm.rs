//! Majorization-minimization solvers.
//!
//! Write `f(D) = vec(D)' K vec(D)` with `K = sum_g A_g^-1 (x) W_g`. Subtracting
//! a multiple of a positive-semidefinite factor that dominates part of `K`
//! leaves a concave quadratic, which lies below its tangent plane at `D_t`.
//! On the manifold the subtracted part is constant, so
//!
//! ```text
//! f(D) <= f(D_t) + 2 (tr(C_t D) - tr(C_t D_t))
//! ```
//!
//! with a coefficient matrix `C_t` that depends on the variant:
//!
//! | variant | concave part               | `C_t`                                     |
//! |---------|----------------------------|-------------------------------------------|
//! | MM1     | `A^-1 (x) (W - omega I)`   | `F_t = sum A^-1 D_t' W - omega A^-1 D_t'` |
//! | MM2     | `(A^-1 - alpha I) (x) W`   | `F_t'`, `F_t = sum W D_t A^-1 - alpha W D_t` |
//! | MM3     | `A^-1 (x) W - lambda I`    | `F_t'`, `F_t = sum W D_t A^-1 - lambda D_t` |
//!
//! Each step jumps to the Procrustes minimizer of `tr(C_t D)`. MM4 takes an
//! MM1 step followed by an MM2 step per iteration.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{check_inputs, drive, Iterate, SolverConfig, SolverKind, SolverReport, SpectralBounds, Step, Stopwatch};
use crate::error::Result;
use crate::linalg::procrustes_minimizer;
use crate::problem::{OrthonormalMatrix, ProblemInstance};

/// The three majorizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surrogate {
    Mm1,
    Mm2,
    Mm3,
}

/// `C_t` such that the surrogate's linear term is `tr(C_t D)`.
fn linear_coefficients(
    kind: Surrogate,
    inst: &ProblemInstance,
    bounds: &SpectralBounds,
    d: &DMatrix<f64>,
    products: &[DMatrix<f64>],
) -> DMatrix<f64> {
    let p = inst.dim();
    // accumulate the transpose of C_t column by column
    let mut acc = DMatrix::<f64>::zeros(p, p);
    for (g, (wd, a)) in products.iter().zip(inst.weights()).enumerate() {
        for i in 0..p {
            let mut col = acc.column_mut(i);
            match kind {
                Surrogate::Mm1 => {
                    let s = 1.0 / a[i];
                    col.axpy(s, &wd.column(i), 1.0);
                    col.axpy(-s * bounds.omega[g], &d.column(i), 1.0);
                }
                Surrogate::Mm2 => {
                    col.axpy(1.0 / a[i] - bounds.alpha[g], &wd.column(i), 1.0);
                }
                Surrogate::Mm3 => {
                    col.axpy(1.0 / a[i], &wd.column(i), 1.0);
                    col.axpy(-bounds.lambda[g], &d.column(i), 1.0);
                }
            }
        }
    }
    acc.transpose()
}

/// The coefficient matrix `F_t` as the variant defines it (see the module
/// table); for MM2 and MM3 the surrogate uses its transpose.
pub fn coefficient_matrix(
    kind: Surrogate,
    inst: &ProblemInstance,
    bounds: &SpectralBounds,
    d_t: &OrthonormalMatrix,
) -> Result<DMatrix<f64>> {
    inst.check_point(d_t)?;
    let c = linear_coefficients(kind, inst, bounds, d_t.as_matrix(), &inst.products(d_t.as_matrix()));
    Ok(match kind {
        Surrogate::Mm1 => c,
        Surrogate::Mm2 | Surrogate::Mm3 => c.transpose(),
    })
}

/// Value at `d` of the majorizer built at `d_t`; equals `f(d_t)` at `d = d_t`
/// and bounds `f(d)` from above for every orthonormal `d`.
pub fn surrogate(
    kind: Surrogate,
    inst: &ProblemInstance,
    bounds: &SpectralBounds,
    d_t: &OrthonormalMatrix,
    d: &OrthonormalMatrix,
) -> Result<f64> {
    inst.check_point(d_t)?;
    inst.check_point(d)?;
    let dt = d_t.as_matrix();
    let products = inst.products(dt);
    let c = linear_coefficients(kind, inst, bounds, dt, &products);
    let f_t = inst.objective_from(dt, &products);
    Ok(f_t + 2.0 * (trace_product(&c, d.as_matrix()) - trace_product(&c, dt)))
}

/// `tr(C D)`.
fn trace_product(c: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    c.dot(&d.transpose())
}

struct MmState<'a> {
    inst: &'a ProblemInstance,
    bounds: SpectralBounds,
    plan: &'static [Surrogate],
    d: OrthonormalMatrix,
    products: Vec<DMatrix<f64>>,
    f: f64,
}

impl<'a> MmState<'a> {
    fn new(inst: &'a ProblemInstance, d0: &OrthonormalMatrix, plan: &'static [Surrogate]) -> Result<Self> {
        let bounds = SpectralBounds::compute(inst)?;
        let products = inst.products(d0.as_matrix());
        let f = inst.objective_from(d0.as_matrix(), &products);
        Ok(Self { inst, bounds, plan, d: d0.clone(), products, f })
    }
}

impl Iterate for MmState<'_> {
    fn objective(&self) -> f64 {
        self.f
    }

    fn step(&mut self) -> Result<Step> {
        for &kind in self.plan {
            let c = linear_coefficients(kind, self.inst, &self.bounds, self.d.as_matrix(), &self.products);
            self.d = procrustes_minimizer(&c)?;
            self.d.restore();
            self.products = self.inst.products(self.d.as_matrix());
            self.f = self.inst.objective_from(self.d.as_matrix(), &self.products);
        }
        Ok(Step::Moved)
    }

    fn into_point(self) -> OrthonormalMatrix {
        self.d
    }
}

fn solve_with(
    solver: SolverKind,
    plan: &'static [Surrogate],
    inst: &ProblemInstance,
    d0: &OrthonormalMatrix,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    check_inputs(inst, d0, cfg)?;
    let clock = Stopwatch::start();
    let state = MmState::new(inst, d0, plan)?;
    drive(solver, state, cfg, clock)
}

/// MM with the `W_g` side concavified by `omega_g = lambda_max(W_g)`.
pub fn solve_mm1(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    solve_with(SolverKind::Mm1, &[Surrogate::Mm1], inst, d0, cfg)
}

/// MM with the `A_g^-1` side concavified by `alpha_g = 1 / min_i a_{g,i}`.
pub fn solve_mm2(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    solve_with(SolverKind::Mm2, &[Surrogate::Mm2], inst, d0, cfg)
}

/// MM with the whole Kronecker form concavified by `lambda_g = alpha_g omega_g`.
pub fn solve_mm3(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    solve_with(SolverKind::Mm3, &[Surrogate::Mm3], inst, d0, cfg)
}

/// Alternating MM1/MM2; one recorded iteration is one step of each.
pub fn solve_mm4(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    solve_with(SolverKind::Mm4, &[Surrogate::Mm1, Surrogate::Mm2], inst, d0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::DVector;

    fn swap_instance() -> ProblemInstance {
        ProblemInstance::new(
            vec![DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 3.0]))],
            vec![DVector::from_row_slice(&[2.0, 1.0])],
        )
        .unwrap()
    }

    #[test]
    fn every_variant_solves_the_swap_instance() {
        let inst = swap_instance();
        let cfg = SolverConfig::default();
        // the identity is stationary (the in-plane maximum), so start just off it
        let d0 = OrthonormalMatrix::orthonormalize(&DMatrix::from_row_slice(2, 2, &[1.0, -0.01, 0.01, 1.0]));
        for solve in [solve_mm1, solve_mm2, solve_mm3, solve_mm4] {
            let stuck = solve(&inst, &OrthonormalMatrix::identity(2), &cfg).unwrap();
            assert!((stuck.objective() - 3.5).abs() < 1e-9);
            let r = solve(&inst, &d0, &cfg).unwrap();
            assert!(r.converged);
            assert!((r.objective() - 2.5).abs() < 1e-9, "{}: {}", r.solver, r.objective());
            // column-swap permutation up to signs
            let d = r.final_d.as_matrix();
            assert!(d[(0, 0)].abs() < 1e-4 && d[(1, 1)].abs() < 1e-4);
        }
    }

    #[test]
    fn constant_objective_when_weights_are_scalar() {
        let w = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inst = ProblemInstance::new(
            vec![w.clone(), w * 2.0],
            vec![DVector::from_element(3, 2.0), DVector::from_element(3, 0.5)],
        )
        .unwrap();
        for solve in [solve_mm1, solve_mm2, solve_mm3, solve_mm4] {
            let r = solve(&inst, &OrthonormalMatrix::identity(3), &SolverConfig::default()).unwrap();
            assert_eq!(r.iterations, 1);
            assert!(r.converged);
            let f0 = r.objective_trace[0];
            assert!((r.objective() - f0).abs() <= 1e-12 * f0);
        }
    }

    #[test]
    fn mm2_coefficients_vanish_for_identity_weights() {
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let inst = ProblemInstance::new(vec![w], vec![DVector::from_element(2, 1.0)]).unwrap();
        let b = SpectralBounds::compute(&inst).unwrap();
        assert_eq!(b.alpha[0], 1.0);
        let f = coefficient_matrix(Surrogate::Mm2, &inst, &b, &OrthonormalMatrix::identity(2)).unwrap();
        assert_eq!(f, DMatrix::zeros(2, 2));
        let r = solve_mm2(&inst, &OrthonormalMatrix::identity(2), &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.objective() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mm1_coefficients_match_definition() {
        let inst = ProblemInstance::new(
            vec![DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])],
            vec![DVector::from_row_slice(&[0.5, 2.0])],
        )
        .unwrap();
        let b = SpectralBounds::compute(&inst).unwrap();
        let d = OrthonormalMatrix::orthonormalize(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 1.0]));
        let dm = d.as_matrix();
        let ainv = DMatrix::from_diagonal(&inst.weights()[0].map(|x| 1.0 / x));
        let w = &inst.scatter()[0];
        let expected = &ainv * dm.transpose() * w - &ainv * dm.transpose() * b.omega[0];
        let got = coefficient_matrix(Surrogate::Mm1, &inst, &b, &d).unwrap();
        assert!((got - expected).norm() < 1e-13);

        let expected3 = w * dm * &ainv - dm * b.lambda[0];
        let got3 = coefficient_matrix(Surrogate::Mm3, &inst, &b, &d).unwrap();
        assert!((got3 - expected3).norm() < 1e-13);
    }

    #[test]
    fn surrogate_touches_at_iterate() {
        let inst = swap_instance();
        let b = SpectralBounds::compute(&inst).unwrap();
        let d = OrthonormalMatrix::orthonormalize(&DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.3, 1.0]));
        let f = inst.objective(&d).unwrap();
        for kind in [Surrogate::Mm1, Surrogate::Mm2, Surrogate::Mm3] {
            let s = surrogate(kind, &inst, &b, &d, &d).unwrap();
            assert!((s - f).abs() < 1e-12);
        }
    }
}
