//! Accelerated line search on the orthogonal group: steepest descent along
//! the projected gradient, QR retraction, Armijo backtracking starting from
//! an expanded copy of the last accepted step.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{check_inputs, drive, AlsParams, Iterate, SolverConfig, SolverKind, SolverReport, Step, Stopwatch};
use crate::error::Result;
use crate::linalg::orthonormal_factor;
use crate::problem::{OrthonormalMatrix, ProblemInstance};

/// Backtracking gives up once the step falls below this.
const MIN_STEP: f64 = 1e-16;
/// A projected gradient this small relative to the full gradient is zero.
const STATIONARY: f64 = 64.0 * f64::EPSILON;

struct AlsState<'a> {
    inst: &'a ProblemInstance,
    params: AlsParams,
    d: OrthonormalMatrix,
    products: Vec<DMatrix<f64>>,
    f: f64,
    last_step: Option<f64>,
}

impl Iterate for AlsState<'_> {
    fn objective(&self) -> f64 {
        self.f
    }

    fn step(&mut self) -> Result<Step> {
        let grad = self.inst.gradient_from(&self.products);
        let direction = -self.d.tangent_project(&grad)?;
        if direction.norm() <= STATIONARY * grad.norm() {
            return Ok(Step::Moved);
        }
        let slope = grad.dot(&direction);
        let mut s = match self.last_step {
            Some(prev) => prev * self.params.expansion,
            None => self.params.initial_step,
        };
        while s >= MIN_STEP {
            let candidate = orthonormal_factor(&(self.d.as_matrix() + &direction * s));
            let products = self.inst.products(&candidate);
            let fc = self.inst.objective_from(&candidate, &products);
            if fc <= self.f + self.params.sufficient_decrease * s * slope {
                self.d = OrthonormalMatrix::from_raw(candidate);
                self.d.restore();
                self.products = products;
                self.f = fc;
                self.last_step = Some(s);
                return Ok(Step::Moved);
            }
            s *= self.params.contraction;
        }
        Ok(Step::Stalled)
    }

    fn into_point(self) -> OrthonormalMatrix {
        self.d
    }
}

pub fn solve_als(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<SolverReport> {
    check_inputs(inst, d0, cfg)?;
    let clock = Stopwatch::start();
    let products = inst.products(d0.as_matrix());
    let f = inst.objective_from(d0.as_matrix(), &products);
    let state = AlsState {
        inst,
        params: cfg.als,
        d: d0.clone(),
        products,
        f,
        last_step: None,
    };
    drive(SolverKind::Als, state, cfg, clock)
}
