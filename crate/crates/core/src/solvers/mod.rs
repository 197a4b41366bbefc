//! Six minimizers of the objective behind one interface.
//!
//! Every solver starts from a caller-supplied orthonormal `D0`, records the
//! objective before the first step and after every iteration, and stops when
//! [`check_convergence`] fires or `max_iter` iterations have run.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{CpcError, Result};
use crate::linalg;
use crate::problem::{OrthonormalMatrix, ProblemInstance};

mod als;
mod flury;
pub mod mm;

pub use als::solve_als;
pub use flury::{flury_pair_update, solve_flury};
pub use mm::{solve_mm1, solve_mm2, solve_mm3, solve_mm4};

/// Stable solver identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Als,
    Flury,
    Mm1,
    Mm2,
    Mm3,
    Mm4,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Als,
        SolverKind::Flury,
        SolverKind::Mm1,
        SolverKind::Mm2,
        SolverKind::Mm3,
        SolverKind::Mm4,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SolverKind::Als => "als",
            SolverKind::Flury => "flury",
            SolverKind::Mm1 => "mm1",
            SolverKind::Mm2 => "mm2",
            SolverKind::Mm3 => "mm3",
            SolverKind::Mm4 => "mm4",
        }
    }

    pub fn solve(
        self,
        inst: &ProblemInstance,
        d0: &OrthonormalMatrix,
        cfg: &SolverConfig,
    ) -> Result<SolverReport> {
        match self {
            SolverKind::Als => solve_als(inst, d0, cfg),
            SolverKind::Flury => solve_flury(inst, d0, cfg),
            SolverKind::Mm1 => solve_mm1(inst, d0, cfg),
            SolverKind::Mm2 => solve_mm2(inst, d0, cfg),
            SolverKind::Mm3 => solve_mm3(inst, d0, cfg),
            SolverKind::Mm4 => solve_mm4(inst, d0, cfg),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SolverKind {
    type Err = CpcError;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| CpcError::InvalidArgument(alloc::format!("unknown solver `{s}`")))
    }
}

/// Line-search parameters for [`solve_als`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsParams {
    /// Armijo constant in `(0, 1)`.
    pub sufficient_decrease: f64,
    /// Backtracking factor in `(0, 1)`.
    pub contraction: f64,
    /// Growth applied to the previous accepted step, `> 1`.
    pub expansion: f64,
    pub initial_step: f64,
}

impl Default for AlsParams {
    fn default() -> Self {
        Self {
            sufficient_decrease: 1e-4,
            contraction: 0.5,
            expansion: 2.0,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative-decrease threshold for [`check_convergence`].
    pub tol: f64,
    pub max_iter: usize,
    pub als: AlsParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            als: AlsParams::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.als;
        if !(self.tol > 0.0) {
            return Err(CpcError::InvalidConfig("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(CpcError::InvalidConfig("max_iter must be at least 1"));
        }
        if !(a.contraction > 0.0 && a.contraction < 1.0) {
            return Err(CpcError::InvalidConfig("contraction must lie in (0, 1)"));
        }
        if !(a.expansion > 1.0) {
            return Err(CpcError::InvalidConfig("expansion must exceed 1"));
        }
        if !(a.sufficient_decrease > 0.0 && a.sufficient_decrease < 1.0) {
            return Err(CpcError::InvalidConfig("sufficient_decrease must lie in (0, 1)"));
        }
        if !(a.initial_step > 0.0) {
            return Err(CpcError::InvalidConfig("initial_step must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solver: SolverKind,
    pub final_d: OrthonormalMatrix,
    /// `f(D0)` followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Zero when built without the `std` feature.
    pub elapsed_seconds: f64,
    pub converged: bool,
    /// ALS line search found no acceptable step.
    pub stalled: bool,
}

impl SolverReport {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

/// `true` iff `(f_prev - f_curr) / (|f_prev| + 1e-300) < tol`. An increase
/// counts as converged.
pub fn check_convergence(f_prev: f64, f_curr: f64, tol: f64) -> bool {
    (f_prev - f_curr) / (f_prev.abs() + 1e-300) < tol
}

/// Per-group spectral constants of the MM surrogates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBounds {
    /// `omega_g >= lambda_max(W_g)`.
    pub omega: Vec<f64>,
    /// `alpha_g = 1 / min_i a_{g,i}`, the largest eigenvalue of `A_g^-1`.
    pub alpha: Vec<f64>,
    /// `lambda_g = alpha_g * omega_g`, the largest eigenvalue of `A_g^-1 (x) W_g`.
    pub lambda: Vec<f64>,
}

impl SpectralBounds {
    /// Relative inflation of the power-iteration estimate so that
    /// `omega_g` stays an upper bound.
    pub const OMEGA_MARGIN: f64 = 1e-8;

    pub fn compute(inst: &ProblemInstance) -> Result<Self> {
        let omega = inst
            .scatter()
            .iter()
            .map(|w| linalg::dominant_eigenvalue(w).map(|v| v * (1.0 + Self::OMEGA_MARGIN)))
            .collect::<Result<Vec<_>>>()?;
        let alpha: Vec<f64> = inst.weights().iter().map(|a| 1.0 / a.min()).collect();
        let lambda = omega.iter().zip(&alpha).map(|(w, a)| a * w).collect();
        Ok(Self { omega, alpha, lambda })
    }
}

pub(crate) enum Step {
    Moved,
    Stalled,
}

/// A solver's iterate plus whatever it caches between steps.
pub(crate) trait Iterate {
    fn objective(&self) -> f64;
    fn step(&mut self) -> Result<Step>;
    fn into_point(self) -> OrthonormalMatrix;
}

pub(crate) fn check_inputs(inst: &ProblemInstance, d0: &OrthonormalMatrix, cfg: &SolverConfig) -> Result<()> {
    inst.validate().map_err(CpcError::InvalidInstance)?;
    inst.check_point(d0)?;
    cfg.validate()
}

pub(crate) fn drive<S: Iterate>(solver: SolverKind, mut state: S, cfg: &SolverConfig, clock: Stopwatch) -> Result<SolverReport> {
    let mut trace = vec![state.objective()];
    let mut converged = false;
    let mut stalled = false;
    for _ in 0..cfg.max_iter {
        if let Step::Stalled = state.step()? {
            stalled = true;
            break;
        }
        let prev = *trace.last().unwrap();
        let curr = state.objective();
        trace.push(curr);
        if check_convergence(prev, curr, cfg.tol) {
            converged = true;
            break;
        }
    }
    let elapsed_seconds = clock.elapsed_seconds();
    Ok(SolverReport {
        solver,
        final_d: state.into_point(),
        iterations: trace.len() - 1,
        objective_trace: trace,
        elapsed_seconds,
        converged,
        stalled,
    })
}

pub(crate) struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed_seconds(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_criterion() {
        assert!(check_convergence(10.0, 10.0, 1e-10));
        assert!(!check_convergence(10.0, 9.0, 1e-10));
        assert!(check_convergence(1.0, 1.0 - 1e-12, 1e-10));
        assert!(check_convergence(1.0, 1.5, 1e-10));
    }

    #[test]
    fn ids_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.id().parse::<SolverKind>().unwrap(), k);
        }
        assert!("mm5".parse::<SolverKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut c = SolverConfig::default();
        c.tol = 0.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.max_iter = 0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.als.expansion = 1.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.als.contraction = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn spectral_bounds_closed_forms() {
        use nalgebra::{DMatrix, DVector};
        let inst = ProblemInstance::new(
            vec![DMatrix::from_diagonal(&DVector::from_row_slice(&[3.0, 1.0]))],
            vec![DVector::from_row_slice(&[2.0, 1.0])],
        )
        .unwrap();
        let b = SpectralBounds::compute(&inst).unwrap();
        assert!((b.omega[0] - 3.0).abs() < 1e-7);
        assert!(b.omega[0] >= 3.0);
        assert_eq!(b.alpha[0], 1.0);
        assert_eq!(b.lambda[0], b.alpha[0] * b.omega[0]);
        assert!((b.lambda[0] - 3.0).abs() < 1e-7);
    }
}
