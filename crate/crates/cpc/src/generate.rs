//! Seeded random instances.
//!
//! Each `W_g` is the centered scatter matrix of `p + 1` standard-normal
//! `p`-vectors, and each diagonal of `A_g` holds `p` half-normal draws
//! `|N(0, 1)|`. Normal variates come from `rand_distr::StandardNormal`
//! (ziggurat) driven by ChaCha8.

use cpc_core::linalg::symmetric_eigenvalues;
use cpc_core::{DMatrix, DVector, OrthonormalMatrix, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{HarnessError, Result};

/// Half-normal draws below this are rejected.
pub const MIN_WEIGHT: f64 = 1e-6;
/// A scatter matrix with `lambda_min < SINGULAR_RATIO * lambda_max` is redrawn.
pub const SINGULAR_RATIO: f64 = 1e-12;
pub const MAX_ATTEMPTS: usize = 100;

/// Independent stream for replication `rep`: ChaCha8 keyed by `seed`, stream
/// number `rep`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

pub fn centered_scatter<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let x = DMatrix::<f64>::from_fn(p, p + 1, |_, _| rng.sample(StandardNormal));
    let mean = x.column_mean();
    let mut centered = x;
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    &centered * centered.transpose()
}

pub fn half_normal_weights<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(p, |_, _| loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = z.abs();
        if v >= MIN_WEIGHT {
            break v;
        }
    })
}

pub fn generate_instance<R: Rng + ?Sized>(p: usize, groups: usize, rng: &mut R) -> Result<ProblemInstance> {
    if p < 2 || groups < 1 {
        return Err(HarnessError::Config(format!("need p >= 2 and G >= 1, got p = {p}, G = {groups}")));
    }
    let mut scatter = Vec::with_capacity(groups);
    let mut weights = Vec::with_capacity(groups);
    for g in 0..groups {
        let mut attempt = 0;
        let w = loop {
            attempt += 1;
            let w = centered_scatter(p, rng);
            let (lo, hi) = eigen_range(&w)?;
            if lo >= SINGULAR_RATIO * hi {
                break w;
            }
            log::debug!("group {} draw {attempt} numerically singular; redrawing", g + 1);
            if attempt >= MAX_ATTEMPTS {
                return Err(HarnessError::Generation(format!(
                    "W_{} singular after {MAX_ATTEMPTS} attempts",
                    g + 1
                )));
            }
        };
        scatter.push(w);
        weights.push(half_normal_weights(p, rng));
    }
    Ok(ProblemInstance::new(scatter, weights)?)
}

fn eigen_range(w: &DMatrix<f64>) -> Result<(f64, f64)> {
    let values = symmetric_eigenvalues(w)?;
    Ok((values[0], values[values.len() - 1]))
}

/// Orthonormal factor of a standard-normal matrix.
pub fn random_orthonormal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> OrthonormalMatrix {
    let m = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    OrthonormalMatrix::orthonormalize(&m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instances_validate() {
        let mut rng = replication_rng(7, 0);
        let inst = generate_instance(5, 5, &mut rng).unwrap();
        assert_eq!((inst.dim(), inst.groups()), (5, 5));
        assert!(inst.validate().is_ok());
        for a in inst.weights() {
            assert!(a.iter().all(|&x| x > MIN_WEIGHT));
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = generate_instance(6, 3, &mut replication_rng(99, 4)).unwrap();
        let b = generate_instance(6, 3, &mut replication_rng(99, 4)).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(6, 3, &mut replication_rng(99, 5)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn half_normal_mean() {
        let mut rng = replication_rng(1, 0);
        let draws = half_normal_weights(1000, &mut rng);
        let mean = draws.mean();
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        // var(|Z|) = 1 - 2/pi
        let se = ((1.0 - 2.0 / std::f64::consts::PI) / 1000.0).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn scatter_is_centered_rank_p() {
        let mut rng = replication_rng(3, 0);
        let w = centered_scatter(4, &mut rng);
        let (lo, hi) = eigen_range(&w).unwrap();
        assert!(lo > SINGULAR_RATIO * hi);
        assert!((&w - w.transpose()).amax() <= 1e-14 * w.amax());
    }

    #[test]
    fn rejects_small_dimensions() {
        assert!(generate_instance(1, 2, &mut replication_rng(0, 0)).is_err());
        assert!(generate_instance(3, 0, &mut replication_rng(0, 0)).is_err());
    }
}
