#![allow(dead_code)]

use cpc_core::{DMatrix, DVector, OrthonormalMatrix, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Centered scatter of p + 1 normal draws.
pub fn spd(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let x = gaussian(rng, p, p + 1);
    let mean = x.column_mean();
    let mut c = x;
    for mut col in c.column_iter_mut() {
        col -= &mean;
    }
    let w = &c * c.transpose();
    (&w + w.transpose()) * 0.5
}

pub fn half_normal(rng: &mut ChaCha8Rng, p: usize) -> DVector<f64> {
    DVector::from_fn(p, |_, _| loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() > 1e-6 {
            break z.abs();
        }
    })
}

pub fn instance(rng: &mut ChaCha8Rng, p: usize, groups: usize) -> ProblemInstance {
    let scatter = (0..groups).map(|_| spd(rng, p)).collect();
    let weights = (0..groups).map(|_| half_normal(rng, p)).collect();
    ProblemInstance::new(scatter, weights).unwrap()
}

pub fn orthonormal(rng: &mut ChaCha8Rng, p: usize) -> OrthonormalMatrix {
    OrthonormalMatrix::orthonormalize(&gaussian(rng, p, p))
}

/// Rotation by `theta` in the (i, j) plane applied to columns i and j of d.
pub fn rotate_plane(d: &DMatrix<f64>, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut out = d.clone();
    let (di, dj) = (d.column(i).into_owned(), d.column(j).into_owned());
    out.set_column(i, &(&di * c + &dj * s));
    out.set_column(j, &(&dj * c - &di * s));
    out
}
