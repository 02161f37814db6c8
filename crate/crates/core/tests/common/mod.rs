#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochassign::assign::controllability_rcond;
use stochassign::PlantParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn row(rng: &mut ChaCha8Rng, n: usize) -> RowDVector<f64> {
    RowDVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = matrix(rng, n, n);
    &a + a.transpose()
}

pub const RCOND_MIN: f64 = 1e-2;

/// Random plant whose `(H + αL, F)` pair is reasonably well conditioned.
pub fn controllable_plant(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> PlantParams {
    loop {
        let p = PlantParams::new(matrix(rng, n, n), matrix(rng, n, n), vector(rng, n)).unwrap();
        if controllability_rcond(&p.g(alpha), &p.f) > RCOND_MIN {
            return p;
        }
    }
}

/// Distinct conjugate-closed eigenvalues; all real when `real_only`.
pub fn spectrum(rng: &mut ChaCha8Rng, n: usize, real_only: bool) -> Vec<Complex64> {
    loop {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            if !real_only && n - out.len() >= 2 && rng.random_bool(0.5) {
                let z = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(0.2..1.5));
                out.push(z);
                out.push(z.conj());
            } else {
                out.push(Complex64::new(rng.random_range(-1.5..1.5), 0.0));
            }
        }
        let separated = out
            .iter()
            .enumerate()
            .all(|(i, a)| out[i + 1..].iter().all(|b| (a - b).norm() > 0.1));
        if separated {
            return out;
        }
    }
}

/// Greedy-matched maximum distance between two multisets.
pub fn max_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// First-order error estimate `ε·‖T‖·κ²` for the operator spectrum of a
/// design, with `κ` the worst closed-loop eigenvalue condition number.
pub fn spectrum_error_estimate(acl: &DMatrix<f64>, lambdas: &[Complex64], t_norm: f64) -> f64 {
    let kappa = lambdas
        .iter()
        .map(|&l| stochassign::numerics::eigenvalue_condition(acl, l).unwrap_or(f64::INFINITY))
        .fold(1.0, f64::max);
    f64::EPSILON * t_norm * kappa * kappa
}

/// A random design whose operator spectrum is numerically well posed.
pub fn well_posed_design(
    rng: &mut ChaCha8Rng,
    n: usize,
    alpha: f64,
    mode: stochassign::Mode,
) -> (PlantParams, Vec<Complex64>, stochassign::GainPair) {
    use stochassign::{design, operator_matrix, AssignmentSpec, Mode};
    loop {
        let p = controllable_plant(rng, n, alpha);
        let lambdas = spectrum(rng, n, mode == Mode::Continuous);
        let gain = design(&p, &AssignmentSpec::new(mode, alpha, lambdas.clone()).unwrap()).unwrap();
        let t = operator_matrix(&p, alpha, &gain.kv, mode).unwrap();
        if spectrum_error_estimate(&p.closed_loop(alpha, &gain.kv), &lambdas, t.t.norm()) <= 1e-9 {
            return (p, lambdas, gain);
        }
    }
}
