//! Seeded closed-loop simulators.
//!
//! These are the only objects that see `(H, L, F)` during learning; the
//! learner only receives [`Observation`]s.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::system::PlantParams;

/// Distribution of the zero-mean multiplicative noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
    /// `±√variance` with equal probability.
    Rademacher,
}

impl NoiseDistribution {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, variance: f64) -> f64 {
        let sd = variance.sqrt();
        match self {
            NoiseDistribution::Gaussian => sd * rng.sample::<f64, _>(StandardNormal),
            NoiseDistribution::Rademacher => {
                if rng.random::<bool>() {
                    sd
                } else {
                    -sd
                }
            }
        }
    }
}

/// One black-box measurement of the closed-loop matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: DMatrix<f64>,
    pub gain_used: RowDVector<f64>,
    pub draw_index: u64,
}

/// Anything that returns noisy closed-loop observations for a trial gain.
pub trait Plant {
    fn dim(&self) -> usize;

    /// Observation whose expectation is `H + αL + F·gain`.
    fn observe(&mut self, alpha: f64, gain: &RowDVector<f64>) -> Observation;

    /// Number of observations drawn so far.
    fn observations(&self) -> u64;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `x(k+1) = (H + αL + F·kv) x(k) + α w(k) x(k)`, `Var w = δ`.
#[derive(Debug, Clone)]
pub struct DiscretePlant {
    params: PlantParams,
    noise_variance: f64,
    distribution: NoiseDistribution,
    seed: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl DiscretePlant {
    pub fn new(params: PlantParams, noise_variance: f64, seed: u64) -> Result<Self> {
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be finite and >= 0, got {noise_variance}"
            )));
        }
        Ok(Self {
            params,
            noise_variance,
            distribution: NoiseDistribution::default(),
            seed,
            rng: rng_for(seed, 0),
            draws: 0,
        })
    }

    pub fn with_distribution(mut self, distribution: NoiseDistribution) -> Self {
        self.distribution = distribution;
        self
    }

    /// Restarts the generator on an independent stream of the same seed.
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng = rng_for(self.seed, stream);
        self
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn draw(&mut self) -> f64 {
        self.distribution.sample(&mut self.rng, self.noise_variance)
    }

    /// Trajectory `x(0), …, x(steps)`.
    pub fn simulate(
        &mut self,
        alpha: f64,
        kv: &RowDVector<f64>,
        x0: &DVector<f64>,
        steps: usize,
    ) -> Vec<DVector<f64>> {
        let acl = self.params.closed_loop(alpha, kv);
        let mut traj = Vec::with_capacity(steps + 1);
        let mut x = x0.clone();
        traj.push(x.clone());
        for _ in 0..steps {
            let w = self.draw();
            x = &acl * &x + &x * (alpha * w);
            traj.push(x.clone());
        }
        traj
    }

    /// `X(1) = (G + F·kv) + αW(0)` from `X(0) = I`, `W(0)` diagonal.
    pub fn observe_x1(&mut self, alpha: f64, kv: &RowDVector<f64>) -> Observation {
        let mut y = self.params.closed_loop(alpha, kv);
        for i in 0..y.nrows() {
            y[(i, i)] += alpha * self.draw();
        }
        let obs = Observation {
            y,
            gain_used: kv.clone(),
            draw_index: self.draws,
        };
        self.draws += 1;
        obs
    }
}

impl Plant for DiscretePlant {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn observe(&mut self, alpha: f64, gain: &RowDVector<f64>) -> Observation {
        self.observe_x1(alpha, gain)
    }

    fn observations(&self) -> u64 {
        self.draws
    }
}

/// `dx = (H + αL + F·tv) x dt + α x dσ(t)`, integrated by Euler–Maruyama.
#[derive(Debug, Clone)]
pub struct ContinuousPlant {
    params: PlantParams,
    dt: f64,
    substeps: usize,
    distribution: NoiseDistribution,
    seed: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl ContinuousPlant {
    pub fn new(params: PlantParams, dt: f64, seed: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be finite and > 0, got {dt}")));
        }
        Ok(Self {
            params,
            dt,
            substeps: 1,
            distribution: NoiseDistribution::default(),
            seed,
            rng: rng_for(seed, 0),
            draws: 0,
        })
    }

    /// Splits each observation window into `substeps` Euler–Maruyama steps.
    pub fn with_substeps(mut self, substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be >= 1".into()));
        }
        self.substeps = substeps;
        Ok(self)
    }

    pub fn with_distribution(mut self, distribution: NoiseDistribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng = rng_for(self.seed, stream);
        self
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn em_step(&mut self, acl: &DMatrix<f64>, alpha: f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
        let dw = self.distribution.sample(&mut self.rng, h);
        x + acl * x * h + x * (alpha * dw)
    }

    /// Path sampled every `dt / substeps`, starting at `x0`.
    pub fn simulate(
        &mut self,
        alpha: f64,
        tv: &RowDVector<f64>,
        x0: &DVector<f64>,
        horizon: f64,
    ) -> Vec<DVector<f64>> {
        let h_nominal = self.dt / self.substeps as f64;
        let steps = ((horizon / h_nominal) - 1e-9).ceil().max(1.0) as usize;
        let h = horizon / steps as f64;
        let acl = self.params.closed_loop(alpha, tv);
        let mut traj = Vec::with_capacity(steps + 1);
        let mut x = x0.clone();
        traj.push(x.clone());
        for _ in 0..steps {
            x = self.em_step(&acl, alpha, &x, h);
            traj.push(x.clone());
        }
        traj
    }

    /// `Y₁ = x(δt) − I/δt`, where column `i` of `x(δt)` starts at `eᵢ/δt`.
    pub fn observe_y1(&mut self, alpha: f64, tv: &RowDVector<f64>) -> Observation {
        let n = self.params.dim();
        let acl = self.params.closed_loop(alpha, tv);
        let h = self.dt / self.substeps as f64;
        let inv_dt = 1.0 / self.dt;
        let mut y = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut x = DVector::zeros(n);
            x[i] = inv_dt;
            for _ in 0..self.substeps {
                x = self.em_step(&acl, alpha, &x, h);
            }
            x[i] -= inv_dt;
            y.set_column(i, &x);
        }
        let obs = Observation {
            y,
            gain_used: tv.clone(),
            draw_index: self.draws,
        };
        self.draws += 1;
        obs
    }
}

impl Plant for ContinuousPlant {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn observe(&mut self, alpha: f64, gain: &RowDVector<f64>) -> Observation {
        self.observe_y1(alpha, gain)
    }

    fn observations(&self) -> u64 {
        self.draws
    }
}
