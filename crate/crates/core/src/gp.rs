//! Gaussian-process regression with half-integer Matérn kernels.
//!
//! The model caches the lower Cholesky factor of `K + σ²I` and the weight
//! vector `(K + σ²I)⁻¹ z`, so posterior queries are two triangular solves.
//! Targets are affinely rescaled through [`TargetScaling`]; the prior mean is
//! zero in scaled space, i.e. `offset` in natural units.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{latin_hypercube, NelderMead};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Smoothness {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[default]
    #[serde(rename = "5/2")]
    FiveHalves,
}

impl Smoothness {
    /// Correlation at scaled distance `r`.
    pub fn correlation(self, r: f64) -> f64 {
        match self {
            Smoothness::Half => (-r).exp(),
            Smoothness::ThreeHalves => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            Smoothness::FiveHalves => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub smoothness: Smoothness,
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
}

impl KernelSpec {
    pub fn new(smoothness: Smoothness, signal_variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(Error::InvalidInput("signal variance must be positive".into()));
        }
        if lengthscales.is_empty() || lengthscales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("lengthscales must be positive".into()));
        }
        Ok(Self {
            smoothness,
            signal_variance,
            lengthscales,
        })
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| ((a - b) / l).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.signal_variance * self.smoothness.correlation(self.distance(x, y))
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    for v in [x, y] {
        if v.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: v.len(),
            });
        }
    }
    Ok(spec.eval_unchecked(x, y))
}

/// `natural = offset + scale · scaled`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaling {
    pub offset: f64,
    pub scale: f64,
}

impl TargetScaling {
    /// No rescaling; the prior mean is `prior_mean`.
    pub fn identity(prior_mean: f64) -> Self {
        Self {
            offset: prior_mean,
            scale: 1.0,
        }
    }

    /// Zero mean, unit sample variance. Constant targets keep scale 1.
    pub fn standardize(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        Self {
            offset: mean,
            scale: if sd > 1e-12 * (1.0 + mean.abs()) { sd } else { 1.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

impl Posterior {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kernel: KernelSpec,
    noise_variance: f64,
    /// Noise added to each training point's diagonal entry; `noise_variance`
    /// for observations, zero for fantasized ones.
    point_noise: Vec<f64>,
    scaling: TargetScaling,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    jitter: f64,
}

const JITTERS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

fn factorize(mut k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let mut applied = 0.0;
    for &j in &JITTERS {
        for i in 0..n {
            k[(i, i)] += j - applied;
        }
        applied = j;
        if let Some(c) = Cholesky::new(k.clone()) {
            return Ok((c, j));
        }
    }
    Err(Error::Factorization)
}

impl GpModel {
    /// Assemble and factorize a model. `targets` are natural units; they are
    /// mapped through `scaling` before conditioning.
    pub fn new(
        inputs: Vec<Vec<f64>>,
        targets: &[f64],
        kernel: KernelSpec,
        noise_variance: f64,
        scaling: TargetScaling,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("GP needs at least one training point".into()));
        }
        if targets.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        if let Some(x) = inputs.iter().find(|x| x.len() != kernel.dim()) {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: x.len(),
            });
        }
        if !(noise_variance >= 0.0) || !(scaling.scale > 0.0) {
            return Err(Error::InvalidInput("noise variance must be >= 0 and scale > 0".into()));
        }
        if targets.iter().chain(inputs.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite training data".into()));
        }
        let z: Vec<f64> = targets.iter().map(|y| (y - scaling.offset) / scaling.scale).collect();
        let point_noise = vec![noise_variance; inputs.len()];
        Self::assemble(inputs, z, kernel, noise_variance, point_noise, scaling)
    }

    fn assemble(
        inputs: Vec<Vec<f64>>,
        z: Vec<f64>,
        kernel: KernelSpec,
        noise_variance: f64,
        point_noise: Vec<f64>,
        scaling: TargetScaling,
    ) -> Result<Self> {
        let n = inputs.len();
        let mut k = DMatrix::from_fn(n, n, |i, j| kernel.eval_unchecked(&inputs[i], &inputs[j]));
        for (i, noise) in point_noise.iter().enumerate() {
            k[(i, i)] += noise;
        }
        let (chol, jitter) = factorize(k)?;
        let weights = chol.solve(&DVector::from_column_slice(&z));
        Ok(Self {
            inputs,
            targets: z,
            kernel,
            noise_variance,
            point_noise,
            scaling,
            chol,
            weights,
            jitter,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn scaling(&self) -> TargetScaling {
        self.scaling
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Training targets in natural units.
    pub fn targets(&self) -> Vec<f64> {
        self.targets
            .iter()
            .map(|z| self.scaling.offset + self.scaling.scale * z)
            .collect()
    }

    /// Diagonal jitter that was needed to factorize.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of `K + σ²I` (plus jitter).
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Latent-function posterior at `x`, in natural units.
    pub fn posterior(&self, x: &[f64]) -> Posterior {
        debug_assert_eq!(x.len(), self.dim());
        let kx = DVector::from_iterator(
            self.len(),
            self.inputs.iter().map(|xi| self.kernel.eval_unchecked(x, xi)),
        );
        let mean_z = kx.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kx)
            .expect("cholesky factor has a positive diagonal");
        let var_z = (self.kernel.signal_variance - v.norm_squared()).max(0.0);
        let s = self.scaling.scale;
        Posterior {
            mean: self.scaling.offset + s * mean_z,
            variance: s * s * var_z,
        }
    }

    pub fn try_posterior(&self, x: &[f64]) -> Result<Posterior> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.posterior(x))
    }

    /// Log marginal likelihood of the scaled targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let z = DVector::from_column_slice(&self.targets);
        let log_det: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let n = self.len() as f64;
        -0.5 * z.dot(&self.weights) - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    /// A copy conditioned on one more observation (natural units), keeping
    /// hyperparameters and scaling fixed.
    pub fn condition_on(&self, x: &[f64], y: f64) -> Result<GpModel> {
        self.extended(x, y, self.noise_variance)
    }

    /// Like [`condition_on`](Self::condition_on) but treats `y` as an exact,
    /// noise-free value of the latent function.
    pub fn condition_on_exact(&self, x: &[f64], y: f64) -> Result<GpModel> {
        self.extended(x, y, 0.0)
    }

    fn extended(&self, x: &[f64], y: f64, noise: f64) -> Result<GpModel> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite training data".into()));
        }
        let mut inputs = self.inputs.clone();
        inputs.push(x.to_vec());
        let mut z = self.targets.clone();
        z.push((y - self.scaling.offset) / self.scaling.scale);
        let mut point_noise = self.point_noise.clone();
        point_noise.push(noise);
        Self::assemble(inputs, z, self.kernel.clone(), self.noise_variance, point_noise, self.scaling)
    }
}

/// Box for the hyperparameter search. Signal and noise bounds are relative to
/// the variance of the scaled targets (1 after standardization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
    pub noise_variance: (f64, f64),
    pub starts: usize,
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            lengthscale: (0.05, 20.0),
            signal_variance: (1e-3, 1e3),
            noise_variance: (1e-8, 1.0),
            starts: 8,
        }
    }
}

/// Maximum-likelihood fit of signal variance, ARD lengthscales and noise
/// variance, by Nelder–Mead in log space from a Latin-hypercube set of
/// starts. Targets are standardized. Deterministic for a given seed.
pub fn fit_hyperparams(
    inputs: &[Vec<f64>],
    targets: &[f64],
    smoothness: Smoothness,
    bounds: &HyperBounds,
    seed: u64,
) -> Result<GpModel> {
    let n = inputs.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need >= 2 points to fit hyperparameters, got {n}")));
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    let d = inputs[0].len();
    if d == 0 || inputs.iter().any(|x| x.len() != d) {
        return Err(Error::InvalidInput("inconsistent input dimensions".into()));
    }
    let scaling = TargetScaling::standardize(targets);
    let ln = |(a, b): (f64, f64)| (a.ln(), b.ln());
    let mut log_bounds = vec![ln(bounds.signal_variance)];
    log_bounds.extend(std::iter::repeat_n(ln(bounds.lengthscale), d));
    log_bounds.push(ln(bounds.noise_variance));

    let build = |theta: &[f64]| -> Result<GpModel> {
        let kernel = KernelSpec {
            smoothness,
            signal_variance: theta[0].exp(),
            lengthscales: theta[1..=d].iter().map(|t| t.exp()).collect(),
        };
        GpModel::new(inputs.to_vec(), targets, kernel, theta[d + 1].exp(), scaling)
    };
    let objective = |theta: &[f64]| build(theta).map_or(f64::INFINITY, |m| -m.log_marginal_likelihood());

    let mut rng = seeded(seed, 0x6770);
    let mut starts = latin_hypercube(bounds.starts.max(1), &log_bounds, &mut rng);
    // unit signal, unit lengthscales, small noise
    let mut default_start = vec![0.0; d + 2];
    default_start[d + 1] = (1e-3f64).ln().clamp(log_bounds[d + 1].0, log_bounds[d + 1].1);
    for (v, (lo, hi)) in default_start.iter_mut().zip(&log_bounds) {
        *v = v.clamp(*lo, *hi);
    }
    starts.push(default_start);

    let nm = NelderMead {
        initial_step: 0.1,
        max_evals: 150 * (d + 2),
        f_tol: 1e-9,
        x_tol: 1e-6,
    };
    let best = starts
        .iter()
        .map(|s| nm.minimize(objective, s, &log_bounds))
        .filter(|m| m.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(Error::HyperparameterFit { starts: starts.len() })?;
    build(&best.x)
}
