//! Expected Improvement for minimization, ParEGO scalarization, and the
//! inner maximization that turns a fitted surrogate into proposals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::optim::{latin_hypercube, NelderMead};
use crate::rng::seeded;
use crate::stats::{normal_cdf, normal_pdf};

/// Augmentation coefficient of the Chebyshev scalarization.
pub const PAREGO_RHO: f64 = 0.05;

/// Expected improvement below the incumbent `f*` for a Gaussian prediction.
pub fn ei_min(mean: f64, sd: f64, incumbent: f64) -> f64 {
    let gap = incumbent - mean;
    if !(sd > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// Rescale each objective column to `[0, 1]` over its observed range. A
/// column with zero range maps to 0.
pub fn normalize_objectives(responses: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = responses.first().map_or(0, Vec::len);
    if let Some(r) = responses.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, got: r.len() });
    }
    let ranges: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            responses
                .iter()
                .map(|r| r[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        })
        .collect();
    Ok(responses
        .iter()
        .map(|r| {
            r.iter()
                .zip(&ranges)
                .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect())
}

/// Augmented Chebyshev scalarization of already-normalized objectives:
/// `max_i(w_i·f_i) + rho·Σ_i w_i·f_i`.
pub fn scalarize_parego(normalized: &[Vec<f64>], weights: &[f64], rho: f64) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("weights must be a simplex vector, got {weights:?}")));
    }
    normalized
        .iter()
        .map(|row| {
            if row.len() != weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: weights.len(),
                    got: row.len(),
                });
            }
            let terms = row.iter().zip(weights).map(|(f, w)| f * w);
            let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
            Ok(max + rho * terms.sum::<f64>())
        })
        .collect()
}

/// Uniform draw from the probability simplex.
pub fn sample_simplex_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Everything needed to maximize EI over a box.
#[derive(Debug, Clone)]
pub struct AcquisitionContext {
    pub surrogate: GpModel,
    /// Lowest observed value of the (scalarized) objective.
    pub incumbent: f64,
    pub bounds: Vec<(f64, f64)>,
    pub restarts: usize,
    pub seed: u64,
}

impl AcquisitionContext {
    pub fn new(surrogate: GpModel, incumbent: f64, bounds: Vec<(f64, f64)>, seed: u64) -> Result<Self> {
        if !incumbent.is_finite() {
            return Err(Error::InvalidInput("incumbent must be finite".into()));
        }
        if bounds.len() != surrogate.dim() || bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidInput("bounds do not match the surrogate".into()));
        }
        Ok(Self {
            surrogate,
            incumbent,
            bounds,
            restarts: 5,
            seed,
        })
    }

    pub fn expected_improvement(&self, x: &[f64]) -> f64 {
        let p = self.surrogate.posterior(x);
        ei_min(p.mean, p.sd(), self.incumbent)
    }
}

fn propose_with(ctx: &AcquisitionContext, surrogate: &GpModel, incumbent: f64, seed: u64) -> Vec<f64> {
    let ei = |x: &[f64]| {
        let p = surrogate.posterior(x);
        ei_min(p.mean, p.sd(), incumbent)
    };
    let d = ctx.bounds.len();
    let mut rng = seeded(seed, 0xac9);
    let mut scored: Vec<(f64, Vec<f64>)> = latin_hypercube(500 * d.max(1), &ctx.bounds, &mut rng)
        .into_iter()
        .map(|x| (ei(&x), x))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let nm = NelderMead {
        initial_step: 0.05,
        max_evals: 200 * d.max(1),
        f_tol: 1e-12,
        x_tol: 1e-6,
    };
    let mut best = scored[0].clone();
    for (_, start) in scored.iter().take(ctx.restarts.max(1)) {
        let m = nm.minimize(|x| -ei(x), start, &ctx.bounds);
        if -m.value > best.0 {
            best = (-m.value, m.x);
        }
    }
    let mut x = best.1;
    for (v, (lo, hi)) in x.iter_mut().zip(&ctx.bounds) {
        *v = v.clamp(*lo, *hi);
    }
    x
}

/// Approximate EI maximizer: dense space-filling scan, then Nelder–Mead
/// refinement from the best `restarts` candidates.
pub fn propose(ctx: &AcquisitionContext) -> Vec<f64> {
    propose_with(ctx, &ctx.surrogate, ctx.incumbent, ctx.seed)
}

const MIN_SEPARATION: f64 = 1e-3;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `q` proposals by sequential fantasizing: each chosen point is added to a
/// scratch surrogate at its own posterior mean, as a noise-free value, before
/// the next is chosen. Treating the fantasy as exact collapses the variance
/// there, and the incumbent drops to the fantasy when it is lower, so the
/// next proposal is not drawn back to the same spot.
pub fn propose_batch(ctx: &AcquisitionContext, q: usize) -> Result<Vec<Vec<f64>>> {
    if q == 0 {
        return Err(Error::InvalidInput("batch size must be >= 1".into()));
    }
    let mut scratch = ctx.surrogate.clone();
    let mut incumbent = ctx.incumbent;
    let mut batch: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut jitter_rng = seeded(ctx.seed, 0xba7c);
    for i in 0..q {
        let seed = ctx.seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut x = propose_with(ctx, &scratch, incumbent, seed);
        let mut tries = 0;
        while batch.iter().any(|b| distance(b, &x) < MIN_SEPARATION) && tries < 1000 {
            for (v, (lo, hi)) in x.iter_mut().zip(&ctx.bounds) {
                let step = 2.0 * MIN_SEPARATION * (jitter_rng.random::<f64>() * 2.0 - 1.0);
                *v = (*v + step).clamp(*lo, *hi);
            }
            tries += 1;
        }
        if i + 1 < q {
            let mean = scratch.posterior(&x).mean;
            scratch = scratch.condition_on_exact(&x, mean)?;
            incumbent = incumbent.min(mean);
        }
        batch.push(x);
    }
    Ok(batch)
}

/// ParEGO weight vector and the scalarized training values for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalarization {
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

/// Draw fresh simplex weights and scalarize raw responses.
pub fn parego<R: Rng + ?Sized>(responses: &[Vec<f64>], rng: &mut R) -> Result<Scalarization> {
    let k = responses.first().map_or(0, Vec::len);
    let weights = sample_simplex_weights(k, rng);
    let values = scalarize_parego(&normalize_objectives(responses)?, &weights, PAREGO_RHO)?;
    Ok(Scalarization { weights, values })
}
