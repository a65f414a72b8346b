//! Simulated injection-moulding process used as a closed-loop oracle.
//!
//! ΔT is a full second-order surface fit to the 31-run CCD table in coded
//! units and then frozen. Cycle time is exactly `7.3 + cooling + holding`
//! seconds, which every row of the table satisfies.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::domain::DesignSpace;
use crate::error::{Error, Result};
use crate::linmodel::{fit, ModelSpec, QuadraticModel};
use crate::rng::seeded;

/// The CCD results table: four settings then ΔT (°C) and cycle time (s).
pub const CCD_RUNS_CSV: &str = include_str!("../data/ccd_runs.csv");

pub const SETTING_COLUMNS: [&str; 4] = ["mould_temp_C", "cooling_s", "holding_s", "barrel_temp_C"];
pub const RESPONSE_COLUMNS: [&str; 2] = ["dt_C", "cycle_s"];

pub fn ccd_runs() -> Dataset {
    Dataset::read_csv(CCD_RUNS_CSV.as_bytes(), &SETTING_COLUMNS, &RESPONSE_COLUMNS).expect("bundled table parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleModel {
    pub intercept: f64,
    pub cooling: f64,
    pub holding: f64,
}

impl CycleModel {
    pub const MOULDING: CycleModel = CycleModel {
        intercept: 7.3,
        cooling: 1.0,
        holding: 1.0,
    };

    pub fn predict(&self, settings: &[f64]) -> f64 {
        self.intercept + self.cooling * settings[1] + self.holding * settings[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantResponse {
    pub dt: f64,
    pub cycle: f64,
}

impl PlantResponse {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.dt, self.cycle]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantOracle {
    pub space: DesignSpace,
    /// Full quadratic in coded units.
    pub dt_model: QuadraticModel,
    pub cycle: CycleModel,
    /// Observation noise standard deviations for (ΔT, cycle).
    pub noise_sd: [f64; 2],
}

const CYCLE_FIT_TOLERANCE: f64 = 0.05;

/// Fit and freeze the oracle from a 31-row, 4-factor, 2-response table.
pub fn build_oracle(table: &Dataset) -> Result<PlantOracle> {
    if table.len() != 31 {
        return Err(Error::Fixture(format!("expected 31 rows, got {}", table.len())));
    }
    if table.settings.iter().any(|r| r.len() != 4) || table.responses.iter().any(|r| r.len() != 2) {
        return Err(Error::Fixture("expected 4 settings and 2 responses per row".into()));
    }
    let space = DesignSpace::injection_moulding();
    let coded = table
        .settings
        .iter()
        .map(|r| space.to_coded(r))
        .collect::<Result<Vec<_>>>()?;
    let dt_model = fit(&coded, &table.response_column(0), &ModelSpec::full_quadratic(4))?;

    let cycle = CycleModel::MOULDING;
    for (i, (s, r)) in table.settings.iter().zip(&table.responses).enumerate() {
        if (cycle.predict(s) - r[1]).abs() > CYCLE_FIT_TOLERANCE {
            return Err(Error::Fixture(format!(
                "row {}: cycle {} is not cooling + holding + 7.3",
                i + 1,
                r[1]
            )));
        }
    }
    Ok(PlantOracle {
        space,
        dt_model,
        cycle,
        noise_sd: [0.1, 0.0],
    })
}

impl PlantOracle {
    /// Oracle built from the bundled table.
    pub fn moulding() -> Self {
        build_oracle(&ccd_runs()).expect("bundled table is well formed")
    }

    pub fn with_noise(mut self, dt_sd: f64, cycle_sd: f64) -> Self {
        self.noise_sd = [dt_sd, cycle_sd];
        self
    }

    /// Noise-free responses; no box check.
    pub fn mean_response(&self, settings: &[f64]) -> Result<PlantResponse> {
        let coded = self.space.to_coded(settings)?;
        Ok(PlantResponse {
            dt: self.dt_model.predict(&coded),
            cycle: self.cycle.predict(settings),
        })
    }

    /// One simulated run: model value plus seeded Gaussian noise.
    pub fn evaluate(&self, settings: &[f64], seed: u64) -> Result<PlantResponse> {
        let violations = self.space.validate_point(settings);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::OutOfBox(text.join("; ")));
        }
        let mut r = self.mean_response(settings)?;
        let mut rng = seeded(seed, 0x91a7);
        for (v, sd) in [&mut r.dt, &mut r.cycle].into_iter().zip(self.noise_sd) {
            if sd > 0.0 {
                *v += Normal::new(0.0, sd)
                    .map_err(|e| Error::InvalidInput(e.to_string()))?
                    .sample(&mut rng);
            }
        }
        Ok(r)
    }
}

/// Noise-free ΔT minimum over an `n`-level full grid of the box, with its settings.
pub fn grid_minimum(oracle: &PlantOracle, n: usize) -> (Vec<f64>, f64) {
    let bounds = oracle.space.natural_bounds();
    let d = bounds.len();
    let n = n.max(2);
    let level = |j: usize, i: usize| bounds[j].0 + (bounds[j].1 - bounds[j].0) * i as f64 / (n - 1) as f64;
    let mut best = (Vec::new(), f64::INFINITY);
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = idx.iter().enumerate().map(|(j, &i)| level(j, i)).collect();
        let coded = oracle.space.to_coded(&x).expect("grid point has the space dimension");
        let v = oracle.dt_model.predict(&coded);
        if v < best.1 {
            best = (x, v);
        }
        let mut j = 0;
        while j < d {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == d {
            return best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_examples() {
        let p = PlantOracle::moulding().with_noise(0.0, 0.0);
        assert!((p.evaluate(&[65.0, 30.0, 3.0, 205.0], 0).unwrap().cycle - 40.3).abs() < 1e-12);
        assert!((p.evaluate(&[75.0, 35.0, 4.5, 215.0], 0).unwrap().cycle - 46.8).abs() < 1e-12);
    }

    #[test]
    fn center_matches_replicate_mean() {
        let p = PlantOracle::moulding().with_noise(0.0, 0.0);
        let dt = p.evaluate(&[75.0, 25.0, 4.5, 215.0], 0).unwrap().dt;
        // mean of the seven center replicates
        let reps = [8.12, 8.22, 8.1, 8.17, 8.17, 8.1, 7.94];
        let mean = reps.iter().sum::<f64>() / 7.0;
        assert!((mean - 8.117).abs() < 1e-3);
        assert!((dt - mean).abs() < 0.2);
    }

    #[test]
    fn noise_is_seeded() {
        let p = PlantOracle::moulding();
        let a = p.evaluate(&[80.0, 22.0, 4.0, 210.0], 5).unwrap();
        let b = p.evaluate(&[80.0, 22.0, 4.0, 210.0], 5).unwrap();
        let c = p.evaluate(&[80.0, 22.0, 4.0, 210.0], 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.dt, c.dt);
        assert_eq!(a.cycle, c.cycle);
    }

    #[test]
    fn rejects_out_of_box() {
        let p = PlantOracle::moulding();
        assert!(matches!(p.evaluate(&[100.0, 25.0, 4.5, 215.0], 0), Err(Error::OutOfBox(_))));
    }

    #[test]
    fn factorial_points_within_fit_residual() {
        let p = PlantOracle::moulding().with_noise(0.0, 0.0);
        let t = ccd_runs();
        for (x, r) in t.settings.iter().zip(&t.responses) {
            let coded = p.space.to_coded(x).unwrap();
            if coded.iter().all(|c| (c.abs() - 1.0).abs() < 1e-12) {
                let y = p.evaluate(x, 0).unwrap();
                assert_eq!(y.cycle, r[1]);
                assert!((y.dt - r[0]).abs() <= 0.6, "{x:?}: {} vs {}", y.dt, r[0]);
            }
        }
    }

    #[test]
    fn grid_minimum_at_high_mould_low_barrel() {
        let p = PlantOracle::moulding();
        let (x, v) = grid_minimum(&p, 21);
        assert!(v <= 6.5, "{v}");
        assert!(x[0] >= 85.0 && x[3] <= 205.0, "{x:?}");
    }

    #[test]
    fn malformed_fixture() {
        let mut t = ccd_runs();
        t.settings.pop();
        t.responses.pop();
        assert!(build_oracle(&t).is_err());
        let mut t = ccd_runs();
        t.responses[0][1] += 1.0;
        assert!(build_oracle(&t).is_err());
    }
}
