//! Factors, design spaces, coded-unit transforms, objectives and trials.
//!
//! Coded units map each factor's cube levels onto ±1. Axial points sit at
//! ±alpha, and the full search box of every optimizer in this crate is the
//! `[-alpha, +alpha]` coded hypercube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A continuous process variable with its ±1 cube levels in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub unit: String,
    pub cube_low: f64,
    pub cube_high: f64,
}

impl Factor {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, cube_low: f64, cube_high: f64) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            cube_low,
            cube_high,
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.cube_low + self.cube_high)
    }

    pub fn half_range(&self) -> f64 {
        0.5 * (self.cube_high - self.cube_low)
    }
}

/// Ordered set of factors plus the axial distance of the composite design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub factors: Vec<Factor>,
    pub alpha: f64,
}

/// One coordinate of a point that falls outside the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub factor: String,
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}={} outside [{}, {}]", self.factor, self.value, self.low, self.high)
    }
}

impl DesignSpace {
    pub fn new(factors: Vec<Factor>, alpha: f64) -> Result<Self> {
        let space = Self { factors, alpha };
        space.validate()?;
        Ok(space)
    }

    /// The four CCD factors of the injection-moulding study with alpha = 2.
    pub fn injection_moulding() -> Self {
        Self {
            factors: vec![
                Factor::new("mould_temp_C", "°C", 65.0, 85.0),
                Factor::new("cooling_s", "s", 20.0, 30.0),
                Factor::new("holding_s", "s", 3.0, 6.0),
                Factor::new("barrel_temp_C", "°C", 205.0, 225.0),
            ],
            alpha: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::InvalidInput("design space has no factors".into()));
        }
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        for (i, f) in self.factors.iter().enumerate() {
            if f.name.trim().is_empty() {
                return Err(Error::InvalidInput(format!("factor {i} has an empty name")));
            }
            if !(f.cube_low < f.cube_high) || !f.cube_low.is_finite() || !f.cube_high.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "factor `{}` needs cube_low < cube_high, got {} and {}",
                    f.name, f.cube_low, f.cube_high
                )));
            }
            if self.factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidInput(format!("duplicate factor name `{}`", f.name)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.name.as_str()).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn to_coded(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_len(point.len())?;
        Ok(self
            .factors
            .iter()
            .zip(point)
            .map(|(f, x)| (x - f.center()) / f.half_range())
            .collect())
    }

    pub fn from_coded(&self, coded: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coded.len())?;
        Ok(self
            .factors
            .iter()
            .zip(coded)
            .map(|(f, c)| f.center() + c * f.half_range())
            .collect())
    }

    /// Natural-unit bounds `center ± alpha·half_range` per factor.
    pub fn natural_bounds(&self) -> Vec<(f64, f64)> {
        self.factors
            .iter()
            .map(|f| {
                let (c, h) = (f.center(), f.half_range());
                (c - self.alpha * h, c + self.alpha * h)
            })
            .collect()
    }

    /// Coded bounds: `[-alpha, alpha]` in every dimension.
    pub fn coded_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-self.alpha, self.alpha); self.dim()]
    }

    /// Returns every coordinate outside the box. A length mismatch is reported
    /// as a single violation on a pseudo-factor so callers never panic.
    pub fn validate_point(&self, point: &[f64]) -> Vec<Violation> {
        if point.len() != self.dim() {
            return vec![Violation {
                factor: format!("<expected {} coordinates, got {}>", self.dim(), point.len()),
                value: f64::NAN,
                low: f64::NAN,
                high: f64::NAN,
            }];
        }
        self.factors
            .iter()
            .zip(self.natural_bounds())
            .zip(point)
            .filter(|((_, (lo, hi)), x)| !(**x >= *lo && **x <= *hi))
            .map(|((f, (lo, hi)), x)| Violation {
                factor: f.name.clone(),
                value: *x,
                low: lo,
                high: hi,
            })
            .collect()
    }

    /// Clamp a coded point into the box.
    pub fn clip_coded(&self, coded: &mut [f64]) {
        for c in coded {
            *c = c.clamp(-self.alpha, self.alpha);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    #[default]
    Minimize,
}

/// A response to be minimized, with its optional stopping threshold and
/// desirability parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub goal: Goal,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub d_min: Option<f64>,
    #[serde(default)]
    pub d_max: Option<f64>,
}

fn default_weight() -> f64 {
    1.0
}

impl Objective {
    pub fn minimize(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            goal: Goal::Minimize,
            threshold: None,
            weight: 1.0,
            d_min: None,
            d_max: None,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidInput("objective name is empty".into()));
        }
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return Err(Error::InvalidInput(format!("objective `{}` weight must be > 0", self.name)));
        }
        if let (Some(lo), Some(hi)) = (self.d_min, self.d_max) {
            if !(lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "objective `{}` needs d_min < d_max",
                    self.name
                )));
            }
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(Error::InvalidInput(format!("objective `{}` threshold is not finite", self.name)));
            }
        }
        Ok(())
    }

    /// ΔT and cycle time with the thresholds used to stop the multi-objective campaign.
    pub fn injection_moulding() -> Vec<Objective> {
        vec![
            Objective::minimize("dt_C", "°C").with_threshold(7.0),
            Objective::minimize("cycle_s", "s").with_threshold(33.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Seed,
    Suggested,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Pending,
    Observed,
}

/// One experiment run. `responses` is present exactly when the trial is observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: String,
    pub settings: Vec<f64>,
    pub responses: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl Trial {
    pub fn pending(id: impl Into<String>, settings: Vec<f64>, provenance: Provenance) -> Self {
        Self {
            id: id.into(),
            settings,
            responses: None,
            provenance,
        }
    }

    pub fn status(&self) -> TrialStatus {
        if self.responses.is_some() {
            TrialStatus::Observed
        } else {
            TrialStatus::Pending
        }
    }

    pub fn is_pending(&self) -> bool {
        self.responses.is_none()
    }
}
