//! Second-order response surfaces fit by least squares, with adjusted
//! (type-III) ANOVA, PRESS-based predicted R², and Lenth's method for
//! unreplicated two-level screens.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::DesignSpace;
use crate::error::{Error, Result};
use crate::stats::{f_sf, t_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Intercept,
    Linear(usize),
    Interaction(usize, usize),
    Square(usize),
}

impl Term {
    fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Term::Intercept => 1.0,
            Term::Linear(i) => x[i],
            Term::Interaction(i, j) => x[i] * x[j],
            Term::Square(i) => x[i] * x[i],
        }
    }

    pub fn label(&self, names: &[&str]) -> String {
        let n = |i: usize| names.get(i).map_or_else(|| format!("x{i}"), |s| s.to_string());
        match *self {
            Term::Intercept => "intercept".into(),
            Term::Linear(i) => n(i),
            Term::Interaction(i, j) => format!("{}*{}", n(i), n(j)),
            Term::Square(i) => format!("{}^2", n(i)),
        }
    }
}

/// Which polynomial terms a response-surface model contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub include_intercept: bool,
    pub linear_terms: Vec<usize>,
    pub interaction_terms: Vec<(usize, usize)>,
    pub square_terms: Vec<usize>,
}

impl ModelSpec {
    pub fn intercept_only() -> Self {
        Self {
            include_intercept: true,
            linear_terms: vec![],
            interaction_terms: vec![],
            square_terms: vec![],
        }
    }

    pub fn linear(dim: usize) -> Self {
        Self {
            linear_terms: (0..dim).collect(),
            ..Self::intercept_only()
        }
    }

    /// Intercept, linear, all two-factor interactions and squares.
    pub fn full_quadratic(dim: usize) -> Self {
        let mut interaction_terms = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                interaction_terms.push((i, j));
            }
        }
        Self {
            include_intercept: true,
            linear_terms: (0..dim).collect(),
            interaction_terms,
            square_terms: (0..dim).collect(),
        }
    }

    /// The reduced ΔT model: four main effects plus holding × barrel.
    pub fn reduced_dt() -> Self {
        Self {
            interaction_terms: vec![(2, 3)],
            ..Self::linear(4)
        }
    }

    pub fn terms(&self) -> Vec<Term> {
        let mut t = Vec::new();
        if self.include_intercept {
            t.push(Term::Intercept);
        }
        t.extend(self.linear_terms.iter().map(|&i| Term::Linear(i)));
        t.extend(self.interaction_terms.iter().map(|&(i, j)| Term::Interaction(i, j)));
        t.extend(self.square_terms.iter().map(|&i| Term::Square(i)));
        t
    }

    pub fn term_count(&self) -> usize {
        self.include_intercept as usize
            + self.linear_terms.len()
            + self.interaction_terms.len()
            + self.square_terms.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.term_count() == 0 {
            return bad("model has no terms".into());
        }
        let mut seen = Vec::new();
        for t in self.terms() {
            let t = match t {
                Term::Interaction(i, j) if i > j => Term::Interaction(j, i),
                t => t,
            };
            let out = match t {
                Term::Intercept => false,
                Term::Linear(i) | Term::Square(i) => i >= dim,
                Term::Interaction(i, j) => i >= dim || j >= dim || i == j,
            };
            if out {
                return bad(format!("term {t:?} invalid for {dim} factors"));
            }
            if seen.contains(&t) {
                return bad(format!("duplicate term {t:?}"));
            }
            seen.push(t);
        }
        Ok(())
    }

    fn without(&self, term: Term) -> ModelSpec {
        let mut s = self.clone();
        match term {
            Term::Intercept => s.include_intercept = false,
            Term::Linear(i) => s.linear_terms.retain(|&k| k != i),
            Term::Interaction(i, j) => s.interaction_terms.retain(|&k| k != (i, j)),
            Term::Square(i) => s.square_terms.retain(|&k| k != i),
        }
        s
    }

    fn design_matrix(&self, design: &[Vec<f64>]) -> DMatrix<f64> {
        let terms = self.terms();
        DMatrix::from_fn(design.len(), terms.len(), |r, c| terms[c].eval(&design[r]))
    }
}

/// A fitted polynomial response surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub spec: ModelSpec,
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
    pub training_size: usize,
    pub dim: usize,
}

struct LeastSquares {
    coefficients: DVector<f64>,
    residuals: DVector<f64>,
    leverage: DVector<f64>,
}

fn check_inputs(design: &[Vec<f64>], responses: &[f64], spec: &ModelSpec) -> Result<usize> {
    let dim = design.first().map_or(0, Vec::len);
    if design.is_empty() || dim == 0 {
        return Err(Error::InvalidInput("empty design".into()));
    }
    if let Some(r) = design.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: r.len(),
        });
    }
    if responses.len() != design.len() {
        return Err(Error::DimensionMismatch {
            expected: design.len(),
            got: responses.len(),
        });
    }
    if responses.iter().chain(design.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in design or responses".into()));
    }
    spec.validate(dim)?;
    if design.len() < spec.term_count() {
        return Err(Error::InvalidInput(format!(
            "{} runs cannot support {} terms",
            design.len(),
            spec.term_count()
        )));
    }
    Ok(dim)
}

/// Householder QR solve. Rank is judged from the diagonal of R relative to
/// the column scale.
fn least_squares(x: DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let p = x.ncols();
    let scale = x
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let qr = x.clone().qr();
    let r = qr.r();
    let rank = (0..p).filter(|&i| r[(i, i)].abs() > 1e-10 * scale).count();
    if rank < p {
        return Err(Error::RankDeficient { rank, terms: p });
    }
    let q = qr.q();
    let qty = q.transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { rank, terms: p })?;
    let residuals = y - &x * &coefficients;
    let leverage = DVector::from_iterator(x.nrows(), q.row_iter().map(|row| row.norm_squared()));
    Ok(LeastSquares {
        coefficients,
        residuals,
        leverage,
    })
}

/// Least-squares fit of `spec` to `(design, responses)`. The fit is
/// unit-agnostic: pass coded rows for coded coefficients.
pub fn fit(design: &[Vec<f64>], responses: &[f64], spec: &ModelSpec) -> Result<QuadraticModel> {
    let dim = check_inputs(design, responses, spec)?;
    let y = DVector::from_column_slice(responses);
    let ls = least_squares(spec.design_matrix(design), &y)?;
    let dfe = design.len() - spec.term_count();
    let sse = ls.residuals.norm_squared();
    Ok(QuadraticModel {
        spec: spec.clone(),
        coefficients: ls.coefficients.iter().copied().collect(),
        residual_variance: if dfe > 0 { sse / dfe as f64 } else { 0.0 },
        training_size: design.len(),
        dim,
    })
}

impl QuadraticModel {
    pub fn predict(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.dim);
        self.spec
            .terms()
            .iter()
            .zip(&self.coefficients)
            .map(|(t, b)| b * t.eval(point))
            .sum()
    }

    pub fn try_predict(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(self.predict(point))
    }

    pub fn term_labels(&self, names: &[&str]) -> Vec<String> {
        self.spec.terms().iter().map(|t| t.label(names)).collect()
    }

    /// Re-express a coded-unit model in natural units. Requires a hierarchical
    /// term set (every factor in an interaction or square also has its linear
    /// term, and an intercept), otherwise the expansion leaves the basis.
    pub fn natural_coefficients(&self, space: &DesignSpace) -> Result<Vec<f64>> {
        if space.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: space.dim(),
            });
        }
        let terms = self.spec.terms();
        let pos = |t: Term| {
            terms
                .iter()
                .position(|u| *u == t)
                .ok_or_else(|| Error::InvalidInput(format!("model is not hierarchical: missing {t:?}")))
        };
        let c: Vec<f64> = space.factors.iter().map(|f| f.center()).collect();
        let h: Vec<f64> = space.factors.iter().map(|f| f.half_range()).collect();
        let mut out = vec![0.0; terms.len()];
        for (t, &b) in terms.iter().zip(&self.coefficients) {
            match *t {
                Term::Intercept => out[pos(Term::Intercept)?] += b,
                Term::Linear(i) => {
                    // b (x - c)/h
                    out[pos(Term::Linear(i))?] += b / h[i];
                    out[pos(Term::Intercept)?] -= b * c[i] / h[i];
                }
                Term::Square(i) => {
                    let k = b / (h[i] * h[i]);
                    out[pos(Term::Square(i))?] += k;
                    out[pos(Term::Linear(i))?] -= 2.0 * k * c[i];
                    out[pos(Term::Intercept)?] += k * c[i] * c[i];
                }
                Term::Interaction(i, j) => {
                    let k = b / (h[i] * h[j]);
                    out[pos(Term::Interaction(i, j))?] += k;
                    out[pos(Term::Linear(i))?] -= k * c[j];
                    out[pos(Term::Linear(j))?] -= k * c[i];
                    out[pos(Term::Intercept)?] += k * c[i] * c[j];
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStat {
    pub term: Term,
    pub label: String,
    pub coefficient: f64,
    pub df: usize,
    pub adj_ss: f64,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaReport {
    pub terms: Vec<TermStat>,
    pub model_df: usize,
    pub model_ss: f64,
    pub model_f: Option<f64>,
    pub model_p: Option<f64>,
    pub error_df: usize,
    pub sse: f64,
    pub sst: f64,
    pub r2: f64,
    pub r2_adj: Option<f64>,
    pub r2_pred: Option<f64>,
    pub press: Option<f64>,
    /// False when the model is saturated; use [`lenth_effects`] instead.
    pub p_values_available: bool,
}

/// Adjusted sums of squares, F tests and fit diagnostics. `names` labels the
/// factors in the report (missing names fall back to `x{i}`).
pub fn anova(design: &[Vec<f64>], responses: &[f64], spec: &ModelSpec, names: &[&str]) -> Result<AnovaReport> {
    check_inputs(design, responses, spec)?;
    let n = design.len();
    let p = spec.term_count();
    let y = DVector::from_column_slice(responses);
    let full = least_squares(spec.design_matrix(design), &y)?;
    let sse = full.residuals.norm_squared();
    let dfe = n - p;
    let mse = (dfe > 0).then(|| sse / dfe as f64);

    let mean = y.mean();
    let sst = if spec.include_intercept {
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.norm_squared()
    };
    let model_df = p - spec.include_intercept as usize;
    let model_ss = (sst - sse).max(0.0);

    let mut terms = Vec::new();
    for (idx, term) in spec.terms().into_iter().enumerate() {
        if term == Term::Intercept {
            continue;
        }
        let reduced = spec.without(term);
        let sse_r = if reduced.term_count() == 0 {
            y.norm_squared()
        } else {
            least_squares(reduced.design_matrix(design), &y)?.residuals.norm_squared()
        };
        let adj_ss = (sse_r - sse).max(0.0);
        let f = mse.filter(|m| *m > 0.0).map(|m| adj_ss / m);
        terms.push(TermStat {
            term,
            label: term.label(names),
            coefficient: full.coefficients[idx],
            df: 1,
            adj_ss,
            f,
            p: f.map(|f| f_sf(f, 1.0, dfe as f64)),
        });
    }

    let model_f = mse
        .filter(|m| *m > 0.0 && model_df > 0)
        .map(|m| (model_ss / model_df as f64) / m);
    let model_p = model_f.map(|f| f_sf(f, model_df as f64, dfe as f64));

    let r2 = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 0.0 };
    let denom_df = if spec.include_intercept { n.saturating_sub(1) } else { n };
    let r2_adj = (dfe > 0 && sst > 0.0 && denom_df > 0)
        .then(|| 1.0 - (sse / dfe as f64) / (sst / denom_df as f64));
    let press = full
        .residuals
        .iter()
        .zip(full.leverage.iter())
        .try_fold(0.0, |acc, (e, h)| {
            let d = 1.0 - h;
            (d > 1e-10).then(|| acc + (e / d).powi(2))
        });
    let r2_pred = press.filter(|_| sst > 0.0).map(|pr| 1.0 - pr / sst);

    Ok(AnovaReport {
        terms,
        model_df,
        model_ss,
        model_f,
        model_p,
        error_df: dfe,
        sse,
        sst,
        r2,
        r2_adj,
        r2_pred,
        press,
        p_values_available: model_f.is_some(),
    })
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "*".to_string(), |v| format!("{v:.prec$}"))
}

impl AnovaReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28} {:>12} {:>10} {:>10} {:>8}", "term", "coef", "adj SS", "F", "p");
        let _ = writeln!(
            s,
            "{:<28} {:>12} {:>10.4} {:>10} {:>8}",
            "model",
            "",
            self.model_ss,
            fmt_opt(self.model_f, 2),
            fmt_opt(self.model_p, 4)
        );
        for t in &self.terms {
            let _ = writeln!(
                s,
                "{:<28} {:>12.5} {:>10.4} {:>10} {:>8}",
                t.label,
                t.coefficient,
                t.adj_ss,
                fmt_opt(t.f, 2),
                fmt_opt(t.p, 4)
            );
        }
        let _ = writeln!(s, "{:<28} {:>12} {:>10.4}  (df {})", "error", "", self.sse, self.error_df);
        let pct = |v: Option<f64>| v.map_or_else(|| "*".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let _ = writeln!(
            s,
            "R-sq {}   R-sq(adj) {}   R-sq(pred) {}",
            pct(Some(self.r2)),
            pct(self.r2_adj),
            pct(self.r2_pred)
        );
        if !self.p_values_available {
            let _ = writeln!(s, "no error degrees of freedom: p-values unavailable (see Lenth effects)");
        }
        s
    }

    /// `term,SS,F,p` per line, model row first.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let mut s = String::from("term,SS,F,p\n");
        let _ = writeln!(s, "model,{},{},{}", self.model_ss, opt(self.model_f), opt(self.model_p));
        for t in &self.terms {
            let _ = writeln!(s, "{},{},{},{}", t.label, t.adj_ss, opt(t.f), opt(t.p));
        }
        let _ = writeln!(s, "error,{},,", self.sse);
        s
    }
}

/// Lenth's pseudo standard error analysis of a list of effect estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LenthAnalysis {
    pub effects: Vec<Effect>,
    pub s0: f64,
    pub pse: f64,
    pub margin_of_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub estimate: f64,
    /// `estimate / PSE`; `None` when PSE is zero.
    pub pseudo_t: Option<f64>,
    pub significant: bool,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn lenth(effects: &[f64]) -> Result<LenthAnalysis> {
    let m = effects.len();
    if m < 3 {
        return Err(Error::InvalidInput(format!("Lenth's method needs >= 3 effects, got {m}")));
    }
    let mut abs: Vec<f64> = effects.iter().map(|e| e.abs()).collect();
    let s0 = 1.5 * median(&mut abs);
    let mut trimmed: Vec<f64> = abs.iter().copied().filter(|a| *a < 2.5 * s0).collect();
    let pse = if trimmed.is_empty() { 0.0 } else { 1.5 * median(&mut trimmed) };
    let margin_of_error = t_quantile(0.975, m as f64 / 3.0) * pse;
    let effects = effects
        .iter()
        .map(|&e| Effect {
            estimate: e,
            pseudo_t: (pse > 0.0).then(|| e / pse),
            significant: pse > 0.0 && e.abs() > margin_of_error,
        })
        .collect();
    Ok(LenthAnalysis {
        effects,
        s0,
        pse,
        margin_of_error,
    })
}

/// Effects of each column of a two-level design: twice the coded slope.
/// Columns are projected one at a time, which equals the joint regression
/// slope for orthogonal designs.
pub fn lenth_effects(design: &[Vec<f64>], responses: &[f64]) -> Result<LenthAnalysis> {
    let spec = ModelSpec::intercept_only();
    check_inputs(design, responses, &spec)?;
    let k = design[0].len();
    let mean = responses.iter().sum::<f64>() / responses.len() as f64;
    let effects: Vec<f64> = (0..k)
        .map(|j| {
            let xm = design.iter().map(|r| r[j]).sum::<f64>() / design.len() as f64;
            let (sxy, sxx) = design.iter().zip(responses).fold((0.0, 0.0), |(a, b), (r, y)| {
                let dx = r[j] - xm;
                (a + dx * (y - mean), b + dx * dx)
            });
            if sxx > 0.0 {
                2.0 * sxy / sxx
            } else {
                0.0
            }
        })
        .collect();
    lenth(&effects)
}
