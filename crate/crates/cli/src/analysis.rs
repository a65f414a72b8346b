//! Response-surface analysis of a campaign's observed trials.

use adoe_core::engine::CampaignState;
use adoe_core::linmodel::{anova, fit, AnovaReport, ModelSpec};
use adoe_core::Error;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Four main effects plus holding × barrel (four-factor spaces only).
    Reduced,
    /// Intercept, main effects, two-factor interactions and squares.
    Full,
    /// Intercept and main effects.
    Linear,
}

impl ModelKind {
    pub fn spec(self, dim: usize) -> Result<ModelSpec, Error> {
        match self {
            ModelKind::Reduced if dim != 4 => Err(Error::InvalidInput(format!(
                "the reduced model needs 4 factors, the space has {dim}"
            ))),
            ModelKind::Reduced => Ok(ModelSpec::reduced_dt()),
            ModelKind::Full => Ok(ModelSpec::full_quadratic(dim)),
            ModelKind::Linear => Ok(ModelSpec::linear(dim)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseAnalysis {
    pub objective: String,
    pub model: ModelKind,
    pub terms: Vec<String>,
    /// Coefficients in coded units, in term order.
    pub coefficients: Vec<f64>,
    /// The same surface in natural units.
    pub natural_coefficients: Vec<f64>,
    pub anova: AnovaReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignAnalysis {
    pub observations: usize,
    pub responses: Vec<ResponseAnalysis>,
}

/// Fit each objective with the full quadratic when there are at least as
/// many observations as terms and the design supports it, otherwise with
/// the linear model. Errors when not even the linear model can be fitted.
pub fn analyze_campaign(state: &CampaignState) -> Result<CampaignAnalysis, Error> {
    let space = &state.config.space;
    let names = space.names();
    let (coded, responses): (Vec<Vec<f64>>, Vec<Vec<f64>>) = state
        .observed()
        .map(|(t, r)| space.to_coded(&t.settings).map(|c| (c, r.clone())))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    let n = coded.len();
    let dim = space.dim();
    let mut out = Vec::new();
    for (j, objective) in state.config.objectives.iter().enumerate() {
        let y: Vec<f64> = responses.iter().map(|r| r[j]).collect();
        let mut last_err = None;
        let mut done = None;
        for kind in [ModelKind::Full, ModelKind::Linear] {
            let spec = kind.spec(dim)?;
            if n < spec.term_count() {
                last_err = Some(Error::InvalidInput(format!(
                    "{n} observations; the {kind:?} model needs {}",
                    spec.term_count()
                )));
                continue;
            }
            match fit(&coded, &y, &spec).and_then(|m| Ok((m, anova(&coded, &y, &spec, &names)?))) {
                Ok(fitted) => {
                    done = Some((kind, fitted));
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        let (model, (surface, report)) = done.ok_or_else(|| last_err.expect("at least one model attempted"))?;
        out.push(ResponseAnalysis {
            objective: objective.name.clone(),
            model,
            terms: surface.term_labels(&names),
            natural_coefficients: surface.natural_coefficients(space)?,
            coefficients: surface.coefficients,
            anova: report,
        });
    }
    Ok(CampaignAnalysis {
        observations: n,
        responses: out,
    })
}
