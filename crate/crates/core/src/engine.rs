//! The adaptive campaign loop: seed, suggest a batch, observe, refit, stop.
//!
//! A [`CampaignState`] is a plain value. It changes only through
//! [`CampaignState::record_observation`], [`CampaignState::next_suggestions`]
//! and [`CampaignState::add_manual_trial`]; callers serialize those per
//! campaign. [`Campaign`] pairs a state with the event log that rebuilds it.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::acquisition::{parego, propose_batch, AcquisitionContext};
use crate::domain::{DesignSpace, Objective, Provenance, Trial};
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparams, HyperBounds, Smoothness};
use crate::moo::dominates;
use crate::optim::latin_hypercube;
use crate::rng::seeded;

const SEED_STREAM: u64 = 1;
const ITERATION_STREAM_BASE: u64 = 0x1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Minimize the one objective with GP + EI.
    Single,
    /// ParEGO scalarization of every objective, stopped by thresholds.
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub space: DesignSpace,
    pub objectives: Vec<Objective>,
    pub mode: Mode,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_trials")]
    pub max_trials: usize,
    /// Coded (Euclidean) distance under which two batches count as repeats.
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Candidate seed runs in natural units, e.g. a CCD. When absent the
    /// seeds are a Latin hypercube over the full box.
    #[serde(default)]
    pub seed_design: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub smoothness: Smoothness,
}

fn default_seed_count() -> usize {
    12
}
fn default_batch_size() -> usize {
    2
}
fn default_max_trials() -> usize {
    40
}
fn default_convergence_tol() -> f64 {
    0.05
}

impl CampaignConfig {
    pub fn new(space: DesignSpace, objectives: Vec<Objective>, mode: Mode) -> Self {
        Self {
            space,
            objectives,
            mode,
            seed_count: default_seed_count(),
            batch_size: default_batch_size(),
            max_trials: default_max_trials(),
            convergence_tol: default_convergence_tol(),
            seed: 0,
            seed_design: None,
            smoothness: Smoothness::default(),
        }
    }

    /// Injection-moulding campaign over the standard box. Single mode
    /// minimizes ΔT alone; multi mode adds cycle time with both thresholds.
    pub fn moulding(mode: Mode) -> Self {
        let mut objectives = Objective::injection_moulding();
        if mode == Mode::Single {
            objectives.truncate(1);
        }
        Self::new(DesignSpace::injection_moulding(), objectives, mode)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_seed_design(mut self, rows: Vec<Vec<f64>>) -> Self {
        self.seed_design = Some(rows);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        for o in &self.objectives {
            o.validate()?;
        }
        match self.mode {
            Mode::Single if self.objectives.len() != 1 => {
                return Err(Error::InvalidInput("single mode needs exactly one objective".into()));
            }
            Mode::Multi if self.objectives.len() < 2 => {
                return Err(Error::InvalidInput("multi mode needs at least two objectives".into()));
            }
            Mode::Multi => {
                if let Some(o) = self.objectives.iter().find(|o| o.threshold.is_none()) {
                    return Err(Error::InvalidInput(format!(
                        "multi mode needs a threshold on objective `{}`",
                        o.name
                    )));
                }
            }
            Mode::Single => {}
        }
        if self.seed_count < 2 {
            return Err(Error::InvalidInput("seed_count must be >= 2".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        if self.max_trials < self.seed_count {
            return Err(Error::InvalidInput("max_trials must be >= seed_count".into()));
        }
        if !(self.convergence_tol >= 0.0) || !self.convergence_tol.is_finite() {
            return Err(Error::InvalidInput("convergence_tol must be finite and >= 0".into()));
        }
        if let Some(rows) = &self.seed_design {
            if self.seed_count > rows.len() {
                return Err(Error::InvalidInput(format!(
                    "seed_count {} exceeds the {}-run seed design",
                    self.seed_count,
                    rows.len()
                )));
            }
            for row in rows {
                let v = self.space.validate_point(row);
                if !v.is_empty() {
                    return Err(Error::OutOfBox(v[0].to_string()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignStatus {
    Seeding,
    AwaitingObservations,
    Proposing,
    Converged,
    ThresholdMet,
    BudgetExhausted,
}

impl CampaignStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Converged | Self::ThresholdMet | Self::BudgetExhausted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignState {
    pub config: CampaignConfig,
    pub trials: Vec<Trial>,
    /// Completed proposal batches.
    pub iteration: usize,
    pub status: CampaignStatus,
    /// Each suggested batch in coded units, in proposal order.
    pub history: Vec<Vec<Vec<f64>>>,
    /// Every stopping rule that fired when the campaign stopped; `status`
    /// holds the strongest of them.
    #[serde(default)]
    pub stop_reasons: Vec<CampaignStatus>,
    /// Set when the last surrogate fit failed; manual trials remain accepted.
    #[serde(default)]
    pub surrogate_error: Option<String>,
}

/// Best values and proposal movement after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub iteration: usize,
    pub observed: usize,
    /// Per-objective best observed value among trials of this and earlier batches.
    pub best: Vec<f64>,
    /// Largest coded distance between this batch and the previous one.
    pub proposal_distance: Option<f64>,
}

/// Largest distance between corresponding points of two batches, or `None`
/// when their sizes differ.
pub fn batch_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    Some(
        a.iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
    )
}

impl CampaignState {
    /// Draw the seed runs as pending trials.
    pub fn seed_campaign(config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded(config.seed, SEED_STREAM);
        let settings: Vec<Vec<f64>> = match &config.seed_design {
            Some(rows) => sample(&mut rng, rows.len(), config.seed_count)
                .into_iter()
                .map(|i| rows[i].clone())
                .collect(),
            None => latin_hypercube(config.seed_count, &config.space.natural_bounds(), &mut rng),
        };
        let mut state = Self {
            config,
            trials: Vec::new(),
            iteration: 0,
            status: CampaignStatus::Seeding,
            history: Vec::new(),
            stop_reasons: Vec::new(),
            surrogate_error: None,
        };
        for s in settings {
            state.push_trial(s, Provenance::Seed);
        }
        Ok(state)
    }

    fn push_trial(&mut self, settings: Vec<f64>, provenance: Provenance) -> Trial {
        let t = Trial::pending(format!("t{:03}", self.trials.len() + 1), settings, provenance);
        self.trials.push(t.clone());
        t
    }

    pub fn trial(&self, id: &str) -> Option<&Trial> {
        self.trials.iter().find(|t| t.id == id)
    }

    pub fn pending_ids(&self) -> Vec<String> {
        self.trials.iter().filter(|t| t.is_pending()).map(|t| t.id.clone()).collect()
    }

    pub fn observed(&self) -> impl Iterator<Item = (&Trial, &Vec<f64>)> {
        self.trials.iter().filter_map(|t| t.responses.as_ref().map(|r| (t, r)))
    }

    /// Enter measured responses for a pending trial.
    pub fn record_observation(&mut self, trial_id: &str, responses: Vec<f64>) -> Result<()> {
        let k = self.config.objectives.len();
        let idx = self
            .trials
            .iter()
            .position(|t| t.id == trial_id)
            .ok_or_else(|| Error::UnknownTrial(trial_id.to_string()))?;
        if !self.trials[idx].is_pending() {
            return Err(Error::AlreadyObserved(trial_id.to_string()));
        }
        if responses.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: responses.len(),
            });
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("responses must be finite".into()));
        }
        self.trials[idx].responses = Some(responses);
        if self.pending_ids().is_empty() && !self.status.is_terminal() {
            self.status = CampaignStatus::Proposing;
            self.apply_stop();
        } else if self.threshold_met() && !self.status.is_terminal() {
            self.apply_stop();
        }
        Ok(())
    }

    fn apply_stop(&mut self) {
        let fired = self.fired_stop_rules();
        if let Some(&strongest) = fired.first() {
            self.status = strongest;
            self.stop_reasons = fired;
        }
    }

    fn threshold_met(&self) -> bool {
        if self.config.mode != Mode::Multi {
            return false;
        }
        self.observed().any(|(_, r)| {
            self.config
                .objectives
                .iter()
                .zip(r)
                .all(|(o, &v)| o.threshold.is_none_or(|t| v <= t))
        })
    }

    fn converged(&self) -> bool {
        if self.config.mode != Mode::Single || self.history.len() < 2 {
            return false;
        }
        let n = self.history.len();
        batch_distance(&self.history[n - 2], &self.history[n - 1])
            .is_some_and(|d| d <= self.config.convergence_tol)
    }

    /// Stopping rules that currently hold, strongest first.
    pub fn fired_stop_rules(&self) -> Vec<CampaignStatus> {
        let mut fired = Vec::new();
        if self.threshold_met() {
            fired.push(CampaignStatus::ThresholdMet);
        }
        if self.converged() {
            fired.push(CampaignStatus::Converged);
        }
        if self.trials.len() >= self.config.max_trials {
            fired.push(CampaignStatus::BudgetExhausted);
        }
        fired
    }

    /// Status the campaign would have if its stopping rules were applied now.
    pub fn check_stop(&self) -> CampaignStatus {
        self.fired_stop_rules().first().copied().unwrap_or(self.status)
    }

    fn training_values(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut inputs = Vec::new();
        let mut raw = Vec::new();
        for (t, r) in self.observed() {
            inputs.push(self.config.space.to_coded(&t.settings)?);
            raw.push(r.clone());
        }
        let values = match self.config.mode {
            Mode::Single => raw.iter().map(|r| r[0]).collect(),
            Mode::Multi => parego(&raw, rng)?.values,
        };
        Ok((inputs, values))
    }

    /// Fit the surrogate and append up to `batch_size` pending suggestions.
    pub fn next_suggestions(&mut self, count: Option<usize>) -> Result<Vec<Trial>> {
        if self.status != CampaignStatus::Proposing {
            let pending = self.pending_ids();
            if !pending.is_empty() {
                return Err(Error::PendingObservations(pending));
            }
            return Err(Error::NotProposing(format!("{:?}", self.status)));
        }
        let q = count.unwrap_or(self.config.batch_size);
        if q == 0 || q > self.config.batch_size {
            return Err(Error::InvalidInput(format!(
                "count must be between 1 and {}",
                self.config.batch_size
            )));
        }
        let q = q.min(self.config.max_trials.saturating_sub(self.trials.len()).max(1));

        let stream = ITERATION_STREAM_BASE + self.iteration as u64;
        let mut rng = seeded(self.config.seed, stream);
        let fit_seed = self.config.seed ^ stream.wrapping_mul(0x2545_f491_4f6c_dd1d);
        let batch = self
            .training_values(&mut rng)
            .and_then(|(inputs, values)| {
                let incumbent = values.iter().copied().fold(f64::INFINITY, f64::min);
                let gp = fit_hyperparams(&inputs, &values, self.config.smoothness, &HyperBounds::default(), fit_seed)?;
                let ctx = AcquisitionContext::new(gp, incumbent, self.config.space.coded_bounds(), fit_seed)?;
                propose_batch(&ctx, q)
            });
        let batch = match batch {
            Ok(b) => b,
            Err(e) => {
                self.surrogate_error = Some(e.to_string());
                return Err(e);
            }
        };
        self.surrogate_error = None;

        let natural_bounds = self.config.space.natural_bounds();
        let mut coded_batch = Vec::with_capacity(q);
        let mut out = Vec::with_capacity(q);
        for mut c in batch {
            self.config.space.clip_coded(&mut c);
            let mut x = self.config.space.from_coded(&c)?;
            for (v, (lo, hi)) in x.iter_mut().zip(&natural_bounds) {
                *v = v.clamp(*lo, *hi);
            }
            coded_batch.push(c);
            out.push(self.push_trial(x, Provenance::Suggested));
        }
        self.history.push(coded_batch);
        self.iteration += 1;
        self.status = CampaignStatus::AwaitingObservations;
        Ok(out)
    }

    /// Queue operator-chosen settings in place of a suggestion.
    pub fn add_manual_trial(&mut self, settings: Vec<f64>) -> Result<Trial> {
        if self.status != CampaignStatus::Proposing {
            let pending = self.pending_ids();
            if !pending.is_empty() {
                return Err(Error::PendingObservations(pending));
            }
            return Err(Error::NotProposing(format!("{:?}", self.status)));
        }
        let v = self.config.space.validate_point(&settings);
        if !v.is_empty() {
            let text: Vec<String> = v.iter().map(ToString::to_string).collect();
            return Err(Error::OutOfBox(text.join("; ")));
        }
        let t = self.push_trial(settings, Provenance::Manual);
        self.status = CampaignStatus::AwaitingObservations;
        Ok(t)
    }

    /// Observed trials not dominated by any other observed trial.
    pub fn pareto(&self) -> Vec<&Trial> {
        let obs: Vec<(&Trial, &Vec<f64>)> = self.observed().collect();
        obs.iter()
            .filter(|(_, a)| !obs.iter().any(|(_, b)| dominates(b, a)))
            .map(|(t, _)| *t)
            .collect()
    }

    /// Best observed value per objective after the seeds and after each
    /// later batch (a manual trial counts as its own batch).
    pub fn convergence(&self) -> Vec<ConvergencePoint> {
        let k = self.config.objectives.len();
        // (end index into trials, suggested batches so far, movement)
        let mut cuts = Vec::new();
        let mut pos = self.trials.iter().take_while(|t| t.provenance == Provenance::Seed).count();
        cuts.push((pos, 0, None));
        let mut batches = 0;
        while pos < self.trials.len() {
            let mut distance = None;
            if self.trials[pos].provenance == Provenance::Suggested && batches < self.history.len() {
                if batches > 0 {
                    distance = batch_distance(&self.history[batches - 1], &self.history[batches]);
                }
                pos += self.history[batches].len();
                batches += 1;
            } else {
                pos += 1;
            }
            cuts.push((pos.min(self.trials.len()), batches, distance));
        }
        cuts.into_iter()
            .map(|(end, iteration, proposal_distance)| {
                let mut best = vec![f64::INFINITY; k];
                let mut observed = 0;
                for r in self.trials[..end].iter().filter_map(|t| t.responses.as_ref()) {
                    observed += 1;
                    for (b, v) in best.iter_mut().zip(r) {
                        *b = b.min(*v);
                    }
                }
                ConvergencePoint {
                    iteration,
                    observed,
                    best,
                    proposal_distance,
                }
            })
            .collect()
    }
}

/// One state transition, as recorded for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum CampaignEvent {
    Seeded { config: CampaignConfig, trials: Vec<Trial> },
    Suggested { trials: Vec<Trial> },
    Observed { trial_id: String, responses: Vec<f64> },
    ManualAdded { trial: Trial },
    StatusChanged { from: CampaignStatus, to: CampaignStatus },
}

/// A campaign state together with the events that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub state: CampaignState,
    pub events: Vec<CampaignEvent>,
}

impl Campaign {
    pub fn start(config: CampaignConfig) -> Result<Self> {
        let state = CampaignState::seed_campaign(config.clone())?;
        let events = vec![CampaignEvent::Seeded {
            config,
            trials: state.trials.clone(),
        }];
        Ok(Self { state, events })
    }

    fn log_status(&mut self, from: CampaignStatus) {
        if self.state.status != from {
            self.events.push(CampaignEvent::StatusChanged {
                from,
                to: self.state.status,
            });
        }
    }

    pub fn observe(&mut self, trial_id: &str, responses: Vec<f64>) -> Result<()> {
        let from = self.state.status;
        self.state.record_observation(trial_id, responses.clone())?;
        self.events.push(CampaignEvent::Observed {
            trial_id: trial_id.to_string(),
            responses,
        });
        self.log_status(from);
        Ok(())
    }

    pub fn suggest(&mut self, count: Option<usize>) -> Result<Vec<Trial>> {
        let from = self.state.status;
        let trials = self.state.next_suggestions(count)?;
        self.events.push(CampaignEvent::Suggested { trials: trials.clone() });
        self.log_status(from);
        Ok(trials)
    }

    pub fn add_manual(&mut self, settings: Vec<f64>) -> Result<Trial> {
        let from = self.state.status;
        let trial = self.state.add_manual_trial(settings)?;
        self.events.push(CampaignEvent::ManualAdded { trial: trial.clone() });
        self.log_status(from);
        Ok(trial)
    }

    /// Rebuild a campaign from its log, recomputing every seed draw and
    /// suggestion and checking each against what was recorded.
    pub fn replay(events: &[CampaignEvent]) -> Result<Self> {
        let mut iter = events.iter();
        let Some(CampaignEvent::Seeded { config, trials }) = iter.next() else {
            return Err(Error::InvalidInput("event log must start with a seeded event".into()));
        };
        let mut c = Campaign::start(config.clone())?;
        if &c.state.trials != trials {
            return Err(Error::InvalidInput("replayed seed trials differ from the log".into()));
        }
        for ev in iter {
            match ev {
                CampaignEvent::Seeded { .. } => {
                    return Err(Error::InvalidInput("duplicate seeded event".into()));
                }
                CampaignEvent::Suggested { trials } => {
                    let again = c.suggest(Some(trials.len()))?;
                    if &again != trials {
                        return Err(Error::InvalidInput(format!(
                            "replayed suggestion at iteration {} differs from the log",
                            c.state.iteration
                        )));
                    }
                }
                CampaignEvent::Observed { trial_id, responses } => c.observe(trial_id, responses.clone())?,
                CampaignEvent::ManualAdded { trial } => {
                    let again = c.add_manual(trial.settings.clone())?;
                    if &again != trial {
                        return Err(Error::InvalidInput("replayed manual trial differs from the log".into()));
                    }
                }
                // status changes are derived; the recomputed log carries them
                CampaignEvent::StatusChanged { .. } => {}
            }
        }
        if c.events != events {
            return Err(Error::InvalidInput("replayed event log differs from the original".into()));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{ccd_runs, PlantOracle};

    fn ccd_config(mode: Mode) -> CampaignConfig {
        CampaignConfig::moulding(mode).with_seed_design(ccd_runs().settings)
    }

    fn observe_all(c: &mut CampaignState, plant: &PlantOracle) {
        let k = c.config.objectives.len();
        for id in c.pending_ids() {
            let s = c.trial(&id).unwrap().settings.clone();
            let r = plant.mean_response(&s).unwrap().to_vec();
            c.record_observation(&id, r[..k].to_vec()).unwrap();
        }
    }

    #[test]
    fn seeds_are_distinct_design_rows() {
        let cfg = ccd_config(Mode::Multi);
        let rows = ccd_runs().settings;
        let s = CampaignState::seed_campaign(cfg.clone()).unwrap();
        assert_eq!(s.trials.len(), 12);
        assert_eq!(s.status, CampaignStatus::Seeding);
        for t in &s.trials {
            assert!(rows.contains(&t.settings));
        }
        let picked: std::collections::HashSet<String> = s.trials.iter().map(|t| format!("{:?}", t.settings)).collect();
        // centre replicates are identical rows, so compare indices via a second draw instead
        assert!(picked.len() >= 6);
        assert_eq!(CampaignState::seed_campaign(cfg).unwrap(), s);
    }

    #[test]
    fn whole_design_when_count_matches() {
        let rows = ccd_runs().settings;
        let mut cfg = ccd_config(Mode::Multi);
        cfg.seed_count = rows.len();
        let s = CampaignState::seed_campaign(cfg).unwrap();
        let mut a: Vec<String> = s.trials.iter().map(|t| format!("{:?}", t.settings)).collect();
        let mut b: Vec<String> = rows.iter().map(|r| format!("{r:?}")).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ccd_config(Mode::Multi);
        cfg.seed_count = 40;
        assert!(CampaignState::seed_campaign(cfg).is_err());
        let mut cfg = CampaignConfig::moulding(Mode::Single);
        cfg.objectives = Objective::injection_moulding();
        assert!(cfg.validate().is_err());
        let mut cfg = CampaignConfig::moulding(Mode::Multi);
        cfg.objectives[1].threshold = None;
        assert!(cfg.validate().is_err());
        let mut cfg = CampaignConfig::moulding(Mode::Multi);
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn threshold_stops_multi_campaign() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        let ids = s.pending_ids();
        for id in &ids[..ids.len() - 1] {
            s.record_observation(id, vec![7.77, 28.8]).unwrap();
        }
        assert_eq!(s.status, CampaignStatus::Seeding);
        s.record_observation(ids.last().unwrap(), vec![6.51, 32.9]).unwrap();
        assert_eq!(s.status, CampaignStatus::ThresholdMet);
        assert_eq!(s.check_stop(), CampaignStatus::ThresholdMet);
    }

    #[test]
    fn above_threshold_continues() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        for id in s.pending_ids() {
            s.record_observation(&id, vec![7.77, 28.8]).unwrap();
        }
        assert_eq!(s.status, CampaignStatus::Proposing);
    }

    #[test]
    fn observation_errors_leave_state_unchanged() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        let id = s.pending_ids()[0].clone();
        s.record_observation(&id, vec![8.0, 40.0]).unwrap();
        let before = s.clone();
        assert!(matches!(s.record_observation(&id, vec![1.0, 1.0]), Err(Error::AlreadyObserved(_))));
        assert!(matches!(s.record_observation("nope", vec![1.0, 1.0]), Err(Error::UnknownTrial(_))));
        let other = s.pending_ids()[0].clone();
        assert!(s.record_observation(&other, vec![f64::NAN, 1.0]).is_err());
        assert!(s.record_observation(&other, vec![1.0]).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn suggestions_require_observations() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        assert!(matches!(s.next_suggestions(None), Err(Error::PendingObservations(ids)) if ids.len() == 12));
    }

    #[test]
    fn suggestion_batches_are_in_box_and_deterministic() {
        let plant = PlantOracle::moulding();
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        observe_all(&mut s, &plant);
        assert_eq!(s.status, CampaignStatus::Proposing);
        let mut twin = s.clone();
        let batch = s.next_suggestions(None).unwrap();
        assert_eq!(batch.len(), 2);
        for t in &batch {
            assert!(s.config.space.validate_point(&t.settings).is_empty());
            assert_eq!(t.provenance, Provenance::Suggested);
        }
        assert_eq!(twin.next_suggestions(None).unwrap(), batch);
        assert_eq!(s.trials.len(), 14);
        assert_eq!(s.iteration, 1);
        assert_eq!(s.status, CampaignStatus::AwaitingObservations);
        assert!(s.next_suggestions(None).is_err());
    }

    #[test]
    fn single_batch_size() {
        let plant = PlantOracle::moulding();
        let mut cfg = ccd_config(Mode::Single);
        cfg.batch_size = 1;
        let mut s = CampaignState::seed_campaign(cfg).unwrap();
        for k in 1..=2 {
            observe_all(&mut s, &plant);
            assert_eq!(s.next_suggestions(None).unwrap().len(), 1);
            assert_eq!(s.trials.len(), 12 + k);
        }
        assert!(s.next_suggestions(Some(2)).is_err());
    }

    #[test]
    fn repeated_batches_converge() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Single)).unwrap();
        assert_eq!(s.check_stop(), CampaignStatus::Seeding);
        let space = s.config.space.clone();
        let a = space.to_coded(&[90.0, 30.0, 7.5, 195.5]).unwrap();
        let b = space.to_coded(&[90.0, 30.0, 7.5, 195.3]).unwrap();
        s.history = vec![vec![a.clone(), a], vec![b.clone(), b]];
        assert_eq!(s.check_stop(), CampaignStatus::Converged);
    }

    #[test]
    fn budget_and_convergence_both_reported() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Single)).unwrap();
        s.config.max_trials = 12;
        let c = vec![0.0; 4];
        s.history = vec![vec![c.clone()], vec![c]];
        assert_eq!(
            s.fired_stop_rules(),
            vec![CampaignStatus::Converged, CampaignStatus::BudgetExhausted]
        );
        assert_eq!(s.check_stop(), CampaignStatus::Converged);
    }

    #[test]
    fn manual_trials() {
        let plant = PlantOracle::moulding();
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        assert!(s.add_manual_trial(vec![80.0, 20.0, 4.0, 210.0]).is_err());
        observe_all(&mut s, &plant);
        assert!(s.add_manual_trial(vec![100.0, 20.0, 4.0, 210.0]).is_err());
        let t = s.add_manual_trial(vec![80.0, 20.0, 4.0, 210.0]).unwrap();
        assert_eq!(t.provenance, Provenance::Manual);
        assert_eq!(s.iteration, 0);
        assert_eq!(s.status, CampaignStatus::AwaitingObservations);
    }

    #[test]
    fn replay_reproduces_campaign() {
        let plant = PlantOracle::moulding();
        let mut c = Campaign::start(ccd_config(Mode::Multi).with_seed(3)).unwrap();
        for _ in 0..2 {
            for id in c.state.pending_ids() {
                let s = c.state.trial(&id).unwrap().settings.clone();
                c.observe(&id, plant.evaluate(&s, 1).unwrap().to_vec()).unwrap();
            }
            if c.state.status != CampaignStatus::Proposing {
                break;
            }
            c.suggest(None).unwrap();
        }
        let again = Campaign::replay(&c.events).unwrap();
        assert_eq!(again, c);

        let mut tampered = c.events.clone();
        if let Some(CampaignEvent::Suggested { trials }) =
            tampered.iter_mut().find(|e| matches!(e, CampaignEvent::Suggested { .. }))
        {
            trials[0].settings[0] += 1e-9;
        }
        assert!(Campaign::replay(&tampered).is_err());
    }

    #[test]
    fn pareto_and_convergence_series() {
        let mut s = CampaignState::seed_campaign(ccd_config(Mode::Multi)).unwrap();
        let ids = s.pending_ids();
        let values = [[8.0, 40.0], [7.0, 45.0], [9.0, 41.0], [8.5, 39.0]];
        for (i, id) in ids.iter().enumerate() {
            s.record_observation(id, values[i % 4].to_vec()).unwrap();
        }
        let front: Vec<Vec<f64>> = s.pareto().iter().map(|t| t.responses.clone().unwrap()).collect();
        assert!(front.iter().all(|p| p != &vec![9.0, 41.0]));
        assert!(front.contains(&vec![7.0, 45.0]) && front.contains(&vec![8.5, 39.0]));
        let conv = s.convergence();
        assert_eq!(conv.len(), 1);
        assert_eq!(conv[0].best, vec![7.0, 39.0]);
        assert_eq!(conv[0].observed, 12);
    }
}
