//! Closed-loop campaigns against the simulated plant.

use serde::{Deserialize, Serialize};

use crate::engine::{CampaignConfig, CampaignState, CampaignStatus, Mode};
use crate::error::{Error, Result};
use crate::plant::{ccd_runs, PlantOracle, RESPONSE_COLUMNS};

/// How one simulated campaign ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub status: CampaignStatus,
    pub trials: usize,
    pub post_seed_trials: usize,
    /// Best observed value per objective, after the seeds and then after
    /// every post-seed trial.
    pub best_after: Vec<Vec<f64>>,
    pub state: CampaignState,
}

impl RunOutcome {
    /// Best observed values once `k` post-seed trials have been observed.
    pub fn best_within(&self, k: usize) -> &[f64] {
        &self.best_after[k.min(self.best_after.len() - 1)]
    }
}

/// Default simulation campaign: CCD seed runs and a budget of 10
/// post-seed trials for multi mode, 8 for single mode.
pub fn default_config(mode: Mode, seed: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::moulding(mode).with_seed(seed).with_seed_design(ccd_runs().settings);
    cfg.max_trials = cfg.seed_count
        + match mode {
            Mode::Multi => 10,
            Mode::Single => 8,
        };
    cfg
}

fn response_index(config: &CampaignConfig) -> Result<Vec<usize>> {
    config
        .objectives
        .iter()
        .map(|o| {
            RESPONSE_COLUMNS
                .iter()
                .position(|c| *c == o.name)
                .ok_or_else(|| Error::InvalidInput(format!("plant has no response `{}`", o.name)))
        })
        .collect()
}

/// Run one campaign to a terminal status, answering every pending trial
/// with a noisy plant evaluation seeded from `(config.seed, trial number)`.
pub fn run_campaign(config: CampaignConfig, plant: &PlantOracle) -> Result<RunOutcome> {
    let columns = response_index(&config)?;
    let seed = config.seed;
    let seed_count = config.seed_count;
    let mut state = CampaignState::seed_campaign(config)?;
    let mut order: Vec<Vec<f64>> = Vec::new();
    loop {
        for id in state.pending_ids() {
            if state.status.is_terminal() {
                break;
            }
            let n = state.trials.iter().position(|t| t.id == id).expect("pending id exists") as u64;
            let settings = state.trial(&id).expect("pending id exists").settings.clone();
            let y = plant.evaluate(&settings, seed.wrapping_mul(1_000_003).wrapping_add(n))?.to_vec();
            let r: Vec<f64> = columns.iter().map(|&c| y[c]).collect();
            state.record_observation(&id, r.clone())?;
            order.push(r);
        }
        if state.status.is_terminal() {
            break;
        }
        state.next_suggestions(None)?;
    }

    let k = columns.len();
    let mut best = vec![f64::INFINITY; k];
    let mut best_after = Vec::new();
    for (i, r) in order.iter().enumerate() {
        for (b, v) in best.iter_mut().zip(r) {
            *b = b.min(*v);
        }
        if i + 1 >= seed_count {
            best_after.push(best.clone());
        }
    }
    let trials = order.len();
    Ok(RunOutcome {
        seed,
        status: state.status,
        trials,
        post_seed_trials: trials.saturating_sub(seed_count),
        best_after,
        state,
    })
}

/// Summary over many seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub runs: Vec<RunOutcome>,
    pub successes: usize,
}

impl SimulationSummary {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.runs.len().max(1) as f64
    }
}

/// Run `seeds` campaigns built by `make_config(seed)` and count those
/// satisfying `success`.
pub fn sweep<C, S>(seeds: impl IntoIterator<Item = u64>, plant: &PlantOracle, make_config: C, success: S) -> Result<SimulationSummary>
where
    C: Fn(u64) -> CampaignConfig,
    S: Fn(&RunOutcome) -> bool,
{
    let runs = seeds
        .into_iter()
        .map(|s| run_campaign(make_config(s), plant))
        .collect::<Result<Vec<_>>>()?;
    let successes = runs.iter().filter(|r| success(r)).count();
    Ok(SimulationSummary { runs, successes })
}
