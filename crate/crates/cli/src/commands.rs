//! `adoe` subcommands.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use adoe_core::engine::{Campaign, CampaignConfig, CampaignStatus, Mode};
use adoe_core::linmodel::{anova, fit, QuadraticModel};
use adoe_core::moo::{maximize_desirability, nsga2, DesirabilitySpec, DesirabilityTarget, Evaluator, Nsga2Config};
use adoe_core::plant::{grid_minimum, PlantOracle};
use adoe_core::simulate::{default_config, sweep, RunOutcome};
use adoe_core::{Dataset, Trial};
use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{analyze_campaign, ModelKind};
use crate::api::{self, AppState};
use crate::store::{CampaignRecord, Store};

type SurfaceFn = Box<dyn Fn(&[f64]) -> f64 + Sync>;

pub type CliResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "adoe", version, about = "Adaptive design of experiments for process optimization")]
pub struct Cli {
    /// Directory holding one JSON file per campaign.
    #[arg(long, global = true, default_value = ".adoe")]
    pub store: PathBuf,
    /// Random seed for campaign seeding, optimizers and simulations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Multi,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => Mode::Single,
            ModeArg::Multi => Mode::Multi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Desirability,
    Nsga2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a campaign configuration for the injection-moulding study.
    Init {
        #[arg(long, value_enum, default_value_t = ModeArg::Multi)]
        mode: ModeArg,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Create a campaign from a configuration and draw its seed trials.
    Seed {
        /// Configuration JSON (as written by `init`); defaults to the moulding study.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Multi)]
        mode: ModeArg,
        /// CSV of candidate seed runs, header-matched by factor name.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Campaign id; generated when absent.
        #[arg(long)]
        id: Option<String>,
    },
    /// Propose the next batch of trials.
    Suggest {
        campaign: String,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Record the measured responses of a trial.
    Observe {
        campaign: String,
        trial: String,
        /// One value per objective, in objective order (comma or space separated).
        #[arg(required = true, num_args = 1.., value_delimiter = ',', allow_negative_numbers = true)]
        responses: Vec<f64>,
    },
    /// Show a campaign's status and trials.
    Status { campaign: String },
    /// ANOVA of a table or of a campaign's observations.
    Analyze {
        /// Table-style CSV with factor and response columns.
        #[arg(long, conflicts_with = "campaign")]
        data: Option<PathBuf>,
        #[arg(long)]
        campaign: Option<String>,
        #[arg(long, value_enum, default_value_t = ModelKind::Full)]
        model: ModelKind,
        /// Response column to analyse; defaults to the first objective.
        #[arg(long)]
        response: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Optimize fitted response surfaces from a table.
    Optimize {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        population: usize,
        #[arg(long, default_value_t = 100)]
        generations: usize,
    },
    /// Run closed-loop campaigns against the simulated plant.
    Simulate {
        #[arg(long, value_enum, default_value_t = ModeArg::Multi)]
        mode: ModeArg,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Print a campaign's trials (csv) or its full record (text).
    Export { campaign: String },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Time budget for one suggestion, in seconds.
        #[arg(long, default_value_t = 30.0)]
        budget_secs: f64,
    },
}

fn read_config(path: Option<&PathBuf>, mode: Mode) -> CliResult<CampaignConfig> {
    let config = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?)
            .map_err(|e| format!("{}: {e}", p.display()))?,
        None => CampaignConfig::moulding(mode),
    };
    Ok(config)
}

fn read_table(path: &PathBuf, factors: &[&str], responses: &[&str]) -> CliResult<Dataset> {
    let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Dataset::read_csv(file, factors, responses)?)
}

fn fmt_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn write_trials(out: &mut dyn Write, trials: &[Trial], format: Format, config: &CampaignConfig) -> CliResult<()> {
    match format {
        Format::Csv => {
            let mut header = vec!["id".to_string(), "provenance".to_string()];
            header.extend(config.space.names().iter().map(|s| s.to_string()));
            header.extend(config.objectives.iter().map(|o| o.name.clone()));
            writeln!(out, "{}", header.join(","))?;
            for t in trials {
                let mut row = vec![t.id.clone(), format!("{:?}", t.provenance).to_lowercase()];
                row.extend(t.settings.iter().map(|v| v.to_string()));
                match &t.responses {
                    Some(r) => row.extend(r.iter().map(|v| v.to_string())),
                    None => row.extend(config.objectives.iter().map(|_| String::new())),
                }
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Format::Text => {
            for t in trials {
                let resp = t.responses.as_deref().map_or_else(|| "pending".to_string(), fmt_values);
                writeln!(out, "{:<8} {:<10} [{}] -> {}", t.id, format!("{:?}", t.provenance).to_lowercase(), fmt_values(&t.settings), resp)?;
            }
        }
    }
    Ok(())
}

/// Load, change, save. The CLI is single-process, so no lock is taken.
fn with_campaign<T>(
    store: &Store,
    id: &str,
    change: impl FnOnce(&mut Campaign) -> Result<T, adoe_core::Error>,
) -> CliResult<(Campaign, T)> {
    let (mut record, mut campaign) = store.open_campaign(id)?;
    let value = change(&mut campaign)?;
    record.sync(&campaign);
    store.save(&record)?;
    Ok((campaign, value))
}

fn simulation_success(mode: Mode, grid_min: f64) -> impl Fn(&RunOutcome) -> bool {
    move |run| match mode {
        Mode::Multi => run.status == CampaignStatus::ThresholdMet && run.trials <= 22,
        Mode::Single => run.best_within(8)[0] <= grid_min + 0.5,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let format = cli.format;
    match cli.command {
        Command::Init { mode, out: path } => {
            let mut config = CampaignConfig::moulding(mode.into());
            config.seed = cli.seed.unwrap_or(0);
            let text = serde_json::to_string_pretty(&config)?;
            match path {
                Some(p) => fs::write(&p, text + "\n").map_err(|e| format!("{}: {e}", p.display()))?,
                None => writeln!(out, "{text}")?,
            }
        }
        Command::Seed { config, mode, design, id } => {
            let store = Store::open(&cli.store)?;
            let mut config = read_config(config.as_ref(), mode.into())?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(path) = design {
                let names = config.space.names();
                config.seed_design = Some(read_table(&path, &names, &[])?.settings);
            }
            let id = id.unwrap_or_else(Store::new_id);
            if store.exists(&id) {
                return Err(format!("campaign `{id}` already exists").into());
            }
            let campaign = Campaign::start(config)?;
            store.save(&CampaignRecord::new(id.clone(), &campaign))?;
            if format == Format::Text {
                writeln!(out, "campaign {id}")?;
            }
            write_trials(out, &campaign.state.trials, format, &campaign.state.config)?;
        }
        Command::Suggest { campaign, count } => {
            let store = Store::open(&cli.store)?;
            let (c, trials) = with_campaign(&store, &campaign, |c| c.suggest(count))?;
            write_trials(out, &trials, format, &c.state.config)?;
        }
        Command::Observe { campaign, trial, responses } => {
            let store = Store::open(&cli.store)?;
            let (c, ()) = with_campaign(&store, &campaign, |c| c.observe(&trial, responses))?;
            writeln!(out, "{trial} observed; status {:?}", c.state.status)?;
        }
        Command::Status { campaign } => {
            let store = Store::open(&cli.store)?;
            let (_, c) = store.open_campaign(&campaign)?;
            let s = &c.state;
            if format == Format::Text {
                writeln!(out, "campaign {campaign}: {:?}, iteration {}, {} trials ({} pending)", s.status, s.iteration, s.trials.len(), s.pending_ids().len())?;
                if !s.stop_reasons.is_empty() {
                    writeln!(out, "stop reasons: {:?}", s.stop_reasons)?;
                }
                if let Some(e) = &s.surrogate_error {
                    writeln!(out, "surrogate error: {e}")?;
                }
            }
            write_trials(out, &s.trials, format, &s.config)?;
        }
        Command::Analyze { data, campaign, model, response, config } => match (data, campaign) {
            (Some(path), _) => {
                let config = read_config(config.as_ref(), Mode::Multi)?;
                let response = response.unwrap_or_else(|| config.objectives[0].name.clone());
                let names = config.space.names();
                let table = read_table(&path, &names, &[response.as_str()])?;
                let coded = table
                    .settings
                    .iter()
                    .map(|r| config.space.to_coded(r))
                    .collect::<Result<Vec<_>, _>>()?;
                let spec = model.spec(config.space.dim())?;
                let report = anova(&coded, &table.response_column(0), &spec, &names)?;
                match format {
                    Format::Text => {
                        writeln!(out, "{response}: {model:?} model, {} runs (coded units)", table.len())?;
                        write!(out, "{}", report.to_text())?;
                    }
                    Format::Csv => write!(out, "{}", report.to_csv())?,
                }
            }
            (None, Some(id)) => {
                let store = Store::open(&cli.store)?;
                let (_, c) = store.open_campaign(&id)?;
                let a = analyze_campaign(&c.state)?;
                for r in &a.responses {
                    match format {
                        Format::Text => {
                            writeln!(out, "{}: {:?} model, {} observations (coded units)", r.objective, r.model, a.observations)?;
                            write!(out, "{}", r.anova.to_text())?;
                        }
                        Format::Csv => write!(out, "{}", r.anova.to_csv())?,
                    }
                }
            }
            (None, None) => return Err("analyze needs --data or --campaign".into()),
        },
        Command::Optimize { method, data, config, population, generations } => {
            let config = read_config(config.as_ref(), Mode::Multi)?;
            let names = config.space.names();
            let objective_names: Vec<&str> = config.objectives.iter().map(|o| o.name.as_str()).collect();
            let table = read_table(&data, &names, &objective_names)?;
            let coded = table
                .settings
                .iter()
                .map(|r| config.space.to_coded(r))
                .collect::<Result<Vec<_>, _>>()?;
            let spec = ModelKind::Full.spec(config.space.dim())?;
            let models = (0..objective_names.len())
                .map(|j| fit(&coded, &table.response_column(j), &spec))
                .collect::<Result<Vec<QuadraticModel>, _>>()?;
            let seed = cli.seed.unwrap_or(0);
            match method {
                Method::Desirability => {
                    let observed = DesirabilitySpec::from_observations(&table.responses)?;
                    let targets = config
                        .objectives
                        .iter()
                        .zip(&observed.targets)
                        .map(|(o, t)| DesirabilityTarget {
                            y_min: o.d_min.unwrap_or(t.y_min),
                            y_max: o.d_max.unwrap_or(t.y_max),
                            weight: o.weight,
                        })
                        .collect();
                    let spec = DesirabilitySpec::new(targets)?;
                    let best = maximize_desirability(&models, &spec, &config.space, seed)?;
                    match format {
                        Format::Text => {
                            for (n, v) in names.iter().zip(&best.settings) {
                                writeln!(out, "{n:<16} {v:.3}")?;
                            }
                            for ((n, p), d) in objective_names.iter().zip(&best.predictions).zip(&best.individual) {
                                writeln!(out, "{n:<16} predicted {p:.3}  d = {d:.4}")?;
                            }
                            writeln!(out, "D = {:.4}", best.desirability)?;
                            if let Some(flag) = best.flag {
                                writeln!(out, "note: {flag:?}")?;
                            }
                        }
                        Format::Csv => {
                            let header: Vec<String> = names
                                .iter()
                                .map(|s| s.to_string())
                                .chain(objective_names.iter().map(|s| s.to_string()))
                                .chain(["D".to_string()])
                                .collect();
                            writeln!(out, "{}", header.join(","))?;
                            let row: Vec<String> = best
                                .settings
                                .iter()
                                .chain(&best.predictions)
                                .chain([&best.desirability])
                                .map(|v| v.to_string())
                                .collect();
                            writeln!(out, "{}", row.join(","))?;
                        }
                    }
                }
                Method::Nsga2 => {
                    let closures: Vec<SurfaceFn> = models
                        .iter()
                        .map(|m| {
                            let space = config.space.clone();
                            let m = m.clone();
                            Box::new(move |x: &[f64]| space.to_coded(x).map_or(f64::NAN, |c| m.predict(&c)))
                                as SurfaceFn
                        })
                        .collect();
                    let evaluators: Vec<Evaluator> = closures.iter().map(|b| b.as_ref()).collect();
                    let cfg = Nsga2Config {
                        population,
                        generations,
                        seed,
                        ..Nsga2Config::default()
                    };
                    let result = nsga2(&evaluators, &config.space, &cfg)?;
                    match format {
                        Format::Csv => result.front.write_csv(&names, &objective_names, &mut *out)?,
                        Format::Text => {
                            writeln!(out, "{} non-dominated points", result.front.len())?;
                            for g in &result.history {
                                writeln!(out, "generation {:>4}: hypervolume {:.4}, front {}", g.generation, g.hypervolume, g.front_size)?;
                            }
                            for s in &result.front.solutions {
                                writeln!(out, "[{}] -> [{}]", fmt_values(&s.settings), fmt_values(&s.objectives))?;
                            }
                        }
                    }
                }
            }
        }
        Command::Simulate { mode, seeds } => {
            let mode: Mode = mode.into();
            let plant = PlantOracle::moulding();
            let grid_min = match mode {
                Mode::Single => grid_minimum(&plant, 21).1,
                Mode::Multi => f64::NAN,
            };
            let first = cli.seed.unwrap_or(0);
            let summary = sweep(first..first + seeds, &plant, |s| default_config(mode, s), simulation_success(mode, grid_min))?;
            let ok = simulation_success(mode, grid_min);
            if format == Format::Csv {
                writeln!(out, "seed,status,trials,best,success")?;
            }
            for r in &summary.runs {
                let best = r.best_within(r.post_seed_trials);
                match format {
                    Format::Csv => writeln!(out, "{},{:?},{},{},{}", r.seed, r.status, r.trials, best.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"), ok(r))?,
                    Format::Text => writeln!(out, "seed {:>3}: {:?} after {} trials, best [{}]{}", r.seed, r.status, r.trials, fmt_values(best), if ok(r) { "" } else { "  (miss)" })?,
                }
            }
            if format == Format::Text {
                if mode == Mode::Single {
                    writeln!(out, "grid minimum {grid_min:.3}")?;
                }
                writeln!(out, "success {}/{} ({:.0}%)", summary.successes, summary.runs.len(), 100.0 * summary.success_rate())?;
            }
        }
        Command::Export { campaign } => {
            let store = Store::open(&cli.store)?;
            let (record, c) = store.open_campaign(&campaign)?;
            match format {
                Format::Csv => write_trials(out, &c.state.trials, format, &c.state.config)?,
                Format::Text => writeln!(out, "{}", serde_json::to_string_pretty(&record)?)?,
            }
        }
        Command::Serve { addr, budget_secs } => {
            let store = Store::open(&cli.store)?;
            let state = AppState::new(store, Duration::from_secs_f64(budget_secs));
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on {addr}");
            rt.block_on(api::serve(&addr, state))?;
        }
    }
    Ok(())
}
