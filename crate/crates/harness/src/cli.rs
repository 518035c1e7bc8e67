use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aeronav::config::PredictorKind;
use aeronav::{run_filter, FilterConfig, FilterVariant, SensorKind};
use aeronav_sim::Scenario;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_config, parse_aero_model};
use crate::error::{HarnessError, Result};
use crate::experiments::{
    coarse_alignment, convergence_sweep, denial_experiment, experiment_config, fit_aero, initial_condition,
    predict_airflow, Predictor,
};
use crate::io;
use crate::metrics::{compute_metrics, InnovationSummary, MetricsOptions, MetricsReport};

#[derive(Debug, Parser)]
#[command(name = "aeronav", version, about = "Invariant error-state navigation for fixed-wing aircraft")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Mixed,
    Convergence,
    Denial,
    Training,
}

impl Preset {
    fn scenario(self, seed: u64) -> Scenario {
        match self {
            Preset::Mixed => Scenario::mixed(seed),
            Preset::Convergence => Scenario::convergence(seed),
            Preset::Denial => Scenario::denial(seed),
            Preset::Training => Scenario::training(seed),
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct ScenarioArgs {
    /// Built-in scenario.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Scenario file (TOML); overrides --preset.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Random seed; overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sensor log, truth and a matching filter configuration.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Zero all sensor errors and wind turbulence.
        #[arg(long)]
        noiseless: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a filter over a sensor log.
    Run {
        #[arg(long)]
        log: PathBuf,
        /// Truth CSV; enables metrics and initializes the filter from truth.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured variant.
        #[arg(long)]
        variant: Option<FilterVariant>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Initial-attitude convergence study.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Initial roll and pitch offsets, degrees.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-30,-15,15,30")]
        biases: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "RIEKF,ESEKF")]
        variant: Vec<FilterVariant>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// GNSS outage study with a pure-inertial control.
    Denial {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_value = "RIEKF,LIEKF,ESEKF")]
        variant: Vec<FilterVariant>,
        /// Airflow predictor; `ls` fits coefficients on a training flight first.
        #[arg(long, default_value = "ls")]
        predictor: PredictorKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Least-squares identification of the aerodynamic coefficients.
    FitAero {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Batch airflow-angle prediction along a log.
    Predict {
        #[arg(long)]
        log: PathBuf,
        /// Coefficients from fit-aero, or LSTM weights.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "ls")]
        kind: PredictorKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn scenario(args: &ScenarioArgs, default: Preset) -> Result<Scenario> {
    let mut sc = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            toml::from_str::<Scenario>(&text)?
        }
        None => args.preset.unwrap_or(default).scenario(0),
    };
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    sc.validate()?;
    Ok(sc)
}

fn config_or(path: &Option<PathBuf>, fallback: impl FnOnce() -> FilterConfig) -> Result<FilterConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(fallback()),
    }
}

#[derive(Debug, Serialize)]
struct RunReport {
    variant: FilterVariant,
    records: usize,
    metrics: Option<MetricsReport>,
    innovations: BTreeMap<String, InnovationSummary>,
}

fn innovation_summary(h: &aeronav::StateHistory) -> BTreeMap<String, InnovationSummary> {
    h.innovations
        .iter()
        .map(|(k, s): (&SensorKind, _)| {
            let v = InnovationSummary {
                applied: s.applied,
                gated: s.gated,
                skipped: s.skipped,
                stale: s.stale,
                mean_nis: s.mean_nis(),
            };
            (k.tag().to_string(), v)
        })
        .collect()
}

fn rate(count: usize, total: usize) -> String {
    format!("{count}/{total}")
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { scenario: args, noiseless, out_dir } => {
            let mut sc = scenario(&args, Preset::Mixed)?;
            if noiseless {
                sc = sc.noiseless();
            }
            let sim = aeronav_sim::simulate(&sc)?;
            io::write_sensor_log_file(&sim.events, &out_dir.join("sensors.csv"))?;
            io::write_truth_file(&sim.truth, &out_dir.join("truth.csv"))?;
            let cfg = toml::to_string(&experiment_config(&sc)).map_err(|e| HarnessError::Data(e.to_string()))?;
            write_text(&out_dir.join("config.toml"), &cfg)?;
            let sc_text = toml::to_string(&sc).map_err(|e| HarnessError::Data(e.to_string()))?;
            write_text(&out_dir.join("scenario.toml"), &sc_text)?;
            println!("{} events, {} truth records -> {}", sim.events.len(), sim.truth.len(), out_dir.display());
        }
        Command::Run { log, truth, config, variant, out_dir } => {
            let cfg = config_or(&config, FilterConfig::default)?;
            let variant = variant.unwrap_or(cfg.filter.variant);
            let events = io::read_sensor_log_file(&log)?;
            let truth = truth.map(|p| io::read_truth_file(&p)).transpose()?;
            let init = match &truth {
                Some(t) if !t.is_empty() => initial_condition(&t[0], &cfg, 0.0),
                _ => coarse_alignment(&events, &cfg)?,
            };
            let history = run_filter(&events, &cfg, variant, &init)?;
            io::write_states_file(&history, &out_dir.join("states.csv"))?;
            let metrics = truth.map(|t| compute_metrics(&history, &t, &MetricsOptions::default())).transpose()?;
            if let Some(m) = &metrics {
                println!("{variant}: attitude RMSE {:.4} deg, position RMSE n/e/d {:.3}/{:.3}/{:.3} m",
                    m.channels["attitude_deg"].rmse, m.channels["pos_n"].rmse, m.channels["pos_e"].rmse, m.channels["pos_d"].rmse);
            }
            let report = RunReport { variant, records: history.len(), innovations: innovation_summary(&history), metrics };
            io::write_json_file(&report, &out_dir.join("metrics.json"))?;
        }
        Command::Sweep { scenario: args, seeds, biases, variant, config, out_dir } => {
            let sc = scenario(&args, Preset::Convergence)?;
            let mut cfg = config_or(&config, || experiment_config(&sc))?;
            if config.is_none() {
                cfg.filter.gate_probability = None;
            }
            let seed_list: Vec<u64> = (0..seeds.max(1)).map(|k| sc.seed + k).collect();
            let rows = convergence_sweep(&sc, &cfg, &biases, &variant, &seed_list, &MetricsOptions::default())?;
            io::write_rows_file(&rows, &out_dir.join("sweep.csv"))?;
            for v in &variant {
                let mine: Vec<_> = rows.iter().filter(|r| r.variant == v.name()).collect();
                let converged = mine.iter().filter(|r| r.time_to_converge.is_some()).count();
                println!("{v}: converged {}", rate(converged, mine.len()));
            }
        }
        Command::Denial { scenario: args, variant, predictor, config, out_dir } => {
            let sc = scenario(&args, Preset::Denial)?;
            let mut cfg = config_or(&config, || experiment_config(&sc))?;
            if config.is_none() {
                cfg.filter.predictor = predictor;
                match predictor {
                    PredictorKind::Ls => {
                        let mut training = Scenario::training(sc.seed.wrapping_add(1));
                        training.airframe = sc.airframe;
                        training.aero = sc.aero;
                        let sim = aeronav_sim::simulate(&training)?;
                        let fit = fit_aero(&sim.events, &cfg)?;
                        io::write_json_file(&fit, &out_dir.join("aero_fit.json"))?;
                        cfg.models.aero = Some(fit.coefficients);
                    }
                    PredictorKind::Lstm => {
                        return Err(HarnessError::Usage("the LSTM predictor needs --config with filter.lstm_model".into()))
                    }
                    _ => {}
                }
            }
            let outcome = denial_experiment(&sc, &cfg, &variant)?;
            io::write_rows_file(&outcome.rows, &out_dir.join("denial.csv"))?;
            io::write_json_file(&outcome.reports, &out_dir.join("denial_metrics.json"))?;
            for r in &outcome.rows {
                println!("{:>6}: max horizontal {:8.2} m, max vertical {:6.2} m", r.variant, r.max_horizontal, r.max_vertical);
            }
        }
        Command::FitAero { log, config, out_dir } => {
            let cfg = config_or(&config, FilterConfig::default)?;
            let events = io::read_sensor_log_file(&log)?;
            let fit = fit_aero(&events, &cfg)?;
            io::write_json_file(&fit, &out_dir.join("aero_fit.json"))?;
            println!("{} samples, lift RMS {:.2e}, side RMS {:.2e}", fit.samples, fit.lift_rms, fit.side_rms);
        }
        Command::Predict { log, model, kind, config, out_dir } => {
            let cfg = config_or(&config, FilterConfig::default)?;
            let events = io::read_sensor_log_file(&log)?;
            let text = std::fs::read_to_string(&model).map_err(|e| HarnessError::io(&model, e))?;
            let rows = match kind {
                PredictorKind::Ls => predict_airflow(&events, &cfg, Predictor::Ls(&parse_aero_model(&text)?))?,
                PredictorKind::Lstm => {
                    let m = aeronav::airdata::SequenceModel::from_json(&text)?;
                    predict_airflow(&events, &cfg, Predictor::Lstm(&m))?
                }
                other => return Err(HarnessError::Usage(format!("--kind must be ls or lstm, not {other:?}"))),
            };
            io::write_rows_file(&rows, &out_dir.join("airflow.csv"))?;
            println!("{} predictions", rows.len());
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
