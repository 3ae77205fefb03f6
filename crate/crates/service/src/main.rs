use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use midas_core::advisor::{Advisor, PriorMode};
use midas_core::case::{CaseInput, HistoryEntry};
use midas_core::cultivation::{CultivationFactors, NitrogenStrategy, PlantDensity, Resistance, SoilType};
use midas_core::economics::Economics;
use midas_core::evaluation::{benchmark_grid, policy_benchmark, structure_study};
use midas_core::params::Params;
use midas_core::schema::SeverityBand;
use midas_core::thermal::ClimateNormals;
use midas_core::assembly::BlockingPriors;
use midas_service::{Service, WhatIfRequest};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "midas", version, about = "Mildew fungicide advisor")]
struct Cli {
    /// Parameter file (JSON); missing fields take their defaults.
    #[arg(long, global = true, env = "MIDAS_PARAMS")]
    params: Option<PathBuf>,
    /// Daily climate normals (CSV) for thermal-week segmentation.
    #[arg(long, global = true)]
    climate: Option<PathBuf>,
    /// Directory of case journals.
    #[arg(long, global = true, env = "MIDAS_STORE", default_value = "midas-store")]
    store: PathBuf,
    /// Simulation seed for `eval`; discretization seed for the other commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Use per-context priors in the blocked model.
    #[arg(long, global = true)]
    per_context_priors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Create a case and print it.
    NewCase(NewCase),
    /// Record a dated observation.
    Observe {
        id: String,
        #[arg(long)]
        date: NaiveDate,
        #[arg(long)]
        incidence_bin: usize,
        /// Coarse severity band: 0-2, 2-20 or 20-100.
        #[arg(long, value_parser = serde_enum::<SeverityBand>)]
        band: Option<SeverityBand>,
        /// Dose applied after the observation, as a fraction of the label dose.
        #[arg(long, default_value_t = 0.0)]
        dose: f64,
    },
    /// Recommend the current treatment.
    Recommend { id: String },
    /// Predict severity with the current treatment fixed.
    Whatif {
        id: String,
        #[arg(long)]
        dose: f64,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
    },
    /// Dose of the empirical threshold rule.
    Baseline { id: String },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Synthetic-data evaluations.
    #[command(subcommand)]
    Eval(Eval),
}

#[derive(Args)]
struct NewCase {
    /// Full case input as JSON; overrides the other flags.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    weeks: usize,
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long, value_parser = serde_enum::<Resistance>, default_value = "medium")]
    resistance: Resistance,
    #[arg(long, value_parser = serde_enum::<NitrogenStrategy>, default_value = "normal")]
    nitrogen: NitrogenStrategy,
    #[arg(long, value_parser = serde_enum::<SoilType>, default_value = "loam")]
    soil: SoilType,
    #[arg(long, value_parser = serde_enum::<PlantDensity>, default_value = "normal")]
    density: PlantDensity,
    #[arg(long)]
    expected_yield: Option<f64>,
    #[arg(long)]
    grain_price: Option<f64>,
    #[arg(long)]
    fungicide_cost: Option<f64>,
    #[arg(long)]
    spray_cost: Option<f64>,
}

#[derive(Subcommand)]
enum Eval {
    /// Compare the one-step severity predictions of both structures.
    CompareStructures {
        #[arg(long, default_value_t = 1000)]
        seasons: usize,
    },
    /// Roll out MIDAS, the threshold rule, never and always spraying.
    Benchmark {
        #[arg(long, default_value_t = 1000)]
        rollouts: usize,
    },
}

fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn emit<T: Serialize + ?Sized>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        Format::Text => println!("{}", text()),
    }
    Ok(())
}


impl Cli {
    fn params(&self) -> Result<Params> {
        let mut params = match &self.params {
            Some(path) => Params::from_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => Params::default(),
        };
        if let (Some(seed), false) = (self.seed, matches!(self.command, Command::Eval(_))) {
            params.seed = seed;
        }
        Ok(params)
    }

    fn advisor(&self) -> Result<Advisor> {
        let mode = if self.per_context_priors { PriorMode::PerContext } else { PriorMode::Fixed };
        let mut advisor = Advisor::new(self.params()?).with_prior_mode(mode);
        if let Some(path) = &self.climate {
            advisor = advisor.with_climate(ClimateNormals::from_path(path).with_context(|| format!("reading {}", path.display()))?);
        }
        Ok(advisor)
    }

    fn service(&self) -> Result<Service> {
        Ok(Service::new(&self.store, self.advisor()?)?)
    }
}

fn case_input(args: &NewCase) -> Result<CaseInput> {
    if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(serde_json::from_str(&text)?);
    }
    let d = Economics::default();
    Ok(CaseInput {
        cultivation: CultivationFactors {
            variety_resistance: args.resistance,
            nitrogen_strategy: args.nitrogen,
            soil_type: args.soil,
            plant_density: args.density,
        },
        economics: Economics {
            expected_yield: args.expected_yield.unwrap_or(d.expected_yield),
            grain_price: args.grain_price.unwrap_or(d.grain_price),
            fungicide_cost_per_label_dose: args.fungicide_cost.unwrap_or(d.fungicide_cost_per_label_dose),
            spray_operation_cost: args.spray_cost.unwrap_or(d.spray_operation_cost),
        },
        weeks_to_maturity: args.weeks,
        start_date: args.start.unwrap_or_else(|| chrono::Local::now().date_naive()),
    })
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let format = cli.format;
    match &cli.command {
        Command::NewCase(args) => {
            let created = cli.service()?.create(case_input(args)?)?;
            for w in &created.warnings {
                eprintln!("warning: {w}");
            }
            emit(format, &created, || created.case.id.clone())?;
        }
        Command::Observe { id, date, incidence_bin, band, dose } => {
            let entry = HistoryEntry { date: *date, incidence_bin: *incidence_bin, severity_band: *band, applied_dose: *dose };
            let case = cli.service()?.observe(id, entry)?;
            emit(format, &case, || format!("case {} version {}, {} entries", case.id, case.version, case.history.len()))?;
        }
        Command::Recommend { id } => {
            let r = cli.service()?.recommend(id)?;
            if format == Format::Text && !r.model_diagnostics.warnings.is_empty() {
                eprintln!("{} model diagnostics, shown with --format json", r.model_diagnostics.warnings.len());
            }
            emit(format, &r, || {
                let rows: Vec<String> = r.doses.iter().zip(&r.per_dose_eu).map(|(d, eu)| format!("  dose {d:<6} {eu:>10.2}")).collect();
                format!("{}\nexpected utility per dose:\n{}", r.advisory_text, rows.join("\n"))
            })?;
        }
        Command::Whatif { id, dose, horizon } => {
            let w = cli.service()?.what_if(id, &WhatIfRequest { dose: *dose, horizon: *horizon })?;
            emit(format, &w, || {
                w.steps.iter().map(|s| format!("step {:>2}: mean severity {:.3}%", s.step, s.mean_severity)).collect::<Vec<_>>().join("\n")
            })?;
        }
        Command::Baseline { id } => {
            let b = cli.service()?.baseline(id)?;
            emit(format, &b, || format!("threshold rule dose {}", b.dose))?;
        }
        Command::Serve { port, host } => {
            let service = Arc::new(cli.service()?);
            tokio::runtime::Runtime::new()?.block_on(midas_service::api::serve(service, (*host, *port).into()))?;
        }
        Command::Eval(eval) => {
            let params = cli.params()?;
            let seed = cli.seed.unwrap_or(0);
            match eval {
                Eval::CompareStructures { seasons } => {
                    let r = structure_study(&params, *seasons, seed, cli.per_context_priors)?;
                    emit(format, &r, || r.to_string())?;
                }
                Eval::Benchmark { rollouts } => {
                    let fixed = |_: &_| Ok(BlockingPriors::Fixed(params.priors.fixed.clone()));
                    let r = policy_benchmark(&params, &benchmark_grid(&params), fixed, *rollouts, seed)?;
                    emit(format, &r, || r.to_string())?;
                }
            }
        }
    }
    Ok(())
}
