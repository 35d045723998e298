use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adeval::data::{load_dataset, save_cache, TabularDataset};
use adeval::engine::audit::{audit_class_swap, audit_ratio_manipulation, audit_split_bias};
use adeval::engine::config::{load_config, Config, DATA_DIR_ENV};
use adeval::engine::report::{load_entries, render_report, write_experiment};
use adeval::engine::{run_experiment, subsampled, DatasetSummary, DetectorSpec};
use adeval::error::ConfigError;
use adeval::split::{self, write_index_list};
use adeval::{Error, ErrorKind, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(name = "adeval", version, about = "Anomaly detection evaluation harness")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config value, e.g. `experiment.thyroid_lof.n_runs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, encode and scale datasets, and write binary feature caches.
    Ingest {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Datasets to ingest; defaults to every declared or referenced one.
        #[arg(long)]
        dataset: Vec<String>,
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
    },
    /// Run experiments and render the aggregate report.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Experiments to run; defaults to all of them.
        #[arg(short, long)]
        experiment: Vec<String>,
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
    },
    /// Reproduce an evaluation inconsistency on one experiment.
    Audit {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(value_enum)]
        kind: AuditKind,
        #[arg(short, long)]
        experiment: String,
        /// Positive-class resampling factors for the ratio audit.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        factors: Vec<f64>,
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
    },
    /// Re-render aggregate.csv and report.md from stored results.
    Report {
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
    },
    /// Write train/test index lists and the feature cache for external
    /// detectors.
    ExportSplit {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long)]
        experiment: String,
        /// Number of runs to export; defaults to the experiment's n_runs.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditKind {
    SplitBias,
    ClassSwap,
    Ratio,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Detector => 4,
        ErrorKind::Io => 1,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Detector => "detector",
        ErrorKind::Io => "io",
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("create {}", dir.display()), e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(format!("write {}", path.display()), e))
}

fn open(cfg: &ConfigArgs) -> Result<Config> {
    let config = load_config(&cfg.config, &cfg.overrides, cfg.data_dir.as_deref())?;
    info!("config {} with data dir {}", cfg.config.display(), config.data_dir.display());
    Ok(config)
}

fn load(config: &Config, name: &str) -> Result<TabularDataset> {
    let schema = config.dataset_schema(name)?;
    info!("loading {} from {}", name, schema.path.display());
    load_dataset(&schema.path, &schema)
}

fn ingest(config: &Config, names: &[String], out: &Path) -> Result<()> {
    let names: Vec<String> = if names.is_empty() {
        let mut set: BTreeSet<String> = config.file.dataset.keys().cloned().collect();
        set.extend(config.file.experiment.values().map(|e| e.dataset.clone()));
        set.into_iter().collect()
    } else {
        names.to_vec()
    };
    let mut summaries = Vec::new();
    for name in &names {
        let ds = load(config, name)?;
        let (bin, _) = save_cache(&ds, &out.join("cache"))?;
        info!("cached {} at {}", name, bin.display());
        summaries.push(DatasetSummary::of(&ds));
    }
    println!("{}", serde_json::to_string_pretty(&summaries)?);
    Ok(())
}

fn run(config: &Config, names: &[String], out: &Path) -> Result<()> {
    let selected = config.select_experiments(names)?;
    if selected.is_empty() {
        return Err(ConfigError::Invalid("no experiments configured".into()).into());
    }
    write(&out.join("resolved-config.toml"), &config.resolved_toml())?;
    for (name, spec) in &selected {
        let ds = load(config, &spec.dataset)?;
        info!("experiment {name}: {} runs, split seed {}", spec.n_runs, spec.split.seed);
        let result = run_experiment(name, &ds, spec, &config.base_dir)?;
        let dir = write_experiment(out, &result)?;
        let a = &result.aggregate;
        println!(
            "{name}: F1 {:.1} ± {:.1}, AUROC {:.1} ± {:.1}, AUPR {:.1} ± {:.1} ({})",
            100.0 * a.f1.mean,
            100.0 * a.f1.std,
            100.0 * a.auroc.mean,
            100.0 * a.auroc.std,
            100.0 * a.aupr.mean,
            100.0 * a.aupr.std,
            dir.display()
        );
    }
    render_report(&load_entries(out)?, out)
}

fn audit(config: &Config, kind: AuditKind, name: &str, factors: &[f64], out: &Path) -> Result<()> {
    let spec = config.experiment(name)?;
    let loaded = load(config, &spec.dataset)?;
    let sub = subsampled(&loaded, spec);
    let ds = sub.as_ref().unwrap_or(&loaded);
    let (file, text) = match kind {
        AuditKind::SplitBias => {
            let detector = spec.detector.native().ok_or_else(|| {
                ConfigError::Invalid("the split-bias audit refits the detector and needs a native one".into())
            })?;
            ("split-bias.json", serde_json::to_string_pretty(&audit_split_bias(ds, detector, spec.split.seed)?)?)
        }
        AuditKind::ClassSwap => {
            let result = run_experiment(name, &loaded, spec, &config.base_dir)?;
            let reports: Vec<_> = result
                .score_sets
                .iter()
                .zip(&result.runs)
                .map(|(s, r)| audit_class_swap(s, &r.report.threshold))
                .collect();
            ("class-swap.json", serde_json::to_string_pretty(&reports)?)
        }
        AuditKind::Ratio => {
            let result = run_experiment(name, &loaded, spec, &config.base_dir)?;
            let rows: Vec<Vec<_>> = result
                .score_sets
                .iter()
                .zip(&result.runs)
                .map(|(s, r)| audit_ratio_manipulation(s, &r.report.threshold, factors, r.split_seed))
                .collect::<Result<_>>()?;
            ("ratio.json", serde_json::to_string_pretty(&rows)?)
        }
    };
    let dir = out.join("audit").join(name);
    write(&dir.join(file), &text)?;
    write(&dir.join("resolved-config.toml"), &config.resolved_toml())?;
    println!("{text}");
    Ok(())
}

fn export_split(config: &Config, name: &str, runs: Option<usize>, out: &Path) -> Result<()> {
    let spec = config.experiment(name)?;
    if let DetectorSpec::External(_) = spec.detector {
        info!("exporting splits for external detector {}", spec.display_name());
    }
    let loaded = load(config, &spec.dataset)?;
    let sub = subsampled(&loaded, spec);
    let ds = sub.as_ref().unwrap_or(&loaded);
    save_cache(ds, out)?;
    let n = runs.unwrap_or(spec.n_runs);
    for run in 0..n {
        let run_spec = spec.split.for_run(run);
        let s = split::split(ds, &run_spec)?;
        let dir = out.join(format!("run-{run}"));
        write_index_list(&dir.join("train.csv"), &s.train_indices)?;
        write_index_list(&dir.join("test.csv"), &s.test_indices)?;
        info!("run {run}: split seed {}, {} train / {} test", run_spec.seed, s.train_indices.len(), s.test_indices.len());
    }
    write(&out.join("resolved-config.toml"), &config.resolved_toml())?;
    println!(
        "{}",
        json!({ "experiment": name, "dataset": ds.name(), "runs": n, "out": out.display().to_string() })
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { cfg, dataset, out } => ingest(&open(&cfg)?, &dataset, &out),
        Command::Run { cfg, experiment, out } => run(&open(&cfg)?, &experiment, &out),
        Command::Audit {
            cfg,
            kind,
            experiment,
            factors,
            out,
        } => audit(&open(&cfg)?, kind, &experiment, &factors, &out),
        Command::Report { out } => {
            let entries = load_entries(&out)?;
            render_report(&entries, &out)?;
            println!("{} entries rendered to {}", entries.len(), out.display());
            Ok(())
        }
        Command::ExportSplit {
            cfg,
            experiment,
            runs,
            out,
        } => export_split(&open(&cfg)?, &experiment, runs, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            eprintln!("{}", json!({ "error": kind_name(kind), "message": e.to_string() }));
            ExitCode::from(exit_code(kind))
        }
    }
}
