//! `cmmd`: simulate, train, sample, evaluate and sweep from the command line.

mod config;
mod error;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cmmd_core::dataset::{Dataset, Provenance};
use cmmd_core::evaluation::{
    evaluate_surrogate, level_means, probe_references, random_test_points, run_sweep_cell, sweep_csv,
    ConditionalSampler, OraclePassthrough, SweepRow,
};
use cmmd_core::simulators::generate_dataset;
use cmmd_core::training::{train, TrainedSurrogate};
use rayon::prelude::*;

use crate::config::{load, EvaluateConfig, SimulateConfig, SweepConfig, TrainingSection};
use crate::error::{CliError, CliResult};

/// Environment variable capping the worker-thread count.
const THREADS_ENV: &str = "CMMD_THREADS";

#[derive(Parser)]
#[command(name = "cmmd", version, about = "Generative surrogates for stochastic simulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulator over an experimental design and write the dataset CSV.
    Simulate {
        /// Simulation config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV to write; metadata goes to `<out>.meta.json`.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a surrogate on a dataset CSV.
    Train {
        /// Dataset CSV (`x1..xk,y`).
        #[arg(long)]
        data: PathBuf,
        /// Training config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Model JSON to write.
        #[arg(long)]
        model: PathBuf,
        /// Per-epoch loss CSV; defaults to `<model>.loss.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw outputs from a trained surrogate.
    Sample {
        /// Model JSON.
        #[arg(long)]
        model: PathBuf,
        /// Input point, comma separated for several coordinates; repeatable.
        #[arg(long = "x", required = true, allow_hyphen_values = true)]
        x: Vec<String>,
        /// Draws per input point.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples CSV to write; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a surrogate against the simulator's reference distributions.
    Evaluate {
        /// Model JSON.
        #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
        model: Option<PathBuf>,
        /// Score the simulator itself, measuring the estimator noise floor.
        #[arg(long)]
        oracle: bool,
        /// Evaluation config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Per-point report CSV.
        #[arg(long)]
        report: PathBuf,
        /// Summary JSON.
        #[arg(long)]
        summary: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train and score one surrogate per (level, repeat); resumable.
    Sweep {
        /// Sweep config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Sweep CSV to write; finished cells are kept in `<out>.cells/`.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmmd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Train { data, config, model, report, seed } => {
            let report = report.unwrap_or_else(|| with_suffix(&model, ".loss.csv"));
            train_cmd(&data, &config, &model, &report, seed)
        }
        Command::Sample { model, x, n, seed, out } => sample(&model, &x, n, seed, out.as_deref()),
        Command::Evaluate { model, oracle: _, config, report, summary, seed } => {
            evaluate(model.as_deref(), &config, &report, &summary, seed)
        }
        Command::Sweep { config, out, seed } => sweep(&config, &out, seed),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes every file to a temporary sibling first and renames only once all
/// temporaries exist, so a failure leaves no partial output behind.
fn write_atomic(files: &[(&Path, &str)]) -> CliResult<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
        tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    }
    Ok(())
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_model(path: &Path) -> CliResult<TrainedSurrogate> {
    TrainedSurrogate::from_json(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: SimulateConfig = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let design = cfg.design();
    let data = generate_dataset(&design, &cfg.simulator)?;
    let meta = serde_json::json!({
        "simulator": cfg.simulator,
        "design": design,
        "rows": data.n_rows(),
    });
    let mut meta = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    meta.push('\n');
    write_atomic(&[(out, &data.to_csv()), (&with_suffix(out, ".meta.json"), &meta)])?;
    eprintln!("wrote {} rows ({} points) to {}", data.n_rows(), data.n_points(), out.display());
    Ok(())
}

fn train_cmd(data: &Path, config: &Path, model_out: &Path, report: &Path, seed: Option<u64>) -> CliResult<()> {
    let section: TrainingSection = load(config)?;
    let cfg = section.resolve(seed)?;
    let dataset = Dataset::from_csv(&read(data)?, Provenance::default())
        .map_err(|e| CliError::Config(format!("{}: {e}", data.display())))?;
    let model = train(&dataset, &cfg)?;
    let r = &model.training_report;
    write_atomic(&[(model_out, &model.to_json()), (report, &r.to_csv())])?;
    eprintln!("trained {} epochs on {} rows in {:.1}s", cfg.epochs, dataset.n_rows(), r.wall_time_secs);
    match r.epoch_losses.last() {
        Some(l) => println!("final loss {l}"),
        None => println!("final loss none (0 epochs)"),
    }
    Ok(())
}

fn parse_point(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|c| {
            let v: f64 = c.trim().parse().map_err(|_| CliError::Config(format!("cannot parse input point '{s}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Config(format!("non-finite input point '{s}'")))
            }
        })
        .collect()
}

fn sample(model_path: &Path, xs: &[String], n: usize, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let model = load_model(model_path)?;
    let points = xs.iter().map(|s| parse_point(s)).collect::<CliResult<Vec<_>>>()?;
    let (in_dim, out_dim) = (model.input_dim(), model.output_dim());
    for p in &points {
        if p.len() != in_dim {
            return Err(CliError::Domain(format!("model expects {in_dim} input coordinate(s), got {}", p.len())));
        }
    }
    let mut header: Vec<String> = (1..=in_dim).map(|i| format!("x{i}")).collect();
    if out_dim == 1 {
        header.push("y".into());
    } else {
        header.extend((1..=out_dim).map(|i| format!("y{i}")));
    }
    let mut csv = header.join(",");
    csv.push('\n');
    for (i, x) in points.iter().enumerate() {
        let prefix: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        let prefix = prefix.join(",");
        let point_seed = cmmd_core::seed::derive_seed(seed, "sample", &[i as u64]);
        for y in model.sample(x, n, point_seed)? {
            let ys: Vec<String> = y.iter().map(|v| v.to_string()).collect();
            csv.push_str(&format!("{prefix},{}\n", ys.join(",")));
        }
    }
    match out {
        Some(path) => write_atomic(&[(path, &csv)]),
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn evaluate(model: Option<&Path>, config: &Path, report: &Path, summary: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: EvaluateConfig = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let sim = cfg.simulator;
    let sampler: Box<dyn ConditionalSampler> = match model {
        Some(path) => Box::new(load_model(path)?),
        None => Box::new(OraclePassthrough(sim)),
    };
    if sampler.input_dim() != sim.input_dim() {
        return Err(CliError::Domain(format!(
            "model expects {} input coordinate(s) but {} has {}",
            sampler.input_dim(),
            sim.kind(),
            sim.input_dim()
        )));
    }
    let points = match cfg.points.clone() {
        Some(p) => p,
        None => random_test_points(&sim, cfg.test_points, cfg.seed)?,
    };
    let settings = cfg.evaluation.settings(cfg.seed)?;
    let rep = evaluate_surrogate(sampler.as_ref(), &sim, &points, &settings)?;
    write_atomic(&[(report, &rep.to_csv(sim.input_dim())), (summary, &rep.summary_json())])?;
    match rep.summary {
        Some(s) => println!(
            "hellinger over {} points: mean {} std {} q10 {} q50 {} q90 {}",
            rep.points.len(),
            s.mean,
            s.std,
            s.q10,
            s.q50,
            s.q90
        ),
        None => println!("hellinger over {} points", rep.points.len()),
    }
    Ok(())
}

fn cell_file(dir: &Path, level: usize, repeat: usize) -> PathBuf {
    dir.join(format!("level{level}-repeat{repeat}.csv"))
}

fn parse_cell(text: &str, path: &Path) -> CliResult<Vec<SweepRow>> {
    let bad = || CliError::Config(format!("corrupt sweep cell file {}", path.display()));
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(SweepRow {
                level: f[0].parse().map_err(|_| bad())?,
                repeat: f[1].parse().map_err(|_| bad())?,
                probe_id: f[2].parse().map_err(|_| bad())?,
                hellinger: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

fn sweep(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: SweepConfig = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let spec = cfg.spec();
    let sim = cfg.simulator;
    spec.validate(&sim)?;
    let template = cfg.template()?;
    let settings = cfg.evaluation.settings(cfg.seed)?;

    // Finished cells live next to the output; a fingerprint of the resolved
    // config guards against resuming with different settings.
    let cells_dir = with_suffix(out, ".cells");
    std::fs::create_dir_all(&cells_dir).map_err(|e| CliError::io(&cells_dir, e))?;
    let mut fingerprint = serde_json::to_string_pretty(&serde_json::json!({
        "spec": spec,
        "simulator": sim,
        "training": template,
        "evaluation": settings,
    }))
    .expect("fingerprint serialises");
    fingerprint.push('\n');
    let fp_path = cells_dir.join("config.json");
    match std::fs::read_to_string(&fp_path) {
        Ok(existing) if existing != fingerprint => {
            return Err(CliError::Config(format!(
                "{} holds cells from a different sweep config; remove it or choose another --out",
                cells_dir.display()
            )))
        }
        Ok(_) => {}
        Err(_) => write_atomic(&[(&fp_path, &fingerprint)])?,
    }

    let cells: Vec<(usize, usize)> =
        spec.levels.iter().flat_map(|&l| (0..spec.repeats).map(move |r| (l, r))).collect();
    let pending: Vec<(usize, usize)> =
        cells.iter().copied().filter(|&(l, r)| !cell_file(&cells_dir, l, r).exists()).collect();
    if pending.len() < cells.len() {
        eprintln!("resuming: {} of {} cells already done", cells.len() - pending.len(), cells.len());
    }
    if !pending.is_empty() {
        let references = probe_references(&spec, &sim, &settings)?;
        pending.par_iter().try_for_each(|&(l, r)| -> CliResult<()> {
            let rows = run_sweep_cell(&spec, &sim, &template, &references, &settings, l, r)?;
            write_atomic(&[(&cell_file(&cells_dir, l, r), &sweep_csv(&rows))])?;
            eprintln!("cell level {l} repeat {r} done");
            Ok(())
        })?;
    }

    let mut by_cell: BTreeMap<(usize, usize), Vec<SweepRow>> = BTreeMap::new();
    for &(l, r) in &cells {
        let path = cell_file(&cells_dir, l, r);
        by_cell.insert((l, r), parse_cell(&read(&path)?, &path)?);
    }
    let rows: Vec<SweepRow> = cells.iter().flat_map(|c| by_cell.remove(c).unwrap_or_default()).collect();
    write_atomic(&[(out, &sweep_csv(&rows))])?;
    for (level, mean) in level_means(&rows) {
        println!("level {level}: mean hellinger {mean}");
    }
    Ok(())
}
