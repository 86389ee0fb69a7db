//! `ctrl`: reproducible experiments for clustered transfer residual learning.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ctrl_core::bench::{self, Outputs, RunConfig};
use ctrl_core::dataset::{generate_synthetic, write_csv, CsvSchema, SynthConfig};
use ctrl_core::eval::MetricConfig;
use ctrl_core::shift::{self, TheoryConfig};

#[derive(Parser)]
#[command(
    name = "ctrl",
    version,
    about = "Clustered transfer residual learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the configuration.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Synth(Common),
    /// Train and score every requested family and learner.
    Benchmark(Common),
    /// Run the cluster search for one target or all sources.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Source id; all sources when omitted.
        #[arg(long)]
        target: Option<String>,
    },
    /// Monte Carlo check of the excess-risk formula.
    Theory(Common),
    /// Re-score the saved predictions of a benchmark directory.
    Evaluate {
        /// Directory written by `ctrl benchmark`.
        run: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            bail!("invalid value for `workers`: must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    Ok(())
}

/// Collects timestamped progress lines and echoes them to stderr.
#[derive(Default)]
struct Log(Mutex<Vec<String>>);

impl Log {
    fn line(&self, msg: &str) {
        let stamped = format!(
            "{} {msg}",
            chrono::Local::now().format("%Y-%m-%dT%H:%M:%S%.3f%:z")
        );
        eprintln!("{stamped}");
        self.0.lock().expect("log lock").push(stamped);
    }

    fn text(&self) -> Vec<u8> {
        let mut s = self.0.lock().expect("log lock").join("\n");
        s.push('\n');
        s.into_bytes()
    }
}

fn load_run(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .context("`--config` is required for this command")?;
    let mut cfg: RunConfig = read_json(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    cfg.validate()?;
    init_workers(cfg.workers)?;
    Ok(cfg)
}

fn write(dir: &Path, outputs: &Outputs) -> Result<()> {
    bench::write_outputs(dir, outputs)
        .with_context(|| format!("writing outputs to {}", dir.display()))
}

fn quantile(sorted: &[usize], q: f64) -> usize {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn cmd_synth(common: &Common) -> Result<()> {
    init_workers(common.workers)?;
    let cfg: SynthConfig = match &common.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    let seed = common.seed.unwrap_or(0);
    let (ds, truth) = generate_synthetic(&cfg, seed)?;
    fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    let data = common.out.join("data.csv");
    let sidecar = common.out.join("ground_truth.json");
    let result = write_csv(&ds, &data, &CsvSchema::default())
        .map_err(anyhow::Error::from)
        .and_then(|_| {
            let mut text = serde_json::to_string_pretty(&truth)?;
            text.push('\n');
            fs::write(&sidecar, text).with_context(|| format!("writing {}", sidecar.display()))
        });
    if let Err(e) = result {
        let _ = fs::remove_file(&data);
        let _ = fs::remove_file(&sidecar);
        return Err(e);
    }
    let mut sizes: Vec<usize> = truth.source_sizes.values().copied().collect();
    sizes.sort_unstable();
    println!(
        "rows {} sources {} features {} | source size min {} q25 {} median {} q75 {} max {}",
        ds.n_rows(),
        ds.n_sources(),
        ds.n_features(),
        sizes[0],
        quantile(&sizes, 0.25),
        quantile(&sizes, 0.5),
        quantile(&sizes, 0.75),
        sizes[sizes.len() - 1]
    );
    Ok(())
}

fn cmd_benchmark(common: &Common) -> Result<()> {
    let cfg = load_run(common)?;
    let log = Log::default();
    log.line(&format!("benchmark seed {}", cfg.seed));
    let run = bench::run_benchmark(&cfg, &|m| log.line(m))?;
    let mut outputs = run.outputs;
    for l in &run.report.learners {
        for m in &l.eval.models {
            log.line(&format!(
                "{} {}: mse {:.5} small_mse {:.5} rwa {} rank {:.2}",
                l.learner,
                m.model,
                m.mse,
                m.small_mse,
                m.rwa.map_or("NA".into(), |v| format!("{v:.5}")),
                m.average_rank
            ));
        }
    }
    outputs.insert("run.log".into(), log.text());
    write(&common.out, &outputs)?;
    println!("wrote {}", common.out.display());
    Ok(())
}

fn cmd_cluster(common: &Common, target: Option<&str>) -> Result<()> {
    let cfg = load_run(common)?;
    let log = Log::default();
    let outputs = bench::run_clusters(&cfg, target, &|m| log.line(m))?;
    write(&common.out, &outputs)?;
    println!("wrote {}", common.out.display());
    Ok(())
}

/// Returns whether every scenario passed.
fn cmd_theory(common: &Common) -> Result<bool> {
    init_workers(common.workers)?;
    let mut cfg: TheoryConfig = match &common.config {
        Some(p) => read_json(p)?,
        None => TheoryConfig::default(),
    };
    if let Some(s) = common.seed {
        for sc in &mut cfg.scenarios {
            sc.sim.seed = s;
        }
    }
    let results = shift::run_theory(&cfg)?;
    let mut outputs = Outputs::new();
    outputs.insert("theory.csv".into(), shift::sweep_csv(&results).into_bytes());
    let mut summary = serde_json::to_string_pretty(&results)?;
    summary.push('\n');
    outputs.insert("theory.json".into(), summary.into_bytes());
    write(&common.out, &outputs)?;
    let mut all = true;
    for r in &results {
        let e = &r.estimate;
        println!(
            "{} {}: empirical {:.4} ± {:.4} (SE), theory {:.4}, relative gap {:.2}%",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            e.empirical_mean,
            e.standard_error,
            e.theory,
            100.0 * e.relative_gap
        );
        all &= r.pass;
    }
    Ok(all)
}

fn cmd_evaluate(run: &Path, common: &Common) -> Result<()> {
    init_workers(common.workers)?;
    let metrics: Option<MetricConfig> = match &common.config {
        Some(p) => Some(read_json(p)?),
        None => None,
    };
    let rescored = bench::rescore(run, metrics.as_ref())?;
    write(&common.out, &rescored.outputs)?;
    print!("{}", rescored.report.table1_csv());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth(c) => cmd_synth(c).map(|_| true),
        Command::Benchmark(c) => cmd_benchmark(c).map(|_| true),
        Command::Cluster { common, target } => cmd_cluster(common, target.as_deref()).map(|_| true),
        Command::Theory(c) => cmd_theory(c),
        Command::Evaluate { run, common } => cmd_evaluate(run, common).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
