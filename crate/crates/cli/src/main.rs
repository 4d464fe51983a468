use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use wwsvm::bcd::{train_with_observer, Observation};
use wwsvm::{load_model, parse_libsvm_keep_all, read_libsvm_file, save_model, Model, SparseDataset, TrainConfig};

mod table;

use table::{dataset_name, save_records, Record};

/// Linear Weston-Watkins multiclass SVM.
#[derive(Parser)]
#[command(name = "wwsvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write it with its convergence log.
    Train(TrainArgs),
    /// Predict labels for a LIBSVM file with a saved model.
    Predict(PredictArgs),
    /// Train over a grid of C values and write one combined CSV.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Stop once gap ≤ delta · gap after the first outer iteration. In (0, 1].
    #[arg(long, default_value_t = 1e-3, value_parser = parse_delta)]
    delta: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    max_outer: u64,
    /// Visit instances in a fresh seeded random order every outer iteration.
    #[arg(long)]
    shuffle: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self, c: f64) -> TrainConfig {
        TrainConfig {
            c,
            delta: self.delta,
            max_outer: usize::try_from(self.max_outer).unwrap_or(usize::MAX),
            shuffle: self.shuffle,
            seed: self.seed,
            log_every: 1,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training data in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1.0, value_parser = parse_c)]
    c: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
    /// Where to write the per-iteration CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Data in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    /// Write predictions here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    data: PathBuf,
    /// Inclusive range of log2(C), e.g. "-6:3".
    #[arg(long, default_value = "-6:3", allow_hyphen_values = true, value_parser = parse_grid)]
    c_grid: Grid,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    csv: PathBuf,
    /// Test data; fills the test_acc column.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Grid cells to run at once. Defaults to the number of CPUs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Grid {
    lo: i32,
    hi: i32,
}

impl Grid {
    fn values(self) -> Vec<f64> {
        (self.lo..=self.hi).map(|p| 2f64.powi(p)).collect()
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: i32 = lo.trim().parse().map_err(|_| format!("bad lower exponent {lo:?}"))?;
    let hi: i32 = hi.trim().parse().map_err(|_| format!("bad upper exponent {hi:?}"))?;
    if lo > hi {
        return Err(format!("empty grid {lo}:{hi}"));
    }
    if lo < -1000 || hi > 1000 {
        return Err("exponents must lie in -1000..=1000".into());
    }
    Ok(Grid { lo, hi })
}

fn parse_delta(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(format!("delta must lie in (0, 1], got {s}"))
    }
}

fn parse_c(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("C must be positive and finite, got {s}"))
    }
}

fn load_training(path: &Path) -> Result<SparseDataset> {
    let data = read_libsvm_file(path).with_context(|| format!("reading {}", path.display()))?;
    if data.dropped_zero_norm() > 0 {
        log::warn!("skipped {} all-zero instance(s) in {}", data.dropped_zero_norm(), path.display());
    }
    Ok(data)
}

fn load_eval(path: &Path) -> Result<SparseDataset> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_libsvm_keep_all(&bytes[..]).with_context(|| format!("parsing {}", path.display()))
}

/// Trains one cell, returning its log with test accuracy filled in when
/// `test` is given.
fn run_cell(train: &SparseDataset, test: Option<&SparseDataset>, config: &TrainConfig) -> Result<(Model, Vec<Record>)> {
    let mut accs = Vec::new();
    let mut eval_error = None;
    let out = train_with_observer(train, config, |obs: &Observation<'_>| {
        if let Some(test) = test {
            let acc = Model::new(obs.weights.clone(), train.label_map().clone()).and_then(|m| m.accuracy(test));
            match acc {
                Ok(a) => accs.push(Some(a)),
                Err(e) => {
                    eval_error.get_or_insert(e);
                    accs.push(None);
                }
            }
        } else {
            accs.push(None);
        }
    })?;
    if let Some(e) = eval_error {
        return Err(e).context("scoring the test set");
    }
    let records = out
        .report
        .rows
        .iter()
        .zip(accs)
        .map(|(row, test_acc)| Record { c: config.c, row: row.clone(), test_acc })
        .collect();
    Ok((out.model, records))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let data = load_training(&args.data)?;
    let config = args.solver.config(args.c);
    let (model, records) = run_cell(&data, None, &config)?;
    save_model(&model, &args.model).with_context(|| format!("writing {}", args.model.display()))?;
    if let Some(log) = &args.log {
        save_records(log, &dataset_name(&args.data), &records).with_context(|| format!("writing {}", log.display()))?;
    }
    let last = &records.last().expect("at least one outer iteration").row;
    println!("outer iterations: {}", last.outer_iter);
    println!("primal: {}", last.primal);
    println!("dual: {}", last.dual);
    println!("gap: {}", last.gap);
    println!("train accuracy: {:.4}", model.accuracy(&data)?);
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model).with_context(|| format!("loading model {}", args.model.display()))?;
    let data = load_eval(&args.data)?;
    let mut text = String::with_capacity(data.len() * 4);
    for x in data.instances() {
        text.push_str(model.predict(x));
        text.push('\n');
    }
    let accuracy = model.accuracy(&data)?;
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("accuracy: {accuracy:.4}");
        }
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            out.write_all(text.as_bytes())?;
            out.flush()?;
            eprintln!("accuracy: {accuracy:.4}");
        }
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<()> {
    let data = load_training(&args.data)?;
    let test = args.test.as_deref().map(load_eval).transpose()?;
    let jobs = args.jobs.map_or_else(
        || std::thread::available_parallelism().map_or(1, |n| n.get()),
        |j| usize::try_from(j).unwrap_or(usize::MAX),
    );
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;

    let (send, recv) = mpsc::channel();
    pool.install(|| {
        args.c_grid.values().into_par_iter().for_each_with(send, |send, c| {
            let result = run_cell(&data, test.as_ref(), &args.solver.config(c)).map(|(_, records)| records);
            send.send((c, result)).expect("collector outlives the grid");
        });
    });

    let mut records = Vec::new();
    let mut failures = 0;
    for (c, result) in recv {
        match result {
            Ok(rows) => records.extend(rows),
            Err(e) => {
                failures += 1;
                eprintln!("error: C = {c}: {e:#}");
            }
        }
    }
    records.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.row.outer_iter.cmp(&b.row.outer_iter)));
    save_records(&args.csv, &dataset_name(&args.data), &records)
        .with_context(|| format!("writing {}", args.csv.display()))?;
    if failures > 0 {
        bail!("{failures} grid cell(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
