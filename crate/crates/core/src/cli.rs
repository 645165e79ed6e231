//! Command-line front end: argument parsing, configuration merging and the
//! `fit`, `predict`, `fit-predict`, `stream`, `simulate` and `sweep` commands.
//!
//! Exit status is 0 on success, 1 for usage or configuration problems, 2
//! for malformed input data and 3 when a numerical step fails.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use crate::augment::AbstainPolicy;
use crate::error::{Error, ErrorKind, Result};
use crate::inference::format_sig9;
use crate::io;
use crate::model::{ClassPrior, DependencyGraph, Vote};
use crate::moments::{Aggregation, SignStrategy, TripletMode};
use crate::online::{best_window, run_stream, sweep_window, DriftSpec, RollingState, Window};
use crate::oracle::{enumerate_joint, exact_statistics, sample, CanonicalParameters, StarModel};
use crate::recovery::{FitConfig, FittedModel, LabelModel};

#[derive(Debug, Parser)]
#[command(name = "weaklabel", version, about = "Closed-form label model for weak supervision")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file supplying defaults for any option; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, value_name = "T")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate parameters and write them with a diagnostics report.
    Fit {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fit: FitFlags,
        /// Parameter file to write (standard output if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Diagnostics file (standard error if omitted).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Label a vote matrix with previously fitted parameters.
    Predict {
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        params: PathBuf,
        /// Posterior CSV to write (standard output if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Fit and label the same matrix.
    FitPredict {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fit: FitFlags,
        /// Posterior CSV to write (standard output if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also write the fitted parameters here.
        #[arg(long, value_name = "PATH")]
        params_out: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Read vote rows from standard input and print one posterior line per row.
    Stream {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fit: FitFlags,
        /// Rows kept in the window; all rows if omitted.
        #[arg(long, value_name = "W")]
        window: Option<usize>,
        /// Rows to see before the first fit.
        #[arg(long, value_name = "K")]
        warmup: Option<usize>,
    },
    /// Sample votes and hidden labels from a model spec.
    Simulate {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "N")]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vote CSV (standard output if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Hidden task values, one row per sample.
        #[arg(long, value_name = "PATH")]
        truth: Option<PathBuf>,
        /// True parameter tables of the model.
        #[arg(long, value_name = "PATH")]
        params_out: Option<PathBuf>,
    },
    /// Compare window sizes on a simulated drifting stream.
    Sweep {
        /// Single-task model spec without dependency edges.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Sources (1-based) whose votes invert every period.
        #[arg(long, value_delimiter = ',', value_name = "I,J,..")]
        flip: Vec<usize>,
        /// Rows between inversions; no drift if omitted.
        #[arg(long, value_name = "N")]
        period: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [250, 500, 1000, 2000])]
        windows: Vec<usize>,
        /// Number of seeds to average over, starting at 0.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, value_name = "K")]
        warmup: Option<usize>,
        /// Table to write (standard output if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct Inputs {
    /// Vote matrix CSV.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
    /// Dependency graph spec.
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
    /// Class prior file.
    #[arg(long, value_name = "PATH", conflicts_with = "balance")]
    pub prior: Option<PathBuf>,
    /// Single-task class balance `P(Y = +1)`.
    #[arg(long, value_name = "P")]
    pub balance: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct FitFlags {
    /// Triplet aggregation: mean or median.
    #[arg(long, value_name = "HOW")]
    pub agg: Option<String>,
    /// Sign resolution: `sum` or `anchor:i:+` / `anchor:i:-` (comma-separated for several).
    #[arg(long, value_name = "HOW")]
    pub signs: Option<String>,
    /// Abstain realization: `alt` or `rand:SEED`.
    #[arg(long, value_name = "HOW")]
    pub abstain: Option<String>,
    /// Allow the ratio estimate for sources without a usable triplet.
    #[arg(long)]
    pub ratio_fallback: bool,
    /// Solve each variable from a single triplet in one greedy pass.
    #[arg(long)]
    pub compat_greedy_triplets: bool,
    /// Smallest usable agreement rate in a triplet denominator.
    #[arg(long, value_name = "X")]
    pub eps_den: Option<f64>,
    /// Floor for recovered accuracy magnitudes.
    #[arg(long, value_name = "X")]
    pub eps_acc: Option<f64>,
    /// Smallest class mean the ratio fallback accepts.
    #[arg(long, value_name = "X")]
    pub eps_prior: Option<f64>,
    /// Abstain rows needed before a conditional accuracy is trusted.
    #[arg(long, value_name = "N")]
    pub min_abstain_rows: Option<u64>,
    /// Triplets kept per source.
    #[arg(long, value_name = "N")]
    pub max_triplets: Option<usize>,
}

/// Settings loaded from `--config`. Every field is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub labels: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub prior: Option<PathBuf>,
    pub balance: Option<f64>,
    pub agg: Option<String>,
    pub signs: Option<String>,
    pub abstain: Option<String>,
    pub ratio_fallback: Option<bool>,
    pub greedy_triplets: Option<bool>,
    pub eps_den: Option<f64>,
    pub eps_acc: Option<f64>,
    pub eps_prior: Option<f64>,
    pub min_abstain_rows: Option<u64>,
    pub max_triplets: Option<usize>,
    pub window: Option<usize>,
    pub warmup: Option<usize>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Flags win over file values.
    fn merge_inputs(&mut self, i: &Inputs) {
        if i.labels.is_some() {
            self.labels.clone_from(&i.labels);
        }
        if i.graph.is_some() {
            self.graph.clone_from(&i.graph);
        }
        if i.prior.is_some() || i.balance.is_some() {
            self.prior.clone_from(&i.prior);
            self.balance = i.balance;
        }
    }

    fn merge_fit(&mut self, f: &FitFlags) {
        macro_rules! take {
            ($($field:ident),*) => {$( if f.$field.is_some() { self.$field.clone_from(&f.$field); } )*};
        }
        take!(agg, signs, abstain, eps_den, eps_acc, eps_prior, min_abstain_rows, max_triplets);
        if f.ratio_fallback {
            self.ratio_fallback = Some(true);
        }
        if f.compat_greedy_triplets {
            self.greedy_triplets = Some(true);
        }
    }

    /// Typed fit configuration; fails on any unrecognized value.
    pub fn fit_config(&self) -> Result<FitConfig> {
        let mut cfg = FitConfig::default();
        let acc = &mut cfg.accuracy;
        if let Some(agg) = &self.agg {
            acc.aggregation = match agg.as_str() {
                "mean" => Aggregation::Mean,
                "median" => Aggregation::Median,
                other => return Err(Error::Config(format!("unknown aggregation `{other}` (mean or median)"))),
            };
        }
        if let Some(signs) = &self.signs {
            acc.signs = parse_signs(signs)?;
        }
        if let Some(policy) = &self.abstain {
            cfg.policy = parse_policy(policy)?;
        }
        acc.ratio_fallback = self.ratio_fallback.unwrap_or(false);
        if self.greedy_triplets == Some(true) {
            acc.mode = TripletMode::Greedy;
        }
        let tol = &mut acc.tol;
        for (value, slot, name) in [
            (self.eps_den, &mut tol.eps_den, "eps_den"),
            (self.eps_acc, &mut tol.eps_acc, "eps_acc"),
            (self.eps_prior, &mut tol.eps_prior, "eps_prior"),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        if let Some(n) = self.min_abstain_rows {
            tol.min_abstain_rows = n;
        }
        if let Some(n) = self.max_triplets {
            if n == 0 {
                return Err(Error::Config("max_triplets must be at least 1".into()));
            }
            tol.max_triplets = n;
        }
        Ok(cfg)
    }

    fn graph(&self) -> Result<DependencyGraph> {
        let path = self.graph.as_ref().ok_or_else(|| Error::Config("missing --graph".into()))?;
        io::read_graph(path)
    }

    fn prior(&self) -> Result<ClassPrior> {
        match (&self.prior, self.balance) {
            (Some(_), Some(_)) => Err(Error::Config("give either --prior or --balance, not both".into())),
            (Some(path), None) => io::read_prior(path),
            (None, Some(p)) => ClassPrior::balance(p).map_err(|e| Error::Config(e.to_string())),
            (None, None) => Err(Error::Config("missing --prior or --balance".into())),
        }
    }

    fn labels_path(&self) -> Result<&Path> {
        self.labels.as_deref().ok_or_else(|| Error::Config("missing --labels".into()))
    }
}

fn parse_signs(text: &str) -> Result<SignStrategy> {
    if text == "sum" {
        return Ok(SignStrategy::NonnegativeSum);
    }
    let bad = || Error::Config(format!("unknown sign strategy `{text}` (sum or anchor:i:+|-)"));
    let mut anchors = Vec::new();
    for part in text.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        let [kw, i, s] = fields[..] else { return Err(bad()) };
        let i: usize = i.parse().map_err(|_| bad())?;
        let sign = match s {
            "+" => 1,
            "-" => -1,
            _ => return Err(bad()),
        };
        if kw != "anchor" || i == 0 {
            return Err(bad());
        }
        anchors.push((i - 1, sign));
    }
    Ok(SignStrategy::Anchor(anchors))
}

fn parse_policy(text: &str) -> Result<AbstainPolicy> {
    match text.split_once(':') {
        None if text == "alt" => Ok(AbstainPolicy::Alternating),
        Some(("rand", seed)) => seed
            .parse()
            .map(|seed| AbstainPolicy::SeededRandom { seed })
            .map_err(|_| Error::Config(format!("bad seed in `{text}`"))),
        _ => Err(Error::Config(format!("unknown abstain policy `{text}` (alt or rand:SEED)"))),
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

/// Parses `args` and runs the command. Returns the exit status.
pub fn main_with<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli, stdin, stdout, stderr) {
        Ok(()) => 0,
        // a closed downstream pipe (`| head`) is a normal way to stop reading
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // a pool that already exists (repeated in-process runs) keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

/// Writes to `path`, or to `fallback` when no path is given.
fn emit(path: Option<&Path>, fallback: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))),
        None => Ok(fallback.write_all(bytes)?),
    }
}

fn fit_model(cfg: &RunConfig) -> Result<FittedModel> {
    let fit_cfg = cfg.fit_config()?;
    let (graph, prior) = (cfg.graph()?, cfg.prior()?);
    let model = LabelModel::new(graph, prior)?.with_config(fit_cfg);
    let labels = io::read_labels(cfg.labels_path()?)?;
    info!("fitting {} rows x {} sources", labels.n_rows(), labels.n_sources());
    model.fit(&labels)
}

fn posterior_csv(model: &FittedModel, labels_path: &Path) -> Result<Vec<u8>> {
    let labels = io::read_labels(labels_path)?;
    let mut out = Vec::new();
    model.predict_proba(&labels)?.write_csv(&mut out)?;
    Ok(out)
}

pub fn run(cli: &Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Fit { inputs, fit, out, report } => {
            cfg.merge_inputs(inputs);
            cfg.merge_fit(fit);
            cfg.fit_config()?;
            init_threads(cfg.threads)?;
            let model = fit_model(&cfg)?;
            emit(out.as_deref(), stdout, io::format_params(model.parameters()).as_bytes())?;
            emit(report.as_deref(), stderr, model.diagnostics().to_string().as_bytes())
        }
        Command::Predict { labels, params, out } => {
            if labels.is_some() {
                cfg.labels.clone_from(labels);
            }
            init_threads(cfg.threads)?;
            let model = FittedModel::from_parameters(io::read_params(params)?)?;
            let csv = posterior_csv(&model, cfg.labels_path()?)?;
            emit(out.as_deref(), stdout, &csv)
        }
        Command::FitPredict { inputs, fit, out, params_out, report } => {
            cfg.merge_inputs(inputs);
            cfg.merge_fit(fit);
            cfg.fit_config()?;
            init_threads(cfg.threads)?;
            let model = fit_model(&cfg)?;
            if let Some(path) = params_out {
                emit(Some(path), stdout, io::format_params(model.parameters()).as_bytes())?;
            }
            let csv = posterior_csv(&model, cfg.labels_path()?)?;
            emit(out.as_deref(), stdout, &csv)?;
            emit(report.as_deref(), stderr, model.diagnostics().to_string().as_bytes())
        }
        Command::Stream { inputs, fit, window, warmup } => {
            cfg.merge_inputs(inputs);
            cfg.merge_fit(fit);
            if window.is_some() {
                cfg.window = *window;
            }
            if warmup.is_some() {
                cfg.warmup = *warmup;
            }
            stream(&cfg, stdin, stdout)
        }
        Command::Simulate { model, rows, seed, out, truth, params_out } => {
            init_threads(cfg.threads)?;
            let theta = io::read_model_spec(model)?;
            simulate(&theta, *rows, *seed, out.as_deref(), truth.as_deref(), params_out.as_deref(), stdout)
        }
        Command::Sweep { model, flip, period, steps, windows, seeds, warmup, out } => {
            init_threads(cfg.threads)?;
            let base = StarModel::from_canonical(&io::read_model_spec(model)?)?;
            let m = base.sources.len();
            if let Some(&bad) = flip.iter().find(|&&i| i == 0 || i > m) {
                return Err(Error::Config(format!("--flip source {bad} out of range (there are {m})")));
            }
            if windows.contains(&0) || *seeds == 0 || *period == Some(0) {
                return Err(Error::Config("windows, seeds and period must be positive".into()));
            }
            let spec = DriftSpec { base, flipped: flip.iter().map(|i| i - 1).collect(), period: *period };
            let warmup = warmup.or(cfg.warmup).unwrap_or(100);
            let seed_list: Vec<u64> = (0..*seeds).collect();
            let points = sweep_window(&spec, windows, warmup, *steps, &seed_list)?;
            let mut table = String::from("window,parameter_error,posterior_mse\n");
            for p in &points {
                table.push_str(&format!(
                    "{},{},{}\n",
                    p.window,
                    format_sig9(p.parameter_error),
                    format_sig9(p.posterior_mse)
                ));
            }
            let (mut perr, mut mse) = (0.0, 0.0);
            for &s in &seed_list {
                let score = run_stream(&spec, Window::Cumulative, warmup, *steps, s)?;
                perr += score.parameter_error / seed_list.len() as f64;
                mse += score.posterior_mse / seed_list.len() as f64;
            }
            table.push_str(&format!("cumulative,{},{}\n", format_sig9(perr), format_sig9(mse)));
            emit(out.as_deref(), stdout, table.as_bytes())?;
            if let Some(w) = best_window(&points) {
                writeln!(stderr, "best window: {w}")?;
            }
            Ok(())
        }
    }
}

fn stream(cfg: &RunConfig, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    let fit_cfg = cfg.fit_config()?;
    init_threads(cfg.threads)?;
    let window = match cfg.window {
        Some(w) => Window::Sliding(w),
        None => Window::Cumulative,
    };
    let model = LabelModel::new(cfg.graph()?, cfg.prior()?)?.with_config(fit_cfg);
    let mut state = RollingState::new(model, window, cfg.warmup)?;
    let mut row: Vec<Vote> = Vec::new();
    let mut t = 0;
    for line in stdin.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        row.clear();
        io::parse_vote_row(&line, t, &mut row)?;
        let out = state.step(&row)?;
        let cells: Vec<String> = out.posterior.iter().map(|&p| format_sig9(p)).collect();
        writeln!(stdout, "{}", cells.join(","))?;
        stdout.flush()?;
        t += 1;
    }
    Ok(())
}

fn simulate(
    theta: &CanonicalParameters,
    rows: usize,
    seed: u64,
    out: Option<&Path>,
    truth: Option<&Path>,
    params_out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let g = &theta.graph;
    // star models sample directly at any size; others go through enumeration
    let (drawn, params) = if g.n_tasks() == 1 && g.source_edges().is_empty() {
        let star = StarModel::from_canonical(theta)?;
        (star.sample(rows, seed), star.parameters())
    } else {
        let joint = enumerate_joint(theta)?;
        let params = exact_statistics(&joint, g)?.parameters;
        (sample(&joint, rows, seed), params)
    };
    emit(out, stdout, io::format_labels(&drawn.labels).as_bytes())?;
    if let Some(path) = truth {
        emit(Some(path), stdout, io::format_truth(&drawn.truth, drawn.tasks).as_bytes())?;
    }
    if let Some(path) = params_out {
        emit(Some(path), stdout, io::format_params(&params).as_bytes())?;
    }
    Ok(())
}
