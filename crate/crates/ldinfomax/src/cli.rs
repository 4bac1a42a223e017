use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Algo, ExperimentConfig};
use crate::csvio::fmt_float;
use crate::error::Result;
use crate::experiment;

#[derive(Debug, Parser)]
#[command(name = "ldinfomax", version, about = "LD-infomax blind source separation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one scenario (sources, mixing matrix, mixtures).
    Gen(Common),
    /// Run seeded LD-infomax trials and write the mean SINR convergence curve.
    Run(Common),
    /// Sweep the source correlation for each algorithm.
    Sweep(Common),
    /// Score an estimate against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Key-value configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; trial t uses seed + t.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Algorithm(s): ld_infomax, ica. Repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    pub algo: Vec<Algo>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Generate mixtures without additive noise.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Estimated sources, one sample per line.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Ground-truth sources in the same layout.
    #[arg(long)]
    pub truth: PathBuf,
    /// Fit scale and offset per row before scoring (for ICA-style outputs).
    #[arg(long)]
    pub affine: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl Common {
    /// Loads the configuration file, then applies the flag overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if !self.algo.is_empty() {
            cfg.algos = self.algo.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if self.noiseless {
            cfg.scenario.snr_db = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(c) => gen(&c.resolve()?),
        Command::Run(c) => run(&c.resolve()?),
        Command::Sweep(c) => sweep(&c.resolve()?),
        Command::Eval(e) => eval(e),
    }
}

fn gen(cfg: &ExperimentConfig) -> Result<()> {
    let (sc, s) = experiment::generate(cfg)?;
    experiment::write_scenario(&cfg.output_dir, cfg, &sc)?;
    println!("scenario: r={} M={} N={}", s.r, s.m, s.n);
    println!("sources feasible: {}", if s.feasible { "yes" } else { "NO" });
    println!("source acceptance rate: {:.4}", s.acceptance_rate);
    match s.realized_snr_db {
        Some(v) => println!("realized SNR: {v:.3} dB"),
        None => println!("realized SNR: noiseless"),
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn report_failures(outcomes: &[experiment::TrialOutcome], label: &str) {
    for o in outcomes {
        if let Err(e) = &o.result {
            eprintln!("{label}trial {} (seed {}) failed: {e}", o.trial, o.seed);
        }
    }
}

fn run(cfg: &ExperimentConfig) -> Result<()> {
    let report = experiment::run(cfg)?;
    report_failures(&report.outcomes, "");
    experiment::write_run(&cfg.output_dir, cfg, &report)?;
    let ok = report.outcomes.iter().filter(|o| o.result.is_ok()).count();
    println!(
        "final SINR over {ok}/{} trials: mean {} dB, std {} dB",
        report.outcomes.len(),
        fmt_float(report.final_summary.mean),
        fmt_float(report.final_summary.std)
    );
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let points = experiment::sweep(cfg)?;
    println!("rho,algo,sinr_mean_db,sinr_std_db");
    for p in &points {
        report_failures(&p.outcomes, &format!("rho={} {}: ", p.rho, p.algo.name()));
        let (m, s) = p.summary.map_or((f64::NAN, f64::NAN), |s| (s.mean, s.std));
        println!("{},{},{},{}", p.rho, p.algo.name(), fmt_float(m), fmt_float(s));
    }
    experiment::write_sweep(&cfg.output_dir, cfg, &points)?;
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let report = experiment::evaluate_files(&args.estimate, &args.truth, args.affine)?;
    println!("MSE: {}", fmt_float(report.mse));
    println!("SINR: {} dB", fmt_float(report.sinr_db));
    for (i, ((p, s), c)) in report
        .alignment
        .perm
        .iter()
        .zip(&report.alignment.signs)
        .zip(&report.per_source_corr)
        .enumerate()
    {
        println!("estimate {} <- truth {} sign {:+} corr {:.6}", i + 1, p + 1, s, c);
    }
    experiment::write_report(&args.out, Path::new(&args.estimate), Path::new(&args.truth), &report)
}
