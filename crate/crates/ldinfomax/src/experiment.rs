//! Seeded trials, convergence runs and correlation sweeps, plus their CSV output.

use std::fs;
use std::path::Path;

use ldinfomax_core::datagen::{self, Scenario, ScenarioConfig};
use ldinfomax_core::eval::{self, CurvePoint, Summary};
use ldinfomax_core::solver::{self, TrajectoryPoint};
use ldinfomax_core::{ica, linalg};

use crate::config::{Algo, ExperimentConfig};
use crate::csvio::{self, fmt_float};
use crate::error::{Error, Result};

pub const SIDECAR: &str = "config.txt";
pub const SOURCES: &str = "sources.csv";
pub const MIXING: &str = "mixing.csv";
pub const MIXTURES: &str = "mixtures.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const TRIALS: &str = "trials.csv";
pub const TRAJECTORIES: &str = "trajectories";
pub const SWEEP: &str = "sweep.csv";
pub const SWEEP_TRIALS: &str = "sweep_trials.csv";
pub const REPORT: &str = "report.csv";

pub const CONVERGENCE_HEADER: [&str; 3] = ["iteration", "sinr_mean_db", "sinr_std_db"];
pub const SWEEP_HEADER: [&str; 4] = ["rho", "algo", "sinr_mean_db", "sinr_std_db"];
pub const TRAJECTORY_HEADER: [&str; 3] = ["iteration", "objective", "sinr_db"];
pub const TRIALS_HEADER: [&str; 5] = ["trial", "seed", "final_sinr_db", "final_objective", "status"];
pub const SWEEP_TRIALS_HEADER: [&str; 6] = ["rho", "algo", "trial", "seed", "final_sinr_db", "status"];
pub const REPORT_HEADER: [&str; 4] = ["mse", "sinr_db", "permutation", "signs"];

/// Result of one successful trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub final_sinr_db: f64,
    /// LD-infomax only.
    pub final_objective: Option<f64>,
    /// LD-infomax only; SINR is filled in at every recorded iterate.
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// The error message of a failed trial.
    pub result: std::result::Result<TrialResult, String>,
}

/// The scenario of trial `trial`, with `rho` overriding the configured value.
pub fn trial_scenario(cfg: &ExperimentConfig, trial: usize, rho: f64) -> ScenarioConfig {
    ScenarioConfig {
        rho,
        seed: cfg.trial_seed(trial),
        ..cfg.scenario.clone()
    }
}

/// Runs one algorithm on one freshly generated scenario.
pub fn run_trial(cfg: &ExperimentConfig, scenario: &ScenarioConfig, algo: Algo) -> ldinfomax_core::Result<TrialResult> {
    let sc = datagen::generate(scenario)?;
    solve(cfg, scenario, &sc, algo)
}

fn solve(cfg: &ExperimentConfig, scenario: &ScenarioConfig, sc: &Scenario, algo: Algo) -> ldinfomax_core::Result<TrialResult> {
    let truth = &sc.s_g;
    match algo {
        Algo::LdInfomax => {
            let scfg = solver::SolverConfig {
                seed: scenario.seed,
                ..cfg.solver.clone()
            };
            let state = solver::run_observed(&sc.y, &scenario.polytope, &scfg, |s| eval::sinr_db(s, truth).ok())?;
            Ok(TrialResult {
                final_sinr_db: eval::sinr_db(&state.s, truth)?,
                final_objective: Some(state.objective),
                trajectory: state.trajectory,
            })
        }
        Algo::Ica => {
            let icfg = ica::IcaConfig {
                seed: scenario.seed,
                ..cfg.ica.clone()
            };
            let res = ica::ica_separate(&sc.y, scenario.r, &icfg)?;
            // ICA outputs carry arbitrary scale and offset; fit both before scoring.
            let fitted = eval::fit_affine(&res.s_est, truth)?;
            Ok(TrialResult {
                final_sinr_db: eval::sinr_db(&fitted, truth)?,
                final_objective: None,
                trajectory: Vec::new(),
            })
        }
    }
}

fn run_trials(cfg: &ExperimentConfig, rho: f64, algo: Algo) -> Vec<TrialOutcome> {
    (0..cfg.trials)
        .map(|trial| {
            let scenario = trial_scenario(cfg, trial, rho);
            TrialOutcome {
                trial,
                seed: scenario.seed,
                result: run_trial(cfg, &scenario, algo).map_err(|e| e.to_string()),
            }
        })
        .collect()
}

fn all_failed(outcomes: &[TrialOutcome]) -> Error {
    Error::AllTrialsFailed {
        trials: outcomes.len(),
        first: outcomes
            .iter()
            .find_map(|o| o.result.as_ref().err().cloned())
            .unwrap_or_default(),
    }
}

fn successes(outcomes: &[TrialOutcome]) -> Vec<&TrialResult> {
    outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect()
}

/// Trials of a convergence run and their aggregate SINR curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcomes: Vec<TrialOutcome>,
    /// Mean and population std over successful trials at each recorded iteration.
    pub curve: Vec<CurvePoint>,
    pub final_summary: Summary,
}

/// Independent LD-infomax trials at the configured scenario.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.algos != [Algo::LdInfomax] {
        return Err(Error::Invalid(
            "`run` records iteration trajectories and supports only algo = ld_infomax; use `sweep` for ica".into(),
        ));
    }
    let outcomes = run_trials(cfg, cfg.scenario.rho, Algo::LdInfomax);
    let ok = successes(&outcomes);
    if ok.is_empty() {
        return Err(all_failed(&outcomes));
    }
    let curves: Vec<Vec<(usize, f64)>> = ok
        .iter()
        .map(|t| {
            t.trajectory
                .iter()
                .map(|p| (p.iteration, p.sinr_db.unwrap_or(f64::NAN)))
                .collect()
        })
        .collect();
    let curve = eval::aggregate(&curves)?;
    let finals: Vec<f64> = ok.iter().map(|t| t.final_sinr_db).collect();
    Ok(RunReport {
        outcomes,
        curve,
        final_summary: eval::summarize(&finals)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub rho: f64,
    pub algo: Algo,
    pub outcomes: Vec<TrialOutcome>,
    /// `None` when every trial failed.
    pub summary: Option<Summary>,
}

/// Every algorithm at every ρ of the grid. Trial `t` uses the same seed at
/// each grid point, so the points differ only in ρ.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if cfg.rho_grid.is_empty() {
        return Err(Error::Invalid("rho_grid is empty".into()));
    }
    let mut points = Vec::new();
    for &rho in &cfg.rho_grid {
        for &algo in &cfg.algos {
            let outcomes = run_trials(cfg, rho, algo);
            let finals: Vec<f64> = successes(&outcomes).iter().map(|t| t.final_sinr_db).collect();
            let summary = eval::summarize(&finals).ok();
            points.push(SweepPoint {
                rho,
                algo,
                outcomes,
                summary,
            });
        }
    }
    if points.iter().all(|p| p.summary.is_none()) {
        let all: Vec<TrialOutcome> = points.into_iter().flat_map(|p| p.outcomes).collect();
        return Err(all_failed(&all));
    }
    Ok(points)
}

/// Facts about a generated scenario for the `gen` summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub r: usize,
    pub m: usize,
    pub n: usize,
    pub feasible: bool,
    /// `None` for noiseless mixtures.
    pub realized_snr_db: Option<f64>,
    pub acceptance_rate: f64,
}

pub fn generate(cfg: &ExperimentConfig) -> Result<(Scenario, ScenarioSummary)> {
    cfg.validate()?;
    let scenario = ScenarioConfig {
        seed: cfg.seed,
        ..cfg.scenario.clone()
    };
    let sc = datagen::generate(&scenario)?;
    let clean = &sc.h_g * &sc.s_g;
    let noise = linalg::frobenius_sq(&(&sc.y - &clean));
    let summary = ScenarioSummary {
        r: scenario.r,
        m: scenario.m,
        n: scenario.n,
        feasible: scenario
            .polytope
            .contains_columns(&sc.s_g, ldinfomax_core::polytope::FEASIBILITY_TOL)?,
        realized_snr_db: (noise > 0.0).then(|| 10.0 * (linalg::frobenius_sq(&clean) / noise).log10()),
        acceptance_rate: sc.acceptance_rate,
    };
    Ok((sc, summary))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_sidecar(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    ensure_dir(dir)?;
    let path = dir.join(SIDECAR);
    fs::write(&path, cfg.to_text()).map_err(|e| Error::io(path, e))
}

pub fn write_scenario(dir: &Path, cfg: &ExperimentConfig, sc: &Scenario) -> Result<()> {
    ensure_dir(dir)?;
    csvio::write_samples(&dir.join(SOURCES), "s", &sc.s_g)?;
    csvio::write_rows(&dir.join(MIXING), "h", &sc.h_g)?;
    csvio::write_samples(&dir.join(MIXTURES), "y", &sc.y)?;
    write_sidecar(dir, cfg)
}

fn status(result: &std::result::Result<TrialResult, String>) -> String {
    match result {
        Ok(_) => "ok".into(),
        Err(e) => format!("failed: {e}"),
    }
}

pub fn write_run(dir: &Path, cfg: &ExperimentConfig, report: &RunReport) -> Result<()> {
    ensure_dir(dir)?;
    csvio::write_table(
        &dir.join(CONVERGENCE),
        &CONVERGENCE_HEADER,
        report
            .curve
            .iter()
            .map(|p| vec![p.iteration.to_string(), fmt_float(p.mean), fmt_float(p.std)]),
    )?;
    csvio::write_table(
        &dir.join(TRIALS),
        &TRIALS_HEADER,
        report.outcomes.iter().map(|o| {
            let (sinr, obj) = match &o.result {
                Ok(t) => (fmt_float(t.final_sinr_db), t.final_objective.map_or(String::new(), fmt_float)),
                Err(_) => (fmt_float(f64::NAN), String::new()),
            };
            vec![o.trial.to_string(), o.seed.to_string(), sinr, obj, status(&o.result)]
        }),
    )?;
    let traj_dir = dir.join(TRAJECTORIES);
    ensure_dir(&traj_dir)?;
    for o in &report.outcomes {
        if let Ok(t) = &o.result {
            csvio::write_table(
                &traj_dir.join(format!("trial_{:04}.csv", o.trial)),
                &TRAJECTORY_HEADER,
                t.trajectory.iter().map(|p| {
                    vec![
                        p.iteration.to_string(),
                        fmt_float(p.objective),
                        p.sinr_db.map_or(String::new(), fmt_float),
                    ]
                }),
            )?;
        }
    }
    write_sidecar(dir, cfg)
}

pub fn write_sweep(dir: &Path, cfg: &ExperimentConfig, points: &[SweepPoint]) -> Result<()> {
    ensure_dir(dir)?;
    csvio::write_table(
        &dir.join(SWEEP),
        &SWEEP_HEADER,
        points.iter().map(|p| {
            let (m, s) = p.summary.map_or((f64::NAN, f64::NAN), |s| (s.mean, s.std));
            vec![fmt_float(p.rho), p.algo.name().to_string(), fmt_float(m), fmt_float(s)]
        }),
    )?;
    csvio::write_table(
        &dir.join(SWEEP_TRIALS),
        &SWEEP_TRIALS_HEADER,
        points.iter().flat_map(|p| {
            p.outcomes.iter().map(move |o| {
                let sinr = o.result.as_ref().map_or(f64::NAN, |t| t.final_sinr_db);
                vec![
                    fmt_float(p.rho),
                    p.algo.name().to_string(),
                    o.trial.to_string(),
                    o.seed.to_string(),
                    fmt_float(sinr),
                    status(&o.result),
                ]
            })
        }),
    )?;
    write_sidecar(dir, cfg)
}

/// Scores an estimate file against a ground-truth file.
pub fn evaluate_files(estimate: &Path, truth: &Path, affine: bool) -> Result<eval::EvaluationReport> {
    let est = csvio::read_samples(estimate)?;
    let truth_m = csvio::read_samples(truth)?;
    if est.shape() != truth_m.shape() {
        return Err(Error::Invalid(format!(
            "estimate is {}×{} but truth is {}×{} (sources × samples)",
            est.nrows(),
            est.ncols(),
            truth_m.nrows(),
            truth_m.ncols()
        )));
    }
    let est = if affine { eval::fit_affine(&est, &truth_m)? } else { est };
    Ok(eval::evaluate(&est, &truth_m)?)
}

pub fn write_report(dir: &Path, estimate: &Path, truth: &Path, report: &eval::EvaluationReport) -> Result<()> {
    ensure_dir(dir)?;
    let join = |v: Vec<String>| v.join(" ");
    csvio::write_table(
        &dir.join(REPORT),
        &REPORT_HEADER,
        [vec![
            fmt_float(report.mse),
            fmt_float(report.sinr_db),
            join(report.alignment.perm.iter().map(|p| p.to_string()).collect()),
            join(report.alignment.signs.iter().map(|s| s.to_string()).collect()),
        ]],
    )?;
    let path = dir.join("eval_inputs.txt");
    let text = format!("estimate = {}\ntruth = {}\n", estimate.display(), truth.display());
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}
