//! Flat `key = value` experiment configuration with dotted section names.
//!
//! ```text
//! # reference scenario, desk scale
//! seed = 7
//! trials = 10
//! algo = ld_infomax, ica
//! rho_grid = 0, 0.2, 0.4, 0.6
//! scenario.n = 2000
//! scenario.polytope = l1_nonneg
//! solver.iterations = 5000
//! ```
//!
//! Unset keys keep their defaults. Unknown or repeated keys are errors.
//! [`ExperimentConfig::to_text`] writes every key, so a sidecar produced by a
//! run parses back to the same configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ldinfomax_core::datagen::{Placement, ScenarioConfig, SourceMode};
use ldinfomax_core::ica::IcaConfig;
use ldinfomax_core::solver::{InitStrategy, Schedule, SolverConfig};
use ldinfomax_core::{Domain, PolytopeSpec, Preset};

use crate::error::{Error, Result};

/// Separation algorithm tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    LdInfomax,
    Ica,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::LdInfomax => "ld_infomax",
            Algo::Ica => "ica",
        }
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ld_infomax" => Ok(Algo::LdInfomax),
            "ica" => Ok(Algo::Ica),
            other => Err(format!("unknown algorithm {other:?} (expected ld_infomax or ica)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Master seed. Trial `t` uses `seed + t` for its scenario, solver and ICA.
    pub seed: u64,
    /// `scenario.seed` is ignored in favour of the per-trial seed.
    pub scenario: ScenarioConfig,
    /// `solver.seed` is ignored in favour of the per-trial seed.
    pub solver: SolverConfig,
    pub ica: IcaConfig,
    pub algos: Vec<Algo>,
    pub trials: usize,
    pub rho_grid: Vec<f64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scenario: ScenarioConfig::reference(),
            solver: SolverConfig::default(),
            ica: IcaConfig::default(),
            algos: vec![Algo::LdInfomax],
            trials: 10,
            rho_grid: vec![0.0, 0.2, 0.4, 0.6],
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::Invalid("algo list is empty".into()));
        }
        if self.scenario.polytope.dim() != self.scenario.r {
            return Err(Error::Invalid(format!(
                "polytope dimension {} differs from scenario.r = {}",
                self.scenario.polytope.dim(),
                self.scenario.r
            )));
        }
        self.scenario.validate()?;
        self.solver.validate()?;
        for &rho in &self.rho_grid {
            ldinfomax_core::datagen::toeplitz_correlation(self.scenario.r, rho)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        let mut polytope = PolytopeKeys::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, found {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("key {key:?} given twice"),
                });
            }
            cfg.set(key, value, &mut polytope).map_err(|message| Error::Config {
                line: line_no,
                message,
            })?;
        }
        cfg.scenario.polytope = polytope.resolve(cfg.scenario.r).map_err(Error::Invalid)?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, poly: &mut PolytopeKeys) -> std::result::Result<(), String> {
        let sc = &mut self.scenario;
        let so = &mut self.solver;
        let ica = &mut self.ica;
        match key {
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "algo" => self.algos = list(value).map(|s| s.parse()).collect::<std::result::Result<_, _>>()?,
            "rho_grid" => self.rho_grid = list(value).map(|s| num(key, s)).collect::<std::result::Result<_, _>>()?,
            "output_dir" => self.output_dir = PathBuf::from(value),

            "scenario.r" => sc.r = num(key, value)?,
            "scenario.m" => sc.m = num(key, value)?,
            "scenario.n" => sc.n = num(key, value)?,
            "scenario.rho" => sc.rho = num(key, value)?,
            "scenario.dof" => sc.dof = num(key, value)?,
            "scenario.snr_db" => {
                sc.snr_db = match value {
                    "none" | "inf" => None,
                    v => Some(num(key, v)?),
                }
            }
            "scenario.source_mode" => {
                sc.source_mode = SourceMode::from_name(value).ok_or_else(|| bad(key, value))?
            }
            "scenario.placement" => {
                sc.placement = Placement::from_name(value).ok_or_else(|| bad(key, value))?
            }
            "scenario.polytope" => poly.kind = Some(value.to_string()),
            "scenario.polytope.domains" => poly.domains = Some(value.to_string()),
            "scenario.polytope.groups" => poly.groups = Some(value.to_string()),

            "solver.epsilon" => so.epsilon = num(key, value)?,
            "solver.mu0" => so.mu0 = num(key, value)?,
            "solver.iterations" => so.iterations = num(key, value)?,
            "solver.schedule" => so.schedule = Schedule::from_name(value).ok_or_else(|| bad(key, value))?,
            "solver.record_every" => so.record_every = num(key, value)?,
            "solver.init" => so.init = InitStrategy::from_name(value).ok_or_else(|| bad(key, value))?,

            "ica.learning_rate" => ica.learning_rate = num(key, value)?,
            "ica.max_iter" => ica.max_iter = num(key, value)?,
            "ica.tol" => ica.tol = num(key, value)?,
            "ica.n_subgauss" => {
                ica.n_subgauss = match value {
                    "all" => usize::MAX,
                    v => num(key, v)?,
                }
            }
            "ica.block" => {
                ica.block = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Every key in a fixed order. Floats use the shortest text that parses
    /// back to the same value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sc = &self.scenario;
        let so = &self.solver;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("algo", self.algos.iter().map(|a| a.name()).collect::<Vec<_>>().join(", "));
        kv("rho_grid", join(&self.rho_grid));
        kv("output_dir", self.output_dir.display().to_string());
        kv("scenario.r", sc.r.to_string());
        kv("scenario.m", sc.m.to_string());
        kv("scenario.n", sc.n.to_string());
        kv("scenario.rho", sc.rho.to_string());
        kv("scenario.dof", sc.dof.to_string());
        kv("scenario.snr_db", sc.snr_db.map_or("none".into(), |v| v.to_string()));
        kv("scenario.source_mode", sc.source_mode.name().into());
        kv("scenario.placement", sc.placement.name().into());
        match preset_of(&sc.polytope) {
            Some(p) => kv("scenario.polytope", p.name().into()),
            None => {
                kv("scenario.polytope", "custom".into());
                let domains: Vec<&str> = sc
                    .polytope
                    .domains()
                    .iter()
                    .map(|d| match d {
                        Domain::Signed => "signed",
                        Domain::Nonneg => "nonneg",
                    })
                    .collect();
                kv("scenario.polytope.domains", domains.join(", "));
                let groups: Vec<String> = sc
                    .polytope
                    .groups()
                    .iter()
                    .map(|g| g.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "))
                    .collect();
                kv("scenario.polytope.groups", groups.join("; "));
            }
        }
        kv("solver.epsilon", so.epsilon.to_string());
        kv("solver.mu0", so.mu0.to_string());
        kv("solver.iterations", so.iterations.to_string());
        kv("solver.schedule", so.schedule.name().into());
        kv("solver.record_every", so.record_every.to_string());
        kv("solver.init", so.init.name().into());
        kv("ica.learning_rate", self.ica.learning_rate.to_string());
        kv("ica.max_iter", self.ica.max_iter.to_string());
        kv("ica.tol", self.ica.tol.to_string());
        kv(
            "ica.n_subgauss",
            if self.ica.n_subgauss == usize::MAX {
                "all".into()
            } else {
                self.ica.n_subgauss.to_string()
            },
        );
        kv("ica.block", self.ica.block.map_or("auto".into(), |b| b.to_string()));
        out
    }
}

fn preset_of(p: &PolytopeSpec) -> Option<Preset> {
    Preset::ALL
        .into_iter()
        .find(|&k| PolytopeSpec::preset(k, p.dim()).is_ok_and(|q| &q == p))
}

#[derive(Default)]
struct PolytopeKeys {
    kind: Option<String>,
    domains: Option<String>,
    groups: Option<String>,
}

impl PolytopeKeys {
    fn resolve(self, r: usize) -> std::result::Result<PolytopeSpec, String> {
        let kind = self.kind.as_deref().unwrap_or("l1_nonneg");
        if kind != "custom" {
            if self.domains.is_some() || self.groups.is_some() {
                return Err("scenario.polytope.domains/groups require scenario.polytope = custom".into());
            }
            let preset = Preset::from_name(kind).ok_or_else(|| bad("scenario.polytope", kind))?;
            return PolytopeSpec::preset(preset, r).map_err(|e| e.to_string());
        }
        let domains = self
            .domains
            .ok_or("custom polytope needs scenario.polytope.domains")?;
        let domains = list(&domains)
            .map(|d| match d {
                "signed" => Ok(Domain::Signed),
                "nonneg" => Ok(Domain::Nonneg),
                other => Err(bad("scenario.polytope.domains", other)),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let groups = match self.groups.as_deref().map(str::trim) {
            None | Some("") => Vec::new(),
            Some(text) => text
                .split(';')
                .map(|g| {
                    g.split_whitespace()
                        .map(|i| num("scenario.polytope.groups", i))
                        .collect::<std::result::Result<Vec<usize>, _>>()
                })
                .collect::<std::result::Result<Vec<_>, _>>()?,
        };
        PolytopeSpec::new(domains, groups).map_err(|e| e.to_string())
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| bad(key, value))
}

fn bad(key: &str, value: &str) -> String {
    format!("invalid value {value:?} for {key}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn custom_polytope_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.r = 3;
        cfg.scenario.polytope = PolytopeSpec::mixed_example();
        cfg.scenario.snr_db = None;
        cfg.ica.n_subgauss = 2;
        cfg.ica.block = Some(17);
        cfg.rho_grid = vec![0.1, 1.0 / 3.0];
        let text = cfg.to_text();
        assert!(text.contains("scenario.polytope = custom"));
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn preset_follows_r() {
        let cfg = ExperimentConfig::parse("scenario.r = 3\nscenario.m = 4\nscenario.polytope = linf").unwrap();
        assert_eq!(cfg.scenario.polytope, PolytopeSpec::preset(Preset::Linf, 3).unwrap());
        cfg.validate().unwrap();
    }

    #[test]
    fn comments_and_lists() {
        let cfg = ExperimentConfig::parse(
            "# header\nalgo = ld_infomax, ica  # both\nrho_grid = 0,0.5\n\nscenario.snr_db = none\n",
        )
        .unwrap();
        assert_eq!(cfg.algos, vec![Algo::LdInfomax, Algo::Ica]);
        assert_eq!(cfg.rho_grid, vec![0.0, 0.5]);
        assert_eq!(cfg.scenario.snr_db, None);
    }

    #[test]
    fn rejects_bad_input() {
        let err = |t: &str| ExperimentConfig::parse(t).unwrap_err().to_string();
        assert!(err("bogus = 1").contains("unknown key"));
        assert!(err("seed = 1\nseed = 2").contains("twice"));
        assert!(err("trials = many").contains("invalid value"));
        assert!(err("just words").contains("line 1"));
        assert!(err("scenario.polytope.domains = signed").contains("custom"));
        assert!(err("algo = pca").contains("unknown algorithm"));
        let zero = ExperimentConfig::parse("trials = 0").unwrap();
        assert!(zero.validate().is_err());
        let rho = ExperimentConfig::parse("rho_grid = 1.5").unwrap();
        assert!(rho.validate().is_err());
    }
}
