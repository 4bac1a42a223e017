//! Synthetic separation scenarios: dependent sources inside a polytope,
//! Gaussian mixing and additive white noise at a target SNR.
//!
//! Sources are t-copula uniforms: multivariate-t draws with an
//! equicorrelation generator, pushed through the univariate t CDF. Each
//! scenario component uses its own ChaCha8 stream derived from the seed, so
//! toggling noise leaves the sources and the mixing matrix untouched.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::{Domain, PolytopeSpec};
use crate::special::student_t_cdf;

const SOURCE_STREAM: u64 = 1;
const MIXING_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Rejection sampling gives up when fewer than this fraction of candidate
/// columns land inside the polytope.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Candidates drawn before the acceptance rate is judged.
const ACCEPTANCE_PROBE: usize = 100_000;
const BATCH: usize = 4096;
const MIXING_ATTEMPTS: usize = 10;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    CopulaT,
    UniformIid,
}

impl SourceMode {
    pub fn name(self) -> &'static str {
        match self {
            SourceMode::CopulaT => "copula_t",
            SourceMode::UniformIid => "uniform_iid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "copula_t" => Some(SourceMode::CopulaT),
            "uniform_iid" => Some(SourceMode::UniformIid),
            _ => None,
        }
    }
}

/// How uniform draws that violate an ℓ1 group are brought into the polytope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Discard violating columns and draw again.
    Reject,
    /// Shrink each violating group onto its ℓ1 sphere.
    Scale,
}

impl Placement {
    pub fn name(self) -> &'static str {
        match self {
            Placement::Reject => "reject",
            Placement::Scale => "scale",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "reject" => Some(Placement::Reject),
            "scale" => Some(Placement::Scale),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of sources.
    pub r: usize,
    /// Number of mixtures.
    pub m: usize,
    /// Number of samples.
    pub n: usize,
    /// Equicorrelation parameter of the copula generator.
    pub rho: f64,
    /// Copula degrees of freedom.
    pub dof: f64,
    /// Mixture SNR in dB; `None` for noiseless mixtures.
    pub snr_db: Option<f64>,
    pub polytope: PolytopeSpec,
    pub seed: u64,
    pub source_mode: SourceMode,
    pub placement: Placement,
}

impl ScenarioConfig {
    /// Five correlated copula-t sources in the nonnegative ℓ1 ball, eight
    /// mixtures, 10000 samples, ρ = 0.5, 4 degrees of freedom, 30 dB SNR.
    pub fn reference() -> Self {
        Self {
            r: 5,
            m: 8,
            n: 10_000,
            rho: 0.5,
            dof: 4.0,
            snr_db: Some(30.0),
            polytope: PolytopeSpec::preset(crate::polytope::Preset::L1Nonneg, 5)
                .expect("valid preset"),
            seed: 0,
            source_mode: SourceMode::CopulaT,
            placement: Placement::Reject,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.m < self.r {
            return Err(Error::InvalidParameter {
                name: "scenario dimensions",
                reason: "need M >= r >= 1",
            });
        }
        if self.n < 2 {
            return Err(Error::TooFewSamples(self.n));
        }
        if !(self.dof >= 1.0) || !self.dof.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dof",
                reason: "must be at least 1",
            });
        }
        if self.polytope.dim() != self.r {
            return Err(Error::DimensionMismatch {
                context: "polytope dimension",
                expected: self.r,
                found: self.polytope.dim(),
            });
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::InvalidParameter {
                    name: "snr_db",
                    reason: "must be a number",
                });
            }
        }
        toeplitz_correlation(self.r, self.rho)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// `r × N` sources, every column inside the polytope.
    pub s_g: DMatrix<f64>,
    /// `M × r` mixing matrix.
    pub h_g: DMatrix<f64>,
    /// `M × N` observed mixtures.
    pub y: DMatrix<f64>,
    pub noise_sigma: f64,
    /// Fraction of candidate source columns kept.
    pub acceptance_rate: f64,
}

/// Symmetric Toeplitz matrix with first row `[1, ρ, …, ρ]`, i.e. unit
/// diagonal and constant off-diagonal `ρ`. Valid for `-1/(r-1) < ρ < 1`.
pub fn toeplitz_correlation(r: usize, rho: f64) -> Result<DMatrix<f64>> {
    if r == 0 {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: "must be positive",
        });
    }
    let lower = if r > 1 { -1.0 / (r as f64 - 1.0) } else { f64::NEG_INFINITY };
    if !(rho < 1.0 && rho > lower) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: "correlation matrix is not positive definite",
        });
    }
    Ok(DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 } else { rho }))
}

/// Draws columns of dependent uniforms from a t copula.
#[derive(Debug, Clone)]
pub struct CopulaSampler {
    chol: DMatrix<f64>,
    dof: f64,
    chi: ChiSquared<f64>,
    z: DVector<f64>,
}

impl CopulaSampler {
    pub fn new(r: usize, rho: f64, dof: f64) -> Result<Self> {
        let corr = toeplitz_correlation(r, rho)?;
        let chol = linalg::cholesky(&corr, "copula correlation")?.unpack();
        let chi = ChiSquared::new(dof).map_err(|_| Error::InvalidParameter {
            name: "dof",
            reason: "must be positive",
        })?;
        Ok(Self {
            chol,
            dof,
            chi,
            z: DVector::zeros(r),
        })
    }

    pub fn sample_into(&mut self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for v in self.z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let w: f64 = self.chi.sample(rng);
        let scale = libm::sqrt(self.dof / w);
        let g = &self.chol * &self.z;
        for (o, gi) in out.iter_mut().zip(g.iter()) {
            *o = student_t_cdf(gi * scale, self.dof);
        }
    }
}

/// `r × N` matrix of t-copula uniforms.
pub fn copula_t_uniforms(r: usize, n: usize, rho: f64, dof: f64, seed: u64) -> Result<DMatrix<f64>> {
    let mut sampler = CopulaSampler::new(r, rho, dof)?;
    let mut rng = stream_rng(seed, SOURCE_STREAM);
    let mut out = DMatrix::zeros(r, n);
    for mut col in out.column_iter_mut() {
        sampler.sample_into(&mut rng, col.as_mut_slice());
    }
    Ok(out)
}

/// Maps one column of uniforms into the polytope in place. Returns `false`
/// when the column violates a group and `placement` is `Reject`.
pub fn place_column(u: &mut [f64], p: &PolytopeSpec, placement: Placement) -> bool {
    for (v, d) in u.iter_mut().zip(p.domains()) {
        if *d == Domain::Signed {
            *v = 2.0 * *v - 1.0;
        }
    }
    for g in p.groups() {
        let l1: f64 = g.iter().map(|&i| u[i].abs()).sum();
        if l1 > 1.0 {
            match placement {
                Placement::Reject => return false,
                Placement::Scale => {
                    let f = l1 * (1.0 + 1e-9);
                    for &i in g {
                        u[i] /= f;
                    }
                }
            }
        }
    }
    true
}

/// Maps a matrix of uniforms into the polytope column by column. With
/// `Reject`, violating columns are dropped, so the result may be narrower.
pub fn sources_in_polytope(u: &DMatrix<f64>, p: &PolytopeSpec, placement: Placement) -> Result<DMatrix<f64>> {
    if u.nrows() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "uniform rows",
            expected: p.dim(),
            found: u.nrows(),
        });
    }
    let mut kept: Vec<f64> = Vec::with_capacity(u.len());
    let mut col = alloc::vec![0.0; u.nrows()];
    for c in u.column_iter() {
        col.copy_from_slice(c.as_slice());
        if place_column(&mut col, p, placement) {
            kept.extend_from_slice(&col);
        }
    }
    Ok(DMatrix::from_vec(u.nrows(), kept.len() / u.nrows(), kept))
}

/// Draws `cfg.n` source columns inside the polytope. Returns the sources and
/// the acceptance rate.
pub fn generate_sources(cfg: &ScenarioConfig) -> Result<(DMatrix<f64>, f64)> {
    cfg.validate()?;
    let r = cfg.r;
    let mut rng = stream_rng(cfg.seed, SOURCE_STREAM);
    let mut copula = match cfg.source_mode {
        SourceMode::CopulaT => Some(CopulaSampler::new(r, cfg.rho, cfg.dof)?),
        SourceMode::UniformIid => None,
    };
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let mut data: Vec<f64> = Vec::with_capacity(r * cfg.n);
    let mut col = alloc::vec![0.0; r];
    let (mut drawn, mut accepted) = (0usize, 0usize);
    while accepted < cfg.n {
        for _ in 0..BATCH {
            match copula.as_mut() {
                Some(c) => c.sample_into(&mut rng, &mut col),
                None => col.iter_mut().for_each(|v| *v = unit.sample(&mut rng)),
            }
            drawn += 1;
            if place_column(&mut col, &cfg.polytope, cfg.placement) {
                data.extend_from_slice(&col);
                accepted += 1;
                if accepted == cfg.n {
                    break;
                }
            }
        }
        if drawn >= ACCEPTANCE_PROBE && (accepted as f64) < MIN_ACCEPTANCE * drawn as f64 {
            return Err(Error::LowAcceptance {
                rate: accepted as f64 / drawn as f64,
            });
        }
    }
    Ok((DMatrix::from_vec(r, cfg.n, data), accepted as f64 / drawn as f64))
}

/// `M × r` matrix of i.i.d. standard normal entries with full column rank.
pub fn mixing_matrix(m: usize, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    if r == 0 || m < r {
        return Err(Error::InvalidParameter {
            name: "mixing dimensions",
            reason: "need M >= r >= 1",
        });
    }
    let mut rng = stream_rng(seed, MIXING_STREAM);
    let mut rank = 0;
    for _ in 0..MIXING_ATTEMPTS {
        let h = DMatrix::from_fn(m, r, |_, _| StandardNormal.sample(&mut rng));
        rank = linalg::numerical_rank(&h, 1e-10);
        if rank == r {
            return Ok(h);
        }
    }
    Err(Error::RankDeficient { rank, required: r })
}

/// Adds i.i.d. Gaussian noise with `σ² = P / 10^(snr/10)`,
/// `P = ‖Y‖_F² / (M N)`. `None` (or `+∞`) returns the input unchanged with
/// `σ = 0`.
pub fn add_noise(y_clean: &DMatrix<f64>, snr_db: Option<f64>, seed: u64) -> Result<(DMatrix<f64>, f64)> {
    let snr = match snr_db {
        Some(s) if s.is_finite() => s,
        Some(s) if s == f64::INFINITY => return Ok((y_clean.clone(), 0.0)),
        None => return Ok((y_clean.clone(), 0.0)),
        Some(_) => {
            return Err(Error::InvalidParameter {
                name: "snr_db",
                reason: "must be finite or +inf",
            })
        }
    };
    let power = linalg::frobenius_sq(y_clean) / y_clean.len().max(1) as f64;
    if !(power > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mixtures",
            reason: "noise level is undefined for an all-zero signal",
        });
    }
    let sigma = libm::sqrt(power / libm::pow(10.0, snr / 10.0));
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::InvalidParameter {
        name: "snr_db",
        reason: "noise level is not finite",
    })?;
    let mut rng = stream_rng(seed, NOISE_STREAM);
    let mut y = y_clean.clone();
    for v in y.iter_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok((y, sigma))
}

/// Full scenario: sources, mixing matrix and (noisy) mixtures.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    let (s_g, acceptance_rate) = generate_sources(cfg)?;
    let h_g = mixing_matrix(cfg.m, cfg.r, cfg.seed)?;
    let clean = &h_g * &s_g;
    let (y, noise_sigma) = add_noise(&clean, cfg.snr_db, cfg.seed)?;
    Ok(Scenario {
        s_g,
        h_g,
        y,
        noise_sigma,
        acceptance_rate,
    })
}
