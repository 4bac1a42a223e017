//! Projected gradient ascent on the LD-mutual information between the source
//! estimates and the mixtures:
//!
//! ```text
//! S(k+1) = P(S(k) + μ(k) ∇_S I(Y, S(k))),   μ(k) = μ₀ / √(k + 1)
//! ```
//!
//! where `P` projects every column onto the source polytope. The mixture
//! side of the objective does not depend on `S`, so `(R_y + εI)⁻¹` applied to
//! the centered mixtures is computed once per run and reused by every step.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::ica;
use crate::linalg;
use crate::polytope::{Domain, PolytopeSpec};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `μ₀ / √(k + 1)`
    InverseSqrt,
    /// `μ₀` at every step.
    Constant,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::InverseSqrt => "inverse-sqrt",
            Schedule::Constant => "constant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "inverse-sqrt" => Some(Schedule::InverseSqrt),
            "constant" => Some(Schedule::Constant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// PCA-whitened mixtures under a random rotation, rescaled into the
    /// unit ball, shifted into the nonnegative coordinates' range and projected.
    ProjectedRandomMap,
    /// I.i.d. uniform entries over each coordinate's domain, projected.
    Random,
}

impl InitStrategy {
    pub fn name(self) -> &'static str {
        match self {
            InitStrategy::ProjectedRandomMap => "projected-random-map",
            InitStrategy::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "projected-random-map" => Some(InitStrategy::ProjectedRandomMap),
            "random" => Some(InitStrategy::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub mu0: f64,
    pub iterations: usize,
    pub schedule: Schedule,
    pub seed: u64,
    /// Trajectory stride in iterations.
    pub record_every: usize,
    pub init: InitStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            mu0: 200.0,
            iterations: 10_000,
            schedule: Schedule::InverseSqrt,
            seed: 0,
            record_every: 100,
            init: InitStrategy::ProjectedRandomMap,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "must be positive and finite",
            });
        }
        if !(self.mu0 > 0.0) || !self.mu0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu0",
                reason: "must be positive and finite",
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Step size used to go from iterate `k` to `k + 1`.
    pub fn step_size(&self, k: usize) -> f64 {
        match self.schedule {
            Schedule::InverseSqrt => self.mu0 / libm::sqrt(k as f64 + 1.0),
            Schedule::Constant => self.mu0,
        }
    }
}

/// The LD-infomax objective for a fixed mixture matrix.
#[derive(Debug, Clone)]
pub struct LdInfomax {
    epsilon: f64,
    n: usize,
    /// Centered mixtures.
    yc: DMatrix<f64>,
    /// Cholesky factor of `R_y + εI`.
    ry_chol: nalgebra::Cholesky<f64, Dyn>,
    /// `(R_y + εI)⁻¹ Yc`
    whitened: DMatrix<f64>,
}

/// Objective value and gradient at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub gradient: DMatrix<f64>,
}

impl LdInfomax {
    pub fn new(y: &DMatrix<f64>, epsilon: f64) -> Result<Self> {
        stats::check_samples(y)?;
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "must be positive and finite",
            });
        }
        let yc = linalg::center_rows(y);
        let r_y = stats::centered_covariance(&yc);
        let ry_chol = linalg::cholesky(&linalg::shifted(&r_y, epsilon), "R_y + εI")?;
        let whitened = ry_chol.solve(&yc);
        Ok(Self {
            epsilon,
            n: y.ncols(),
            yc,
            ry_chol,
            whitened,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mixtures(&self) -> usize {
        self.yc.nrows()
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    fn check_shape(&self, s: &DMatrix<f64>) -> Result<()> {
        if s.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                context: "estimate sample count",
                expected: self.n,
                found: s.ncols(),
            });
        }
        Ok(())
    }

    /// `Î(Y, S) = ½ log det(R_s + εI) - ½ log det(R_e + εI)`.
    pub fn objective(&self, s: &DMatrix<f64>) -> Result<f64> {
        self.check_shape(s)?;
        let sc = linalg::center_rows(s);
        let parts = self.parts(&sc)?;
        Ok(parts.objective())
    }

    /// Objective and gradient
    /// `(1/N)(R_s+εI)⁻¹ S C - (1/N)(R_e+εI)⁻¹ (S - R_sy (R_y+εI)⁻¹ Y) C`
    /// with `C = I - 11ᵀ/N` applied as row-mean removal.
    pub fn evaluate(&self, s: &DMatrix<f64>) -> Result<Evaluation> {
        self.check_shape(s)?;
        let sc = linalg::center_rows(s);
        let parts = self.parts(&sc)?;
        let inv_n = 1.0 / self.n as f64;
        // Residual of the linear estimate of S from Y, already centered.
        let residual = &sc - &parts.r_sy * &self.whitened;
        let mut gradient = parts.rs_chol.solve(&sc);
        gradient -= parts.re_chol.solve(&residual);
        gradient *= inv_n;
        Ok(Evaluation {
            objective: parts.objective(),
            gradient,
        })
    }

    fn parts(&self, sc: &DMatrix<f64>) -> Result<Parts> {
        let inv_n = 1.0 / self.n as f64;
        let r_s = stats::centered_covariance(sc);
        let r_sy = sc * self.yc.transpose() * inv_n;
        let mut r_e = &r_s - &r_sy * self.ry_chol.solve(&r_sy.transpose());
        linalg::symmetrize_in_place(&mut r_e);
        let rs_chol = linalg::cholesky(&linalg::shifted(&r_s, self.epsilon), "R_s + εI")?;
        let re_chol = linalg::cholesky(&linalg::shifted(&r_e, self.epsilon), "R_e + εI")?;
        Ok(Parts {
            r_sy,
            rs_chol,
            re_chol,
        })
    }
}

struct Parts {
    r_sy: DMatrix<f64>,
    rs_chol: nalgebra::Cholesky<f64, Dyn>,
    re_chol: nalgebra::Cholesky<f64, Dyn>,
}

impl Parts {
    fn objective(&self) -> f64 {
        0.5 * (linalg::chol_logdet(&self.rs_chol) - linalg::chol_logdet(&self.re_chol))
    }
}

/// Gradient of the LD-mutual information with respect to the estimates.
pub fn gradient(s: &DMatrix<f64>, y: &DMatrix<f64>, epsilon: f64) -> Result<DMatrix<f64>> {
    Ok(LdInfomax::new(y, epsilon)?.evaluate(s)?.gradient)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub objective: f64,
    /// Present when the run was observed against ground truth.
    pub sinr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Current `r × N` iterate; every column lies in the polytope.
    pub s: DMatrix<f64>,
    /// Number of steps taken.
    pub k: usize,
    /// Objective at `s`.
    pub objective: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    /// True when the default initialization fell back to `Random`.
    pub init_fell_back: bool,
    gradient: DMatrix<f64>,
}

impl SolverState {
    /// Evaluates the objective at a feasible starting point.
    pub fn new(s: DMatrix<f64>, problem: &LdInfomax) -> Result<Self> {
        let eval = problem.evaluate(&s)?;
        if !eval.objective.is_finite() {
            return Err(Error::Diverged { iteration: 0 });
        }
        Ok(Self {
            s,
            k: 0,
            objective: eval.objective,
            trajectory: Vec::new(),
            init_fell_back: false,
            gradient: eval.gradient,
        })
    }

    /// Gradient at the current iterate.
    pub fn gradient(&self) -> &DMatrix<f64> {
        &self.gradient
    }
}

/// Starting point for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub s: DMatrix<f64>,
    /// The mixtures had rank below `r`, so `Random` was used instead of the
    /// requested strategy.
    pub fell_back: bool,
}

pub fn initialize(y: &DMatrix<f64>, p: &PolytopeSpec, cfg: &SolverConfig) -> Result<Initialization> {
    stats::check_samples(y)?;
    let r = p.dim();
    let n = y.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fell_back = false;
    let mut s = None;
    if cfg.init == InitStrategy::ProjectedRandomMap {
        match ica::whiten(y, r) {
            Ok(w) => {
                let rot = random_orthonormal(r, &mut rng);
                let mut z = rot * w.z;
                let max_norm = z.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
                if max_norm > 0.0 {
                    z /= max_norm;
                }
                for (i, d) in p.domains().iter().enumerate() {
                    if *d == Domain::Nonneg {
                        z.row_mut(i).add_scalar_mut(0.5);
                    }
                }
                s = Some(z);
            }
            Err(Error::RankDeficient { .. }) => fell_back = true,
            Err(e) => return Err(e),
        }
    }
    let mut s = match s {
        Some(s) => s,
        None => {
            let unit = Uniform::new(0.0, 1.0).expect("valid range");
            DMatrix::from_fn(r, n, |i, _| {
                let u: f64 = unit.sample(&mut rng);
                match p.domains()[i] {
                    Domain::Signed => 2.0 * u - 1.0,
                    Domain::Nonneg => u,
                }
            })
        }
    };
    p.project_columns_in_place(&mut s)?;
    Ok(Initialization { s, fell_back })
}

/// Haar-distributed orthonormal matrix from the QR factorization of a
/// Gaussian matrix.
pub(crate) fn random_orthonormal(r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(r, r, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..r {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// One projected gradient step from `state`.
pub fn step(
    mut state: SolverState,
    problem: &LdInfomax,
    p: &PolytopeSpec,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let mu = cfg.step_size(state.k);
    state.s.zip_apply(&state.gradient, |s, g| *s += mu * g);
    p.project_columns_in_place(&mut state.s)?;
    state.k += 1;
    let eval = problem.evaluate(&state.s).map_err(|e| match e {
        Error::NotPositiveDefinite(_) => Error::Diverged { iteration: state.k },
        other => other,
    })?;
    if !eval.objective.is_finite() {
        return Err(Error::Diverged { iteration: state.k });
    }
    state.objective = eval.objective;
    state.gradient = eval.gradient;
    Ok(state)
}

/// Runs `cfg.iterations` steps from the configured initialization.
pub fn run(y: &DMatrix<f64>, p: &PolytopeSpec, cfg: &SolverConfig) -> Result<SolverState> {
    run_observed(y, p, cfg, |_| None)
}

/// As [`run`], calling `observe` on every recorded iterate; its return value
/// is stored as the trajectory SINR.
pub fn run_observed<F>(
    y: &DMatrix<f64>,
    p: &PolytopeSpec,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<SolverState>
where
    F: FnMut(&DMatrix<f64>) -> Option<f64>,
{
    cfg.validate()?;
    if y.ncols() < 2 {
        return Err(Error::TooFewSamples(y.ncols()));
    }
    let problem = LdInfomax::new(y, cfg.epsilon)?;
    let init = initialize(y, p, cfg)?;
    let mut state = SolverState::new(init.s, &problem)?;
    state.init_fell_back = init.fell_back;
    for _ in 0..cfg.iterations {
        state = step(state, &problem, p, cfg)?;
        if state.k % cfg.record_every == 0 {
            record(&mut state, &mut observe);
        }
    }
    if state.trajectory.last().map(|t| t.iteration) != Some(state.k) {
        record(&mut state, &mut observe);
    }
    Ok(state)
}

fn record<F>(state: &mut SolverState, observe: &mut F)
where
    F: FnMut(&DMatrix<f64>) -> Option<f64>,
{
    let sinr_db = observe(&state.s);
    state.trajectory.push(TrajectoryPoint {
        iteration: state.k,
        objective: state.objective,
        sinr_db,
    });
}
