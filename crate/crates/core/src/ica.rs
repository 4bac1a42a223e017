//! Extended infomax ICA, the independence-based baseline.
//!
//! Mixtures are PCA-whitened to `r` channels and an `r × r` unmixing matrix
//! is learned with the natural-gradient rule
//!
//! ```text
//! ΔW = lr · (B·I - K·tanh(U)Uᵀ - UUᵀ) · W,   U = W Z_block
//! ```
//!
//! over shuffled mini-batches of `B` samples. `K` is diagonal with `-1` for
//! sub-Gaussian and `+1` for super-Gaussian components.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::stats;

/// Eigenvalues below this fraction of the largest count as zero when
/// checking the rank before whitening.
const RANK_TOL: f64 = 1e-10;
/// Angle between successive sweep updates that triggers annealing.
const ANNEAL_DEGREES: f64 = 60.0;
const BLOWUP: f64 = 1e8;
const MAX_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    /// `r × N` whitened data with identity sample covariance.
    pub z: DMatrix<f64>,
    /// `r × M` map applied to the centered mixtures.
    pub w_white: DMatrix<f64>,
    /// Row means removed before whitening.
    pub mean: DVector<f64>,
    /// Retained covariance eigenvalues, largest first.
    pub variances: DVector<f64>,
}

/// PCA whitening onto the top `r` principal components.
pub fn whiten(y: &DMatrix<f64>, r: usize) -> Result<Whitening> {
    stats::check_samples(y)?;
    if r == 0 || r > y.nrows() {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: "must be between 1 and the number of mixtures",
        });
    }
    let mean = linalg::row_means(y);
    let yc = linalg::center_rows(y);
    let cov = stats::centered_covariance(&yc);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_unstable_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > RANK_TOL * top.max(0.0))
        .count();
    if !(top > 0.0) || rank < r {
        return Err(Error::RankDeficient { rank, required: r });
    }
    let variances = DVector::from_iterator(r, order[..r].iter().map(|&i| eig.eigenvalues[i]));
    let mut w_white = DMatrix::zeros(r, y.nrows());
    for (row, &i) in order[..r].iter().enumerate() {
        let scale = 1.0 / libm::sqrt(eig.eigenvalues[i]);
        for (c, v) in eig.eigenvectors.column(i).iter().enumerate() {
            w_white[(row, c)] = v * scale;
        }
    }
    let z = &w_white * yc;
    Ok(Whitening {
        z,
        w_white,
        mean,
        variances,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaConfig {
    pub learning_rate: f64,
    /// Maximum number of sweeps over the data.
    pub max_iter: usize,
    /// Stop when the squared Frobenius norm of a sweep's weight change falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Number of components assumed sub-Gaussian. Equal to `r` fixes every
    /// component to the sub-Gaussian nonlinearity; fewer enables the
    /// kurtosis-based switch.
    pub n_subgauss: usize,
    /// Mini-batch size; `None` uses `⌊√(N/3)⌋`.
    pub block: Option<usize>,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            max_iter: 500,
            tol: 1e-7,
            seed: 0,
            n_subgauss: usize::MAX,
            block: None,
        }
    }
}

impl IcaConfig {
    fn validate(&self, r: usize) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: "must be positive and finite",
            });
        }
        if self.n_subgauss != usize::MAX && self.n_subgauss > r {
            return Err(Error::InvalidParameter {
                name: "n_subgauss",
                reason: "cannot exceed the number of sources",
            });
        }
        if self.block == Some(0) {
            return Err(Error::InvalidParameter {
                name: "block",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfomaxFit {
    /// `r × r` unmixing matrix for whitened data.
    pub w: DMatrix<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Final learning rate after annealing and restarts.
    pub learning_rate: f64,
}

/// Learns an unmixing matrix for whitened data `z`.
pub fn ica_infomax(z: &DMatrix<f64>, cfg: &IcaConfig) -> Result<InfomaxFit> {
    let (r, n) = z.shape();
    stats::check_samples(z)?;
    cfg.validate(r)?;
    let n_sub = cfg.n_subgauss.min(r);
    let adaptive = n_sub < r;
    let block = cfg
        .block
        .unwrap_or_else(|| (libm::sqrt(n as f64 / 3.0) as usize).max(1))
        .min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut lr = cfg.learning_rate;
    let mut restarts = 0;

    'restart: loop {
        let mut w = DMatrix::<f64>::identity(r, r);
        // Initial signs: the first `n_sub` components sub-Gaussian.
        let mut signs: Vec<f64> = (0..r).map(|i| if i < n_sub { -1.0 } else { 1.0 }).collect();
        let mut prev_delta: Option<DMatrix<f64>> = None;
        let mut zb = DMatrix::<f64>::zeros(r, block);
        for sweep in 1..=cfg.max_iter.max(1) {
            let start = w.clone();
            order.shuffle(&mut rng);
            for chunk in order.chunks(block) {
                if chunk.len() != zb.ncols() {
                    zb = DMatrix::zeros(r, chunk.len());
                }
                for (c, &j) in chunk.iter().enumerate() {
                    zb.set_column(c, &z.column(j));
                }
                let u = &w * &zb;
                let mut t = u.map(libm::tanh);
                for (i, s) in signs.iter().enumerate() {
                    t.row_mut(i).scale_mut(*s);
                }
                let mut m = DMatrix::<f64>::identity(r, r) * chunk.len() as f64;
                m -= &t * u.transpose();
                m -= &u * u.transpose();
                let dw = m * &w;
                w.zip_apply(&dw, |w, d| *w += lr * d);
                if w.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
                    restarts += 1;
                    if restarts > MAX_RESTARTS {
                        return Err(Error::Diverged { iteration: sweep });
                    }
                    lr *= 0.8;
                    continue 'restart;
                }
            }
            if adaptive {
                let u = &w * z;
                for (i, s) in signs.iter_mut().enumerate() {
                    *s = if excess_kurtosis(u.row(i).iter().copied()) < 0.0 { -1.0 } else { 1.0 };
                }
            }
            let delta = &w - &start;
            let change = linalg::frobenius_sq(&delta);
            if change < cfg.tol {
                return Ok(InfomaxFit {
                    w,
                    sweeps: sweep,
                    converged: true,
                    learning_rate: lr,
                });
            }
            if let Some(prev) = &prev_delta {
                let cos = prev.dot(&delta) / libm::sqrt(linalg::frobenius_sq(prev) * change);
                if libm::acos(cos.clamp(-1.0, 1.0)).to_degrees() > ANNEAL_DEGREES {
                    lr *= 0.5;
                }
            }
            prev_delta = Some(delta);
        }
        return Ok(InfomaxFit {
            w,
            sweeps: cfg.max_iter.max(1),
            converged: false,
            learning_rate: lr,
        });
    }
}

fn excess_kurtosis(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let (m2, m4) = xs.fold((0.0, 0.0), |(a, b), x| {
        let d = (x - mean) * (x - mean);
        (a + d, b + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    m4 / (m2 * m2) - 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaResult {
    /// `r × N` estimates `W · W_white · (Y - mean)`.
    pub s_est: DMatrix<f64>,
    /// Combined `r × M` unmixing map `W · W_white`.
    pub unmixing: DMatrix<f64>,
    pub whitening: Whitening,
    pub fit: InfomaxFit,
}

/// Whitening followed by infomax.
pub fn ica_separate(y: &DMatrix<f64>, r: usize, cfg: &IcaConfig) -> Result<IcaResult> {
    let whitening = whiten(y, r)?;
    let fit = ica_infomax(&whitening.z, cfg)?;
    let s_est = &fit.w * &whitening.z;
    let unmixing = &fit.w * &whitening.w_white;
    Ok(IcaResult {
        s_est,
        unmixing,
        whitening,
        fit,
    })
}
