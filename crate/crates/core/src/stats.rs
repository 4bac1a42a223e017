//! Sample covariances and log-determinant (LD) information measures.
//!
//! All covariances use the biased `1/N` normalization
//! `R = (1/N) X Xᵀ - (1/N²) X 1 1ᵀ Xᵀ`, and every log-determinant goes through
//! a Cholesky factorization of the symmetrized, `εI`-shifted matrix. A shifted
//! matrix that is not positive definite is reported as an error rather than
//! mapped to `-∞`.

use core::f64::consts::{E, PI};
use core::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// A validated `channels × samples` matrix: at least two samples, all
/// entries finite. Columns are time samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix(DMatrix<f64>);

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        check_samples(&data)?;
        Ok(Self(data))
    }

    pub fn channels(&self) -> usize {
        self.0.nrows()
    }

    pub fn samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for SampleMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl AsRef<DMatrix<f64>> for SampleMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub(crate) fn check_samples(x: &DMatrix<f64>) -> Result<()> {
    if x.ncols() < 2 {
        return Err(Error::TooFewSamples(x.ncols()));
    }
    linalg::check_finite(x)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

/// `(1/N) X Xᵀ - (1/N²) X 1 1ᵀ Xᵀ`, symmetrized.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() < 2 {
        return Err(Error::TooFewSamples(x.ncols()));
    }
    let xc = linalg::center_rows(x);
    Ok(centered_covariance(&xc))
}

/// Covariance of an already row-centered matrix.
pub(crate) fn centered_covariance(xc: &DMatrix<f64>) -> DMatrix<f64> {
    let n = xc.ncols() as f64;
    let mut cov = xc * xc.transpose();
    cov /= n;
    linalg::symmetrize_in_place(&mut cov);
    cov
}

/// `(1/N) S Yᵀ - (1/N²) S 1 1ᵀ Yᵀ`, an `r × M` matrix.
pub fn cross_covariance(s: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            context: "cross covariance sample count",
            expected: s.ncols(),
            found: y.ncols(),
        });
    }
    if s.ncols() < 2 {
        return Err(Error::TooFewSamples(s.ncols()));
    }
    let sc = linalg::center_rows(s);
    let yc = linalg::center_rows(y);
    Ok(&sc * yc.transpose() / s.ncols() as f64)
}

/// `½ log det(cov + εI) + (r/2) log(2πe)`.
pub fn ld_entropy(cov: &DMatrix<f64>, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !cov.is_square() {
        return Err(Error::DimensionMismatch {
            context: "ld_entropy covariance columns",
            expected: cov.nrows(),
            found: cov.ncols(),
        });
    }
    let r = cov.nrows() as f64;
    let ld = linalg::logdet_spd(&linalg::shifted(cov, epsilon), "covariance + εI")?;
    Ok(0.5 * ld + 0.5 * r * libm::log(2.0 * PI * E))
}

/// The second-order statistics of a source-estimate / mixture pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBundle {
    /// `r × r` covariance of the estimates.
    pub r_s: DMatrix<f64>,
    /// `M × M` covariance of the mixtures.
    pub r_y: DMatrix<f64>,
    /// `r × M` cross covariance.
    pub r_sy: DMatrix<f64>,
    pub epsilon: f64,
}

impl CovarianceBundle {
    pub fn new(
        r_s: DMatrix<f64>,
        r_y: DMatrix<f64>,
        r_sy: DMatrix<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !r_s.is_square() || !r_y.is_square() {
            return Err(Error::InvalidParameter {
                name: "covariance",
                reason: "auto-covariances must be square",
            });
        }
        if r_sy.nrows() != r_s.nrows() || r_sy.ncols() != r_y.nrows() {
            return Err(Error::DimensionMismatch {
                context: "cross covariance shape",
                expected: r_s.nrows() * r_y.nrows(),
                found: r_sy.nrows() * r_sy.ncols(),
            });
        }
        for m in [&r_s, &r_y] {
            let scale = m.amax().max(f64::MIN_POSITIVE);
            if (m - m.transpose()).amax() > 1e-12 * scale {
                return Err(Error::InvalidParameter {
                    name: "covariance",
                    reason: "auto-covariances must be symmetric",
                });
            }
        }
        Ok(Self { r_s, r_y, r_sy, epsilon })
    }

    pub fn from_samples(s: &DMatrix<f64>, y: &DMatrix<f64>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_samples(s)?;
        check_samples(y)?;
        let r_sy = cross_covariance(s, y)?;
        Ok(Self {
            r_s: sample_covariance(s)?,
            r_y: sample_covariance(y)?,
            r_sy,
            epsilon,
        })
    }

    /// The same statistics with the roles of the two vectors exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            r_s: self.r_y.clone(),
            r_y: self.r_s.clone(),
            r_sy: self.r_sy.transpose(),
            epsilon: self.epsilon,
        }
    }

    /// Joint covariance of the stacked vector `[s; y]`.
    pub fn joint(&self) -> DMatrix<f64> {
        let (r, m) = (self.r_s.nrows(), self.r_y.nrows());
        let mut j = DMatrix::zeros(r + m, r + m);
        j.view_mut((0, 0), (r, r)).copy_from(&self.r_s);
        j.view_mut((r, r), (m, m)).copy_from(&self.r_y);
        j.view_mut((0, r), (r, m)).copy_from(&self.r_sy);
        j.view_mut((r, 0), (m, r)).copy_from(&self.r_sy.transpose());
        j
    }

    /// LD-mutual information `½ log det(R_s + εI) - ½ log det(R_e + εI)`.
    pub fn mutual_information(&self) -> Result<f64> {
        let re = conditional_error_covariance(self)?;
        let h_s = linalg::logdet_spd(&linalg::shifted(&self.r_s, self.epsilon), "R_s + εI")?;
        let h_e = linalg::logdet_spd(&linalg::shifted(&re, self.epsilon), "R_e + εI")?;
        Ok(0.5 * (h_s - h_e))
    }
}

/// Linear-MMSE error covariance `R_e = R_s - R_sy (R_y + εI)⁻¹ R_syᵀ`, symmetrized.
pub fn conditional_error_covariance(b: &CovarianceBundle) -> Result<DMatrix<f64>> {
    let chol = linalg::cholesky(&linalg::shifted(&b.r_y, b.epsilon), "R_y + εI")?;
    let solved = chol.solve(&b.r_sy.transpose());
    let mut re = &b.r_s - &b.r_sy * solved;
    linalg::symmetrize_in_place(&mut re);
    Ok(re)
}

/// Deterministic LD-mutual information between estimates `s` and mixtures `y`.
pub fn ld_mutual_information(s: &DMatrix<f64>, y: &DMatrix<f64>, epsilon: f64) -> Result<f64> {
    CovarianceBundle::from_samples(s, y, epsilon)?.mutual_information()
}
