//! Ground-truth evaluation of source estimates: permutation and sign
//! resolution, mean squared error, SINR, and aggregation over trials.
//!
//! For a permutation `π` and signs `d`,
//! `N·MSE = Σᵢ ‖ŝᵢ‖² + ‖s_π(i)‖² - 2 dᵢ ⟨ŝᵢ, s_π(i)⟩`. The norms do not depend
//! on the alignment, so the MSE-optimal alignment maximizes
//! `Σᵢ |⟨ŝᵢ, s_π(i)⟩|` (an assignment problem) with `dᵢ` the sign of the
//! matched inner product.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Estimate row `i` corresponds to true row `perm[i]` with sign `signs[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

impl Alignment {
    pub fn identity(r: usize) -> Self {
        Self {
            perm: (0..r).collect(),
            signs: vec![1; r],
        }
    }

    /// `D Π S_g`: the ground truth rearranged to line up with the estimate.
    pub fn apply(&self, truth: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.perm.len(), truth.ncols());
        for (i, (&p, &d)) in self.perm.iter().zip(&self.signs).enumerate() {
            out.set_row(i, &(truth.row(p) * f64::from(d)));
        }
        out
    }

    fn validate(&self, r: usize) -> Result<()> {
        let mut seen = vec![false; r];
        if self.perm.len() != r || self.signs.len() != r {
            return Err(Error::DimensionMismatch {
                context: "alignment size",
                expected: r,
                found: self.perm.len(),
            });
        }
        for &p in &self.perm {
            if p >= r || seen[p] {
                return Err(Error::InvalidParameter {
                    name: "alignment",
                    reason: "perm is not a permutation",
                });
            }
            seen[p] = true;
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter {
                name: "alignment",
                reason: "signs must be ±1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub mse: f64,
    /// `+∞` for a perfect estimate.
    pub sinr_db: f64,
    pub alignment: Alignment,
    /// Pearson correlation of each estimate row with its matched, signed
    /// true row.
    pub per_source_corr: Vec<f64>,
}

fn check_pair(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<()> {
    if est.nrows() != truth.nrows() {
        return Err(Error::DimensionMismatch {
            context: "estimate rows",
            expected: truth.nrows(),
            found: est.nrows(),
        });
    }
    if est.ncols() != truth.ncols() {
        return Err(Error::DimensionMismatch {
            context: "estimate samples",
            expected: truth.ncols(),
            found: est.ncols(),
        });
    }
    if est.nrows() == 0 || est.ncols() == 0 {
        return Err(Error::Empty("estimate"));
    }
    Ok(())
}

/// MSE-optimal permutation and signs.
pub fn best_alignment(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<Alignment> {
    check_pair(est, truth)?;
    for (i, row) in est.row_iter().enumerate() {
        if row.norm() == 0.0 {
            return Err(Error::DegenerateRow(i));
        }
    }
    let inner = est * truth.transpose();
    Ok(align_by_weights(&inner))
}

/// Assignment maximizing `Σ |w[i, π(i)]|`, signs from the matched entries.
fn align_by_weights(w: &DMatrix<f64>) -> Alignment {
    let r = w.nrows();
    let cost = DMatrix::from_fn(r, r, |i, j| -w[(i, j)].abs());
    let perm = hungarian(&cost);
    let signs = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| if w[(i, j)] < 0.0 { -1 } else { 1 })
        .collect();
    Alignment { perm, signs }
}

/// `(1/N) ‖S_est - D Π S_g‖_F²`.
pub fn mse(est: &DMatrix<f64>, truth: &DMatrix<f64>, a: &Alignment) -> Result<f64> {
    check_pair(est, truth)?;
    a.validate(est.nrows())?;
    let mut total = 0.0;
    for (i, (&p, &d)) in a.perm.iter().zip(&a.signs).enumerate() {
        let d = f64::from(d);
        total += est
            .row(i)
            .iter()
            .zip(truth.row(p).iter())
            .map(|(e, t)| (e - d * t) * (e - d * t))
            .sum::<f64>();
    }
    Ok(total / est.ncols() as f64)
}

/// Average power per source per sample, `‖S_g‖_F² / (rN)`.
pub fn source_power(truth: &DMatrix<f64>) -> f64 {
    linalg::frobenius_sq(truth) / truth.len() as f64
}

fn to_db(power: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(power / mse)
    }
}

/// `10 log₁₀(P_s / MSE)` at the best alignment. An all-zero estimate row
/// has no sign to resolve; such rows are matched with sign `+1`.
pub fn sinr_db(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_pair(est, truth)?;
    let inner = est * truth.transpose();
    let a = align_by_weights(&inner);
    Ok(to_db(source_power(truth), mse(est, truth, &a)?))
}

/// Full report: alignment, MSE, SINR and per-source correlations. All-zero
/// estimate rows are tolerated as in [`sinr_db`].
pub fn evaluate(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<EvaluationReport> {
    check_pair(est, truth)?;
    let alignment = align_by_weights(&(est * truth.transpose()));
    let mse = mse(est, truth, &alignment)?;
    let aligned = alignment.apply(truth);
    let per_source_corr = (0..est.nrows())
        .map(|i| pearson(est.row(i).iter().copied(), aligned.row(i).iter().copied()))
        .collect();
    Ok(EvaluationReport {
        mse,
        sinr_db: to_db(source_power(truth), mse),
        alignment,
        per_source_corr,
    })
}

fn pearson(a: impl Iterator<Item = f64> + Clone, b: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = a.clone().count() as f64;
    let ma = a.clone().sum::<f64>() / n;
    let mb = b.clone().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / libm::sqrt(saa * sbb)
}

/// Resolves the scale and offset ambiguity of an estimate that carries no
/// amplitude information (e.g. unit-variance ICA outputs): rows are matched
/// to the truth by absolute Pearson correlation, then each row is replaced by
/// its least-squares affine fit `a·ŝᵢ + b` to the matched true row. Rows keep
/// their order; the fitted estimate is then scored with [`sinr_db`].
pub fn fit_affine(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_pair(est, truth)?;
    let ec = linalg::center_rows(est);
    let tc = linalg::center_rows(truth);
    let r = est.nrows();
    let mut corr = &ec * tc.transpose();
    for i in 0..r {
        let ne = ec.row(i).norm();
        if ne == 0.0 {
            return Err(Error::DegenerateRow(i));
        }
        for j in 0..r {
            let nt = tc.row(j).norm();
            corr[(i, j)] = if nt == 0.0 { 0.0 } else { corr[(i, j)] / (ne * nt) };
        }
    }
    let a = align_by_weights(&corr);
    let means = linalg::row_means(truth);
    let mut out = DMatrix::zeros(r, est.ncols());
    for (i, &j) in a.perm.iter().enumerate() {
        let e = ec.row(i);
        let scale = e.dot(&tc.row(j)) / e.norm_squared();
        let mut row = e * scale;
        row.add_scalar_mut(means[j]);
        out.set_row(i, &row);
    }
    Ok(out)
}

/// Minimum-cost perfect matching on a square cost matrix (Kuhn–Munkres with
/// row and column potentials). Returns `perm[row] = column`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = col0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        col1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            perm[owner[j] - 1] = j - 1;
        }
    }
    perm
}

/// Mean and population standard deviation of one quantity across trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population (`1/n`) standard deviation. `+∞` values (perfect
/// recoveries) propagate to the mean.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("trial values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if !mean.is_finite() {
        return Ok(Summary { mean, std: f64::NAN });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Summary {
        mean,
        std: libm::sqrt(var),
    })
}

/// One row of an aggregated convergence curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean: f64,
    pub std: f64,
}

/// Per-iteration mean and population std of SINR over trials.
///
/// Each trial is a list of `(iteration, sinr_db)` pairs. Only iterations
/// present in every trial appear in the output, in increasing order.
pub fn aggregate(trials: &[Vec<(usize, f64)>]) -> Result<Vec<CurvePoint>> {
    let first = trials.first().ok_or(Error::Empty("trial reports"))?;
    let mut grid: Vec<usize> = first.iter().map(|&(k, _)| k).collect();
    grid.sort_unstable();
    grid.dedup();
    let mut out = Vec::with_capacity(grid.len());
    let mut column = Vec::with_capacity(trials.len());
    'grid: for k in grid {
        column.clear();
        for t in trials {
            match t.iter().find(|&&(it, _)| it == k) {
                Some(&(_, v)) => column.push(v),
                None => continue 'grid,
            }
        }
        let s = summarize(&column)?;
        out.push(CurvePoint {
            iteration: k,
            mean: s.mean,
            std: s.std,
        });
    }
    Ok(out)
}
