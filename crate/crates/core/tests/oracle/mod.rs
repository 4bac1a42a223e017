//! Reference implementations that share no code with the library paths they check.
//!
//! Each one is deliberately slow and literal: brute-force enumeration instead of
//! clever algorithms, so that agreement with the fast paths is meaningful.

#![allow(dead_code)]

use ldinfomax_core::nalgebra::{DMatrix, DVector};
use ldinfomax_core::{Domain, PolytopeSpec};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Covariance written entry by entry from its definition, `(1/N) Σ_t (x_it - x̄_i)(z_jt - z̄_j)`.
pub fn covariance_by_definition(x: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols() as f64;
    DMatrix::from_fn(x.nrows(), z.nrows(), |i, j| {
        let mx: f64 = x.row(i).iter().sum::<f64>() / n;
        let mz: f64 = z.row(j).iter().sum::<f64>() / n;
        x.row(i)
            .iter()
            .zip(z.row(j).iter())
            .map(|(a, b)| (a - mx) * (b - mz))
            .sum::<f64>()
            / n
    })
}

/// Log-determinant as the sum of log-eigenvalues.
pub fn logdet_eig(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().map(|l| l.ln()).sum()
}

/// LD mutual information straight from the definition, inverse computed by LU.
pub fn ld_mi_reference(s: &DMatrix<f64>, y: &DMatrix<f64>, eps: f64) -> f64 {
    let r = s.nrows();
    let m = y.nrows();
    let rs = covariance_by_definition(s, s);
    let ry = covariance_by_definition(y, y);
    let rsy = covariance_by_definition(s, y);
    let ry_inv = (ry + DMatrix::identity(m, m) * eps).try_inverse().unwrap();
    let re = &rs - &rsy * ry_inv * rsy.transpose();
    let id = DMatrix::identity(r, r) * eps;
    0.5 * logdet_eig(&(rs + &id)) - 0.5 * logdet_eig(&(re + &id))
}

/// Central finite differences of `f` at every entry of `s`.
pub fn finite_difference<F>(s: &DMatrix<f64>, h: f64, mut f: F) -> DMatrix<f64>
where
    F: FnMut(&DMatrix<f64>) -> f64,
{
    let mut g = DMatrix::zeros(s.nrows(), s.ncols());
    let mut probe = s.clone();
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = f(&probe);
            probe[(i, j)] = orig - h;
            let down = f(&probe);
            probe[(i, j)] = orig;
            g[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    g
}

/// Minimum of `(1/N)‖est − DΠ truth‖²` over every permutation and sign pattern.
pub fn exhaustive_alignment_mse(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let r = est.nrows();
    let n = est.ncols() as f64;
    let mut best = f64::INFINITY;
    for perm in permutations(r) {
        for mask in 0u32..(1 << r) {
            let mut total = 0.0;
            for i in 0..r {
                let sign = if mask & (1 << i) != 0 { -1.0 } else { 1.0 };
                for t in 0..est.ncols() {
                    let d = est[(i, t)] - sign * truth[(perm[i], t)];
                    total += d * d;
                }
            }
            best = best.min(total / n);
        }
    }
    best
}

pub fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(r - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, r - 1);
            out.push(p);
        }
    }
    out
}

/// H-representation `A x ≤ b` of a box-plus-ℓ1-groups polytope.
///
/// Each ℓ1 group becomes the 2^|G| sign inequalities `Σ σ_i x_i ≤ 1`.
pub fn halfspaces(p: &PolytopeSpec) -> (Vec<Vec<f64>>, Vec<f64>) {
    let r = p.dim();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, d) in p.domains().iter().enumerate() {
        let mut up = vec![0.0; r];
        up[i] = 1.0;
        a.push(up);
        b.push(1.0);
        let mut lo = vec![0.0; r];
        lo[i] = -1.0;
        a.push(lo);
        b.push(match d {
            Domain::Signed => 1.0,
            Domain::Nonneg => 0.0,
        });
    }
    for g in p.groups() {
        for mask in 0u32..(1 << g.len()) {
            let mut row = vec![0.0; r];
            for (k, &i) in g.iter().enumerate() {
                row[i] = if mask & (1 << k) != 0 { -1.0 } else { 1.0 };
            }
            a.push(row);
            b.push(1.0);
        }
    }
    (a, b)
}

/// Euclidean projection by active-set enumeration.
///
/// For every subset of at most `dim` constraints, project `v` onto the
/// subset's affine hull; the point that is feasible and carries nonnegative
/// multipliers satisfies the KKT conditions and is the unique projection.
pub fn qp_projection(p: &PolytopeSpec, v: &[f64]) -> Vec<f64> {
    let (a, b) = halfspaces(p);
    let r = p.dim();
    let vv = DVector::from_column_slice(v);
    let feasible = |x: &DVector<f64>| {
        a.iter()
            .zip(&b)
            .all(|(row, &bi)| row.iter().zip(x.iter()).map(|(u, w)| u * w).sum::<f64>() <= bi + 1e-10)
    };
    if feasible(&vv) {
        return v.to_vec();
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for size in 1..=r {
        for subset in combinations(a.len(), size) {
            let am = DMatrix::from_fn(size, r, |i, j| a[subset[i]][j]);
            let bm = DVector::from_fn(size, |i, _| b[subset[i]]);
            let gram = &am * am.transpose();
            let Some(gi) = gram.clone().try_inverse() else { continue };
            if (&gram * &gi - DMatrix::identity(size, size)).norm() > 1e-8 {
                continue;
            }
            let lambda = gi * (&am * &vv - &bm);
            if lambda.iter().any(|&l| l < -1e-12) {
                continue;
            }
            let x = &vv - am.transpose() * lambda;
            if !feasible(&x) {
                continue;
            }
            let dist = (&x - &vv).norm();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, x));
            }
        }
    }
    best.expect("some active set satisfies KKT").1.iter().copied().collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Kolmogorov–Smirnov statistic of a sample against the uniform law on [0, 1].
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}
