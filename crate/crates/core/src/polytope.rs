//! Box-plus-ℓ1-group polytopes and Euclidean projection onto them.
//!
//! A [`PolytopeSpec`] constrains each coordinate to `[-1, 1]` or `[0, 1]` and
//! any number of coordinate groups to `‖s_G‖₁ ≤ 1`. That family covers the
//! ℓ1 and ℓ∞ balls, their nonnegative parts, and mixed polytopes such as
//! [`PolytopeSpec::mixed_example`] whose groups overlap.
//!
//! When the groups are pairwise disjoint the projection factorizes and is
//! computed exactly. Overlapping groups fall back to Dykstra's alternating
//! projection over the box and the individual group balls.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default Dykstra sweep budget.
pub const DEFAULT_MAX_ITER: usize = 200;
/// Default Dykstra stopping threshold on the change over one sweep.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Maximum constraint violation accepted for a projected point.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `[-1, 1]`
    Signed,
    /// `[0, 1]`
    Nonneg,
}

impl Domain {
    #[inline]
    pub fn lower(self) -> f64 {
        match self {
            Domain::Signed => -1.0,
            Domain::Nonneg => 0.0,
        }
    }

    #[inline]
    pub fn clamp(self, v: f64) -> f64 {
        v.clamp(self.lower(), 1.0)
    }
}

/// Named polytopes, as used by the experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    L1,
    Linf,
    L1Nonneg,
    LinfNonneg,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::L1, Preset::Linf, Preset::L1Nonneg, Preset::LinfNonneg];

    pub fn name(self) -> &'static str {
        match self {
            Preset::L1 => "l1",
            Preset::Linf => "linf",
            Preset::L1Nonneg => "l1_nonneg",
            Preset::LinfNonneg => "linf_nonneg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolytopeSpec {
    domains: Vec<Domain>,
    groups: Vec<Vec<usize>>,
}

impl PolytopeSpec {
    pub fn new(domains: Vec<Domain>, groups: Vec<Vec<usize>>) -> Result<Self> {
        let dim = domains.len();
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "polytope",
                reason: "dimension must be positive",
            });
        }
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "polytope group",
                    reason: "groups must be non-empty",
                });
            }
            if g.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidParameter {
                    name: "polytope group",
                    reason: "group index out of range",
                });
            }
            let mut sorted = g.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter {
                    name: "polytope group",
                    reason: "duplicate index within a group",
                });
            }
        }
        Ok(Self { domains, groups })
    }

    pub fn preset(preset: Preset, dim: usize) -> Result<Self> {
        let all: Vec<usize> = (0..dim).collect();
        match preset {
            Preset::L1 => Self::new(vec![Domain::Signed; dim], vec![all]),
            Preset::Linf => Self::new(vec![Domain::Signed; dim], Vec::new()),
            Preset::L1Nonneg => Self::new(vec![Domain::Nonneg; dim], vec![all]),
            Preset::LinfNonneg => Self::new(vec![Domain::Nonneg; dim], Vec::new()),
        }
    }

    /// Three-dimensional polytope with signed `s₁, s₂`, nonnegative `s₃` and
    /// sparsity groups `{s₁, s₂}` and `{s₂, s₃}`.
    pub fn mixed_example() -> Self {
        Self::new(
            vec![Domain::Signed, Domain::Signed, Domain::Nonneg],
            vec![vec![0, 1], vec![1, 2]],
        )
        .expect("static polytope is valid")
    }

    pub fn dim(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// True when no coordinate belongs to two groups, so the projection
    /// splits into independent exact pieces.
    pub fn has_disjoint_groups(&self) -> bool {
        let mut seen = vec![false; self.dim()];
        for g in &self.groups {
            for &i in g {
                if seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        true
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "polytope dimension",
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Largest violation of any box or group constraint (0 when feasible).
    pub fn violation(&self, s: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (&v, d) in s.iter().zip(&self.domains) {
            worst = worst.max(d.lower() - v).max(v - 1.0);
        }
        for g in &self.groups {
            let l1: f64 = g.iter().map(|&i| s[i].abs()).sum();
            worst = worst.max(l1 - 1.0);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        worst
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> Result<bool> {
        self.check_len(s.len())?;
        Ok(self.violation(s) <= tol)
    }

    /// Euclidean projection of `v`.
    pub fn project(&self, v: &[f64], max_iter: usize, tol: f64) -> Result<ProjectionReport> {
        self.check_len(v.len())?;
        let mut out = v.to_vec();
        let iterations = if self.has_disjoint_groups() {
            self.project_exact_in_place(&mut out);
            1
        } else {
            let mut work = DykstraWork::new(self);
            match work.run(self, &mut out, max_iter, tol) {
                Some(it) => it,
                None => {
                    let residual = self.violation(&out);
                    return Ok(ProjectionReport {
                        point: out,
                        iterations: max_iter,
                        residual,
                        converged: false,
                    });
                }
            }
        };
        let residual = self.violation(&out);
        Ok(ProjectionReport {
            point: out,
            iterations,
            residual,
            converged: true,
        })
    }

    /// Projection with the default Dykstra budget, failing when the result
    /// is not feasible within [`FEASIBILITY_TOL`].
    pub fn project_point(&self, v: &[f64]) -> Result<Vec<f64>> {
        let rep = self.project(v, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
        rep.accept()
    }

    fn project_exact_in_place(&self, x: &mut [f64]) {
        let mut in_group = vec![false; x.len()];
        for g in &self.groups {
            let mut sub: Vec<f64> = g
                .iter()
                .map(|&i| match self.domains[i] {
                    Domain::Nonneg => x[i].max(0.0),
                    Domain::Signed => x[i],
                })
                .collect();
            project_l1_in_place(&mut sub, 1.0);
            for (&i, v) in g.iter().zip(sub) {
                x[i] = v;
                in_group[i] = true;
            }
        }
        for (i, v) in x.iter_mut().enumerate() {
            if !in_group[i] {
                *v = self.domains[i].clamp(*v);
            }
        }
    }

    /// Projects every column of `s` independently.
    pub fn project_columns(&self, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = s.clone();
        self.project_columns_in_place(&mut out)?;
        Ok(out)
    }

    pub fn project_columns_in_place(&self, s: &mut DMatrix<f64>) -> Result<()> {
        self.check_len(s.nrows())?;
        if self.groups.is_empty() {
            for mut col in s.column_iter_mut() {
                for (v, d) in col.iter_mut().zip(&self.domains) {
                    *v = d.clamp(*v);
                }
            }
            return Ok(());
        }
        if self.has_disjoint_groups() {
            for mut col in s.column_iter_mut() {
                self.project_exact_in_place(col.as_mut_slice());
            }
            return Ok(());
        }
        let mut work = DykstraWork::new(self);
        for mut col in s.column_iter_mut() {
            let x = col.as_mut_slice();
            if work.run(self, x, DEFAULT_MAX_ITER, DEFAULT_TOL).is_none() {
                let residual = self.violation(x);
                if residual > FEASIBILITY_TOL {
                    return Err(Error::ProjectionNotConverged {
                        iterations: DEFAULT_MAX_ITER,
                        residual,
                    });
                }
            }
        }
        Ok(())
    }

    /// Per-column membership check.
    pub fn contains_columns(&self, s: &DMatrix<f64>, tol: f64) -> Result<bool> {
        self.check_len(s.nrows())?;
        Ok(s.column_iter().all(|c| self.violation(c.as_slice()) <= tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub point: Vec<f64>,
    pub iterations: usize,
    /// Maximum constraint violation of `point`.
    pub residual: f64,
    pub converged: bool,
}

impl ProjectionReport {
    /// The projected point if it is feasible within [`FEASIBILITY_TOL`].
    pub fn accept(self) -> Result<Vec<f64>> {
        if self.residual > FEASIBILITY_TOL {
            return Err(Error::ProjectionNotConverged {
                iterations: self.iterations,
                residual: self.residual,
            });
        }
        Ok(self.point)
    }
}

/// Clamps each coordinate into its domain.
pub fn project_box(v: &[f64], domains: &[Domain]) -> Vec<f64> {
    v.iter().zip(domains).map(|(&x, d)| d.clamp(x)).collect()
}

/// Euclidean projection onto `{x : ‖x‖₁ ≤ radius}`.
pub fn project_l1_group(v: &[f64], radius: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    project_l1_in_place(&mut out, radius);
    out
}

/// Soft-thresholding with the threshold found from sorted cumulative sums.
pub fn project_l1_in_place(v: &mut [f64], radius: f64) {
    debug_assert!(radius > 0.0);
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (k + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        let m = (x.abs() - theta).max(0.0);
        *x = if *x < 0.0 { -m } else { m };
    }
}

/// Scratch space for Dykstra's algorithm: one correction vector per set
/// (the box plus each group).
struct DykstraWork {
    corrections: Vec<DVector<f64>>,
    prev: Vec<f64>,
    old: Vec<f64>,
    buf: Vec<f64>,
}

impl DykstraWork {
    fn new(p: &PolytopeSpec) -> Self {
        let n = p.dim();
        Self {
            corrections: vec![DVector::zeros(n); p.groups.len() + 1],
            prev: vec![0.0; n],
            old: vec![0.0; n],
            buf: Vec::with_capacity(n),
        }
    }

    /// Runs Dykstra sweeps in place. Returns the sweep count on convergence.
    ///
    /// The iterate alone can sit still for a sweep while the corrections are
    /// still moving, so both must settle before stopping.
    fn run(&mut self, p: &PolytopeSpec, x: &mut [f64], max_iter: usize, tol: f64) -> Option<usize> {
        for c in &mut self.corrections {
            c.fill(0.0);
        }
        for it in 1..=max_iter.max(1) {
            self.prev.copy_from_slice(x);
            let mut corr_change: f64 = 0.0;
            for set in 0..self.corrections.len() {
                // y = x + correction; x = P_set(y); correction = y - x
                let corr = &mut self.corrections[set];
                self.old.copy_from_slice(corr.as_slice());
                for (xi, ci) in x.iter_mut().zip(corr.iter()) {
                    *xi += ci;
                }
                corr.as_mut_slice().copy_from_slice(x);
                if set == 0 {
                    for (v, d) in x.iter_mut().zip(&p.domains) {
                        *v = d.clamp(*v);
                    }
                } else {
                    let g = &p.groups[set - 1];
                    self.buf.clear();
                    self.buf.extend(g.iter().map(|&i| x[i]));
                    project_l1_in_place(&mut self.buf, 1.0);
                    for (&i, &v) in g.iter().zip(&self.buf) {
                        x[i] = v;
                    }
                }
                for ((ci, xi), o) in corr.iter_mut().zip(x.iter()).zip(&self.old) {
                    *ci -= xi;
                    corr_change = corr_change.max((*ci - o).abs());
                }
            }
            let change = x
                .iter()
                .zip(&self.prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change < tol && corr_change < tol && p.violation(x) <= FEASIBILITY_TOL {
                return Some(it);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let l1p = PolytopeSpec::preset(Preset::L1Nonneg, 3).unwrap();
        assert!(l1p.contains(&[0.2, 0.3, 0.4], 1e-9).unwrap());
        let linf = PolytopeSpec::preset(Preset::Linf, 2).unwrap();
        assert!(!linf.contains(&[1.0 + 1e-6, 0.0], 1e-9).unwrap());
        let ex = PolytopeSpec::mixed_example();
        assert!(!ex.contains(&[0.6, 0.5, 0.2], 1e-9).unwrap());
        assert!(ex.contains(&[0.5, 0.5, 0.5], 1e-9).unwrap());
        assert!(!ex.contains(&[0.0, 0.0, -0.1], 1e-9).unwrap());
        assert!(matches!(
            linf.contains(&[0.0; 3], 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        use Domain::*;
        assert!(PolytopeSpec::new(vec![], vec![]).is_err());
        assert!(PolytopeSpec::new(vec![Signed; 2], vec![vec![]]).is_err());
        assert!(PolytopeSpec::new(vec![Signed; 2], vec![vec![0, 2]]).is_err());
        assert!(PolytopeSpec::new(vec![Signed; 2], vec![vec![1, 1]]).is_err());
        assert!(PolytopeSpec::new(vec![Signed, Nonneg], vec![vec![1, 0]]).is_ok());
    }

    #[test]
    fn box_projection() {
        assert_eq!(project_box(&[2.0, -3.0], &[Domain::Signed; 2]), vec![1.0, -1.0]);
        assert_eq!(project_box(&[-0.5, 0.3], &[Domain::Nonneg; 2]), vec![0.0, 0.3]);
        let inside = [0.25, -0.75];
        assert_eq!(project_box(&inside, &[Domain::Signed; 2]), inside.to_vec());
    }

    #[test]
    fn l1_projection_examples() {
        assert_eq!(project_l1_group(&[1.0, 1.0], 1.0), vec![0.5, 0.5]);
        assert_eq!(project_l1_group(&[0.3, -0.2], 1.0), vec![0.3, -0.2]);
        let p = project_l1_group(&[3.0, -1.0, 0.2], 1.0);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let q = project_l1_group(&[0.9, -0.8, 0.1], 1.0);
        assert!((q.iter().map(|x| x.abs()).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((q[0] - 0.55).abs() < 1e-15 && (q[1] + 0.45).abs() < 1e-15 && q[2] == 0.0);
    }

    #[test]
    fn preset_projections() {
        let linf = PolytopeSpec::preset(Preset::Linf, 3).unwrap();
        let rep = linf.project(&[2.0, -0.5, -7.0], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(rep.point, vec![1.0, -0.5, -1.0]);

        let simplex = PolytopeSpec::preset(Preset::L1Nonneg, 3).unwrap();
        let rep = simplex.project(&[1.0, 1.0, 1.0], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        for v in rep.point {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_example_uses_dykstra() {
        let ex = PolytopeSpec::mixed_example();
        assert!(!ex.has_disjoint_groups());
        let rep = ex.project(&[0.9, 0.9, 0.9], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(rep.converged);
        assert!(rep.residual <= FEASIBILITY_TOL);
        assert!(rep.iterations > 1);
    }

    #[test]
    fn column_projection_touches_only_infeasible_columns() {
        let p = PolytopeSpec::preset(Preset::L1Nonneg, 2).unwrap();
        let s = DMatrix::from_row_slice(2, 3, &[0.1, 0.9, 0.0, 0.2, 0.9, 0.5]);
        let out = p.project_columns(&s).unwrap();
        assert_eq!(out.column(0), s.column(0));
        assert_eq!(out.column(2), s.column(2));
        assert!((out[(0, 1)] - 0.5).abs() < 1e-15 && (out[(1, 1)] - 0.5).abs() < 1e-15);
    }
}
