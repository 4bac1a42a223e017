mod oracle;

use ldinfomax_core::eval;
use ldinfomax_core::nalgebra::DMatrix;
use ldinfomax_core::polytope::{project_l1_group, Preset, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ldinfomax_core::solver;
use ldinfomax_core::stats::{self, CovarianceBundle};
use ldinfomax_core::{linalg, PolytopeSpec};
use oracle::{gaussian, logdet_eig, permutations, rng};
use proptest::prelude::*;

fn any_polytope() -> impl Strategy<Value = PolytopeSpec> {
    prop_oneof![
        (0usize..4, 1usize..6).prop_map(|(k, d)| PolytopeSpec::preset(Preset::ALL[k], d).unwrap()),
        Just(PolytopeSpec::mixed_example()),
    ]
}

fn polytope_and_point() -> impl Strategy<Value = (PolytopeSpec, Vec<f64>)> {
    any_polytope().prop_flat_map(|p| {
        let d = p.dim();
        (Just(p), prop::collection::vec(-3.0..3.0f64, d))
    })
}

fn polytope_and_two_points() -> impl Strategy<Value = (PolytopeSpec, Vec<f64>, Vec<f64>)> {
    any_polytope().prop_flat_map(|p| {
        let d = p.dim();
        (
            Just(p),
            prop::collection::vec(-3.0..3.0f64, d),
            prop::collection::vec(-3.0..3.0f64, d),
        )
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn project(p: &PolytopeSpec, v: &[f64]) -> Vec<f64> {
    p.project(v, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap().accept().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_is_idempotent_and_feasible((p, v) in polytope_and_point()) {
        let once = project(&p, &v);
        prop_assert!(p.contains(&once, 1e-8).unwrap());
        let twice = project(&p, &once);
        prop_assert!(dist(&once, &twice) <= 1e-9);
    }

    #[test]
    fn projection_is_nonexpansive((p, u, v) in polytope_and_two_points()) {
        let pu = project(&p, &u);
        let pv = project(&p, &v);
        prop_assert!(dist(&pu, &pv) <= dist(&u, &v) + 1e-9);
    }

    #[test]
    fn simplex_projection_matches_capped_simplex(v in prop::collection::vec(0.0..1.0f64, 2..6)) {
        // Nonnegative coordinates with sum above one only violate the sum constraint.
        let sum: f64 = v.iter().sum();
        prop_assume!(sum > 1.0);
        let p = PolytopeSpec::preset(Preset::L1Nonneg, v.len()).unwrap();
        let got = project(&p, &v);
        // Classic simplex projection: shift by τ chosen so the clipped sum is one.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let tau = 0.5 * (lo + hi);
            let s: f64 = v.iter().map(|x| (x - tau).max(0.0)).sum();
            if s > 1.0 { lo = tau } else { hi = tau }
        }
        let expected: Vec<f64> = v.iter().map(|x| (x - hi).max(0.0)).collect();
        prop_assert!(dist(&got, &expected) < 1e-9, "{:?} vs {:?}", got, expected);
    }

    #[test]
    fn l1_ball_projection_lands_on_sphere(v in prop::collection::vec(-2.0..2.0f64, 1..8)) {
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        let w = project_l1_group(&v, 1.0);
        let w1: f64 = w.iter().map(|x| x.abs()).sum();
        if l1 <= 1.0 {
            prop_assert_eq!(w, v);
        } else {
            prop_assert!((w1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn information_identities(seed in any::<u64>(), r in 1usize..5, m in 1usize..5, extra in 0usize..20) {
        let mut g = rng(seed);
        let n = r + m + 2 + extra;
        let s = gaussian(r, n, &mut g);
        let y = &gaussian(m, r, &mut g) * &s + gaussian(m, n, &mut g) * 0.5;
        let eps = 1e-5;
        let b = CovarianceBundle::from_samples(&s, &y, eps).unwrap();
        let re = stats::conditional_error_covariance(&b).unwrap();
        let lhs = logdet_eig(&linalg::shifted(&b.joint(), eps));
        let rhs = logdet_eig(&linalg::shifted(&b.r_y, eps)) + logdet_eig(&linalg::shifted(&re, eps));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
        let i1 = b.mutual_information().unwrap();
        let i2 = b.swapped().mutual_information().unwrap();
        prop_assert!((i1 - i2).abs() <= 1e-9 * i1.abs().max(1.0));
        prop_assert!(i1 >= -1e-9);
    }

    #[test]
    fn entropy_scale_covariance(seed in any::<u64>(), r in 1usize..5, a in 0.1..10.0f64) {
        let mut g = rng(seed);
        let x = gaussian(r, 30, &mut g);
        let c = stats::sample_covariance(&x).unwrap();
        let base = stats::ld_entropy(&c, 1e-3).unwrap();
        let scaled = stats::ld_entropy(&(c * (a * a)), 1e-3 * a * a).unwrap();
        prop_assert!((scaled - base - r as f64 * a.ln()).abs() < 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn covariance_is_translation_invariant(seed in any::<u64>(), shift in prop::collection::vec(-100.0..100.0f64, 3)) {
        let mut g = rng(seed);
        let x = gaussian(3, 25, &mut g);
        let mut moved = x.clone();
        for (i, sh) in shift.iter().enumerate() {
            moved.row_mut(i).add_scalar_mut(*sh);
        }
        let a = stats::sample_covariance(&x).unwrap();
        let b = stats::sample_covariance(&moved).unwrap();
        prop_assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn gradient_ignores_mixture_offsets(seed in any::<u64>(), shift in prop::collection::vec(-50.0..50.0f64, 4)) {
        let mut g = rng(seed);
        let s = gaussian(3, 30, &mut g);
        let y = gaussian(4, 30, &mut g);
        let mut moved = y.clone();
        for (i, sh) in shift.iter().enumerate() {
            moved.row_mut(i).add_scalar_mut(*sh);
        }
        let a = solver::gradient(&s, &y, 1e-5).unwrap();
        let b = solver::gradient(&s, &moved, 1e-5).unwrap();
        prop_assert!((&a - &b).amax() <= 1e-9 * a.amax().max(1.0));
    }

    #[test]
    fn sinr_absorbs_permutation_and_signs(seed in any::<u64>(), r in 1usize..6, pick in any::<prop::sample::Index>()) {
        let mut g = rng(seed);
        let truth = gaussian(r, 50, &mut g);
        let est = &truth + gaussian(r, 50, &mut g) * 0.2;
        let perms = permutations(r);
        let perm = &perms[pick.index(perms.len())];
        let flips: Vec<f64> = (0..r).map(|i| if (seed >> i) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let moved = DMatrix::from_fn(r, 50, |i, t| flips[i] * est[(perm[i], t)]);
        let a = eval::sinr_db(&est, &truth).unwrap();
        let b = eval::sinr_db(&moved, &truth).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn mse_is_invariant_to_joint_row_permutation(seed in any::<u64>(), r in 1usize..6, pick in any::<prop::sample::Index>()) {
        let mut g = rng(seed);
        let truth = gaussian(r, 40, &mut g);
        let est = gaussian(r, 40, &mut g);
        let perms = permutations(r);
        let perm = &perms[pick.index(perms.len())];
        let pe = DMatrix::from_fn(r, 40, |i, t| est[(perm[i], t)]);
        let pt = DMatrix::from_fn(r, 40, |i, t| truth[(perm[i], t)]);
        let a = eval::evaluate(&est, &truth).unwrap().mse;
        let b = eval::evaluate(&pe, &pt).unwrap().mse;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}
