mod common;

use common::{jacobi_eigenvalues, median, mgs_basis, oracle_pinv, projector, rng};
use fastgmr::bench_io::gaussian_points;
use fastgmr::matrix::Mat;
use fastgmr::spsd::{
    self, approximate, approximate_exhaustive, fast_spsd_baseline, nystrom, optimal_core, rbf_kernel_matrix,
    DenseOracle, EntryOracle, KernelOracle,
};
use fastgmr::Error;
use proptest::prelude::*;

fn cloud(n: usize, seed: u64) -> Mat {
    gaussian_points(4, n, 5, 1.0, seed)
}

/// Direct `exp(-sigma ||x_i - x_j||^2)` on a dense grid.
fn direct_kernel(points: &Mat, sigma: f64) -> Mat {
    let n = points.ncols();
    Mat::from_fn(n, n, |i, j| (-sigma * (points.column(i) - points.column(j)).norm_squared()).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cores_are_psd_and_projection_never_hurts(seed in any::<u64>(), c in 3usize..8, factor in 2usize..6) {
        let pts = cloud(50, seed % 1000);
        let mut oracle = KernelOracle::new(pts, 0.4).unwrap();
        let k = oracle.dense();
        let s = (factor * c).min(50);
        let approx = match approximate(&mut oracle, c, s, seed) {
            Ok(a) => a,
            Err(Error::RankCollapse { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let min_eig = jacobi_eigenvalues(&approx.core).last().copied().unwrap();
        prop_assert!(min_eig >= -1e-10 * approx.core.norm().max(1.0));
        prop_assert!(approx.residual_fro(&k) <= approx.raw_residual_fro(&k) + 1e-8 * k.norm());
    }
}

#[test]
fn kernel_entries_match_direct_formula() {
    let pts = cloud(30, 1);
    let k = rbf_kernel_matrix(&pts, 0.7);
    assert!((&k - direct_kernel(&pts, 0.7)).amax() < 1e-14);
    assert_eq!(k, k.transpose());
    let o = KernelOracle::new(pts, 0.7).unwrap();
    assert_eq!(o.dense(), k);
    assert!(KernelOracle::new(cloud(5, 1), 0.0).is_err());
}

#[test]
fn lazy_and_dense_oracles_agree() {
    let pts = cloud(60, 2);
    let k = rbf_kernel_matrix(&pts, 0.5);
    for seed in 0..5 {
        let mut lazy = KernelOracle::new(pts.clone(), 0.5).unwrap();
        let mut dense = DenseOracle::new(k.clone()).unwrap();
        let a = approximate(&mut lazy, 8, 32, seed).unwrap();
        let b = approximate(&mut dense, 8, 32, seed).unwrap();
        assert!((&a.core - &b.core).amax() <= 1e-12);
        assert_eq!(a.column_indices, b.column_indices);
        assert_eq!(a.queries_used, b.queries_used);
        assert_eq!(lazy.query_count(), a.queries_used);
    }
}

#[test]
fn nystrom_is_exact_on_rank_c_kernels() {
    let mut g = rng(3);
    let b = common::uniform(40, 5, &mut g);
    let k = &b * b.transpose();
    let approx = nystrom(&mut DenseOracle::new(k.clone()).unwrap(), 5, 1).unwrap();
    assert!(approx.residual_fro(&k) <= 1e-8 * k.norm());

    let pts = cloud(25, 4);
    let k = rbf_kernel_matrix(&pts, 0.3);
    let all = nystrom(&mut DenseOracle::new(k.clone()).unwrap(), 25, 0).unwrap();
    assert!(all.residual_fro(&k) <= 1e-6 * k.norm());
}

#[test]
fn query_counts_follow_access_pattern() {
    let (n, c) = (60, 8);
    let pts = cloud(n, 5);
    let mut o = KernelOracle::new(pts.clone(), 0.5).unwrap();
    let ny = nystrom(&mut o, c, 0).unwrap();
    // n c entries, with the c x c intersection block counted once per pair.
    assert_eq!(ny.queries_used, n * c - c * (c - 1) / 2);
    let mut o = KernelOracle::new(pts.clone(), 0.5).unwrap();
    assert_eq!(optimal_core(&mut o, c, 0).unwrap().queries_used, n * (n + 1) / 2);
    let mut o = KernelOracle::new(pts, 0.5).unwrap();
    let a = approximate(&mut o, c, 24, 0).unwrap();
    assert!(a.queries_used <= n * c + 24 * 24 + c);
}

#[test]
fn reference_methods_against_optimal_core() {
    let (n, c) = (60, 8);
    let pts = cloud(n, 6);
    let k = rbf_kernel_matrix(&pts, 0.5);
    for seed in 0..10 {
        let opt = optimal_core(&mut DenseOracle::new(k.clone()).unwrap(), c, seed).unwrap();
        let cp = oracle_pinv(&opt.c);
        let want = &cp * &k * cp.transpose();
        assert!((&opt.core - &want).norm() <= 1e-8 * want.norm());
        let ny = nystrom(&mut DenseOracle::new(k.clone()).unwrap(), c, seed).unwrap();
        assert_eq!(ny.column_indices, opt.column_indices);
        assert!(ny.residual_fro(&k) >= opt.residual_fro(&k) - 1e-10);
        // Exhaustive samplers: the optimal core (already PSD here).
        let ex = approximate_exhaustive(&mut DenseOracle::new(k.clone()).unwrap(), c, seed).unwrap();
        assert!((ex.residual_fro(&k) - opt.residual_fro(&k)).abs() <= 1e-8 * k.norm());
    }
}

#[test]
fn baseline_is_not_better_than_two_sampler_method() {
    let (n, c) = (60, 8);
    let pts = cloud(n, 7);
    let k = rbf_kernel_matrix(&pts, 0.5);
    // s = 8c would exceed n = 60, which sampling rejects; 7c is the
    // largest multiple that fits.
    let s = 7 * c;
    let (mut ours, mut base) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let a = approximate(&mut DenseOracle::new(k.clone()).unwrap(), c, s, seed);
        let b = fast_spsd_baseline(&mut DenseOracle::new(k.clone()).unwrap(), c, s, seed);
        if let (Ok(a), Ok(b)) = (a, b) {
            ours.push(a.error_ratio(&k));
            base.push(b.error_ratio(&k));
        }
    }
    assert!(ours.len() >= 45);
    assert!(median(&base) >= median(&ours), "{} < {}", median(&base), median(&ours));
    assert!(fast_spsd_baseline(&mut DenseOracle::new(k.clone()).unwrap(), c, c - 1, 0).is_err());
    assert!(fast_spsd_baseline(&mut DenseOracle::new(k).unwrap(), c, n + 1, 0).is_err());
}

#[test]
fn symmetric_rho_matches_direct_evaluation() {
    let pts = cloud(40, 8);
    let k = rbf_kernel_matrix(&pts, 0.5);
    let cols = spsd::sample_columns(40, 6, 3).unwrap();
    let c = k.select_columns(&cols);
    let d = spsd::symmetric_rho(&k, &c).unwrap();
    let p = projector(&mgs_basis(&c));
    let i = Mat::identity(40, 40);
    let num = (&k - &p * &k * &p).norm();
    let den = 2.0 * ((&i - &p) * &k * &p).norm();
    assert!((d.rho - num / den).abs() <= 1e-9 * d.rho);
}

#[test]
fn sigma_tuning_reaches_target() {
    let pts = cloud(80, 9);
    let sigma = spsd::tune_sigma(&pts, 5, 0.6, 1e-4, 1e2).unwrap();
    let eta = spsd::spectral_ratio_eta(&rbf_kernel_matrix(&pts, sigma), 5).unwrap();
    assert!(eta >= 0.6 - 1e-9);
    let eta_wider = spsd::spectral_ratio_eta(&rbf_kernel_matrix(&pts, sigma * 1.5), 5).unwrap();
    assert!(eta_wider < 0.6);
    // Eigenvalues of a kernel matrix: nonnegative.
    assert!(jacobi_eigenvalues(&rbf_kernel_matrix(&pts, sigma)).last().unwrap() >= &-1e-10);
}

#[test]
fn column_sampling_is_distinct_and_sorted() {
    for seed in 0..100 {
        let cols = spsd::sample_columns(30, 10, seed).unwrap();
        assert_eq!(cols.len(), 10);
        assert!(cols.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(spsd::sample_columns(5, 6, 0).is_err());
}
