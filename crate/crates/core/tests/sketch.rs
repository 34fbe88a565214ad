mod common;

use common::{hashing_replay, median, mgs_basis, rng, slope, uniform};
use fastgmr::matrix::{Mat, MatrixHandle};
use fastgmr::sketch::{leverage_scores, property2_deviation, ScoreSide, SketchFamily, SketchOperator, SketchSpec};
use proptest::prelude::*;

fn families(m: usize) -> Vec<SketchFamily> {
    let scores: Vec<f64> = (0..m).map(|i| 1.0 + (i % 5) as f64).collect();
    vec![
        SketchFamily::LeverageSample(scores),
        SketchFamily::UniformSample,
        SketchFamily::Gaussian,
        SketchFamily::Srht,
        SketchFamily::CountSketch,
        SketchFamily::Osnap { nnz_per_col: 3 },
        SketchFamily::Identity,
    ]
}

fn spec_for(family: SketchFamily, s: usize, m: usize, seed: u64) -> SketchSpec {
    let s = if family == SketchFamily::Identity { m } else { s };
    SketchSpec::new(family, s, m, seed)
}

/// Sylvester Hadamard matrix of order `n` (a power of two), entries +-1.
fn hadamard(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn left_and_right_application_agree_with_dense(m in 4usize..40, s in 3usize..12, n in 1usize..6, seed in any::<u64>(), sparse in any::<bool>()) {
        let s = s.min(m);
        let mut g = rng(seed);
        let a = if sparse { MatrixHandle::Sparse(common::sparse(m, n, 0.3, &mut g)) } else { MatrixHandle::Dense(uniform(m, n, &mut g)) };
        for family in families(m) {
            let exact = !matches!(family, SketchFamily::Gaussian | SketchFamily::Srht);
            let op = SketchOperator::realize(&spec_for(family, s, m, seed)).unwrap();
            let d = op.to_dense();
            let left = op.apply_left(&a).unwrap();
            let right = op.apply_right(&a.transpose()).unwrap();
            let want = &d * a.to_dense();
            let tol = if exact { 1e-13 } else { 1e-12 } * want.norm().max(1.0);
            prop_assert!((&left - &want).norm() <= tol);
            // S A and A^T S^T are transposes of each other.
            if exact {
                prop_assert_eq!(left.transpose(), right);
            } else {
                prop_assert!((left.transpose() - right).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn realize_is_deterministic(m in 3usize..50, s in 3usize..20, seed in any::<u64>()) {
        let s = s.min(m);
        for family in families(m) {
            let spec = spec_for(family, s, m, seed);
            prop_assert_eq!(SketchOperator::realize(&spec).unwrap(), SketchOperator::realize(&spec).unwrap());
        }
    }
}

#[test]
fn structural_invariants_over_seed_sweep() {
    let (m, s, p) = (30, 8, 3);
    for seed in 0..1000u64 {
        let cs = SketchOperator::realize(&SketchSpec::count_sketch(s, m, seed)).unwrap();
        let d = cs.to_dense();
        assert_eq!(d, hashing_replay(&cs));
        for j in 0..m {
            let col: Vec<f64> = d.column(j).iter().copied().filter(|x| *x != 0.0).collect();
            assert_eq!(col.len(), 1);
            assert_eq!(col[0].abs(), 1.0);
        }
        let os = SketchOperator::realize(&SketchSpec::osnap(s, m, p, seed)).unwrap();
        let d = os.to_dense();
        assert_eq!(d, hashing_replay(&os));
        for j in 0..m {
            let (rows, _) = os.column_entries(j).unwrap();
            let mut distinct = rows.to_vec();
            distinct.dedup();
            assert_eq!(distinct.len(), p);
            let nz: Vec<f64> = d.column(j).iter().copied().filter(|x| *x != 0.0).collect();
            assert_eq!(nz.len(), p);
            assert!(nz.iter().all(|x| (x.abs() - 1.0 / (p as f64).sqrt()).abs() < 1e-15));
        }
        let un = SketchOperator::realize(&SketchSpec::new(SketchFamily::UniformSample, s, m, seed)).unwrap();
        let (idx, scales) = un.sampled_rows().unwrap();
        assert_eq!(idx.len(), s);
        assert!(idx.iter().all(|&i| i < m));
        assert!(scales.iter().all(|&w| (w - (m as f64 / s as f64).sqrt()).abs() < 1e-15));
        let d = un.to_dense();
        for i in 0..s {
            assert_eq!(d.row(i).iter().filter(|x| **x != 0.0).count(), 1);
        }
    }
}

#[test]
fn srht_matches_explicit_hadamard_construction() {
    let (m, s) = (13, 6);
    let op = SketchOperator::realize(&SketchSpec::new(SketchFamily::Srht, s, m, 9)).unwrap();
    let d = op.to_dense();
    let h = hadamard(16);
    // Rows of sqrt(s) S are h_r o d on the first m coordinates. The
    // elementwise ratio of two such rows is h_r o h_r0 = h_(r xor r0), itself
    // a Hadamard row, whatever the signs d are.
    let scaled = &d * (s as f64).sqrt();
    for i in 0..s {
        let ratio: Vec<f64> = (0..m).map(|j| scaled[(i, j)] / scaled[(0, j)]).collect();
        let hit = (0..16).any(|r| (0..m).all(|j| (h[(r, j)] - ratio[j]).abs() < 1e-12));
        assert!(hit, "row {i} is not a signed Hadamard row");
    }
    assert!(d.iter().all(|x| (x.abs() - 1.0 / (s as f64).sqrt()).abs() < 1e-14));
    let sm: Mat = &d * d.transpose();
    // Distinct Hadamard rows restricted to m columns: diagonal m/s.
    for i in 0..s {
        assert!((sm[(i, i)] - m as f64 / s as f64).abs() < 1e-12);
    }
}

#[test]
fn gaussian_entries_have_variance_one_over_s() {
    let op = SketchOperator::realize(&SketchSpec::gaussian(50, 400, 3)).unwrap();
    let d = op.to_dense();
    let var = d.iter().map(|x| x * x).sum::<f64>() / (50.0 * 400.0);
    assert!((var * 50.0 - 1.0).abs() < 0.03, "variance {var}");
}

#[test]
fn leverage_scores_match_projector_diagonal() {
    let mut g = rng(11);
    let a = uniform(40, 6, &mut g);
    let q = mgs_basis(&a);
    let scores = leverage_scores(&a, ScoreSide::Row).unwrap().scores;
    for (i, l) in scores.iter().enumerate() {
        assert!((l - q.row(i).norm_squared()).abs() < 1e-12);
    }
    assert!((scores.iter().sum::<f64>() - 6.0).abs() < 1e-10);
    let col = leverage_scores(&a.transpose(), ScoreSide::Column).unwrap().scores;
    for (x, y) in scores.iter().zip(&col) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(SketchOperator::realize(&SketchSpec::gaussian(0, 10, 0)).is_err());
    assert!(SketchOperator::realize(&SketchSpec::new(SketchFamily::UniformSample, 11, 10, 0)).is_err());
    assert!(SketchOperator::realize(&SketchSpec::new(SketchFamily::Srht, 11, 10, 0)).is_err());
    assert!(SketchOperator::realize(&SketchSpec::new(SketchFamily::LeverageSample(vec![1.0; 9]), 5, 10, 0)).is_err());
    let op = SketchOperator::realize(&SketchSpec::gaussian(4, 10, 0)).unwrap();
    assert!(op.apply_left(&MatrixHandle::Dense(Mat::zeros(9, 2))).is_err());
}

#[test]
fn property2_trivial_cases_and_scaling() {
    let mut g = rng(12);
    let a = MatrixHandle::Dense(uniform(200, 3, &mut g));
    let zero = MatrixHandle::Dense(Mat::zeros(200, 4));
    let op = SketchOperator::realize(&SketchSpec::gaussian(50, 200, 1)).unwrap();
    assert_eq!(property2_deviation(&op, &a, &zero).unwrap(), 0.0);
    let id = SketchOperator::realize(&SketchSpec::identity(200)).unwrap();
    let b = MatrixHandle::Dense(uniform(200, 4, &mut g));
    assert!(property2_deviation(&id, &a, &b).unwrap() < 1e-14);

    // Median deviation roughly halves when s quadruples.
    let med = |s: usize| {
        let v: Vec<f64> = (0..200)
            .map(|seed| {
                let op = SketchOperator::realize(&SketchSpec::gaussian(s, 200, seed)).unwrap();
                property2_deviation(&op, &a, &b).unwrap()
            })
            .collect();
        median(&v)
    };
    let ratio = med(50) / med(200);
    assert!((1.6..=2.6).contains(&ratio), "ratio {ratio}");
    let ss = [32.0f64, 64.0, 128.0, 256.0];
    let ys: Vec<f64> = ss.iter().map(|&s| med(s as usize).ln()).collect();
    let xs: Vec<f64> = ss.iter().map(|s| s.ln()).collect();
    let k = slope(&xs, &ys);
    assert!((-0.7..=-0.3).contains(&k), "slope {k}");
}
