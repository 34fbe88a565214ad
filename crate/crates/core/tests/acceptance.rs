//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use fastgmr::bench_io::{estimate_fro_residual, estimate_fro_residual_with, synth_lowrank_noise, Decay, gaussian_points};
use fastgmr::gmr::{solve_exact, solve_fast, GmrProblem};
use fastgmr::matrix::{gmr_residual, thin_qr, Mat, MatrixHandle, Side};
use fastgmr::rng::{derive_seed, gaussian_matrix, substream, STREAM_AUX};
use fastgmr::sketch::{leverage_scores, property2_deviation, ScoreSide, SketchFamily, SketchOperator, SketchSpec};
use fastgmr::spsd::{self, DenseOracle, EntryOracle, KernelOracle};
use fastgmr::svd_stream::{
    fast_sp_svd, practical_sp_svd, sf_deviation, sketch_basis, stream_matrix, tail_norm, StreamSvdConfig,
    StreamSvdState, Variant,
};
use rand::Rng;

type Outcome = (bool, String);

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 exactness oracle", c1_exactness),
        ("2 pythagorean identity", c2_pythagorean),
        ("3 fast-GMR error trend", c3_trend),
        ("4 sketch properties", c4_sketch_properties),
        ("5 SPSD cone and no-harm", c5_cone),
        ("6 query budget and oracle consistency", c6_queries),
        ("7 SPSD method ordering", c7_ordering),
        ("8 streaming invariance", c8_streaming),
        ("9 single-pass SVD quality", c9_svd_quality),
        ("10 SF(eps,k) deviation", c10_sf),
        ("11 Frobenius estimator", c11_estimator),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (name, f) in criteria {
        let t = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{name}] {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed, total {:.1}s", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn c1_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut deficient = 0;
    for seed in 0..50u64 {
        let mut g = rng(seed);
        let m = g.random_range(4..=64);
        let n = g.random_range(4..=64);
        let c = g.random_range(1..=m.min(12));
        let r = g.random_range(1..=n.min(12));
        let a = uniform(m, n, &mut g);
        let (cm, rm) = if seed % 3 == 0 && c > 1 && r > 1 {
            deficient += 1;
            (low_rank(m, c, c - 1, &mut g), low_rank(r, n, r - 1, &mut g))
        } else {
            (uniform(m, c, &mut g), uniform(r, n, &mut g))
        };
        let p = GmrProblem::new(a, cm, rm).unwrap();
        let exact = solve_exact(&p).unwrap();
        let fast = solve_fast(&p, &SketchSpec::identity(m), &SketchSpec::identity(n)).unwrap();
        worst = worst.max(rel_diff(&fast.core, &exact.core));
    }
    (worst <= 1e-10, format!("max rel core diff {worst:.2e} over 50 instances ({deficient} rank-deficient)"))
}

fn c2_pythagorean() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut g = rng(1000 + seed);
        let m = g.random_range(5..=40);
        let n = g.random_range(5..=40);
        let c = g.random_range(1..=m.min(8));
        let r = g.random_range(1..=n.min(8));
        let a = uniform(m, n, &mut g);
        let cm = uniform(m, c, &mut g);
        let rm = uniform(r, n, &mut g);
        // Independent optimum through the Jacobi pseudoinverse.
        let xstar = oracle_pinv(&cm) * &a * oracle_pinv(&rm);
        let xt = uniform(c, r, &mut g) * g.random_range(0.1..10.0);
        let lhs = (&a - &cm * &xt * &rm).norm_squared();
        let rhs = (&a - &cm * &xstar * &rm).norm_squared() + (&cm * (&xstar - &xt) * &rm).norm_squared();
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    (worst <= 1e-8, format!("max relative defect {worst:.2e} over 100 tuples"))
}

fn gmr_factors(a: &MatrixHandle, c: usize, r: usize, seed: u64) -> (Mat, Mat) {
    let gc = gaussian_matrix(a.cols(), c, &mut substream(derive_seed(seed, 100), STREAM_AUX));
    let gr = gaussian_matrix(r, a.rows(), &mut substream(derive_seed(seed, 101), STREAM_AUX));
    (a.mul_dense(&gc), a.left_mul_dense(&gr))
}

fn c3_trend() -> Outcome {
    let a = synth_lowrank_noise(200, 150, 10, 0.1, Decay::None, 42);
    let (c, r) = (20, 20);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut med10 = f64::NAN;
    let mut curve = Vec::new();
    for af in [2usize, 4, 6, 8, 10, 12] {
        let mut ratios = Vec::new();
        for seed in 0..30u64 {
            let (cm, rm) = gmr_factors(&a, c, r, seed);
            let p = GmrProblem::new(a.clone(), cm, rm).unwrap();
            let exact = solve_exact(&p).unwrap();
            let sc = SketchSpec::gaussian(af * c, 200, derive_seed(seed, 1));
            let sr = SketchSpec::gaussian(af * r, 150, derive_seed(seed, 2));
            ratios.push(solve_fast(&p, &sc, &sr).unwrap().error_ratio(&exact));
        }
        let med = median(&ratios);
        if af == 10 {
            med10 = med;
        }
        curve.push(format!("{af}:{med:.3}"));
        xs.push((1.0 / (af * af) as f64).ln());
        ys.push(med.ln());
    }
    let s = slope(&xs, &ys);
    (
        (0.65..=1.35).contains(&s) && med10 <= 0.1,
        format!("slope {s:.3} (want 1+-0.35), median at a=10 {med10:.4} (want <= 0.1); medians {}", curve.join(" ")),
    )
}

fn c4_sketch_properties() -> Outcome {
    let (k, m, eta, delta) = (5usize, 400usize, 0.5f64, 0.05f64);
    let u = thin_qr(&uniform(m, k, &mut rng(4))).0;
    let lev = leverage_scores(&u, ScoreSide::Row).unwrap().scores;
    let kf = k as f64;
    // Table size orders. Constants: 4 for Gaussian, 2 for OSNAP (gamma = 1/2),
    // 1 for the rest.
    let sizes: Vec<(&str, usize, Box<dyn Fn(u64) -> SketchSpec>)> = vec![
        {
            let s = (4.0 * (kf + (1.0 / delta).ln()) / (eta * eta)).ceil() as usize;
            ("gaussian", s, Box::new(move |seed| SketchSpec::gaussian(s, m, seed)))
        },
        {
            let s = (kf * kf / (delta * eta * eta)).ceil() as usize;
            ("countsketch", s, Box::new(move |seed| SketchSpec::count_sketch(s, m, seed)))
        },
        {
            let s = (2.0 * (kf / eta).powf(1.5) * (1.0 / delta).ln()).ceil() as usize;
            ("osnap", s, Box::new(move |seed| SketchSpec::osnap(s, m, 2, seed)))
        },
        {
            let s = (kf / (eta * eta) * (kf / delta).ln()).ceil() as usize;
            let lev = lev.clone();
            ("leverage", s, Box::new(move |seed| SketchSpec::new(SketchFamily::LeverageSample(lev.clone()), s, m, seed)))
        },
        {
            let s = ((kf + (m as f64).ln()) / (eta * eta) * (kf / delta).ln()).ceil() as usize;
            ("srht", s, Box::new(move |seed| SketchSpec::new(SketchFamily::Srht, s, m, seed)))
        },
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, s, make) in &sizes {
        let mut hits = 0;
        for seed in 0..200u64 {
            let op = SketchOperator::realize(&make(seed)).unwrap();
            let su = op.apply_left_dense(&u);
            let (_, sv, _) = jacobi_svd(&su);
            // Property 1 for all x: squared singular values within 1 +- eta.
            if sv.iter().all(|x| (x * x - 1.0).abs() <= eta) {
                hits += 1;
            }
        }
        ok &= hits >= 190;
        parts.push(format!("{name}(s={s}) {hits}/200"));
    }
    let b = MatrixHandle::Dense(uniform(m, 8, &mut rng(5)));
    let au = MatrixHandle::Dense(u.clone());
    for (name, make) in [
        ("gaussian", SketchSpec::gaussian as fn(usize, usize, u64) -> SketchSpec),
        ("countsketch", SketchSpec::count_sketch),
    ] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in [32usize, 64, 128, 256] {
            let devs: Vec<f64> = (0..200u64)
                .map(|seed| {
                    let op = SketchOperator::realize(&make(s, m, seed)).unwrap();
                    property2_deviation(&op, &au, &b).unwrap()
                })
                .collect();
            xs.push((s as f64).ln());
            ys.push(median(&devs).ln());
        }
        let sl = slope(&xs, &ys);
        ok &= (-0.7..=-0.3).contains(&sl);
        parts.push(format!("{name} property-2 slope {sl:.3}"));
    }
    (ok, parts.join(", "))
}

fn kernel_oracle(seed: u64, n: usize, sigma: f64) -> KernelOracle {
    KernelOracle::new(gaussian_points(4, n, 4, 0.8, seed), sigma).unwrap()
}

fn c5_cone() -> Outcome {
    let mut worst_eig: f64 = 0.0;
    let mut worst_harm = f64::NEG_INFINITY;
    let mut ok = true;
    for seed in 0..100u64 {
        let mut o = kernel_oracle(seed, 80, 0.3);
        let k = o.dense();
        let approx = spsd::approximate(&mut o, 8, 32, seed).unwrap();
        let ev = jacobi_eigenvalues(&approx.core);
        let norm2 = ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let min_ev = ev.last().copied().unwrap_or(0.0);
        worst_eig = worst_eig.min(min_ev / norm2.max(f64::MIN_POSITIVE));
        let sym = (&approx.core - approx.core.transpose()).amax();
        let harm = (approx.residual_fro(&k) - approx.raw_residual_fro(&k)) / k.norm();
        worst_harm = worst_harm.max(harm);
        ok &= min_ev >= -1e-10 * norm2 && sym == 0.0 && harm <= 1e-8;
    }
    (
        ok,
        format!("min eig / ||core|| >= {worst_eig:.2e}, max (projected - raw residual)/||K|| = {worst_harm:.2e} over 100 kernels"),
    )
}

/// Counts distinct pairs independently of the oracle under test.
struct Shadow<O> {
    inner: O,
    seen: std::collections::BTreeSet<(usize, usize)>,
}

impl<O: EntryOracle> EntryOracle for Shadow<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn entry(&mut self, i: usize, j: usize) -> fastgmr::Result<f64> {
        self.seen.insert((i.min(j), i.max(j)));
        self.inner.entry(i, j)
    }
    fn query_count(&self) -> usize {
        self.inner.query_count()
    }
}

fn c6_queries() -> Outcome {
    let (n, c) = (60usize, 8usize);
    let mut ok = true;
    let mut max_used = [0usize; 3];
    let mut worst_diff: f64 = 0.0;
    for (si, s) in [16usize, 24, 32].into_iter().enumerate() {
        for seed in 0..100u64 {
            let lazy = kernel_oracle(seed, n, 0.3);
            let dense_k = lazy.dense();
            let mut shadow = Shadow {
                inner: lazy,
                seen: Default::default(),
            };
            let a = spsd::approximate(&mut shadow, c, s, seed).unwrap();
            ok &= a.queries_used <= n * c + s * s + c && a.queries_used == shadow.seen.len();
            max_used[si] = max_used[si].max(a.queries_used);
            let b = spsd::approximate(&mut DenseOracle::new(dense_k).unwrap(), c, s, seed).unwrap();
            ok &= b.queries_used == a.queries_used;
            worst_diff = worst_diff.max((&a.core - &b.core).amax()).max((&a.c - &b.c).amax());
        }
    }
    ok &= worst_diff <= 1e-12;
    (
        ok,
        format!(
            "max queries {:?} vs budgets {:?}; lazy vs dense max diff {worst_diff:.1e}",
            max_used,
            [16usize, 24, 32].map(|s| n * c + s * s + c)
        ),
    )
}

fn c7_ordering() -> Outcome {
    let (n, k) = (200usize, 5usize);
    let (c, s) = (2 * k, 20 * k);
    let sigma = spsd::tune_sigma(&gaussian_points(5, n, 8, 1.0, 7000), k, 0.6, 1e-4, 100.0).unwrap();
    let mut opt = Vec::new();
    let mut fast = Vec::new();
    let mut base = Vec::new();
    for seed in 0..50u64 {
        let o = KernelOracle::new(gaussian_points(5, n, 8, 1.0, 7000 + seed), sigma).unwrap();
        let kd = o.dense();
        opt.push(spsd::optimal_core(&mut o.clone(), c, seed).unwrap().error_ratio(&kd));
        fast.push(spsd::approximate(&mut o.clone(), c, s, seed).unwrap().error_ratio(&kd));
        base.push(spsd::fast_spsd_baseline(&mut o.clone(), c, s, seed).unwrap().error_ratio(&kd));
    }
    let (mo, mf, mb) = (median(&opt), median(&fast), median(&base));
    (
        mo <= mf && mf <= 1.1 * mo && mf <= mb,
        format!("median error ratios: optimal {mo:.4}, faster {mf:.4} ({:.3}x optimal), baseline {mb:.4}; sigma {sigma:.4}", mf / mo),
    )
}

fn c8_streaming() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for seed in 0..20u64 {
        let mut g = rng(8000 + seed);
        let m = g.random_range(30..=60);
        let n = g.random_range(25..=50);
        let a = if seed % 4 == 3 {
            MatrixHandle::Sparse(sparse(m, n, 0.2, &mut g))
        } else {
            synth_lowrank_noise(m, n, 4, 0.05, Decay::Poly, seed)
        };
        let base = StreamSvdConfig {
            k: 3,
            epsilon: 0.5,
            c0: 24,
            r0: 24,
            c: 8,
            r: 8,
            s_c: 24,
            s_r: 24,
            block_size: 1,
            seed,
            osnap_p: 2,
        };
        let mut states = Vec::new();
        for l in [1usize, 7, n] {
            let cf = StreamSvdConfig { block_size: l, ..base.clone() };
            states.push(stream_matrix(&a, &cf, Variant::Fast).unwrap());
        }
        let f0 = states[0].finalize().unwrap();
        for st in &states[1..] {
            let f = st.finalize().unwrap();
            for (x, y) in [
                (st.c_accumulator(), states[0].c_accumulator()),
                (st.m_accumulator(), states[0].m_accumulator()),
                (&f.u, &f0.u),
                (&f.v, &f0.v),
            ] {
                worst = worst.max((x - y).amax());
            }
            worst = worst.max((st.r_accumulator() - states[0].r_accumulator()).amax());
        }
        // Checkpoint mid-stream, restore, finish: must match exactly.
        let mut st = StreamSvdState::new(base.clone(), m, n).unwrap();
        let half = n / 2;
        st.ingest_block(&a.column_block(0, half), 0).unwrap();
        let bytes = st.to_bytes();
        let mut restored = StreamSvdState::from_bytes(&bytes).unwrap();
        ok &= restored.to_bytes() == bytes;
        restored.ingest_block(&a.column_block(half, n - half), half).unwrap();
        st.ingest_block(&a.column_block(half, n - half), half).unwrap();
        ok &= restored.to_bytes() == st.to_bytes();
        let (fa, fb) = (restored.finalize().unwrap(), st.finalize().unwrap());
        ok &= fa.u == fb.u && fa.v == fb.v && fa.sigma == fb.sigma;
    }
    ok &= worst <= 1e-12;
    (ok, format!("max diff across L in {{1, 7, all}}: {worst:.1e}; checkpoint round-trips bit-exact: {ok}"))
}

fn c9_svd_quality() -> Outcome {
    let k = 10;
    let mats: Vec<(MatrixHandle, f64)> = (0..30u64)
        .map(|seed| {
            let a = synth_lowrank_noise(500, 400, 400, 0.0, Decay::Poly, 900 + seed);
            let t = tail_norm(&a.to_dense(), k).unwrap();
            (a, t)
        })
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for ratio in [4usize, 6, 8, 12] {
        let budget = ratio * k;
        let mut fast = Vec::new();
        let mut prac = Vec::new();
        for (seed, (a, tail)) in mats.iter().enumerate() {
            let d = a.to_dense();
            let c = budget / 2;
            let cf = StreamSvdConfig {
                k,
                epsilon: 0.5,
                c0: 2 * c,
                r0: 2 * c,
                c,
                r: budget - c,
                s_c: 6 * c,
                s_r: 6 * c,
                block_size: 50,
                seed: seed as u64,
                osnap_p: 2,
            };
            fast.push(fast_sp_svd(a, &cf).unwrap().residual_fro(&d) / tail - 1.0);
            let pc = budget / 3;
            let pcf = StreamSvdConfig { c: pc, r: budget - pc, ..cf };
            prac.push(practical_sp_svd(a, &pcf).unwrap().residual_fro(&d) / tail - 1.0);
        }
        let (mf, mp) = (median(&fast), median(&prac));
        ok &= mf <= mp;
        parts.push(format!("(c+r)/k={ratio}: fast {mf:.3} vs practical {mp:.3}"));
    }
    let mut recovered = 0;
    for seed in 0..100u64 {
        let a = synth_lowrank_noise(200, 150, k, 0.0, Decay::None, 9500 + seed);
        let cf = StreamSvdConfig {
            k,
            epsilon: 0.5,
            c0: 80,
            r0: 80,
            c: 4 * k,
            r: 4 * k,
            s_c: 16 * k,
            s_r: 16 * k,
            block_size: 25,
            seed,
            osnap_p: 2,
        };
        let d = a.to_dense();
        if let Ok(f) = fast_sp_svd(&a, &cf) {
            if f.residual_fro(&d) <= 1e-6 * d.norm() {
                recovered += 1;
            }
        }
    }
    ok &= recovered >= 95;
    parts.push(format!("exact rank-k recovery {recovered}/100"));
    (ok, parts.join("; "))
}

fn c10_sf() -> Outcome {
    let (k, eps) = (5usize, 0.5f64);
    // Lemma size orders with constant 2: r0 = 2 (k/eps)^1.5, r = 2 k/eps.
    let r0 = (2.0 * (k as f64 / eps).powf(1.5)).ceil() as usize;
    let r = (2.0 * k as f64 / eps).ceil() as usize;
    let mut hits = 0;
    let mut devs = Vec::new();
    for seed in 0..100u64 {
        let a = synth_lowrank_noise(300, 200, 200, 0.0, Decay::Poly, 10_000 + seed);
        let op = SketchOperator::realize(&SketchSpec::osnap_gaussian(r, r0, 300, 2, seed)).unwrap();
        let basis = sketch_basis(&a, &op, Side::Right).unwrap();
        let d = sf_deviation(&basis, &a, k, Side::Right).unwrap();
        devs.push(d);
        if d <= eps {
            hits += 1;
        }
    }
    (
        hits >= 90,
        format!("{hits}/100 within eps = {eps} (r0 = {r0}, r = {r}); median deviation {:.3}", median(&devs)),
    )
}

fn c11_estimator() -> Outcome {
    let mut g = rng(11);
    let a = MatrixHandle::Sparse(sparse(400, 300, 0.05, &mut g));
    let (cm, rm) = gmr_factors(&a, 20, 20, 11);
    let p = GmrProblem::new(a.clone(), cm.clone(), rm.clone()).unwrap();
    let x = solve_exact(&p).unwrap().core;
    let exact = (a.to_dense() - &cm * &x * &rm).norm();
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let est = estimate_fro_residual(&a, &cm, &x, &rm, 1600, 1600, seed).unwrap();
        let rel = (est - exact).abs() / exact;
        worst = worst.max(rel);
        if rel <= 0.25 {
            hits += 1;
        }
    }
    let id1 = SketchOperator::realize(&SketchSpec::identity(400)).unwrap();
    let id2 = SketchOperator::realize(&SketchSpec::identity(300)).unwrap();
    let via_id = estimate_fro_residual_with(&a, &cm, &x, &rm, &id1, &id2).unwrap();
    let id_err = (via_id - exact).abs() / exact;
    let lib = gmr_residual(&a, &cm, &x, &rm);
    (
        hits >= 90 && id_err <= 1e-10 && (lib - exact).abs() <= 1e-8 * exact,
        format!("{hits}/100 within 25% (max rel err {worst:.3}); identity sketches rel err {id_err:.1e}"),
    )
}
