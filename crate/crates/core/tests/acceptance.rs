//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (run with `--nocapture` to see
//! them on success).

use std::time::Instant;

use faer::{c64, Mat};
use optdmd::harness::{
    gen_example1, gen_example2, run_benchmark, summarize, Example, ExperimentConfig, RankSpec,
};
use optdmd::{
    approx_optimized_dmd, build_phi, eigenvalue_match_error, exact_dmd, fb_dmd, optimized_dmd,
    select_rank, solve_varpro, tls_dmd, Method, OptDmdConfig, RankStrategy, SnapshotSet, TimeGrid,
    VarProOptions,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Unit-norm random modes with the crate's phase convention baked in.
fn random_exponential_data(
    n: usize,
    m: usize,
    dt: f64,
    alpha: &[c64],
    amps: &[f64],
    noise: f64,
    seed: u64,
) -> SnapshotSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = alpha.len();
    let mut modes = Mat::<c64>::from_fn(n, r, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    for j in 0..r {
        let norm = modes.col(j).norm_l2();
        for i in 0..n {
            modes[(i, j)] /= norm;
        }
    }
    let grid = TimeGrid::equispaced(m, dt).unwrap();
    let mut states = Mat::<c64>::zeros(n, m);
    for j in 0..m {
        let t = grid.times()[j];
        for i in 0..n {
            let mut acc = c(0.0, 0.0);
            for (l, &a) in alpha.iter().enumerate() {
                acc += modes[(i, l)] * amps[l] * (a * t).exp();
            }
            if noise > 0.0 {
                acc += c(
                    noise * rng.sample::<f64, _>(StandardNormal),
                    noise * rng.sample::<f64, _>(StandardNormal),
                );
            }
            states[(i, j)] = acc;
        }
    }
    SnapshotSet::new(states, grid).unwrap()
}

#[test]
fn criterion_01_noise_free_exactness_ex1() {
    let start = Instant::now();
    let (data, truth) = gen_example1(64, 0.1, 0.0, 1).unwrap();

    let (opt, _) = optimized_dmd(&data, &OptDmdConfig::new(2)).unwrap();
    let opt_err = eigenvalue_match_error(&opt.eigenvalues, &truth.eigenvalues).unwrap();
    assert!(opt_err <= 1e-6, "optimized eigenvalue error {opt_err}");

    let pairs = data.pairs().unwrap();
    let discrete_truth = [c(0.0, 0.1).exp(), c(0.0, -0.1).exp()];
    for (name, result) in [
        ("exact", exact_dmd(&pairs, 2).unwrap()),
        ("fb", fb_dmd(&pairs, 2).unwrap()),
        ("tls", tls_dmd(&pairs, 2).unwrap()),
    ] {
        let discrete = result.discrete_eigs.as_ref().unwrap();
        let err = eigenvalue_match_error(discrete, &discrete_truth).unwrap();
        assert!(err <= 1e-8, "{name} discrete eigenvalue error {err}");
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "runtime {elapsed:.3}s exceeds 1s");
    println!(
        "criterion 01 (noise-free exactness, ex1): PASS \
         [optimized err {opt_err:.2e}, runtime {elapsed:.3}s]"
    );
}

#[test]
fn criterion_02_hidden_dynamics_recovery_ex2() {
    let (data, truth) = gen_example2(256, 0.0, 1).unwrap();
    let (result, _) = approx_optimized_dmd(&data, &OptDmdConfig::new(4)).unwrap();
    let matched = optdmd::diagnostics::match_eigenvalues(&result.eigenvalues, &truth.eigenvalues)
        .unwrap();
    let mut worst = 0.0f64;
    for (est, tru) in matched.iter().zip(truth.eigenvalues.iter()) {
        worst = worst.max((est - tru).norm());
    }
    assert!(worst <= 1e-6, "worst eigenvalue distance {worst}");
    println!("criterion 02 (hidden-dynamics recovery, ex2): PASS [worst distance {worst:.2e}]");
}

#[test]
fn criterion_03_bias_ordering_ex1() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        example: Example::Ex1Sensor,
        m_values: vec![64],
        sigma2_values: vec![1e-3],
        trials: 100,
        rank: RankSpec::Fixed(2),
        methods: vec![Method::Exact, Method::Fb, Method::Tls, Method::Optimized],
        seed: 0,
        dt: 0.1,
    };
    let records = run_benchmark(&cfg).unwrap();
    let truth = [c(0.0, 1.0), c(0.0, -1.0)];
    let cells = summarize(&records, &truth);
    let mean_err = |m: Method| -> f64 {
        cells
            .iter()
            .find(|cell| cell.method == m)
            .and_then(|cell| cell.mean_eig_error)
            .unwrap()
    };
    let opt = mean_err(Method::Optimized);
    let exact = mean_err(Method::Exact);
    let fb = mean_err(Method::Fb);
    let tls = mean_err(Method::Tls);
    assert!(opt < tls, "optimized {opt} !< tls {tls}");
    assert!(opt < fb, "optimized {opt} !< fb {fb}");
    assert!(opt < exact, "optimized {opt} !< exact {exact}");

    let exact_cell = cells.iter().find(|cell| cell.method == Method::Exact).unwrap();
    let stat = &exact_cell.eig_stats[0]; // +i comes first in the truth list
    assert!(
        stat.mean.re < -3.0 * stat.stderr_re,
        "exact-DMD Re mean {} not below -3·SE {}",
        stat.mean.re,
        3.0 * stat.stderr_re
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "runtime {elapsed:.1}s exceeds 2min");
    println!(
        "criterion 03 (bias ordering, ex1): PASS \
         [opt {opt:.1e} < fb {fb:.1e}, tls {tls:.1e}, exact {exact:.1e}; \
         exact Re z = {:.1}; runtime {elapsed:.1}s]",
        stat.mean.re / stat.stderr_re
    );
}

#[test]
fn criterion_04_jitter_bias_signature_ex3() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        example: Example::Ex3Jitter,
        m_values: vec![64],
        sigma2_values: vec![0.25],
        trials: 100,
        rank: RankSpec::Fixed(2),
        methods: vec![Method::Fb, Method::Tls, Method::Optimized],
        seed: 0,
        dt: 0.1,
    };
    let records = run_benchmark(&cfg).unwrap();
    let truth = [c(0.0, 1.0), c(0.0, -1.0)];
    let cells = summarize(&records, &truth);
    let stat_for = |m: Method| {
        cells
            .iter()
            .find(|cell| cell.method == m)
            .map(|cell| cell.eig_stats[0].clone())
            .unwrap()
    };

    let tls = stat_for(Method::Tls);
    assert!(
        tls.mean.im > 1.0 + 3.0 * tls.stderr_im,
        "tls Im mean {} not above 1 + 3·SE {}",
        tls.mean.im,
        1.0 + 3.0 * tls.stderr_im
    );
    for (name, stat) in [
        ("fb", stat_for(Method::Fb)),
        ("optimized", stat_for(Method::Optimized)),
    ] {
        assert!(
            (stat.mean.im - 1.0).abs() <= 3.0 * stat.stderr_im,
            "{name} Im mean {} not within 3·SE {} of the truth",
            stat.mean.im,
            3.0 * stat.stderr_im
        );
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "runtime {elapsed:.1}s exceeds 2min");
    println!(
        "criterion 04 (jitter bias signature, ex3): PASS \
         [tls Im z = {:+.1}, fb z = {:+.1}, opt z = {:+.1}; runtime {elapsed:.1}s]",
        (tls.mean.im - 1.0) / tls.stderr_im,
        (stat_for(Method::Fb).mean.im - 1.0) / stat_for(Method::Fb).stderr_im,
        (stat_for(Method::Optimized).mean.im - 1.0) / stat_for(Method::Optimized).stderr_im,
    );
}

#[test]
fn criterion_05_rank_selection_always_four() {
    let mut checked = 0;
    for &m in &[128usize, 256, 512] {
        for &sigma2 in &[0.25f64, 0.0625, 0.015625, 0.00390625, 0.0009765625] {
            for trial in 0..20u64 {
                let seed = 1000 + trial + 31 * m as u64 + (sigma2.to_bits() % 1009);
                let (data, _) = gen_example2(m, sigma2_sqrt(sigma2), seed).unwrap();
                let sv = data.singular_values().unwrap();
                let sel = select_rank(
                    &sv,
                    data.state_dim(),
                    data.len(),
                    RankStrategy::GavishDonohoMedian,
                )
                .unwrap();
                assert_eq!(
                    sel.chosen_rank, 4,
                    "median threshold chose {} at m={m}, sigma2={sigma2}, trial={trial}",
                    sel.chosen_rank
                );
                checked += 1;
            }
        }
    }
    println!("criterion 05 (rank selection): PASS [{checked} datasets all chose rank 4]");
}

fn sigma2_sqrt(sigma2: f64) -> f64 {
    sigma2.sqrt()
}

#[test]
fn criterion_06_full_approx_equivalence() {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let r = 2 + (seed % 3) as usize; // r ∈ {2, 3, 4}
        let alpha: Vec<c64> = (0..r)
            .map(|i| c(-0.1 - 0.15 * i as f64, (i as f64 + 1.0) * 0.9 - 2.0))
            .collect();
        let amps: Vec<f64> = (0..r).map(|i| 1.5 - 0.3 * i as f64).collect();
        let data = random_exponential_data(6, 40, 0.1, &alpha, &amps, 0.0, 500 + seed);
        let cfg = OptDmdConfig::new(r);
        let (full, _) = optimized_dmd(&data, &cfg).unwrap();
        let (approx, _) = approx_optimized_dmd(&data, &cfg).unwrap();
        let gap = eigenvalue_match_error(&full.eigenvalues, &approx.eigenvalues).unwrap();
        assert!(gap <= 1e-8, "seed {seed}: eigenvalue gap {gap}");
        worst = worst.max(gap);
    }
    println!("criterion 06 (full/approximate equivalence): PASS [worst gap {worst:.2e}]");
}

#[test]
fn criterion_07_truncation_inequality() {
    let mut worst_margin = f64::INFINITY;
    for seed in 0..10u64 {
        let alpha = [c(-0.2, 1.2), c(-0.5, -2.0)];
        let amps = [1.0, 0.6];
        let data = random_exponential_data(5, 30, 0.1, &alpha, &amps, 0.05, 900 + seed);
        let r = 2;
        let cfg = OptDmdConfig::new(r);
        let (_, full_sol) = optimized_dmd(&data, &cfg).unwrap();
        let (_, approx_sol) = approx_optimized_dmd(&data, &cfg).unwrap();

        let h = data.states().transpose().to_owned();
        let svd = data.states().thin_svd().unwrap();
        let u_r = svd.U().get(.., 0..r);
        let mut xr_t = Mat::<c64>::zeros(data.len(), data.state_dim());
        for j in 0..r {
            let s = svd.S()[j];
            for i in 0..data.len() {
                for p in 0..data.state_dim() {
                    xr_t[(i, p)] += svd.V()[(i, j)].conj() * s * svd.U()[(p, j)];
                }
            }
        }
        let trunc_gap = (&h - &xr_t).norm_l2();

        let phi_full = build_phi(&full_sol.alpha_hat, data.grid()).unwrap();
        let full_res = (&h - phi_full.phi() * &full_sol.b_hat).norm_l2();

        let phi_approx = build_phi(&approx_sol.alpha_hat, data.grid()).unwrap();
        let lifted = &approx_sol.b_hat * u_r.transpose();
        let approx_res = (&h - phi_approx.phi() * &lifted).norm_l2();

        let bound = 2.0 * trunc_gap + full_res;
        assert!(
            approx_res <= bound + 1e-12,
            "seed {seed}: {approx_res} > {bound}"
        );
        worst_margin = worst_margin.min(bound - approx_res);
    }
    println!("criterion 07 (truncation inequality): PASS [smallest slack {worst_margin:.2e}]");
}

#[test]
fn criterion_08_jacobian_correctness() {
    use optdmd::varpro::{jacobian, project_residual, JacobianMode};

    let mut worst_fd = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let grid = TimeGrid::equispaced(8, 0.3).unwrap();
        let alpha = [
            c(
                -0.3 - 0.4 * rng.sample::<f64, _>(StandardNormal).abs(),
                rng.sample(StandardNormal),
            ),
            c(
                0.2 * rng.sample::<f64, _>(StandardNormal),
                rng.sample(StandardNormal),
            ),
        ];
        let h = Mat::from_fn(8, 4, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let proj = project_residual(h.as_ref(), &alpha, &grid, 1e-12).unwrap();
        let jac = jacobian(h.as_ref(), &alpha, &grid, &proj, JacobianMode::Full).unwrap();

        // central finite differences of the stacked residual
        let step = 1e-6;
        let mut fd = Mat::<c64>::zeros(8 * 4, 2);
        for j in 0..2 {
            let mut ap = alpha.to_vec();
            let mut am = alpha.to_vec();
            ap[j] += c(step, 0.0);
            am[j] -= c(step, 0.0);
            let pp = project_residual(h.as_ref(), &ap, &grid, 1e-12).unwrap();
            let pm = project_residual(h.as_ref(), &am, &grid, 1e-12).unwrap();
            for col in 0..4 {
                for row in 0..8 {
                    fd[(col * 8 + row, j)] = (pp.residual[(row, col)]
                        - pm.residual[(row, col)])
                        / (2.0 * step);
                }
            }
        }
        let rel = (&jac - &fd).norm_l2() / jac.norm_l2();
        assert!(rel <= 1e-5, "seed {seed}: FD relative error {rel}");
        worst_fd = worst_fd.max(rel);
    }

    // Kaufman vs Full on zero-residual data
    let mut worst_kauf = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let grid = TimeGrid::equispaced(10, 0.25).unwrap();
        let alpha = [c(-0.4, 1.1), c(0.1, -0.8)];
        let basis = build_phi(&alpha, &grid).unwrap();
        let coeff = Mat::from_fn(2, 3, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let h = basis.phi() * &coeff;
        let proj = project_residual(h.as_ref(), &alpha, &grid, 1e-12).unwrap();
        let full = jacobian(h.as_ref(), &alpha, &grid, &proj, JacobianMode::Full).unwrap();
        let kauf = jacobian(h.as_ref(), &alpha, &grid, &proj, JacobianMode::Kaufman).unwrap();
        let rel = (&full - &kauf).norm_l2() / full.norm_l2();
        assert!(rel <= 1e-12, "seed {seed}: Kaufman gap {rel}");
        worst_kauf = worst_kauf.max(rel);
    }
    println!(
        "criterion 08 (jacobian correctness): PASS \
         [worst FD error {worst_fd:.2e}, worst Kaufman gap {worst_kauf:.2e}]"
    );
}

#[test]
fn criterion_09_solver_monotonicity() {
    let mut checked = 0;
    // exact-recovery, noisy, and initialization-stress instances
    for seed in 0..10u64 {
        let alpha = [c(-0.3, 1.0), c(-0.6, -1.7)];
        let amps = [1.0, 0.8];
        let noise = if seed % 2 == 0 { 0.0 } else { 0.08 };
        let data = random_exponential_data(4, 24, 0.15, &alpha, &amps, noise, 4000 + seed);
        let h = data.states().transpose().to_owned();
        let init = [c(-0.1, 0.8), c(-0.2, -1.2)];
        let sol = solve_varpro(h.as_ref(), data.grid(), &init, &VarProOptions::default()).unwrap();
        assert!(
            sol.residual_history.windows(2).all(|w| w[1] <= w[0]),
            "seed {seed}: history {:?}",
            sol.residual_history
        );
        checked += 1;
    }
    for m in [32usize, 64] {
        let (data, _) = gen_example1(m, 0.1, 0.05, m as u64).unwrap();
        let (_, sol) = optimized_dmd(&data, &OptDmdConfig::new(2)).unwrap();
        assert!(
            sol.residual_history.windows(2).all(|w| w[1] <= w[0]),
            "ex1 m={m}: history {:?}",
            sol.residual_history
        );
        checked += 1;
    }
    println!("criterion 09 (solver monotonicity): PASS [{checked} runs, all non-increasing]");
}
