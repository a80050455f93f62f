//! Synthetic data generators for the benchmark studies, the seeded
//! Monte-Carlo trial runner comparing the DMD variants, and per-cell
//! aggregation of the resulting records.

use std::path::PathBuf;
use std::time::Instant;

use faer::{c64, Mat};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::TimeGrid;
use crate::diagnostics::{
    confidence_ellipse, eigenvalue_match_error, match_eigenvalues, reconstruct_system_matrix,
    snapshot_residual, EllipseSummary, TrialRecord,
};
use crate::dmd::{exact_dmd, fb_dmd, select_rank, tls_dmd, Method, RankStrategy, SnapshotPairs};
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::optdmd::{approx_optimized_dmd, optimized_dmd, OptDmdConfig, SnapshotSet};

/// Ground truth attached to generated data.
#[derive(Debug, Clone)]
pub struct Truth {
    /// Continuous-time eigenvalues of the generator.
    pub eigenvalues: Vec<c64>,
    /// The generating system matrix, when the example has one.
    pub system_matrix: Option<Mat<c64>>,
}

/// Kind of measurement corruption a generator applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Independent Gaussian noise added to every state entry.
    AdditiveGaussian,
    /// Gaussian perturbation of the true sample instants while the nominal
    /// times are reported.
    TimeJitter,
}

/// A noise model: `kind` says what σ scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

/// Which dataset a benchmark runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum Example {
    /// 2-D periodic system with additive sensor noise.
    Ex1Sensor,
    /// Translating sinusoids with hidden decaying dynamics, additive noise.
    Ex2Hidden,
    /// The periodic system sampled at jittered, unreported instants.
    Ex3Jitter,
    /// Snapshots loaded from a CSV file; additive noise, no ground truth.
    UserData(PathBuf),
}

impl Example {
    pub fn as_str(&self) -> &'static str {
        match self {
            Example::Ex1Sensor => "ex1",
            Example::Ex2Hidden => "ex2",
            Example::Ex3Jitter => "ex3",
            Example::UserData(_) => "user",
        }
    }

    /// How this example's generator applies σ.
    pub fn noise_model(&self, sigma: f64) -> NoiseModel {
        let kind = match self {
            Example::Ex3Jitter => NoiseKind::TimeJitter,
            _ => NoiseKind::AdditiveGaussian,
        };
        NoiseModel { kind, sigma }
    }
}

/// Rank handling for a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSpec {
    Fixed(usize),
    /// Median-based hard threshold per trial.
    Auto,
}

/// Full description of a Monte-Carlo sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub example: Example,
    pub m_values: Vec<usize>,
    pub sigma2_values: Vec<f64>,
    pub trials: usize,
    pub rank: RankSpec,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Nominal spacing for the 2-D examples.
    pub dt: f64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for an example (the flag-gated full-scale
    /// sweeps widen these).
    pub fn desk_default(example: Example, seed: u64) -> Self {
        let (m_values, sigma2_values, rank) = match &example {
            Example::Ex1Sensor | Example::Ex3Jitter => (
                vec![64, 128, 256, 512, 1024],
                match example {
                    Example::Ex1Sensor => vec![1e-1, 1e-3, 1e-5, 1e-7, 1e-9],
                    _ => vec![0.25, 0.0625, 0.015625, 0.00390625, 0.0009765625],
                },
                RankSpec::Fixed(2),
            ),
            Example::Ex2Hidden => (
                vec![128, 256, 512],
                vec![0.25, 0.0625, 0.015625, 0.00390625, 0.0009765625],
                RankSpec::Fixed(4),
            ),
            Example::UserData(_) => (vec![0], vec![0.0], RankSpec::Auto),
        };
        let methods = Self::default_methods(&example);
        Self {
            example,
            m_values,
            sigma2_values,
            trials: 100,
            rank,
            methods,
            seed,
            dt: 0.1,
        }
    }

    /// The optimized variant appropriate to each example's state dimension.
    pub fn default_methods(example: &Example) -> Vec<Method> {
        match example {
            Example::Ex2Hidden => vec![
                Method::Exact,
                Method::Fb,
                Method::Tls,
                Method::ApproxOptimized,
            ],
            _ => vec![Method::Exact, Method::Fb, Method::Tls, Method::Optimized],
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial RNG seed from the sweep coordinates.
pub fn derive_trial_seed(master: u64, m: usize, sigma2: f64, trial: usize) -> u64 {
    let mut h = splitmix64(master ^ 0xD1B5_4A32_D192_ED03);
    h = splitmix64(h ^ (m as u64));
    h = splitmix64(h ^ sigma2.to_bits());
    h = splitmix64(h ^ (trial as u64));
    h
}

/// The 2-D generator `ż = Az` with `A = [[1,-2],[1,-1]]`. `A² = −I`, so
/// the flow is `z(t) = cos(t)·z₀ + sin(t)·Az₀` exactly.
const EXAMPLE1_A: [[f64; 2]; 2] = [[1.0, -2.0], [1.0, -1.0]];
const EXAMPLE1_Z0: [f64; 2] = [1.0, 0.1];

fn example1_state(t: f64) -> [f64; 2] {
    let z0 = EXAMPLE1_Z0;
    let az0 = [
        EXAMPLE1_A[0][0] * z0[0] + EXAMPLE1_A[0][1] * z0[1],
        EXAMPLE1_A[1][0] * z0[0] + EXAMPLE1_A[1][1] * z0[1],
    ];
    [
        t.cos() * z0[0] + t.sin() * az0[0],
        t.cos() * z0[1] + t.sin() * az0[1],
    ]
}

fn example1_truth() -> Truth {
    let a = Mat::from_fn(2, 2, |i, j| c64::new(EXAMPLE1_A[i][j], 0.0));
    Truth {
        eigenvalues: vec![c64::new(0.0, 1.0), c64::new(0.0, -1.0)],
        system_matrix: Some(a),
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::NonFinite("noise level".into()));
    }
    Ok(())
}

/// `m` snapshots of the periodic 2-D system at spacing `dt`, with additive
/// Gaussian sensor noise of standard deviation `sigma` on every entry.
pub fn gen_example1(m: usize, dt: f64, sigma: f64, seed: u64) -> Result<(SnapshotSet, Truth)> {
    check_sigma(sigma)?;
    let grid = TimeGrid::equispaced(m, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Mat::<c64>::zeros(2, m);
    for j in 0..m {
        let z = example1_state(j as f64 * dt);
        for i in 0..2 {
            let noise: f64 = rng.sample(StandardNormal);
            let value = if sigma > 0.0 { z[i] + sigma * noise } else { z[i] };
            states[(i, j)] = c64::new(value, 0.0);
        }
    }
    Ok((SnapshotSet::new(states, grid)?, example1_truth()))
}

/// Spatial resolution of the translating-waves example.
const EXAMPLE2_NX: usize = 300;
/// Largest snapshot count; the time grid covers `[0, 2π]` at this size.
const EXAMPLE2_MAX_M: usize = 512;

/// Nominal spacing of the translating-waves example.
pub fn example2_dt() -> f64 {
    2.0 * std::f64::consts::PI / (EXAMPLE2_MAX_M as f64 - 1.0)
}

/// `m ≤ 512` snapshots of two translating sinusoids, one growing and one
/// decaying, on 300 spatial points over `[0, 15]`, plus additive noise.
pub fn gen_example2(m: usize, sigma: f64, seed: u64) -> Result<(SnapshotSet, Truth)> {
    check_sigma(sigma)?;
    if m > EXAMPLE2_MAX_M {
        return Err(Error::IndexOutOfRange {
            index: m,
            limit: EXAMPLE2_MAX_M,
        });
    }
    let (k1, omega1, gamma1) = (1.0, 1.0, 1.0);
    let (k2, omega2, gamma2) = (0.4, 3.7, -0.2);
    let dt = example2_dt();
    let grid = TimeGrid::equispaced(m, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Mat::<c64>::zeros(EXAMPLE2_NX, m);
    for j in 0..m {
        let t = j as f64 * dt;
        for i in 0..EXAMPLE2_NX {
            let x = 15.0 * i as f64 / (EXAMPLE2_NX as f64 - 1.0);
            let z = (k1 * x - omega1 * t).sin() * (gamma1 * t).exp()
                + (k2 * x - omega2 * t).sin() * (gamma2 * t).exp();
            let noise: f64 = rng.sample(StandardNormal);
            let value = if sigma > 0.0 { z + sigma * noise } else { z };
            states[(i, j)] = c64::new(value, 0.0);
        }
    }
    let truth = Truth {
        eigenvalues: vec![
            c64::new(gamma1, omega1),
            c64::new(gamma1, -omega1),
            c64::new(gamma2, omega2),
            c64::new(gamma2, -omega2),
        ],
        system_matrix: None,
    };
    Ok((SnapshotSet::new(states, grid)?, truth))
}

/// True (jittered) sample instants `(j + σ·g_j)·dt`, re-drawing offending
/// entries until the sequence is strictly increasing.
pub(crate) fn example3_jittered_times(
    m: usize,
    dt: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let times = |j: usize, gj: f64| (j as f64 + sigma * gj) * dt;
    let mut sweeps = 0;
    loop {
        let mut violated = false;
        for j in 1..m {
            if times(j, g[j]) <= times(j - 1, g[j - 1]) {
                g[j] = rng.sample(StandardNormal);
                violated = true;
            }
        }
        if !violated {
            break;
        }
        sweeps += 1;
        if sweeps > 10_000 {
            return Err(Error::DegenerateGrid);
        }
    }
    Ok((0..m).map(|j| times(j, g[j])).collect())
}

/// The periodic 2-D system sampled at jittered instants `(j + σ·g_j)·Δt`.
/// The returned grid carries the NOMINAL times `j·Δt`: downstream methods
/// never see the jitter.
pub fn gen_example3(m: usize, dt: f64, sigma: f64, seed: u64) -> Result<(SnapshotSet, Truth)> {
    check_sigma(sigma)?;
    let grid = TimeGrid::equispaced(m, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let true_times = example3_jittered_times(m, dt, sigma, &mut rng)?;
    let mut states = Mat::<c64>::zeros(2, m);
    for j in 0..m {
        let z = example1_state(true_times[j]);
        for i in 0..2 {
            states[(i, j)] = c64::new(z[i], 0.0);
        }
    }
    Ok((SnapshotSet::new(states, grid)?, example1_truth()))
}

fn add_noise(data: &SnapshotSet, sigma: f64, seed: u64) -> Result<SnapshotSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = data.states().to_owned();
    for j in 0..states.ncols() {
        for i in 0..states.nrows() {
            let noise: f64 = rng.sample(StandardNormal);
            if sigma > 0.0 {
                states[(i, j)] += c64::new(sigma * noise, 0.0);
            }
        }
    }
    SnapshotSet::new(states, data.grid().clone())
}

fn run_method(
    method: Method,
    data: &SnapshotSet,
    pairs: Option<&SnapshotPairs>,
    rank: usize,
) -> Result<crate::dmd::DmdResult> {
    let need_pairs = || {
        pairs.ok_or_else(|| {
            Error::ShapeMismatch("pairwise methods require an equispaced grid".into())
        })
    };
    match method {
        Method::Exact => exact_dmd(need_pairs()?, rank),
        Method::Fb => fb_dmd(need_pairs()?, rank),
        Method::Tls => tls_dmd(need_pairs()?, rank),
        Method::Optimized => optimized_dmd(data, &OptDmdConfig::new(rank)).map(|(r, _)| r),
        Method::ApproxOptimized => {
            approx_optimized_dmd(data, &OptDmdConfig::new(rank)).map(|(r, _)| r)
        }
    }
}

/// Runs the full sweep. Per-trial RNG streams derive deterministically from
/// `(seed, m, σ², trial)`, so the record list is reproducible regardless of
/// scheduling; method errors become per-record failure flags.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.trials == 0 || cfg.m_values.is_empty() {
        return Err(Error::ShapeMismatch(
            "benchmark needs at least one trial and one m value".into(),
        ));
    }
    let user_data = match &cfg.example {
        Example::UserData(path) => Some(crate::io::load_snapshots_csv(path)?),
        _ => None,
    };

    let mut records = Vec::new();
    for &m in &cfg.m_values {
        for &sigma2 in &cfg.sigma2_values {
            for trial in 0..cfg.trials {
                let seed = derive_trial_seed(cfg.seed, m, sigma2, trial);
                let sigma = sigma2.sqrt();
                let (data, truth) = match &cfg.example {
                    Example::Ex1Sensor => {
                        let (d, t) = gen_example1(m, cfg.dt, sigma, seed)?;
                        (d, Some(t))
                    }
                    Example::Ex2Hidden => {
                        let (d, t) = gen_example2(m, sigma, seed)?;
                        (d, Some(t))
                    }
                    Example::Ex3Jitter => {
                        let (d, t) = gen_example3(m, cfg.dt, sigma, seed)?;
                        (d, Some(t))
                    }
                    Example::UserData(_) => {
                        let base = user_data.as_ref().expect("loaded above");
                        (add_noise(base, sigma, seed)?, None)
                    }
                };
                // user data ignores the m sweep; record its actual size
                let m = match &cfg.example {
                    Example::UserData(_) => data.len(),
                    _ => m,
                };
                let rank = match cfg.rank {
                    RankSpec::Fixed(r) => r,
                    RankSpec::Auto => {
                        let sv = singular_values(data.states())?;
                        select_rank(
                            &sv,
                            data.state_dim(),
                            data.len(),
                            RankStrategy::GavishDonohoMedian,
                        )?
                        .chosen_rank
                    }
                };
                let pairs = data.pairs().ok();

                for &method in &cfg.methods {
                    let start = Instant::now();
                    let outcome = run_method(method, &data, pairs.as_ref(), rank);
                    let wall_time = start.elapsed().as_secs_f64();
                    let record = match outcome {
                        Ok(result) => {
                            let recon_error = snapshot_residual(&data, &result.eigenvalues).ok();
                            let (eig_error, matched_eigs) = match &truth {
                                Some(t) if t.eigenvalues.len() == result.rank() => (
                                    eigenvalue_match_error(
                                        &result.eigenvalues,
                                        &t.eigenvalues,
                                    )
                                    .ok(),
                                    match_eigenvalues(&result.eigenvalues, &t.eigenvalues)
                                        .unwrap_or_default(),
                                ),
                                _ => (None, Vec::new()),
                            };
                            let a_error = truth
                                .as_ref()
                                .and_then(|t| t.system_matrix.as_ref())
                                .and_then(|a| {
                                    reconstruct_system_matrix(&result)
                                        .ok()
                                        .map(|ahat| (&ahat - a).norm_l2())
                                });
                            TrialRecord {
                                method,
                                m,
                                sigma2,
                                trial,
                                seed,
                                a_error,
                                eig_error,
                                recon_error,
                                wall_time,
                                matched_eigs,
                                failure: None,
                            }
                        }
                        Err(e) => TrialRecord {
                            method,
                            m,
                            sigma2,
                            trial,
                            seed,
                            a_error: None,
                            eig_error: None,
                            recon_error: None,
                            wall_time,
                            matched_eigs: Vec::new(),
                            failure: Some(e.to_string()),
                        },
                    };
                    records.push(record);
                }
            }
        }
    }
    Ok(records)
}

/// Per-eigenvalue statistics over the trials of one cell.
#[derive(Debug, Clone)]
pub struct EigStat {
    pub truth: c64,
    pub mean: c64,
    /// Standard errors of the mean, per axis.
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// 95% Gaussian ellipse of the estimates (absent below 3 samples).
    pub ellipse95: Option<EllipseSummary>,
}

/// Aggregate of all trials sharing (method, m, σ²).
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub method: Method,
    pub m: usize,
    pub sigma2: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_a_error: Option<f64>,
    pub mean_eig_error: Option<f64>,
    pub mean_recon_error: Option<f64>,
    /// Mean wall-clock seconds; informational, excluded from deterministic
    /// output files.
    pub mean_wall_time: f64,
    pub eig_stats: Vec<EigStat>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

/// Groups records into per-cell summaries, in first-appearance order (which
/// is the sweep order, so output is deterministic).
pub fn summarize(records: &[TrialRecord], truth_eigenvalues: &[c64]) -> Vec<CellSummary> {
    let mut keys: Vec<(Method, usize, f64)> = Vec::new();
    for r in records {
        let key = (r.method, r.m, r.sigma2);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }

    let mut out = Vec::with_capacity(keys.len());
    for (method, m, sigma2) in keys {
        let cell: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.method == method && r.m == m && r.sigma2 == sigma2)
            .collect();
        let failures = cell.iter().filter(|r| r.failure.is_some()).count();
        let mut eig_stats = Vec::new();
        for (idx, &truth) in truth_eigenvalues.iter().enumerate() {
            let samples: Vec<c64> = cell
                .iter()
                .filter(|r| r.failure.is_none() && r.matched_eigs.len() == truth_eigenvalues.len())
                .map(|r| r.matched_eigs[idx])
                .collect();
            if samples.is_empty() {
                continue;
            }
            let n = samples.len() as f64;
            let mean = samples.iter().fold(c64::new(0.0, 0.0), |acc, s| acc + s) / n;
            let (mut var_re, mut var_im) = (0.0, 0.0);
            for s in &samples {
                var_re += (s.re - mean.re).powi(2);
                var_im += (s.im - mean.im).powi(2);
            }
            let (stderr_re, stderr_im) = if samples.len() > 1 {
                (
                    (var_re / (n - 1.0)).sqrt() / n.sqrt(),
                    (var_im / (n - 1.0)).sqrt() / n.sqrt(),
                )
            } else {
                (0.0, 0.0)
            };
            let ellipse95 = if samples.len() >= 3 {
                confidence_ellipse(&samples, 0.95).ok()
            } else {
                None
            };
            eig_stats.push(EigStat {
                truth,
                mean,
                stderr_re,
                stderr_im,
                ellipse95,
            });
        }
        out.push(CellSummary {
            method,
            m,
            sigma2,
            trials: cell.len(),
            failures,
            mean_a_error: mean_of(cell.iter().filter_map(|r| r.a_error)),
            mean_eig_error: mean_of(cell.iter().filter_map(|r| r.eig_error)),
            mean_recon_error: mean_of(cell.iter().filter_map(|r| r.recon_error)),
            mean_wall_time: mean_of(cell.iter().map(|r| r.wall_time)).unwrap_or(0.0),
            eig_stats,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn example1_initial_condition_and_conserved_form() {
        let (data, truth) = gen_example1(64, 0.1, 0.0, 1).unwrap();
        assert_eq!(data.states()[(0, 0)], c(1.0, 0.0));
        assert_eq!(data.states()[(1, 0)], c(0.1, 0.0));
        assert_eq!(truth.eigenvalues, vec![c(0.0, 1.0), c(0.0, -1.0)]);

        // z₁² − 2z₁z₂ + 2z₂² is conserved by the ±i spectrum
        let q = |z1: f64, z2: f64| z1 * z1 - 2.0 * z1 * z2 + 2.0 * z2 * z2;
        let q0 = q(1.0, 0.1);
        for j in 0..64 {
            let z1 = data.states()[(0, j)].re;
            let z2 = data.states()[(1, j)].re;
            assert!((q(z1, z2) - q0).abs() < 1e-10, "drift at column {j}");
        }
    }

    #[test]
    fn example1_same_seed_is_bitwise_identical() {
        let (a, _) = gen_example1(32, 0.1, 0.05, 123).unwrap();
        let (b, _) = gen_example1(32, 0.1, 0.05, 123).unwrap();
        for j in 0..32 {
            for i in 0..2 {
                assert_eq!(a.states()[(i, j)], b.states()[(i, j)]);
            }
        }
        let (d, _) = gen_example1(32, 0.1, 0.05, 124).unwrap();
        assert!((0..32).any(|j| d.states()[(0, j)] != a.states()[(0, j)]));
    }

    #[test]
    fn example2_value_at_origin_and_rank() {
        let (data, truth) = gen_example2(128, 0.0, 5).unwrap();
        assert_eq!(data.states()[(0, 0)], c(0.0, 0.0));
        assert_eq!(
            truth.eigenvalues,
            vec![c(1.0, 1.0), c(1.0, -1.0), c(-0.2, 3.7), c(-0.2, -3.7)]
        );
        let sv = singular_values(data.states()).unwrap();
        assert!(sv[4] / sv[0] < 1e-10, "rank > 4: σ₅/σ₁ = {}", sv[4] / sv[0]);
        assert!(sv[3] / sv[0] > 1e-10, "rank < 4");
    }

    #[test]
    fn example2_rejects_oversized_m() {
        assert!(matches!(
            gen_example2(513, 0.0, 1),
            Err(Error::IndexOutOfRange { index: 513, .. })
        ));
    }

    #[test]
    fn example3_without_jitter_matches_example1() {
        let (a, _) = gen_example1(48, 0.1, 0.0, 9).unwrap();
        let (b, _) = gen_example3(48, 0.1, 0.0, 9).unwrap();
        for j in 0..48 {
            for i in 0..2 {
                assert_eq!(a.states()[(i, j)], b.states()[(i, j)]);
            }
        }
        assert_eq!(a.grid(), b.grid());
    }

    #[test]
    fn example3_offsets_average_to_zero() {
        // σ small enough that the ordering re-draw rule never fires, so
        // the offsets are an unbiased Gaussian sample
        let m = 10_000;
        let dt = 0.1;
        let sigma = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let times = example3_jittered_times(m, dt, sigma, &mut rng).unwrap();
        let offsets: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(j, &t)| t - j as f64 * dt)
            .collect();
        let mean = offsets.iter().sum::<f64>() / m as f64;
        let var = offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let stderr = (var / m as f64).sqrt();
        assert!(
            mean.abs() < 3.0 * stderr,
            "offset mean {mean} exceeds 3·SE {stderr}"
        );
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn example3_redraw_rule_keeps_large_jitter_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let times = example3_jittered_times(5_000, 0.1, 0.5, &mut rng).unwrap();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn example3_same_seed_is_identical() {
        let (a, _) = gen_example3(32, 0.1, 0.4, 21).unwrap();
        let (b, _) = gen_example3(32, 0.1, 0.4, 21).unwrap();
        for j in 0..32 {
            for i in 0..2 {
                assert_eq!(a.states()[(i, j)], b.states()[(i, j)]);
            }
        }
    }

    #[test]
    fn noise_free_benchmark_trial_hits_truth() {
        let cfg = ExperimentConfig {
            example: Example::Ex1Sensor,
            m_values: vec![64],
            sigma2_values: vec![0.0],
            trials: 1,
            rank: RankSpec::Fixed(2),
            methods: ExperimentConfig::default_methods(&Example::Ex1Sensor),
            seed: 7,
            dt: 0.1,
        };
        let records = run_benchmark(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            assert!(r.failure.is_none(), "{:?} failed: {:?}", r.method, r.failure);
            let err = r.eig_error.unwrap();
            assert!(err <= 1e-6, "{:?}: eigenvalue error {err}", r.method);
            assert!(r.recon_error.unwrap() < 1e-6);
            assert!(r.a_error.unwrap() < 1e-5);
        }
    }

    #[test]
    fn benchmark_records_are_reproducible() {
        let cfg = ExperimentConfig {
            example: Example::Ex1Sensor,
            m_values: vec![64],
            sigma2_values: vec![1e-3],
            trials: 3,
            rank: RankSpec::Fixed(2),
            methods: vec![Method::Exact, Method::Optimized],
            seed: 11,
            dt: 0.1,
        };
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.method, rb.method);
            assert_eq!(ra.seed, rb.seed);
            assert_eq!(ra.eig_error, rb.eig_error);
            assert_eq!(ra.matched_eigs, rb.matched_eigs);
        }
    }

    #[test]
    fn auto_rank_recovers_four_on_hidden_dynamics() {
        let cfg = ExperimentConfig {
            example: Example::Ex2Hidden,
            m_values: vec![128],
            sigma2_values: vec![0.0625],
            trials: 2,
            rank: RankSpec::Auto,
            methods: vec![Method::Exact],
            seed: 3,
            dt: 0.1,
        };
        let records = run_benchmark(&cfg).unwrap();
        for r in &records {
            assert!(r.failure.is_none());
            assert_eq!(r.matched_eigs.len(), 4);
        }
    }

    #[test]
    fn user_data_benchmark_reports_reconstruction_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("user.csv");
        let (data, _) = gen_example1(24, 0.1, 0.0, 3).unwrap();
        crate::io::save_snapshots_csv(&data, &path).unwrap();

        let cfg = ExperimentConfig {
            example: Example::UserData(path),
            m_values: vec![0],
            sigma2_values: vec![1e-4],
            trials: 2,
            rank: RankSpec::Fixed(2),
            methods: vec![Method::Exact, Method::Optimized],
            seed: 5,
            dt: 0.1,
        };
        let records = run_benchmark(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            assert!(r.failure.is_none());
            assert_eq!(r.m, 24);
            assert!(r.recon_error.is_some());
            assert!(r.eig_error.is_none());
            assert!(r.matched_eigs.is_empty());
        }
    }

    #[test]
    fn summaries_group_cells_in_sweep_order() {
        let cfg = ExperimentConfig {
            example: Example::Ex1Sensor,
            m_values: vec![64],
            sigma2_values: vec![1e-3],
            trials: 5,
            rank: RankSpec::Fixed(2),
            methods: vec![Method::Exact, Method::Fb],
            seed: 19,
            dt: 0.1,
        };
        let records = run_benchmark(&cfg).unwrap();
        let truth = example1_truth();
        let cells = summarize(&records, &truth.eigenvalues);
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].method, Method::Exact);
        assert_eq!(cells[0].trials, 5);
        assert_eq!(cells[0].eig_stats.len(), 2);
        assert!(cells[0].eig_stats[0].ellipse95.is_some());
        assert!(cells[0].mean_eig_error.unwrap() > 0.0);
    }

    #[test]
    fn noise_models_match_the_generators() {
        assert_eq!(
            Example::Ex1Sensor.noise_model(0.5).kind,
            NoiseKind::AdditiveGaussian
        );
        assert_eq!(
            Example::Ex3Jitter.noise_model(0.5).kind,
            NoiseKind::TimeJitter
        );
        assert_eq!(Example::Ex2Hidden.noise_model(0.25).sigma, 0.25);
    }

    #[test]
    fn trial_seeds_differ_across_cells() {
        let s1 = derive_trial_seed(7, 64, 1e-3, 0);
        let s2 = derive_trial_seed(7, 64, 1e-3, 1);
        let s3 = derive_trial_seed(7, 128, 1e-3, 0);
        let s4 = derive_trial_seed(7, 64, 1e-5, 0);
        let all = [s1, s2, s3, s4];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
        assert_eq!(derive_trial_seed(7, 64, 1e-3, 0), s1);
    }
}
