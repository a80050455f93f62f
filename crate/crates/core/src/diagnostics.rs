//! Evaluation of computed decompositions: system-matrix recovery, relative
//! snapshot residuals, amplitude fitting, extrapolation, matched eigenvalue
//! errors, and confidence ellipses for Monte-Carlo eigenvalue clouds.

use faer::{c64, Mat};

use crate::basis::TimeGrid;
use crate::dmd::{DmdResult, Method};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, thin_svd_trunc};
use crate::optdmd::SnapshotSet;

const RANK_TOL: f64 = 1e-12;

/// Exhaustive permutation matching is used up to this size; the assignment
/// algorithm takes over beyond it.
const EXHAUSTIVE_MATCH_LIMIT: usize = 8;

/// Gaussian confidence ellipse for a 2-D sample cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSummary {
    pub center: c64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Orientation of the major axis in radians, in `[0, π)`.
    pub angle: f64,
}

/// Per-trial benchmark metrics for one method on one generated dataset.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub method: Method,
    /// Number of snapshots.
    pub m: usize,
    /// Noise variance σ².
    pub sigma2: f64,
    /// Trial index within the (m, σ²) cell.
    pub trial: usize,
    /// Derived RNG seed for this trial's data.
    pub seed: u64,
    /// Frobenius error of the reconstructed system matrix, when the
    /// generator exposes the true matrix.
    pub a_error: Option<f64>,
    /// Matched ℓ² eigenvalue error against the generator truth.
    pub eig_error: Option<f64>,
    /// Relative snapshot reconstruction residual.
    pub recon_error: Option<f64>,
    /// Wall-clock seconds for the method call. Excluded from deterministic
    /// output files.
    pub wall_time: f64,
    /// Eigenvalue estimates reordered to match the truth eigenvalues.
    pub matched_eigs: Vec<c64>,
    /// Failure message when the method errored on this trial.
    pub failure: Option<String>,
}

/// Hungarian algorithm (potentials + shortest augmenting paths) for the
/// minimum-cost square assignment problem. Returns `assign[row] = col`.
pub(crate) fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

fn exhaustive_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    // Heap's algorithm
    let mut stack = vec![0usize; n];
    let eval = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum() };
    let c0 = eval(&perm);
    if c0 < best_cost {
        best_cost = c0;
        best = perm.clone();
    }
    let mut i = 0;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            let c = eval(&perm);
            if c < best_cost {
                best_cost = c;
                best = perm.clone();
            }
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    best
}

/// Reorders `estimated` so entry `i` is the estimate optimally assigned to
/// `truth[i]` (minimum total squared distance over bijections).
pub fn match_eigenvalues(estimated: &[c64], truth: &[c64]) -> Result<Vec<c64>> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch(estimated.len(), truth.len()));
    }
    let n = truth.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let cost: Vec<Vec<f64>> = estimated
        .iter()
        .map(|e| truth.iter().map(|t| (e - t).norm_sqr()).collect())
        .collect();
    let assign = if n <= EXHAUSTIVE_MATCH_LIMIT {
        exhaustive_assignment(&cost)
    } else {
        min_cost_assignment(&cost)
    };
    let mut out = vec![c64::new(0.0, 0.0); n];
    for (row, &col) in assign.iter().enumerate() {
        out[col] = estimated[row];
    }
    Ok(out)
}

/// Minimum over bijections π of `sqrt(Σ |estimated[π(i)] − truth[i]|²)`.
pub fn eigenvalue_match_error(estimated: &[c64], truth: &[c64]) -> Result<f64> {
    let matched = match_eigenvalues(estimated, truth)?;
    Ok(matched
        .iter()
        .zip(truth.iter())
        .map(|(e, t)| (e - t).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Recovers the system matrix `Â = Φ diag(λ) Φ†` from modes and
/// continuous-time eigenvalues.
pub fn reconstruct_system_matrix(result: &DmdResult) -> Result<Mat<c64>> {
    let r = result.rank();
    if r == 0 {
        return Err(Error::ShapeMismatch("empty decomposition".into()));
    }
    let svd = thin_svd_trunc(result.modes.as_ref(), RANK_TOL)?;
    let pinv = {
        // V Σ⁻¹ U* as an explicit r x n matrix
        let eye = Mat::<c64>::identity(result.modes.nrows(), result.modes.nrows());
        svd.pinv_apply(eye.as_ref())
    };
    let mut scaled = result.modes.clone();
    for j in 0..r {
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= result.eigenvalues[j];
        }
    }
    Ok(&scaled * &pinv)
}

/// Relative Frobenius residual of projecting the snapshots onto the time
/// dynamics spanned by `Φ(α)`:
/// `‖Xᵀ − Φ(α)Φ(α)†Xᵀ‖_F / ‖Xᵀ‖_F`, in `[0, 1]`.
pub fn snapshot_residual(data: &SnapshotSet, alpha: &[c64]) -> Result<f64> {
    let h = data.states().transpose().to_owned();
    let norm = h.norm_l2();
    if norm == 0.0 {
        return Err(Error::ZeroData);
    }
    let projection = crate::varpro::project_residual(h.as_ref(), alpha, data.grid(), RANK_TOL)?;
    Ok((projection.residual_norm() / norm).min(1.0))
}

/// How reconstruction amplitudes are fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMethod {
    /// Fit the first snapshot alone: `min ‖z₀ − Φ b‖₂`.
    FirstSnapshot,
    /// Joint least-squares fit over every snapshot.
    FullLstsq,
}

/// Complex amplitudes `b` for the reconstruction `Σ bᵢ φᵢ exp(λᵢ t)`.
pub fn amplitudes(
    result: &DmdResult,
    data: &SnapshotSet,
    method: AmplitudeMethod,
) -> Result<Vec<c64>> {
    let r = result.rank();
    if result.modes.nrows() != data.state_dim() {
        return Err(Error::ShapeMismatch(format!(
            "modes have {} rows but the data has {} states",
            result.modes.nrows(),
            data.state_dim()
        )));
    }
    match method {
        AmplitudeMethod::FirstSnapshot => {
            let svd = thin_svd_trunc(result.modes.as_ref(), RANK_TOL)?;
            let coeff = svd.pinv_apply(data.states().get(.., 0..1));
            Ok((0..r).map(|i| coeff[(i, 0)]).collect())
        }
        AmplitudeMethod::FullLstsq => {
            let n = data.state_dim();
            let m = data.len();
            let mut design = Mat::<c64>::zeros(n * m, r);
            let mut rhs = Mat::<c64>::zeros(n * m, 1);
            for j in 0..m {
                let t = data.grid().times()[j];
                for i in 0..r {
                    let decay = (result.eigenvalues[i] * t).exp();
                    for p in 0..n {
                        design[(j * n + p, i)] = result.modes[(p, i)] * decay;
                    }
                }
                for p in 0..n {
                    rhs[(j * n + p, 0)] = data.states()[(p, j)];
                }
            }
            let svd = thin_svd_trunc(design.as_ref(), RANK_TOL)?;
            let coeff = svd.pinv_apply(rhs.as_ref());
            Ok((0..r).map(|i| coeff[(i, 0)]).collect())
        }
    }
}

/// Evaluates `z(t) = Σ bᵢ φᵢ exp(λᵢ t)` at the requested times, one column
/// per time.
pub fn extrapolate(result: &DmdResult, b: &[c64], times: &TimeGrid) -> Result<Mat<c64>> {
    let r = result.rank();
    if b.len() != r {
        return Err(Error::LengthMismatch(b.len(), r));
    }
    let n = result.modes.nrows();
    let mut out = Mat::<c64>::zeros(n, times.len());
    for (j, &t) in times.times().iter().enumerate() {
        for (i, &bi) in b.iter().enumerate() {
            let lam = result.eigenvalues[i];
            if lam.re * t > 709.78 {
                return Err(Error::NonFinite(format!(
                    "exp(λ·t) overflows at t = {t}"
                )));
            }
            let w = bi * (lam * t).exp();
            for p in 0..n {
                out[(p, j)] += result.modes[(p, i)] * w;
            }
        }
    }
    if !all_finite(out.as_ref()) {
        return Err(Error::NonFinite("extrapolated states".into()));
    }
    Ok(out)
}

/// Gaussian confidence ellipse of complex samples treated as 2-D points:
/// mean, sample covariance, and axes `sqrt(q·eig)` at the chi-square(2)
/// quantile `q = −2·ln(1 − level)`. A rank-deficient cloud degenerates to
/// zero axes rather than erroring.
pub fn confidence_ellipse(samples: &[c64], level: f64) -> Result<EllipseSummary> {
    if samples.len() < 3 {
        return Err(Error::ShapeMismatch(
            "confidence ellipse needs at least 3 samples".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::NonFinite("confidence level outside (0, 1)".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().fold(c64::new(0.0, 0.0), |acc, s| acc + s) / n;
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for s in samples {
        let dx = s.re - mean.re;
        let dy = s.im - mean.im;
        cxx += dx * dx;
        cxy += dx * dy;
        cyy += dy * dy;
    }
    cxx /= n - 1.0;
    cxy /= n - 1.0;
    cyy /= n - 1.0;

    // closed-form eigen-pairs of the symmetric 2x2 covariance
    let half_trace = 0.5 * (cxx + cyy);
    let disc = (0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy).sqrt();
    let lam_hi = (half_trace + disc).max(0.0);
    let lam_lo = (half_trace - disc).max(0.0);
    let angle = if cxy == 0.0 && cxx >= cyy {
        0.0
    } else if cxy == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (lam_hi - cxx).atan2(cxy)
    };
    let angle = angle.rem_euclid(std::f64::consts::PI);

    let quantile = -2.0 * (1.0 - level).ln();
    Ok(EllipseSummary {
        center: mean,
        semi_major: (quantile * lam_hi).sqrt(),
        semi_minor: (quantile * lam_lo).sqrt(),
        angle,
    })
}
