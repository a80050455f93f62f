//! Classical DMD algorithms on snapshot pairs — exact DMD, forward-backward
//! DMD, and total-least-squares DMD — plus singular-value hard-thresholding
//! strategies for choosing the truncation rank.
//!
//! All three methods reduce the pair regression `Y ≈ A X` to an `r×r`
//! eigenproblem through a truncated SVD and differ only in how the reduced
//! propagator is formed. Eigenvalues are reported in both conventions:
//! discrete (as computed) and continuous (`log λ / Δt`).

use std::fmt;

use faer::{c64, Mat, MatRef};

use crate::basis::discrete_to_continuous;
use crate::error::{Error, Result};
use crate::linalg::{eig, singular_values, small_inverse, thin_svd_trunc, vstack};

/// Relative singular-value cutoff defining the numerical rank of the data.
const DATA_RANK_TOL: f64 = 1e-12;

/// Exhaustive square-root sign searches are limited to this many
/// eigenvalues (the search enumerates `2^r` candidates).
pub const SIGN_SEARCH_CAP: usize = 24;

/// Condition-number limit on eigenvector matrices beyond which a matrix is
/// treated as numerically non-diagonalizable.
const EIGVEC_COND_LIMIT: f64 = 1e12;

/// Which algorithm produced a [`DmdResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Fb,
    Tls,
    Optimized,
    ApproxOptimized,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Fb => "fb",
            Method::Tls => "tls",
            Method::Optimized => "optimized",
            Method::ApproxOptimized => "approx_optimized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Method::Exact),
            "fb" => Ok(Method::Fb),
            "tls" => Ok(Method::Tls),
            "optimized" | "opt" => Ok(Method::Optimized),
            "approx_optimized" | "approx" => Ok(Method::ApproxOptimized),
            _ => Err(format!(
                "unknown method '{s}' (expected exact, fb, tls, optimized, or approx)"
            )),
        }
    }
}

/// Matched snapshot pairs `y_j ≈ A x_j` with the nominal spacing used for
/// eigenvalue conversion.
#[derive(Debug, Clone)]
pub struct SnapshotPairs {
    x: Mat<c64>,
    y: Mat<c64>,
    dt: f64,
}

impl SnapshotPairs {
    pub fn new(x: Mat<c64>, y: Mat<c64>, dt: f64) -> Result<Self> {
        if x.nrows() != y.nrows() || x.ncols() != y.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "X is {}x{} but Y is {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::NonFinite("dt".into()));
        }
        Ok(Self { x, y, dt })
    }

    pub fn x(&self) -> MatRef<'_, c64> {
        self.x.as_ref()
    }

    pub fn y(&self) -> MatRef<'_, c64> {
        self.y.as_ref()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// State dimension.
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    /// Number of pairs.
    pub fn npairs(&self) -> usize {
        self.x.ncols()
    }
}

/// Eigenvalues, unit-norm modes, and amplitudes from any DMD variant.
///
/// `eigenvalues` are continuous-time; methods that compute discrete-time
/// eigenvalues keep them in `discrete_eigs`. Entries are ordered by
/// descending amplitude.
#[derive(Debug, Clone)]
pub struct DmdResult {
    pub method: Method,
    /// Continuous-time eigenvalues, length `r`.
    pub eigenvalues: Vec<c64>,
    /// Discrete-time eigenvalues when the method produced them.
    pub discrete_eigs: Option<Vec<c64>>,
    /// Unit-norm modes, `n x r`, phase fixed so the largest-magnitude entry
    /// of each column is real and positive.
    pub modes: Mat<c64>,
    /// Nonnegative mode amplitudes, descending.
    pub amplitudes: Vec<f64>,
}

impl DmdResult {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Normalizes each column to unit norm and rotates its phase so the
/// largest-magnitude entry is real positive. Returns the original norms.
pub(crate) fn normalize_modes(raw: &mut Mat<c64>) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(raw.ncols());
    for j in 0..raw.ncols() {
        let norm = raw.col(j).norm_l2();
        if norm == 0.0 {
            return Err(Error::ZeroEigenvalue);
        }
        let mut best = 0usize;
        let mut best_mag = 0.0;
        for i in 0..raw.nrows() {
            let mag = raw[(i, j)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = raw[(best, j)];
        let rot = pivot.conj() / pivot.norm();
        for i in 0..raw.nrows() {
            raw[(i, j)] = raw[(i, j)] * rot / norm;
        }
        norms.push(norm);
    }
    Ok(norms)
}

/// Amplitudes from fitting the first snapshot alone: `|argmin‖z₀ − Φb‖|`.
fn first_snapshot_amplitudes(modes: MatRef<'_, c64>, z0: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let svd = thin_svd_trunc(modes, DATA_RANK_TOL)?;
    let coeff = svd.pinv_apply(z0);
    Ok((0..modes.ncols()).map(|i| coeff[(i, 0)].norm()).collect())
}

/// Sorts all per-mode quantities by descending amplitude, assembling the
/// final result.
fn assemble_result(
    method: Method,
    discrete: Vec<c64>,
    dt: f64,
    mut raw_modes: Mat<c64>,
    z0: MatRef<'_, c64>,
) -> Result<DmdResult> {
    normalize_modes(&mut raw_modes)?;
    let amplitudes = first_snapshot_amplitudes(raw_modes.as_ref(), z0)?;
    let continuous: Result<Vec<c64>> = discrete
        .iter()
        .map(|&l| discrete_to_continuous(l, dt))
        .collect();
    let continuous = continuous?;

    let mut order: Vec<usize> = (0..discrete.len()).collect();
    order.sort_by(|&a, &b| {
        amplitudes[b]
            .partial_cmp(&amplitudes[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let modes = Mat::from_fn(raw_modes.nrows(), order.len(), |i, j| {
        raw_modes[(i, order[j])]
    });
    Ok(DmdResult {
        method,
        eigenvalues: order.iter().map(|&i| continuous[i]).collect(),
        discrete_eigs: Some(order.iter().map(|&i| discrete[i]).collect()),
        modes,
        amplitudes: order.iter().map(|&i| amplitudes[i]).collect(),
    })
}

fn check_rank(r: usize, available: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::ShapeMismatch("rank must be at least 1".into()));
    }
    if r > available {
        return Err(Error::RankTooLarge {
            requested: r,
            available,
        });
    }
    Ok(())
}

/// Exact DMD: reduced SVD of `X` truncated to rank `r`, projected
/// propagator `Ã = U*YVΣ⁻¹`, and modes `YVΣ⁻¹w` rescaled to unit norm.
pub fn exact_dmd(pairs: &SnapshotPairs, r: usize) -> Result<DmdResult> {
    let svd = thin_svd_trunc(pairs.x(), DATA_RANK_TOL)?;
    check_rank(r, svd.rank())?;
    let u = svd.u.get(.., 0..r);
    let v = svd.v.get(.., 0..r);

    // YVΣ⁻¹ is shared by the propagator and the modes.
    let mut yvs = pairs.y() * v;
    for j in 0..r {
        for i in 0..yvs.nrows() {
            yvs[(i, j)] /= svd.sigma[j];
        }
    }
    let atilde = u.adjoint() * &yvs;
    let (evals, w) = eig(atilde.as_ref())?;
    let raw_modes = &yvs * &w;
    assemble_result(Method::Exact, evals, pairs.dt(), raw_modes, pairs.x().get(.., 0..1))
}

/// Forward-backward DMD on the data projected onto the first `r` POD modes
/// of `X`: full projected propagators `A_f`, `A_b` are formed there and the
/// debiased estimate is the square root of `A_f A_b⁻¹` closest to `A_f`.
pub fn fb_dmd(pairs: &SnapshotPairs, r: usize) -> Result<DmdResult> {
    if r > SIGN_SEARCH_CAP {
        return Err(Error::SearchCapExceeded(r, SIGN_SEARCH_CAP));
    }
    let svd_x = thin_svd_trunc(pairs.x(), DATA_RANK_TOL)?;
    let svd_y_rank = thin_svd_trunc(pairs.y(), DATA_RANK_TOL)?.rank();
    check_rank(r, usize::min(svd_x.rank(), svd_y_rank))?;
    let pod = svd_x.u.get(.., 0..r);

    let xt = pod.adjoint() * pairs.x();
    let yt = pod.adjoint() * pairs.y();

    let svd_xt = thin_svd_trunc(xt.as_ref(), DATA_RANK_TOL)?;
    let svd_yt = thin_svd_trunc(yt.as_ref(), DATA_RANK_TOL)?;
    let a_f = svd_xt.pinv_apply_right(yt.as_ref());
    let a_b = svd_yt.pinv_apply_right(xt.as_ref());

    let s_b = singular_values(a_b.as_ref())?;
    if s_b.is_empty() || s_b[s_b.len() - 1] <= DATA_RANK_TOL * s_b[0] {
        return Err(Error::SingularBackward);
    }
    let product = &a_f * small_inverse(a_b.as_ref())?;

    let (mu, w) = eig(product.as_ref())?;
    let cond = crate::linalg::condition_number(w.as_ref())?;
    if cond > EIGVEC_COND_LIMIT {
        return Err(Error::NonDiagonalizable(cond));
    }
    let a_fb = sqrt_sign_select(&mu, w.as_ref(), a_f.as_ref())?;

    let (evals, wv) = eig(a_fb.as_ref())?;
    let raw_modes = pod * &wv;
    assemble_result(Method::Fb, evals, pairs.dt(), raw_modes, pairs.x().get(.., 0..1))
}

/// Selects the matrix square root `W diag(±√μ) W⁻¹` closest to `reference`
/// in Frobenius norm over all `2^r` sign assignments of the principal
/// roots. `eigvals`/`eigvecs` are the eigen-pairs of the squared matrix.
pub fn sqrt_sign_select(
    eigvals: &[c64],
    eigvecs: MatRef<'_, c64>,
    reference: MatRef<'_, c64>,
) -> Result<Mat<c64>> {
    let r = eigvals.len();
    if r > SIGN_SEARCH_CAP {
        return Err(Error::SearchCapExceeded(r, SIGN_SEARCH_CAP));
    }
    if eigvecs.nrows() != r || eigvecs.ncols() != r || reference.nrows() != r || reference.ncols() != r
    {
        return Err(Error::ShapeMismatch(
            "sign search needs square r x r inputs".into(),
        ));
    }
    let w_inv = small_inverse(eigvecs)?;
    let roots: Vec<c64> = eigvals.iter().map(|l| l.sqrt()).collect();

    let mut best: Option<(f64, Mat<c64>)> = None;
    for mask in 0u64..(1u64 << r) {
        // W · diag(s·√μ) · W⁻¹ with signs read off the mask bits
        let mut scaled = Mat::<c64>::zeros(r, r);
        for i in 0..r {
            let sign = if mask & (1 << i) != 0 { -1.0 } else { 1.0 };
            let root = roots[i] * sign;
            for j in 0..r {
                scaled[(i, j)] = root * w_inv[(i, j)];
            }
        }
        let candidate = eigvecs * &scaled;
        let dist = (&candidate - reference).norm_l2();
        if best.as_ref().map(|(d, _)| dist < *d).unwrap_or(true) {
            best = Some((dist, candidate));
        }
    }
    Ok(best.expect("sign search enumerates at least one candidate").1)
}

/// Total-least-squares DMD: projects `X` and `Y` onto `r < m/2` POD modes,
/// stacks them, and reads the debiased propagator `U₂₁U₁₁⁻¹` off the SVD of
/// the stack. Modes are the propagator's eigenvectors lifted through the
/// POD basis.
pub fn tls_dmd(pairs: &SnapshotPairs, r: usize) -> Result<DmdResult> {
    let m = pairs.npairs();
    if 2 * r >= m {
        return Err(Error::RankConstraintViolated { r, m });
    }
    let svd_x = thin_svd_trunc(pairs.x(), DATA_RANK_TOL)?;
    check_rank(r, svd_x.rank())?;
    let pod = svd_x.u.get(.., 0..r);

    let xt = pod.adjoint() * pairs.x();
    let yt = pod.adjoint() * pairs.y();
    let stacked = vstack(xt.as_ref(), yt.as_ref());

    let svd_z = thin_svd_trunc(stacked.as_ref(), DATA_RANK_TOL)?;
    if svd_z.rank() < r {
        return Err(Error::RankTooLarge {
            requested: r,
            available: svd_z.rank(),
        });
    }
    let u11 = svd_z.u.get(0..r, 0..r);
    let u21 = svd_z.u.get(r..2 * r, 0..r);
    let s11 = singular_values(u11)?;
    if s11.is_empty() || s11[s11.len() - 1] <= DATA_RANK_TOL * s11[0] {
        return Err(Error::SingularBlock);
    }
    let atilde = u21 * small_inverse(u11)?;

    let (evals, w) = eig(atilde.as_ref())?;
    let raw_modes = pod * &w;
    assemble_result(Method::Tls, evals, pairs.dt(), raw_modes, pairs.x().get(.., 0..1))
}

/// Hard-thresholding strategy for choosing the SVD truncation rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankStrategy {
    /// Use the given rank unchanged.
    Fixed(usize),
    /// Optimal threshold for additive white noise of known standard
    /// deviation σ: `τ = λ*(β)·√max(n,m)·σ`.
    GavishDonohoKnownSigma(f64),
    /// Unknown-noise variant: `τ = ω(β)·median(σᵢ)`.
    GavishDonohoMedian,
    /// Smallest rank capturing the given fraction of the nuclear norm.
    NuclearEnergy(f64),
}

/// A chosen truncation rank together with the strategy that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSelection {
    pub strategy: RankStrategy,
    pub chosen_rank: usize,
}

/// `λ*(β)`: the known-σ optimal-threshold coefficient for aspect ratio
/// `β = min(n,m)/max(n,m)`.
fn gavish_donoho_lambda(beta: f64) -> f64 {
    (2.0 * (beta + 1.0) + 8.0 * beta / ((beta + 1.0) + (beta * beta + 14.0 * beta + 1.0).sqrt()))
        .sqrt()
}

/// `ω(β)`: cubic approximation of the median-based threshold coefficient.
fn gavish_donoho_omega(beta: f64) -> f64 {
    0.56 * beta.powi(3) - 0.95 * beta.powi(2) + 1.82 * beta + 1.43
}

fn median(sorted_desc: &[f64]) -> f64 {
    let n = sorted_desc.len();
    if n % 2 == 1 {
        sorted_desc[n / 2]
    } else {
        0.5 * (sorted_desc[n / 2 - 1] + sorted_desc[n / 2])
    }
}

/// Chooses a truncation rank from a descending spectrum of singular values
/// of an `n_rows x n_cols` matrix.
pub fn select_rank(
    singular_values: &[f64],
    n_rows: usize,
    n_cols: usize,
    strategy: RankStrategy,
) -> Result<RankSelection> {
    if singular_values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    for w in singular_values.windows(2) {
        if w[1] > w[0] {
            return Err(Error::ShapeMismatch(
                "singular values must be sorted descending".into(),
            ));
        }
    }
    if singular_values.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(Error::NonFinite("singular values".into()));
    }
    if singular_values.iter().all(|&s| s == 0.0) {
        return Err(Error::EmptySpectrum);
    }
    let max_rank = usize::min(n_rows, n_cols);
    let chosen = match strategy {
        RankStrategy::Fixed(r) => {
            check_rank(r, max_rank)?;
            r
        }
        RankStrategy::GavishDonohoKnownSigma(sigma) => {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::NonFinite("sigma".into()));
            }
            let beta = usize::min(n_rows, n_cols) as f64 / usize::max(n_rows, n_cols) as f64;
            let tau = gavish_donoho_lambda(beta)
                * (usize::max(n_rows, n_cols) as f64).sqrt()
                * sigma;
            singular_values.iter().filter(|&&s| s > tau).count().max(1)
        }
        RankStrategy::GavishDonohoMedian => {
            let beta = usize::min(n_rows, n_cols) as f64 / usize::max(n_rows, n_cols) as f64;
            let tau = gavish_donoho_omega(beta) * median(singular_values);
            singular_values.iter().filter(|&&s| s > tau).count().max(1)
        }
        RankStrategy::NuclearEnergy(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::NonFinite("energy fraction must be in (0, 1]".into()));
            }
            let total: f64 = singular_values.iter().sum();
            let mut acc = 0.0;
            let mut r = singular_values.len();
            for (i, &s) in singular_values.iter().enumerate() {
                acc += s;
                if acc / total >= p {
                    r = i + 1;
                    break;
                }
            }
            r
        }
    };
    let chosen_rank = chosen.min(max_rank);
    Ok(RankSelection {
        strategy,
        chosen_rank,
    })
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn nuclear_energy_rank_is_monotone_in_p(
            mut sv in proptest::collection::vec(0.01f64..100.0, 1..12),
            p1 in 0.05f64..1.0,
            p2 in 0.05f64..1.0,
        ) {
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let n = sv.len();
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let r_lo = select_rank(&sv, n, n, RankStrategy::NuclearEnergy(lo)).unwrap();
            let r_hi = select_rank(&sv, n, n, RankStrategy::NuclearEnergy(hi)).unwrap();
            prop_assert!(r_lo.chosen_rank <= r_hi.chosen_rank);
        }

        #[test]
        fn chosen_rank_stays_in_bounds(
            mut sv in proptest::collection::vec(0.0f64..50.0, 1..10),
            sigma in 0.0f64..5.0,
        ) {
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assume!(sv.iter().any(|&s| s > 0.0));
            let n = sv.len();
            for strategy in [
                RankStrategy::GavishDonohoKnownSigma(sigma),
                RankStrategy::GavishDonohoMedian,
                RankStrategy::NuclearEnergy(0.9),
            ] {
                let sel = select_rank(&sv, n, n + 3, strategy).unwrap();
                prop_assert!(sel.chosen_rank >= 1 && sel.chosen_rank <= n);
            }
        }
    }
}
