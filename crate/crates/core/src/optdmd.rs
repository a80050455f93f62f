//! Optimized DMD: a single global exponential fit
//! `min ‖Xᵀ − Φ(α)B‖_F` over all snapshots at once, solved by variable
//! projection, with a rank-truncated variant for high-dimensional states
//! and a trapezoidal-rule initialization.

use faer::{c64, Mat, MatRef};

use crate::basis::TimeGrid;
use crate::dmd::{normalize_modes, DmdResult, Method, SnapshotPairs};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, eig, thin_svd_trunc};
use crate::varpro::{solve_varpro, VarProOptions, VarProSolution};

/// Relative singular-value cutoff defining the numerical rank of the data.
const DATA_RANK_TOL: f64 = 1e-12;

/// A complex state matrix paired with its (strictly increasing, not
/// necessarily equispaced) sample times; column `j` is the snapshot at
/// `grid.times()[j]`.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    states: Mat<c64>,
    grid: TimeGrid,
}

impl SnapshotSet {
    pub fn new(states: Mat<c64>, grid: TimeGrid) -> Result<Self> {
        if states.ncols() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} snapshot columns but {} sample times",
                states.ncols(),
                grid.len()
            )));
        }
        if !all_finite(states.as_ref()) {
            return Err(Error::NonFinite("snapshot entries".into()));
        }
        Ok(Self { states, grid })
    }

    pub fn states(&self) -> MatRef<'_, c64> {
        self.states.as_ref()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// State dimension.
    pub fn state_dim(&self) -> usize {
        self.states.nrows()
    }

    /// Number of snapshots.
    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.states.ncols() == 0
    }

    /// Singular values of the state matrix, descending; the input to the
    /// hard-thresholding rank rules.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        crate::linalg::singular_values(self.states())
    }

    /// Consecutive snapshot pairs `(z_j, z_{j+1})` for the classical DMD
    /// methods; requires an equispaced grid.
    pub fn pairs(&self) -> Result<SnapshotPairs> {
        let dt = self.grid.uniform_spacing(1e-9).ok_or_else(|| {
            Error::ShapeMismatch("snapshot pairs require an equispaced time grid".into())
        })?;
        let m = self.len();
        if m < 2 {
            return Err(Error::ShapeMismatch(
                "at least two snapshots are needed to form pairs".into(),
            ));
        }
        let x = self.states.get(.., 0..m - 1).to_owned();
        let y = self.states.get(.., 1..m).to_owned();
        SnapshotPairs::new(x, y, dt)
    }
}

/// Configuration for the optimized DMD solvers.
#[derive(Debug, Clone)]
pub struct OptDmdConfig {
    /// Target rank `r` (number of exponentials).
    pub rank: usize,
    /// Initial exponents; when absent, [`init_alpha`] is used. Eigenvalues
    /// from the classical methods (log-converted) also work here.
    pub init_alpha: Option<Vec<c64>>,
    pub varpro_opts: VarProOptions,
}

impl OptDmdConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            init_alpha: None,
            varpro_opts: VarProOptions::default(),
        }
    }
}

/// Initial guess for the continuous-time eigenvalues, assuming the
/// snapshots were produced by the trapezoidal rule: the propagator
/// satisfies `(X₂−X₁)T⁻¹ = A·(X₁+X₂)/2`, which is solved in reduced form
/// like an exact DMD.
pub fn init_alpha(data: &SnapshotSet, r: usize) -> Result<Vec<c64>> {
    let m_plus_1 = data.len();
    if m_plus_1 < 2 {
        return Err(Error::ShapeMismatch(
            "initialization needs at least two snapshots".into(),
        ));
    }
    let n = data.state_dim();
    let m = m_plus_1 - 1;
    let times = data.grid().times();
    let states = data.states();

    let mut midpoints = Mat::<c64>::zeros(n, m);
    let mut slopes = Mat::<c64>::zeros(n, m);
    for j in 0..m {
        let dt = times[j + 1] - times[j];
        if dt == 0.0 {
            return Err(Error::DegenerateGrid);
        }
        for i in 0..n {
            let lo = states[(i, j)];
            let hi = states[(i, j + 1)];
            midpoints[(i, j)] = (lo + hi) * 0.5;
            slopes[(i, j)] = (hi - lo) / dt;
        }
    }

    let svd = thin_svd_trunc(midpoints.as_ref(), DATA_RANK_TOL)?;
    if r == 0 || r > svd.rank() {
        return Err(Error::RankTooLarge {
            requested: r,
            available: svd.rank(),
        });
    }
    let u = svd.u.get(.., 0..r);
    let v = svd.v.get(.., 0..r);
    let mut zvs = &slopes * v;
    for j in 0..r {
        for i in 0..n {
            zvs[(i, j)] /= svd.sigma[j];
        }
    }
    let atilde = u.adjoint() * &zvs;
    let (evals, _) = eig(atilde.as_ref())?;
    Ok(evals)
}

fn resolve_init(data: &SnapshotSet, cfg: &OptDmdConfig) -> Result<Vec<c64>> {
    match &cfg.init_alpha {
        Some(alpha) => {
            if alpha.len() != cfg.rank {
                return Err(Error::LengthMismatch(alpha.len(), cfg.rank));
            }
            Ok(alpha.clone())
        }
        None => init_alpha(data, cfg.rank),
    }
}

/// Builds the result from converged exponents and the (possibly lifted)
/// coefficient transpose whose columns are the unnormalized modes.
fn finish(method: Method, alpha: &[c64], mut raw_modes: Mat<c64>) -> Result<DmdResult> {
    let amplitudes = normalize_modes(&mut raw_modes)?;
    let mut order: Vec<usize> = (0..alpha.len()).collect();
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
        eigenvalues: order.iter().map(|&i| alpha[i]).collect(),
        discrete_eigs: None,
        modes,
        amplitudes: order.iter().map(|&i| amplitudes[i]).collect(),
    })
}

/// Optimized DMD on the full data: solves `min ‖Xᵀ − Φ(α)B‖_F`, takes the
/// eigenvalues directly from `α̂` (already continuous-time), and reads mode
/// `i` and amplitude `b_i` off column `i` of `B̂ᵀ`.
pub fn optimized_dmd(
    data: &SnapshotSet,
    cfg: &OptDmdConfig,
) -> Result<(DmdResult, VarProSolution)> {
    if data.len() < cfg.rank {
        return Err(Error::ShapeMismatch(format!(
            "{} snapshots cannot support rank {}",
            data.len(),
            cfg.rank
        )));
    }
    let alpha0 = resolve_init(data, cfg)?;
    let h = data.states().transpose().to_owned();
    let solution = solve_varpro(h.as_ref(), data.grid(), &alpha0, &cfg.varpro_opts)?;
    let raw_modes = solution.b_hat.transpose().to_owned();
    let result = finish(Method::Optimized, &solution.alpha_hat, raw_modes)?;
    Ok((result, solution))
}

/// Approximate optimized DMD: fits the rank-`r` truncation of the data by
/// solving the `r`-column problem `min ‖V̄ᵣΣᵣ − Φ(α)B‖_F` and lifting the
/// modes back through `Uᵣ`. Equivalent to the full solve on `Xᵣ` at a much
/// lower per-iteration cost.
pub fn approx_optimized_dmd(
    data: &SnapshotSet,
    cfg: &OptDmdConfig,
) -> Result<(DmdResult, VarProSolution)> {
    let r = cfg.rank;
    if r > usize::min(data.state_dim(), data.len()) {
        return Err(Error::RankTooLarge {
            requested: r,
            available: usize::min(data.state_dim(), data.len()),
        });
    }
    let svd = thin_svd_trunc(data.states(), DATA_RANK_TOL)?;
    if r == 0 || r > svd.rank() {
        return Err(Error::RankTooLarge {
            requested: r,
            available: svd.rank(),
        });
    }
    let alpha0 = resolve_init(data, cfg)?;

    // target V̄ᵣΣᵣ: an (m+1) x r problem independent of the state dimension
    let mut target = Mat::<c64>::zeros(data.len(), r);
    for j in 0..r {
        for i in 0..data.len() {
            target[(i, j)] = svd.v[(i, j)].conj() * svd.sigma[j];
        }
    }
    let solution = solve_varpro(target.as_ref(), data.grid(), &alpha0, &cfg.varpro_opts)?;
    let u_r = svd.u.get(.., 0..r);
    let raw_modes = u_r * solution.b_hat.transpose();
    let result = finish(Method::ApproxOptimized, &solution.alpha_hat, raw_modes)?;
    Ok((result, solution))
}
