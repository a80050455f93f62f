//! Trust-region Levenberg-Marquardt solver for the separable nonlinear
//! least-squares problem with multiple right-hand sides,
//!
//! ```text
//! minimize ‖H − Φ(α)B‖_F   over α ∈ C^k, B ∈ C^{k×n},
//! ```
//!
//! where `Φ(α)` is the exponential basis on a fixed time grid. The linear
//! coefficients are eliminated through the projection `B = Φ(α)†H`, leaving
//! a problem in `α` alone whose residual is `P = (I − ΦΦ†)H`. All
//! projection and Jacobian computations are blocked over the right-hand
//! sides and exploit the one-nonzero-column structure of `∂Φ/∂α_j`.

use faer::linalg::solvers::SolveLstsq;
use faer::{c64, Mat, MatRef};

use crate::basis::{build_dphi, build_phi, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{stack_columns, thin_svd_trunc, ThinSvd};

/// Lower bound for the damping parameter.
const NU_FLOOR: f64 = 1e-16;

/// Which Jacobian of the projected residual to form.
///
/// `Full` keeps both terms of the analytic derivative; `Kaufman` drops the
/// second term, which vanishes with the residual and is therefore accurate
/// for small-residual problems at roughly half the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    #[default]
    Full,
    Kaufman,
}

/// Solver options.
#[derive(Debug, Clone)]
pub struct VarProOptions {
    /// Maximum number of outer (accepted-step) iterations.
    pub max_outer_iters: usize,
    /// Initial damping parameter ν.
    pub nu_init: f64,
    /// Factor (> 1) by which ν grows after a rejected step.
    pub nu_up: f64,
    /// Factor (> 1) by which ν shrinks after an accepted step.
    pub nu_down: f64,
    /// Rejected steps allowed within one outer iteration before stalling.
    pub max_nu_raises: usize,
    /// Stop when the relative residual improvement falls below this.
    pub rel_tol: f64,
    /// Stop when the norm of the projected gradient falls below this.
    pub grad_tol: f64,
    /// Relative singular-value cutoff for the Φ pseudoinverse.
    pub rank_tol: f64,
    pub jacobian_mode: JacobianMode,
}

impl Default for VarProOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            nu_init: 1.0,
            nu_up: 2.0,
            nu_down: 3.0,
            max_nu_raises: 52,
            rel_tol: 1e-6,
            grad_tol: 1e-8,
            rank_tol: 1e-12,
            jacobian_mode: JacobianMode::Full,
        }
    }
}

impl VarProOptions {
    fn validate(&self) -> Result<()> {
        if self.max_outer_iters < 1 {
            return Err(Error::ShapeMismatch("max_outer_iters must be ≥ 1".into()));
        }
        for (name, value, floor) in [
            ("nu_up", self.nu_up, 1.0),
            ("nu_down", self.nu_down, 1.0),
            ("nu_init", self.nu_init, 0.0),
        ] {
            if !value.is_finite() || value <= floor {
                return Err(Error::NonFinite(format!("{name} must exceed {floor}")));
            }
        }
        if !self.rel_tol.is_finite()
            || self.rel_tol < 0.0
            || !self.grad_tol.is_finite()
            || self.grad_tol < 0.0
            || !self.rank_tol.is_finite()
            || self.rank_tol < 0.0
        {
            return Err(Error::NonFinite("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Termination state of [`solve_varpro`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Relative improvement or gradient norm fell below tolerance.
    Converged,
    /// No decreasing step was found within `max_nu_raises`.
    Stalled,
    /// The outer iteration budget ran out.
    MaxIters,
}

/// Converged parameters and diagnostics.
#[derive(Debug, Clone)]
pub struct VarProSolution {
    /// Nonlinear parameters at the best-seen iterate.
    pub alpha_hat: Vec<c64>,
    /// Linear coefficients `Φ(α̂)†H`, `k x n`.
    pub b_hat: Mat<c64>,
    /// Frobenius residual at the start and after each accepted step;
    /// non-increasing by construction.
    pub residual_history: Vec<f64>,
    pub status: SolveStatus,
    /// Number of accepted steps.
    pub iterations: usize,
    /// Set when Φ(α) lost column rank at the solution (nearly confluent
    /// exponents); results are then a graceful degradation.
    pub rank_deficient: bool,
}

/// Projection of `H` onto the span of `Φ(α)` and its complement.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `B = Φ(α)†H`, `k x n`.
    pub coefficients: Mat<c64>,
    /// `P = H − Φ(α)B`, `M x n`.
    pub residual: Mat<c64>,
    /// Truncated SVD of `Φ(α)` used for the pseudoinverse.
    pub basis_svd: ThinSvd,
    /// Column count of Φ, for rank-deficiency detection.
    basis_cols: usize,
}

impl Projection {
    /// Frobenius norm of the projected residual.
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm_l2()
    }

    /// True when the basis lost column rank under the cutoff.
    pub fn rank_deficient(&self) -> bool {
        self.basis_svd.rank() < self.basis_cols
    }
}

/// Computes `B = Φ(α)†H` and `P = H − ΦB` through a reduced SVD of `Φ`,
/// treating singular values below `rank_tol·σ_max` as zero.
pub fn project_residual(
    h: MatRef<'_, c64>,
    alpha: &[c64],
    grid: &TimeGrid,
    rank_tol: f64,
) -> Result<Projection> {
    if h.nrows() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "H has {} rows but the grid has {} samples",
            h.nrows(),
            grid.len()
        )));
    }
    if h.nrows() < alpha.len() {
        return Err(Error::ShapeMismatch(format!(
            "H has {} rows, fewer than {} basis columns",
            h.nrows(),
            alpha.len()
        )));
    }
    let basis = build_phi(alpha, grid)?;
    if !crate::linalg::all_finite(h) {
        return Err(Error::NonFinite("entries of H".into()));
    }
    let svd = thin_svd_trunc(basis.phi().as_ref(), rank_tol)?;
    let coefficients = svd.pinv_apply(h);
    let residual = h - basis.phi() * &coefficients;
    Ok(Projection {
        coefficients,
        residual,
        basis_svd: svd,
        basis_cols: alpha.len(),
    })
}

/// Forms the Jacobian of the stacked (column-major) projected residual with
/// respect to `α`, one column per parameter.
///
/// Column `j` stacks `-[(D_j − U(U*D_j))B + U(Σ⁻¹(V*(D_j*P)))]`, where the
/// multiplication order keeps every intermediate sparse until the final
/// product. `Kaufman` mode drops the second term.
pub fn jacobian(
    h: MatRef<'_, c64>,
    alpha: &[c64],
    grid: &TimeGrid,
    projection: &Projection,
    mode: JacobianMode,
) -> Result<Mat<c64>> {
    let m = grid.len();
    let n = h.ncols();
    let k = alpha.len();
    if projection.coefficients.nrows() != k
        || projection.coefficients.ncols() != n
        || projection.residual.nrows() != m
        || projection.residual.ncols() != n
    {
        return Err(Error::ShapeMismatch(
            "projection parts inconsistent with (H, alpha)".into(),
        ));
    }
    let u = &projection.basis_svd.u;
    let v = &projection.basis_svd.v;
    let sigma = &projection.basis_svd.sigma;
    let b = &projection.coefficients;
    let p = &projection.residual;

    let mut jac = Mat::<c64>::zeros(m * n, k);
    for j in 0..k {
        let dj = build_dphi(alpha, grid, j)?;
        let mut d_col = Mat::<c64>::zeros(m, 1);
        for (i, &val) in dj.values().iter().enumerate() {
            d_col[(i, 0)] = val;
        }

        // (D_j − U(U*D_j))B: everything left of B has one nonzero column.
        let u_dj = u.adjoint() * &d_col;
        let w = &d_col - u * &u_dj;
        let term1 = &w * b.get(j..j + 1, ..);

        let mut jm = term1;
        if mode == JacobianMode::Full {
            // U(Σ⁻¹(V*(D_j*P))): D_j*P has one nonzero row.
            let row_p = d_col.adjoint() * p;
            let vj = v.get(j..j + 1, ..).adjoint();
            let mut inner = vj * &row_p;
            for (i, &s) in sigma.iter().enumerate() {
                for col in 0..n {
                    inner[(i, col)] /= s;
                }
            }
            jm += u * &inner;
        }

        for col in 0..n {
            for i in 0..m {
                jac[(col * m + i, j)] = -jm[(i, col)];
            }
        }
    }
    Ok(jac)
}

/// Solves the damped least-squares system
/// `min ‖[J; ν·diag(scales)]δ − [ρ; 0]‖₂` by QR factorization.
///
/// Zero entries of `scales` are replaced by 1 so the augmented system keeps
/// full column rank even when a Jacobian column vanishes.
pub fn lm_step(
    jac: MatRef<'_, c64>,
    rho: MatRef<'_, c64>,
    nu: f64,
    scales: &[f64],
) -> Result<Vec<c64>> {
    let rows = jac.nrows();
    let k = jac.ncols();
    if rho.nrows() != rows || rho.ncols() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "residual has shape {}x{}, expected {rows}x1",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if scales.len() != k {
        return Err(Error::LengthMismatch(scales.len(), k));
    }
    let mut stacked = Mat::<c64>::zeros(rows + k, k);
    for j in 0..k {
        for i in 0..rows {
            stacked[(i, j)] = jac[(i, j)];
        }
        let s = if scales[j] == 0.0 { 1.0 } else { scales[j] };
        stacked[(rows + j, j)] = c64::new(nu * s, 0.0);
    }
    let mut rhs = Mat::<c64>::zeros(rows + k, 1);
    for i in 0..rows {
        rhs[(i, 0)] = rho[(i, 0)];
    }
    let delta = stacked.qr().solve_lstsq(&rhs);
    let out: Vec<c64> = (0..k).map(|j| delta[(j, 0)]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(out)
}

/// Euclidean norms of the Jacobian columns, used as LM scalings.
fn column_scales(jac: MatRef<'_, c64>) -> Vec<f64> {
    (0..jac.ncols()).map(|j| jac.col(j).norm_l2()).collect()
}

/// Minimizes `‖H − Φ(α)B‖_F` from the initial guess `alpha0`.
///
/// Each outer iteration forms the Jacobian once and raises ν until a step
/// strictly decreases the residual; ν is relaxed again after an accepted
/// step. The best-seen iterate is always returned, also on a stall.
pub fn solve_varpro(
    h: MatRef<'_, c64>,
    grid: &TimeGrid,
    alpha0: &[c64],
    opts: &VarProOptions,
) -> Result<VarProSolution> {
    opts.validate()?;
    if alpha0
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite("alpha0".into()));
    }
    let mut alpha = alpha0.to_vec();
    let mut projection = project_residual(h, &alpha, grid, opts.rank_tol)?;
    let mut res = projection.residual_norm();
    let mut history = vec![res];
    let mut nu = opts.nu_init;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIters;

    'outer: for _ in 0..opts.max_outer_iters {
        let jac = jacobian(h, &alpha, grid, &projection, opts.jacobian_mode)?;
        let rho = stack_columns(projection.residual.as_ref());
        let grad = jac.adjoint() * &rho;
        if grad.norm_l2() < opts.grad_tol {
            status = SolveStatus::Converged;
            break;
        }
        let scales = column_scales(jac.as_ref());

        let mut raises = 0;
        loop {
            let delta = lm_step(jac.as_ref(), rho.as_ref(), nu, &scales)?;
            let alpha_try: Vec<c64> = alpha
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a - d)
                .collect();
            // A trial step that overflows the basis is just a bad step.
            let trial = match project_residual(h, &alpha_try, grid, opts.rank_tol) {
                Ok(t) => Some(t),
                Err(Error::NonFinite(_)) => None,
                Err(e) => return Err(e),
            };
            let accepted = trial
                .as_ref()
                .map(|t| t.residual_norm() < res)
                .unwrap_or(false);
            if accepted {
                let trial = trial.unwrap();
                let prev = res;
                alpha = alpha_try;
                res = trial.residual_norm();
                projection = trial;
                history.push(res);
                iterations += 1;
                nu = (nu / opts.nu_down).max(NU_FLOOR);
                if prev - res < opts.rel_tol * prev {
                    status = SolveStatus::Converged;
                    break 'outer;
                }
                break;
            }
            nu *= opts.nu_up;
            raises += 1;
            if raises > opts.max_nu_raises {
                status = SolveStatus::Stalled;
                break 'outer;
            }
        }
    }

    debug_assert!(history.windows(2).all(|w| w[1] <= w[0]));
    let rank_deficient = projection.rank_deficient();
    Ok(VarProSolution {
        alpha_hat: alpha,
        b_hat: projection.coefficients,
        residual_history: history,
        status,
        iterations,
        rank_deficient,
    })
}
