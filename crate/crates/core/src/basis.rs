//! Exponential basis matrices, their analytic derivatives, and conversions
//! between discrete- and continuous-time eigenvalues.

use faer::{c64, Mat};

use crate::error::{Error, Result};

/// Natural log of the largest finite f64; `exp` overflows beyond this.
const MAX_EXP_ARG: f64 = 709.78;

/// Strictly increasing, finite sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// Validates that `times` is finite and strictly increasing.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFinite(format!("time at index {i}")));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::NonMonotoneTime { position: i as u64 });
            }
        }
        Ok(Self { times })
    }

    /// Grid `0, dt, 2·dt, …` with `len` samples.
    pub fn equispaced(len: usize, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::NonFinite("grid spacing".into()));
        }
        Self::new((0..len).map(|j| j as f64 * dt).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Returns the common spacing if the grid is equispaced to relative
    /// tolerance `rel_tol`, else `None`.
    pub fn uniform_spacing(&self, rel_tol: f64) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = self.times[1] - self.times[0];
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > rel_tol * dt.abs() {
                return None;
            }
        }
        Some(dt)
    }
}

/// Matrix of exponentials `phi[i][j] = exp(alpha[j] * t_i)` together with
/// the parameters and grid that generated it.
#[derive(Debug, Clone)]
pub struct ExpBasis {
    phi: Mat<c64>,
    alpha: Vec<c64>,
    grid: TimeGrid,
}

impl ExpBasis {
    pub fn phi(&self) -> &Mat<c64> {
        &self.phi
    }

    pub fn alpha(&self) -> &[c64] {
        &self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Number of sample times (rows).
    pub fn nrows(&self) -> usize {
        self.phi.nrows()
    }

    /// Number of exponentials (columns).
    pub fn ncols(&self) -> usize {
        self.phi.ncols()
    }
}

/// Builds `Φ(α)` on `grid`. Entries that would overflow the floating range
/// are reported as [`Error::NonFinite`] rather than stored as `Inf`, since
/// downstream factorizations fail opaquely on non-finite input.
pub fn build_phi(alpha: &[c64], grid: &TimeGrid) -> Result<ExpBasis> {
    if alpha.is_empty() {
        return Err(Error::ShapeMismatch("alpha must be nonempty".into()));
    }
    for (j, a) in alpha.iter().enumerate() {
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::NonFinite(format!("alpha[{j}]")));
        }
    }
    let m = grid.len();
    let mut phi = Mat::<c64>::zeros(m, alpha.len());
    for (j, &a) in alpha.iter().enumerate() {
        for (i, &t) in grid.times().iter().enumerate() {
            if a.re * t > MAX_EXP_ARG {
                return Err(Error::NonFinite(format!(
                    "exp(alpha[{j}]·t) overflows at t = {t}"
                )));
            }
            phi[(i, j)] = (a * c64::new(t, 0.0)).exp();
        }
    }
    Ok(ExpBasis {
        phi,
        alpha: alpha.to_vec(),
        grid: grid.clone(),
    })
}

/// Derivative `∂Φ/∂α_j`: an `M×k` matrix with a single nonzero column,
/// stored as that column index plus its dense values.
#[derive(Debug, Clone)]
pub struct PhiDerivative {
    nrows: usize,
    ncols: usize,
    col: usize,
    values: Vec<c64>,
}

impl PhiDerivative {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Index of the only nonzero column.
    pub fn col(&self) -> usize {
        self.col
    }

    /// Dense values of the nonzero column, length `nrows`.
    pub fn values(&self) -> &[c64] {
        &self.values
    }

    /// Materializes the full (mostly zero) matrix.
    pub fn to_dense(&self) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(self.nrows, self.ncols);
        for (i, &v) in self.values.iter().enumerate() {
            out[(i, self.col)] = v;
        }
        out
    }
}

/// Builds `∂Φ/∂α_j`, whose only nonzero column is `j` with entries
/// `t_i · exp(alpha[j] · t_i)`.
pub fn build_dphi(alpha: &[c64], grid: &TimeGrid, j: usize) -> Result<PhiDerivative> {
    if j >= alpha.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            limit: alpha.len(),
        });
    }
    let a = alpha[j];
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(Error::NonFinite(format!("alpha[{j}]")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        if a.re * t > MAX_EXP_ARG {
            return Err(Error::NonFinite(format!(
                "t·exp(alpha[{j}]·t) overflows at t = {t}"
            )));
        }
        let v = c64::new(t, 0.0) * (a * c64::new(t, 0.0)).exp();
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(format!(
                "t·exp(alpha[{j}]·t) overflows at t = {t}"
            )));
        }
        values.push(v);
    }
    Ok(PhiDerivative {
        nrows: grid.len(),
        ncols: alpha.len(),
        col: j,
        values,
    })
}

/// Principal-branch conversion `log(λ)/dt` from a discrete-time eigenvalue
/// to its continuous-time counterpart.
///
/// Frequencies at or beyond the Nyquist limit (`|Im(α)·dt| ≥ π`) alias onto
/// the principal strip; this is inherent to sampling and not an error.
pub fn discrete_to_continuous(lambda_d: c64, dt: f64) -> Result<c64> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::NonFinite("dt".into()));
    }
    if !lambda_d.re.is_finite() || !lambda_d.im.is_finite() {
        return Err(Error::NonFinite("eigenvalue".into()));
    }
    if lambda_d == c64::new(0.0, 0.0) {
        return Err(Error::ZeroEigenvalue);
    }
    Ok(lambda_d.ln() / dt)
}

/// Inverse of [`discrete_to_continuous`]: `exp(α·dt)`.
pub fn continuous_to_discrete(alpha: c64, dt: f64) -> c64 {
    (alpha * dt).exp()
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_strategy() -> impl Strategy<Value = TimeGrid> {
        proptest::collection::vec(0.01f64..0.8, 2..8).prop_map(|steps| {
            let mut t = -0.3;
            let mut times = vec![t];
            for s in steps {
                t += s;
                times.push(t);
            }
            TimeGrid::new(times).unwrap()
        })
    }

    fn alpha_strategy() -> impl Strategy<Value = Vec<c64>> {
        proptest::collection::vec((-2.0f64..2.0, -5.0f64..5.0), 1..5)
            .prop_map(|v| v.into_iter().map(|(re, im)| c64::new(re, im)).collect())
    }

    proptest! {
        #[test]
        fn zero_alpha_gives_ones(grid in grid_strategy()) {
            let basis = build_phi(&[c64::new(0.0, 0.0)], &grid).unwrap();
            for i in 0..grid.len() {
                prop_assert_eq!(basis.phi()[(i, 0)], c64::new(1.0, 0.0));
            }
        }

        #[test]
        fn conjugated_alpha_conjugates_phi(grid in grid_strategy(), alpha in alpha_strategy()) {
            let conj: Vec<c64> = alpha.iter().map(|a| a.conj()).collect();
            let basis = build_phi(&alpha, &grid).unwrap();
            let basis_conj = build_phi(&conj, &grid).unwrap();
            for i in 0..grid.len() {
                for j in 0..alpha.len() {
                    let d = (basis_conj.phi()[(i, j)] - basis.phi()[(i, j)].conj()).norm();
                    prop_assert!(d == 0.0);
                }
            }
        }

        #[test]
        fn dphi_is_time_scaled_column(grid in grid_strategy(), alpha in alpha_strategy()) {
            let basis = build_phi(&alpha, &grid).unwrap();
            for j in 0..alpha.len() {
                let d = build_dphi(&alpha, &grid, j).unwrap();
                prop_assert_eq!(d.col(), j);
                for (i, &t) in grid.times().iter().enumerate() {
                    let expect = c64::new(t, 0.0) * basis.phi()[(i, j)];
                    prop_assert!((d.values()[i] - expect).norm() <= 1e-13 * expect.norm().max(1.0));
                }
            }
        }

        #[test]
        fn log_exp_round_trip(re in -3.0f64..3.0, im in -3.0f64..3.0, dt in 0.05f64..1.0) {
            let alpha = c64::new(re, im);
            prop_assume!(alpha.im.abs() * dt < std::f64::consts::PI);
            let back = discrete_to_continuous(continuous_to_discrete(alpha, dt), dt).unwrap();
            prop_assert!((back - alpha).norm() <= 1e-14 * alpha.norm().max(1.0));
        }
    }
}
