//! Dynamic mode decomposition (DMD) for arbitrarily sampled snapshot data.
//!
//! The central routine fits a sum of exponentials
//! `z(t) ≈ Σ b_i φ_i exp(λ_i t)` to a matrix of snapshots by variable
//! projection: the linear coefficients are eliminated through a projection
//! onto the span of the exponential basis, and the remaining nonlinear
//! problem in the exponents is solved with a trust-region
//! Levenberg-Marquardt iteration. Fitting all snapshots at once removes the
//! eigenvalue bias of the classical pairwise DMD regression and places no
//! restriction on the sample times.
//!
//! The crate also ships the classical baselines (exact DMD,
//! forward-backward DMD, total-least-squares DMD), singular-value
//! hard-thresholding rules, reconstruction and error diagnostics, synthetic
//! data generators, and a seeded Monte-Carlo benchmark harness.
//!
//! ```
//! use faer::Mat;
//! use optdmd::{c64, optimized_dmd, OptDmdConfig, SnapshotSet, TimeGrid};
//!
//! // a decaying oscillation sampled on an uneven grid
//! let times = TimeGrid::new(vec![0.0, 0.09, 0.21, 0.3, 0.42, 0.55, 0.61, 0.74])?;
//! let states = Mat::<c64>::from_fn(2, times.len(), |i, j| {
//!     let t = times.times()[j];
//!     let envelope = (-0.5 * t).exp();
//!     c64::new(envelope * (2.0 * t + i as f64).cos(), 0.0)
//! });
//! let data = SnapshotSet::new(states, times)?;
//!
//! let (result, solution) = optimized_dmd(&data, &OptDmdConfig::new(2))?;
//! assert_eq!(result.rank(), 2);
//! // the pair of exponents straddles the true decay rate −0.5 ± 2i
//! for lambda in &result.eigenvalues {
//!     assert!((lambda.re + 0.5).abs() < 1e-6);
//!     assert!((lambda.im.abs() - 2.0).abs() < 1e-6);
//! }
//! assert!(solution.residual_history.last().unwrap() < &1e-6);
//! # Ok::<(), optdmd::Error>(())
//! ```

pub mod basis;
pub mod diagnostics;
pub mod dmd;
mod error;
pub mod harness;
pub mod io;
mod linalg;
pub mod optdmd;
pub mod varpro;

pub use error::{Error, Result};
pub use faer::c64;

pub use basis::{
    build_dphi, build_phi, continuous_to_discrete, discrete_to_continuous, ExpBasis,
    PhiDerivative, TimeGrid,
};
pub use diagnostics::{
    amplitudes, confidence_ellipse, eigenvalue_match_error, extrapolate, match_eigenvalues,
    reconstruct_system_matrix, snapshot_residual, AmplitudeMethod, EllipseSummary, TrialRecord,
};
pub use dmd::{
    exact_dmd, fb_dmd, select_rank, sqrt_sign_select, tls_dmd, DmdResult, Method, RankSelection,
    RankStrategy, SnapshotPairs,
};
pub use optdmd::{approx_optimized_dmd, init_alpha, optimized_dmd, OptDmdConfig, SnapshotSet};
pub use varpro::{
    solve_varpro, JacobianMode, SolveStatus, VarProOptions, VarProSolution,
};
