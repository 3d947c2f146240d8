//! Scalar nonlinear initial value problems `y' = phi(y) f(t) + g(t)` solved
//! through an equivalent linear cascade `X' = A f(t) X + b(t)` with a strictly
//! superdiagonal `A`.
//!
//! The pipeline is:
//!
//! 1. [`taylor`]: jets of `y` and `phi(y(t))` from the Taylor recurrence.
//! 2. [`cascade`]: gauge coefficients and the initial vector `C = X(t0)`.
//! 3. [`linear`]: the truncated system, its nilpotent exponential and the
//!    variation-of-constants solution.
//! 4. [`series`]: the scalar solution as a power series in `u = int f`, with
//!    a radius estimate and the mapped t-domain.
//! 5. [`oracles`]: closed forms and an adaptive Runge-Kutta reference.
//!
//! Everything numeric is generic over [`Scalar`] (f32/f64); the jet ring and
//! the nilpotent exponential only need [`Field`], so exact rationals work
//! there too. The `*64` aliases below fix the scalar to f64.

pub mod cascade;
pub mod error;
pub mod linear;
pub mod oracles;
pub mod scalar;
pub mod series;
pub mod taylor;

pub use cascade::{
    closed_form_aux, initial_auxiliary_values, resolve_gauge, CascadeInit, Gauge, ResolvedGauge,
};
pub use error::{Error, Result};
pub use linear::{
    build_truncated_system, expm_series, expm_superdiag, matrix_power, partial_sum_solution,
    solve_constant, solve_timedep, DenseUpperTriangular, SuperdiagonalMatrix, TruncatedSystem,
};
pub use oracles::{
    closed_form, compare, linspace, rk_reference, ErrorReport, ExampleId, PointError,
};
pub use scalar::{Field, Scalar};
pub use series::{
    first_row_series, radius_estimate, DomainMap, Evaluation, Radius, SeriesSolution,
};
pub use taylor::{taylor_ivp_coeffs, PhiSpec, ProblemSpec, TaylorPoly};

pub type TaylorPoly64 = TaylorPoly<f64>;
pub type PhiSpec64 = PhiSpec<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type Gauge64 = Gauge<f64>;
pub type CascadeInit64 = CascadeInit<f64>;
pub type SuperdiagonalMatrix64 = SuperdiagonalMatrix<f64>;
pub type DenseUpperTriangular64 = DenseUpperTriangular<f64>;
pub type TruncatedSystem64 = TruncatedSystem<f64>;
pub type SeriesSolution64 = SeriesSolution<f64>;
pub type Radius64 = Radius<f64>;
pub type ErrorReport64 = ErrorReport<f64>;

pub type TaylorPoly32 = TaylorPoly<f32>;
pub type ProblemSpec32 = ProblemSpec<f32>;
pub type SeriesSolution32 = SeriesSolution<f32>;

/// Exact rational jets.
pub type RationalPoly = TaylorPoly<num_rational::Ratio<i64>>;
