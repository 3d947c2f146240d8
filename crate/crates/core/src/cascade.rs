//! Gauge coefficients `a_{j,j+1}` and initial auxiliary values `C = X(t0)`.
//!
//! The cascade variables satisfy `x_0 = y`, `x_0' = a_01 f x_1 + g`,
//! `x_j' = a_{j,j+1} f x_{j+1}`. Only the products `prod_a[j] * c[j]` are
//! gauge independent: they equal the `(j-1)`-th derivative of `phi(y)` with
//! respect to `u = int f` at `t0`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::taylor::{taylor_ivp_coeffs, PhiSpec, ProblemSpec};

/// Choice of superdiagonal coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum Gauge<T> {
    /// `a_{j,j+1} = 1`.
    Unit,
    /// `a_{j,j+1} = j + 1`, natural for `phi(y) = y^2`.
    PaperPower,
    /// `a_01 = 1`, `a_{j,j+1} = j` for `j >= 1`, natural for `phi(y) = e^y`.
    PaperExp,
    /// Explicit coefficients, at least `N - 1` of them.
    Custom(Vec<T>),
}

// A derive would demand `T: Default`.
#[allow(clippy::derivable_impls)]
impl<T> Default for Gauge<T> {
    fn default() -> Self {
        Self::Unit
    }
}

impl<T> Gauge<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Unit => "unit",
            Self::PaperPower => "paper-power",
            Self::PaperExp => "paper-exp",
            Self::Custom(_) => "custom",
        }
    }
}

/// A gauge bound to truncation `N`: exactly `N - 1` nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGauge<T> {
    kind: Gauge<T>,
    a: Vec<T>,
}

impl<T: Scalar> ResolvedGauge<T> {
    pub fn kind(&self) -> &Gauge<T> {
        &self.kind
    }

    /// `a[j] = a_{j,j+1}` for `j = 0..N-1`.
    pub fn coefficients(&self) -> &[T] {
        &self.a
    }

    /// Truncation dimension `N`.
    pub fn dim(&self) -> usize {
        self.a.len() + 1
    }

    /// `prod[j] = a[0] * ... * a[j-1]`, `prod[0] = 1`, for `j < N`.
    pub fn prefix_products(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.a.len() + 1);
        out.push(T::one());
        let mut acc = T::one();
        for &a in &self.a {
            acc = acc * a;
            out.push(acc);
        }
        out
    }
}

pub fn resolve_gauge<T: Scalar>(gauge: &Gauge<T>, n: usize) -> Result<ResolvedGauge<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "truncation N = {n} must be >= 2"
        )));
    }
    let a: Vec<T> = match gauge {
        Gauge::Unit => vec![T::one(); n - 1],
        Gauge::PaperPower => (0..n - 1).map(|j| T::from_usize_exact(j + 1)).collect(),
        Gauge::PaperExp => (0..n - 1).map(|j| T::from_usize_exact(j.max(1))).collect(),
        Gauge::Custom(list) => {
            if list.len() < n - 1 {
                return Err(Error::InvalidGauge(format!(
                    "custom gauge has {} entries, truncation N = {n} needs {}",
                    list.len(),
                    n - 1
                )));
            }
            list[..n - 1].to_vec()
        }
    };
    if let Some(j) = a.iter().position(|x| x.is_zero() || !x.is_finite()) {
        return Err(Error::InvalidGauge(format!(
            "a[{j}] must be finite and nonzero"
        )));
    }
    Ok(ResolvedGauge {
        kind: gauge.clone(),
        a,
    })
}

/// Gauge plus initial auxiliary vector for a truncation of dimension `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeInit<T> {
    gauge: ResolvedGauge<T>,
    c: Vec<T>,
    prod_a: Vec<T>,
}

impl<T: Scalar> CascadeInit<T> {
    fn from_parts(gauge: ResolvedGauge<T>, c: Vec<T>) -> Self {
        let prod_a = gauge.prefix_products();
        Self { gauge, c, prod_a }
    }

    pub fn gauge(&self) -> &ResolvedGauge<T> {
        &self.gauge
    }

    /// `c[j] = x_j(t0)`.
    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn prod_a(&self) -> &[T] {
        &self.prod_a
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Gauge-invariant products `prod_a[j] * c[j]`.
    pub fn invariant_products(&self) -> Vec<T> {
        self.prod_a
            .iter()
            .zip(&self.c)
            .map(|(&p, &c)| p * c)
            .collect()
    }
}

/// Coefficients of `phi(y)` as a series in `u = int_{t0}^{t} f`, up to index
/// `n - 1`.
///
/// Constant nonzero `f = k` gives `u = k (t - t0)`, so the t-coefficients of
/// `phi(y(t))` (forcing included) are rescaled by `k^-m`. Otherwise the cascade
/// is generated by `(1/f) d/dt`, which is `d/du` of the autonomous problem
/// `dY/du = phi(Y)`; the forcing does not enter that case.
pub(crate) fn phi_u_coefficients<T: Scalar>(problem: &ProblemSpec<T>, n: usize) -> Result<Vec<T>> {
    let order = n.max(1);
    match problem.constant_f() {
        Some(k) if !k.is_zero() => {
            let y = taylor_ivp_coeffs(problem, order)?;
            let w = problem.phi().compose(&y)?;
            let inv = T::one() / k;
            let mut scale = T::one();
            Ok(w.coeffs()[..n]
                .iter()
                .map(|&c| {
                    let v = c * scale;
                    scale = scale * inv;
                    v
                })
                .collect())
        }
        _ => {
            let reduced =
                ProblemSpec::autonomous(problem.t0(), problem.y0(), problem.phi().clone())?;
            let y = taylor_ivp_coeffs(&reduced, order)?;
            let w = problem.phi().compose(&y)?;
            Ok(w.coeffs()[..n].to_vec())
        }
    }
}

/// Initial auxiliary values from the Taylor route:
/// `c[0] = y0`, `c[j] = (j-1)! w[j-1] / prod_a[j]` where `w` are the
/// u-coefficients of `phi(y)`.
pub fn initial_auxiliary_values<T: Scalar>(
    problem: &ProblemSpec<T>,
    gauge: &Gauge<T>,
    n: usize,
) -> Result<CascadeInit<T>> {
    let resolved = resolve_gauge(gauge, n)?;
    let w = phi_u_coefficients(problem, n)?;
    let a = resolved.coefficients();
    let mut c = Vec::with_capacity(n);
    c.push(problem.y0());
    // ratio = (j-1)! / prod_a[j], updated incrementally to stay well scaled.
    let mut ratio = T::one() / a[0];
    for j in 1..n {
        if j > 1 {
            ratio = ratio * T::from_usize_exact(j - 1) / a[j - 1];
        }
        let cj = w[j - 1] * ratio;
        if !cj.is_finite() {
            return Err(Error::Divergence { order: j });
        }
        c.push(cj);
    }
    Ok(CascadeInit::from_parts(resolved, c))
}

/// Closed-form cascade values for the two worked examples:
/// `x_j = y^{j+1}` (square with the power gauge) and `x_j = e^{j y}`
/// (exponential with the exponential gauge).
pub fn closed_form_aux<T: Scalar>(
    phi: &PhiSpec<T>,
    gauge: &Gauge<T>,
    y0: T,
    n: usize,
) -> Result<CascadeInit<T>> {
    let c: Vec<T> = match (phi, gauge) {
        (PhiSpec::PowerFunction(2), Gauge::PaperPower) => {
            (0..n).map(|j| y0.powi(j as i32 + 1)).collect()
        }
        (PhiSpec::Exponential, Gauge::PaperExp) => (0..n)
            .map(|j| {
                if j == 0 {
                    y0
                } else {
                    (T::from_usize_exact(j) * y0).exp()
                }
            })
            .collect(),
        _ => {
            return Err(Error::UnsupportedCombination(format!(
                "no closed-form cascade for {phi:?} with the {} gauge",
                gauge.name()
            )))
        }
    };
    Ok(CascadeInit::from_parts(resolve_gauge(gauge, n)?, c))
}
