//! Truncated power series (jets) and the Taylor-recurrence IVP solver.
//!
//! A [`TaylorPoly`] of order `n` carries the coefficients `c_0..=c_n` of a
//! function around `center`. Products and compositions drop every term above
//! the working order, so jet arithmetic reproduces the chain rule exactly up
//! to that order.

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};

/// Truncated power series `sum_k coeffs[k] * (t - center)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorPoly<T> {
    center: T,
    coeffs: Vec<T>,
}

impl<T: Field> TaylorPoly<T> {
    /// Builds a jet from its coefficients. Rejects an empty list and any
    /// non-finite entry.
    pub fn new(center: T, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "a jet needs at least one coefficient".into(),
            ));
        }
        if !center.is_finite_value() || coeffs.iter().any(|c| !c.is_finite_value()) {
            return Err(Error::NonFinite("jet coefficients"));
        }
        Ok(Self { center, coeffs })
    }

    pub fn constant(center: T, value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    pub fn zero(center: T, order: usize) -> Self {
        Self::constant(center, T::zero(), order)
    }

    pub fn one(center: T, order: usize) -> Self {
        Self::constant(center, T::one(), order)
    }

    /// The identity function `t` expanded around `center`.
    pub fn variable(center: T, order: usize) -> Self {
        let mut p = Self::constant(center, center, order);
        if order >= 1 {
            p.coeffs[1] = T::one();
        }
        p
    }

    #[inline]
    pub fn center(&self) -> T {
        self.center
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `k`, reading zero past the stored order.
    #[inline]
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    /// Pads with zeros or truncates to exactly `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let coeffs = (0..=order).map(|k| self.coeff(k)).collect();
        Self {
            center: self.center,
            coeffs,
        }
    }

    /// `true` when every coefficient above the constant term is zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn is_zero_poly(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Degree of the polynomial, ignoring trailing zero coefficients.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        if self.center != other.center {
            return Err(Error::CenterMismatch {
                left: self.center.to_f64_lossy(),
                right: other.center.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Coefficient-wise sum at the smaller of the two orders.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Self {
            center: self.center,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(Self {
            center: self.center,
            coeffs,
        })
    }

    /// Truncated Cauchy product at the smaller of the two orders.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let order = self.order().min(other.order());
        Ok(Self {
            center: self.center,
            coeffs: cauchy_product(&self.coeffs, &other.coeffs, order),
        })
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }

    /// Adds a constant to the zeroth coefficient.
    pub fn shift(&self, k: T) -> Self {
        let mut p = self.clone();
        p.coeffs[0] = p.coeffs[0] + k;
        p
    }

    /// Term-wise antiderivative with `const0` as the new constant term; the
    /// order grows by one.
    pub fn integrate(&self, const0: T) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(const0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / T::from_usize_exact(k + 1));
        }
        Self {
            center: self.center,
            coeffs,
        }
    }

    /// Term-wise derivative; the order drops by one (order 0 maps to the zero
    /// constant).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero(self.center, 0);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, &c)| c * T::from_usize_exact(k + 1))
            .collect();
        Self {
            center: self.center,
            coeffs,
        }
    }

    /// Horner evaluation at `t`.
    pub fn eval(&self, t: T) -> Result<T> {
        let value = horner(&self.coeffs, t - self.center);
        if !value.is_finite_value() {
            return Err(Error::NonFinite("jet evaluation"));
        }
        Ok(value)
    }

    /// Substitutes the jet `inner` (same center) for the variable of this
    /// polynomial, treating `self` as a polynomial in `(x - 0)`: returns
    /// `sum_k coeffs[k] * inner^k` truncated to `inner.order()`.
    pub fn compose_poly(&self, inner: &Self) -> Self {
        horner_jet(&self.coeffs, inner)
    }
}

/// `c[k] = sum_{i+j=k} a[i] b[j]` for `k <= order`.
pub(crate) fn cauchy_product<T: Field>(a: &[T], b: &[T], order: usize) -> Vec<T> {
    (0..=order)
        .map(|k| {
            let mut acc = T::zero();
            for i in 0..=k {
                if let (Some(&x), Some(&y)) = (a.get(i), b.get(k - i)) {
                    acc = acc + x * y;
                }
            }
            acc
        })
        .collect()
}

pub(crate) fn horner<T: Field>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Horner's scheme on jets: `sum_k p[k] * y^k` at the order of `y`.
fn horner_jet<T: Field>(p: &[T], y: &TaylorPoly<T>) -> TaylorPoly<T> {
    let order = y.order();
    let mut acc = TaylorPoly::zero(y.center, order);
    for &pk in p.iter().rev() {
        acc.coeffs = cauchy_product(&acc.coeffs, &y.coeffs, order);
        acc.coeffs[0] = acc.coeffs[0] + pk;
    }
    acc
}

/// The nonlinearity `phi(y)` of `y' = phi(y) f(t) + g(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec<T> {
    /// `sum_k p[k] y^k`, lowest degree first.
    Polynomial(Vec<T>),
    /// `y^m`, `m >= 1`.
    PowerFunction(u32),
    /// `e^y`.
    Exponential,
    /// Taylor coefficients of `phi` around `center` (normally `y0`).
    SeriesAtY0 { center: T, coeffs: Vec<T> },
}

impl<T: Scalar> PhiSpec<T> {
    pub fn polynomial(coeffs: Vec<T>) -> Result<Self> {
        let phi = Self::Polynomial(coeffs);
        phi.validate()?;
        Ok(phi)
    }

    pub fn power(exponent: u32) -> Result<Self> {
        let phi = Self::PowerFunction(exponent);
        phi.validate()?;
        Ok(phi)
    }

    pub fn series_at(center: T, coeffs: Vec<T>) -> Result<Self> {
        let phi = Self::SeriesAtY0 { center, coeffs };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Polynomial(p) if p.is_empty() => Err(Error::InvalidArgument(
                "polynomial phi needs at least one coefficient".into(),
            )),
            Self::Polynomial(p) if p.iter().any(|c| !c.is_finite()) => {
                Err(Error::NonFinite("polynomial phi"))
            }
            Self::PowerFunction(0) => Err(Error::InvalidArgument(
                "power phi needs exponent >= 1".into(),
            )),
            Self::SeriesAtY0 { coeffs, .. } if coeffs.is_empty() => Err(Error::InvalidArgument(
                "series phi needs at least one coefficient".into(),
            )),
            Self::SeriesAtY0 { center, coeffs }
                if !center.is_finite() || coeffs.iter().any(|c| !c.is_finite()) =>
            {
                Err(Error::NonFinite("series phi"))
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value `phi(y)`.
    pub fn eval(&self, y: T) -> T {
        match self {
            Self::Polynomial(p) => horner(p, y),
            Self::PowerFunction(m) => y.powi(*m as i32),
            Self::Exponential => y.exp(),
            Self::SeriesAtY0 { center, coeffs } => horner(coeffs, y - *center),
        }
    }

    /// Jet of `phi(y(t))` at the order of `y`.
    pub fn compose(&self, y: &TaylorPoly<T>) -> Result<TaylorPoly<T>> {
        let out = match self {
            Self::Polynomial(p) => horner_jet(p, y),
            Self::PowerFunction(m) => power_jet(y, *m),
            Self::Exponential => exp_jet(y),
            Self::SeriesAtY0 { center, coeffs } => horner_jet(coeffs, &y.shift(-*center)),
        };
        if out.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("phi composition"));
        }
        Ok(out)
    }
}

/// Binary exponentiation on jets.
fn power_jet<T: Field>(y: &TaylorPoly<T>, mut m: u32) -> TaylorPoly<T> {
    let order = y.order();
    let mut result = TaylorPoly::one(y.center, order);
    let mut base = y.coeffs.clone();
    while m > 0 {
        if m & 1 == 1 {
            result.coeffs = cauchy_product(&result.coeffs, &base, order);
        }
        m >>= 1;
        if m > 0 {
            base = cauchy_product(&base, &base, order);
        }
    }
    result
}

/// `E = exp(y)` from `E' = y' E`: `E_k = (1/k) sum_{j=1}^{k} j y_j E_{k-j}`.
fn exp_jet<T: Scalar>(y: &TaylorPoly<T>) -> TaylorPoly<T> {
    let n = y.coeffs.len();
    let mut e = Vec::with_capacity(n);
    e.push(y.coeffs[0].exp());
    for k in 1..n {
        let mut acc = T::zero();
        for j in 1..=k {
            acc = acc + T::from_usize_exact(j) * y.coeffs[j] * e[k - j];
        }
        e.push(acc / T::from_usize_exact(k));
    }
    TaylorPoly {
        center: y.center,
        coeffs: e,
    }
}

/// The initial value problem `y' = phi(y) f(t) + g(t)`, `y(t0) = y0`, with
/// `f` and `g` given as polynomials around `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    t0: T,
    y0: T,
    phi: PhiSpec<T>,
    f: TaylorPoly<T>,
    g: TaylorPoly<T>,
}

impl<T: Scalar> ProblemSpec<T> {
    /// `f` defaults to the constant 1 and `g` to zero.
    pub fn new(
        t0: T,
        y0: T,
        phi: PhiSpec<T>,
        f: Option<TaylorPoly<T>>,
        g: Option<TaylorPoly<T>>,
    ) -> Result<Self> {
        if !t0.is_finite() || !y0.is_finite() {
            return Err(Error::NonFinite("initial condition"));
        }
        phi.validate()?;
        let f = f.unwrap_or_else(|| TaylorPoly::one(t0, 0));
        let g = g.unwrap_or_else(|| TaylorPoly::zero(t0, 0));
        for p in [&f, &g] {
            if p.center != t0 {
                return Err(Error::CenterMismatch {
                    left: p.center.to_f64_lossy(),
                    right: t0.to_f64_lossy(),
                });
            }
        }
        Ok(Self { t0, y0, phi, f, g })
    }

    /// `y' = phi(y)`, `y(t0) = y0`.
    pub fn autonomous(t0: T, y0: T, phi: PhiSpec<T>) -> Result<Self> {
        Self::new(t0, y0, phi, None, None)
    }

    pub fn t0(&self) -> T {
        self.t0
    }
    pub fn y0(&self) -> T {
        self.y0
    }
    pub fn phi(&self) -> &PhiSpec<T> {
        &self.phi
    }
    pub fn f(&self) -> &TaylorPoly<T> {
        &self.f
    }
    pub fn g(&self) -> &TaylorPoly<T> {
        &self.g
    }

    /// `Some(k)` when `f` is the constant `k`.
    pub fn constant_f(&self) -> Option<T> {
        self.f.is_constant().then(|| self.f.coeffs[0])
    }

    pub fn f_is_unity(&self) -> bool {
        self.constant_f() == Some(T::one())
    }

    /// `F(t) = int_{t0}^{t} f(s) ds` as an exact polynomial.
    pub fn f_antiderivative(&self) -> TaylorPoly<T> {
        self.f.integrate(T::zero())
    }

    /// `int_{t0}^{t} g(s) ds` as an exact polynomial.
    pub fn g_antiderivative(&self) -> TaylorPoly<T> {
        self.g.integrate(T::zero())
    }

    /// Right-hand side `phi(y) f(t) + g(t)`.
    pub fn rhs(&self, t: T, y: T) -> T {
        let dt = t - self.t0;
        self.phi.eval(y) * horner(&self.f.coeffs, dt) + horner(&self.g.coeffs, dt)
    }
}

/// Taylor coefficients `y_0..=y_order` of the analytic solution of `problem`.
///
/// Fixed-point recurrence: with the jet `y` known to order `k`,
/// `w = phi(y) f + g` is exact to order `k`, and `y_{k+1} = w_k / (k + 1)`.
pub fn taylor_ivp_coeffs<T: Scalar>(
    problem: &ProblemSpec<T>,
    order: usize,
) -> Result<TaylorPoly<T>> {
    if order < 1 {
        return Err(Error::InvalidArgument("Taylor order must be >= 1".into()));
    }
    let t0 = problem.t0;
    let f = problem.f.with_order(order);
    let g = problem.g.with_order(order);
    let mut y = TaylorPoly {
        center: t0,
        coeffs: vec![problem.y0],
    };
    for k in 0..order {
        let phi_y = problem
            .phi
            .compose(&y)
            .map_err(|_| Error::Divergence { order: k + 1 })?;
        // Only coefficient k of phi(y) f + g is new at this step.
        let mut wk = g.coeffs[k];
        for i in 0..=k {
            wk = wk + phi_y.coeffs[i] * f.coeffs[k - i];
        }
        let next = wk / T::from_usize_exact(k + 1);
        if !next.is_finite() {
            return Err(Error::Divergence { order: k + 1 });
        }
        y.coeffs.push(next);
    }
    Ok(y)
}
