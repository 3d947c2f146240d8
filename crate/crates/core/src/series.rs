//! Scalar solution read off the first row of the system solution.
//!
//! `y(t) = sum_j beta[j] u^j + int_{t0}^{t} g`, with `u = F(t) = int_{t0}^{t} f`
//! and `beta[j] = prod_a[j] c[j] / j!`.

use crate::cascade::CascadeInit;
use crate::error::{Error, Result};
use crate::oracles::ExampleId;
use crate::scalar::Scalar;
use crate::taylor::{horner, ProblemSpec, TaylorPoly};

/// Number of trailing coefficients the radius estimator looks at.
pub const RADIUS_WINDOW: usize = 5;

/// Radius of convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius<T> {
    Finite(T),
    Infinite,
    /// Too few nonzero tail coefficients to say anything.
    Indeterminate,
}

impl<T: Scalar> Radius<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Self::Finite(r) => Some(r),
            _ => None,
        }
    }

    /// `true` when `|u|` lies in the open disk (always for an infinite radius,
    /// never for an indeterminate one).
    pub fn contains(self, u: T) -> bool {
        match self {
            Self::Finite(r) => u.abs() < r,
            Self::Infinite => true,
            Self::Indeterminate => false,
        }
    }
}

/// Windowed Cauchy-Hadamard estimate `1 / max_j |beta_j|^{1/j}` over the last
/// [`RADIUS_WINDOW`] coefficients.
pub fn radius_estimate<T: Scalar>(coeffs: &[T]) -> Result<Radius<T>> {
    if coeffs.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "radius estimation needs at least 8 coefficients, got {}",
            coeffs.len()
        )));
    }
    let negligible = <T as num_traits::NumCast>::from(1e-300)
        .unwrap_or_else(T::zero)
        .max(T::min_positive_value());
    let start = coeffs.len() - RADIUS_WINDOW;
    let roots: Vec<T> = coeffs[start..]
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() >= negligible)
        .map(|(k, c)| c.abs().powf(T::one() / T::from_usize_exact(start + k)))
        .collect();
    Ok(match roots.len() {
        0 => Radius::Infinite,
        1 | 2 => Radius::Indeterminate,
        _ => {
            let limsup = roots.into_iter().fold(T::zero(), T::max);
            Radius::Finite(T::one() / limsup)
        }
    })
}

/// Reconstructed series solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution<T> {
    t0: T,
    u_coeffs: Vec<T>,
    f_antideriv: TaylorPoly<T>,
    g_antideriv: TaylorPoly<T>,
    radius_u: Radius<T>,
    problem: ProblemSpec<T>,
}

/// A series value together with whether `t` was inside the estimated disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub value: T,
    pub outside_disk: bool,
}

/// Connected t-interval around `t0` mapped from the u-disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMap<T> {
    pub lower: T,
    pub upper: T,
    /// Known one-sided extension of the closed form for the built-in examples.
    pub extension_note: Option<String>,
}

/// `beta[0] = c[0]`, `beta[j] = prod_a[j] c[j] / j!`.
pub fn first_row_series<T: Scalar>(
    init: &CascadeInit<T>,
    problem: &ProblemSpec<T>,
    n: usize,
) -> Result<SeriesSolution<T>> {
    if init.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "cascade of dimension {} does not match N = {n}",
            init.dim()
        )));
    }
    let a = init.gauge().coefficients();
    let c = init.c();
    let mut u_coeffs = Vec::with_capacity(n);
    u_coeffs.push(c[0]);
    // q = prod_a[j] / j!
    let mut q = T::one();
    for j in 1..n {
        q = q * a[j - 1] / T::from_usize_exact(j);
        u_coeffs.push(q * c[j]);
    }
    let radius_u = if n >= 8 {
        radius_estimate(&u_coeffs)?
    } else {
        Radius::Indeterminate
    };
    Ok(SeriesSolution {
        t0: problem.t0(),
        u_coeffs,
        f_antideriv: problem.f_antiderivative(),
        g_antideriv: problem.g_antiderivative(),
        radius_u,
        problem: problem.clone(),
    })
}

impl<T: Scalar> SeriesSolution<T> {
    pub fn t0(&self) -> T {
        self.t0
    }

    /// Coefficients in `u = F(t)`.
    pub fn u_coeffs(&self) -> &[T] {
        &self.u_coeffs
    }

    pub fn g_antideriv(&self) -> &TaylorPoly<T> {
        &self.g_antideriv
    }

    pub fn radius_u(&self) -> Radius<T> {
        self.radius_u
    }

    pub fn problem(&self) -> &ProblemSpec<T> {
        &self.problem
    }

    /// `u = F(t)`.
    pub fn substitution(&self, t: T) -> Result<T> {
        self.f_antideriv.eval(t)
    }

    pub fn evaluate(&self, t: T) -> Result<Evaluation<T>> {
        let u = self.substitution(t)?;
        let value = horner(&self.u_coeffs, u) + self.g_antideriv.eval(t)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("series evaluation"));
        }
        Ok(Evaluation {
            value,
            outside_disk: !self.radius_u.contains(u),
        })
    }

    /// Taylor coefficients in `t - t0` up to `order`, obtained by substituting
    /// the jet of `F` into the u-series and adding the forcing antiderivative.
    pub fn t_expansion(&self, order: usize) -> Result<TaylorPoly<T>> {
        let outer = TaylorPoly::new(T::zero(), self.u_coeffs.clone())?;
        let inner = self.f_antideriv.with_order(order);
        let composed = outer.compose_poly(&inner);
        composed.try_add(&self.g_antideriv.with_order(order))
    }

    /// The t-interval containing `t0` on which `|F(t)| < radius_u`.
    pub fn domain_map(&self) -> Result<DomainMap<T>> {
        let note =
            ExampleId::identify(&self.problem).and_then(|id| id.extension_note(self.problem.y0()));
        let radius = match self.radius_u {
            Radius::Indeterminate => return Err(Error::IndeterminateRadius),
            Radius::Infinite => None,
            Radius::Finite(r) => Some(r),
        };
        let unbounded = DomainMap {
            lower: T::neg_infinity(),
            upper: T::infinity(),
            extension_note: note.clone(),
        };
        let Some(radius) = radius else {
            return Ok(unbounded);
        };
        let p = self.f_antideriv.coeffs();
        let degree = self.f_antideriv.degree();
        if degree == 0 {
            return Ok(unbounded);
        }
        // Cauchy bound on the roots of F(x) -/+ radius.
        let lead = p[degree].abs();
        let cauchy = p[..degree].iter().map(|c| c.abs()).fold(radius, T::max) / lead + T::one();
        let reach = |sign: T| -> T {
            let f = |x: T| horner(p, sign * x).abs() - radius;
            let steps = 4096usize;
            let h = cauchy * T::lit(1.01) / T::from_usize_exact(steps);
            let mut lo = T::zero();
            let mut hi = h;
            for k in 1..=steps {
                hi = h * T::from_usize_exact(k);
                if f(hi) >= T::zero() {
                    break;
                }
                lo = hi;
            }
            for _ in 0..200 {
                if hi - lo <= T::lit(1e-12) {
                    break;
                }
                let mid = (lo + hi) * T::lit(0.5);
                if f(mid) >= T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (lo + hi) * T::lit(0.5)
        };
        Ok(DomainMap {
            lower: self.t0 - reach(-T::one()),
            upper: self.t0 + reach(T::one()),
            extension_note: note,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{initial_auxiliary_values, Gauge};
    use crate::taylor::{taylor_ivp_coeffs, PhiSpec};

    fn solution(problem: &ProblemSpec<f64>, gauge: Gauge<f64>, n: usize) -> SeriesSolution<f64> {
        let init = initial_auxiliary_values(problem, &gauge, n).unwrap();
        first_row_series(&init, problem, n).unwrap()
    }

    fn ex2(y0: f64) -> ProblemSpec<f64> {
        ProblemSpec::autonomous(0.0, y0, PhiSpec::PowerFunction(2)).unwrap()
    }

    fn ex3(y0: f64) -> ProblemSpec<f64> {
        ProblemSpec::autonomous(0.0, y0, PhiSpec::Exponential).unwrap()
    }

    fn ex4(y0: f64) -> ProblemSpec<f64> {
        let f = TaylorPoly::new(0.0, vec![0.0, 1.0]).unwrap();
        ProblemSpec::new(0.0, y0, PhiSpec::PowerFunction(2), Some(f), None).unwrap()
    }

    #[test]
    fn first_row_examples() {
        let s = solution(&ex2(0.5), Gauge::PaperPower, 10);
        for (j, b) in s.u_coeffs().iter().enumerate() {
            assert!((b - 0.5f64.powi(j as i32 + 1)).abs() < 1e-16);
        }
        let s = solution(&ex3(0.0), Gauge::PaperExp, 10);
        assert_eq!(s.u_coeffs()[0], 0.0);
        for j in 1..10 {
            assert!((s.u_coeffs()[j] - 1.0 / j as f64).abs() < 1e-15);
        }
        let s = solution(&ex4(1.0), Gauge::PaperPower, 10);
        assert!(s.u_coeffs().iter().all(|b| (b - 1.0).abs() < 1e-15));
    }

    #[test]
    fn evaluate_examples() {
        let s = solution(&ex2(0.5), Gauge::PaperPower, 40);
        assert!((s.evaluate(1.0).unwrap().value - 1.0).abs() < 1e-8);
        assert_eq!(s.evaluate(0.0).unwrap().value, 0.5);
        let s = solution(&ex3(0.0), Gauge::PaperExp, 40);
        let e = s.evaluate(0.5).unwrap();
        assert!((e.value - std::f64::consts::LN_2).abs() < 1e-8);
        assert!(!e.outside_disk);
    }

    #[test]
    fn evaluation_outside_disk_is_flagged() {
        let s = solution(&ex2(0.5), Gauge::PaperPower, 40);
        let e = s.evaluate(2.5).unwrap();
        assert!(e.outside_disk);
    }

    #[test]
    fn radius_examples() {
        let geometric: Vec<f64> = (0..40).map(|j| 0.5f64.powi(j + 1)).collect();
        let r = radius_estimate(&geometric).unwrap().finite().unwrap();
        assert!((r - 2.0).abs() < 0.2);

        let mut poly = vec![0.0; 12];
        poly[0] = 3.0;
        assert_eq!(radius_estimate(&poly).unwrap(), Radius::Infinite);

        let log: Vec<f64> = (0..40)
            .map(|j| if j == 0 { 0.0 } else { 1.0 / j as f64 })
            .collect();
        let r = radius_estimate(&log).unwrap().finite().unwrap();
        assert!((r - 1.0).abs() < 0.1);
    }

    #[test]
    fn radius_errors_and_indeterminate() {
        assert!(radius_estimate(&[1.0; 7]).is_err());
        let mut sparse = vec![0.0; 12];
        sparse[11] = 1.0;
        sparse[9] = 1.0;
        assert_eq!(radius_estimate(&sparse).unwrap(), Radius::Indeterminate);
    }

    #[test]
    fn domain_map_identity_substitution() {
        let mut s = solution(&ex2(0.5), Gauge::PaperPower, 20);
        s.radius_u = Radius::Finite(2.0);
        let d = s.domain_map().unwrap();
        assert!((d.lower + 2.0).abs() < 1e-10 && (d.upper - 2.0).abs() < 1e-10);
        assert!(d.extension_note.is_some());
    }

    #[test]
    fn domain_map_quadratic_substitution() {
        let s = solution(&ex4(1.0), Gauge::PaperPower, 60);
        let d = s.domain_map().unwrap();
        let edge = 2f64.sqrt();
        assert!(((d.upper - edge) / edge).abs() < 0.01, "{d:?}");
        assert!(((d.lower + edge) / edge).abs() < 0.01, "{d:?}");
    }

    #[test]
    fn domain_map_exponential_has_note() {
        let s = solution(&ex3(0.0), Gauge::PaperExp, 60);
        let d = s.domain_map().unwrap();
        assert!((d.upper - 1.0).abs() < 0.1 && (d.lower + 1.0).abs() < 0.1);
        assert!(d.extension_note.unwrap().contains("-inf"));
    }

    #[test]
    fn domain_map_indeterminate() {
        let mut s = solution(&ex2(0.5), Gauge::PaperPower, 20);
        s.radius_u = Radius::Indeterminate;
        assert!(matches!(s.domain_map(), Err(Error::IndeterminateRadius)));
    }

    #[test]
    fn t_expansion_matches_taylor_route() {
        // y' = y^2 t: expand the u-series in t and compare with the direct
        // Taylor recurrence.
        let p = ex4(0.7);
        let s = solution(&p, Gauge::PaperPower, 20);
        let direct = taylor_ivp_coeffs(&p, 19).unwrap();
        let via_u = s.t_expansion(19).unwrap();
        for (a, b) in via_u.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
    }
}
