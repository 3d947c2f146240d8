//! Ground truth: closed-form solutions of the four worked examples, an
//! adaptive Dormand-Prince 5(4) integrator, and grid error reports.

use std::fmt;

use crate::cascade::Gauge;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::SeriesSolution;
use crate::taylor::{PhiSpec, ProblemSpec, TaylorPoly};

/// The four worked examples, all with `t0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// `y' = y - t`
    Ex1LinearForced,
    /// `y' = y^2`
    Ex2Quadratic,
    /// `y' = e^y`
    Ex3Exponential,
    /// `y' = y^2 t`
    Ex4QuadraticTimesT,
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        Self::Ex1LinearForced,
        Self::Ex2Quadratic,
        Self::Ex3Exponential,
        Self::Ex4QuadraticTimesT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ex1LinearForced => "ex1",
            Self::Ex2Quadratic => "ex2",
            Self::Ex3Exponential => "ex3",
            Self::Ex4QuadraticTimesT => "ex4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == name)
    }

    pub fn equation(self) -> &'static str {
        match self {
            Self::Ex1LinearForced => "y' = y - t",
            Self::Ex2Quadratic => "y' = y^2",
            Self::Ex3Exponential => "y' = e^y",
            Self::Ex4QuadraticTimesT => "y' = y^2 t",
        }
    }

    pub fn problem<T: Scalar>(self, y0: T) -> Result<ProblemSpec<T>> {
        let zero = T::zero();
        let linear = || TaylorPoly::new(zero, vec![zero, T::one()]);
        match self {
            Self::Ex1LinearForced => ProblemSpec::new(
                zero,
                y0,
                PhiSpec::Polynomial(vec![zero, T::one()]),
                None,
                Some(linear()?.scale(-T::one())),
            ),
            Self::Ex2Quadratic => ProblemSpec::autonomous(zero, y0, PhiSpec::PowerFunction(2)),
            Self::Ex3Exponential => ProblemSpec::autonomous(zero, y0, PhiSpec::Exponential),
            Self::Ex4QuadraticTimesT => {
                ProblemSpec::new(zero, y0, PhiSpec::PowerFunction(2), Some(linear()?), None)
            }
        }
    }

    pub fn preset_gauge<T>(self) -> Gauge<T> {
        match self {
            Self::Ex1LinearForced => Gauge::Unit,
            Self::Ex2Quadratic | Self::Ex4QuadraticTimesT => Gauge::PaperPower,
            Self::Ex3Exponential => Gauge::PaperExp,
        }
    }

    pub fn preset_y0(self) -> f64 {
        match self {
            Self::Ex1LinearForced => 2.0,
            Self::Ex2Quadratic => 0.5,
            Self::Ex3Exponential => 0.0,
            Self::Ex4QuadraticTimesT => 1.0,
        }
    }

    /// Radius in t of the disk on which the power series converges; `None`
    /// when it converges everywhere.
    pub fn series_disk<T: Scalar>(self, y0: T) -> Option<T> {
        match self {
            Self::Ex1LinearForced => None,
            Self::Ex2Quadratic => (!y0.is_zero()).then(|| T::one() / y0.abs()),
            Self::Ex3Exponential => Some((-y0).exp()),
            Self::Ex4QuadraticTimesT => (!y0.is_zero()).then(|| (T::lit(2.0) / y0.abs()).sqrt()),
        }
    }

    /// Where the closed form continues past the series disk.
    pub fn extension_note<T: Scalar>(self, y0: T) -> Option<String> {
        let y0 = y0.to_f64_lossy();
        match self {
            Self::Ex1LinearForced => None,
            Self::Ex2Quadratic if y0 > 0.0 => {
                Some(format!("closed form extends to (-inf, {})", 1.0 / y0))
            }
            Self::Ex2Quadratic if y0 < 0.0 => {
                Some(format!("closed form extends to ({}, +inf)", 1.0 / y0))
            }
            Self::Ex2Quadratic => Some("trivial solution y = 0 on the whole line".into()),
            Self::Ex3Exponential => Some(format!("closed form extends to (-inf, {})", (-y0).exp())),
            Self::Ex4QuadraticTimesT if y0 > 0.0 => None,
            Self::Ex4QuadraticTimesT => {
                Some("closed form is defined for every real t when y0 <= 0".into())
            }
        }
    }

    /// Recognises a built-in example by the shape of its problem.
    pub fn identify<T: Scalar>(problem: &ProblemSpec<T>) -> Option<Self> {
        if !problem.t0().is_zero() {
            return None;
        }
        let f = problem.f();
        let g = problem.g();
        let f_is_t = f.degree() == 1 && f.coeff(0).is_zero() && f.coeff(1) == T::one();
        let g_is_minus_t = g.degree() == 1 && g.coeff(0).is_zero() && g.coeff(1) == -T::one();
        let is_square = match problem.phi() {
            PhiSpec::PowerFunction(2) => true,
            PhiSpec::Polynomial(p) => poly_is(p, &[0.0, 0.0, 1.0]),
            _ => false,
        };
        let is_identity = match problem.phi() {
            PhiSpec::PowerFunction(1) => true,
            PhiSpec::Polynomial(p) => poly_is(p, &[0.0, 1.0]),
            _ => false,
        };
        let is_exp = matches!(problem.phi(), PhiSpec::Exponential);
        let unity = problem.f_is_unity();
        let no_forcing = g.is_zero_poly();
        if is_identity && unity && g_is_minus_t {
            Some(Self::Ex1LinearForced)
        } else if is_square && unity && no_forcing {
            Some(Self::Ex2Quadratic)
        } else if is_exp && unity && no_forcing {
            Some(Self::Ex3Exponential)
        } else if is_square && f_is_t && no_forcing {
            Some(Self::Ex4QuadraticTimesT)
        } else {
            None
        }
    }
}

fn poly_is<T: Scalar>(p: &[T], target: &[f64]) -> bool {
    let len = p.len().max(target.len());
    (0..len).all(|k| {
        let a = p.get(k).copied().unwrap_or_else(T::zero);
        let b = target.get(k).copied().unwrap_or(0.0);
        a == T::lit(b)
    })
}

/// Closed-form solution of a worked example on the branch through `t = 0`.
pub fn closed_form<T: Scalar>(id: ExampleId, y0: T, t: T) -> Result<T> {
    let out_of_domain = |condition| {
        Err(Error::OutOfDomain {
            example: id.name(),
            condition,
            t: t.to_f64_lossy(),
        })
    };
    let one = T::one();
    match id {
        ExampleId::Ex1LinearForced => Ok((y0 - one) * t.exp() + t + one),
        ExampleId::Ex2Quadratic => {
            let d = one - y0 * t;
            if d <= T::zero() {
                return out_of_domain("1 - y0 t > 0");
            }
            Ok(y0 / d)
        }
        ExampleId::Ex3Exponential => {
            let d = (-y0).exp() - t;
            if d <= T::zero() {
                return out_of_domain("t < e^(-y0)");
            }
            Ok(-d.ln())
        }
        ExampleId::Ex4QuadraticTimesT => {
            let two = T::lit(2.0);
            let d = two - y0 * t * t;
            if d <= T::zero() {
                return out_of_domain("2 - y0 t^2 > 0");
            }
            Ok(two * y0 / d)
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

/// `y(t)` by adaptive Dormand-Prince 5(4) with the per-step error held below
/// `tol (1 + |y|)`.
pub fn rk_reference<T: Scalar>(problem: &ProblemSpec<T>, t: T, tol: T) -> Result<T> {
    if !(tol >= T::lit(1e-13) && tol <= T::lit(1e-3)) {
        return Err(Error::InvalidArgument(
            "rk tolerance must lie in [1e-13, 1e-3]".into(),
        ));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("rk target"));
    }
    let t0 = problem.t0();
    let span = t - t0;
    if span.is_zero() {
        return Ok(problem.y0());
    }
    let dir = span.signum();
    let min_step = span.abs() * T::lit(1e-14);
    let c: Vec<T> = C.iter().map(|&x| T::lit(x)).collect();
    let a: Vec<Vec<T>> = A
        .iter()
        .map(|row| row.iter().map(|&x| T::lit(x)).collect())
        .collect();
    let e: Vec<T> = E.iter().map(|&x| T::lit(x)).collect();

    let mut tc = t0;
    let mut y = problem.y0();
    let mut h = span.abs() * T::lit(1e-2);
    let mut k = [T::zero(); 7];
    k[0] = problem.rhs(tc, y);
    for _ in 0..MAX_STEPS {
        let remaining = (t - tc).abs();
        if remaining <= T::zero() {
            return Ok(y);
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        if !last && step < min_step {
            return Err(Error::BlowUpSuspected {
                t: tc.to_f64_lossy(),
            });
        }
        let hs = dir * step;
        for s in 1..7 {
            let mut acc = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc = acc + hs * a[s][j] * *kj;
            }
            k[s] = problem.rhs(tc + c[s] * hs, acc);
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        let mut y_new = y;
        for j in 0..6 {
            y_new = y_new + hs * a[6][j] * k[j];
        }
        k[6] = problem.rhs(tc + hs, y_new);
        let mut err = T::zero();
        for j in 0..7 {
            err = err + e[j] * k[j];
        }
        let err = (hs * err).abs();
        let scale = tol * (T::one() + y.abs().max(y_new.abs()));
        let ratio = err / scale;
        if !ratio.is_finite() || !y_new.is_finite() {
            h = step * T::lit(0.2);
            if h < min_step {
                return Err(Error::BlowUpSuspected {
                    t: tc.to_f64_lossy(),
                });
            }
            continue;
        }
        if ratio <= T::one() {
            tc = if last { t } else { tc + hs };
            y = y_new;
            k[0] = k[6];
        }
        let factor = if ratio.is_zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * ratio.powf(T::lit(-0.2)))
                .max(T::lit(0.2))
                .min(T::lit(5.0))
        };
        h = step * factor;
    }
    Err(Error::BlowUpSuspected {
        t: tc.to_f64_lossy(),
    })
}

/// Series versus reference at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointError<T> {
    pub t: T,
    pub y_series: Option<T>,
    pub y_ref: Option<T>,
    pub abs_err: Option<T>,
    /// Why the point was excluded from the maxima.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport<T> {
    pub grid: Vec<T>,
    pub max_abs_err: T,
    pub max_rel_err: T,
    pub per_point: Vec<PointError<T>>,
}

impl<T: Scalar> ErrorReport<T> {
    pub fn flagged(&self) -> impl Iterator<Item = &PointError<T>> {
        self.per_point.iter().filter(|p| p.flag.is_some())
    }
}

/// Evaluates series and oracle on `grid`. Points where either side fails are
/// flagged and left out of the maxima; relative errors use
/// `max(|y_ref|, 1e-12)` as denominator.
pub fn compare<T, F>(series: &SeriesSolution<T>, oracle: F, grid: &[T]) -> Result<ErrorReport<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<T>,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("comparison grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("comparison grid"));
    }
    let floor = T::lit(1e-12);
    let mut max_abs_err = T::zero();
    let mut max_rel_err = T::zero();
    let per_point = grid
        .iter()
        .map(|&t| {
            let y_series = series.evaluate(t).map(|e| e.value);
            let y_ref = oracle(t);
            match (y_series, y_ref) {
                (Ok(ys), Ok(yr)) => {
                    let abs_err = (ys - yr).abs();
                    max_abs_err = max_abs_err.max(abs_err);
                    max_rel_err = max_rel_err.max(abs_err / yr.abs().max(floor));
                    PointError {
                        t,
                        y_series: Some(ys),
                        y_ref: Some(yr),
                        abs_err: Some(abs_err),
                        flag: None,
                    }
                }
                (ys, yr) => {
                    let flag = [ys.as_ref().err(), yr.as_ref().err()]
                        .into_iter()
                        .flatten()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("; ");
                    PointError {
                        t,
                        y_series: ys.ok(),
                        y_ref: yr.ok(),
                        abs_err: None,
                        flag: Some(flag),
                    }
                }
            }
        })
        .collect();
    Ok(ErrorReport {
        grid: grid.to_vec(),
        max_abs_err,
        max_rel_err,
        per_point,
    })
}

/// `count` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_exact(count - 1);
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        hi
                    } else {
                        lo + step * T::from_usize_exact(k)
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::initial_auxiliary_values;
    use crate::series::first_row_series;

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form(ExampleId::Ex2Quadratic, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(
            closed_form(ExampleId::Ex2Quadratic, 0.0, 17.0).unwrap(),
            0.0
        );
        assert_eq!(
            closed_form(ExampleId::Ex4QuadraticTimesT, 1.0, 1.0).unwrap(),
            2.0
        );
        let e1 = closed_form(ExampleId::Ex1LinearForced, 2.0, 1.0).unwrap();
        assert!((e1 - (std::f64::consts::E + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_domain_errors() {
        assert!(matches!(
            closed_form(ExampleId::Ex2Quadratic, 0.5, 2.0),
            Err(Error::OutOfDomain { example: "ex2", .. })
        ));
        assert!(closed_form(ExampleId::Ex3Exponential, 0.0, 1.0).is_err());
        assert!(closed_form(ExampleId::Ex4QuadraticTimesT, 1.0, 1.5).is_err());
        assert!(closed_form(ExampleId::Ex4QuadraticTimesT, -1.0, 10.0).is_ok());
    }

    #[test]
    fn ex4_is_ex2_under_substitution() {
        for y0 in [-0.5, 0.5, 1.0] {
            for k in 0..=20 {
                let t = -1.0 + 0.1 * k as f64;
                let a = closed_form(ExampleId::Ex4QuadraticTimesT, y0, t).unwrap();
                let b = closed_form(ExampleId::Ex2Quadratic, y0, t * t / 2.0).unwrap();
                assert!((a - b).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn ex3_initial_condition() {
        for y0 in [-2.0f64, -0.3, 0.0, 0.7, 3.0] {
            assert!((closed_form(ExampleId::Ex3Exponential, y0, 0.0).unwrap() - y0).abs() < 1e-15);
        }
    }

    #[test]
    fn identify_round_trips() {
        for id in ExampleId::ALL {
            let p = id.problem(0.5).unwrap();
            assert_eq!(ExampleId::identify(&p), Some(id));
            assert_eq!(ExampleId::from_name(id.name()), Some(id));
        }
        let other = ProblemSpec::autonomous(0.0, 0.5, PhiSpec::PowerFunction(3)).unwrap();
        assert_eq!(ExampleId::identify(&other), None);
    }

    #[test]
    fn rk_examples() {
        let ex2 = ExampleId::Ex2Quadratic.problem(0.5f64).unwrap();
        assert!((rk_reference(&ex2, 1.0, 1e-10).unwrap() - 1.0).abs() < 1e-8);
        let zero = ProblemSpec::autonomous(0.0, 0.37, PhiSpec::Polynomial(vec![0.0])).unwrap();
        assert_eq!(rk_reference(&zero, 3.0, 1e-8).unwrap(), 0.37);
        let ex3 = ExampleId::Ex3Exponential.problem(0.0).unwrap();
        assert!((rk_reference(&ex3, 0.5, 1e-10).unwrap() - std::f64::consts::LN_2).abs() < 1e-8);
    }

    #[test]
    fn rk_rejects_bad_tolerance() {
        let p = ExampleId::Ex2Quadratic.problem(0.5).unwrap();
        assert!(rk_reference(&p, 1.0, 1e-2).is_err());
        assert!(rk_reference(&p, 1.0, 1e-15).is_err());
    }

    #[test]
    fn rk_detects_blow_up() {
        let p = ExampleId::Ex2Quadratic.problem(1.0).unwrap();
        assert!(matches!(
            rk_reference(&p, 1.5, 1e-8),
            Err(Error::BlowUpSuspected { .. })
        ));
    }

    #[test]
    fn rk_agrees_with_closed_forms_on_half_domains() {
        let tol = 1e-10f64;
        for id in ExampleId::ALL {
            for y0 in [-1.0, 0.5, 1.0] {
                let p = id.problem(y0).unwrap();
                let half = id.series_disk(y0).unwrap_or(2.0) / 2.0;
                for t in linspace(-half, half, 11) {
                    let exact = closed_form(id, y0, t).unwrap();
                    let approx = rk_reference(&p, t, tol).unwrap();
                    assert!(
                        (approx - exact).abs() <= 10.0 * tol,
                        "{id} y0={y0} t={t}: {}",
                        (approx - exact).abs()
                    );
                }
            }
        }
    }

    fn ex2_series(n: usize) -> SeriesSolution<f64> {
        let p = ExampleId::Ex2Quadratic.problem(0.5).unwrap();
        let init = initial_auxiliary_values(&p, &Gauge::PaperPower, n).unwrap();
        first_row_series(&init, &p, n).unwrap()
    }

    #[test]
    fn compare_identical_is_zero() {
        let s = ex2_series(10);
        let r = compare(
            &s,
            |t| s.evaluate(t).map(|e| e.value),
            &linspace(-0.5, 0.5, 5),
        )
        .unwrap();
        assert_eq!(r.max_abs_err, 0.0);
        assert_eq!(r.flagged().count(), 0);
    }

    #[test]
    fn compare_ex2_half_domain() {
        let s = ex2_series(40);
        let grid = linspace(-0.5, 0.5, 21);
        let r = compare(&s, |t| closed_form(ExampleId::Ex2Quadratic, 0.5, t), &grid).unwrap();
        assert!(r.max_abs_err <= 1e-10);
        assert_eq!(r.per_point.len(), 21);
    }

    #[test]
    fn compare_flags_oracle_failures() {
        let s = ex2_series(40);
        let grid = [0.0, 0.5, 2.5];
        let r = compare(&s, |t| closed_form(ExampleId::Ex2Quadratic, 0.5, t), &grid).unwrap();
        let flagged: Vec<_> = r.flagged().collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].t, 2.5);
        let expect = r
            .per_point
            .iter()
            .filter_map(|p| p.abs_err)
            .fold(0.0, f64::max);
        assert_eq!(r.max_abs_err, expect);
        assert!(compare(&s, |_| Ok(0.0), &[]).is_err());
        assert!(compare(&s, |_| Ok(0.0), &[f64::NAN]).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0f64, 1.0, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[20], 1.0);
        assert!((g[10]).abs() < 1e-16);
    }
}
