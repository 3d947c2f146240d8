//! The truncated superdiagonal system `X' = A f(t) X + b(t)` and its solution
//! by the nilpotent matrix exponential and variation of constants.

use crate::cascade::CascadeInit;
use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};
use crate::taylor::{ProblemSpec, TaylorPoly};

/// Square matrix whose only nonzeros are `(j, j+1) = superdiag[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperdiagonalMatrix<T> {
    superdiag: Vec<T>,
}

impl<T: Field> SuperdiagonalMatrix<T> {
    pub fn new(superdiag: Vec<T>) -> Self {
        Self { superdiag }
    }

    pub fn dim(&self) -> usize {
        self.superdiag.len() + 1
    }

    pub fn superdiag(&self) -> &[T] {
        &self.superdiag
    }

    /// Induced infinity norm; each row holds at most one entry.
    pub fn max_row_sum_norm(&self) -> T {
        self.superdiag
            .iter()
            .map(|a| a.abs())
            .fold(T::zero(), |m, a| if a > m { a } else { m })
    }

    /// `a[i] * a[i+1] * ... * a[i+m-1]`, multiplied left to right.
    fn run_product(&self, i: usize, m: usize) -> T {
        self.superdiag[i..i + m]
            .iter()
            .fold(T::one(), |acc, &a| acc * a)
    }

    pub fn to_dense(&self) -> DenseUpperTriangular<T> {
        matrix_power(self, 1)
    }
}

/// Upper-triangular matrix in packed row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUpperTriangular<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Field> DenseUpperTriangular<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![T::zero(); dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.dim);
        // Row i starts after sum_{r<i} (dim - r) slots.
        i * self.dim + j - i * (i + 1) / 2
    }

    /// Entry `(i, j)`; zero below the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i > j {
            T::zero()
        } else {
            self.entries[self.index(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i <= j, "entry ({i}, {j}) is below the diagonal");
        let k = self.index(i, j);
        self.entries[k] = value;
    }

    /// Matrix product of two upper-triangular matrices of the same size.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = T::zero();
                for k in i..=j {
                    acc = acc + self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector of length {} against a {}x{} matrix",
                x.len(),
                self.dim,
                self.dim
            )));
        }
        Ok((0..self.dim)
            .map(|i| (i..self.dim).fold(T::zero(), |acc, j| acc + self.get(i, j) * x[j]))
            .collect())
    }

    pub fn max_row_sum_norm(&self) -> T {
        (0..self.dim)
            .map(|i| (i..self.dim).fold(T::zero(), |acc, j| acc + self.get(i, j).abs()))
            .fold(T::zero(), |m, r| if r > m { r } else { m })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), |m, d| if d > m { d } else { m })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Iterator over `(i, j, value)` for every stored entry.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.dim).flat_map(move |i| (i..self.dim).map(move |j| (i, j, self.get(i, j))))
    }
}

/// `s^m / m!` for `m = 0..count`, each as the product `(s/1)(s/2)...(s/m)`.
fn powers_over_factorial<T: Field>(s: T, count: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    let mut acc = T::one();
    for m in 0..count {
        if m > 0 {
            acc = acc * (s / T::from_usize_exact(m));
        }
        out.push(acc);
    }
    out
}

/// `A^p`: the `p`-th superdiagonal holds the products of `p` consecutive
/// superdiagonal entries, everything else is zero.
pub fn matrix_power<T: Field>(a: &SuperdiagonalMatrix<T>, p: usize) -> DenseUpperTriangular<T> {
    let n = a.dim();
    let mut out = DenseUpperTriangular::zeros(n);
    for i in 0..n.saturating_sub(p) {
        out.set(i, i + p, a.run_product(i, p));
    }
    out
}

/// Exact `e^{A s}`: entry `(i, i+m)` is `a[i]...a[i+m-1] s^m / m!`.
pub fn expm_superdiag<T: Field>(a: &SuperdiagonalMatrix<T>, s: T) -> DenseUpperTriangular<T> {
    let n = a.dim();
    let scaled = powers_over_factorial(s, n);
    let mut out = DenseUpperTriangular::zeros(n);
    for i in 0..n {
        let mut prod = T::one();
        for (m, &coef) in scaled.iter().take(n - i).enumerate() {
            if m > 0 {
                prod = prod * a.superdiag[i + m - 1];
            }
            out.set(i, i + m, prod * coef);
        }
    }
    out
}

/// Partial sum `S_n(A s) = sum_{j<n} (A s)^j / j!` and a bound on the tail
/// `sum_{j>=n} ||A s||^j / j!` in the max-row-sum norm.
pub fn expm_series<T: Scalar>(
    a: &SuperdiagonalMatrix<T>,
    s: T,
    n: usize,
) -> Result<(DenseUpperTriangular<T>, T)> {
    if n < 1 {
        return Err(Error::InvalidArgument("series needs n >= 1 terms".into()));
    }
    let dim = a.dim();
    let scaled = powers_over_factorial(s, n.min(dim));
    let mut sum = DenseUpperTriangular::zeros(dim);
    for (j, &coef) in scaled.iter().enumerate() {
        let power = matrix_power(a, j);
        for i in 0..dim - j {
            let k = sum.index(i, i + j);
            sum.entries[k] = sum.entries[k] + power.get(i, i + j) * coef;
        }
    }
    let x = a.max_row_sum_norm() * s.abs();
    Ok((sum, exp_tail(x, n)))
}

/// `sum_{j>=n} x^j / j!` for `x >= 0`, inflated by a few ulps per term.
fn exp_tail<T: Scalar>(x: T, n: usize) -> T {
    if x.is_zero() {
        return T::zero();
    }
    let mut term = T::one();
    for j in 1..=n {
        term = term * (x / T::from_usize_exact(j));
    }
    let mut tail = T::zero();
    let mut j = n;
    loop {
        tail = tail + term;
        if !tail.is_finite() {
            return T::infinity();
        }
        j += 1;
        term = term * (x / T::from_usize_exact(j));
        // Once j > x the terms decay at least geometrically.
        if T::from_usize_exact(j) > x + T::one() && term <= tail * T::epsilon() * T::lit(0.25) {
            break;
        }
    }
    tail * (T::one() + T::lit(4.0) * T::from_usize_exact(j + 1) * T::epsilon())
}

/// The N-truncated system: `A f(t)` with `b(t) = (g(t), 0, ..., 0)` and
/// initial vector `C` at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSystem<T> {
    a: SuperdiagonalMatrix<T>,
    f_factor: TaylorPoly<T>,
    b0: TaylorPoly<T>,
    c: Vec<T>,
    t0: T,
}

impl<T: Scalar> TruncatedSystem<T> {
    pub fn matrix(&self) -> &SuperdiagonalMatrix<T> {
        &self.a
    }
    pub fn f_factor(&self) -> &TaylorPoly<T> {
        &self.f_factor
    }
    pub fn b0(&self) -> &TaylorPoly<T> {
        &self.b0
    }
    pub fn initial(&self) -> &[T] {
        &self.c
    }
    pub fn t0(&self) -> T {
        self.t0
    }
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// `F(t) = int_{t0}^{t} f(s) ds`.
    pub fn elapsed(&self, t: T) -> Result<T> {
        self.f_factor.integrate(T::zero()).eval(t)
    }

    fn forcing_integral(&self, t: T) -> Result<T> {
        self.b0.integrate(T::zero()).eval(t)
    }

    /// `E C + (int g, 0, ..., 0)`. `E(t - s)` is unit upper triangular, so its
    /// first column is `e_0` and `b` only feeds `x_0`.
    fn propagate(&self, e: &DenseUpperTriangular<T>, t: T) -> Result<Vec<T>> {
        let mut x = e.mul_vec(&self.c)?;
        x[0] = x[0] + self.forcing_integral(t)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("system solution"));
        }
        Ok(x)
    }
}

/// Closes the cascade by dropping `x_N` and beyond.
pub fn build_truncated_system<T: Scalar>(
    init: &CascadeInit<T>,
    problem: &ProblemSpec<T>,
    n: usize,
) -> Result<TruncatedSystem<T>> {
    if n < 2 || init.dim() != n || init.gauge().dim() != n {
        return Err(Error::InvalidArgument(format!(
            "cascade of dimension {} cannot form a system of dimension {n}",
            init.dim()
        )));
    }
    Ok(TruncatedSystem {
        a: SuperdiagonalMatrix::new(init.gauge().coefficients().to_vec()),
        f_factor: problem.f().clone(),
        b0: problem.g().clone(),
        c: init.c().to_vec(),
        t0: problem.t0(),
    })
}

/// `X(t) = e^{A (t - t0)} C + int_{t0}^{t} e^{A (t - s)} b(s) ds`.
pub fn solve_constant<T: Scalar>(sys: &TruncatedSystem<T>, t: T) -> Result<Vec<T>> {
    if !(sys.f_factor.is_constant() && sys.f_factor.coeffs()[0] == T::one()) {
        return Err(Error::WrongSolver);
    }
    let e = expm_superdiag(&sys.a, t - sys.t0);
    sys.propagate(&e, t)
}

/// `X(t) = e^{A F(t)} C + int_{t0}^{t} e^{A (F(t) - F(r))} b(r) dr`.
pub fn solve_timedep<T: Scalar>(sys: &TruncatedSystem<T>, t: T) -> Result<Vec<T>> {
    let e = expm_superdiag(&sys.a, sys.elapsed(t)?);
    sys.propagate(&e, t)
}

/// Approximant `X_n` obtained by replacing both exponentials with their
/// `n`-term partial sums; `X_0 = C`.
pub fn partial_sum_solution<T: Scalar>(sys: &TruncatedSystem<T>, t: T, n: usize) -> Result<Vec<T>> {
    if n == 0 {
        return Ok(sys.c.clone());
    }
    let (s, _) = expm_series(&sys.a, sys.elapsed(t)?, n)?;
    sys.propagate(&s, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{initial_auxiliary_values, Gauge};
    use crate::taylor::PhiSpec;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn power_gauge(n: usize) -> SuperdiagonalMatrix<f64> {
        SuperdiagonalMatrix::new((1..n).map(|j| j as f64).collect())
    }

    fn system(problem: &ProblemSpec<f64>, gauge: Gauge<f64>, n: usize) -> TruncatedSystem<f64> {
        let init = initial_auxiliary_values(problem, &gauge, n).unwrap();
        build_truncated_system(&init, problem, n).unwrap()
    }

    fn ex1(y0: f64) -> ProblemSpec<f64> {
        let g = TaylorPoly::new(0.0, vec![0.0, -1.0]).unwrap();
        ProblemSpec::new(0.0, y0, PhiSpec::Polynomial(vec![0.0, 1.0]), None, Some(g)).unwrap()
    }

    fn ex4(y0: f64) -> ProblemSpec<f64> {
        let f = TaylorPoly::new(0.0, vec![0.0, 1.0]).unwrap();
        ProblemSpec::new(0.0, y0, PhiSpec::PowerFunction(2), Some(f), None).unwrap()
    }

    #[test]
    fn packed_indexing_covers_every_slot() {
        for n in 1..8 {
            let m = DenseUpperTriangular::<f64>::zeros(n);
            let mut seen: Vec<usize> = m.iter().map(|(i, j, _)| m.index(i, j)).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..n * (n + 1) / 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn build_examples() {
        let ex2 = ProblemSpec::autonomous(0.0, 0.5, PhiSpec::PowerFunction(2)).unwrap();
        let sys = system(&ex2, Gauge::PaperPower, 3);
        assert_eq!(sys.matrix().superdiag(), &[1.0, 2.0]);
        assert_eq!(sys.initial(), &[0.5, 0.25, 0.125]);
        assert!(sys.f_factor().is_constant() && sys.f_factor().coeffs()[0] == 1.0);
        assert!(sys.b0().is_zero_poly());

        let sys = system(&ex1(2.0), Gauge::Unit, 3);
        assert_eq!(sys.matrix().superdiag(), &[1.0, 1.0]);
        assert_eq!(sys.b0().coeffs(), &[0.0, -1.0]);
        assert_eq!(sys.initial(), &[2.0, 2.0, 2.0]);

        let sys = system(&ex4(1.0), Gauge::PaperPower, 3);
        assert_eq!(sys.f_factor().coeffs(), &[0.0, 1.0]);
        assert_eq!(sys.matrix().superdiag(), &[1.0, 2.0]);
    }

    #[test]
    fn build_rejects_dimension_mismatch() {
        let ex2 = ProblemSpec::autonomous(0.0, 0.5, PhiSpec::PowerFunction(2)).unwrap();
        let init = initial_auxiliary_values(&ex2, &Gauge::Unit, 4).unwrap();
        assert!(build_truncated_system(&init, &ex2, 5).is_err());
    }

    #[test]
    fn square_of_power_gauge() {
        let a2 = matrix_power(&power_gauge(6), 2);
        assert_eq!(a2.get(0, 2), 2.0);
        assert_eq!(a2.get(1, 3), 6.0);
        assert_eq!(a2.get(2, 4), 12.0);
        assert_eq!(a2.get(3, 5), 20.0);
        assert_eq!(a2.iter().filter(|e| e.2 != 0.0).count(), 4);
    }

    #[test]
    fn power_zero_and_nilpotency() {
        let a = power_gauge(5);
        assert_eq!(matrix_power(&a, 0), DenseUpperTriangular::identity(5));
        assert!(matrix_power(&a, 5).is_zero());
        let direct = (1..=3).fold(DenseUpperTriangular::identity(5), |acc, _| {
            acc.matmul(&a.to_dense()).unwrap()
        });
        assert_eq!(direct, matrix_power(&a, 3));
    }

    #[test]
    fn expm_two_by_two() {
        let e = expm_superdiag(&SuperdiagonalMatrix::new(vec![1.0]), 0.7);
        assert_eq!((e.get(0, 0), e.get(0, 1), e.get(1, 1)), (1.0, 0.7, 1.0));
    }

    #[test]
    fn expm_first_rows_of_presets() {
        let t = 0.3;
        let e = expm_superdiag(&power_gauge(6), t);
        for m in 0..6 {
            assert!((e.get(0, m) - t.powi(m as i32)).abs() < 1e-16);
        }
        let exp_gauge = SuperdiagonalMatrix::new(vec![1.0, 1.0, 2.0, 3.0, 4.0]);
        let e = expm_superdiag(&exp_gauge, t);
        assert_eq!(e.get(0, 0), 1.0);
        for m in 1..6 {
            assert!((e.get(0, m) - t.powi(m as i32) / m as f64).abs() < 1e-16);
        }
    }

    #[test]
    fn series_examples() {
        let a = power_gauge(4);
        let (s1, bound1) = expm_series(&a, 0.5, 1).unwrap();
        assert_eq!(s1, DenseUpperTriangular::identity(4));
        let x = a.max_row_sum_norm() * 0.5;
        assert!(((bound1 - x.exp_m1()) / x.exp_m1()).abs() < 1e-13);
        assert!(bound1 >= x.exp_m1());

        let exact = expm_superdiag(&a, 0.5);
        let (s2, bound2) = expm_series(&a, 0.5, 2).unwrap();
        let mut first_order = DenseUpperTriangular::identity(4);
        for i in 0..3 {
            first_order.set(i, i + 1, a.superdiag()[i] * 0.5);
        }
        assert_eq!(s2, first_order);
        assert!(s2.max_abs_diff(&exact) <= bound2);

        for n in 4..8 {
            let (s, _) = expm_series(&a, 0.5, n).unwrap();
            assert!(s.max_abs_diff(&exact) <= 1e-13);
        }
        assert!(expm_series(&a, 0.5, 0).is_err());
    }

    #[test]
    fn rational_semigroup_is_exact() {
        type Q = Ratio<i128>;
        let a = SuperdiagonalMatrix::new((1..7).map(|k| Q::new(k, 3)).collect());
        let (s, u) = (Q::new(1, 2), Q::new(-2, 5));
        let lhs = expm_superdiag(&a, s)
            .matmul(&expm_superdiag(&a, u))
            .unwrap();
        assert_eq!(lhs, expm_superdiag(&a, s + u));
    }

    #[test]
    fn linear_forced_at_one() {
        let sys = system(&ex1(2.0), Gauge::Unit, 40);
        let x = solve_constant(&sys, 1.0).unwrap();
        let exact = std::f64::consts::E + 2.0;
        assert!((x[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn solution_at_t0_is_c() {
        let ex3 = ProblemSpec::autonomous(0.0, 0.3, PhiSpec::Exponential).unwrap();
        let sys = system(&ex3, Gauge::PaperExp, 10);
        assert_eq!(solve_constant(&sys, 0.0).unwrap(), sys.initial());
    }

    #[test]
    fn quadratic_at_one() {
        let ex2 = ProblemSpec::autonomous(0.0, 0.5, PhiSpec::PowerFunction(2)).unwrap();
        let sys = system(&ex2, Gauge::PaperPower, 40);
        assert!((solve_constant(&sys, 1.0).unwrap()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_quadratic() {
        let sys = system(&ex4(1.0), Gauge::PaperPower, 40);
        assert!(matches!(solve_constant(&sys, 1.0), Err(Error::WrongSolver)));
        assert!((solve_timedep(&sys, 1.0).unwrap()[0] - 2.0).abs() < 1e-7);
        let zero = system(&ex4(0.0), Gauge::PaperPower, 40);
        assert_eq!(solve_timedep(&zero, 0.8).unwrap()[0], 0.0);
    }

    #[test]
    fn timedep_reduces_to_constant() {
        let ex2 = ProblemSpec::autonomous(0.0, 0.5, PhiSpec::PowerFunction(2)).unwrap();
        let ex3 = ProblemSpec::autonomous(0.0, 0.0, PhiSpec::Exponential).unwrap();
        for (p, g) in [
            (ex1(2.0), Gauge::Unit),
            (ex2, Gauge::PaperPower),
            (ex3, Gauge::PaperExp),
        ] {
            let sys = system(&p, g, 30);
            for t in [-0.4, 0.1, 0.45] {
                let a = solve_constant(&sys, t).unwrap();
                let b = solve_timedep(&sys, t).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn partial_sums() {
        let ex2 = ProblemSpec::autonomous(0.0, 0.5, PhiSpec::PowerFunction(2)).unwrap();
        let sys = system(&ex2, Gauge::PaperPower, 20);
        assert_eq!(partial_sum_solution(&sys, 0.5, 0).unwrap(), sys.initial());
        let full = solve_constant(&sys, 0.5).unwrap();
        for n in 20..23 {
            let xn = partial_sum_solution(&sys, 0.5, n).unwrap();
            for (x, y) in xn.iter().zip(&full) {
                assert!((x - y).abs() <= 1e-13);
            }
        }
        let exact = 0.5 / (1.0 - 0.25);
        let errs: Vec<f64> = (1..=10)
            .map(|n| (partial_sum_solution(&sys, 0.5, n).unwrap()[0] - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn partial_sum_timedep_matches_full() {
        let sys = system(&ex4(1.0), Gauge::PaperPower, 12);
        let full = solve_timedep(&sys, 0.9).unwrap();
        let xn = partial_sum_solution(&sys, 0.9, 12).unwrap();
        for (x, y) in xn.iter().zip(&full) {
            assert!((x - y).abs() <= 1e-13);
        }
    }

    fn gauge_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            (0.5f64..2.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m }),
            1..12,
        )
    }

    proptest! {
        #[test]
        fn powers_live_on_one_superdiagonal(a in gauge_strategy()) {
            let a = SuperdiagonalMatrix::new(a);
            for p in 1..=a.dim() {
                let ap = matrix_power(&a, p);
                for (i, j, v) in ap.iter() {
                    if j != i + p {
                        prop_assert_eq!(v, 0.0);
                    } else {
                        prop_assert!(v != 0.0);
                    }
                }
            }
            prop_assert!(matrix_power(&a, a.dim()).is_zero());
        }

        #[test]
        fn semigroup(a in gauge_strategy(), s in -1.0f64..1.0, u in -1.0f64..1.0) {
            let a = SuperdiagonalMatrix::new(a);
            let lhs = expm_superdiag(&a, s).matmul(&expm_superdiag(&a, u)).unwrap();
            prop_assert!(lhs.max_abs_diff(&expm_superdiag(&a, s + u)) <= 1e-11);
        }

        #[test]
        fn norm_bound(a in gauge_strategy(), s in -1.0f64..1.0) {
            let a = SuperdiagonalMatrix::new(a);
            let lhs = expm_superdiag(&a, s).max_row_sum_norm();
            prop_assert!(lhs <= (a.max_row_sum_norm() * s.abs()).exp() + 1e-12);
        }

        #[test]
        fn remainder_bound_dominates(a in gauge_strategy(), s in -2.0f64..2.0, n in 1usize..14) {
            let a = SuperdiagonalMatrix::new(a);
            let (sn, bound) = expm_series(&a, s, n).unwrap();
            let exact = expm_superdiag(&a, s);
            prop_assert!(sn.max_abs_diff(&exact) <= bound);
            if n >= a.dim() {
                prop_assert!(sn.max_abs_diff(&exact) <= 1e-13);
            }
        }
    }
}
