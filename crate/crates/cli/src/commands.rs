//! Subcommand implementations. Each returns a [`Verdict`]; pipeline and
//! configuration failures surface as `Err` and map to exit code 1.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use carleman_core::{
    build_truncated_system, closed_form, compare, expm_series, expm_superdiag, first_row_series,
    initial_auxiliary_values, linspace, partial_sum_solution, resolve_gauge, rk_reference,
    solve_constant, solve_timedep, CascadeInit, ExampleId, Gauge, ProblemSpec, Radius,
    SeriesSolution, SuperdiagonalMatrix, TruncatedSystem,
};

use crate::config::{OracleSel, RunConfig};

/// Coefficients shown in the summary unless `--dump-coeffs` is given.
pub const SUMMARY_COEFFS: usize = 12;
pub const EXAMPLES_N: usize = 40;
pub const EXAMPLES_TOL: f64 = 1e-8;
pub const EXAMPLES_GRID_COUNT: usize = 21;
pub const MAX_EXPM_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A tolerance or validation check failed.
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Fail => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Cascade, reconstructed series and truncated linear system for one problem.
pub struct Pipeline {
    pub init: CascadeInit<f64>,
    pub series: SeriesSolution<f64>,
    pub system: TruncatedSystem<f64>,
}

impl Pipeline {
    pub fn build(problem: &ProblemSpec<f64>, gauge: &Gauge<f64>, n: usize) -> Result<Self> {
        let init = initial_auxiliary_values(problem, gauge, n).context("building the cascade")?;
        let series = first_row_series(&init, problem, n).context("reconstructing the series")?;
        let system =
            build_truncated_system(&init, problem, n).context("building the linear system")?;
        Ok(Self {
            init,
            series,
            system,
        })
    }

    /// Component 0 of the truncated system's solution.
    pub fn matrix_value(&self, t: f64) -> carleman_core::Result<f64> {
        let x = if self.series.problem().f_is_unity() {
            solve_constant(&self.system, t)?
        } else {
            solve_timedep(&self.system, t)?
        };
        Ok(x[0])
    }
}

/// Tolerance handed to the Runge–Kutta reference: two orders tighter than the
/// comparison tolerance, clamped to the integrator's accepted range.
pub fn rk_tolerance(tol: f64) -> f64 {
    (tol / 100.0).clamp(1e-13, 1e-3)
}

type OracleFn<'a> = Box<dyn Fn(f64) -> carleman_core::Result<f64> + 'a>;

fn oracle_fn<'a>(sel: OracleSel, problem: &'a ProblemSpec<f64>, tol: f64) -> Option<OracleFn<'a>> {
    match sel {
        OracleSel::None => None,
        OracleSel::ClosedForm(id) => {
            let y0 = problem.y0();
            Some(Box::new(move |t| closed_form(id, y0, t)))
        }
        OracleSel::Rk => {
            let rk_tol = rk_tolerance(tol);
            Some(Box::new(move |t| rk_reference(problem, t, rk_tol)))
        }
    }
}

fn oracle_label(sel: OracleSel) -> String {
    match sel {
        OracleSel::None => "none".into(),
        OracleSel::Rk => "rk (Dormand-Prince 5(4))".into(),
        OracleSel::ClosedForm(id) => format!("{} closed form, {}", id.name(), id.equation()),
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_radius(r: Radius<f64>) -> String {
    match r {
        Radius::Finite(r) => format!("{r:.6e}"),
        Radius::Infinite => "infinite".into(),
        Radius::Indeterminate => "indeterminate".into(),
    }
}

fn fmt_bound(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "+inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.6e}")
    }
}

/// Writes text to `path`, or to `fallback` when no path is given.
fn emit(path: Option<&Path>, text: &[u8], fallback: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => fallback.write_all(text).context("writing output"),
    }
}

/// Radius, mapped domain and note lines shared by `solve` and `radius`.
fn radius_lines(series: &SeriesSolution<f64>, out: &mut String) {
    let _ = writeln!(out, "radius (u): {}", fmt_radius(series.radius_u()));
    match series.domain_map() {
        Ok(d) => {
            let _ = writeln!(
                out,
                "t-domain: ({}, {})",
                fmt_bound(d.lower),
                fmt_bound(d.upper)
            );
            if let Some(note) = d.extension_note {
                let _ = writeln!(out, "note: {note}");
            }
        }
        Err(e) => {
            let _ = writeln!(out, "t-domain: unavailable ({e})");
        }
    }
}

fn problem_lines(cfg: &RunConfig, out: &mut String) {
    let p = &cfg.problem;
    let _ = writeln!(
        out,
        "problem: y' = phi(y) f(t) + g(t), t0 = {}, y0 = {}",
        p.t0(),
        p.y0()
    );
    let _ = writeln!(out, "phi: {:?}", p.phi());
    let _ = writeln!(out, "f: {:?}", p.f().coeffs());
    let _ = writeln!(out, "g: {:?}", p.g().coeffs());
    let _ = writeln!(out, "N: {}", cfg.n);
    let _ = writeln!(out, "gauge: {}", cfg.gauge.name());
}

/// Evaluates both routes (and the oracle) on the grid, writes the CSV and the
/// summary. Exit 2 when an oracle is present and the max error exceeds `tol`.
pub fn cmd_solve(
    cfg: &RunConfig,
    dump_coeffs: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<Verdict> {
    let pipe = Pipeline::build(&cfg.problem, &cfg.gauge, cfg.n)?;
    let grid = linspace(cfg.grid.min, cfg.grid.max, cfg.grid.count);
    let oracle = oracle_fn(cfg.oracle, &cfg.problem, cfg.tol);
    let mut warnings = Vec::new();

    let y_matrix = grid
        .iter()
        .map(|&t| {
            pipe.matrix_value(t)
                .with_context(|| format!("matrix route at t = {t}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outside = 0usize;
    for &t in &grid {
        if pipe
            .series
            .evaluate(t)
            .with_context(|| format!("series at t = {t}"))?
            .outside_disk
        {
            outside += 1;
        }
    }
    let report = match &oracle {
        Some(f) => Some(compare(&pipe.series, f, &grid)?),
        None => None,
    };

    let mut wtr = csv::Writer::from_writer(Vec::new());
    if report.is_some() {
        wtr.write_record(["t", "y_series", "y_matrix", "y_oracle", "abs_err"])?;
    } else {
        wtr.write_record(["t", "y_series", "y_matrix"])?;
    }
    for (k, &t) in grid.iter().enumerate() {
        let y_series = pipe.series.evaluate(t)?.value;
        let mut row = vec![fmt_num(t), fmt_num(y_series), fmt_num(y_matrix[k])];
        if let Some(r) = &report {
            let p = &r.per_point[k];
            row.push(p.y_ref.map(fmt_num).unwrap_or_default());
            row.push(p.abs_err.map(fmt_num).unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    let csv_bytes = wtr.into_inner().context("flushing CSV")?;

    if !cfg.problem.constant_f().is_some() && !cfg.problem.g().is_zero_poly() {
        warnings.push(
            "f is not constant and g != 0: the reconstruction solves the unforced problem in \
             u = F(t) and adds the integral of g, which is not a solution of the forced equation"
                .to_string(),
        );
    }
    if outside > 0 {
        warnings.push(format!(
            "{outside} of {} grid points lie outside the estimated disk of convergence",
            grid.len()
        ));
    }
    if let OracleSel::ClosedForm(id) = cfg.oracle {
        if ExampleId::identify(&cfg.problem) != Some(id) {
            warnings.push(format!(
                "problem does not have the shape of {}; closed form may not apply",
                id.name()
            ));
        }
    }

    let mut summary = String::new();
    problem_lines(cfg, &mut summary);
    let coeffs = pipe.series.u_coeffs();
    let shown = if dump_coeffs {
        coeffs.len()
    } else {
        coeffs.len().min(SUMMARY_COEFFS)
    };
    let _ = writeln!(
        summary,
        "series coefficients in u = F(t) ({shown} of {}):",
        coeffs.len()
    );
    for (j, b) in coeffs.iter().take(shown).enumerate() {
        let _ = writeln!(summary, "  beta[{j}] = {}", fmt_num(*b));
    }
    radius_lines(&pipe.series, &mut summary);
    let _ = writeln!(
        summary,
        "grid: {} points on [{}, {}]",
        cfg.grid.count, cfg.grid.min, cfg.grid.max
    );
    let max_route_gap = grid
        .iter()
        .zip(&y_matrix)
        .map(|(&t, m)| pipe.series.evaluate(t).map(|e| (e.value - m).abs()))
        .collect::<carleman_core::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let _ = writeln!(summary, "max |y_series - y_matrix|: {max_route_gap:.3e}");
    let _ = writeln!(summary, "oracle: {}", oracle_label(cfg.oracle));
    let verdict = match &report {
        Some(r) => {
            for p in r.flagged() {
                warnings.push(format!(
                    "t = {}: excluded from comparison ({})",
                    p.t,
                    p.flag.as_deref().unwrap_or("")
                ));
            }
            let _ = writeln!(summary, "max abs err: {:.3e}", r.max_abs_err);
            let _ = writeln!(summary, "max rel err: {:.3e}", r.max_rel_err);
            let _ = writeln!(summary, "tolerance: {:.3e}", cfg.tol);
            Verdict::from_ok(r.max_abs_err <= cfg.tol)
        }
        None => Verdict::Pass,
    };
    let _ = writeln!(
        summary,
        "status: {}",
        if verdict == Verdict::Pass {
            "PASS"
        } else {
            "FAIL"
        }
    );
    if !warnings.is_empty() {
        let _ = writeln!(summary, "warnings:");
        for w in &warnings {
            let _ = writeln!(summary, "  - {w}");
        }
    }

    let csv_path = cfg.outputs.csv.as_deref();
    emit(csv_path, &csv_bytes, stdout)?;
    // Data on stdout keeps the report on stderr so the CSV stays parseable.
    let report_stream: &mut dyn Write = if csv_path.is_some() { stdout } else { stderr };
    emit(
        cfg.outputs.summary.as_deref(),
        summary.as_bytes(),
        report_stream,
    )?;
    Ok(verdict)
}

/// Prints the u-radius estimate and the t-domain it maps to.
pub fn cmd_radius(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<Verdict> {
    let pipe = Pipeline::build(&cfg.problem, &cfg.gauge, cfg.n)?;
    let mut text = String::new();
    problem_lines(cfg, &mut text);
    radius_lines(&pipe.series, &mut text);
    emit(cfg.outputs.summary.as_deref(), text.as_bytes(), stdout)?;
    Ok(Verdict::Pass)
}

/// Table of `|S_n - exp|` against the tail bound for `n = 1..=dim`.
pub fn cmd_expm_check(
    dim: usize,
    gauge: &Gauge<f64>,
    s: f64,
    stdout: &mut dyn Write,
) -> Result<Verdict> {
    if !(2..=MAX_EXPM_DIM).contains(&dim) {
        bail!("N = {dim} must lie in 2..={MAX_EXPM_DIM}");
    }
    if !s.is_finite() {
        bail!("s must be finite");
    }
    let a = SuperdiagonalMatrix::new(resolve_gauge(gauge, dim)?.coefficients().to_vec());
    let exact = expm_superdiag(&a, s);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "expm check: N = {dim}, gauge = {}, s = {s}",
        gauge.name()
    );
    if dim <= 6 {
        let _ = writeln!(text, "exact exponential:");
        for i in 0..dim {
            let row: Vec<String> = (0..dim)
                .map(|j| format!("{:>12.6e}", exact.get(i, j)))
                .collect();
            let _ = writeln!(text, "  [{}]", row.join(", "));
        }
    }
    let _ = writeln!(
        text,
        "{:>4}  {:>14}  {:>14}  ok",
        "n", "max|S_n-exp|", "bound"
    );
    let mut all_ok = true;
    for n in 1..=dim {
        let (sum, bound) = expm_series(&a, s, n)?;
        let err = sum.max_abs_diff(&exact);
        let ok = bound >= err && (n < dim || err <= 1e-13);
        all_ok &= ok;
        let _ = writeln!(
            text,
            "{n:>4}  {err:>14.6e}  {bound:>14.6e}  {}",
            if ok { "yes" } else { "NO" }
        );
    }
    let _ = writeln!(text, "status: {}", if all_ok { "PASS" } else { "FAIL" });
    stdout.write_all(text.as_bytes())?;
    Ok(Verdict::from_ok(all_ok))
}

/// Rows `(n, y_n(t), |y_n - y_N|)` for `n = 0..=n_max`.
pub fn cmd_partial_sums(
    cfg: &RunConfig,
    t: f64,
    n_max: usize,
    stdout: &mut dyn Write,
) -> Result<Verdict> {
    if n_max < 1 {
        bail!("n-max must be >= 1");
    }
    let pipe = Pipeline::build(&cfg.problem, &cfg.gauge, cfg.n)?;
    let full = pipe.matrix_value(t)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "partial sums at t = {t}, N = {}, gauge = {}",
        cfg.n,
        cfg.gauge.name()
    );
    let _ = writeln!(text, "full truncated solution: {}", fmt_num(full));
    let _ = writeln!(text, "{:>4}  {:>24}  {:>14}", "n", "y_n", "|y_n - y_N|");
    for n in 0..=n_max {
        let y = partial_sum_solution(&pipe.system, t, n)?[0];
        let _ = writeln!(
            text,
            "{n:>4}  {:>24}  {:>14.6e}",
            fmt_num(y),
            (y - full).abs()
        );
    }
    emit(cfg.outputs.summary.as_deref(), text.as_bytes(), stdout)?;
    Ok(Verdict::Pass)
}

/// Outcome of one built-in example run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleOutcome {
    pub id: ExampleId,
    pub y0: f64,
    pub lo: f64,
    pub hi: f64,
    pub series_err: f64,
    pub matrix_err: f64,
    pub pass: bool,
}

/// Half-domain grid bounds around 0: half the series disk, or `[-1, 1]` when
/// the series is entire.
pub fn half_domain(id: ExampleId, y0: f64) -> (f64, f64) {
    let half = id.series_disk(y0).map_or(1.0, |r| r / 2.0);
    (-half, half)
}

pub fn run_example(id: ExampleId, y0: f64) -> Result<ExampleOutcome> {
    let problem = id.problem(y0)?;
    let pipe = Pipeline::build(&problem, &id.preset_gauge(), EXAMPLES_N)?;
    let (lo, hi) = half_domain(id, y0);
    let grid = linspace(lo, hi, EXAMPLES_GRID_COUNT);
    let report = compare(&pipe.series, |t| closed_form(id, y0, t), &grid)?;
    let mut matrix_err = 0.0_f64;
    for &t in &grid {
        matrix_err = matrix_err.max((pipe.matrix_value(t)? - closed_form(id, y0, t)?).abs());
    }
    let pass = report.flagged().next().is_none()
        && report.max_abs_err <= EXAMPLES_TOL
        && matrix_err <= EXAMPLES_TOL;
    Ok(ExampleOutcome {
        id,
        y0,
        lo,
        hi,
        series_err: report.max_abs_err,
        matrix_err,
        pass,
    })
}

/// The four built-in examples at their preset parameters, plus the trivial
/// `y0 = 0` case of the quadratic example.
pub fn cmd_examples(stdout: &mut dyn Write) -> Result<Verdict> {
    let mut text = String::new();
    let line = |o: &ExampleOutcome, text: &mut String| {
        let _ = writeln!(
            text,
            "{:<4} {:<28} y0 = {:<4} grid [{:+.4}, {:+.4}]  series err {:.3e}  matrix err {:.3e}  {}",
            o.id.name(),
            o.id.equation(),
            o.y0,
            o.lo,
            o.hi,
            o.series_err,
            o.matrix_err,
            if o.pass { "PASS" } else { "FAIL" }
        );
    };
    let mut passed = 0;
    for id in ExampleId::ALL {
        let o = run_example(id, id.preset_y0())?;
        line(&o, &mut text);
        passed += usize::from(o.pass);
    }
    let sub = run_example(ExampleId::Ex2Quadratic, 0.0)?;
    let _ = write!(text, "sub-case: ");
    line(&sub, &mut text);
    let all = passed == ExampleId::ALL.len() && sub.pass;
    let _ = writeln!(
        text,
        "examples: {passed}/{} pass (N = {EXAMPLES_N}, tol = {EXAMPLES_TOL:e})",
        ExampleId::ALL.len()
    );
    stdout.write_all(text.as_bytes())?;
    Ok(Verdict::from_ok(all))
}
