use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use carleman_cli::{
    cmd_examples, cmd_expm_check, cmd_partial_sums, cmd_radius, cmd_solve, parse_config, RunConfig,
    Verdict,
};
use carleman_core::Gauge;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "carleman",
    version,
    about = "Series and nilpotent-system solver for scalar nonlinear IVPs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the series and matrix routes on the grid and compare with the oracle.
    Solve(RunArgs),
    /// Check truncated exponential series against the exact nilpotent exponential.
    ExpmCheck {
        #[arg(short = 'N', default_value_t = 10)]
        n: usize,
        #[arg(long, value_enum, default_value_t = GaugeArg::Unit)]
        gauge: GaugeArg,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        s_max: f64,
    },
    /// Print the partial-sum approximants y_n(t) for n = 0..=n-max.
    PartialSums {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long)]
        n_max: usize,
    },
    /// Run the four built-in examples against their closed forms.
    Examples,
    /// Report the estimated radius of convergence and the mapped t-domain.
    Radius(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary output path.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Override the truncation dimension.
    #[arg(short = 'N')]
    n: Option<usize>,
    #[arg(long, value_enum)]
    gauge: Option<GaugeArg>,
    #[arg(long)]
    tol: Option<f64>,
    /// List every series coefficient in the summary.
    #[arg(long)]
    dump_coeffs: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GaugeArg {
    Unit,
    PaperPower,
    PaperExp,
}

impl From<GaugeArg> for Gauge<f64> {
    fn from(g: GaugeArg) -> Self {
        match g {
            GaugeArg::Unit => Gauge::Unit,
            GaugeArg::PaperPower => Gauge::PaperPower,
            GaugeArg::PaperExp => Gauge::PaperExp,
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let text =
        fs::read(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = parse_config(&text)?;
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(g) = args.gauge {
        cfg.gauge = g.into();
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    cfg.outputs.csv = args.out.clone();
    cfg.outputs.summary = args.summary.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Verdict> {
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    let verdict = match cli.cmd {
        Cmd::Solve(args) => cmd_solve(&load(&args)?, args.dump_coeffs, &mut stdout, &mut stderr)?,
        Cmd::ExpmCheck { n, gauge, s_max } => cmd_expm_check(n, &gauge.into(), s_max, &mut stdout)?,
        Cmd::PartialSums { run, t, n_max } => {
            cmd_partial_sums(&load(&run)?, t, n_max, &mut stdout)?
        }
        Cmd::Examples => cmd_examples(&mut stdout)?,
        Cmd::Radius(args) => cmd_radius(&load(&args)?, &mut stdout)?,
    };
    stdout.flush()?;
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(v) => ExitCode::from(v.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
