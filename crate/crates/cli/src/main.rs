mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use config::{FamilyName, Policy, RunConfig};

/// Radially decreasing ground states of the Minkowski mean-curvature equation.
#[derive(Parser, Debug)]
#[command(name = "minkowski", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print α, ξ₀, β, γ and the assumption report.
    Thresholds,
    /// Shoot once from u(0) = ξ.
    Shoot,
    /// Classify a grid of heights.
    Scan,
    /// Find, bisect and verify the ground state.
    Solve,
}

/// Every flag mirrors the config key `section.key` with dashes for underscores.
#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    family: Option<FamilyName>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long = "N", global = true, value_name = "N")]
    dimension: Option<u32>,
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    #[arg(long, global = true)]
    scan_max: Option<f64>,

    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    r_start: Option<f64>,
    #[arg(long, global = true)]
    h_max: Option<f64>,
    #[arg(long, global = true)]
    sample_stride: Option<f64>,
    #[arg(long, global = true)]
    min_step: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    xi: Option<f64>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    u_tol: Option<f64>,
    #[arg(long, global = true)]
    q_tol: Option<f64>,
    #[arg(long, global = true)]
    xi_tol: Option<f64>,
    #[arg(long, global = true)]
    event_tol: Option<f64>,
    #[arg(long, global = true)]
    max_bisections: Option<usize>,
    #[arg(long, global = true)]
    sign_tol: Option<f64>,
    #[arg(long, global = true)]
    margin_tol: Option<f64>,
    #[arg(long, global = true)]
    res_tol: Option<f64>,
    #[arg(long, global = true)]
    decay_tol: Option<f64>,
    #[arg(long, global = true)]
    fd_tol: Option<f64>,

    /// Seed the bracket from the variational minimizer.
    #[arg(long, global = true, action = ArgAction::Set, value_name = "BOOL")]
    variational: Option<bool>,
    #[arg(long, global = true)]
    cells: Option<usize>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    grad_tol: Option<f64>,
    #[arg(long, global = true)]
    eps_s: Option<f64>,
    #[arg(long, global = true, value_enum)]
    policy: Option<Policy>,
    #[arg(long, global = true)]
    armijo: Option<f64>,
    #[arg(long, global = true)]
    max_backtracks: Option<usize>,
    #[arg(long, global = true, action = ArgAction::Set, value_name = "BOOL")]
    relax_eps: Option<bool>,
    #[arg(long, global = true)]
    tol_neg: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    xi_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    xi_max: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,

    /// Profile CSV (shoot, solve).
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    /// Copy of the JSON summary.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    /// Classification CSV (scan).
    #[arg(long, global = true, value_name = "PATH")]
    scan_csv: Option<PathBuf>,
    /// Minimizer profile CSV (solve).
    #[arg(long, global = true, value_name = "PATH")]
    variational_csv: Option<PathBuf>,

    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    checks: Option<usize>,
    /// Add wall-clock seconds to the timings.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    wall_clock: bool,
}

macro_rules! overlay {
    ($($dst:expr => $src:expr),* $(,)?) => {
        $(if let Some(v) = $src.clone() { $dst = v; })*
    };
}

impl Flags {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        overlay! {
            c.problem.family => self.family,
            c.integrator.abs_tol => self.abs_tol,
            c.integrator.rel_tol => self.rel_tol,
            c.integrator.r_start => self.r_start,
            c.integrator.h_max => self.h_max,
            c.integrator.sample_stride => self.sample_stride,
            c.integrator.min_step => self.min_step,
            c.shooting.r_max => self.r_max,
            c.shooting.u_tol => self.u_tol,
            c.shooting.q_tol => self.q_tol,
            c.shooting.xi_tol => self.xi_tol,
            c.shooting.event_tol => self.event_tol,
            c.shooting.max_bisections => self.max_bisections,
            c.shooting.sign_tol => self.sign_tol,
            c.shooting.margin_tol => self.margin_tol,
            c.shooting.res_tol => self.res_tol,
            c.shooting.decay_tol => self.decay_tol,
            c.shooting.fd_tol => self.fd_tol,
            c.variational.enabled => self.variational,
            c.variational.cells => self.cells,
            c.variational.max_iters => self.max_iters,
            c.variational.grad_tol => self.grad_tol,
            c.variational.eps_s => self.eps_s,
            c.variational.policy => self.policy,
            c.variational.armijo => self.armijo,
            c.variational.max_backtracks => self.max_backtracks,
            c.variational.relax_eps => self.relax_eps,
            c.variational.tol_neg => self.tol_neg,
            c.run.threads => self.threads,
            c.run.seed => self.seed,
            c.run.checks => self.checks,
        }
        overlay! {
            c.problem.lambda => self.lambda.map(Some),
            c.problem.q => self.q.map(Some),
            c.problem.dimension => self.dimension.map(Some),
            c.problem.table => self.table.clone().map(Some),
            c.problem.scan_max => self.scan_max.map(Some),
            c.shooting.xi => self.xi.map(Some),
            c.scan.xi_min => self.xi_min.map(Some),
            c.scan.xi_max => self.xi_max.map(Some),
            c.scan.points => self.points.map(Some),
            c.output.profile => self.profile.clone().map(Some),
            c.output.summary => self.summary.clone().map(Some),
            c.output.scan_csv => self.scan_csv.clone().map(Some),
            c.output.variational_csv => self.variational_csv.clone().map(Some),
        }
        c.run.wall_clock |= self.wall_clock;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = cli.flags.resolve().and_then(|cfg| match cli.command {
        Command::Thresholds => commands::thresholds(&cfg),
        Command::Shoot => commands::shoot(&cfg),
        Command::Scan => commands::scan(&cfg),
        Command::Solve => commands::solve(&cfg),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("run `minkowski --help` for usage");
            ExitCode::from(1)
        }
    }
}
