//! Run configuration: a TOML file with one section per component, overlaid by
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use minkowski_core::integrator::IntegratorConfig;
use minkowski_core::nonlinearity::Nonlinearity;
use minkowski_core::pipeline::SolveConfig;
use minkowski_core::shooting::{ShootConfig, VerifyConfig};
use minkowski_core::variational::{MinimizeConfig, StepPolicy};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Power,
    Sine,
    Tabulated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Newton,
    Gradient,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub family: FamilyName,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    #[serde(rename = "N")]
    pub dimension: Option<u32>,
    /// CSV with columns `s,f`, for the tabulated family.
    pub table: Option<PathBuf>,
    pub scan_max: Option<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { family: FamilyName::Power, lambda: None, q: None, dimension: None, table: None, scan_max: None }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub r_start: f64,
    pub h_max: f64,
    pub sample_stride: f64,
    pub min_step: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::<f64>::default();
        Self {
            abs_tol: d.abs_tol,
            rel_tol: d.rel_tol,
            r_start: d.r_start,
            h_max: d.h_max,
            sample_stride: d.sample_stride,
            min_step: d.min_step,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingSection {
    pub xi: Option<f64>,
    pub r_max: f64,
    pub u_tol: f64,
    pub q_tol: f64,
    pub xi_tol: f64,
    pub event_tol: f64,
    pub max_bisections: usize,
    pub sign_tol: f64,
    pub margin_tol: f64,
    pub res_tol: f64,
    pub decay_tol: f64,
    pub fd_tol: f64,
}

impl Default for ShootingSection {
    fn default() -> Self {
        let s = ShootConfig::<f64>::default();
        let v = VerifyConfig::<f64>::default();
        Self {
            xi: None,
            r_max: s.r_max,
            u_tol: s.u_tol,
            q_tol: s.q_tol,
            xi_tol: s.xi_tol,
            event_tol: s.event_tol,
            max_bisections: s.max_bisections,
            sign_tol: v.sign_tol,
            margin_tol: v.margin_tol,
            res_tol: v.res_tol,
            decay_tol: v.decay_tol,
            fd_tol: v.fd_tol,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalSection {
    pub enabled: bool,
    pub cells: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub eps_s: f64,
    pub policy: Policy,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub relax_eps: bool,
    pub tol_neg: f64,
}

impl Default for VariationalSection {
    fn default() -> Self {
        let m = MinimizeConfig::<f64>::default();
        Self {
            enabled: true,
            cells: m.cells,
            max_iters: m.max_iters,
            grad_tol: m.grad_tol,
            eps_s: m.eps_s,
            policy: Policy::Newton,
            armijo: m.armijo,
            max_backtracks: m.max_backtracks,
            relax_eps: m.relax_eps,
            tol_neg: SolveConfig::<f64>::default().tol_neg,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub profile: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub scan_csv: Option<PathBuf>,
    pub variational_csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads for scans; 0 uses every core. Results do not depend on it.
    #[serde(skip_serializing)]
    pub threads: usize,
    pub seed: u64,
    /// Random perturbation checks after a scan.
    pub checks: usize,
    pub wall_clock: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { threads: 0, seed: 20240229, checks: 200, wall_clock: false }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub integrator: IntegratorSection,
    pub shooting: ShootingSection,
    pub variational: VariationalSection,
    pub scan: ScanSection,
    pub output: OutputSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn dimension(&self) -> Result<u32> {
        match self.problem.dimension {
            None => bail!("missing N (pass --N or set problem.N)"),
            Some(n) if n < 2 => bail!("N must be at least 2, got {n}"),
            Some(n) => Ok(n),
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity<f64>> {
        let p = &self.problem;
        let need = |x: Option<f64>, name: &str| x.with_context(|| format!("missing {name} (pass --{name} or set problem.{name})"));
        let nl = match p.family {
            FamilyName::Power => Nonlinearity::power(need(p.lambda, "lambda")?, need(p.q, "q")?)?,
            FamilyName::Sine => Nonlinearity::sine(need(p.q, "q")?)?,
            FamilyName::Tabulated => {
                let path = p.table.as_ref().context("missing table (pass --table or set problem.table)")?;
                Nonlinearity::tabulated(&read_table(path)?)?
            }
        };
        Ok(match p.scan_max {
            Some(m) => nl.with_scan_max(m)?,
            None => nl,
        })
    }

    pub fn shoot_config(&self) -> Result<ShootConfig<f64>> {
        let i = &self.integrator;
        let s = &self.shooting;
        let integrator = IntegratorConfig {
            abs_tol: i.abs_tol,
            rel_tol: i.rel_tol,
            r_start: i.r_start,
            h_max: i.h_max,
            sample_stride: i.sample_stride,
            min_step: i.min_step,
        };
        integrator.validate()?;
        for (name, x) in [("r_max", s.r_max), ("u_tol", s.u_tol), ("q_tol", s.q_tol), ("xi_tol", s.xi_tol), ("event_tol", s.event_tol)] {
            if !(x > 0.0 && x.is_finite()) {
                bail!("{name} must be positive, got {x}");
            }
        }
        Ok(ShootConfig {
            integrator,
            r_max: s.r_max,
            u_tol: s.u_tol,
            q_tol: s.q_tol,
            xi_tol: s.xi_tol,
            event_tol: s.event_tol,
            max_bisections: s.max_bisections,
            ..ShootConfig::default()
        })
    }

    pub fn verify_config(&self) -> VerifyConfig<f64> {
        let s = &self.shooting;
        VerifyConfig { sign_tol: s.sign_tol, margin_tol: s.margin_tol, res_tol: s.res_tol, decay_tol: s.decay_tol, fd_tol: s.fd_tol }
    }

    pub fn minimize_config(&self) -> Result<MinimizeConfig<f64>> {
        let v = &self.variational;
        let cfg = MinimizeConfig {
            max_iters: v.max_iters,
            policy: match v.policy {
                Policy::Newton => StepPolicy::ProjectedNewton,
                Policy::Gradient => StepPolicy::ProjectedGradient,
            },
            grad_tol: v.grad_tol,
            eps_s: v.eps_s,
            cells: v.cells,
            armijo: v.armijo,
            max_backtracks: v.max_backtracks,
            relax_eps: v.relax_eps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn solve_config(&self) -> Result<SolveConfig<f64>> {
        if !(self.variational.tol_neg > 0.0) {
            bail!("tol_neg must be positive");
        }
        Ok(SolveConfig {
            shoot: self.shoot_config()?,
            verify: self.verify_config(),
            minimize: self.minimize_config()?,
            use_variational: self.variational.enabled,
            tol_neg: self.variational.tol_neg,
        })
    }
}

#[derive(Deserialize)]
struct TableRow {
    s: f64,
    f: f64,
}

fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for row in reader.deserialize() {
        let row: TableRow = row.with_context(|| format!("parsing {}", path.display()))?;
        points.push((row.s, row.f));
    }
    Ok(points)
}
