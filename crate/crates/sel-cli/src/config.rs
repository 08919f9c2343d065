//! Run configuration: a TOML file whose every section is optional. Values
//! resolve as command-line flag, then file, then built-in default.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sel_core::classifier::{ExponentQuad, SweepRange};
use sel_core::geometry::{build_grid, Domain, Grading, Grid};
use sel_core::operators::{Field, OperatorSpec, PucciSign};
use sel_core::scalar_solver::{SolverOptions, WeightSpec};
use sel_core::system_solver::PicardOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUTPUT_ENV: &str = "SEL_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "sel-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Sweep,
    Eigen,
    Barrier,
    SolveScalar,
    SolveSystem,
    Rates,
    Acceptance,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Eigen => "eigen",
            Command::Barrier => "barrier",
            Command::SolveScalar => "solve-scalar",
            Command::SolveSystem => "solve-system",
            Command::Rates => "rates",
            Command::Acceptance => "acceptance",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub quad: Option<ExponentQuad>,
    #[serde(default)]
    pub scalar: ScalarConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default)]
    pub barrier: BarrierConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub acceptance: AcceptanceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    pub lambda: f64,
    pub big_lambda: f64,
    pub sign: PucciSign,
    /// Constant drift vector `b`.
    pub drift: [f64; 2],
    /// Constant zeroth-order coefficient `c >= 0`.
    pub zeroth: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig { lambda: 1.0, big_lambda: 1.0, sign: PucciSign::Plus, drift: [0.0, 0.0], zeroth: 0.0 }
    }
}

impl OperatorConfig {
    pub fn build(&self) -> Result<OperatorSpec, CliError> {
        let spec = OperatorSpec::pucci(self.lambda, self.big_lambda, self.sign).map_err(|e| CliError::config(e.to_string()))?;
        if !(self.zeroth >= 0.0) || !self.zeroth.is_finite() || self.drift.iter().any(|d| !d.is_finite()) {
            return Err(CliError::config(format!("operator needs finite drift and zeroth >= 0, got {:?} and {}", self.drift, self.zeroth)));
        }
        let bound = self.drift[0].hypot(self.drift[1]);
        Ok(spec.with_drift(bound, Field::Constant(self.drift)).with_zeroth(self.zeroth, Field::Constant(self.zeroth)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub domain: Domain,
    pub n: usize,
    pub grading: Grading,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            domain: Domain::Interval { a: 0.0, b: 1.0 },
            n: 400,
            grading: Grading::BoundaryGraded { strength: 2.0 },
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<Grid>, CliError> {
        build_grid(self.domain, self.n, self.grading).map(Arc::new).map_err(|e| CliError::config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarConfig {
    /// Exponent of `u^-p`.
    pub p: f64,
    pub weight: WeightSpec,
}

impl Default for ScalarConfig {
    fn default() -> Self {
        ScalarConfig { p: 0.5, weight: WeightSpec::power(0.5) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub clamp: bool,
    pub start_theta: f64,
    /// Also run the two-start uniqueness probe.
    pub uniqueness: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let d = PicardOptions::default();
        SystemConfig { tol: d.tol, max_iter: d.max_iter, clamp: d.clamp, start_theta: d.start_theta, uniqueness: false }
    }
}

impl SystemConfig {
    pub fn picard(&self) -> Result<PicardOptions, CliError> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(0.0..=1.0).contains(&self.start_theta) {
            return Err(CliError::config(format!(
                "system needs tol > 0, max_iter > 0 and start_theta in [0, 1], got {}, {}, {}",
                self.tol, self.max_iter, self.start_theta
            )));
        }
        Ok(PicardOptions { tol: self.tol, max_iter: self.max_iter, clamp: self.clamp, start_theta: self.start_theta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { tol: 1e-10, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    /// Tabulation points of `H`.
    pub samples: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig { alpha: 0.3, beta: 0.4, b: 0.5, samples: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub p: SweepRange,
    pub q: SweepRange,
    pub r: SweepRange,
    pub s: SweepRange,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let pos = SweepRange { lo: 0.1, hi: 3.0, step: 0.1 };
        let nonneg = SweepRange { lo: 0.0, hi: 3.0, step: 0.1 };
        SweepConfig { p: nonneg, q: pos, r: pos, s: nonneg }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateTarget {
    Scalar,
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub target: RateTarget,
    pub tol_power: f64,
    pub tol_logpow: f64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig { target: RateTarget::Scalar, tol_power: 0.05, tol_logpow: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcceptanceConfig {
    /// Criterion ids to run; empty means all.
    pub only: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, csv: true, json: true }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config { message, .. } => CliError::config(format!("{}: {message}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()))
    }

    pub fn quad(&self) -> Result<ExponentQuad, CliError> {
        self.quad.ok_or_else(|| CliError::config("this command needs exponents: pass --quad p,q,r,s or a [quad] section"))
    }

    /// Flag, then file, then `SEL_OUTPUT_DIR`, then `./sel-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[grid]\nnodes = 3\n").is_err());
        assert!(RunConfig::parse("colour = 1\n").is_err());
        assert!(RunConfig::parse("[quad]\np = 0.1\nq = 0.1\nr = 0.1\ns = 0.1\nt = 0\n").is_err());
    }

    #[test]
    fn full_file_parses() {
        let c = RunConfig::parse(
            r#"
command = "solve-system"
[operator]
lambda = 1.0
big_lambda = 2.0
sign = "minus"
[grid]
domain = { kind = "rectangle", lx = 1.0, ly = 2.0 }
n = 32
grading = { kind = "uniform" }
[quad]
p = 0.25
q = 0.25
r = 0.25
s = 0.25
[scalar]
p = 0.2
weight = { form = "power_log", q_w = 2.0, a_w = 1.5, scale_a = 100.0 }
[solver]
tol = 1e-9
[output]
csv = false
"#,
        )
        .unwrap();
        assert_eq!(c.command, Some(Command::SolveSystem));
        assert_eq!(c.grid.n, 32);
        assert!(c.quad.unwrap().det > 0.0);
        assert_eq!(c.solver.max_iter, SolverOptions::default().max_iter);
        assert!(!c.output.csv);
    }
}
