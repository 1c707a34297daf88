//! TOML run descriptions.
//!
//! ```toml
//! system = "harmonic_oscillator"
//! h = 0.1
//! lambda = 1.0
//! seed = [0.0, 0.1]
//! steps = 10
//!
//! [solver]
//! tol = 1e-12
//!
//! [output]
//! path = "ho.csv"
//! format = "csv"
//! ```

use std::fmt;
use std::path::PathBuf;

use dirac_core::{Predictor, SolverOptions};
use serde::Deserialize;

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Lagrangian,
    Hamiltonian,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Lagrangian => "lagrangian",
            Formulation::Hamiltonian => "hamiltonian",
        })
    }
}

/// A built-in system together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemSpec {
    HarmonicOscillator { h: f64, lambda: f64 },
    FreeParticle { n: usize, h: f64, mass: f64 },
    NonholonomicParticle { h: f64, mass: f64 },
}

impl SystemSpec {
    pub fn id(&self) -> &'static str {
        match self {
            SystemSpec::HarmonicOscillator { .. } => dirac_core::models::HARMONIC_OSCILLATOR,
            SystemSpec::FreeParticle { .. } => dirac_core::models::FREE_PARTICLE,
            SystemSpec::NonholonomicParticle { .. } => dirac_core::models::NONHOLONOMIC_PARTICLE,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::HarmonicOscillator { .. } => 1,
            SystemSpec::FreeParticle { n, .. } => *n,
            SystemSpec::NonholonomicParticle { .. } => 3,
        }
    }

    pub fn h(&self) -> f64 {
        match *self {
            SystemSpec::HarmonicOscillator { h, .. }
            | SystemSpec::FreeParticle { h, .. }
            | SystemSpec::NonholonomicParticle { h, .. } => h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    /// `None` writes the trajectory to standard output.
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub formulation: Formulation,
    /// Lagrangian: `[q₀…, q₁…]`. Hamiltonian: `[q₀…, p₀…]`.
    pub seed: Vec<f64>,
    /// Explicit `p₀` for a Lagrangian seed; otherwise `p₀ = −D₁L_d(q₀, q₁)`.
    pub p0: Option<Vec<f64>>,
    pub steps: usize,
    pub solver: SolverOptions,
    pub output: OutputSpec,
    /// Include residual and multiplier columns in the output rows.
    pub diagnostics: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: String,
    formulation: Option<String>,
    h: Option<f64>,
    lambda: Option<f64>,
    mass: Option<f64>,
    seed: Vec<f64>,
    p0: Option<Vec<f64>>,
    steps: i64,
    solver: Option<RawSolver>,
    output: Option<RawOutput>,
    diagnostics: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iter: Option<i64>,
    damping: Option<bool>,
    min_step: Option<f64>,
    predictor: Option<String>,
    check_derivatives: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<String>,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn required(field: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    v.ok_or_else(|| invalid(field, "required for this system"))
}

fn forbidden(field: &str, v: Option<f64>, system: &str) -> Result<(), ConfigError> {
    match v {
        Some(_) => Err(invalid(field, format!("not a parameter of {system}"))),
        None => Ok(()),
    }
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parse and validate a TOML run description.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let formulation = match raw.formulation.as_deref() {
        None | Some("lagrangian") => Formulation::Lagrangian,
        Some("hamiltonian") => Formulation::Hamiltonian,
        Some(other) => {
            return Err(invalid(
                "formulation",
                format!("expected `lagrangian` or `hamiltonian`, got `{other}`"),
            ))
        }
    };

    if raw.steps < 0 {
        return Err(invalid("steps", format!("must be non-negative, got {}", raw.steps)));
    }
    if raw.seed.iter().any(|x| !x.is_finite()) {
        return Err(invalid("seed", "entries must be finite"));
    }

    let h = positive("h", required("h", raw.h)?)?;
    let system = match raw.system.as_str() {
        "harmonic_oscillator" => {
            forbidden("mass", raw.mass, &raw.system)?;
            let lambda = required("lambda", raw.lambda)?;
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(invalid("lambda", format!("must be non-negative, got {lambda}")));
            }
            SystemSpec::HarmonicOscillator { h, lambda }
        }
        "free_particle" => {
            forbidden("lambda", raw.lambda, &raw.system)?;
            let mass = positive("mass", raw.mass.unwrap_or(1.0))?;
            if raw.seed.is_empty() || !raw.seed.len().is_multiple_of(2) {
                return Err(invalid(
                    "seed",
                    format!("needs 2n entries for a free particle in R^n, got {}", raw.seed.len()),
                ));
            }
            SystemSpec::FreeParticle {
                n: raw.seed.len() / 2,
                h,
                mass,
            }
        }
        "nonholonomic_particle" => {
            forbidden("lambda", raw.lambda, &raw.system)?;
            let mass = positive("mass", raw.mass.unwrap_or(1.0))?;
            SystemSpec::NonholonomicParticle { h, mass }
        }
        other => {
            return Err(invalid(
                "system",
                format!(
                    "unknown system `{other}` (expected harmonic_oscillator, free_particle or nonholonomic_particle)"
                ),
            ))
        }
    };

    let n = system.dim();
    if raw.seed.len() != 2 * n {
        return Err(invalid(
            "seed",
            format!("expected {} entries, got {}", 2 * n, raw.seed.len()),
        ));
    }
    if let Some(p0) = &raw.p0 {
        if formulation == Formulation::Hamiltonian {
            return Err(invalid("p0", "a Hamiltonian seed already contains p0"));
        }
        if p0.len() != n {
            return Err(invalid("p0", format!("expected {n} entries, got {}", p0.len())));
        }
        if p0.iter().any(|x| !x.is_finite()) {
            return Err(invalid("p0", "entries must be finite"));
        }
    }

    let solver = solver_options(raw.solver.unwrap_or_default())?;

    let raw_out = raw.output.unwrap_or_default();
    let format = match raw_out.format.as_deref() {
        None => OutputFormat::default(),
        Some(s) => OutputFormat::parse(s)
            .ok_or_else(|| invalid("output.format", format!("expected `csv` or `json`, got `{s}`")))?,
    };

    Ok(RunConfig {
        system,
        formulation,
        seed: raw.seed,
        p0: raw.p0,
        steps: raw.steps as usize,
        solver,
        output: OutputSpec {
            path: raw_out.path,
            format,
        },
        diagnostics: raw.diagnostics.unwrap_or(true),
    })
}

fn solver_options(raw: RawSolver) -> Result<SolverOptions, ConfigError> {
    let mut opts = SolverOptions::default();
    if let Some(tol) = raw.tol {
        opts.tol = positive("solver.tol", tol)?;
    }
    if let Some(max_iter) = raw.max_iter {
        if max_iter < 1 {
            return Err(invalid("solver.max_iter", format!("must be at least 1, got {max_iter}")));
        }
        opts.max_iter = max_iter as usize;
    }
    if let Some(damping) = raw.damping {
        opts.damping = damping;
    }
    if let Some(min_step) = raw.min_step {
        opts.min_step = positive("solver.min_step", min_step)?;
    }
    if let Some(p) = raw.predictor {
        opts.predictor = match p.as_str() {
            "constant_velocity" => Predictor::ConstantVelocity,
            "hold" => Predictor::Hold,
            _ => {
                return Err(invalid(
                    "solver.predictor",
                    format!("expected `constant_velocity` or `hold`, got `{p}`"),
                ))
            }
        };
    }
    if let Some(c) = raw.check_derivatives {
        opts.check_derivatives = c;
    }
    opts.validate().map_err(|e| invalid("solver", e.to_string()))?;
    Ok(opts)
}
