use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::{Duration, Instant};

use dirac_core::{
    lagrangian_seed, models, run_trajectory, DiracError, DiscreteSystem, PontryaginPoint, Seed, Trajectory,
};
use log::info;
use nalgebra::DVector;

use crate::config::{Formulation, OutputFormat, RunConfig, SystemSpec};
use crate::error::RunError;
use crate::output;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub max_residual: f64,
    pub max_inclusion_residual: f64,
    pub max_constraint_residual: f64,
    pub wall_time: Duration,
}

impl RunSummary {
    fn of(traj: &Trajectory, steps_requested: usize, wall_time: Duration) -> Self {
        Self {
            steps_requested,
            steps_completed: traj.points().len().saturating_sub(1),
            max_residual: traj.max_residual(),
            max_inclusion_residual: traj.max_inclusion_residual(),
            max_constraint_residual: traj.max_constraint_residual(),
            wall_time,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "steps_requested": self.steps_requested,
            "steps_completed": self.steps_completed,
            "max_residual": self.max_residual,
            "max_inclusion_residual": self.max_inclusion_residual,
            "max_constraint_residual": self.max_constraint_residual,
            "wall_time_s": self.wall_time.as_secs_f64(),
        })
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "steps completed:         {}/{}", self.steps_completed, self.steps_requested)?;
        writeln!(f, "max residual:            {:.3e}", self.max_residual)?;
        writeln!(f, "max inclusion residual:  {:.3e}", self.max_inclusion_residual)?;
        writeln!(f, "max constraint residual: {:.3e}", self.max_constraint_residual)?;
        write!(f, "wall time:               {:.6} s", self.wall_time.as_secs_f64())
    }
}

/// A finished (possibly partial) run, before anything is written.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: RunConfig,
    /// Number of multiplier columns.
    pub multipliers: usize,
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub failure: Option<(usize, DiracError)>,
}

pub fn build_system(spec: &SystemSpec, formulation: Formulation) -> Result<DiscreteSystem, DiracError> {
    use Formulation::*;
    match (*spec, formulation) {
        (SystemSpec::HarmonicOscillator { h, lambda }, Lagrangian) => models::harmonic_oscillator(h, lambda),
        (SystemSpec::HarmonicOscillator { h, lambda }, Hamiltonian) => {
            models::harmonic_oscillator_hamiltonian_system(h, lambda)
        }
        (SystemSpec::FreeParticle { n, h, mass }, Lagrangian) => models::free_particle(n, h, mass),
        (SystemSpec::FreeParticle { n, h, mass }, Hamiltonian) => models::free_particle_hamiltonian_system(n, h, mass),
        (SystemSpec::NonholonomicParticle { h, mass }, Lagrangian) => models::nonholonomic_particle(h, mass),
        (SystemSpec::NonholonomicParticle { h, mass }, Hamiltonian) => {
            models::nonholonomic_particle_hamiltonian(h, mass)
        }
    }
}

pub fn build_seed(config: &RunConfig, sys: &DiscreteSystem) -> Result<Seed, DiracError> {
    let n = sys.n();
    let first = DVector::from_column_slice(&config.seed[..n]);
    let second = DVector::from_column_slice(&config.seed[n..]);
    Ok(match config.formulation {
        Formulation::Lagrangian => match &config.p0 {
            None => Seed::Lagrangian(lagrangian_seed(sys, first, second)?),
            Some(p0) => Seed::Lagrangian(PontryaginPoint::new(first, DVector::from_column_slice(p0), second)?),
        },
        Formulation::Hamiltonian => Seed::Hamiltonian { q: first, p: second },
    })
}

/// Integrate the configured system without writing output.
pub fn simulate(config: &RunConfig) -> Result<Simulation, RunError> {
    let sys = build_system(&config.system, config.formulation).map_err(RunError::System)?;
    let seed = build_seed(config, &sys).map_err(RunError::System)?;
    let start = Instant::now();
    let result = run_trajectory(&sys, &seed, config.steps, &config.solver);
    let wall_time = start.elapsed();
    let (trajectory, failure) = match result {
        Ok(t) => (t, None),
        Err(e) => {
            info!("{e}");
            (*e.partial, Some((e.index, e.source)))
        }
    };
    let summary = RunSummary::of(&trajectory, config.steps, wall_time);
    info!(
        "{} ({}): {} of {} steps in {:?}",
        sys.name(),
        config.formulation,
        summary.steps_completed,
        config.steps,
        wall_time
    );
    Ok(Simulation {
        config: config.clone(),
        multipliers: sys.m(),
        trajectory,
        summary,
        failure,
    })
}

pub fn write_simulation<W: Write>(w: &mut W, sim: &Simulation) -> io::Result<()> {
    match sim.config.output.format {
        OutputFormat::Csv => output::write_csv(w, sim),
        OutputFormat::Json => output::write_json(w, sim),
    }
}

/// Integrate, write the trajectory to the configured destination and return
/// the summary. On a step failure the partial trajectory is still written.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let sim = simulate(config)?;
    let path = config.output.path.clone();
    let io_err = |source| RunError::Io {
        path: path.clone(),
        source,
    };
    match &config.output.path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err)?);
            write_simulation(&mut w, &sim).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_simulation(&mut w, &sim).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
    }
    match sim.failure {
        None => Ok(sim.summary),
        Some((index, source)) => Err(RunError::Step {
            index,
            source,
            summary: sim.summary,
        }),
    }
}
