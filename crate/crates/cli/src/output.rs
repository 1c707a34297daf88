//! CSV and JSON trajectory writers.
//!
//! Row `k` holds the point `x_k = (q_k, p_k, q_{k+1})` followed, when
//! diagnostics are enabled, by the residuals of the solve that produced it and
//! its multipliers. Reals are printed with 17 significant digits so that every
//! value survives a write/parse round trip bit for bit.

use std::io::{self, Read, Write};

use dirac_core::Predictor;
use serde_json::json;

use crate::config::{Formulation, SystemSpec};
use crate::run::Simulation;

/// `x` in scientific notation with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names for a system in `R^n` with `m` multipliers.
pub fn columns(n: usize, m: usize, diagnostics: bool) -> Vec<String> {
    let mut cols = vec!["k".to_string()];
    for prefix in ["q", "p", "qplus"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    if diagnostics {
        cols.extend(["residual", "inclusion_residual", "constraint_residual"].map(String::from));
        cols.extend((1..=m).map(|i| format!("lambda_{i}")));
    }
    cols
}

/// Numeric row values (everything after `k`) for each trajectory point.
pub fn rows(sim: &Simulation) -> Vec<Vec<f64>> {
    let diag = sim.config.diagnostics;
    sim.trajectory
        .points()
        .iter()
        .zip(sim.trajectory.point_diagnostics())
        .map(|(x, d)| {
            let mut row: Vec<f64> = x.q.iter().chain(x.p.iter()).chain(x.qplus.iter()).copied().collect();
            if diag {
                row.extend([d.residual, d.inclusion_residual, d.constraint_residual]);
                row.extend(d.multipliers.iter().copied());
            }
            row
        })
        .collect()
}

fn header(sim: &Simulation) -> Vec<String> {
    columns(sim.config.system.dim(), sim.multipliers, sim.config.diagnostics)
}

pub fn write_csv<W: Write>(w: &mut W, sim: &Simulation) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(header(sim))?;
    for (k, row) in rows(sim).into_iter().enumerate() {
        let record = std::iter::once(k.to_string()).chain(row.into_iter().map(format_number));
        out.write_record(record)?;
    }
    out.flush()
}

/// Numbers in JSON cannot be NaN or infinite.
fn json_number(x: f64) -> String {
    if x.is_finite() {
        format_number(x)
    } else {
        "null".to_string()
    }
}

fn parameters(spec: &SystemSpec) -> serde_json::Value {
    match *spec {
        SystemSpec::HarmonicOscillator { h, lambda } => json!({ "h": h, "lambda": lambda }),
        SystemSpec::FreeParticle { n, h, mass } => json!({ "n": n, "h": h, "mass": mass }),
        SystemSpec::NonholonomicParticle { h, mass } => json!({ "h": h, "mass": mass }),
    }
}

pub fn metadata(sim: &Simulation) -> serde_json::Value {
    let c = &sim.config;
    let s = &c.solver;
    json!({
        "system": c.system.id(),
        "formulation": match c.formulation {
            Formulation::Lagrangian => "lagrangian",
            Formulation::Hamiltonian => "hamiltonian",
        },
        "parameters": parameters(&c.system),
        "seed": c.seed,
        "p0": c.p0,
        "steps": c.steps,
        "solver": {
            "tol": s.tol,
            "max_iter": s.max_iter,
            "damping": s.damping,
            "min_step": s.min_step,
            "predictor": match s.predictor {
                Predictor::ConstantVelocity => "constant_velocity",
                Predictor::Hold => "hold",
            },
            "check_derivatives": s.check_derivatives,
        },
        "columns": header(sim),
        "failure": sim.failure.as_ref().map(|(index, e)| json!({ "index": index, "error": e.to_string() })),
    })
}

/// One top-level object with `metadata`, `rows` (arrays of numbers) and
/// `summary`. Rows are written by hand to keep the 17-digit formatting.
pub fn write_json<W: Write>(w: &mut W, sim: &Simulation) -> io::Result<()> {
    writeln!(w, "{{")?;
    writeln!(w, "\"metadata\": {},", metadata(sim))?;
    writeln!(w, "\"rows\": [")?;
    let rows = rows(sim);
    let last = rows.len().saturating_sub(1);
    for (k, row) in rows.iter().enumerate() {
        let mut line = format!("[{k}");
        for &x in row {
            line.push(',');
            line.push_str(&json_number(x));
        }
        line.push(']');
        if k != last {
            line.push(',');
        }
        writeln!(w, "{line}")?;
    }
    writeln!(w, "],")?;
    writeln!(w, "\"summary\": {}", sim.summary.to_json())?;
    writeln!(w, "}}")
}

/// Parse a CSV trajectory back into its header and numeric rows, `k`
/// included as the first entry.
pub fn read_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), csv::Error> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| {
                    csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, format!("`{f}`: {e}")))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
