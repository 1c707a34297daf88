//! Damped Newton iteration for square nonlinear systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{DiracError, Result};
use crate::fd;

/// Smallest relative singular value accepted before a Jacobian is declared
/// singular.
pub const SINGULAR_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop when `‖F(x)‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Halving line search on `‖F‖∞`.
    pub damping: bool,
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            damping: true,
            min_step: 2f64.powi(-20),
        }
    }
}

pub type ResidualFn<'a> = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + 'a;
pub type JacobianFn<'a> = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + 'a;

pub enum JacobianProvider<'a> {
    Analytic(&'a JacobianFn<'a>),
    /// Central differences of the residual.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub root: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Largest Jacobian condition number seen (1 when no iteration ran).
    pub condition: f64,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    if v.iter().all(|x| x.is_finite()) {
        v.amax()
    } else {
        f64::INFINITY
    }
}

fn condition_number(j: &DMatrix<f64>) -> f64 {
    let sv = j.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if hi == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solve `F(x) = 0` from `x0`.
pub fn newton_solve(
    f: &ResidualFn<'_>,
    jacobian: JacobianProvider<'_>,
    x0: &DVector<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(DiracError::InvalidInput(
            "solver needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    let dim = x0.len();
    let mut x = x0.clone();
    let mut fx = f(&x)?;
    if fx.len() != dim {
        return Err(DiracError::InvalidInput(format!(
            "residual has length {} for {} unknowns",
            fx.len(),
            dim
        )));
    }
    let mut r = inf_norm(&fx);
    if !r.is_finite() {
        return Err(DiracError::Evaluation(
            "residual is not finite at the initial guess".into(),
        ));
    }
    let mut iterations = 0;
    let mut worst_condition: f64 = 1.0;

    while r > opts.tol {
        if iterations >= opts.max_iter {
            return Err(DiracError::Convergence {
                iterations,
                residual: r,
            });
        }
        let jac = match &jacobian {
            JacobianProvider::Analytic(j) => j(&x)?,
            JacobianProvider::FiniteDifference => fd::jacobian(f, &x, dim, fd::default_fd_scale())?,
        };
        let cond = condition_number(&jac);
        worst_condition = worst_condition.max(cond);
        if !(cond < 1.0 / SINGULAR_CUTOFF) {
            return Err(DiracError::Singular { condition: cond });
        }
        let dx = jac
            .lu()
            .solve(&(-&fx))
            .ok_or(DiracError::Singular { condition: cond })?;

        let mut t = 1.0;
        let mut accepted = None;
        if opts.damping {
            while t >= opts.min_step {
                let trial = &x + &dx * t;
                let ft = f(&trial)?;
                let rt = inf_norm(&ft);
                if rt < r {
                    accepted = Some((trial, ft, rt));
                    break;
                }
                t *= 0.5;
            }
        }
        let (nx, nfx, nr) = match accepted {
            Some(a) => a,
            None => {
                // No decrease found: take the full step and let max_iter bound it.
                let trial = &x + &dx;
                let ft = f(&trial)?;
                let rt = inf_norm(&ft);
                (trial, ft, rt)
            }
        };
        if !nr.is_finite() {
            return Err(DiracError::Evaluation(
                "residual became non-finite during Newton iteration".into(),
            ));
        }
        x = nx;
        fx = nfx;
        r = nr;
        iterations += 1;
    }

    Ok(NewtonOutcome {
        root: x,
        iterations,
        residual: r,
        condition: worst_condition,
    })
}
