//! Implicit steppers for the discrete Lagrange–Dirac and Hamilton–Dirac
//! equations, and trajectory generation.
//!
//! Each step solves a square system for the new configuration (and, for the
//! Hamiltonian form, the new momentum) together with the constraint
//! multipliers, then certifies the completed point against the discrete Dirac
//! inclusion.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::bundle::{admissibility_check, Admissibility, DiscreteCurve, PontryaginPoint};
use crate::error::{ensure_dim, DiracError, Result};
use crate::newton::{newton_solve, JacobianProvider, NewtonOptions};
use crate::systems::{
    dirac_inclusion_residual, DiscreteHamiltonian, DiscreteLagrangian, DiscreteSystem, SystemKind,
    DERIVATIVE_REL_TOL,
};

/// Accepted steps must satisfy `inclusion_residual ≤ INCLUSION_FACTOR × tol`.
pub const INCLUSION_FACTOR: f64 = 10.0;

/// Condition number of `∂²H_d/∂q∂p` above which a regularity warning is issued.
pub const REGULARITY_CONDITION_LIMIT: f64 = 1e12;

/// Initial guess for the Newton unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Predictor {
    /// `q⁺ ≈ 2q_{k+1} − q_k` (Lagrangian) or `q_{k+1} ≈ ∂H_d/∂p(q_k, p_k)`
    /// (Hamiltonian).
    #[default]
    ConstantVelocity,
    /// Reuse the current configuration.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Threshold on the infinity norm of the step residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Halving line search.
    pub damping: bool,
    pub min_step: f64,
    pub predictor: Predictor,
    /// Compare analytic partials with finite differences at every step.
    pub check_derivatives: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            damping: true,
            min_step: 2f64.powi(-20),
            predictor: Predictor::ConstantVelocity,
            check_derivatives: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(DiracError::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(DiracError::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(DiracError::InvalidInput(format!(
                "min_step must lie in (0, 1], got {}",
                self.min_step
            )));
        }
        Ok(())
    }

    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            min_step: self.min_step,
        }
    }
}

/// Outcome of one implicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// The point certified by this step. For the Lagrangian stepper this is
    /// the new point `x_{k+1}`; for the Hamiltonian stepper it is the
    /// completed `x_k = (q_k, p_k, q_{k+1})`.
    pub next: PontryaginPoint,
    /// Momentum of the point after `next`.
    pub p_next: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub iterations: usize,
    /// `‖F‖∞` of the solved system.
    pub residual: f64,
    /// Dirac-inclusion residual of `next` paired with `p_next`.
    pub inclusion_residual: f64,
    /// `‖φ_d(next.q, next.qplus)‖∞`.
    pub constraint_residual: f64,
    /// Largest Newton Jacobian condition number.
    pub jacobian_condition: f64,
    /// Condition number of `∂²H_d/∂q∂p` (Hamiltonian steps only).
    pub regularity_condition: Option<f64>,
}

fn split(z: &DVector<f64>, at: usize) -> (DVector<f64>, DVector<f64>) {
    (
        z.rows(0, at).into_owned(),
        z.rows(at, z.len() - at).into_owned(),
    )
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

/// Least-squares multipliers `μ` with `Aᵀμ ≈ covector`.
fn least_squares_multipliers(a: &DMatrix<f64>, covector: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    a.transpose()
        .svd(true, true)
        .solve(covector, 1e-14)
        .map_err(|e| DiracError::Evaluation(e.to_string()))
}

fn require_lagrangian(sys: &DiscreteSystem) -> Result<&DiscreteLagrangian> {
    sys.as_lagrangian().ok_or_else(|| {
        DiracError::Unsupported(format!("system '{}' is not Lagrangian", sys.name()))
    })
}

fn require_hamiltonian(sys: &DiscreteSystem) -> Result<&DiscreteHamiltonian> {
    sys.as_hamiltonian().ok_or_else(|| {
        DiracError::Unsupported(format!("system '{}' is not Hamiltonian", sys.name()))
    })
}

/// Distance of `p₀ + D₁L_d(q₀, q₀⁺)` from `Δ_Q°(q₀)`; zero when `x0` can start
/// a trajectory.
pub fn check_initial_data(sys: &DiscreteSystem, x0: &PontryaginPoint) -> Result<f64> {
    let lag = sys.as_lagrangian().ok_or_else(|| {
        DiracError::Unsupported(
            "initial momentum of a Hamiltonian system is free; consistency of q⁺ shows up in the step residuals"
                .into(),
        )
    })?;
    ensure_dim("initial point", sys.n(), x0.n())?;
    let force = &x0.p + lag.d1(&x0.q, &x0.qplus)?;
    sys.distribution().annihilator_distance(&x0.q, &force)
}

/// The consistent Lagrangian seed `(q₀, −D₁L_d(q₀, q₁), q₁)`.
pub fn lagrangian_seed(sys: &DiscreteSystem, q0: DVector<f64>, q1: DVector<f64>) -> Result<PontryaginPoint> {
    let lag = require_lagrangian(sys)?;
    ensure_dim("q0", sys.n(), q0.len())?;
    ensure_dim("q1", sys.n(), q1.len())?;
    let p0 = -lag.d1(&q0, &q1)?;
    PontryaginPoint::new(q0, p0, q1)
}

pub fn step_lagrangian(sys: &DiscreteSystem, x: &PontryaginPoint, opts: &SolverOptions) -> Result<StepResult> {
    step_lagrangian_warm(sys, x, None, opts)
}

/// [`step_lagrangian`] with an initial guess for the multipliers.
///
/// Solves for `(q⁺_new, λ)`:
///
/// ```text
/// p_{k+1} + D₁L_d(q_{k+1}, q⁺_new) − A(q_{k+1})ᵀλ = 0
/// φ_d(q_{k+1}, q⁺_new) = 0
/// ```
///
/// with `q_{k+1} = x.qplus` and `p_{k+1} = D₂L_d(x.q, x.qplus)`.
pub fn step_lagrangian_warm(
    sys: &DiscreteSystem,
    x: &PontryaginPoint,
    lambda0: Option<&DVector<f64>>,
    opts: &SolverOptions,
) -> Result<StepResult> {
    let lag = require_lagrangian(sys)?;
    opts.validate()?;
    let (n, m) = (sys.n(), sys.m());
    ensure_dim("step point", n, x.n())?;
    let (qk, qn) = (&x.q, &x.qplus);

    if opts.check_derivatives {
        lag.provider()
            .check_at(qk, qn, DERIVATIVE_REL_TOL, DiscreteLagrangian::LABELS)?;
    }
    let incoming = check_initial_data(sys, x)?;
    if incoming > opts.tol {
        warn!(
            "{}: input point violates force balance by {incoming:e}; stepping anyway",
            sys.name()
        );
    }

    let p_next = lag.d2(qk, qn)?;
    let a = sys.distribution().annihilator(qn)?;
    let constraint = sys.constraint();

    let residual = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let (q_new, lambda) = split(z, n);
        let force = &p_next + lag.d1(qn, &q_new)? - a.tr_mul(&lambda);
        let phi = constraint.eval(qn, &q_new)?;
        let mut out = DVector::zeros(n + m);
        out.rows_mut(0, n).copy_from(&force);
        out.rows_mut(n, m).copy_from(&phi);
        Ok(out)
    };
    let jacobian = |z: &DVector<f64>| -> Result<DMatrix<f64>> {
        let (q_new, _) = split(z, n);
        let mut j = DMatrix::zeros(n + m, n + m);
        j.view_mut((0, 0), (n, n)).copy_from(&lag.provider().d12(qn, &q_new)?);
        j.view_mut((0, n), (n, m)).copy_from(&(-a.transpose()));
        j.view_mut((n, 0), (m, n))
            .copy_from(&constraint.jacobian2(qn, &q_new)?);
        Ok(j)
    };

    let q_guess = match opts.predictor {
        Predictor::ConstantVelocity => qn * 2.0 - qk,
        Predictor::Hold => qn.clone(),
    };
    let mut z0 = DVector::zeros(n + m);
    z0.rows_mut(0, n).copy_from(&q_guess);
    if let Some(l) = lambda0 {
        ensure_dim("multiplier guess", m, l.len())?;
        z0.rows_mut(n, m).copy_from(l);
    }

    let out = newton_solve(&residual, JacobianProvider::Analytic(&jacobian), &z0, &opts.newton())?;
    let (q_new, multipliers) = split(&out.root, n);
    let next = PontryaginPoint::new(qn.clone(), p_next, q_new)?;
    let p_after = lag.d2(&next.q, &next.qplus)?;
    let inclusion_residual = dirac_inclusion_residual(sys, &next, &p_after)?;
    let constraint_residual = inf_norm(&constraint.eval(&next.q, &next.qplus)?);
    certify(inclusion_residual, opts)?;

    Ok(StepResult {
        next,
        p_next: p_after,
        multipliers,
        iterations: out.iterations,
        residual: out.residual,
        inclusion_residual,
        constraint_residual,
        jacobian_condition: out.condition,
        regularity_condition: None,
    })
}

fn certify(inclusion_residual: f64, opts: &SolverOptions) -> Result<()> {
    let bound = INCLUSION_FACTOR * opts.tol;
    if inclusion_residual <= bound {
        Ok(())
    } else {
        Err(DiracError::InclusionViolation {
            residual: inclusion_residual,
            bound,
        })
    }
}

pub fn step_hamiltonian(
    sys: &DiscreteSystem,
    q: &DVector<f64>,
    p: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<StepResult> {
    step_hamiltonian_warm(sys, q, p, None, opts)
}

/// [`step_hamiltonian`] with an initial guess for the multipliers.
///
/// Solves for `(p_{k+1}, q_{k+1}, λ)`:
///
/// ```text
/// p_k − ∂H_d/∂q(q_k, p_{k+1}) − A(q_k)ᵀλ = 0
/// q_{k+1} − ∂H_d/∂p(q_k, p_{k+1}) = 0
/// φ_d(q_k, q_{k+1}) = 0
/// ```
pub fn step_hamiltonian_warm(
    sys: &DiscreteSystem,
    q: &DVector<f64>,
    p: &DVector<f64>,
    lambda0: Option<&DVector<f64>>,
    opts: &SolverOptions,
) -> Result<StepResult> {
    let ham = require_hamiltonian(sys)?;
    opts.validate()?;
    let (n, m) = (sys.n(), sys.m());
    ensure_dim("q", n, q.len())?;
    ensure_dim("p", n, p.len())?;
    if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
        return Err(DiracError::InvalidInput("non-finite Hamiltonian state".into()));
    }
    if opts.check_derivatives {
        ham.provider()
            .check_at(q, p, DERIVATIVE_REL_TOL, DiscreteHamiltonian::LABELS)?;
    }

    let a = sys.distribution().annihilator(q)?;
    let constraint = sys.constraint();
    let unknowns = 2 * n + m;

    let residual = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let p1 = z.rows(0, n).into_owned();
        let q1 = z.rows(n, n).into_owned();
        let lambda = z.rows(2 * n, m).into_owned();
        let mut out = DVector::zeros(unknowns);
        out.rows_mut(0, n)
            .copy_from(&(p - ham.dq(q, &p1)? - a.tr_mul(&lambda)));
        out.rows_mut(n, n).copy_from(&(&q1 - ham.dp(q, &p1)?));
        out.rows_mut(2 * n, m).copy_from(&constraint.eval(q, &q1)?);
        Ok(out)
    };
    let jacobian = |z: &DVector<f64>| -> Result<DMatrix<f64>> {
        let p1 = z.rows(0, n).into_owned();
        let q1 = z.rows(n, n).into_owned();
        let mut j = DMatrix::zeros(unknowns, unknowns);
        let dq_dp = ham.provider().d12(q, &p1)?;
        let dp_dp = ham.provider().d22(q, &p1)?;
        j.view_mut((0, 0), (n, n)).copy_from(&(-dq_dp));
        j.view_mut((0, 2 * n), (n, m)).copy_from(&(-a.transpose()));
        j.view_mut((n, 0), (n, n)).copy_from(&(-dp_dp));
        j.view_mut((n, n), (n, n)).fill_with_identity();
        j.view_mut((2 * n, n), (m, n))
            .copy_from(&constraint.jacobian2(q, &q1)?);
        Ok(j)
    };

    let q_guess = match opts.predictor {
        Predictor::ConstantVelocity => ham.dp(q, p)?,
        Predictor::Hold => q.clone(),
    };
    let mut z0 = DVector::zeros(unknowns);
    z0.rows_mut(0, n).copy_from(p);
    z0.rows_mut(n, n).copy_from(&q_guess);
    if let Some(l) = lambda0 {
        ensure_dim("multiplier guess", m, l.len())?;
        z0.rows_mut(2 * n, m).copy_from(l);
    }

    let out = newton_solve(&residual, JacobianProvider::Analytic(&jacobian), &z0, &opts.newton())?;
    let p1 = out.root.rows(0, n).into_owned();
    let q1 = out.root.rows(n, n).into_owned();
    let multipliers = out.root.rows(2 * n, m).into_owned();

    let cross = ham.provider().d12(q, &p1)?;
    let sv = cross.singular_values();
    let regularity = if sv.max() == 0.0 { f64::INFINITY } else { sv.max() / sv.min() };
    if !(regularity <= REGULARITY_CONDITION_LIMIT) {
        warn!(
            "{}: d²H_d/dq dp is near-singular (condition {regularity:e}); p_(k+1) is not locally determined",
            sys.name()
        );
    }

    let next = PontryaginPoint::new(q.clone(), p.clone(), q1)?;
    let inclusion_residual = dirac_inclusion_residual(sys, &next, &p1)?;
    let constraint_residual = inf_norm(&constraint.eval(&next.q, &next.qplus)?);
    certify(inclusion_residual, opts)?;

    Ok(StepResult {
        next,
        p_next: p1,
        multipliers,
        iterations: out.iterations,
        residual: out.residual,
        inclusion_residual,
        constraint_residual,
        jacobian_condition: out.condition,
        regularity_condition: Some(regularity),
    })
}

/// Initial data for [`run_trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    /// A full point `x₀ = (q₀, p₀, q₁)`.
    Lagrangian(PontryaginPoint),
    /// `(q₀, p₀)`; `q₁` is solved for.
    Hamiltonian { q: DVector<f64>, p: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub inclusion_residual: f64,
    pub constraint_residual: f64,
    pub multipliers: DVector<f64>,
}

impl From<&StepResult> for StepDiagnostics {
    fn from(r: &StepResult) -> Self {
        Self {
            iterations: r.iterations,
            residual: r.residual,
            inclusion_residual: r.inclusion_residual,
            constraint_residual: r.constraint_residual,
            multipliers: r.multipliers.clone(),
        }
    }
}

/// A discrete trajectory `x_0, …, x_N` with per-point diagnostics.
///
/// `seed_diagnostics` describes `x_0`; `diagnostics[k]` describes the step
/// that produced `x_{k+1}`. For Hamiltonian systems completing `x_0` already
/// takes one solve, whose diagnostics become the seed diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub system: String,
    pub kind: SystemKind,
    pub steps: usize,
    pub options: SolverOptions,
    pub curve: DiscreteCurve,
    pub seed_diagnostics: Option<StepDiagnostics>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Momentum following the last point.
    pub final_momentum: Option<DVector<f64>>,
}

impl Trajectory {
    fn empty(sys: &DiscreteSystem, steps: usize, opts: &SolverOptions) -> Self {
        Self {
            system: sys.name().to_string(),
            kind: sys.kind(),
            steps,
            options: *opts,
            curve: DiscreteCurve::default(),
            seed_diagnostics: None,
            diagnostics: Vec::new(),
            final_momentum: None,
        }
    }

    pub fn points(&self) -> &[PontryaginPoint] {
        self.curve.points()
    }

    /// Diagnostics aligned with the points: entry `k` describes `x_k`.
    pub fn point_diagnostics(&self) -> impl Iterator<Item = &StepDiagnostics> {
        self.seed_diagnostics.iter().chain(self.diagnostics.iter())
    }

    pub fn max_residual(&self) -> f64 {
        self.point_diagnostics().map(|d| d.residual).fold(0.0, f64::max)
    }

    pub fn max_inclusion_residual(&self) -> f64 {
        self.point_diagnostics()
            .map(|d| d.inclusion_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.point_diagnostics()
            .map(|d| d.constraint_residual)
            .fold(0.0, f64::max)
    }
}

/// A failed step together with everything computed before it.
#[derive(Debug, Clone)]
pub struct TrajectoryError {
    /// Index of the point that could not be produced.
    pub index: usize,
    pub source: DiracError,
    pub partial: Box<Trajectory>,
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step producing point {} failed: {}", self.index, self.source)
    }
}

impl std::error::Error for TrajectoryError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

fn lagrangian_seed_diagnostics(sys: &DiscreteSystem, x0: &PontryaginPoint) -> Result<(StepDiagnostics, DVector<f64>)> {
    let lag = require_lagrangian(sys)?;
    let force = &x0.p + lag.d1(&x0.q, &x0.qplus)?;
    let a = sys.distribution().annihilator(&x0.q)?;
    let multipliers = least_squares_multipliers(&a, &force)?;
    let p1 = lag.d2(&x0.q, &x0.qplus)?;
    let diag = StepDiagnostics {
        iterations: 0,
        residual: check_initial_data(sys, x0)?,
        inclusion_residual: dirac_inclusion_residual(sys, x0, &p1)?,
        constraint_residual: inf_norm(&sys.constraint().eval(&x0.q, &x0.qplus)?),
        multipliers,
    };
    Ok((diag, p1))
}

/// Iterate the stepper matching `sys` for `steps` steps.
pub fn run_trajectory(
    sys: &DiscreteSystem,
    seed: &Seed,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Trajectory, TrajectoryError> {
    let mut traj = Trajectory::empty(sys, steps, opts);
    let fail = |traj: Trajectory, index: usize, source: DiracError| TrajectoryError {
        index,
        source,
        partial: Box::new(traj),
    };
    if let Err(e) = opts.validate() {
        return Err(fail(traj, 0, e));
    }

    match (sys.kind(), seed) {
        (SystemKind::Lagrangian, Seed::Lagrangian(x0)) => {
            if let Err(e) = ensure_dim("seed", sys.n(), x0.n()) {
                return Err(fail(traj, 0, e));
            }
            let (diag, p1) = match lagrangian_seed_diagnostics(sys, x0) {
                Ok(d) => d,
                Err(e) => return Err(fail(traj, 0, e)),
            };
            if diag.residual > opts.tol {
                warn!(
                    "{}: seed is inconsistent (force-balance defect {:e})",
                    sys.name(),
                    diag.residual
                );
            }
            let mut lambda = diag.multipliers.clone();
            traj.seed_diagnostics = Some(diag);
            traj.final_momentum = Some(p1);
            traj.curve.push(x0.clone());
            for k in 0..steps {
                let x = traj.curve.last().expect("seeded").clone();
                match step_lagrangian_warm(sys, &x, Some(&lambda), opts) {
                    Ok(r) => {
                        lambda = r.multipliers.clone();
                        traj.diagnostics.push(StepDiagnostics::from(&r));
                        traj.final_momentum = Some(r.p_next.clone());
                        traj.curve.push(r.next);
                    }
                    Err(e) => return Err(fail(traj, k + 1, e)),
                }
            }
        }
        (SystemKind::Hamiltonian, Seed::Hamiltonian { q, p }) => {
            let mut state = (q.clone(), p.clone());
            let mut lambda: Option<DVector<f64>> = None;
            for k in 0..=steps {
                match step_hamiltonian_warm(sys, &state.0, &state.1, lambda.as_ref(), opts) {
                    Ok(r) => {
                        lambda = Some(r.multipliers.clone());
                        let diag = StepDiagnostics::from(&r);
                        if k == 0 {
                            traj.seed_diagnostics = Some(diag);
                        } else {
                            traj.diagnostics.push(diag);
                        }
                        state = (r.next.qplus.clone(), r.p_next.clone());
                        traj.final_momentum = Some(r.p_next.clone());
                        traj.curve.push(r.next);
                    }
                    Err(e) => return Err(fail(traj, k, e)),
                }
            }
        }
        (kind, _) => {
            let e = DiracError::InvalidInput(format!("seed does not match a {kind:?} system"));
            return Err(fail(traj, 0, e));
        }
    }

    debug_assert_eq!(
        admissibility_check(&traj.curve, 0.0).ok(),
        Some(Admissibility::Admissible)
    );
    debug_assert_eq!(traj.diagnostics.len(), steps);
    Ok(traj)
}
