//! Discrete Lagrangian and Hamiltonian systems with constraints, and the
//! one-forms `ψ_L`, `ψ_H` that turn them into discrete Dirac systems.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::{
    interior_product, lifted_distribution, omega_pd_form, vertical_lift, CotangentPd,
    KinematicDistribution, PontryaginPoint,
};
use crate::error::{ensure_dim, DiracError, Result};
use crate::fd;
use crate::linalg::{membership_residual, PairedVector};

pub type ScalarFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
pub type PartialFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type ConstraintFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ConstraintJacobianFn =
    Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Relative tolerance used when validating analytic partials.
pub const DERIVATIVE_REL_TOL: f64 = 1e-5;

/// Random-probe settings for comparing analytic derivatives with central
/// finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub probes: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Probe coordinates are drawn uniformly from `[-radius, radius]`.
    pub radius: f64,
}

impl Default for DerivativeCheck {
    fn default() -> Self {
        Self {
            probes: 8,
            seed: 0x5eed,
            rel_tol: DERIVATIVE_REL_TOL,
            radius: 1.0,
        }
    }
}

impl DerivativeCheck {
    fn probe_points(&self, n: usize) -> Vec<(DVector<f64>, DVector<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = self.radius;
        (0..self.probes)
            .map(|_| {
                let a = DVector::from_fn(n, |_, _| rng.random_range(-r..=r));
                let b = DVector::from_fn(n, |_, _| rng.random_range(-r..=r));
                (a, b)
            })
            .collect()
    }
}

fn finite_vec(v: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(DiracError::Evaluation(format!("{what} produced non-finite values")))
    }
}

/// A scalar function of two `n`-blocks together with its two partial
/// derivatives. Missing partials fall back to central differences.
#[derive(Clone)]
pub struct DerivativeProvider {
    n: usize,
    f: ScalarFn,
    d1: Option<PartialFn>,
    d2: Option<PartialFn>,
    d12: Option<HessianFn>,
    d22: Option<HessianFn>,
    fd_scale: f64,
}

impl fmt::Debug for DerivativeProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DerivativeProvider")
            .field("n", &self.n)
            .field("analytic_d1", &self.d1.is_some())
            .field("analytic_d2", &self.d2.is_some())
            .field("analytic_d12", &self.d12.is_some())
            .field("analytic_d22", &self.d22.is_some())
            .field("fd_scale", &self.fd_scale)
            .finish()
    }
}

impl DerivativeProvider {
    pub fn new<F>(n: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            n,
            f: Arc::new(f),
            d1: None,
            d2: None,
            d12: None,
            d22: None,
            fd_scale: fd::default_fd_scale(),
        }
    }

    pub fn with_d1<F>(mut self, d1: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_d2<F>(mut self, d2: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Jacobian of the first-slot partial with respect to the second slot:
    /// entry `(i, j)` is `∂²f/∂a_i∂b_j`.
    pub fn with_d12<F>(mut self, d12: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.d12 = Some(Arc::new(d12));
        self
    }

    /// Jacobian of the second-slot partial with respect to the second slot.
    pub fn with_d22<F>(mut self, d22: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.d22 = Some(Arc::new(d22));
        self
    }

    pub fn with_fd_scale(mut self, fd_scale: f64) -> Self {
        self.fd_scale = fd_scale;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_analytic_partials(&self) -> (bool, bool) {
        (self.d1.is_some(), self.d2.is_some())
    }

    fn check_args(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
        ensure_dim("first argument", self.n, a.len())?;
        ensure_dim("second argument", self.n, b.len())
    }

    pub fn value(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        self.check_args(a, b)?;
        let v = (self.f)(a, b);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DiracError::Evaluation("function value is not finite".into()))
        }
    }

    pub fn d1(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.d1 {
            Some(d1) => {
                self.check_args(a, b)?;
                let g = d1(a, b);
                ensure_dim("first-slot partial", self.n, g.len())?;
                finite_vec(g, "first-slot partial")
            }
            None => self.fd_d1(a, b),
        }
    }

    pub fn d2(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.d2 {
            Some(d2) => {
                self.check_args(a, b)?;
                let g = d2(a, b);
                ensure_dim("second-slot partial", self.n, g.len())?;
                finite_vec(g, "second-slot partial")
            }
            None => self.fd_d2(a, b),
        }
    }

    fn hessian(&self, h: &Option<HessianFn>, a: &DVector<f64>, b: &DVector<f64>, which: usize) -> Result<DMatrix<f64>> {
        match h {
            Some(h) => {
                self.check_args(a, b)?;
                let m = h(a, b);
                ensure_dim("second-derivative rows", self.n, m.nrows())?;
                ensure_dim("second-derivative columns", self.n, m.ncols())?;
                if m.iter().all(|x| x.is_finite()) {
                    Ok(m)
                } else {
                    Err(DiracError::Evaluation("second derivative produced non-finite values".into()))
                }
            }
            None => self.fd_hessian(a, b, which),
        }
    }

    fn fd_hessian(&self, a: &DVector<f64>, b: &DVector<f64>, which: usize) -> Result<DMatrix<f64>> {
        let scale = fd::default_fd_scale();
        if which == 1 {
            fd::jacobian(|y| self.d1(a, y), b, self.n, scale)
        } else {
            fd::jacobian(|y| self.d2(a, y), b, self.n, scale)
        }
    }

    /// `∂(d1)/∂b`, analytic when supplied.
    pub fn d12(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.hessian(&self.d12, a, b, 1)
    }

    /// `∂(d2)/∂b`, analytic when supplied.
    pub fn d22(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.hessian(&self.d22, a, b, 2)
    }

    /// First-slot partial by central differences, ignoring any analytic one.
    pub fn fd_d1(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_args(a, b)?;
        let g = fd::gradient(|x| (self.f)(x, b), a, self.fd_scale);
        finite_vec(g, "finite-difference partial")
    }

    pub fn fd_d2(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_args(a, b)?;
        let g = fd::gradient(|x| (self.f)(a, x), b, self.fd_scale);
        finite_vec(g, "finite-difference partial")
    }

    /// Compare analytic partials against central differences at one point.
    pub fn check_at(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        rel_tol: f64,
        labels: [&str; 2],
    ) -> Result<()> {
        if self.d1.is_some() {
            let err = fd::relative_error(&self.d1(a, b)?, &self.fd_d1(a, b)?);
            if !(err < rel_tol) {
                return Err(DiracError::DerivativeMismatch {
                    what: labels[0].to_string(),
                    error: err,
                });
            }
        }
        if self.d2.is_some() {
            let err = fd::relative_error(&self.d2(a, b)?, &self.fd_d2(a, b)?);
            if !(err < rel_tol) {
                return Err(DiracError::DerivativeMismatch {
                    what: labels[1].to_string(),
                    error: err,
                });
            }
        }
        for (h, which, label) in [(&self.d12, 1, labels[0]), (&self.d22, 2, labels[1])] {
            if h.is_some() {
                let err = fd::relative_error_mat(&self.hessian(h, a, b, which)?, &self.fd_hessian(a, b, which)?);
                if !(err < rel_tol) {
                    return Err(DiracError::DerivativeMismatch {
                        what: format!("second-slot derivative of {label}"),
                        error: err,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn check(&self, check: &DerivativeCheck, labels: [&str; 2]) -> Result<()> {
        for (a, b) in check.probe_points(self.n) {
            self.check_at(&a, &b, check.rel_tol, labels)?;
        }
        Ok(())
    }
}

/// A discrete Lagrangian `L_d(q, q⁺)`.
#[derive(Debug, Clone)]
pub struct DiscreteLagrangian {
    provider: DerivativeProvider,
}

impl DiscreteLagrangian {
    pub const LABELS: [&'static str; 2] = ["D1 L_d", "D2 L_d"];

    /// Wrap `provider`, validating analytic partials with the default probes.
    pub fn new(provider: DerivativeProvider) -> Result<Self> {
        Self::with_check(provider, Some(DerivativeCheck::default()))
    }

    pub fn with_check(provider: DerivativeProvider, check: Option<DerivativeCheck>) -> Result<Self> {
        if let Some(c) = check {
            provider.check(&c, Self::LABELS)?;
        }
        Ok(Self { provider })
    }

    pub fn n(&self) -> usize {
        self.provider.n()
    }

    pub fn provider(&self) -> &DerivativeProvider {
        &self.provider
    }

    pub fn value(&self, q: &DVector<f64>, qplus: &DVector<f64>) -> Result<f64> {
        self.provider.value(q, qplus)
    }

    pub fn d1(&self, q: &DVector<f64>, qplus: &DVector<f64>) -> Result<DVector<f64>> {
        self.provider.d1(q, qplus)
    }

    pub fn d2(&self, q: &DVector<f64>, qplus: &DVector<f64>) -> Result<DVector<f64>> {
        self.provider.d2(q, qplus)
    }
}

/// A discrete right Hamiltonian `H_d(q, p⁺)`.
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    provider: DerivativeProvider,
}

impl DiscreteHamiltonian {
    pub const LABELS: [&'static str; 2] = ["dH_d/dq", "dH_d/dp"];

    pub fn new(provider: DerivativeProvider) -> Result<Self> {
        Self::with_check(provider, Some(DerivativeCheck::default()))
    }

    pub fn with_check(provider: DerivativeProvider, check: Option<DerivativeCheck>) -> Result<Self> {
        if let Some(c) = check {
            provider.check(&c, Self::LABELS)?;
        }
        Ok(Self { provider })
    }

    pub fn n(&self) -> usize {
        self.provider.n()
    }

    pub fn provider(&self) -> &DerivativeProvider {
        &self.provider
    }

    pub fn value(&self, q: &DVector<f64>, pplus: &DVector<f64>) -> Result<f64> {
        self.provider.value(q, pplus)
    }

    /// `∂H_d/∂q`, a covector at `q`.
    pub fn dq(&self, q: &DVector<f64>, pplus: &DVector<f64>) -> Result<DVector<f64>> {
        self.provider.d1(q, pplus)
    }

    /// `∂H_d/∂p`, a vector.
    pub fn dp(&self, q: &DVector<f64>, pplus: &DVector<f64>) -> Result<DVector<f64>> {
        self.provider.d2(q, pplus)
    }
}

/// The discrete constraint `D = {(q, q⁺) : φ_d(q, q⁺) = 0} ⊂ Q × Q`.
#[derive(Clone)]
pub struct DiscreteConstraint {
    n: usize,
    md: usize,
    phi: ConstraintFn,
    jac2: Option<ConstraintJacobianFn>,
    fd_scale: f64,
}

impl fmt::Debug for DiscreteConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteConstraint")
            .field("n", &self.n)
            .field("md", &self.md)
            .field("analytic_jac2", &self.jac2.is_some())
            .finish()
    }
}

impl DiscreteConstraint {
    pub fn new<F>(n: usize, md: usize, phi: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            n,
            md,
            phi: Arc::new(phi),
            jac2: None,
            fd_scale: fd::default_fd_scale(),
        }
    }

    pub fn with_jac2<F>(mut self, jac2: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac2 = Some(Arc::new(jac2));
        self
    }

    /// `D = Q × Q`.
    pub fn unconstrained(n: usize) -> Self {
        Self::new(n, 0, |_, _| DVector::zeros(0)).with_jac2(move |_, _| DMatrix::zeros(0, n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn md(&self) -> usize {
        self.md
    }

    pub fn eval(&self, q: &DVector<f64>, qplus: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim("constraint argument", self.n, q.len())?;
        ensure_dim("constraint argument", self.n, qplus.len())?;
        let v = (self.phi)(q, qplus);
        ensure_dim("constraint value", self.md, v.len())?;
        finite_vec(v, "discrete constraint")
    }

    /// `∂φ_d/∂q⁺`, analytic when supplied.
    pub fn jacobian2(&self, q: &DVector<f64>, qplus: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.jac2 {
            Some(j) => {
                ensure_dim("constraint argument", self.n, q.len())?;
                ensure_dim("constraint argument", self.n, qplus.len())?;
                let m = j(q, qplus);
                if m.shape() != (self.md, self.n) {
                    return Err(DiracError::Evaluation(format!(
                        "constraint Jacobian has shape {:?}, expected {:?}",
                        m.shape(),
                        (self.md, self.n)
                    )));
                }
                Ok(m)
            }
            None => self.fd_jacobian2(q, qplus),
        }
    }

    pub fn fd_jacobian2(&self, q: &DVector<f64>, qplus: &DVector<f64>) -> Result<DMatrix<f64>> {
        fd::jacobian(|x| self.eval(q, x), qplus, self.md, self.fd_scale)
    }

    pub fn check(&self, check: &DerivativeCheck) -> Result<()> {
        if self.jac2.is_none() {
            return Ok(());
        }
        for (q, qplus) in check.probe_points(self.n) {
            let err = fd::relative_error_mat(&self.jacobian2(&q, &qplus)?, &self.fd_jacobian2(&q, &qplus)?);
            if !(err < check.rel_tol) {
                return Err(DiracError::DerivativeMismatch {
                    what: "d phi_d / d q+".into(),
                    error: err,
                });
            }
        }
        Ok(())
    }
}

/// Discrete constraint induced from `Δ_Q` by the chart retraction
/// `R_q(v) = q + v`: `φ_d(q, q⁺) = A(q)(q⁺ − q)`.
pub fn retraction_constraint(dist: &KinematicDistribution) -> DiscreteConstraint {
    let n = dist.n();
    let phi_dist = dist.clone();
    let jac_dist = dist.clone();
    DiscreteConstraint::new(n, dist.m(), move |q, qplus| phi_dist.raw(q) * (qplus - q))
        .with_jac2(move |q, _| jac_dist.raw(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Lagrangian,
    Hamiltonian,
}

#[derive(Debug, Clone)]
pub enum Dynamics {
    Lagrangian(DiscreteLagrangian),
    Hamiltonian(DiscreteHamiltonian),
}

/// `(Q, D(Δ, ω), D, ψ)` with `ψ = ψ_L` or `ψ_H` depending on the dynamics.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    name: String,
    dynamics: Dynamics,
    dist: KinematicDistribution,
    constraint: DiscreteConstraint,
}

impl DiscreteSystem {
    /// The constraint codimension must equal the corank of the distribution so
    /// each step is a square system.
    pub fn new(
        name: impl Into<String>,
        dynamics: Dynamics,
        dist: KinematicDistribution,
        constraint: DiscreteConstraint,
    ) -> Result<Self> {
        let n = match &dynamics {
            Dynamics::Lagrangian(l) => l.n(),
            Dynamics::Hamiltonian(h) => h.n(),
        };
        ensure_dim("distribution dimension", n, dist.n())?;
        ensure_dim("discrete constraint dimension", n, constraint.n())?;
        if dist.m() != constraint.md() {
            return Err(DiracError::InvalidInput(format!(
                "distribution corank {} differs from discrete constraint codimension {}",
                dist.m(),
                constraint.md()
            )));
        }
        Ok(Self {
            name: name.into(),
            dynamics,
            dist,
            constraint,
        })
    }

    pub fn lagrangian(name: impl Into<String>, lag: DiscreteLagrangian) -> Self {
        let n = lag.n();
        Self::new(
            name,
            Dynamics::Lagrangian(lag),
            KinematicDistribution::unconstrained(n),
            DiscreteConstraint::unconstrained(n),
        )
        .expect("unconstrained system is consistent")
    }

    pub fn hamiltonian(name: impl Into<String>, ham: DiscreteHamiltonian) -> Self {
        let n = ham.n();
        Self::new(
            name,
            Dynamics::Hamiltonian(ham),
            KinematicDistribution::unconstrained(n),
            DiscreteConstraint::unconstrained(n),
        )
        .expect("unconstrained system is consistent")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SystemKind {
        match self.dynamics {
            Dynamics::Lagrangian(_) => SystemKind::Lagrangian,
            Dynamics::Hamiltonian(_) => SystemKind::Hamiltonian,
        }
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn m(&self) -> usize {
        self.dist.m()
    }

    pub fn distribution(&self) -> &KinematicDistribution {
        &self.dist
    }

    pub fn constraint(&self) -> &DiscreteConstraint {
        &self.constraint
    }

    pub fn as_lagrangian(&self) -> Option<&DiscreteLagrangian> {
        match &self.dynamics {
            Dynamics::Lagrangian(l) => Some(l),
            Dynamics::Hamiltonian(_) => None,
        }
    }

    pub fn as_hamiltonian(&self) -> Option<&DiscreteHamiltonian> {
        match &self.dynamics {
            Dynamics::Hamiltonian(h) => Some(h),
            Dynamics::Lagrangian(_) => None,
        }
    }

    /// `ψ_k` at `x_k` given the next momentum.
    pub fn psi(&self, x: &PontryaginPoint, p_next: &DVector<f64>) -> Result<CotangentPd> {
        match &self.dynamics {
            Dynamics::Lagrangian(l) => psi_l(l, x, p_next),
            Dynamics::Hamiltonian(h) => psi_h(h, x, p_next),
        }
    }
}

/// `ψ_L = −D₁L_d(q, q⁺) dq + (p_{k+1} − D₂L_d(q, q⁺)) dq⁺`.
pub fn psi_l(lag: &DiscreteLagrangian, x: &PontryaginPoint, p_next: &DVector<f64>) -> Result<CotangentPd> {
    ensure_dim("ψ_L point", lag.n(), x.n())?;
    ensure_dim("ψ_L next momentum", lag.n(), p_next.len())?;
    let d1 = lag.d1(&x.q, &x.qplus)?;
    let d2 = lag.d2(&x.q, &x.qplus)?;
    Ok(CotangentPd {
        bq: -d1,
        bp: DVector::zeros(x.n()),
        bqplus: p_next - d2,
    })
}

/// `ψ_H = ∂H_d/∂q(q, p_{k+1}) dq + (∂H_d/∂p(q, p_{k+1}) − q⁺) dp`.
pub fn psi_h(ham: &DiscreteHamiltonian, x: &PontryaginPoint, p_next: &DVector<f64>) -> Result<CotangentPd> {
    ensure_dim("ψ_H point", ham.n(), x.n())?;
    ensure_dim("ψ_H next momentum", ham.n(), p_next.len())?;
    let dq = ham.dq(&x.q, p_next)?;
    let dp = ham.dp(&x.q, p_next)?;
    Ok(CotangentPd {
        bq: dq,
        bp: dp - &x.qplus,
        bqplus: DVector::zeros(x.n()),
    })
}

/// Residual of the discrete Dirac inclusion
/// `(ver(p_k), ψ_k) ∈ D(Δ(x_k), ω)` at a single point.
///
/// Goes through the generic induced-structure membership test on the `3n`
/// tangent space, so it equals the Euclidean norm of
/// `ψ − ω(ver(p), ·)` restricted to `Δ(x)`.
pub fn dirac_inclusion_residual(
    sys: &DiscreteSystem,
    x: &PontryaginPoint,
    p_next: &DVector<f64>,
) -> Result<f64> {
    ensure_dim("inclusion point", sys.n(), x.n())?;
    let v = vertical_lift(x, &x.p)?;
    let psi = sys.psi(x, p_next)?;
    let delta = lifted_distribution(sys.distribution(), x)?;
    let omega = omega_pd_form(x.n());
    let elem = PairedVector::new(v.stacked(), psi.stacked())?;
    debug_assert!(delta.distance(&elem.v)? < 1e-12, "vertical lift left Δ(x)");
    membership_residual(&elem, &delta, &omega)
}

/// `ψ − ω(ver(p), ·)`: the covector whose restriction to `Δ(x)` must vanish.
pub fn inclusion_defect(sys: &DiscreteSystem, x: &PontryaginPoint, p_next: &DVector<f64>) -> Result<CotangentPd> {
    let v = vertical_lift(x, &x.p)?;
    let psi = sys.psi(x, p_next)?;
    let iv = interior_product(&v);
    Ok(CotangentPd {
        bq: psi.bq - iv.bq,
        bp: psi.bp - iv.bp,
        bqplus: psi.bqplus - iv.bqplus,
    })
}
