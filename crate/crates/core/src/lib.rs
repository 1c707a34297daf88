//! Discrete Dirac mechanics on `Q = Rⁿ`.
//!
//! Discrete Lagrangian and Hamiltonian systems, possibly with kinematic and
//! discrete constraints, are integrated by implicit steppers. Every computed
//! point is checked against the discrete Dirac inclusion
//! `(ver(p_k), ψ_k) ∈ D(Δ(x_k), ω)` on the bundle `T*Q × Q`.
//!
//! Module map:
//!
//! - [`linalg`]: pairing on `V ⊕ V*`, induced Dirac structures, membership.
//! - [`bundle`]: points and (co)tangent vectors of `T*Q × Q`, the two-form,
//!   vertical lift, lifted distributions and admissibility of curves.
//! - [`systems`]: discrete Lagrangians/Hamiltonians, constraints, `ψ_L`, `ψ_H`
//!   and the inclusion residual.
//! - [`stepper`]: Newton-based steppers and trajectories.
//! - [`models`]: built-in systems.

// `!(x < tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod error;
pub mod fd;
pub mod linalg;
pub mod models;
pub mod newton;
pub mod stepper;
pub mod systems;

pub use bundle::{
    admissibility_check, interior_product, lift_annihilator, lifted_distribution, omega_pd, omega_pd_form,
    vertical_lift, Admissibility, CotangentPd, DiscreteCurve, KinematicDistribution, PontryaginPoint, TangentPd,
};
pub use error::{DiracError, Result};
pub use linalg::{induced_dirac, is_dirac, membership_residual, pairing, LinSubspace, PairedVector, SkewForm};
pub use newton::{newton_solve, JacobianProvider, NewtonOptions, NewtonOutcome};
pub use stepper::{
    check_initial_data, lagrangian_seed, run_trajectory, step_hamiltonian, step_lagrangian, Predictor, Seed,
    SolverOptions, StepDiagnostics, StepResult, Trajectory, TrajectoryError,
};
pub use systems::{
    dirac_inclusion_residual, psi_h, psi_l, retraction_constraint, DerivativeCheck, DerivativeProvider,
    DiscreteConstraint, DiscreteHamiltonian, DiscreteLagrangian, DiscreteSystem, Dynamics, SystemKind,
};
