//! Built-in systems with analytic partial derivatives.

use nalgebra::{dmatrix, DMatrix, DVector};

use crate::bundle::KinematicDistribution;
use crate::error::{DiracError, Result};
use crate::systems::{
    retraction_constraint, DerivativeProvider, DiscreteHamiltonian, DiscreteLagrangian, DiscreteSystem,
    Dynamics,
};

pub const HARMONIC_OSCILLATOR: &str = "harmonic_oscillator";
pub const FREE_PARTICLE: &str = "free_particle";
pub const NONHOLONOMIC_PARTICLE: &str = "nonholonomic_particle";

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DiracError::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(DiracError::InvalidInput(format!("{name} must be non-negative, got {v}")))
    }
}

/// `L_d(q, q⁺) = h[½((q⁺ − q)/h)² − (λ/2)q²]`.
pub fn harmonic_oscillator_lagrangian(h: f64, lambda: f64) -> Result<DiscreteLagrangian> {
    positive("h", h)?;
    non_negative("lambda", lambda)?;
    let provider = DerivativeProvider::new(1, move |q, qp| {
        let v = (qp[0] - q[0]) / h;
        h * (0.5 * v * v - 0.5 * lambda * q[0] * q[0])
    })
    .with_d1(move |q, qp| DVector::from_element(1, -(qp[0] - q[0]) / h - h * lambda * q[0]))
    .with_d2(move |q, qp| DVector::from_element(1, (qp[0] - q[0]) / h))
    .with_d12(move |_, _| DMatrix::from_element(1, 1, -1.0 / h))
    .with_d22(move |_, _| DMatrix::from_element(1, 1, 1.0 / h));
    DiscreteLagrangian::new(provider)
}

/// Right Legendre transform of [`harmonic_oscillator_lagrangian`]:
/// `H_d(q, p⁺) = q p⁺ + (h/2) p⁺² + (hλ/2) q²`.
pub fn harmonic_oscillator_hamiltonian(h: f64, lambda: f64) -> Result<DiscreteHamiltonian> {
    positive("h", h)?;
    non_negative("lambda", lambda)?;
    let provider = DerivativeProvider::new(1, move |q, p| {
        q[0] * p[0] + 0.5 * h * p[0] * p[0] + 0.5 * h * lambda * q[0] * q[0]
    })
    .with_d1(move |q, p| DVector::from_element(1, p[0] + h * lambda * q[0]))
    .with_d2(move |q, p| DVector::from_element(1, q[0] + h * p[0]))
    .with_d12(|_, _| DMatrix::identity(1, 1))
    .with_d22(move |_, _| DMatrix::from_element(1, 1, h));
    DiscreteHamiltonian::new(provider)
}

pub fn harmonic_oscillator(h: f64, lambda: f64) -> Result<DiscreteSystem> {
    Ok(DiscreteSystem::lagrangian(
        HARMONIC_OSCILLATOR,
        harmonic_oscillator_lagrangian(h, lambda)?,
    ))
}

pub fn harmonic_oscillator_hamiltonian_system(h: f64, lambda: f64) -> Result<DiscreteSystem> {
    Ok(DiscreteSystem::hamiltonian(
        HARMONIC_OSCILLATOR,
        harmonic_oscillator_hamiltonian(h, lambda)?,
    ))
}

/// `L_d(q, q⁺) = m |q⁺ − q|² / (2h)`.
pub fn free_particle_lagrangian(n: usize, h: f64, mass: f64) -> Result<DiscreteLagrangian> {
    positive("h", h)?;
    positive("mass", mass)?;
    if n == 0 {
        return Err(DiracError::InvalidInput("dimension must be positive".into()));
    }
    let provider = DerivativeProvider::new(n, move |q, qp| mass * (qp - q).norm_squared() / (2.0 * h))
        .with_d1(move |q, qp| -(qp - q) * (mass / h))
        .with_d2(move |q, qp| (qp - q) * (mass / h))
        .with_d12(move |q, _| DMatrix::identity(q.len(), q.len()) * (-mass / h))
        .with_d22(move |q, _| DMatrix::identity(q.len(), q.len()) * (mass / h));
    DiscreteLagrangian::new(provider)
}

/// `H_d(q, p⁺) = q·p⁺ + h |p⁺|² / (2m)`.
pub fn free_particle_hamiltonian(n: usize, h: f64, mass: f64) -> Result<DiscreteHamiltonian> {
    positive("h", h)?;
    positive("mass", mass)?;
    if n == 0 {
        return Err(DiracError::InvalidInput("dimension must be positive".into()));
    }
    let provider = DerivativeProvider::new(n, move |q, p| q.dot(p) + h * p.norm_squared() / (2.0 * mass))
        .with_d1(|_, p| p.clone())
        .with_d2(move |q, p| q + p * (h / mass))
        .with_d12(|q, _| DMatrix::identity(q.len(), q.len()))
        .with_d22(move |q, _| DMatrix::identity(q.len(), q.len()) * (h / mass));
    DiscreteHamiltonian::new(provider)
}

pub fn free_particle(n: usize, h: f64, mass: f64) -> Result<DiscreteSystem> {
    Ok(DiscreteSystem::lagrangian(
        FREE_PARTICLE,
        free_particle_lagrangian(n, h, mass)?,
    ))
}

pub fn free_particle_hamiltonian_system(n: usize, h: f64, mass: f64) -> Result<DiscreteSystem> {
    Ok(DiscreteSystem::hamiltonian(
        FREE_PARTICLE,
        free_particle_hamiltonian(n, h, mass)?,
    ))
}

/// `ż = y ẋ` on `R³`: `A(q) = [−y, 0, 1]`.
pub fn nonholonomic_distribution() -> KinematicDistribution {
    KinematicDistribution::new(3, 1, |q| dmatrix![-q[1], 0.0, 1.0]).expect("valid sizes")
}

/// Free particle in `R³` subject to `ż = y ẋ`, with the discrete constraint
/// induced by the chart retraction.
pub fn nonholonomic_particle(h: f64, mass: f64) -> Result<DiscreteSystem> {
    let dist = nonholonomic_distribution();
    let constraint = retraction_constraint(&dist);
    DiscreteSystem::new(
        NONHOLONOMIC_PARTICLE,
        Dynamics::Lagrangian(free_particle_lagrangian(3, h, mass)?),
        dist,
        constraint,
    )
}

/// Nonholonomic particle with the Hamiltonian `q·p⁺ + h|p⁺|²/(2m)`.
pub fn nonholonomic_particle_hamiltonian(h: f64, mass: f64) -> Result<DiscreteSystem> {
    let dist = nonholonomic_distribution();
    let constraint = retraction_constraint(&dist);
    DiscreteSystem::new(
        NONHOLONOMIC_PARTICLE,
        Dynamics::Hamiltonian(free_particle_hamiltonian(3, h, mass)?),
        dist,
        constraint,
    )
}
