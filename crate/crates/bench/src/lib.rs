//! Fixtures shared by the benchmarks.

use dirac_core::{lagrangian_seed, models, DiscreteSystem, LinSubspace, PontryaginPoint, SkewForm};
use nalgebra::{dvector, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random `(Δ, Ω)` pair in `Rⁿ` with `dim Δ = k`, seeded by `n` and `k`.
pub fn subspace_and_form(n: usize, k: usize) -> (LinSubspace, SkewForm) {
    let mut rng = ChaCha8Rng::seed_from_u64((n * 64 + k) as u64);
    let basis = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let delta = LinSubspace::new(basis).expect("full column rank");
    let omega = SkewForm::new(&m - m.transpose()).expect("skew");
    (delta, omega)
}

pub fn oscillator() -> (DiscreteSystem, PontryaginPoint) {
    let sys = models::harmonic_oscillator(0.1, 1.0).expect("valid parameters");
    let x0 = lagrangian_seed(&sys, dvector![0.0], dvector![0.1]).expect("seed");
    (sys, x0)
}

pub fn nonholonomic() -> (DiscreteSystem, PontryaginPoint) {
    let sys = models::nonholonomic_particle(0.1, 1.0).expect("valid parameters");
    let x0 = lagrangian_seed(&sys, dvector![0.0, 0.5, 0.0], dvector![0.05, 0.52, 0.025]).expect("seed");
    (sys, x0)
}
