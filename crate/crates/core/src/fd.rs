//! Central finite differences.

use nalgebra::{DMatrix, DVector};

/// `ε^{1/3}`, the usual step base for central first differences.
pub fn default_fd_scale() -> f64 {
    f64::EPSILON.cbrt()
}

fn step(scale: f64, x: f64) -> f64 {
    scale * x.abs().max(1.0)
}

/// Gradient of a scalar function by central differences.
pub fn gradient<F>(f: F, x: &DVector<f64>, scale: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut probe = x.clone();
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            let h = step(scale, x[i]);
            probe[i] = x[i] + h;
            let fp = f(&probe);
            probe[i] = x[i] - h;
            let fm = f(&probe);
            probe[i] = x[i];
            (fp - fm) / (2.0 * h)
        }),
    )
}

/// Jacobian `∂f_i/∂x_j` of a vector function by central differences.
pub fn jacobian<F, E>(f: F, x: &DVector<f64>, rows: usize, scale: f64) -> Result<DMatrix<f64>, E>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, E>,
{
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut probe = x.clone();
    for j in 0..x.len() {
        let h = step(scale, x[j]);
        probe[j] = x[j] + h;
        let fp = f(&probe)?;
        probe[j] = x[j] - h;
        let fm = f(&probe)?;
        probe[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

/// `‖a − b‖∞ / max(1, ‖a‖∞, ‖b‖∞)`.
pub fn relative_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() / denom
}

/// Matrix version of [`relative_error`].
pub fn relative_error_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() / denom
}
