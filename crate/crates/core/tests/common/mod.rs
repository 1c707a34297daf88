//! Test-only oracles. Deliberately written against plain `Vec<f64>` so they
//! share no code path with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-300, "singular oracle system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

/// Bisection on a bracketing interval.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "interval does not bracket a root");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 * (1.0 + lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `L_d(q, q⁺) = dᵀMd/(2h) − h V((q + q⁺)/2)` with
/// `V(x) = ½ xᵀKx + Σ cᵢ xᵢ³`.
#[derive(Debug, Clone)]
pub struct MidpointLagrangian {
    pub n: usize,
    pub h: f64,
    pub mass: Vec<Vec<f64>>,
    pub stiffness: Vec<Vec<f64>>,
    pub cubic: Vec<f64>,
}

impl MidpointLagrangian {
    pub fn random(rng: &mut impl Rng, n: usize, h: f64) -> Self {
        let r: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut mass = vec![vec![0.0; n]; n];
        let mut stiffness = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let rrt: f64 = (0..n).map(|k| r[i][k] * r[j][k]).sum();
                mass[i][j] = 0.5 * rrt / n as f64 + if i == j { 1.0 } else { 0.0 };
            }
        }
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 };
                stiffness[i][j] = v;
                stiffness[j][i] = v;
            }
        }
        let cubic = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        Self { n, h, mass, stiffness, cubic }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        let kx = mat_vec(&self.stiffness, x);
        0.5 * x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>()
            + x.iter().zip(&self.cubic).map(|(xi, c)| c * xi.powi(3)).sum::<f64>()
    }

    pub fn grad_potential(&self, x: &[f64]) -> Vec<f64> {
        let kx = mat_vec(&self.stiffness, x);
        (0..self.n).map(|i| kx[i] + 3.0 * self.cubic[i] * x[i] * x[i]).collect()
    }

    pub fn value(&self, q: &[f64], qp: &[f64]) -> f64 {
        let d: Vec<f64> = qp.iter().zip(q).map(|(a, b)| a - b).collect();
        let md = mat_vec(&self.mass, &d);
        let mid: Vec<f64> = qp.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
        d.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>() / (2.0 * self.h) - self.h * self.potential(&mid)
    }

    fn parts(&self, q: &[f64], qp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d: Vec<f64> = qp.iter().zip(q).map(|(a, b)| a - b).collect();
        let md: Vec<f64> = mat_vec(&self.mass, &d).into_iter().map(|v| v / self.h).collect();
        let mid: Vec<f64> = qp.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
        let g: Vec<f64> = self.grad_potential(&mid).into_iter().map(|v| 0.5 * self.h * v).collect();
        (md, g)
    }

    pub fn d1(&self, q: &[f64], qp: &[f64]) -> Vec<f64> {
        let (md, g) = self.parts(q, qp);
        md.iter().zip(&g).map(|(a, b)| -a - b).collect()
    }

    pub fn d2(&self, q: &[f64], qp: &[f64]) -> Vec<f64> {
        let (md, g) = self.parts(q, qp);
        md.iter().zip(&g).map(|(a, b)| a - b).collect()
    }

    /// Solve `D₂L_d(q_prev, q) + D₁L_d(q, y) = 0` for `y` by chord iteration
    /// with the fixed matrix `−M/h`.
    pub fn del_oracle(&self, q_prev: &[f64], q: &[f64]) -> Vec<f64> {
        let p = self.d2(q_prev, q);
        let mut y: Vec<f64> = q.iter().zip(q_prev).map(|(a, b)| 2.0 * a - b).collect();
        for _ in 0..500 {
            let g: Vec<f64> = p.iter().zip(self.d1(q, &y)).map(|(a, b)| a + b).collect();
            let step = gauss_solve(self.mass.clone(), g);
            let mut delta: f64 = 0.0;
            for i in 0..self.n {
                y[i] += self.h * step[i];
                delta = delta.max((self.h * step[i]).abs());
            }
            if delta < 1e-16 {
                break;
            }
        }
        y
    }
}

pub fn to_lagrangian(l: &MidpointLagrangian) -> dirac_core::DiscreteLagrangian {
    use nalgebra::DVector;
    let (a, b, c) = (l.clone(), l.clone(), l.clone());
    let n = l.n;
    let provider = dirac_core::DerivativeProvider::new(n, move |q, qp| a.value(q.as_slice(), qp.as_slice()))
        .with_d1(move |q, qp| DVector::from_vec(b.d1(q.as_slice(), qp.as_slice())))
        .with_d2(move |q, qp| DVector::from_vec(c.d2(q.as_slice(), qp.as_slice())));
    dirac_core::DiscreteLagrangian::new(provider).expect("analytic partials are consistent")
}
