//! Coordinates on the discrete Pontryagin bundle `T*Q × Q` with `Q = Rⁿ`.
//!
//! A point is `x = (q, p, q⁺)`; tangent and cotangent vectors at `x` are split
//! into the same three blocks.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, DiracError, Result};
use crate::linalg::{LinSubspace, SkewForm, RANK_CUTOFF};

/// Default per-component tolerance for [`admissibility_check`].
pub const DEFAULT_ADMISSIBILITY_TOL: f64 = 1e-12;

/// A point `(q, p, q⁺)` of the discrete Pontryagin bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct PontryaginPoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub qplus: DVector<f64>,
}

impl PontryaginPoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>, qplus: DVector<f64>) -> Result<Self> {
        let n = q.len();
        ensure_dim("momentum block", n, p.len())?;
        ensure_dim("q⁺ block", n, qplus.len())?;
        if q.iter().chain(p.iter()).chain(qplus.iter()).any(|v| !v.is_finite()) {
            return Err(DiracError::InvalidInput(
                "Pontryagin point has non-finite entries".into(),
            ));
        }
        Ok(Self { q, p, qplus })
    }

    pub fn from_slices(q: &[f64], p: &[f64], qplus: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(q),
            DVector::from_column_slice(p),
            DVector::from_column_slice(qplus),
        )
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Tangent vector `(δq, δp, δq⁺)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPd {
    pub dq: DVector<f64>,
    pub dp: DVector<f64>,
    pub dqplus: DVector<f64>,
}

/// Cotangent vector with `dq`, `dp` and `dq⁺` components.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentPd {
    pub bq: DVector<f64>,
    pub bp: DVector<f64>,
    pub bqplus: DVector<f64>,
}

fn stack3(a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    let n = a.len();
    let mut out = DVector::zeros(3 * n);
    out.rows_mut(0, n).copy_from(a);
    out.rows_mut(n, n).copy_from(b);
    out.rows_mut(2 * n, n).copy_from(c);
    out
}

fn split3(x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    if !x.len().is_multiple_of(3) {
        return Err(DiracError::InvalidInput(format!(
            "length {} is not a multiple of 3",
            x.len()
        )));
    }
    let n = x.len() / 3;
    Ok((
        x.rows(0, n).into_owned(),
        x.rows(n, n).into_owned(),
        x.rows(2 * n, n).into_owned(),
    ))
}

impl TangentPd {
    pub fn new(dq: DVector<f64>, dp: DVector<f64>, dqplus: DVector<f64>) -> Result<Self> {
        ensure_dim("tangent dp block", dq.len(), dp.len())?;
        ensure_dim("tangent dq⁺ block", dq.len(), dqplus.len())?;
        Ok(Self { dq, dp, dqplus })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            dq: DVector::zeros(n),
            dp: DVector::zeros(n),
            dqplus: DVector::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.dq.len()
    }

    pub fn stacked(&self) -> DVector<f64> {
        stack3(&self.dq, &self.dp, &self.dqplus)
    }

    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        let (dq, dp, dqplus) = split3(x)?;
        Ok(Self { dq, dp, dqplus })
    }
}

impl CotangentPd {
    pub fn new(bq: DVector<f64>, bp: DVector<f64>, bqplus: DVector<f64>) -> Result<Self> {
        ensure_dim("cotangent dp block", bq.len(), bp.len())?;
        ensure_dim("cotangent dq⁺ block", bq.len(), bqplus.len())?;
        Ok(Self { bq, bp, bqplus })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bq: DVector::zeros(n),
            bp: DVector::zeros(n),
            bqplus: DVector::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.bq.len()
    }

    /// Evaluate on a tangent vector.
    pub fn apply(&self, w: &TangentPd) -> Result<f64> {
        ensure_dim("cotangent evaluation", self.n(), w.n())?;
        Ok(self.bq.dot(&w.dq) + self.bp.dot(&w.dp) + self.bqplus.dot(&w.dqplus))
    }

    pub fn stacked(&self) -> DVector<f64> {
        stack3(&self.bq, &self.bp, &self.bqplus)
    }

    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        let (bq, bp, bqplus) = split3(x)?;
        Ok(Self { bq, bp, bqplus })
    }
}

/// `ω(u, w) = −(u.dq·w.dp − u.dp·w.dq)`, the pullback of minus the canonical
/// form on `T*Q`. The `dq⁺` blocks never contribute.
pub fn omega_pd(u: &TangentPd, w: &TangentPd) -> Result<f64> {
    ensure_dim("omega_pd", u.n(), w.n())?;
    Ok(-(u.dq.dot(&w.dp) - u.dp.dot(&w.dq)))
}

/// Matrix form of [`omega_pd`] on stacked `3n` tangent vectors.
pub fn omega_pd_form(n: usize) -> SkewForm {
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        m[(i, n + i)] = -1.0;
        m[(n + i, i)] = 1.0;
    }
    SkewForm::new(m).expect("block form is skew")
}

/// Vertical lift of `beta` at `x`: the tangent `(0, β, 0)`.
pub fn vertical_lift(x: &PontryaginPoint, beta: &DVector<f64>) -> Result<TangentPd> {
    ensure_dim("vertical lift", x.n(), beta.len())?;
    let n = x.n();
    Ok(TangentPd {
        dq: DVector::zeros(n),
        dp: beta.clone(),
        dqplus: DVector::zeros(n),
    })
}

/// The covector `ω(v, ·)`.
pub fn interior_product(v: &TangentPd) -> CotangentPd {
    CotangentPd {
        bq: v.dp.clone(),
        bp: -&v.dq,
        bqplus: DVector::zeros(v.n()),
    }
}

pub type AnnihilatorFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A velocity-constraint distribution `Δ_Q ⊂ TQ`, given through a matrix
/// `A(q)` whose rows span the annihilator `Δ_Q°(q)`.
#[derive(Clone)]
pub struct KinematicDistribution {
    n: usize,
    m: usize,
    annihilator: AnnihilatorFn,
}

impl fmt::Debug for KinematicDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KinematicDistribution")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl KinematicDistribution {
    pub fn new<F>(n: usize, m: usize, annihilator: F) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(DiracError::InvalidInput("dimension must be positive".into()));
        }
        if m > n {
            return Err(DiracError::InvalidInput(format!(
                "corank {m} exceeds dimension {n}"
            )));
        }
        Ok(Self {
            n,
            m,
            annihilator: Arc::new(annihilator),
        })
    }

    /// `Δ_Q = TQ`.
    pub fn unconstrained(n: usize) -> Self {
        Self {
            n,
            m: 0,
            annihilator: Arc::new(move |_| DMatrix::zeros(0, n)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Raw `A(q)` without the rank check.
    pub fn raw(&self, q: &DVector<f64>) -> DMatrix<f64> {
        (self.annihilator)(q)
    }

    /// `A(q)`, checked for shape, finiteness and full row rank.
    pub fn annihilator(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        ensure_dim("annihilator argument", self.n, q.len())?;
        let a = (self.annihilator)(q);
        if a.shape() != (self.m, self.n) {
            return Err(DiracError::Evaluation(format!(
                "annihilator returned shape {:?}, expected {:?}",
                a.shape(),
                (self.m, self.n)
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(DiracError::Evaluation("annihilator has non-finite entries".into()));
        }
        if self.m > 0 {
            let sv = a.singular_values();
            let (smallest, largest) = (sv.min(), sv.max());
            if largest == 0.0 || smallest <= RANK_CUTOFF * largest {
                return Err(DiracError::DegenerateConstraint(format!(
                    "annihilator is rank deficient at q = {:?} (singular values {:e}..{:e})",
                    q.as_slice(),
                    smallest,
                    largest
                )));
            }
        }
        Ok(a)
    }

    /// `Δ_Q(q) = ker A(q)` as a subspace of `Rⁿ`.
    pub fn subspace(&self, q: &DVector<f64>) -> Result<LinSubspace> {
        let a = self.annihilator(q)?;
        LinSubspace::kernel_of(&a)
    }

    /// Distance of a covector from `Δ_Q°(q)`, i.e. the norm of its component
    /// along `ker A(q)`.
    pub fn annihilator_distance(&self, q: &DVector<f64>, covector: &DVector<f64>) -> Result<f64> {
        ensure_dim("covector", self.n, covector.len())?;
        if self.m == 0 {
            return Ok(covector.norm());
        }
        let ker = self.subspace(q)?;
        Ok(ker.project(covector)?.norm())
    }
}

/// Rows spanning `Δ(x)°`: `[A(q) | 0 | 0]`. A tangent vector lies in the lifted
/// distribution iff `A(q)·δq = 0`.
pub fn lift_annihilator(dist: &KinematicDistribution, x: &PontryaginPoint) -> Result<DMatrix<f64>> {
    ensure_dim("lift_annihilator", dist.n(), x.n())?;
    let n = dist.n();
    let a = dist.annihilator(&x.q)?;
    let mut lifted = DMatrix::zeros(dist.m(), 3 * n);
    lifted.view_mut((0, 0), (dist.m(), n)).copy_from(&a);
    Ok(lifted)
}

/// The lifted distribution `Δ(x) ⊂ T_x(T*Q × Q)`.
pub fn lifted_distribution(dist: &KinematicDistribution, x: &PontryaginPoint) -> Result<LinSubspace> {
    let lifted = lift_annihilator(dist, x)?;
    if lifted.nrows() == 0 {
        return Ok(LinSubspace::full(3 * x.n()));
    }
    LinSubspace::kernel_of(&lifted)
}

/// A finite sequence of Pontryagin points `x_0, …, x_N`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<PontryaginPoint>,
}

impl DiscreteCurve {
    pub fn new(points: Vec<PontryaginPoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            for p in &points {
                ensure_dim("curve point", first.n(), p.n())?;
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PontryaginPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&PontryaginPoint> {
        self.points.last()
    }

    pub(crate) fn push(&mut self, x: PontryaginPoint) {
        debug_assert!(self.points.first().is_none_or(|f| f.n() == x.n()));
        self.points.push(x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    /// Smallest `k` with `x_k.q⁺ ≠ x_{k+1}.q`.
    Violation(usize),
}

/// Check `x_k.q⁺ = x_{k+1}.q` componentwise to within `tol`.
pub fn admissibility_check(curve: &DiscreteCurve, tol: f64) -> Result<Admissibility> {
    if curve.is_empty() {
        return Err(DiracError::InvalidInput("empty discrete curve".into()));
    }
    for (k, pair) in curve.points().windows(2).enumerate() {
        if (&pair[0].qplus - &pair[1].q).amax() > tol {
            return Ok(Admissibility::Violation(k));
        }
    }
    Ok(Admissibility::Admissible)
}
