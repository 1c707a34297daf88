//! Finite-dimensional Dirac-structure linear algebra.
//!
//! A Dirac structure on a vector space `V` is a subspace `D ⊂ V ⊕ V*` that
//! coincides with its orthogonal complement under the symmetric pairing
//!
//! ```text
//! <<(v, α), (w, β)>> = α(w) + β(v).
//! ```
//!
//! Everything here works with explicit coordinates: `V = Rᴺ`, covectors are
//! column vectors in the dual basis, and subspaces are stored as matrices with
//! orthonormal columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, DiracError, Result};

/// Relative singular-value cutoff used for every rank decision.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Tolerance on `max |M + Mᵀ|` accepted by [`SkewForm::new`].
pub const SKEW_TOL: f64 = 1e-12;

/// A linear subspace of `R^ambient_dim`.
///
/// The basis supplied at construction is validated for full column rank and
/// replaced by an orthonormal basis of the same span.
#[derive(Debug, Clone, PartialEq)]
pub struct LinSubspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

impl LinSubspace {
    /// Build a subspace from the columns of `basis`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = basis.shape();
        if rows == 0 {
            return Err(DiracError::InvalidInput(
                "ambient dimension must be positive".into(),
            ));
        }
        if cols > rows {
            return Err(DiracError::InvalidInput(format!(
                "{cols} basis vectors cannot be independent in dimension {rows}"
            )));
        }
        if cols == 0 {
            return Ok(Self::zero(rows));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(DiracError::InvalidInput("non-finite basis entry".into()));
        }
        let svd = basis.svd(true, false);
        let sv = &svd.singular_values;
        let largest = sv.max();
        let smallest = sv.min();
        if largest == 0.0 || smallest <= RANK_CUTOFF * largest {
            return Err(DiracError::InvalidInput(format!(
                "rank-deficient basis (singular values {:e}..{:e})",
                smallest, largest
            )));
        }
        let u = svd.u.expect("requested U");
        Ok(Self {
            ambient_dim: rows,
            basis: u.columns(0, cols).into_owned(),
        })
    }

    /// Build from vectors given one per column.
    pub fn from_vectors(ambient_dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        for v in vectors {
            ensure_dim("subspace generator", ambient_dim, v.len())?;
        }
        if vectors.is_empty() {
            return if ambient_dim == 0 {
                Err(DiracError::InvalidInput(
                    "ambient dimension must be positive".into(),
                ))
            } else {
                Ok(Self::zero(ambient_dim))
            };
        }
        Self::new(DMatrix::from_columns(vectors))
    }

    /// Whole space `Rⁿ`.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// The trivial subspace `{0}`.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    /// Orthonormal basis of the null space of `mat` (a map out of `R^cols`).
    pub fn kernel_of(mat: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if cols == 0 {
            return Err(DiracError::InvalidInput(
                "ambient dimension must be positive".into(),
            ));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(DiracError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self {
            ambient_dim: cols,
            basis: kernel_basis(mat, rows, cols),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis, one vector per column.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim("projection", self.ambient_dim, v.len())?;
        if self.dim() == 0 {
            return Ok(DVector::zeros(self.ambient_dim));
        }
        Ok(&self.basis * (self.basis.transpose() * v))
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance(&self, v: &DVector<f64>) -> Result<f64> {
        Ok((v - self.project(v)?).norm())
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.distance(v)? <= tol)
    }

    /// True when both subspaces have the same span, up to `tol`.
    pub fn same_span(&self, other: &LinSubspace, tol: f64) -> Result<bool> {
        ensure_dim("subspace comparison", self.ambient_dim, other.ambient_dim)?;
        if self.dim() != other.dim() {
            return Ok(false);
        }
        for i in 0..other.dim() {
            if !self.contains(&other.basis_vector(i), tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn kernel_basis(mat: &DMatrix<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    // nalgebra only returns the thin V, so pad to at least square to get all
    // right singular vectors.
    let padded = if rows < cols {
        let mut m = DMatrix::zeros(cols, cols);
        m.view_mut((0, 0), (rows, cols)).copy_from(mat);
        m
    } else {
        mat.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let largest = svd.singular_values.max();
    let cutoff = RANK_CUTOFF * largest;
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| largest == 0.0 || s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    }
}

/// An element `(v, α)` of `V ⊕ V*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedVector {
    pub v: DVector<f64>,
    pub a: DVector<f64>,
}

impl PairedVector {
    pub fn new(v: DVector<f64>, a: DVector<f64>) -> Result<Self> {
        ensure_dim("paired vector covector part", v.len(), a.len())?;
        Ok(Self { v, a })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Split a `2N` column (vector part first) into its two halves.
    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(DiracError::InvalidInput(format!(
                "stacked vector of odd length {}",
                x.len()
            )));
        }
        let n = x.len() / 2;
        Ok(Self {
            v: x.rows(0, n).into_owned(),
            a: x.rows(n, n).into_owned(),
        })
    }

    pub fn stacked(&self) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&self.v);
        out.rows_mut(n, n).copy_from(&self.a);
        out
    }
}

/// A two-form `Ω(u, w) = uᵀ M w` on `Rᴺ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewForm {
    mat: DMatrix<f64>,
}

impl SkewForm {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(DiracError::InvalidInput(format!(
                "two-form matrix must be square, got {:?}",
                mat.shape()
            )));
        }
        let asym = (&mat + mat.transpose()).amax();
        if !(asym < SKEW_TOL) {
            return Err(DiracError::InvalidInput(format!(
                "matrix is not skew-symmetric (max |M + Mᵀ| = {asym:e})"
            )));
        }
        Ok(Self { mat })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn eval(&self, u: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        ensure_dim("two-form argument", self.dim(), u.len())?;
        ensure_dim("two-form argument", self.dim(), w.len())?;
        Ok(u.dot(&(&self.mat * w)))
    }

    /// The covector `Ω(v, ·)`.
    pub fn flat(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim("two-form argument", self.dim(), v.len())?;
        Ok(self.mat.tr_mul(v))
    }
}

/// Symmetric pairing `<<x, y>> = x.a(y.v) + y.a(x.v)`.
pub fn pairing(x: &PairedVector, y: &PairedVector) -> Result<f64> {
    ensure_dim("pairing", x.dim(), y.dim())?;
    Ok(x.a.dot(&y.v) + y.a.dot(&x.v))
}

/// The Dirac structure `D(Δ, Ω) = {(v, α) : v ∈ Δ, (α − Ω(v, ·))|_Δ = 0}`,
/// returned as a subspace of `Rᴺ ⊕ Rᴺ` (vector block first).
///
/// Computed as the null space of `(v, α) ↦ (P_⊥ v, Bᵀ(α − Ω(v, ·)))`, where
/// `B` is an orthonormal basis of `Δ` and `P_⊥ = I − BBᵀ`.
pub fn induced_dirac(delta: &LinSubspace, omega: &SkewForm) -> Result<LinSubspace> {
    let n = delta.ambient_dim();
    ensure_dim("two-form", n, omega.dim())?;
    let b = delta.basis();
    let k = delta.dim();

    let mut map = DMatrix::zeros(n + k, 2 * n);
    let p_perp = DMatrix::identity(n, n) - b * b.transpose();
    map.view_mut((0, 0), (n, n)).copy_from(&p_perp);
    if k > 0 {
        // Ω(v, ·) = Mᵀ v, so Bᵀ(α − Mᵀ v) = Bᵀ α − (M B)ᵀ v.
        let mb = omega.matrix() * b;
        map.view_mut((n, 0), (k, n)).copy_from(&(-mb.transpose()));
        map.view_mut((n, n), (k, n)).copy_from(&b.transpose());
    }
    let d = LinSubspace::kernel_of(&map)?;
    if d.dim() != n {
        return Err(DiracError::InvalidInput(format!(
            "induced structure has dimension {} instead of {n}; inputs are numerically degenerate",
            d.dim()
        )));
    }
    Ok(d)
}

/// Check that `d ⊂ Rⁿ ⊕ Rⁿ` is a Dirac structure: `dim d = n` and the pairing
/// vanishes on every pair of basis vectors.
pub fn is_dirac(d: &LinSubspace, n: usize, tol: f64) -> Result<bool> {
    let ambient = d.ambient_dim();
    if !ambient.is_multiple_of(2) {
        return Err(DiracError::InvalidInput(format!(
            "ambient dimension {ambient} is odd; expected V ⊕ V*"
        )));
    }
    ensure_dim("Dirac ambient space", 2 * n, ambient)?;
    if d.dim() != n {
        return Ok(false);
    }
    let elems = (0..d.dim())
        .map(|i| PairedVector::from_stacked(&d.basis_vector(i)))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..elems.len() {
        for j in i..elems.len() {
            if pairing(&elems[i], &elems[j])?.abs() >= tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// How far `x` is from lying in `D(Δ, Ω)`.
///
/// Returns the larger of the distance from `x.v` to `Δ` and the Euclidean norm
/// of the restriction of `x.a − Ω(x.v, ·)` to `Δ`. Zero exactly on members.
pub fn membership_residual(x: &PairedVector, delta: &LinSubspace, omega: &SkewForm) -> Result<f64> {
    let n = delta.ambient_dim();
    ensure_dim("membership vector", n, x.dim())?;
    ensure_dim("two-form", n, omega.dim())?;
    let off_delta = delta.distance(&x.v)?;
    let defect = &x.a - omega.flat(&x.v)?;
    let restricted = if delta.dim() == 0 {
        0.0
    } else {
        delta.basis().tr_mul(&defect).norm()
    };
    Ok(off_delta.max(restricted))
}
