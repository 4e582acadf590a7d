//! Dense complex-matrix kernel.
//!
//! Everything in this crate acts on small dense matrices (the largest object
//! is a `d² × d²` superoperator with `d ≤ 8`), so all routines here are plain
//! dense algorithms on top of [`nalgebra`].
//!
//! Conventions fixed once for the whole crate:
//!
//! * Vectorization stacks **columns**: `vec(X)[a + b·n] = X[a, b]`, so that
//!   `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! * [`kron`] uses the row-major block convention: `(A ⊗ B)[(i,a),(j,b)] =
//!   A[i,j]·B[a,b]` with the composite index `i·dim(B) + a`.
//! * The Choi reshuffle is the index permutation
//!   `R[i·d + a, j·d + b] = S[a + b·d, i + j·d]`, an involution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative Hermiticity tolerance: `‖M − M†‖_max ≤ 1e-12 · ‖M‖_max`.
pub const HERMITIAN_RTOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `‖M − M†‖_max`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &CMatrix) -> bool {
    m.is_square() && hermitian_deviation(m) <= HERMITIAN_RTOL * max_abs(m)
}

/// A square complex matrix known to be Hermitian.
///
/// Construction checks the relative tolerance and then stores the
/// symmetrized part `(M + M†)/2`, so roundoff asymmetry never reaches the
/// eigensolver.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_RTOL)
    }

    /// Like [`HermMatrix::new`] with a caller-chosen relative tolerance.
    pub fn with_tolerance(m: CMatrix, rtol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let tolerance = rtol * max_abs(&m);
        let deviation = hermitian_deviation(&m);
        if deviation > tolerance {
            return Err(Error::NonHermitian { deviation, tolerance });
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M†)/2` without any check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermMatrix((m + adj) * C64::new(0.5, 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        HermMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermMatrix(CMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermMatrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j { C64::new(diag[i], 0.0) } else { ZERO }
        }))
    }

    /// Rank-one projector `|v⟩⟨v|`.
    pub fn projector(v: &CVector) -> Self {
        HermMatrix::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, c: f64) -> Self {
        HermMatrix(&self.0 * C64::new(c, 0.0))
    }

    pub fn add(&self, other: &HermMatrix) -> Self {
        HermMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermMatrix) -> Self {
        HermMatrix(&self.0 - &other.0)
    }

    /// `U M U†`, which stays Hermitian for any `U`.
    pub fn congruence(&self, u: &CMatrix) -> Self {
        HermMatrix::symmetrized(u * &self.0 * u.adjoint())
    }

    pub fn eig(&self) -> HermEig {
        herm_eig(self)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eig(self).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        herm_eig(self).values.first().copied().unwrap_or(0.0)
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(self)
    }

    /// Euclidean projection onto the PSD cone (negative eigenvalues clipped).
    pub fn psd_projection(&self) -> Self {
        let eig = herm_eig(self);
        let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
        eig.reassemble(&clipped)
    }
}

impl AsRef<CMatrix> for HermMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermEig {
    /// `V diag(f) V†` for arbitrary real weights `f` (same length as `values`).
    pub fn reassemble(&self, weights: &[f64]) -> HermMatrix {
        let v = &self.vectors;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (k, &w) in weights.iter().enumerate() {
            for r in 0..n {
                scaled[(r, k)] *= w;
            }
        }
        HermMatrix::symmetrized(scaled * v.adjoint())
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn herm_eig(m: &HermMatrix) -> HermEig {
    let n = m.dim();
    if n == 0 {
        return HermEig { values: Vec::new(), vectors: CMatrix::zeros(0, 0) };
    }
    let se = m.0.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    HermEig { values, vectors }
}

/// Trace norm `Σ |λ_k|` of a Hermitian matrix.
pub fn trace_norm(m: &HermMatrix) -> f64 {
    herm_eig(m).values.iter().map(|l| l.abs()).sum()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(m: &CMatrix) -> CVector {
    // nalgebra stores column-major, so the storage order is exactly vec(M).
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`] for a matrix with `rows` rows.
pub fn unvec(v: &CVector, rows: usize) -> Result<CMatrix> {
    if rows == 0 || v.len() % rows != 0 {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape a vector of length {} into {} rows",
            v.len(),
            rows
        )));
    }
    Ok(CMatrix::from_column_slice(rows, v.len() / rows, v.as_slice()))
}

fn check_bipartite(m: &CMatrix, d: usize, what: &str) -> Result<()> {
    let n = d * d;
    if d == 0 || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be {n}×{n} for d = {d}, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Choi reshuffle of a `d² × d²` superoperator (column-stacking convention).
///
/// Pure index permutation, so `reshuffle(reshuffle(S)) = S`. The Choi matrix
/// normalized against the maximally entangled state is `reshuffle(S)/d`.
pub fn reshuffle(s: &CMatrix, d: usize) -> Result<CMatrix> {
    check_bipartite(s, d, "superoperator")?;
    let n = d * d;
    Ok(CMatrix::from_fn(n, n, |row, col| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        s[(a + b * d, i + j * d)]
    }))
}

/// Inverse of [`reshuffle`]; the permutation is its own inverse.
pub fn unreshuffle(c: &CMatrix, d: usize) -> Result<CMatrix> {
    reshuffle(c, d)
}

/// Which factor of a bipartite space to keep in [`partial_trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `C^{da} ⊗ C^{db}`.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, keep: Keep) -> Result<CMatrix> {
    let n = da * db;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {n}×{n}, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Keep::First => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::Second => CMatrix::from_fn(db, db, |a, b| {
            (0..da).map(|k| m[(k * db + a, k * db + b)]).sum()
        }),
    })
}

/// Reorder the tensor factors of an operator on `⊗_k C^{dims[k]}`: factor
/// `order[k]` of the input becomes factor `k` of the output.
pub fn permute_subsystems(m: &CMatrix, dims: &[usize], order: &[usize]) -> Result<CMatrix> {
    let n: usize = dims.iter().product();
    if m.nrows() != n || m.ncols() != n || order.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot permute a {}×{} operator over factors {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut seen = vec![false; dims.len()];
    for &o in order {
        if o >= dims.len() || std::mem::replace(&mut seen[o], true) {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
        }
    }
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let map = |idx: usize| {
        let mut digits = vec![0; dims.len()];
        let mut rest = idx;
        for k in (0..dims.len()).rev() {
            digits[k] = rest % dims[k];
            rest /= dims[k];
        }
        order.iter().zip(&new_dims).fold(0, |acc, (&o, &nd)| acc * nd + digits[o])
    };
    let perm: Vec<usize> = (0..n).map(map).collect();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(perm[r], perm[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Exchange the two tensor factors: `(A ⊗ B) ↦ (B ⊗ A)`.
pub fn swap_subsystems(m: &CMatrix, da: usize, db: usize) -> Result<CMatrix> {
    permute_subsystems(m, &[da, db], &[1, 0])
}

/// `(I_{d_ref} ⊗ Λ)(M)` for a superoperator `Λ` on the second factor.
pub fn apply_local(m: &CMatrix, s: &CMatrix, d_ref: usize, d: usize) -> Result<CMatrix> {
    let n = d_ref * d;
    if m.nrows() != n || m.ncols() != n || s.nrows() != d * d || s.ncols() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "local map on a {}×{} operator with factors ({d_ref}, {d})",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = CMatrix::zeros(n, n);
    for i in 0..d_ref {
        for j in 0..d_ref {
            let block = m.view((i * d, j * d), (d, d)).clone_owned();
            let mapped = apply_superop(s, &block)?;
            out.view_mut((i * d, j * d), (d, d)).copy_from(&mapped);
        }
    }
    Ok(out)
}

/// Apply a superoperator to a matrix: `unvec(S · vec(X))`.
pub fn apply_superop(s: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    if s.ncols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "superoperator with {} columns applied to a {}×{} matrix",
            s.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    unvec(&(s * vec(x)), x.nrows())
}

/// Superoperator of `X ↦ A X B` in the column-stacking convention.
pub fn sandwich_superop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

/// `AB − BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `AB + BA`.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Real coordinates of an `n × n` Hermitian matrix: the diagonal, then
/// `√2·Re` and `√2·Im` of each upper entry (row-major). The map is an
/// isometry, so `Tr[G H] = ⟨coords(G), coords(H)⟩`.
pub fn herm_coords(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let s = 2f64.sqrt();
    let mut out = Vec::with_capacity(n * n);
    out.extend((0..n).map(|i| m[(i, i)].re));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(s * m[(i, j)].re);
            out.push(s * m[(i, j)].im);
        }
    }
    out
}

/// Inverse of [`herm_coords`].
pub fn herm_from_coords(x: &[f64], n: usize) -> HermMatrix {
    assert_eq!(x.len(), n * n, "expected {} Hermitian coordinates", n * n);
    let s = 1.0 / 2f64.sqrt();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(x[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(s * x[k], s * x[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    HermMatrix(m)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Lowering operator `|0⟩⟨1|`.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}
