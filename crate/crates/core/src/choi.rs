//! Choi matrices of maps and increments, the ε → 0 Choi derivative, and the
//! parameterized set of free (CP-divisible) increments.
//!
//! The reference state is `|ψ⟩ = (1/√d) Σ_i |ii⟩` with the ancilla as the
//! first tensor factor, so `C = (I ⊗ Λ)(|ψ⟩⟨ψ|) = reshuffle(S)/d`.
//!
//! For an increment `Λ(t+ε, t) = I + εL_t + O(ε²)` the Choi matrix is
//! `|ψ⟩⟨ψ| + εK + O(ε²)` with `K = (I ⊗ L_t)(|ψ⟩⟨ψ|)`. Free increments in
//! this first-order picture are exactly `K_M(A)` for PSD Kossakowski
//! matrices `A`, which is the cone [`FreeCone`] parameterizes.

use nalgebra::DMatrix;

use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::generators::{gell_mann_basis, Generator, MARKOVIAN_TOL};
use crate::linops::{
    apply_local, commutator, herm_coords, herm_from_coords, kron, max_abs, partial_trace, permute_subsystems,
    reshuffle, CMatrix, CVector, HermMatrix, Keep, C64, I,
};

/// Default absolute tolerance on `‖C‖₁ − 1` for freeness.
pub const DEFAULT_FREE_TOL: f64 = 1e-9;

/// Tolerance on unit trace (Choi matrices) and zero trace (derivatives).
pub const TRACE_TOL: f64 = 1e-10;

/// `(1/√d) Σ_i |i⟩ ⊗ |i⟩`.
pub fn max_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

pub fn max_entangled_projector(d: usize) -> HermMatrix {
    HermMatrix::projector(&max_entangled(d))
}

fn check_square(m: &CMatrix, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d * d || m.ncols() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be {0}×{0} for d = {d}, got {1}×{2}",
            d * d,
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Hermitian unit-trace Choi matrix of a (not necessarily CP) map on `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: HermMatrix,
}

impl ChoiMatrix {
    pub fn new(dim: usize, matrix: HermMatrix) -> Result<Self> {
        check_square(matrix.as_matrix(), dim, "Choi matrix")?;
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("Choi matrix has trace {tr}, expected 1")));
        }
        Ok(ChoiMatrix { dim, matrix })
    }

    /// Choi matrix of a `d² × d²` superoperator.
    pub fn from_superop(s: &CMatrix, d: usize) -> Result<Self> {
        let c = reshuffle(s, d)? / C64::new(d as f64, 0.0);
        ChoiMatrix::new(d, HermMatrix::new(c)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &HermMatrix {
        &self.matrix
    }

    pub fn trace_norm(&self) -> f64 {
        self.matrix.trace_norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.min_eigenvalue()
    }

    pub fn is_free(&self, tol: f64) -> bool {
        is_free(self, tol)
    }

    /// Choi matrix of `Λ₁ ⊗ Λ₂`, with factors reordered to
    /// `(ancilla₁ ancilla₂)(system₁ system₂)`.
    pub fn tensor(&self, other: &ChoiMatrix) -> ChoiMatrix {
        let (d1, d2) = (self.dim, other.dim);
        let raw = kron(self.matrix.as_matrix(), other.matrix.as_matrix());
        let m = permute_subsystems(&raw, &[d1, d1, d2, d2], &[0, 2, 1, 3]).expect("dimensions match by construction");
        ChoiMatrix { dim: d1 * d2, matrix: HermMatrix::symmetrized(m) }
    }

    /// For a map on `C^{d1} ⊗ C^{d2}`, trace out one party on both the ancilla
    /// and the system side.
    pub fn reduce(&self, d1: usize, d2: usize, keep: Keep) -> Result<ChoiMatrix> {
        if d1 * d2 != self.dim {
            return Err(Error::DimensionMismatch(format!("{d1}·{d2} does not factor d = {}", self.dim)));
        }
        let grouped = permute_subsystems(self.matrix.as_matrix(), &[d1, d2, d1, d2], &[0, 2, 1, 3])?;
        let (dk, reduced) = match keep {
            Keep::First => (d1, partial_trace(&grouped, d1 * d1, d2 * d2, Keep::First)?),
            Keep::Second => (d2, partial_trace(&grouped, d1 * d1, d2 * d2, Keep::Second)?),
        };
        ChoiMatrix::new(dk, HermMatrix::symmetrized(reduced))
    }

    /// Relabel the two parties of a map on `C^{d1} ⊗ C^{d2}`.
    pub fn swap_parties(&self, d1: usize, d2: usize) -> Result<ChoiMatrix> {
        if d1 * d2 != self.dim {
            return Err(Error::DimensionMismatch(format!("{d1}·{d2} does not factor d = {}", self.dim)));
        }
        let m = permute_subsystems(self.matrix.as_matrix(), &[d1, d2, d1, d2], &[1, 0, 3, 2])?;
        Ok(ChoiMatrix { dim: self.dim, matrix: HermMatrix::symmetrized(m) })
    }

    /// `(I ⊗ Λ)(C)` for a superoperator `Λ` on the system factor.
    pub fn apply_channel(&self, s: &CMatrix) -> Result<ChoiMatrix> {
        let m = apply_local(self.matrix.as_matrix(), s, self.dim, self.dim)?;
        ChoiMatrix::new(self.dim, HermMatrix::symmetrized(m))
    }
}

/// Hermitian traceless `K = (I ⊗ L_t)(|ψ⟩⟨ψ|)`, in units of 1/time.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiDerivative {
    dim: usize,
    matrix: HermMatrix,
}

impl ChoiDerivative {
    pub fn new(dim: usize, matrix: HermMatrix) -> Result<Self> {
        check_square(matrix.as_matrix(), dim, "Choi derivative")?;
        let trace = matrix.trace();
        if trace.abs() > TRACE_TOL * max_abs(matrix.as_matrix()).max(1.0) {
            return Err(Error::NonTraceless { trace });
        }
        Ok(ChoiDerivative { dim, matrix })
    }

    /// `reshuffle(S)/d` for a generator superoperator `S`.
    pub fn from_superop(s: &CMatrix, d: usize) -> Result<Self> {
        let k = reshuffle(s, d)? / C64::new(d as f64, 0.0);
        ChoiDerivative::new(d, HermMatrix::new(k)?)
    }

    pub fn zeros(dim: usize) -> Self {
        ChoiDerivative { dim, matrix: HermMatrix::zeros(dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &HermMatrix {
        &self.matrix
    }

    pub fn scale(&self, c: f64) -> ChoiDerivative {
        ChoiDerivative { dim: self.dim, matrix: self.matrix.scale(c) }
    }

    /// `p·self + (1 − p)·other`.
    pub fn mix(&self, other: &ChoiDerivative, p: f64) -> Result<ChoiDerivative> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("mixing Choi derivatives of different dimension".into()));
        }
        Ok(ChoiDerivative { dim: self.dim, matrix: self.matrix.scale(p).add(&other.matrix.scale(1.0 - p)) })
    }

    /// First-order Choi matrix `|ψ⟩⟨ψ| + εK`.
    pub fn first_order_choi(&self, eps: f64) -> ChoiMatrix {
        let m = max_entangled_projector(self.dim).add(&self.matrix.scale(eps));
        ChoiMatrix { dim: self.dim, matrix: m }
    }
}

pub fn choi_of_propagator(p: &Propagator) -> Result<ChoiMatrix> {
    ChoiMatrix::from_superop(&p.superop, p.dim())
}

/// Exact ε → 0 Choi object of the increment at `t`.
pub fn choi_derivative(g: &dyn Generator, t: f64) -> Result<ChoiDerivative> {
    ChoiDerivative::from_superop(&g.superop(t), g.dim())
}

/// `‖C‖₁ ≤ 1 + tol`.
pub fn is_free(c: &ChoiMatrix, tol: f64) -> bool {
    c.trace_norm() <= 1.0 + tol
}

/// `p·c1 + (1 − p)·c2`.
pub fn mix(c1: &ChoiMatrix, c2: &ChoiMatrix, p: f64) -> Result<ChoiMatrix> {
    if c1.dim != c2.dim {
        return Err(Error::DimensionMismatch(format!("cannot mix Choi matrices for d = {} and d = {}", c1.dim, c2.dim)));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("mixing weight {p} outside [0, 1]")));
    }
    ChoiMatrix::new(c1.dim, c1.matrix.scale(p).add(&c2.matrix.scale(1.0 - p)))
}

/// Linear parameterization of first-order free increments.
///
/// A Kossakowski matrix `A` maps to
/// `K_M(A) = V A V† − ½{I ⊗ P(A), |ψ⟩⟨ψ|}` where the columns of `V` are
/// `(I ⊗ F_j)|ψ⟩` and `P(A) = Σ_jk A_jk F_k F_j`. With
/// `allow_hamiltonian`, traceless Hamiltonians `H = Σ_j h_j F_j` add
/// `−i[I ⊗ H, |ψ⟩⟨ψ|]`.
#[derive(Clone, Debug)]
pub struct FreeCone {
    dim: usize,
    allow_hamiltonian: bool,
    basis: Vec<CMatrix>,
    embed: CMatrix,
    psi: HermMatrix,
}

impl FreeCone {
    pub fn new(dim: usize, allow_hamiltonian: bool) -> Self {
        let basis = gell_mann_basis(dim);
        let psi_vec = max_entangled(dim);
        let id = CMatrix::identity(dim, dim);
        let mut embed = CMatrix::zeros(dim * dim, basis.len());
        for (j, f) in basis.iter().enumerate() {
            embed.set_column(j, &(kron(&id, f) * &psi_vec));
        }
        FreeCone { dim, allow_hamiltonian, basis, embed, psi: HermMatrix::projector(&psi_vec) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn allows_hamiltonian(&self) -> bool {
        self.allow_hamiltonian
    }

    /// Side length `d² − 1` of the Kossakowski matrix.
    pub fn kossakowski_dim(&self) -> usize {
        self.basis.len()
    }

    /// Number of real parameters: `(d² − 1)²`, plus `d² − 1` with a Hamiltonian.
    pub fn n_params(&self) -> usize {
        let m = self.basis.len();
        m * m + if self.allow_hamiltonian { m } else { 0 }
    }

    /// `K_M(A)`.
    pub fn derivative(&self, a: &HermMatrix) -> HermMatrix {
        let d = self.dim;
        let m = self.basis.len();
        let mut p = CMatrix::zeros(d, d);
        for j in 0..m {
            for k in 0..m {
                let w = a.as_matrix()[(j, k)];
                if w != C64::new(0.0, 0.0) {
                    p += (&self.basis[k] * &self.basis[j]) * w;
                }
            }
        }
        let ip = kron(&CMatrix::identity(d, d), &p);
        let psi = self.psi.as_matrix();
        let jump = &self.embed * a.as_matrix() * self.embed.adjoint();
        HermMatrix::symmetrized(jump - (&ip * psi + psi * &ip) * C64::new(0.5, 0.0))
    }

    /// `−i[I ⊗ H, |ψ⟩⟨ψ|]` for `H = Σ_j h_j F_j`.
    pub fn hamiltonian_derivative(&self, h: &[f64]) -> HermMatrix {
        let d = self.dim;
        let ham = self.basis.iter().zip(h).fold(CMatrix::zeros(d, d), |acc, (f, &c)| acc + f * C64::new(c, 0.0));
        let ih = kron(&CMatrix::identity(d, d), &ham);
        HermMatrix::symmetrized(commutator(&ih, self.psi.as_matrix()) * (-I))
    }

    /// Split a parameter vector into the Kossakowski matrix and Hamiltonian
    /// coefficients.
    pub fn unpack(&self, x: &[f64]) -> (HermMatrix, Vec<f64>) {
        let m = self.basis.len();
        let a = herm_from_coords(&x[..m * m], m);
        (a, x[m * m..].to_vec())
    }

    pub fn pack(&self, a: &HermMatrix, h: &[f64]) -> Vec<f64> {
        let mut x = herm_coords(a.as_matrix());
        if self.allow_hamiltonian {
            x.extend_from_slice(h);
        }
        x
    }

    /// Free derivative for a packed parameter vector.
    pub fn evaluate(&self, x: &[f64]) -> HermMatrix {
        let (a, h) = self.unpack(x);
        let k = self.derivative(&a);
        if self.allow_hamiltonian {
            k.add(&self.hamiltonian_derivative(&h))
        } else {
            k
        }
    }

    /// Real matrix of the map `x ↦ herm_coords(evaluate(x))`; its transpose is
    /// the adjoint with respect to `Tr[G K]`.
    pub fn linear_map(&self) -> DMatrix<f64> {
        let n = self.n_params();
        let rows = self.dim.pow(4);
        let mut out = DMatrix::zeros(rows, n);
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[k] = 1.0;
            let col = herm_coords(self.evaluate(&x).as_matrix());
            out.column_mut(k).copy_from_slice(&col);
            x[k] = 0.0;
        }
        out
    }

    /// Kossakowski matrix read back from the off-reference block of `K`:
    /// `d² V† K V`. Exact inverse of [`FreeCone::derivative`] on that block.
    pub fn implied_kossakowski(&self, k: &HermMatrix) -> HermMatrix {
        let d2 = (self.dim * self.dim) as f64;
        HermMatrix::symmetrized(self.embed.adjoint() * k.as_matrix() * &self.embed * C64::new(d2, 0.0))
    }

    pub fn point(&self, a: HermMatrix) -> Result<FreeSetPoint> {
        let min = a.min_eigenvalue();
        if min < -MARKOVIAN_TOL {
            return Err(Error::NotMarkovian { t: f64::NAN, min_eigenvalue: min });
        }
        let k = self.derivative(&a);
        Ok(FreeSetPoint { kossakowski: a, derivative: ChoiDerivative { dim: self.dim, matrix: k } })
    }
}

/// An element of the first-order free set together with its Kossakowski
/// matrix.
#[derive(Clone, Debug)]
pub struct FreeSetPoint {
    pub kossakowski: HermMatrix,
    pub derivative: ChoiDerivative,
}
