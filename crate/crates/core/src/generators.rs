//! GKSL generators in diagonal and Kossakowski form.
//!
//! A generator acts on `d × d` density matrices as
//!
//! ```text
//! L_t(ρ) = −i[H, ρ] + Σ_α Γ_α(t) (L_α ρ L_α† − ½{L_α† L_α, ρ})
//! ```
//!
//! Only the rates depend on time. The Kossakowski form expands the
//! dissipator over the fixed generalized Gell-Mann basis returned by
//! [`gell_mann_basis`]; the instant `t` is CP-divisible exactly when the
//! Kossakowski matrix is positive semidefinite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{kron, CMatrix, HermMatrix, C64, I, ZERO};

/// Tolerance on the smallest Kossakowski eigenvalue for a Markovian instant.
pub const MARKOVIAN_TOL: f64 = 1e-12;

/// Time-dependent rate `Γ(t)` in units of 1/time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSchedule {
    /// `Γ(t) = value`.
    Constant { value: f64 },
    /// `Γ(t) = offset + amplitude · sin(omega·t + phase)`.
    Sinusoid {
        amplitude: f64,
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `Γ(t) = −scale · tanh(rate·t)`.
    TanhNegative {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    /// Piecewise-linear interpolation through `(times[i], values[i])`, held
    /// constant outside the table.
    Table { times: Vec<f64>, values: Vec<f64> },
    /// Sum of several schedules.
    Sum { parts: Vec<RateSchedule> },
}

fn one() -> f64 {
    1.0
}

impl RateSchedule {
    pub fn constant(value: f64) -> Self {
        RateSchedule::Constant { value }
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64, offset: f64) -> Self {
        RateSchedule::Sinusoid { amplitude, omega, phase, offset }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateSchedule::Constant { value } => *value,
            RateSchedule::Sinusoid { amplitude, omega, phase, offset } => {
                offset + amplitude * (omega * t + phase).sin()
            }
            RateSchedule::TanhNegative { scale, rate } => -scale * (rate * t).tanh(),
            RateSchedule::Table { times, values } => interpolate(times, values, t),
            RateSchedule::Sum { parts } => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            RateSchedule::Constant { value } => finite(&[*value]),
            RateSchedule::Sinusoid { amplitude, omega, phase, offset } => {
                finite(&[*amplitude, *omega, *phase, *offset])
            }
            RateSchedule::TanhNegative { scale, rate } => finite(&[*scale, *rate]),
            RateSchedule::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::Validation(format!(
                        "rate table needs matching non-empty times/values, got {} and {}",
                        times.len(),
                        values.len()
                    )));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation("rate table times must be strictly increasing".into()));
                }
                finite(times) && finite(values)
            }
            RateSchedule::Sum { parts } => {
                for p in parts {
                    p.validate()?;
                }
                true
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation("rate schedule parameters must be finite".into()))
        }
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[last] {
        return values[last];
    }
    let k = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    values[k] * (1.0 - w) + values[k + 1] * w
}

/// Orthonormal traceless Hermitian basis of `d × d` matrices
/// (`Tr[F_j F_k] = δ_jk`), `d² − 1` elements.
///
/// Order: symmetric `(E_jk + E_kj)/√2` for `j < k` in lexicographic order,
/// then antisymmetric `−i(E_jk − E_kj)/√2` in the same order, then diagonal
/// `(Σ_{m<l} E_mm − l·E_ll)/√(l(l+1))` for `l = 1..d−1`. For a qubit this is
/// `(σx, σy, σz)/√2`.
pub fn gell_mann_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d - 1);
    let s = 1.0 / 2f64.sqrt();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| ((j + 1)..d).map(move |k| (j, k))).collect();
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = C64::new(s, 0.0);
        m[(k, j)] = C64::new(s, 0.0);
        basis.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = C64::new(0.0, -s);
        m[(k, j)] = C64::new(0.0, s);
        basis.push(m);
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for mm in 0..l {
            m[(mm, mm)] = C64::new(norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        basis.push(m);
    }
    basis
}

/// Superoperator of `ρ ↦ Γ (L ρ L† − ½{L†L, ρ})`.
pub fn dissipator_superop(l: &CMatrix, rate: f64) -> CMatrix {
    let d = l.nrows();
    let id = CMatrix::identity(d, d);
    let ldl = l.adjoint() * l;
    let s = kron(&l.map(|z| z.conj()), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * C64::new(0.5, 0.0);
    s * C64::new(rate, 0.0)
}

/// Superoperator of `ρ ↦ −i[H, ρ]`.
pub fn hamiltonian_superop(h: &CMatrix) -> CMatrix {
    let d = h.nrows();
    let id = CMatrix::identity(d, d);
    (kron(&id, h) - kron(&h.transpose(), &id)) * (-I)
}

/// Common interface of both generator representations.
pub trait Generator: Send + Sync {
    /// System dimension `d`.
    fn dim(&self) -> usize;

    /// `d² × d²` matrix of `L_t` acting on column-stacked density matrices.
    fn superop(&self, t: f64) -> CMatrix;

    /// Kossakowski form of the generator at time `t`.
    fn kossakowski(&self, t: f64) -> KossakowskiGenerator;

    fn is_instantaneously_markovian(&self, t: f64) -> bool {
        self.kossakowski(t).is_markovian()
    }
}

/// `gksl_superop` for any generator representation.
pub fn gksl_superop(g: &dyn Generator, t: f64) -> CMatrix {
    g.superop(t)
}

/// One `(L_α, Γ_α(t))` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladTerm {
    pub op: CMatrix,
    pub rate: RateSchedule,
}

/// Lindblad operators with time-dependent rates and an optional Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalGenerator {
    dim: usize,
    terms: Vec<LindbladTerm>,
    hamiltonian: Option<HermMatrix>,
}

impl DiagonalGenerator {
    pub fn new(dim: usize, terms: Vec<LindbladTerm>, hamiltonian: Option<HermMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("system dimension must be positive".into()));
        }
        if terms.len() > dim * dim {
            return Err(Error::Validation(format!(
                "{} Lindblad terms exceed the limit n ≤ d² = {}",
                terms.len(),
                dim * dim
            )));
        }
        for (k, term) in terms.iter().enumerate() {
            if term.op.nrows() != dim || term.op.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Lindblad operator {k} is {}×{}, expected {dim}×{dim}",
                    term.op.nrows(),
                    term.op.ncols()
                )));
            }
            if term.op.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Validation(format!("Lindblad operator {k} has non-finite entries")));
            }
            term.rate.validate()?;
        }
        if let Some(h) = &hamiltonian {
            if h.dim() != dim {
                return Err(Error::DimensionMismatch(format!("Hamiltonian is {0}×{0}, expected {dim}×{dim}", h.dim())));
            }
        }
        Ok(DiagonalGenerator { dim, terms, hamiltonian })
    }

    pub fn terms(&self) -> &[LindbladTerm] {
        &self.terms
    }

    pub fn hamiltonian(&self) -> Option<&HermMatrix> {
        self.hamiltonian.as_ref()
    }

    pub fn rates(&self, t: f64) -> Vec<f64> {
        self.terms.iter().map(|term| term.rate.eval(t)).collect()
    }
}

impl Generator for DiagonalGenerator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn superop(&self, t: f64) -> CMatrix {
        let n = self.dim * self.dim;
        let mut s = match &self.hamiltonian {
            Some(h) => hamiltonian_superop(h.as_matrix()),
            None => CMatrix::zeros(n, n),
        };
        for term in &self.terms {
            let rate = term.rate.eval(t);
            if rate != 0.0 {
                s += dissipator_superop(&term.op, rate);
            }
        }
        s
    }

    fn kossakowski(&self, t: f64) -> KossakowskiGenerator {
        diagonal_to_kossakowski(self, t)
    }
}

/// Generator snapshot given by a Kossakowski matrix over [`gell_mann_basis`].
#[derive(Clone, Debug, PartialEq)]
pub struct KossakowskiGenerator {
    dim: usize,
    kossakowski: HermMatrix,
    hamiltonian: Option<HermMatrix>,
}

impl KossakowskiGenerator {
    pub fn new(dim: usize, kossakowski: HermMatrix, hamiltonian: Option<HermMatrix>) -> Result<Self> {
        if dim < 2 && kossakowski.dim() != 0 {
            return Err(Error::Validation("Kossakowski form needs d ≥ 2".into()));
        }
        if kossakowski.dim() != dim * dim - 1 {
            return Err(Error::DimensionMismatch(format!(
                "Kossakowski matrix is {0}×{0}, expected {1}×{1}",
                kossakowski.dim(),
                dim * dim - 1
            )));
        }
        if let Some(h) = &hamiltonian {
            if h.dim() != dim {
                return Err(Error::DimensionMismatch(format!("Hamiltonian is {0}×{0}, expected {dim}×{dim}", h.dim())));
            }
        }
        Ok(KossakowskiGenerator { dim, kossakowski, hamiltonian })
    }

    pub fn matrix(&self) -> &HermMatrix {
        &self.kossakowski
    }

    pub fn hamiltonian(&self) -> Option<&HermMatrix> {
        self.hamiltonian.as_ref()
    }

    pub fn is_markovian(&self) -> bool {
        self.kossakowski.dim() == 0 || self.kossakowski.min_eigenvalue() >= -MARKOVIAN_TOL
    }

    /// Equivalent diagonal generator: Lindblad operators `Σ_j U_jk F_j` with
    /// constant rates `a_k` from `A = U diag(a) U†`.
    pub fn to_diagonal(&self) -> DiagonalGenerator {
        let basis = gell_mann_basis(self.dim);
        let eig = self.kossakowski.eig();
        let terms = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(k, &a)| {
                let op = basis
                    .iter()
                    .enumerate()
                    .fold(CMatrix::zeros(self.dim, self.dim), |acc, (j, f)| acc + f * eig.vectors[(j, k)]);
                LindbladTerm { op, rate: RateSchedule::constant(a) }
            })
            .collect();
        DiagonalGenerator { dim: self.dim, terms, hamiltonian: self.hamiltonian.clone() }
    }
}

impl Generator for KossakowskiGenerator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn superop(&self, t: f64) -> CMatrix {
        self.to_diagonal().superop(t)
    }

    fn kossakowski(&self, _t: f64) -> KossakowskiGenerator {
        self.clone()
    }
}

/// Expand each `L_α = Σ_j c_αj F_j + (Tr L_α / d)·I` and collect
/// `A_jk = Σ_α Γ_α(t) c_αj c̄_αk`; the identity components become an extra
/// Hamiltonian `Σ_α Γ_α (i/2)(ā_α M_α − a_α M_α†)`.
pub fn diagonal_to_kossakowski(g: &DiagonalGenerator, t: f64) -> KossakowskiGenerator {
    let d = g.dim;
    let basis = gell_mann_basis(d);
    let m = basis.len();
    let mut a = CMatrix::zeros(m, m);
    let mut h_extra = CMatrix::zeros(d, d);
    let id = CMatrix::identity(d, d);
    let mut has_h = false;
    for term in &g.terms {
        let rate = term.rate.eval(t);
        let coeffs: Vec<C64> = basis.iter().map(|f| (f * &term.op).trace()).collect();
        for j in 0..m {
            for k in 0..m {
                a[(j, k)] += coeffs[j] * coeffs[k].conj() * rate;
            }
        }
        let a0 = term.op.trace() / C64::new(d as f64, 0.0);
        if a0 != ZERO && rate != 0.0 {
            let traceless = &term.op - &id * a0;
            h_extra += (&traceless * a0.conj() - traceless.adjoint() * a0) * (I * 0.5 * rate);
            has_h = true;
        }
    }
    let hamiltonian = match (&g.hamiltonian, has_h) {
        (Some(h), true) => Some(HermMatrix::symmetrized(h.as_matrix() + h_extra)),
        (Some(h), false) => Some(h.clone()),
        (None, true) => Some(HermMatrix::symmetrized(h_extra)),
        (None, false) => None,
    };
    KossakowskiGenerator { dim: d, kossakowski: HermMatrix::symmetrized(a), hamiltonian }
}

/// `true` iff the Kossakowski matrix at `t` is PSD within [`MARKOVIAN_TOL`].
pub fn is_instantaneously_markovian(g: &dyn Generator, t: f64) -> bool {
    g.is_instantaneously_markovian(t)
}
