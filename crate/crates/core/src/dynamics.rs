//! Time-ordered propagators `Λ(t₂, t₁)` built from generators.
//!
//! The interval is cut into `n = ⌈(t₂ − t₁)/step⌉` equal pieces and each piece
//! contributes `exp(L(t_mid)·Δt)` with the generator frozen at the midpoint
//! (first-order Magnus). Later pieces multiply from the left.

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::linops::{apply_superop, max_abs, vec, CMatrix, C64};

/// Largest admissible `‖L‖₁·Δt` for a single exponential step.
pub const MAX_NORM_STEP: f64 = 1.0;

/// `min(1e-3, (t₂ − t₁)/100)`.
pub fn default_step(t1: f64, t2: f64) -> f64 {
    let span = t2 - t1;
    if span > 0.0 { (span / 100.0).min(1e-3) } else { 1e-3 }
}

/// A superoperator `Λ(t_end, t_start)` together with the step it was built with.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    pub superop: CMatrix,
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
}

impl Propagator {
    pub fn identity(d: usize, t: f64) -> Self {
        Propagator { superop: CMatrix::identity(d * d, d * d), t_start: t, t_end: t, step: 0.0 }
    }

    /// System dimension `d` (the superoperator is `d² × d²`).
    pub fn dim(&self) -> usize {
        (self.superop.nrows() as f64).sqrt().round() as usize
    }

    /// `self ∘ earlier`, i.e. first `earlier`, then `self`.
    pub fn after(&self, earlier: &Propagator) -> Result<Propagator> {
        if self.superop.nrows() != earlier.superop.nrows() {
            return Err(Error::DimensionMismatch("composing propagators of different dimension".into()));
        }
        Ok(Propagator {
            superop: &self.superop * &earlier.superop,
            t_start: earlier.t_start,
            t_end: self.t_end,
            step: self.step.max(earlier.step),
        })
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        apply_superop(&self.superop, rho)
    }

    /// `‖vec(I)† S − vec(I)†‖_max`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let vid = vec(&CMatrix::identity(d, d));
        let row = vid.adjoint() * &self.superop - vid.adjoint();
        row.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// Largest anti-Hermitian part produced from the Hermitian probe basis
    /// `E_jj`, `E_jk + E_kj`, `i(E_jk − E_kj)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..d {
            for k in j..d {
                let mut probes = Vec::with_capacity(2);
                let mut sym = CMatrix::zeros(d, d);
                sym[(j, k)] += C64::new(1.0, 0.0);
                sym[(k, j)] += C64::new(1.0, 0.0);
                probes.push(sym);
                if j != k {
                    let mut asym = CMatrix::zeros(d, d);
                    asym[(j, k)] = C64::new(0.0, 1.0);
                    asym[(k, j)] = C64::new(0.0, -1.0);
                    probes.push(asym);
                }
                for p in probes {
                    let out = apply_superop(&self.superop, &p).expect("probe has matching shape");
                    worst = worst.max(max_abs(&(&out - out.adjoint())));
                }
            }
        }
        worst
    }
}

/// Maximum absolute column sum.
pub(crate) fn norm_one(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `Λ(t₂, t₁)` via midpoint exponentials with pieces no longer than `step`.
pub fn propagate(g: &dyn Generator, t1: f64, t2: f64, step: f64) -> Result<Propagator> {
    if !(t2 >= t1) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::InvalidArgument(format!("propagation needs t2 ≥ t1, got [{t1}, {t2}]")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let d = g.dim();
    let span = t2 - t1;
    if span == 0.0 {
        return Ok(Propagator::identity(d, t1));
    }
    // 1e-9 slack so that span = k·step does not round up to k + 1 pieces.
    let pieces = ((span / step) * (1.0 - 1e-9)).ceil().max(1.0) as usize;
    let dt = span / pieces as f64;
    let mut total = CMatrix::identity(d * d, d * d);
    for k in 0..pieces {
        let t_mid = t1 + (k as f64 + 0.5) * dt;
        let l = g.superop(t_mid);
        let norm_step = norm_one(&l) * dt;
        if norm_step > MAX_NORM_STEP {
            return Err(Error::StepTooLarge { norm_step });
        }
        total = (l * C64::new(dt, 0.0)).exp() * total;
    }
    Ok(Propagator { superop: total, t_start: t1, t_end: t2, step: dt })
}

/// The single-step increment `Λ(t + ε, t)`.
pub fn incremental_map(g: &dyn Generator, t: f64, eps: f64) -> Result<Propagator> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("increment ε must be positive, got {eps}")));
    }
    propagate(g, t, t + eps, eps)
}
