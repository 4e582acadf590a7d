//! Non-Markovianity quantifiers.
//!
//! * `g(t)`: RHP rate, the ε → 0 growth rate of `‖C(t+ε, t)‖₁`.
//! * `N_T(t) = ∫₀ᵗ g`, its normalized form `T = N_T/(1+N_T)` and the
//!   cumulative robustness `R = N_T/2`.
//! * `r_inc = (‖C‖₁ − 1)/2`, the robustness of a single increment.
//! * `D_T(t)`: trace distance from the increment to the free cone, solved in
//!   the exact ε → 0 form `min_{A ⪰ 0} ‖K_N − K_M(A)‖₁`.
//!
//! Exact-limit RHP rate: write `|ψ⟩⟨ψ| + εK` in the basis split by
//! `Q = I − |ψ⟩⟨ψ|`. To first order the eigenvalue near 1 is
//! `1 + ε⟨ψ|K|ψ⟩` and the rest are `εμ_i` with `μ_i` the spectrum of `QKQ`.
//! Since `Tr K = 0`, `⟨ψ|K|ψ⟩ = −Σμ_i`, so the trace norm grows as
//! `1 + 2ε Σ_{μ_i<0} |μ_i|`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::choi::{max_entangled, ChoiDerivative, ChoiMatrix, FreeCone, TRACE_TOL};
use crate::dynamics::{incremental_map, propagate, Propagator};
use crate::error::{Error, Result};
use crate::choi::choi_of_propagator;
use crate::generators::Generator;
use crate::linops::{apply_local, herm_coords, herm_from_coords, trace_norm, CMatrix, HermMatrix};

/// `μ` values within this (relative) distance below zero count as roundoff.
const SPECTRAL_FLOOR: f64 = 1e-12;

/// Largest roundoff-level negative excess `‖C‖₁ − 1` that is clamped to 0.
pub const NEGATIVE_EXCESS_TOL: f64 = 1e-12;

/// RHP rate in the exact ε → 0 limit: `2 Σ_{μ_i < 0} |μ_i|` over the
/// spectrum of `QKQ`.
pub fn rhp_g(k: &ChoiDerivative) -> Result<f64> {
    let m = k.matrix();
    let trace = m.trace();
    let scale = m.as_matrix().iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    if trace.abs() > TRACE_TOL * scale {
        return Err(Error::NonTraceless { trace });
    }
    let n = m.dim();
    let psi = max_entangled(k.dim());
    let q = CMatrix::identity(n, n) - &psi * psi.adjoint();
    let qkq = m.congruence(&q);
    let floor = SPECTRAL_FLOOR * scale;
    let negative: f64 = qkq.eigenvalues().iter().filter(|&&mu| mu < -floor).map(|mu| -mu).sum();
    // + 0.0 turns the empty sum's −0 into 0
    Ok(2.0 * negative + 0.0)
}

/// `‖C‖₁ − 1` with roundoff-level negatives clamped to zero.
fn trace_norm_excess(c: &ChoiMatrix) -> Result<f64> {
    let excess = c.trace_norm() - 1.0;
    if excess < -NEGATIVE_EXCESS_TOL {
        return Err(Error::NegativeRate { value: excess });
    }
    Ok(excess.max(0.0))
}

/// Finite-ε RHP rate `(‖C(t+ε, t)‖₁ − 1)/ε`.
pub fn rhp_g_finite(g: &dyn Generator, t: f64, eps: f64) -> Result<f64> {
    let c = choi_of_propagator(&incremental_map(g, t, eps)?)?;
    Ok(trace_norm_excess(&c)? / eps)
}

/// Cumulative trapezoidal integral `N_T(t_k) = ∫_{t_0}^{t_k} g`.
pub fn rhp_integral(traj: &[(f64, f64)]) -> Result<Vec<f64>> {
    if let Some(index) = traj.windows(2).position(|w| !(w[1].0 >= w[0].0)) {
        return Err(Error::UnsortedGrid { index: index + 1 });
    }
    let mut out = Vec::with_capacity(traj.len());
    let mut acc = 0.0;
    for (k, &(t, g)) in traj.iter().enumerate() {
        if k > 0 {
            let (t0, g0) = traj[k - 1];
            acc += 0.5 * (t - t0) * (g0 + g);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Robustness of a single Choi matrix, `(‖C‖₁ − 1)/2`.
pub fn robustness_incremental(c: &ChoiMatrix) -> f64 {
    ((c.trace_norm() - 1.0) / 2.0).max(0.0)
}

/// Sum of the magnitudes of the negative eigenvalues of `C`.
pub fn negative_eigenvalue_mass(c: &ChoiMatrix) -> f64 {
    c.matrix().eigenvalues().iter().filter(|&&l| l < 0.0).map(|l| -l).sum::<f64>() + 0.0
}

/// `R = N_T/2`.
pub fn robustness_cumulative(n_t: f64) -> f64 {
    n_t / 2.0
}

/// `T = N_T/(1 + N_T)`.
pub fn normalized_measure(n_t: f64) -> f64 {
    n_t / (1.0 + n_t)
}

/// Projected-subgradient settings for [`dt_measure`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    /// Minimum improvement of the best objective over `patience` iterations.
    pub tol: f64,
    pub patience: usize,
    /// Initial step `η₀`; defaults to `0.1·‖K_N‖₁`.
    pub step0: Option<f64>,
    /// Let the free cone include Hamiltonian parts.
    pub allow_hamiltonian: bool,
    /// Cross-check every solve against the brute-force oracle.
    pub oracle: bool,
    /// Refine uncertified results with [`polish`].
    pub polish: bool,
    pub polish_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iter: 5000, tol: 1e-9, patience: 50, step0: None, allow_hamiltonian: false, oracle: false, polish: true, polish_iter: 20000 }
    }
}

/// Outcome of one `D_T` solve.
#[derive(Clone, Debug, Serialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub polish_iterations: usize,
    pub objective: f64,
    /// Lower bound `g` used to certify the result.
    pub lower_bound: f64,
    #[serde(serialize_with = "crate::models::serialize_herm")]
    pub argmin_kossakowski: HermMatrix,
    pub argmin_hamiltonian: Vec<f64>,
    pub converged: bool,
    /// `objective − oracle` when the oracle ran.
    pub oracle_gap: Option<f64>,
}

/// The convex program `min_x ‖T − unvec(M x)‖₁` with the Kossakowski block
/// of `x` constrained to the PSD cone.
pub struct DtProblem {
    cone: FreeCone,
    map: DMatrix<f64>,
    target: DVector<f64>,
    side: usize,
}

impl DtProblem {
    pub fn new(k_n: &ChoiDerivative, allow_hamiltonian: bool) -> Self {
        let cone = FreeCone::new(k_n.dim(), allow_hamiltonian);
        let map = cone.linear_map();
        let target = DVector::from_vec(herm_coords(k_n.matrix().as_matrix()));
        DtProblem { side: k_n.dim() * k_n.dim(), cone, map, target }
    }

    /// Same program after a local map `I ⊗ Λ` acts on both the increment and
    /// the free cone.
    pub fn mapped(k_n: &ChoiDerivative, allow_hamiltonian: bool, superop: &CMatrix) -> Result<Self> {
        let d = k_n.dim();
        let cone = FreeCone::new(d, allow_hamiltonian);
        let n = cone.n_params();
        let mut map = DMatrix::zeros(d.pow(4), n);
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[k] = 1.0;
            let image = apply_local(cone.evaluate(&x).as_matrix(), superop, d, d)?;
            map.column_mut(k).copy_from_slice(&herm_coords(&HermMatrix::symmetrized(image).into_inner()));
            x[k] = 0.0;
        }
        let target = apply_local(k_n.matrix().as_matrix(), superop, d, d)?;
        let target = DVector::from_vec(herm_coords(HermMatrix::symmetrized(target).as_matrix()));
        Ok(DtProblem { side: d * d, cone, map, target })
    }

    pub fn cone(&self) -> &FreeCone {
        &self.cone
    }

    pub fn n_params(&self) -> usize {
        self.map.ncols()
    }

    pub fn residual(&self, x: &[f64]) -> HermMatrix {
        let r = &self.target - &self.map * DVector::from_column_slice(x);
        herm_from_coords(r.as_slice(), self.side)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        trace_norm(&self.residual(x))
    }

    /// Objective and a subgradient `−Mᵀ coords(V sign(Λ) V†)`.
    pub fn objective_and_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let eig = self.residual(x).eig();
        let value = eig.values.iter().map(|l| l.abs()).sum();
        let signs: Vec<f64> = eig
            .values
            .iter()
            .map(|&l| if l.abs() < SPECTRAL_FLOOR { 0.0 } else { l.signum() })
            .collect();
        let sign_matrix = eig.reassemble(&signs);
        let g = DVector::from_vec(herm_coords(sign_matrix.as_matrix()));
        let grad = -(self.map.transpose() * g);
        (value, grad.as_slice().to_vec())
    }

    /// Clip the Kossakowski block to the PSD cone.
    pub fn project(&self, x: &mut [f64]) {
        let m = self.cone.kossakowski_dim();
        let a = herm_from_coords(&x[..m * m], m).psd_projection();
        x[..m * m].copy_from_slice(&herm_coords(a.as_matrix()));
    }

    /// Least-squares solution of `M x = T` with the Kossakowski block
    /// clipped to the PSD cone. Exact whenever the target is free.
    pub fn least_squares_start(&self) -> Vec<f64> {
        let svd = self.map.clone().svd(true, true);
        let mut x = match svd.solve(&self.target, 1e-12) {
            Ok(x) => x.as_slice().to_vec(),
            Err(_) => vec![0.0; self.n_params()],
        };
        self.project(&mut x);
        x
    }

    /// PSD part of the Kossakowski matrix implied by the target's
    /// off-reference block.
    pub fn warm_start(&self) -> Vec<f64> {
        let target = herm_from_coords(self.target.as_slice(), self.side);
        let a = self.cone.implied_kossakowski(&target).psd_projection();
        let h = vec![0.0; self.n_params() - a.dim() * a.dim()];
        let mut x = herm_coords(a.as_matrix());
        x.extend(h);
        x
    }
}

/// Projected subgradient descent with `η_k = η₀/√k`, keeping the best
/// iterate. Starts from the best of `A = 0`, [`DtProblem::warm_start`] and
/// [`DtProblem::least_squares_start`]. Stops when the best objective improves
/// by less than `tol` over `patience` iterations, or when it meets
/// `lower_bound` (the RHP rate, which no free point can beat). Uncertified
/// results are then refined by [`polish`] when `cfg.polish` is set.
pub fn minimize(problem: &DtProblem, cfg: &OptimizerConfig, lower_bound: f64) -> OptimizerReport {
    let (mut x, mut f) = [vec![0.0; problem.n_params()], problem.warm_start(), problem.least_squares_start()]
        .into_iter()
        .map(|x| {
            let f = problem.objective(&x);
            (x, f)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three candidates");
    let mut best_x = x.clone();
    let mut best_f = f;
    let scale = problem.objective(&vec![0.0; problem.n_params()]).max(f64::MIN_POSITIVE);
    let step0 = cfg.step0.unwrap_or(0.1 * scale);
    let certified = |f: f64| f - lower_bound <= 1e-12 * f.abs().max(1.0);

    let mut iterations = 0;
    let mut converged = certified(best_f);
    let mut checkpoint = best_f;
    let mut since_checkpoint = 0;
    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let (_, grad) = problem.objective_and_subgradient(&x);
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            converged = true;
            break;
        }
        let eta = step0 / (iterations as f64).sqrt();
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= eta * gi;
        }
        problem.project(&mut x);
        f = problem.objective(&x);
        if f < best_f {
            best_f = f;
            best_x.clone_from(&x);
        }
        if certified(best_f) {
            converged = true;
            break;
        }
        since_checkpoint += 1;
        if since_checkpoint >= cfg.patience {
            if checkpoint - best_f < cfg.tol {
                converged = true;
            }
            checkpoint = best_f;
            since_checkpoint = 0;
        }
    }
    let mut polish_iterations = 0;
    if cfg.polish && !certified(best_f) {
        let out = polish(problem, &best_x, lower_bound, cfg.polish_iter);
        polish_iterations = out.iterations;
        if out.objective < best_f {
            best_f = out.objective;
            best_x = out.x;
        }
        converged |= out.converged;
    }
    let (a, h) = problem.cone().unpack(&best_x);
    OptimizerReport {
        iterations,
        polish_iterations,
        objective: best_f,
        lower_bound,
        argmin_kossakowski: a,
        argmin_hamiltonian: h,
        converged,
        oracle_gap: None,
    }
}

/// Result of [`polish`].
pub struct PolishOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// ADMM refinement of a feasible point. Splits the program as
/// `min ‖R‖₁ + δ(Z ⪰ 0)` subject to `R = T − Mx` and `Z = x_A`; the
/// `R` step is eigenvalue soft-thresholding, the `Z` step eigenvalue
/// clipping, and the `x` step a fixed least-squares solve. The penalty is
/// rebalanced against the residuals. Every iterate `(Z, x_H)` is feasible,
/// so the best one seen is returned.
pub fn polish(problem: &DtProblem, start: &[f64], lower_bound: f64, max_iter: usize) -> PolishOutcome {
    let n = problem.n_params();
    let m = problem.cone().kossakowski_dim();
    let na = m * m;
    let map = &problem.map;
    let target = &problem.target;
    let mt = map.transpose();
    let mut normal = &mt * map;
    for i in 0..na {
        normal[(i, i)] += 1.0;
    }
    let start_f = problem.objective(start);
    let mut out = PolishOutcome { x: start.to_vec(), objective: start_f, iterations: 0, converged: false };
    let Some(chol) = normal.cholesky() else {
        return out;
    };
    let scale = target.norm().max(f64::MIN_POSITIVE);
    let certified = |f: f64| f - lower_bound <= 1e-12 * f.abs().max(1.0);
    let stop = 1e-11 * scale.max(1.0);

    let mut x = DVector::from_column_slice(start);
    let mut z = x.rows(0, na).into_owned();
    let mut r = target - map * &x;
    let mut u = DVector::zeros(target.len());
    let mut w = DVector::zeros(na);
    let mut rho = 1.0 / scale;
    for k in 1..=max_iter {
        out.iterations = k;
        let mut rhs = &mt * (target - &r - &u);
        for i in 0..na {
            rhs[i] += z[i] - w[i];
        }
        x = chol.solve(&rhs);

        let v = herm_from_coords((target - map * &x - &u).as_slice(), problem.side);
        let eig = v.eig();
        let shrunk: Vec<f64> = eig.values.iter().map(|&l| l.signum() * (l.abs() - 1.0 / rho).max(0.0)).collect();
        let r_old = std::mem::replace(&mut r, DVector::from_vec(herm_coords(eig.reassemble(&shrunk).as_matrix())));

        let za = herm_from_coords((x.rows(0, na) + &w).as_slice(), m).psd_projection();
        let z_old = std::mem::replace(&mut z, DVector::from_vec(herm_coords(za.as_matrix())));

        let p1 = map * &x + &r - target;
        let p2 = x.rows(0, na) - &z;
        u += &p1;
        w += &p2;
        let primal = (p1.norm_squared() + p2.norm_squared()).sqrt();
        let mut dual_vec = &mt * (&r - &r_old);
        for i in 0..na {
            dual_vec[i] -= z[i] - z_old[i];
        }
        let dual = rho * dual_vec.norm();

        if k % 10 == 0 || k == max_iter {
            let mut cand: Vec<f64> = z.as_slice().to_vec();
            cand.extend_from_slice(&x.as_slice()[na..n]);
            let f = problem.objective(&cand);
            if f < out.objective {
                out.objective = f;
                out.x = cand;
            }
            if certified(out.objective) || (primal < stop && dual < stop) {
                out.converged = true;
                break;
            }
        }
        if k % 25 != 0 {
        } else if primal > 10.0 * dual {
            rho *= 2.0;
            u /= 2.0;
            w /= 2.0;
        } else if dual > 10.0 * primal {
            rho /= 2.0;
            u *= 2.0;
            w *= 2.0;
        }
    }
    out
}

/// `D_T` of an increment in the exact ε → 0 form, with its report.
pub fn dt_measure(k_n: &ChoiDerivative, cfg: &OptimizerConfig) -> Result<(f64, OptimizerReport)> {
    let g = rhp_g(k_n)?;
    let problem = DtProblem::new(k_n, cfg.allow_hamiltonian);
    let mut report = minimize(&problem, cfg, g);
    if cfg.oracle {
        let oracle = crate::oracle::brute_force_dt(&problem, &crate::oracle::OracleConfig::default(), 0);
        report.oracle_gap = Some(report.objective - oracle);
    }
    Ok((report.objective, report))
}

/// `D_T` after the local map `I ⊗ Λ` acts on the increment and on every free
/// comparison point.
pub fn dt_measure_mapped(k_n: &ChoiDerivative, superop: &CMatrix, cfg: &OptimizerConfig) -> Result<(f64, OptimizerReport)> {
    let problem = DtProblem::mapped(k_n, cfg.allow_hamiltonian, superop)?;
    let report = minimize(&problem, cfg, 0.0);
    Ok((report.objective, report))
}

/// Result of [`monotonicity_check`].
#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityOutcome {
    pub before: f64,
    pub after: f64,
    pub holds: bool,
}

/// Slack allowed when comparing `D_T` before and after a free operation.
pub const MONOTONICITY_TOL: f64 = 1e-6;

/// Compose `I ⊗ Λ^M(t+Δ, t)` with the increment and confirm `D_T` does not
/// grow. `markov` must be Markovian on the whole window.
pub fn monotonicity_check(
    k_n: &ChoiDerivative,
    markov: &dyn Generator,
    t: f64,
    delta: f64,
    cfg: &OptimizerConfig,
) -> Result<MonotonicityOutcome> {
    if markov.dim() != k_n.dim() {
        return Err(Error::DimensionMismatch("generator and increment differ in dimension".into()));
    }
    const PROBES: usize = 16;
    for k in 0..=PROBES {
        let s = t + delta * k as f64 / PROBES as f64;
        let kos = markov.kossakowski(s);
        if !kos.is_markovian() {
            return Err(Error::NotMarkovian { t: s, min_eigenvalue: kos.matrix().min_eigenvalue() });
        }
    }
    let step = (delta / 100.0).max(1e-12).min(1e-2);
    let lambda = if delta > 0.0 { propagate(markov, t, t + delta, step)? } else { Propagator::identity(k_n.dim(), t) };
    let (before, _) = dt_measure(k_n, cfg)?;
    let (after, _) = dt_measure_mapped(k_n, &lambda.superop, cfg)?;
    Ok(MonotonicityOutcome { before, after, holds: after <= before + MONOTONICITY_TOL })
}

/// All quantifiers at one grid point.
#[derive(Clone, Debug, Serialize)]
pub struct MeasurePoint {
    pub t: f64,
    pub g: f64,
    pub g_finite_eps: Option<f64>,
    #[serde(rename = "d_T")]
    pub d_t: f64,
    pub r_inc_rate: f64,
    #[serde(rename = "N_T")]
    pub n_t: f64,
    #[serde(rename = "T_norm")]
    pub t_norm: f64,
    #[serde(rename = "R_cum")]
    pub r_cum: f64,
}

/// Which route feeds the quantifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Analytic ε → 0 objects only.
    ExactLimit,
    /// `g` and `r_inc_rate` from finite-ε increments.
    FiniteEps,
    /// Exact-limit `g`, plus the finite-ε columns for comparison.
    Both,
}

/// Per-instant values before the cumulative integral is taken.
#[derive(Clone, Debug)]
pub struct Instant {
    pub t: f64,
    pub g: f64,
    pub g_finite_eps: Option<f64>,
    pub d_t: f64,
    pub r_inc_rate: f64,
    pub report: OptimizerReport,
}

/// Evaluate every instant quantity at time `t`.
pub fn measure_instant(g: &dyn Generator, t: f64, eps: f64, mode: Mode, cfg: &OptimizerConfig) -> Result<Instant> {
    let k = crate::choi::choi_derivative(g, t)?;
    let g_exact = rhp_g(&k)?;
    let (d_t, report) = dt_measure(&k, cfg)?;
    let finite = match mode {
        Mode::ExactLimit => None,
        Mode::FiniteEps | Mode::Both => {
            let c = choi_of_propagator(&incremental_map(g, t, eps)?)?;
            let excess = trace_norm_excess(&c)?;
            Some((excess / eps, excess / 2.0 / eps))
        }
    };
    let (g_used, g_finite_eps, r_inc_rate) = match (mode, finite) {
        (Mode::ExactLimit, _) | (_, None) => (g_exact, None, g_exact / 2.0),
        (Mode::FiniteEps, Some((gf, r))) => (gf, Some(gf), r),
        (Mode::Both, Some((gf, r))) => (g_exact, Some(gf), r),
    };
    Ok(Instant { t, g: g_used, g_finite_eps, d_t, r_inc_rate, report })
}

/// Attach `N_T`, `T` and `R` to a time-ordered list of instants.
pub fn accumulate(instants: &[Instant]) -> Result<Vec<MeasurePoint>> {
    let pairs: Vec<(f64, f64)> = instants.iter().map(|p| (p.t, p.g)).collect();
    let n_t = rhp_integral(&pairs)?;
    Ok(instants
        .iter()
        .zip(n_t)
        .map(|(p, n)| MeasurePoint {
            t: p.t,
            g: p.g,
            g_finite_eps: p.g_finite_eps,
            d_t: p.d_t,
            r_inc_rate: p.r_inc_rate,
            n_t: n,
            t_norm: normalized_measure(n),
            r_cum: robustness_cumulative(n),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::{choi_derivative, FreeCone};
    use crate::generators::{DiagonalGenerator, KossakowskiGenerator, LindbladTerm, RateSchedule};
    use crate::linops::{pauli_x, pauli_y, pauli_z, C64};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn dephasing(rate: RateSchedule) -> DiagonalGenerator {
        DiagonalGenerator::new(2, vec![LindbladTerm { op: pauli_z(), rate }], None).unwrap()
    }

    fn eternal() -> DiagonalGenerator {
        let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
        DiagonalGenerator::new(
            2,
            vec![
                LindbladTerm { op: pauli_x() * s, rate: RateSchedule::constant(1.0) },
                LindbladTerm { op: pauli_y() * s, rate: RateSchedule::constant(1.0) },
                LindbladTerm { op: pauli_z() * s, rate: RateSchedule::TanhNegative { scale: 1.0, rate: 1.0 } },
            ],
            None,
        )
        .unwrap()
    }

    /// Brute-force finite differencing at three ε values, extrapolated to 0.
    fn finite_difference_oracle(g: &dyn Generator, t: f64) -> f64 {
        let vals: Vec<f64> = [1e-3, 1e-4, 1e-5].iter().map(|&e| rhp_g_finite(g, t, e).unwrap()).collect();
        // Richardson on the last two points (linear error in ε).
        (10.0 * vals[2] - vals[1]) / 9.0
    }

    #[test]
    fn markovian_instant_has_zero_rate() {
        let k = choi_derivative(&dephasing(RateSchedule::constant(0.7)), 0.0).unwrap();
        assert_eq!(rhp_g(&k).unwrap(), 0.0);
    }

    #[test]
    fn dephasing_rate_matches_finite_difference_oracle() {
        let gen = dephasing(RateSchedule::constant(-0.5));
        let oracle = finite_difference_oracle(&gen, 0.0);
        assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-6);
        let g = rhp_g(&choi_derivative(&gen, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eternal_rate_is_tanh() {
        let gen = eternal();
        for t in [0.3, 1.0, 2.5] {
            let g = rhp_g(&choi_derivative(&gen, t).unwrap()).unwrap();
            assert_abs_diff_eq!(g, t.tanh(), epsilon = 1e-12);
            assert_abs_diff_eq!(finite_difference_oracle(&gen, t), t.tanh(), epsilon = 1e-5);
        }
    }

    #[test]
    fn rhp_rate_rejects_trace() {
        let k = ChoiDerivative::zeros(2);
        assert_eq!(rhp_g(&k).unwrap(), 0.0);
    }

    #[test]
    fn integral_examples() {
        let zeros: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.0)).collect();
        assert!(rhp_integral(&zeros).unwrap().iter().all(|&v| v == 0.0));

        let n = 20000;
        let traj: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                (t, 2.0 * (-t.sin()).max(0.0))
            })
            .collect();
        let cumulative = rhp_integral(&traj).unwrap();
        assert_abs_diff_eq!(*cumulative.last().unwrap(), 4.0, epsilon = 1e-6);
        assert!(cumulative.windows(2).all(|w| w[1] >= w[0]));

        let traj: Vec<(f64, f64)> = (0..=3000).map(|k| (k as f64 * 1e-3, (k as f64 * 1e-3).tanh())).collect();
        let cumulative = rhp_integral(&traj).unwrap();
        assert_abs_diff_eq!(*cumulative.last().unwrap(), 3f64.cosh().ln(), epsilon = 1e-6);

        assert!(matches!(rhp_integral(&[(0.0, 1.0), (1.0, 1.0), (0.5, 1.0)]), Err(Error::UnsortedGrid { index: 2 })));
    }

    #[test]
    fn robustness_examples() {
        let free = ChoiMatrix::new(2, HermMatrix::from_diagonal(&[0.25, 0.25, 0.25, 0.25])).unwrap();
        assert_eq!(robustness_incremental(&free), 0.0);
        let c = ChoiMatrix::new(2, HermMatrix::from_diagonal(&[1.25, -0.25, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(c.trace_norm(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(robustness_incremental(&c), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(negative_eigenvalue_mass(&c), 0.25, epsilon = 1e-15);

        let eps = 1e-3;
        let c = choi_of_propagator(&incremental_map(&dephasing(RateSchedule::constant(-1.0)), 0.0, eps).unwrap()).unwrap();
        // ε·g/2 with g = 2, up to O(ε²)
        assert_abs_diff_eq!(robustness_incremental(&c), 1e-3, epsilon = 2e-6);
    }

    #[test]
    fn cumulative_and_normalized_examples() {
        assert_eq!(robustness_cumulative(0.0), 0.0);
        assert_eq!(robustness_cumulative(4.0), 2.0);
        assert_abs_diff_eq!(robustness_cumulative(1.3f64.cosh().ln()), 0.5 * 1.3f64.cosh().ln());
        assert_eq!(normalized_measure(0.0), 0.0);
        assert_abs_diff_eq!(normalized_measure(4.0), 0.8, epsilon = 1e-15);
        let r = robustness_cumulative(4.0);
        assert_abs_diff_eq!(normalized_measure(4.0), 2.0 * r / (1.0 + 2.0 * r), epsilon = 1e-15);
    }

    #[test]
    fn dt_of_markovian_increment_is_zero() {
        let k = choi_derivative(&dephasing(RateSchedule::constant(0.3)), 0.0).unwrap();
        let (dt, report) = dt_measure(&k, &OptimizerConfig::default()).unwrap();
        assert!(dt < 1e-12);
        assert!(report.converged);
        let expected = HermMatrix::from_diagonal(&[0.0, 0.0, 0.6]);
        assert!(crate::linops::max_abs(&(report.argmin_kossakowski.as_matrix() - expected.as_matrix())) < 1e-12);
    }

    #[test]
    fn dt_of_negative_dephasing_equals_rate() {
        let k = choi_derivative(&dephasing(RateSchedule::constant(-0.5)), 0.0).unwrap();
        let (dt, _) = dt_measure(&k, &OptimizerConfig::default()).unwrap();
        assert_abs_diff_eq!(dt, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dt_scales_linearly() {
        let cone = FreeCone::new(2, false);
        let a = HermMatrix::new(CMatrix::from_row_slice(3, 3, &[
            C64::new(0.5, 0.0), C64::new(0.2, 0.3), C64::new(0.0, -0.4),
            C64::new(0.2, -0.3), C64::new(-0.7, 0.0), C64::new(0.1, 0.0),
            C64::new(0.0, 0.4), C64::new(0.1, 0.0), C64::new(0.2, 0.0),
        ]))
        .unwrap();
        let k = ChoiDerivative::new(2, cone.derivative(&a)).unwrap();
        let (d1, _) = dt_measure(&k, &OptimizerConfig::default()).unwrap();
        let (d3, _) = dt_measure(&k.scale(3.0), &OptimizerConfig::default()).unwrap();
        assert_abs_diff_eq!(d3, 3.0 * d1, epsilon = 1e-3 * d3.max(1.0));
        assert!(d1 >= rhp_g(&k).unwrap() - 1e-9);
    }

    #[test]
    fn hamiltonian_increments_need_the_flag_to_be_free() {
        let h = HermMatrix::new(pauli_x() * C64::new(0.8, 0.0)).unwrap();
        let gen = KossakowskiGenerator::new(2, HermMatrix::zeros(3), Some(h)).unwrap();
        let k = choi_derivative(&gen, 0.0).unwrap();
        assert_eq!(rhp_g(&k).unwrap(), 0.0);
        let cfg = OptimizerConfig { allow_hamiltonian: true, ..OptimizerConfig::default() };
        let (dt, _) = dt_measure(&k, &cfg).unwrap();
        assert!(dt < 1e-6, "dt = {dt}");
        let (dt_strict, _) = dt_measure(&k, &OptimizerConfig::default()).unwrap();
        assert!(dt_strict > 0.1);
    }

    #[test]
    fn monotonicity_examples() {
        let k = choi_derivative(&dephasing(RateSchedule::constant(-0.5)), 0.0).unwrap();
        let cfg = OptimizerConfig::default();
        let idle = dephasing(RateSchedule::constant(0.0));
        let same = monotonicity_check(&k, &idle, 0.0, 1.0, &cfg).unwrap();
        assert!(same.holds);
        assert_abs_diff_eq!(same.after, same.before, epsilon = 1e-9);

        let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let depolarizing = DiagonalGenerator::new(
            2,
            vec![
                LindbladTerm { op: pauli_x() * s, rate: RateSchedule::constant(2.0) },
                LindbladTerm { op: pauli_y() * s, rate: RateSchedule::constant(2.0) },
                LindbladTerm { op: pauli_z() * s, rate: RateSchedule::constant(2.0) },
            ],
            None,
        )
        .unwrap();
        let out = monotonicity_check(&k, &depolarizing, 0.0, 1.0, &cfg).unwrap();
        assert!(out.holds);
        assert!(out.after < out.before - 0.1, "{out:?}");

        let bad = dephasing(RateSchedule::constant(-1.0));
        assert!(matches!(monotonicity_check(&k, &bad, 0.0, 1.0, &cfg), Err(Error::NotMarkovian { .. })));
    }

    #[test]
    fn instants_and_accumulation() {
        let gen = dephasing(RateSchedule::sinusoid(1.0, 1.0, 0.0, 0.0));
        let cfg = OptimizerConfig::default();
        let p = measure_instant(&gen, 1.5 * PI, 1e-4, Mode::Both, &cfg).unwrap();
        assert_abs_diff_eq!(p.g, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.d_t, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.g_finite_eps.unwrap(), 2.0, epsilon = 1e-3);
        let q = measure_instant(&gen, 0.5 * PI, 1e-4, Mode::ExactLimit, &cfg).unwrap();
        assert_eq!((q.g, q.r_inc_rate), (0.0, 0.0));
        assert!(q.g_finite_eps.is_none());
        assert!(q.d_t < 1e-12);
        let pts = accumulate(&[q, p]).unwrap();
        assert_abs_diff_eq!(pts[1].n_t, PI, epsilon = 1e-9);
        assert_abs_diff_eq!(pts[1].r_cum, pts[1].n_t / 2.0);
    }
}
