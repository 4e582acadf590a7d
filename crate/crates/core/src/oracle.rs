//! Brute-force reference solver for `D_T`.
//!
//! Parameterizes the Kossakowski matrix as `A = B B†` with `B` complex lower
//! triangular, so every point is PSD without projection, then runs random
//! sampling followed by Nelder–Mead from the best samples. Slow and
//! derivative-free; used only to cross-check [`crate::measures::minimize`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::linops::{herm_coords, CMatrix, HermMatrix, C64};
use crate::measures::DtProblem;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Random starting points drawn and scored.
    pub samples: usize,
    /// Nelder–Mead runs, started from the best samples.
    pub descents: usize,
    /// Evaluation budget of each run.
    pub max_evals: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { samples: 1000, descents: 8, max_evals: 20000 }
    }
}

/// Unpack `m²` reals into `B B†` with `B` lower triangular.
fn cholesky_point(y: &[f64], m: usize) -> HermMatrix {
    let mut b = CMatrix::zeros(m, m);
    let mut k = 0;
    for r in 0..m {
        b[(r, r)] = C64::new(y[k], 0.0);
        k += 1;
        for c in 0..r {
            b[(r, c)] = C64::new(y[k], y[k + 1]);
            k += 2;
        }
    }
    HermMatrix::symmetrized(&b * b.adjoint())
}

fn objective(problem: &DtProblem, y: &[f64]) -> f64 {
    let m = problem.cone().kossakowski_dim();
    let a = cholesky_point(&y[..m * m], m);
    let mut x = herm_coords(a.as_matrix());
    x.extend_from_slice(&y[m * m..]);
    problem.objective(&x)
}

/// Minimize `f` by Nelder–Mead from `start`, restarting the simplex around
/// the incumbent until a restart no longer helps.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], scale: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut best = (start.to_vec(), f(start));
    let mut evals = 1;
    let mut size = scale;
    while evals < max_evals {
        let before = best.1;
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![best.clone()];
        for i in 0..n {
            let mut p = best.0.clone();
            p[i] += size;
            let v = f(&p);
            simplex.push((p, v));
        }
        evals += n;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if evals >= max_evals || spread <= 1e-13 * simplex[0].1.abs().max(1e-300) {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|i| centroid[i] + t * (simplex[n].0[i] - centroid[i])).collect() };
            let reflected = along(-1.0);
            let fr = f(&reflected);
            evals += 1;
            if fr < simplex[0].1 {
                let expanded = along(-2.0);
                let fe = f(&expanded);
                evals += 1;
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let contracted = if fr < simplex[n].1 { along(-0.5) } else { along(0.5) };
                let fc = f(&contracted);
                evals += 1;
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (contracted, fc);
                } else {
                    let lead = simplex[0].0.clone();
                    for p in simplex.iter_mut().skip(1) {
                        for i in 0..n {
                            p.0[i] = lead[i] + 0.5 * (p.0[i] - lead[i]);
                        }
                        p.1 = f(&p.0);
                    }
                    evals += n;
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best.1 {
            best = simplex.swap_remove(0);
        }
        if before - best.1 <= 1e-12 * before.abs().max(1.0) {
            if size < 1e-9 * scale {
                break;
            }
            size *= 0.1;
        }
    }
    best
}

/// Brute-force estimate of `min ‖T − M x‖₁` over the PSD cone.
pub fn brute_force_dt(problem: &DtProblem, cfg: &OracleConfig, seed: u64) -> f64 {
    let m = problem.cone().kossakowski_dim();
    let dim = problem.n_params();
    let origin = vec![0.0; dim];
    let f0 = objective(problem, &origin);
    // A ~ B B†, so B scales with the square root of the target size.
    let scale = (problem.cone().dim() as f64 * f0.max(1e-12)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<(Vec<f64>, f64)> = (0..cfg.samples)
        .map(|_| {
            let y: Vec<f64> = (0..dim)
                .map(|k| {
                    let z: f64 = rng.sample(StandardNormal);
                    if k < m * m { scale * z } else { f0 * z }
                })
                .collect();
            let v = objective(problem, &y);
            (y, v)
        })
        .collect();
    starts.sort_by(|a, b| a.1.total_cmp(&b.1));
    starts.truncate(cfg.descents);
    let mut nudged = origin.clone();
    for (k, v) in nudged.iter_mut().enumerate().take(m * m) {
        *v = if k % 2 == 0 { 1e-3 * scale } else { 0.0 };
    }
    starts.push((nudged, 0.0));
    starts
        .par_iter()
        .map(|(y, _)| nelder_mead(&|p| objective(problem, p), y, 0.25 * scale, cfg.max_evals).1)
        .reduce(|| f0, f64::min)
}

/// `M + M†` for a complex Gaussian `M`.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> HermMatrix {
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    HermMatrix::symmetrized(&m + m.adjoint())
}
