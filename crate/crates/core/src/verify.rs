//! Randomized property suites behind `nmlab verify`.
//!
//! Every suite draws its instances from a seeded ChaCha stream, evaluates
//! them in parallel and reports one [`PropertyResult`] per property with the
//! first counterexample it found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::choi::{choi_derivative, choi_of_propagator, mix, ChoiDerivative, ChoiMatrix, FreeCone, DEFAULT_FREE_TOL};
use crate::dynamics::propagate;
use crate::generators::KossakowskiGenerator;
use crate::linops::{herm_coords, CMatrix, HermMatrix, Keep, C64};
use crate::measures::{
    dt_measure, monotonicity_check, negative_eigenvalue_mass, rhp_g, robustness_incremental, DtProblem,
    OptimizerConfig, MONOTONICITY_TOL,
};
use crate::models::catalog;
use crate::oracle::{brute_force_dt, random_hermitian, OracleConfig};

/// Slack on `D_T ≥ g`.
pub const THEOREM_TOL: f64 = 1e-6;
/// Slack on the convexity inequality.
pub const CONVEXITY_TOL: f64 = 1e-6;
/// Allowed `|D_T − oracle|`.
pub const ORACLE_TOL: f64 = 1e-3;
/// Allowed `|D_T − g|` on single-channel dephasing.
pub const TIGHTNESS_TOL: f64 = 1e-3;
/// Allowed `|(‖C‖₁ − 1)/2 − Σ|λ⁻||`.
pub const ROBUSTNESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Propositions,
    Theorem1,
    OptimizerOracle,
    All,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: usize,
    /// Largest violation (or gap) seen, in the property's own units.
    pub worst: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Outcome of one instance: `Ok(worst)` or `Err((worst, payload))`.
type Check = std::result::Result<f64, (f64, Value)>;

fn collect(name: &str, checks: Vec<Check>) -> PropertyResult {
    let mut worst = 0.0_f64;
    let mut failures = 0;
    let mut counterexample = None;
    for c in &checks {
        match c {
            Ok(w) => worst = worst.max(*w),
            Err((w, payload)) => {
                worst = worst.max(*w);
                failures += 1;
                counterexample.get_or_insert_with(|| payload.clone());
            }
        }
    }
    PropertyResult { name: name.into(), passed: failures == 0, checked: checks.len(), failures, worst, counterexample }
}

fn check(ok: bool, worst: f64, payload: impl FnOnce() -> Value) -> Check {
    if ok { Ok(worst) } else { Err((worst, payload())) }
}

fn matrix_json(m: &CMatrix) -> Value {
    json!((0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded Markovian qubit generator: PSD Kossakowski matrix with entries of
/// order one, plus a random Hamiltonian.
pub fn random_markovian_generator<R: Rng>(rng: &mut R) -> KossakowskiGenerator {
    let b = random_hermitian(rng, 3).into_inner() * C64::new(0.5, 0.0);
    let a = HermMatrix::symmetrized(&b * b.adjoint());
    let h = HermMatrix::symmetrized(random_hermitian(rng, 2).into_inner() * C64::new(0.5, 0.0));
    KossakowskiGenerator::new(2, a, Some(h)).expect("shapes match")
}

/// Choi matrix of a Markovian qubit channel run for a random time.
fn random_free_choi<R: Rng>(rng: &mut R) -> (ChoiMatrix, CMatrix) {
    let g = random_markovian_generator(rng);
    let tau = rng.random_range(0.05..1.0);
    let p = propagate(&g, 0.0, tau, 0.01).expect("moderate generator");
    (choi_of_propagator(&p).expect("propagators are trace preserving"), p.superop)
}

/// Seeded qubit Choi derivative with an indefinite Kossakowski matrix.
pub fn random_derivative<R: Rng>(rng: &mut R) -> (ChoiDerivative, HermMatrix) {
    let cone = FreeCone::new(2, false);
    let a = HermMatrix::symmetrized(random_hermitian(rng, 3).into_inner() * C64::new(0.5, 0.0));
    (ChoiDerivative::new(2, cone.derivative(&a)).expect("free-cone images are traceless"), a)
}

fn prop_tensor_closure(seed: u64) -> Vec<PropertyResult> {
    let mut rng = rng_for(seed, 1);
    let pairs: Vec<_> = (0..100).map(|_| (random_free_choi(&mut rng).0, random_free_choi(&mut rng).0)).collect();
    let run = |f: &(dyn Fn(&ChoiMatrix, &ChoiMatrix) -> Vec<ChoiMatrix> + Sync)| -> Vec<Check> {
        pairs
            .par_iter()
            .map(|(c1, c2)| {
                let outs = f(c1, c2);
                let excess = outs.iter().map(|c| c.trace_norm() - 1.0).fold(0.0, f64::max);
                check(excess <= DEFAULT_FREE_TOL, excess, || {
                    json!({ "c1": matrix_json(c1.matrix().as_matrix()), "c2": matrix_json(c2.matrix().as_matrix()) })
                })
            })
            .collect()
    };
    vec![
        collect("tensor_product_closure", run(&|a, b| vec![a.tensor(b)])),
        collect(
            "partial_trace_closure",
            run(&|a, b| {
                let t = a.tensor(b);
                vec![t.reduce(2, 2, Keep::First).unwrap(), t.reduce(2, 2, Keep::Second).unwrap()]
            }),
        ),
        collect("permutation_closure", run(&|a, b| vec![a.tensor(b).swap_parties(2, 2).unwrap()])),
        collect(
            "boundedness_and_closure",
            run(&|a, b| (1..=8).map(|n| mix(a, b, 1.0 / n as f64).unwrap()).chain([a.clone()]).collect()),
        ),
    ]
}

fn prop_free_operations(seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 2);
    let cases: Vec<_> = (0..100).map(|_| (random_free_choi(&mut rng), random_free_choi(&mut rng).1)).collect();
    let checks = cases
        .par_iter()
        .map(|((c, s1), s2)| {
            let after = c.apply_channel(s2).unwrap();
            let composed = ChoiMatrix::from_superop(&(s2 * s1), 2).unwrap();
            let excess = (after.trace_norm() - 1.0).max(composed.trace_norm() - 1.0);
            check(excess <= DEFAULT_FREE_TOL, excess, || json!({ "choi": matrix_json(c.matrix().as_matrix()) }))
        })
        .collect();
    collect("free_operation_closure", checks)
}

fn prop_mixtures(seed: u64, cfg: &OptimizerConfig) -> PropertyResult {
    let mut rng = rng_for(seed, 3);
    let cone = FreeCone::new(2, false);
    let cases: Vec<_> = (0..100)
        .map(|_| {
            let a1 = random_markovian_generator(&mut rng).matrix().clone();
            let a2 = random_markovian_generator(&mut rng).matrix().clone();
            let (c1, c2) = (random_free_choi(&mut rng).0, random_free_choi(&mut rng).0);
            (a1, a2, c1, c2, rng.random_range(0.0..1.0))
        })
        .collect();
    let checks = cases
        .par_iter()
        .map(|(a1, a2, c1, c2, p)| {
            let k1 = ChoiDerivative::new(2, cone.derivative(a1)).unwrap();
            let k2 = ChoiDerivative::new(2, cone.derivative(a2)).unwrap();
            let k = k1.mix(&k2, *p).unwrap();
            let g = rhp_g(&k).unwrap();
            let (d, _) = dt_measure(&k, cfg).unwrap();
            let c_excess = mix(c1, c2, *p).unwrap().trace_norm() - 1.0;
            let worst = g.max(d).max(c_excess);
            check(worst <= DEFAULT_FREE_TOL, worst, || {
                json!({ "a1": matrix_json(a1.as_matrix()), "a2": matrix_json(a2.as_matrix()), "p": p })
            })
        })
        .collect();
    collect("mixture_closure", checks)
}

fn prop_convexity(seed: u64, cfg: &OptimizerConfig) -> PropertyResult {
    let mut rng = rng_for(seed, 4);
    let cases: Vec<_> = (0..100).map(|_| (random_derivative(&mut rng), random_derivative(&mut rng))).collect();
    let checks = cases
        .par_iter()
        .flat_map(|((k1, a1), (k2, a2))| {
            let d1 = dt_measure(k1, cfg).unwrap().0;
            let d2 = dt_measure(k2, cfg).unwrap().0;
            [0.25, 0.5, 0.75]
                .into_iter()
                .map(|p| {
                    let dm = dt_measure(&k1.mix(k2, p).unwrap(), cfg).unwrap().0;
                    let violation = dm - (p * d1 + (1.0 - p) * d2);
                    check(violation <= CONVEXITY_TOL, violation.max(0.0), || {
                        json!({ "a1": matrix_json(a1.as_matrix()), "a2": matrix_json(a2.as_matrix()), "p": p,
                                "d_mix": dm, "d1": d1, "d2": d2 })
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    collect("dt_convexity", checks)
}

fn prop_monotonicity(seed: u64, cfg: &OptimizerConfig) -> PropertyResult {
    let mut rng = rng_for(seed, 5);
    let cases: Vec<_> = (0..100)
        .map(|_| (random_derivative(&mut rng), random_markovian_generator(&mut rng), rng.random_range(0.05..1.0)))
        .collect();
    let checks = cases
        .par_iter()
        .map(|((k, a), g, delta)| {
            let out = monotonicity_check(k, g, 0.0, *delta, cfg).unwrap();
            let growth = out.after - out.before;
            check(out.holds, growth.max(0.0), || {
                json!({ "a": matrix_json(a.as_matrix()), "markov_kossakowski": matrix_json(g.matrix().as_matrix()),
                        "delta": delta, "before": out.before, "after": out.after })
            })
        })
        .collect();
    let mut r = collect("dt_monotonicity", checks);
    r.passed &= r.worst <= MONOTONICITY_TOL;
    r
}

fn prop_robustness(seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 6);
    let cases: Vec<_> = (0..100).map(|_| (random_derivative(&mut rng).0, rng.random_range(0.01..0.3))).collect();
    let checks = cases
        .par_iter()
        .map(|(k, eps)| {
            let c = k.first_order_choi(*eps);
            let gap = (robustness_incremental(&c) - negative_eigenvalue_mass(&c)).abs();
            check(gap <= ROBUSTNESS_TOL, gap, || json!({ "choi": matrix_json(c.matrix().as_matrix()) }))
        })
        .collect();
    collect("robustness_negative_eigenvalues", checks)
}

fn propositions(seed: u64, cfg: &OptimizerConfig) -> Vec<PropertyResult> {
    let mut out = prop_tensor_closure(seed);
    out.push(prop_free_operations(seed));
    out.push(prop_mixtures(seed, cfg));
    out.push(prop_convexity(seed, cfg));
    out.push(prop_monotonicity(seed, cfg));
    out.push(prop_robustness(seed));
    out
}

/// Grid used for the catalog part of the theorem suite.
pub fn theorem_grid() -> Vec<f64> {
    (0..=100).map(|k| 0.05 * k as f64).collect()
}

fn theorem1(seed: u64, cfg: &OptimizerConfig) -> Vec<PropertyResult> {
    let mut rng = rng_for(seed, 7);
    let mut cases: Vec<(String, f64, ChoiDerivative)> = Vec::new();
    let mut tight: Vec<(f64, ChoiDerivative)> = Vec::new();
    for model in catalog() {
        for t in theorem_grid() {
            let k = choi_derivative(&model.generator, t).expect("catalog generators are trace preserving");
            if model.name == "dephasing-sin" {
                tight.push((t, k.clone()));
            }
            cases.push((model.name.clone(), t, k));
        }
    }
    for n in 0..200 {
        cases.push((format!("random-{n}"), 0.0, random_derivative(&mut rng).0));
    }
    let solved: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|(_, _, k)| (rhp_g(k).unwrap(), dt_measure(k, cfg).unwrap().0))
        .collect();
    let bound = cases
        .iter()
        .zip(&solved)
        .map(|((name, t, k), &(g, d))| {
            check(d >= g - THEOREM_TOL, (g - d).max(0.0), || {
                json!({ "instance": name, "t": t, "g": g, "d_t": d, "k": matrix_json(k.matrix().as_matrix()) })
            })
        })
        .collect();
    let faithful = cases
        .iter()
        .zip(&solved)
        .map(|((name, t, _), &(g, d))| {
            let ok = (g > 1e-12) || d <= 1e-9;
            check(ok, if g <= 1e-12 { d } else { 0.0 }, || json!({ "instance": name, "t": t, "g": g, "d_t": d }))
        })
        .collect();
    let tightness = tight
        .par_iter()
        .map(|(t, k)| {
            let g = rhp_g(k).unwrap();
            let d = dt_measure(k, cfg).unwrap().0;
            check((d - g).abs() <= TIGHTNESS_TOL, (d - g).abs(), || json!({ "t": t, "g": g, "d_t": d }))
        })
        .collect();
    vec![collect("dt_bounds_rhp", bound), collect("faithfulness", faithful), collect("dephasing_tightness", tightness)]
}

fn optimizer_oracle(seed: u64, cfg: &OptimizerConfig) -> Vec<PropertyResult> {
    let mut rng = rng_for(seed, 8);
    let cases: Vec<_> = (0..50).map(|_| random_derivative(&mut rng)).collect();
    let ocfg = OracleConfig::default();
    let checks = cases
        .par_iter()
        .enumerate()
        .map(|(n, (k, a))| {
            let (d, _) = dt_measure(k, cfg).unwrap();
            let oracle = brute_force_dt(&DtProblem::new(k, cfg.allow_hamiltonian), &ocfg, seed ^ n as u64);
            let gap = (d - oracle).abs();
            check(gap <= ORACLE_TOL, gap, || {
                json!({ "a": matrix_json(a.as_matrix()), "d_t": d, "oracle": oracle,
                        "k": herm_coords(k.matrix().as_matrix()) })
            })
        })
        .collect();
    vec![collect("optimizer_matches_oracle", checks)]
}

/// Run one suite (or all of them).
pub fn run(suite: Suite, seed: u64, cfg: &OptimizerConfig) -> SuiteReport {
    let properties = match suite {
        Suite::Propositions => propositions(seed, cfg),
        Suite::Theorem1 => theorem1(seed, cfg),
        Suite::OptimizerOracle => optimizer_oracle(seed, cfg),
        Suite::All => {
            let mut all = propositions(seed, cfg);
            all.extend(theorem1(seed, cfg));
            all.extend(optimizer_oracle(seed, cfg));
            all
        }
    };
    SuiteReport { suite, seed, passed: properties.iter().all(|p| p.passed), properties }
}
