//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nmlab::cli::{time_grid, trajectory};
use nmlab::dynamics::propagate;
use nmlab::linops::max_abs;
use nmlab::measures::{rhp_g_finite, MeasurePoint, Mode, OptimizerConfig};
use nmlab::models::{by_name, ModelSpec};
use nmlab::verify::{self, Suite};

struct Outcome {
    passed: bool,
    detail: String,
}

fn model(name: &str) -> ModelSpec {
    by_name(name).expect("catalog model")
}

fn run_traj(name: &str, grid: &[f64], mode: Mode) -> Vec<MeasurePoint> {
    trajectory(&model(name), grid, 1e-4, mode, &OptimizerConfig::default()).expect("trajectory").0
}

/// Finite-ε rates at ε ∈ {1e-3, 1e-4, 1e-5} must approach the exact value
/// linearly: each decade shrinks the error by 5–20×.
fn linear_convergence(name: &str, t: f64, exact: f64) -> (bool, String) {
    let m = model(name);
    let errs: Vec<f64> = [1e-3, 1e-4, 1e-5].iter().map(|&e| (rhp_g_finite(&m.generator, t, e).unwrap() - exact).abs()).collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ok = ratios.iter().all(|r| (5.0..20.0).contains(r));
    (ok, format!("finite-eps errors at t={t:.3}: {:.2e} {:.2e} {:.2e}", errs[0], errs[1], errs[2]))
}

fn markovian_control() -> Outcome {
    let grid = time_grid(5.0, 0.01).unwrap();
    let mut worst = 0.0_f64;
    for name in ["dephasing-const", "amplitude-damping-const"] {
        for p in run_traj(name, &grid, Mode::Both) {
            worst = worst.max(p.g).max(p.d_t).max(p.r_inc_rate).max(p.n_t).max(p.r_cum);
        }
    }
    Outcome { passed: worst <= 1e-9, detail: format!("max measure {worst:.2e} (limit 1e-9)") }
}

fn dephasing_closed_form() -> Outcome {
    let grid: Vec<f64> = (0..1000).map(|k| 2.0 * PI * k as f64 / 999.0).collect();
    let pts = run_traj("dephasing-sin", &grid, Mode::ExactLimit);
    let g_err = pts.iter().map(|p| (p.g - 2.0 * (-p.t.sin()).max(0.0)).abs()).fold(0.0, f64::max);
    let last = pts.last().unwrap();
    let (c1, d1) = linear_convergence("dephasing-sin", 1.5 * PI, 2.0);
    let (c2, d2) = linear_convergence("dephasing-sin", 4.0, -2.0 * 4f64.sin());
    let passed = g_err <= 1e-6
        && (last.n_t - 4.0).abs() <= 2e-3
        && (last.r_cum - 2.0).abs() <= 1e-3
        && (last.t_norm - 0.8).abs() <= 4e-4
        && c1
        && c2;
    Outcome {
        passed,
        detail: format!(
            "max |g - 2max(0,-sin t)| {g_err:.2e}; N_T(2pi) {:.6}; R_cum {:.6}; T_norm {:.6}; {d1}; {d2}",
            last.n_t, last.r_cum, last.t_norm
        ),
    }
}

fn eternal_closed_form() -> Outcome {
    let grid = time_grid(3.0, 0.01).unwrap();
    let pts = run_traj("eternal-nm", &grid, Mode::ExactLimit);
    let g_err = pts.iter().map(|p| (p.g - p.t.tanh()).abs()).fold(0.0, f64::max);
    let n_err = pts.iter().map(|p| (p.n_t - p.t.cosh().ln()).abs()).fold(0.0, f64::max);
    let (c, d) = linear_convergence("eternal-nm", 1.0, 1f64.tanh());
    Outcome {
        passed: g_err <= 1e-6 && n_err <= 1e-3 && c,
        detail: format!("max |g - tanh t| {g_err:.2e}; max |N_T - ln cosh t| {n_err:.2e}; {d}"),
    }
}

fn suite_outcome(suite: Suite, seeds: &[u64], budget: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let mut passed = true;
    let mut parts = Vec::new();
    for &seed in seeds {
        let report = verify::run(suite, seed, &OptimizerConfig::default());
        passed &= report.passed;
        for p in &report.properties {
            if seeds.len() == 1 || !p.passed {
                parts.push(format!("{} {}/{} worst {:.2e}", p.name, p.checked - p.failures, p.checked, p.worst));
            }
        }
    }
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        passed &= elapsed < b;
    }
    if seeds.len() > 1 && passed {
        parts.push(format!("zero counterexamples over seeds {seeds:?}"));
    }
    Outcome { passed, detail: format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()) }
}

fn robustness_relation() -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, t_max) in [("dephasing-sin", 2.0 * PI), ("eternal-nm", 3.0)] {
        let grid = time_grid(t_max, 0.005).unwrap();
        let finite = run_traj(name, &grid, Mode::FiniteEps);
        let exact = run_traj(name, &grid, Mode::ExactLimit);
        let integral: f64 = finite.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].r_inc_rate + w[1].r_inc_rate)).sum();
        let half_n = 0.5 * exact.last().unwrap().n_t;
        let rel = (integral - half_n).abs() / half_n;
        passed &= rel <= 0.02;
        parts.push(format!("{name}: {integral:.6} vs {half_n:.6} (rel {rel:.2e})"));
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn propagator_order() -> Outcome {
    let m = model("dephasing-sin");
    let (t1, t2, h) = (0.0, 5.0, 0.1);
    let reference = propagate(&m.generator, t1, t2, h / 16.0).unwrap().superop;
    let err = |step: f64| max_abs(&(propagate(&m.generator, t1, t2, step).unwrap().superop - &reference));
    let (e1, e2) = (err(h), err(h / 2.0));
    let ratio = e1 / e2;
    Outcome { passed: ratio >= 3.5, detail: format!("error {e1:.2e} -> {e2:.2e}, ratio {ratio:.2}") }
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("markovian control", Box::new(markovian_control)),
        ("dephasing closed form", Box::new(dephasing_closed_form)),
        ("eternal non-Markovian closed form", Box::new(eternal_closed_form)),
        ("d_T bounded below by g", Box::new(|| suite_outcome(Suite::Theorem1, &[7], Some(Duration::from_secs(120))))),
        ("optimizer agrees with brute-force oracle", Box::new(|| suite_outcome(Suite::OptimizerOracle, &[7], None))),
        ("closure, convexity, monotonicity and robustness properties", Box::new(|| suite_outcome(Suite::Propositions, &[1, 2, 3, 4, 5], None))),
        ("finite-eps robustness integrates to N_T/2", Box::new(robustness_relation)),
        ("propagator second-order convergence", Box::new(propagator_order)),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let verdict = if out.passed { "PASS" } else { "FAIL" };
        println!("criterion {} [{verdict}] {name} ({:.1}s): {}", k + 1, start.elapsed().as_secs_f64(), out.detail);
        failed += usize::from(!out.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
