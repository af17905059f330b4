//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fpsearch::average::{
    appendix_properties, avg_deviation, avg_deviation_equal, coefficients, minimize_avg_deviation,
    partial_phi, partial_theta, phase_grid, ShiftFactors,
};
use fpsearch::check::random_range;
use fpsearch::deviation::{
    deviation_difference, deviation_equal, deviation_trig, result1_predicate, result2_condition,
    zero_deviation_phase,
};
use fpsearch::simulator::{prescribed_overlap_unitary, random_unitary, recursion_trace};
use fpsearch::{Epsilon, EpsilonRange, PhaseShifts};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn range(beta: f64, alpha: f64) -> EpsilonRange {
    EpsilonRange::new(beta, alpha).unwrap()
}

fn shifts(theta: f64, phi: f64) -> PhaseShifts {
    PhaseShifts::new(theta, phi).unwrap()
}

/// `ε |e^{iφ} + (1 − e^{iφ})(1 − e^{iθ})(1 − ε)|²`, written out independently.
fn deviation_oracle(theta: f64, phi: f64, eps: f64) -> f64 {
    let ep = Complex64::from_polar(1.0, phi);
    let et = Complex64::from_polar(1.0, theta);
    let one = Complex64::new(1.0, 0.0);
    eps * (ep + (one - ep) * (one - et) * (1.0 - eps)).norm_sqr()
}

/// Dense `U Rs U† Rt U |s⟩` with explicit diagonal phase matrices.
fn dense_step(u: &DMatrix<Complex64>, s: usize, t: usize, theta: f64, phi: f64) -> DVector<Complex64> {
    let n = u.nrows();
    let mut rt = DMatrix::<Complex64>::identity(n, n);
    rt[(t, t)] = Complex64::from_polar(1.0, theta);
    let mut rs = DMatrix::<Complex64>::identity(n, n);
    rs[(s, s)] = Complex64::from_polar(1.0, phi);
    let start = DVector::from_fn(n, |i, _| Complex64::new(if i == s { 1.0 } else { 0.0 }, 0.0));
    u * rs * u.adjoint() * rt * u * start
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn c1_grover_point() -> Outcome {
    let grover = PhaseShifts::grover();
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let e = k as f64 / 999.0;
        let d = deviation_trig(&grover, Epsilon::new(e).unwrap()).value();
        worst = worst.max((d - e * e * e).abs());
    }
    outcome(worst <= 1e-14, format!("worst={worst:.3e} tol=1e-14 points=1000"))
}

fn c2_full_range() -> Outcome {
    let r = range(0.0, 1.0);
    let c = coefficients(r);
    let coeff = (c.a + 4.0 / 3.0).abs().max((c.b - 4.0 / 3.0).abs());
    let mut curve = 0.0f64;
    for k in 0..1000 {
        let t = PI * k as f64 / 999.0;
        let v = avg_deviation_equal(t, r).unwrap();
        curve = curve.max((v - (t.cos().powi(2) / 3.0 + 1.0 / 6.0)).abs());
    }
    let m = minimize_avg_deviation(r);
    let min = (m.theta_star - FRAC_PI_2).abs().max((m.min_value - 1.0 / 6.0).abs());
    outcome(
        coeff <= 1e-15 && curve <= 1e-14 && min <= 1e-12,
        format!("coeff={coeff:.3e} curve={curve:.3e} minimizer={min:.3e}"),
    )
}

fn c3_upper_range() -> Outcome {
    let r = range(0.75, 1.0);
    let c = coefficients(r);
    let coeff = (c.a + 5.0 / 24.0).abs().max((c.b - 13.0 / 192.0).abs());
    let ratio = (1.0 + c.a / c.b + 27.0 / 13.0).abs();
    let m = minimize_avg_deviation(r);
    let min = (m.theta_star - PI).abs().max((m.min_value - 5.0 / 16.0).abs());
    outcome(
        coeff <= 1e-15 && ratio <= 1e-14 && min <= 1e-12 && m.is_equal_shift,
        format!("coeff={coeff:.3e} ratio={ratio:.3e} minimizer={min:.3e} label={}", m.case_label.as_str()),
    )
}

fn c4_oracle_equivalence() -> Outcome {
    const DIMS: [usize; 5] = [2, 4, 8, 16, 64];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases: Vec<(usize, u64, f64, f64)> = (0..1000)
        .map(|i| (DIMS[i % DIMS.len()], rng.random(), rng.random_range(0.0..=PI), rng.random_range(0.0..=PI)))
        .collect();
    let residuals: Vec<f64> = cases
        .par_iter()
        .map(|&(n, seed, theta, phi)| {
            let u = random_unitary(n, seed).unwrap();
            let (s, t) = (0, n - 1);
            let m = u.entries();
            let psi = dense_step(m, s, t, theta, phi);
            let measured: f64 = (0..n).filter(|&i| i != t).map(|i| psi[i].norm_sqr()).sum();
            let eps = 1.0 - m[(t, s)].norm_sqr();
            let closed = deviation_trig(&shifts(theta, phi), Epsilon::new(eps.clamp(0.0, 1.0)).unwrap()).value();
            (measured - closed).abs()
        })
        .collect();
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    outcome(worst <= 1e-10, format!("worst={worst:.3e} tol=1e-10 cases=1000"))
}

fn c5_integration_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases: Vec<(f64, f64, EpsilonRange)> = (0..1000)
        .map(|_| (rng.random_range(0.0..=PI), rng.random_range(0.0..=PI), random_range(&mut rng)))
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(t, p, r)| {
            let numeric = simpson(|e| deviation_oracle(t, p, e), r.beta(), r.alpha(), 10_000) / r.width();
            (avg_deviation(&shifts(t, p), r) - numeric).abs()
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-8, format!("worst={worst:.3e} tol=1e-8 cases=1000"))
}

fn c6_derivatives() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (t, p) = (rng.random_range(H..=PI - H), rng.random_range(H..=PI - H));
        let r = random_range(&mut rng);
        let c = coefficients(r);
        let f = |x: f64, y: f64| c.evaluate(&ShiftFactors::from_angles(x, y));
        let fd_t = (f(t + H, p) - f(t - H, p)) / (2.0 * H);
        let fd_p = (f(t, p + H) - f(t, p - H)) / (2.0 * H);
        let s = shifts(t, p);
        worst = worst
            .max((partial_theta(&s, r) - fd_t).abs())
            .max((partial_phi(&s, r) - fd_p).abs());
    }
    outcome(worst <= 1e-6, format!("worst={worst:.3e} tol=1e-6 cases=1000"))
}

fn c7_appendix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ranges: Vec<EpsilonRange> = (0..10_000).map(|_| random_range(&mut rng)).collect();
    let grid = phase_grid(100);
    let reports: Vec<_> = ranges.par_iter().map(|&r| appendix_properties(r, &grid)).collect();
    let failed = reports.iter().filter(|r| !r.all_passed()).count();
    let large = reports.iter().filter(|r| r.range.alpha() + r.range.beta() >= 1.0).count();
    let worst_identity = reports
        .iter()
        .map(|r| r.get("sum_factorization").unwrap().value)
        .fold(0.0, f64::max);
    let worst_margin = reports
        .iter()
        .filter_map(|r| r.get("avg_bound").filter(|c| c.applicable).map(|c| c.value))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        failed == 0 && large > 0,
        format!(
            "ranges=10000 bound_cases={large} failed={failed} identity={worst_identity:.3e} max_margin={worst_margin:.3e}"
        ),
    )
}

fn c8_result_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut applicable, mut violations) = (0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let (t, p, e) = (rng.random_range(0.0..=PI), rng.random_range(0.0..=PI), rng.random::<f64>());
        let s = shifts(t, p);
        let eps = Epsilon::new(e).unwrap();
        if result1_predicate(&s, eps) || result2_condition(&s) {
            applicable += 1;
            let d = deviation_difference(&s, eps);
            worst = worst.max(d);
            if d >= 1e-15 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && applicable > 0,
        format!("samples=100000 applicable={applicable} violations={violations} max_difference={worst:.3e}"),
    )
}

fn c9_recursion() -> Outcome {
    let u = prescribed_overlap_unitary(16, 0.1f64.sqrt(), 9).unwrap();
    let trace = recursion_trace(&u, 0, 15, &PhaseShifts::grover(), 3).unwrap();
    let expected = [0.729, 0.729f64.powi(3), 0.729f64.powi(9)];
    let grover = (1..=3)
        .map(|k| (trace.levels[k].measured - expected[k - 1]).abs())
        .fold(0.0, f64::max);

    let mut unequal = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for &n in &[2usize, 4, 8, 16, 64] {
        for _ in 0..4 {
            let (t, p) = (rng.random_range(0.0..=PI), rng.random_range(0.0..=PI));
            let a: f64 = rng.random_range(0.05..0.95);
            let u = prescribed_overlap_unitary(n, a, rng.random()).unwrap();
            let tr = recursion_trace(&u, 0, n - 1, &shifts(t, p), 3).unwrap();
            let mut eps = 1.0 - a * a;
            for level in &tr.levels {
                unequal = unequal.max((level.measured - eps).abs());
                eps = deviation_oracle(t, p, eps);
            }
        }
    }
    outcome(
        grover <= 1e-9 && unequal <= 1e-9,
        format!("grover={grover:.3e} unequal={unequal:.3e} tol=1e-9"),
    )
}

fn c10_zero_deviation() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=100 {
        let e = Epsilon::new(0.75 * k as f64 / 100.0).unwrap();
        let theta = zero_deviation_phase(e).unwrap();
        worst = worst.max(deviation_equal(theta, e).unwrap().value());
    }
    let rejects = [0.75 + 1e-12, 0.8, 0.9, 1.0]
        .iter()
        .all(|&e| zero_deviation_phase(Epsilon::new(e).unwrap()).is_err());
    outcome(
        worst <= 1e-24 && rejects,
        format!("worst={worst:.3e} tol=1e-24 rejects_above_three_quarters={rejects}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("grover_point", c1_grover_point, Duration::from_millis(1)),
        ("full_range_example", c2_full_range, Duration::from_millis(10)),
        ("upper_range_example", c3_upper_range, Duration::from_millis(10)),
        ("oracle_equivalence", c4_oracle_equivalence, Duration::from_secs(5)),
        ("integration_oracle", c5_integration_oracle, Duration::from_secs(2)),
        ("derivative_check", c6_derivatives, Duration::from_secs(1)),
        ("coefficient_bounds", c7_appendix, Duration::from_secs(30)),
        ("result_soundness", c8_result_soundness, Duration::from_secs(1)),
        ("recursion", c9_recursion, Duration::from_secs(5)),
        ("zero_deviation", c10_zero_deviation, Duration::from_millis(10)),
    ];

    // Warm the thread pool so the first parallel criterion is not charged for it.
    let _ = (0..64).into_par_iter().map(|i| i as f64).sum::<f64>();

    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = out.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "{} {:>2} {:<20} {} time={:.3?} budget={:?}{}",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            name,
            out.detail,
            elapsed,
            budget,
            if in_time { "" } else { " (over budget)" }
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
