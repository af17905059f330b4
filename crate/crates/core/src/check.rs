//! Randomized property battery behind `fpsearch verify`.
//!
//! The closed-form kernels are taken through [`Formulas`] so a deliberately
//! broken kernel can be injected and shown to be caught.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::average::{
    appendix_properties, grid_extremes, minimize_avg_deviation, numeric_avg_deviation, phase_grid,
    AvgCoefficients, ShiftFactors,
};
use crate::deviation::{forms, result1_predicate, result2_condition, zero_deviation_phase};
use crate::domain::{Epsilon, EpsilonRange, PhaseShifts};
use crate::simulator::{
    fixed_point_step, measure_deviation, prescribed_overlap_unitary, random_unitary, recursion_trace,
};

pub type Kernel3 = fn(f64, f64, f64) -> f64;
pub type Kernel2 = fn(f64, f64) -> f64;

/// The closed-form kernels under test.
#[derive(Clone, Copy)]
pub struct Formulas {
    pub complex: Kernel3,
    pub trig: Kernel3,
    pub sum_of_squares: Kernel3,
    pub equal: Kernel2,
    pub difference: Kernel3,
}

impl Default for Formulas {
    fn default() -> Self {
        Self {
            complex: forms::complex,
            trig: forms::trig,
            sum_of_squares: forms::sum_of_squares,
            equal: forms::equal,
            difference: forms::difference,
        }
    }
}

pub mod tol {
    pub const FORMS: f64 = 1e-12;
    pub const GROVER: f64 = 1e-14;
    pub const ZERO_DEVIATION: f64 = 1e-24;
    pub const RESULT_SLACK: f64 = 1e-15;
    pub const ORACLE: f64 = 1e-10;
    pub const SIMPSON: f64 = 1e-8;
    pub const DERIVATIVE: f64 = 1e-6;
    pub const FD_STEP: f64 = 1e-6;
    pub const EQUAL_FORMS: f64 = 1e-12;
    pub const EXTREMES: f64 = 1e-14;
    pub const GLOBAL_MIN: f64 = 1e-9;
    pub const RECURSION: f64 = 1e-9;
}

pub const ORACLE_DIMS: [usize; 5] = [2, 4, 8, 16, 64];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub cases: usize,
    pub passed: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
}

impl PropertyResult {
    pub fn ok(&self) -> bool {
        self.cases > 0 && self.passed == self.cases
    }
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<26} {:>6}/{:<6} worst={:.3e} tol={:.0e}",
            if self.ok() { "PASS" } else { "FAIL" },
            self.name,
            self.passed,
            self.cases,
            self.worst_residual,
            self.tolerance
        )
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    passed: usize,
    worst: f64,
}

impl Tally {
    /// Records a residual that must stay at or below `tol`.
    fn residual(&mut self, r: f64, tol: f64) {
        self.cases += 1;
        if r <= tol {
            self.passed += 1;
        }
        if r.is_nan() || r > self.worst {
            self.worst = if r.is_nan() { f64::INFINITY } else { r };
        }
    }

    fn finish(self, name: &'static str, tolerance: f64) -> PropertyResult {
        PropertyResult {
            name,
            cases: self.cases,
            passed: self.passed,
            worst_residual: self.worst,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub samples: usize,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

impl BatteryReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::ok)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

pub fn random_range(rng: &mut impl Rng) -> EpsilonRange {
    loop {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        let (beta, alpha) = if x < y { (x, y) } else { (y, x) };
        if let Ok(r) = EpsilonRange::new(beta, alpha) {
            return r;
        }
    }
}

fn angle(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.0..=PI)
}

/// Runs every property with `samples` cheap cases; the expensive oracles
/// (statevector, integration, grid search) get proportionally fewer.
pub fn run_battery(samples: usize, seed: u64, f: &Formulas) -> BatteryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heavy = (samples / 10).max(1);
    let grid_cases = (samples / 1000).clamp(1, 20);
    let mut props = Vec::new();

    let mut forms_t = Tally::default();
    let mut sym = Tally::default();
    let mut unit = Tally::default();
    let mut diff = Tally::default();
    let mut r1 = Tally::default();
    let mut r2 = Tally::default();
    for _ in 0..samples {
        let (t, p, e) = (angle(&mut rng), angle(&mut rng), rng.random::<f64>());
        let (c, tr, ss) = ((f.complex)(t, p, e), (f.trig)(t, p, e), (f.sum_of_squares)(t, p, e));
        forms_t.residual((c - tr).abs().max((c - ss).abs()).max((tr - ss).abs()), tol::FORMS);
        sym.residual(((f.trig)(t, p, e) - (f.trig)(p, t, e)).abs(), 0.0);
        unit.residual((-tr).max(tr - 1.0).max(0.0), tol::RESULT_SLACK);
        diff.residual(((f.difference)(t, p, e) - (tr - (f.equal)(t, e))).abs(), tol::FORMS);

        let shifts = PhaseShifts::new(t, p).expect("sampled in range");
        let eps = Epsilon::new(e).expect("sampled in range");
        if result1_predicate(&shifts, eps) {
            r1.residual((f.difference)(t, p, e).max(0.0), tol::RESULT_SLACK);
        }
        if result2_condition(&shifts) && e > 0.0 && e < 1.0 {
            r2.residual((f.difference)(t, p, e).max(0.0), tol::RESULT_SLACK);
        }
    }
    props.push(forms_t.finish("form_equivalence", tol::FORMS));
    props.push(sym.finish("swap_symmetry", 0.0));
    props.push(unit.finish("unit_range", tol::RESULT_SLACK));
    props.push(diff.finish("difference_identity", tol::FORMS));
    props.push(r1.finish("result1_soundness", tol::RESULT_SLACK));
    props.push(r2.finish("result2_soundness", tol::RESULT_SLACK));

    let mut grover = Tally::default();
    for i in 0..samples {
        let e = i as f64 / (samples.max(2) - 1) as f64;
        grover.residual(((f.trig)(FRAC_PI_3, FRAC_PI_3, e) - e * e * e).abs(), tol::GROVER);
    }
    props.push(grover.finish("grover_point", tol::GROVER));

    let mut zero = Tally::default();
    for _ in 0..samples {
        let e = 0.75 * (1.0 - rng.random::<f64>());
        let eps = Epsilon::new(e).expect("in range");
        let theta = zero_deviation_phase(eps).expect("eps <= 3/4");
        zero.residual((f.equal)(theta, e), tol::ZERO_DEVIATION);
    }
    props.push(zero.finish("zero_deviation", tol::ZERO_DEVIATION));

    let oracle_cases: Vec<(usize, u64, f64, f64)> = (0..heavy)
        .map(|i| (ORACLE_DIMS[i % ORACLE_DIMS.len()], rng.random(), angle(&mut rng), angle(&mut rng)))
        .collect();
    let residuals: Vec<f64> = oracle_cases
        .par_iter()
        .map(|&(dim, s, t, p)| oracle_residual(dim, s, t, p, f.trig))
        .collect();
    let mut oracle = Tally::default();
    residuals.into_iter().for_each(|r| oracle.residual(r, tol::ORACLE));
    props.push(oracle.finish("oracle_identity", tol::ORACLE));

    let mut simpson = Tally::default();
    let mut deriv = Tally::default();
    let mut eqforms = Tally::default();
    let mut extremes = Tally::default();
    let mut appendix = Tally::default();
    let mut location = Tally::default();
    let sample_grid = phase_grid(20);
    for i in 0..samples {
        let range = random_range(&mut rng);
        let c = AvgCoefficients::new(range);
        let (t, p) = (angle(&mut rng), angle(&mut rng));
        let shifts = PhaseShifts::new(t, p).expect("in range");

        if i < heavy {
            let numeric = numeric_avg_deviation(&shifts, range, 10_000).expect("even count");
            simpson.residual((numeric - c.avg_deviation(&shifts)).abs(), tol::SIMPSON);
        }

        let h = tol::FD_STEP;
        let (ti, pi) = (t.clamp(h, PI - h), p.clamp(h, PI - h));
        let at = |x: f64, y: f64| c.evaluate(&ShiftFactors::from_angles(x, y));
        let inner = PhaseShifts::new(ti, pi).expect("in range");
        let fd_t = (at(ti + h, pi) - at(ti - h, pi)) / (2.0 * h);
        let fd_p = (at(ti, pi + h) - at(ti, pi - h)) / (2.0 * h);
        deriv.residual(
            (c.partial_theta(&inner) - fd_t).abs().max((c.partial_phi(&inner) - fd_p).abs()),
            tol::DERIVATIVE,
        );

        let q = crate::average::avg_deviation_equal(t, range).expect("in range");
        let sq = crate::average::avg_deviation_equal_completed_square(t, range).expect("in range");
        eqforms.residual((q - sq).abs(), tol::EQUAL_FORMS);

        let worst = [(0.0, 0.0), (0.0, PI), (PI, 0.0)]
            .iter()
            .map(|&(x, y)| (at(x, y) - range.midpoint()).abs())
            .fold(0.0, f64::max);
        extremes.residual(worst, tol::EXTREMES);

        let grid: &[ShiftFactors] = if i < heavy { &sample_grid } else { &[] };
        let rep = appendix_properties(range, grid);
        appendix.residual(if rep.all_passed() { 0.0 } else { 1.0 }, 0.0);

        let m = minimize_avg_deviation(range);
        let s = range.alpha() + range.beta();
        let r = c.ratio();
        let miss = if s < 1.0 {
            (FRAC_PI_3 - m.theta_star).max(m.theta_star - FRAC_PI_2).max(0.0)
        } else if r >= -2.0 {
            (FRAC_PI_2 - m.theta_star).max(m.theta_star - PI).max(0.0)
        } else {
            (m.theta_star - PI).abs()
        };
        location.residual(miss, tol::GLOBAL_MIN);
    }
    props.push(simpson.finish("simpson_oracle", tol::SIMPSON));
    props.push(deriv.finish("derivative_check", tol::DERIVATIVE));
    props.push(eqforms.finish("equal_shift_forms", tol::EQUAL_FORMS));
    props.push(extremes.finish("extreme_points", tol::EXTREMES));
    props.push(appendix.finish("appendix_battery", 0.0));
    props.push(location.finish("minimizer_location", tol::GLOBAL_MIN));

    let grid = phase_grid(201);
    let mut global = Tally::default();
    for _ in 0..grid_cases {
        let range = random_range(&mut rng);
        let m = minimize_avg_deviation(range);
        let (min, _) = grid_extremes(&AvgCoefficients::new(range), &grid);
        global.residual((m.min_value - min.value).max(0.0), tol::GLOBAL_MIN);
    }
    props.push(global.finish("global_minimum", tol::GLOBAL_MIN));

    let mut rec = Tally::default();
    for i in 0..grid_cases {
        let e: f64 = rng.random_range(0.05..0.95);
        let s = PhaseShifts::new(angle(&mut rng), angle(&mut rng)).expect("in range");
        let dim = ORACLE_DIMS[i % ORACLE_DIMS.len()].min(16);
        let u = prescribed_overlap_unitary(dim, (1.0 - e).sqrt(), rng.random()).expect("valid overlap");
        let trace = recursion_trace(&u, 0, dim - 1, &s, 3).expect("within caps");
        rec.residual(trace.max_discrepancy(), tol::RECURSION);
    }
    props.push(rec.finish("recursion_consistency", tol::RECURSION));

    BatteryReport {
        samples,
        seed,
        properties: props,
    }
}

/// `|measured - closed form|` for one random Haar unitary.
pub fn oracle_residual(dim: usize, seed: u64, theta: f64, phi: f64, closed: Kernel3) -> f64 {
    let u = random_unitary(dim, seed).expect("dim >= 2");
    let (s, t) = (0, dim - 1);
    let shifts = PhaseShifts::new(theta, phi).expect("in range");
    let psi = fixed_point_step(&u, s, t, &shifts).expect("valid indices");
    (measure_deviation(&psi, t) - closed(theta, phi, u.epsilon(s, t))).abs()
}
