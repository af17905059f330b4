//! Average deviation over a uniform epsilon range `(beta, alpha)`.
//!
//! Integrating the single-step deviation over epsilon leaves
//!
//! ```text
//! D̄(θ, φ) = [ (α² − β²)/2 + A·sin(θ/2)sin(φ/2)cos((θ−φ)/2) + B·sin²(θ/2)sin²(φ/2) ] / (α − β)
//! ```
//!
//! with range-only coefficients `A < 0 < B`. Minimization reduces to the
//! equal-shift diagonal, where the completed square in `cos θ` gives the
//! optimum in closed form.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::deviation::forms;
use crate::domain::{validate_angle, EpsilonRange, PhaseShifts};
use crate::error::{Error, Result};

/// Default composite-Simpson subdivision count for the integration oracle.
pub const DEFAULT_SUBDIVISIONS: usize = 10_000;

/// The coefficients `A` and `B` for one epsilon range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgCoefficients {
    pub a: f64,
    pub b: f64,
    pub range: EpsilonRange,
}

/// Phase-dependent factors of the average deviation, precomputed so grids
/// can be reused across many ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftFactors {
    pub theta: f64,
    pub phi: f64,
    /// `sin(θ/2) sin(φ/2) cos((θ−φ)/2)`
    pub cross: f64,
    /// `sin²(θ/2) sin²(φ/2)`
    pub square: f64,
}

impl ShiftFactors {
    pub fn new(shifts: &PhaseShifts) -> Self {
        Self::from_angles(shifts.theta(), shifts.phi())
    }

    /// Unvalidated angles, for finite differences that step past the domain.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let u = (theta / 2.0).sin() * (phi / 2.0).sin();
        Self {
            theta,
            phi,
            cross: u * ((theta - phi) / 2.0).cos(),
            square: u * u,
        }
    }
}

/// Row-major `n × n` grid over `[0, π]²`, endpoints included.
pub fn phase_grid(n: usize) -> Vec<ShiftFactors> {
    assert!(n >= 2, "grid needs at least two points per axis");
    let step = PI / (n - 1) as f64;
    let axis: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { PI } else { i as f64 * step })
        .collect();
    axis.iter()
        .flat_map(|&t| axis.iter().map(move |&p| ShiftFactors::from_angles(t, p)))
        .collect()
}

impl AvgCoefficients {
    pub fn new(range: EpsilonRange) -> Self {
        let (alpha, beta) = (range.alpha(), range.beta());
        let a = -4.0 / 3.0 * (alpha * alpha * (3.0 - 2.0 * alpha) - beta * beta * (3.0 - 2.0 * beta));
        let b = -4.0 / 3.0
            * ((1.0 - alpha).powi(3) * (3.0 * alpha + 1.0) - (1.0 - beta).powi(3) * (3.0 * beta + 1.0));
        Self { a, b, range }
    }

    /// `A / B`.
    pub fn ratio(&self) -> f64 {
        self.a / self.b
    }

    fn constant(&self) -> f64 {
        let (alpha, beta) = (self.range.alpha(), self.range.beta());
        0.5 * (alpha * alpha - beta * beta)
    }

    pub fn evaluate(&self, f: &ShiftFactors) -> f64 {
        (self.constant() + self.a * f.cross + self.b * f.square) / self.range.width()
    }

    pub fn avg_deviation(&self, shifts: &PhaseShifts) -> f64 {
        self.evaluate(&ShiftFactors::new(shifts))
    }

    fn equal_raw(&self, theta: f64) -> f64 {
        let s2 = (theta / 2.0).sin().powi(2);
        (self.constant() + self.a * s2 + self.b * s2 * s2) / self.range.width()
    }

    fn equal_completed_square_raw(&self, theta: f64) -> f64 {
        let w = self.range.width();
        let shifted = 1.0 + self.ratio() - theta.cos();
        self.b / (4.0 * w) * shifted * shifted + self.range.midpoint()
            - self.a * self.a / (4.0 * self.b * w)
    }

    pub fn partial_theta(&self, shifts: &PhaseShifts) -> f64 {
        partial_raw(self, shifts.theta(), shifts.phi())
    }

    /// Same expression as [`Self::partial_theta`] with the roles of θ and φ
    /// exchanged.
    pub fn partial_phi(&self, shifts: &PhaseShifts) -> f64 {
        partial_raw(self, shifts.phi(), shifts.theta())
    }

    /// `D̄(π, π) = (α+β)/2 + 4(α−1+β)(α²−α+β²−β)`.
    pub fn value_at_pi(&self) -> f64 {
        let (alpha, beta) = (self.range.alpha(), self.range.beta());
        self.range.midpoint()
            + 4.0 * (alpha - 1.0 + beta) * (alpha * alpha - alpha + beta * beta - beta)
    }
}

fn partial_raw(c: &AvgCoefficients, x: f64, y: f64) -> f64 {
    let sy = (y / 2.0).sin();
    sy * (c.a * ((2.0 * x - y) / 2.0).cos() + c.b * x.sin() * sy) / (2.0 * c.range.width())
}

pub fn coefficients(range: EpsilonRange) -> AvgCoefficients {
    AvgCoefficients::new(range)
}

pub fn avg_deviation(shifts: &PhaseShifts, range: EpsilonRange) -> f64 {
    AvgCoefficients::new(range).avg_deviation(shifts)
}

pub fn partial_theta(shifts: &PhaseShifts, range: EpsilonRange) -> f64 {
    AvgCoefficients::new(range).partial_theta(shifts)
}

pub fn partial_phi(shifts: &PhaseShifts, range: EpsilonRange) -> f64 {
    AvgCoefficients::new(range).partial_phi(shifts)
}

/// Equal-shift average deviation `D̄(θ, θ)` in the quartic-in-`sin(θ/2)` form.
pub fn avg_deviation_equal(theta: f64, range: EpsilonRange) -> Result<f64> {
    let theta = validate_angle("theta", theta)?;
    Ok(AvgCoefficients::new(range).equal_raw(theta))
}

/// `D̄(θ, θ)` as a completed square in `cos θ`.
pub fn avg_deviation_equal_completed_square(theta: f64, range: EpsilonRange) -> Result<f64> {
    let theta = validate_angle("theta", theta)?;
    Ok(AvgCoefficients::new(range).equal_completed_square_raw(theta))
}

/// Composite Simpson estimate of `(1/(α−β)) ∫_β^α D(θ, φ; ε) dε`.
pub fn numeric_avg_deviation(
    shifts: &PhaseShifts,
    range: EpsilonRange,
    subdivisions: usize,
) -> Result<f64> {
    if subdivisions < 2 || !subdivisions.is_multiple_of(2) {
        return Err(Error::Subdivisions(subdivisions));
    }
    let (beta, alpha) = (range.beta(), range.alpha());
    let h = (alpha - beta) / subdivisions as f64;
    let f = |e: f64| forms::trig(shifts.theta(), shifts.phi(), e);
    let mut sum = f(beta) + f(alpha);
    for i in 1..subdivisions {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(beta + i as f64 * h);
    }
    Ok(sum * h / 3.0 / (alpha - beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseLabel {
    /// `A/B >= -2`: optimum at `θ = φ = arccos(1 + A/B)`.
    InteriorArccos,
    /// `A/B < -2`: optimum at `θ = φ = π`.
    BoundaryPi,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::InteriorArccos => "interior-arccos",
            CaseLabel::BoundaryPi => "boundary-pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizerReport {
    pub theta_star: f64,
    pub phi_star: f64,
    pub min_value: f64,
    pub case_label: CaseLabel,
    pub is_equal_shift: bool,
    /// `D̄(π, π)`; this is the maximum over equal shifts when `α + β < 1`.
    pub value_at_pi: f64,
}

pub fn minimize_avg_deviation(range: EpsilonRange) -> MinimizerReport {
    let c = AvgCoefficients::new(range);
    let r = c.ratio();
    let value_at_pi = c.value_at_pi();
    // r = -2 gives arccos(-1) = π, matching the boundary branch.
    let (theta_star, min_value, case_label) = if r >= -2.0 {
        let theta = (1.0 + r).clamp(-1.0, 1.0).acos();
        let min = range.midpoint() - c.a * c.a / (4.0 * c.b * range.width());
        (theta, min, CaseLabel::InteriorArccos)
    } else {
        (PI, value_at_pi, CaseLabel::BoundaryPi)
    };
    MinimizerReport {
        theta_star,
        phi_star: theta_star,
        min_value,
        case_label,
        is_equal_shift: true,
        value_at_pi,
    }
}

/// A grid cell and its average deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
}

fn position(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.theta.total_cmp(&b.theta).then(a.phi.total_cmp(&b.phi))
}

/// Smallest and largest average deviation over a precomputed grid.
///
/// Ties resolve to the smaller θ, then the smaller φ, independent of
/// evaluation order.
pub fn grid_extremes(c: &AvgCoefficients, grid: &[ShiftFactors]) -> (GridPoint, GridPoint) {
    let pick = |a: (GridPoint, GridPoint), b: (GridPoint, GridPoint)| {
        let min = match b.0.value.total_cmp(&a.0.value).then(position(&b.0, &a.0)) {
            Ordering::Less => b.0,
            _ => a.0,
        };
        let max = match b.1.value.total_cmp(&a.1.value).then(position(&a.1, &b.1)) {
            Ordering::Greater => b.1,
            _ => a.1,
        };
        (min, max)
    };
    grid.par_iter()
        .map(|f| {
            let p = GridPoint {
                theta: f.theta,
                phi: f.phi,
                value: c.evaluate(f),
            };
            (p, p)
        })
        .reduce_with(pick)
        .expect("empty grid")
}

pub fn grid_minimum(range: EpsilonRange, points_per_axis: usize) -> GridPoint {
    grid_extremes(&AvgCoefficients::new(range), &phase_grid(points_per_axis)).0
}

/// Outcome of one inequality or identity check on the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    /// False when the property's hypothesis does not hold for this range.
    pub applicable: bool,
    pub passed: bool,
    /// The quantity tested: a signed margin or an absolute residual.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixReport {
    pub range: EpsilonRange,
    pub checks: Vec<PropertyCheck>,
}

impl AppendixReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !c.applicable || c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const APPENDIX_BOUND_SLACK: f64 = 1e-12;
pub const APPENDIX_IDENTITY_TOL: f64 = 1e-13;

/// Checks the sign and bound facts about `A`, `B`, `A/B` and `D̄`, plus the
/// polynomial factorizations behind them. `samples` are the phase points used
/// for the `D̄ <= (α+β)/2` bound.
pub fn appendix_properties(range: EpsilonRange, samples: &[ShiftFactors]) -> AppendixReport {
    let c = AvgCoefficients::new(range);
    let (alpha, beta) = (range.alpha(), range.beta());
    let (s, w) = (alpha + beta, range.width());
    let r = c.ratio();
    let large = s >= 1.0;

    let check = |name, applicable, passed, value| PropertyCheck {
        name,
        applicable,
        passed,
        value,
    };

    let d_poly = 3.0 * alpha.powi(3) - 8.0 * alpha * alpha + 3.0 * beta * alpha * alpha + 6.0 * alpha
        - 8.0 * beta * alpha
        + 3.0 * beta * beta * alpha
        + 6.0 * beta
        - 8.0 * beta * beta
        + 3.0 * beta.powi(3);
    let e_poly = 3.0 * alpha.powi(3) - 4.0 * alpha * alpha + 3.0 * beta * alpha * alpha
        - 4.0 * beta * alpha
        + 3.0 * beta * beta * alpha
        - 4.0 * beta * beta
        + 3.0 * beta.powi(3);
    let c_poly = 2.0 * (alpha * alpha + alpha * beta + beta * beta) - 3.0 * s;
    let sum_rhs = 4.0 * (s - 1.0) * w * (alpha * alpha - alpha + beta * beta - beta);

    let bound_margin = if large && !samples.is_empty() {
        let (_, max) = grid_extremes(&c, samples);
        max.value - range.midpoint()
    } else {
        f64::NAN
    };

    let residual = |lhs: f64, rhs: f64| (lhs - rhs).abs();
    let res_sum = residual(c.a + c.b, sum_rhs);
    let res_b = residual(c.b, 4.0 / 3.0 * w * d_poly);
    let res_2ab = residual(2.0 * c.a + c.b, 4.0 / 3.0 * w * e_poly);
    let res_a = residual(c.a, 4.0 / 3.0 * w * c_poly);

    AppendixReport {
        range,
        checks: vec![
            check("b_positive", true, c.b > 0.0, c.b),
            check("ratio_below_minus_half", true, r < -0.5, r),
            check("ratio_at_most_minus_one", large, r <= -1.0, r),
            check("a_negative", true, c.a < 0.0, c.a),
            check(
                "avg_bound",
                large && !samples.is_empty(),
                bound_margin <= APPENDIX_BOUND_SLACK,
                bound_margin,
            ),
            check("sum_factorization", true, res_sum <= APPENDIX_IDENTITY_TOL, res_sum),
            check("b_factorization", true, res_b <= APPENDIX_IDENTITY_TOL, res_b),
            check("two_a_plus_b_factorization", true, res_2ab <= APPENDIX_IDENTITY_TOL, res_2ab),
            check("a_factorization", true, res_a <= APPENDIX_IDENTITY_TOL, res_a),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn range(b: f64, a: f64) -> EpsilonRange {
        EpsilonRange::new(b, a).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let c = coefficients(range(0.0, 1.0));
        assert!((c.a + 4.0 / 3.0).abs() < 1e-15);
        assert!((c.b - 4.0 / 3.0).abs() < 1e-15);

        let c = coefficients(range(0.75, 1.0));
        assert!((c.a + 5.0 / 24.0).abs() < 1e-15);
        assert!((c.b - 13.0 / 192.0).abs() < 1e-15);
        assert!((1.0 + c.ratio() + 27.0 / 13.0).abs() < 1e-14);

        let c = coefficients(range(0.0, 0.5));
        assert!((c.a + 2.0 / 3.0).abs() < 1e-15);
        assert!((c.b - 11.0 / 12.0).abs() < 1e-15);
        assert!((c.ratio() + 8.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn grover_average() {
        // (α+β)(α²+β²)/4 at θ = φ = π/3.
        for (b, a) in [(0.0, 1.0), (0.75, 1.0), (0.2, 0.6)] {
            let expected = (a + b) * (a * a + b * b) / 4.0;
            let got = avg_deviation(&PhaseShifts::grover(), range(b, a));
            assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
        }
    }

    #[test]
    fn extreme_points_give_midpoint() {
        let r = range(0.3, 0.95);
        for (t, p) in [(0.0, 0.0), (0.0, PI), (PI, 0.0)] {
            let v = avg_deviation(&PhaseShifts::new(t, p).unwrap(), r);
            assert!((v - r.midpoint()).abs() < 1e-14);
        }
        assert!((avg_deviation_equal(0.0, r).unwrap() - r.midpoint()).abs() < 1e-15);
    }

    #[test]
    fn simpson_oracle() {
        let g = PhaseShifts::grover();
        let v = numeric_avg_deviation(&g, range(0.0, 1.0), 1000).unwrap();
        assert!((v - 0.25).abs() < 1e-10);

        let zero = PhaseShifts::new(0.0, 0.0).unwrap();
        let v = numeric_avg_deviation(&zero, range(0.2, 0.8), 100).unwrap();
        assert!((v - 0.5).abs() < 1e-12);

        let s = PhaseShifts::new(2.7, 0.3).unwrap();
        let r = range(0.75, 1.0);
        let v = numeric_avg_deviation(&s, r, 2000).unwrap();
        assert!((v - avg_deviation(&s, r)).abs() < 1e-9);

        let s = PhaseShifts::new(1.1, 2.0).unwrap();
        let r = range(0.6, 0.9);
        let v = numeric_avg_deviation(&s, r, DEFAULT_SUBDIVISIONS).unwrap();
        assert!((v - avg_deviation(&s, r)).abs() < 1e-8);

        assert_eq!(numeric_avg_deviation(&s, r, 3), Err(Error::Subdivisions(3)));
        assert!(numeric_avg_deviation(&s, r, 0).is_err());
    }

    fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn partials_against_finite_differences() {
        let r = range(0.5, 1.0);
        let c = AvgCoefficients::new(r);
        let (t, p) = (1.2, 0.7);
        let s = PhaseShifts::new(t, p).unwrap();
        let fd_t = central_diff(|x| c.evaluate(&ShiftFactors::from_angles(x, p)), t, 1e-6);
        let fd_p = central_diff(|y| c.evaluate(&ShiftFactors::from_angles(t, y)), p, 1e-6);
        assert!((partial_theta(&s, r) - fd_t).abs() < 1e-6);
        assert!((partial_phi(&s, r) - fd_p).abs() < 1e-6);

        for theta in [0.0, 1.0, 2.5, PI] {
            let s = PhaseShifts::new(theta, 0.0).unwrap();
            assert_eq!(partial_theta(&s, r), 0.0);
        }
    }

    #[test]
    fn stationary_at_interior_minimizer() {
        for r in [range(0.0, 1.0), range(0.0, 0.5), range(0.3, 0.9)] {
            let m = minimize_avg_deviation(r);
            assert_eq!(m.case_label, CaseLabel::InteriorArccos);
            let s = PhaseShifts::equal(m.theta_star).unwrap();
            assert!(partial_theta(&s, r).abs() < 1e-12);
            assert!(partial_phi(&s, r).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_forms() {
        let r = range(0.0, 1.0);
        for k in 0..=50 {
            let t = PI * k as f64 / 50.0;
            let expected = t.cos().powi(2) / 3.0 + 1.0 / 6.0;
            assert!((avg_deviation_equal(t, r).unwrap() - expected).abs() < 1e-14);
            assert!((avg_deviation_equal_completed_square(t, r).unwrap() - expected).abs() < 1e-14);
        }
        let r = range(0.75, 1.0);
        assert!((avg_deviation_equal(PI, r).unwrap() - 5.0 / 16.0).abs() < 1e-15);
        for k in 0..=20 {
            let t = PI * k as f64 / 20.0;
            let expected = 13.0 / 192.0 * (27.0 / 13.0 + t.cos()).powi(2) + 73.0 / 312.0;
            assert!((avg_deviation_equal(t, r).unwrap() - expected).abs() < 1e-14);
        }
        assert!(avg_deviation_equal(-1.0, r).is_err());
    }

    #[test]
    fn minimizer_examples() {
        let m = minimize_avg_deviation(range(0.0, 1.0));
        assert!((m.theta_star - FRAC_PI_2).abs() < 1e-12);
        assert!((m.min_value - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(m.case_label, CaseLabel::InteriorArccos);
        assert_eq!(m.theta_star, m.phi_star);

        let m = minimize_avg_deviation(range(0.75, 1.0));
        assert_eq!(m.theta_star, PI);
        assert!((m.min_value - 5.0 / 16.0).abs() < 1e-12);
        assert_eq!(m.case_label, CaseLabel::BoundaryPi);

        let m = minimize_avg_deviation(range(0.0, 0.5));
        assert!((m.theta_star - (3.0f64 / 11.0).acos()).abs() < 1e-12);
        assert!((m.theta_star - 1.2945).abs() < 1e-4);
        assert!((m.min_value - 1.0 / 132.0).abs() < 1e-12);
        assert!(m.theta_star > FRAC_PI_3 && m.theta_star < FRAC_PI_2);
        // α+β < 1: θ = π is the equal-shift maximum, above the midpoint.
        assert!(m.value_at_pi > 0.25);
        let g = grid_minimum(range(0.0, 0.5), 201);
        assert!(g.value >= m.min_value - 1e-12);
        assert!((g.theta - g.phi).abs() < 0.05);
    }

    #[test]
    fn boundary_ratio_minus_two_branch_is_continuous() {
        // Bisect for A/B = -2 along beta with alpha = 1.
        let ratio = |b: f64| coefficients(range(b, 1.0)).ratio();
        let (mut lo, mut hi) = (0.0, 0.99);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) >= -2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let below = minimize_avg_deviation(range(lo, 1.0));
        let above = minimize_avg_deviation(range(hi, 1.0));
        assert_eq!(below.case_label, CaseLabel::InteriorArccos);
        assert_eq!(above.case_label, CaseLabel::BoundaryPi);
        assert!((below.min_value - above.min_value).abs() < 1e-6);
        assert!((below.theta_star - PI).abs() < 1e-6);
    }

    #[test]
    fn appendix_examples() {
        let grid = phase_grid(100);
        let rep = appendix_properties(range(0.0, 1.0), &grid);
        assert!(rep.all_passed(), "{rep:#?}");
        for name in [
            "b_positive",
            "a_negative",
            "ratio_below_minus_half",
            "ratio_at_most_minus_one",
            "avg_bound",
        ] {
            let c = rep.get(name).unwrap();
            assert!(c.applicable && c.passed, "{name}");
        }

        let rep = appendix_properties(range(0.0, 0.5), &grid);
        assert!(rep.all_passed());
        assert!(!rep.get("ratio_at_most_minus_one").unwrap().applicable);
        assert!(!rep.get("avg_bound").unwrap().applicable);
        let r = rep.get("ratio_below_minus_half").unwrap().value;
        assert!(r > -1.0 && r < -0.5);

        let rep = appendix_properties(range(0.9, 1.0), &[]);
        assert!(rep.get("sum_factorization").unwrap().value < 1e-14);
    }

    #[test]
    fn grid_includes_endpoints_and_breaks_ties() {
        let g = phase_grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!((g[0].theta, g[0].phi), (0.0, 0.0));
        assert_eq!((g[8].theta, g[8].phi), (PI, PI));

        // With φ = 0 every point sits at the midpoint, so position decides.
        let ties: Vec<ShiftFactors> = [2.0, 0.5, 1.0]
            .iter()
            .map(|&t| ShiftFactors::from_angles(t, 0.0))
            .collect();
        let c = coefficients(range(0.1, 0.7));
        let (min, max) = grid_extremes(&c, &ties);
        assert_eq!(min.theta, 0.5);
        assert_eq!(max.theta, 0.5);
    }
}
