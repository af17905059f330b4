//! Closed-form deviation of one fixed-point search step `U Rs U† Rt U |s⟩`
//! from the target state, for independent phase shifts on `Rt` (theta) and
//! `Rs` (phi).
//!
//! The expanded trigonometric form is the canonical evaluation route. The
//! complex-amplitude form and the sum-of-squares form are kept for
//! cross-validation, and [`forms`] exposes all of them on raw `f64` inputs so
//! oracles and test harnesses can evaluate them off the validated domain.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::domain::{validate_angle, Epsilon, PhaseShifts};
use crate::error::{Error, Result};

/// Squared norm of the post-step component orthogonal to `|t⟩`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct DeviationValue(f64);

impl DeviationValue {
    /// Clamps into `[0, 1]`; the closed forms can stray past the bounds by a
    /// few ulps through cancellation.
    pub fn new(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Unvalidated formula kernels `(theta, phi, eps) -> f64`.
pub mod forms {
    use num_complex::Complex64;

    /// `(1 - |U_ts|^2) |e^{i phi} + (1 - e^{i phi})(1 - e^{i theta}) |U_ts|^2|^2`.
    pub fn complex(theta: f64, phi: f64, eps: f64) -> f64 {
        let p = 1.0 - eps;
        let one = Complex64::new(1.0, 0.0);
        let e_phi = Complex64::cis(phi);
        let e_theta = Complex64::cis(theta);
        let c = e_phi + (one - e_phi) * (one - e_theta) * p;
        eps * c.norm_sqr()
    }

    pub fn trig(theta: f64, phi: f64, eps: f64) -> f64 {
        let p = 1.0 - eps;
        // The product is formed first so swapping θ and φ is bit-exact.
        let u = (theta / 2.0).sin() * (phi / 2.0).sin();
        let cd = ((theta - phi) / 2.0).cos();
        eps * (1.0 - 8.0 * p * u * cd + 16.0 * p * p * u * u)
    }

    pub fn sum_of_squares(theta: f64, phi: f64, eps: f64) -> f64 {
        let p = 1.0 - eps;
        let st = (theta / 2.0).sin();
        let sp = (phi / 2.0).sin();
        let half_diff = (theta - phi) / 2.0;
        let first = 4.0 * p * st * sp - half_diff.cos();
        let second = half_diff.sin();
        eps * (first * first + second * second)
    }

    pub fn equal(theta: f64, eps: f64) -> f64 {
        let s = (theta / 2.0).sin();
        let inner = 4.0 * (1.0 - eps) * s * s - 1.0;
        eps * inner * inner
    }

    /// `D(theta, phi) - D(theta, theta)` in the factored form.
    pub fn difference(theta: f64, phi: f64, eps: f64) -> f64 {
        let st = (theta / 2.0).sin();
        let bracket = 2.0 * eps * ((theta + phi) / 2.0).sin() * st
            + ((2.0 * theta + phi) / 2.0).cos();
        8.0 * eps * (1.0 - eps) * st * ((theta - phi) / 2.0).sin() * bracket
    }

    /// The factor `eps cos(phi/2) + (1 - eps) cos((2 theta + phi)/2)` form of
    /// the same difference, before the bracket is rewritten.
    pub fn difference_unreduced(theta: f64, phi: f64, eps: f64) -> f64 {
        let bracket = eps * (phi / 2.0).cos() + (1.0 - eps) * ((2.0 * theta + phi) / 2.0).cos();
        8.0 * eps * (1.0 - eps) * (theta / 2.0).sin() * ((theta - phi) / 2.0).sin() * bracket
    }
}

pub fn deviation_complex(shifts: &PhaseShifts, eps: Epsilon) -> DeviationValue {
    DeviationValue::new(forms::complex(shifts.theta(), shifts.phi(), eps.value()))
}

pub fn deviation_trig(shifts: &PhaseShifts, eps: Epsilon) -> DeviationValue {
    DeviationValue::new(forms::trig(shifts.theta(), shifts.phi(), eps.value()))
}

pub fn deviation_sum_of_squares(shifts: &PhaseShifts, eps: Epsilon) -> DeviationValue {
    DeviationValue::new(forms::sum_of_squares(
        shifts.theta(),
        shifts.phi(),
        eps.value(),
    ))
}

pub fn deviation_equal(theta: f64, eps: Epsilon) -> Result<DeviationValue> {
    let theta = validate_angle("theta", theta)?;
    Ok(DeviationValue::new(forms::equal(theta, eps.value())))
}

/// `D(theta, phi) - D(theta, theta)`. Negative means the unequal pair beats
/// equal shifts at `theta`.
pub fn deviation_difference(shifts: &PhaseShifts, eps: Epsilon) -> f64 {
    forms::difference(shifts.theta(), shifts.phi(), eps.value())
}

/// Equal phase shift at which the deviation vanishes exactly:
/// `arccos(1 - 1/(2(1 - eps)))`. Only exists for `eps <= 3/4`.
pub fn zero_deviation_phase(eps: Epsilon) -> Result<f64> {
    let e = eps.value();
    if e > 0.75 {
        return Err(Error::NoZeroDeviationPhase(e));
    }
    let c = 1.0 - 1.0 / (2.0 * (1.0 - e));
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// The epsilon threshold `-cos((2θ+φ)/2) / (2 sin((θ+φ)/2) sin(θ/2))`
/// separating the two sign regimes of [`deviation_difference`].
///
/// `None` when the denominator vanishes (`theta = 0`, or `theta = phi = pi`).
pub fn result1_threshold(shifts: &PhaseShifts) -> Option<f64> {
    let (theta, phi) = (shifts.theta(), shifts.phi());
    let denom = 2.0 * ((theta + phi) / 2.0).sin() * (theta / 2.0).sin();
    if denom <= 0.0 {
        return None;
    }
    Some(-((2.0 * theta + phi) / 2.0).cos() / denom)
}

/// Sufficient condition for `D(θ, φ) < D(θ, θ)`:
/// `0 < θ < φ` with epsilon above the threshold, or `0 <= φ < θ` with epsilon
/// below it. Boundaries are excluded, as are `eps ∈ {0, 1}` where the
/// difference is identically zero.
pub fn result1_predicate(shifts: &PhaseShifts, eps: Epsilon) -> bool {
    let (theta, phi) = (shifts.theta(), shifts.phi());
    let e = eps.value();
    if e <= 0.0 || e >= 1.0 || theta == phi {
        return false;
    }
    let Some(threshold) = result1_threshold(shifts) else {
        return false;
    };
    if 0.0 < theta && theta < phi {
        e > threshold
    } else if phi < theta {
        e < threshold
    } else {
        false
    }
}

/// `0 < θ < φ` and `2θ + φ < π`: unequal shifts win for every epsilon in (0, 1).
pub fn result2_condition(shifts: &PhaseShifts) -> bool {
    let (theta, phi) = (shifts.theta(), shifts.phi());
    0.0 < theta && theta < phi && 2.0 * theta + phi < PI
}

fn check_example2_domain(theta: f64) -> Result<f64> {
    if theta.is_finite() && 0.0 < theta && theta < FRAC_PI_2 {
        Ok(theta)
    } else {
        Err(Error::ThresholdDomain(theta))
    }
}

/// Epsilon threshold above which `D(θ, π/2) < D(θ, θ)`, from the direct
/// reduction `1 - (cos(θ/2) - sin(θ/2)) / (2 sin(θ/2) cos θ)`.
pub fn example2_threshold(theta: f64) -> Result<f64> {
    let theta = check_example2_domain(theta)?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(1.0 - (c - s) / (2.0 * s * theta.cos()))
}

/// The same threshold obtained by specializing [`result1_threshold`] to
/// `φ = π/2`: `(sin θ - cos θ) / (2 (sin(θ/2) + cos(θ/2)) sin(θ/2))`.
pub fn example2_threshold_via_result1(theta: f64) -> Result<f64> {
    let theta = check_example2_domain(theta)?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok((theta.sin() - theta.cos()) / (2.0 * (s + c) * s))
}
