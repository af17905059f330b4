//! Validated parameter types shared by every module.
//!
//! Constructors are the only way to obtain these values, so downstream code
//! can rely on the range invariants without rechecking.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

fn within(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    let value = finite(name, value)?;
    if (min..=max).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            min,
            max,
        })
    }
}

/// Checks that a single angle lies in `[0, pi]`.
pub fn validate_angle(name: &'static str, value: f64) -> Result<f64> {
    within(name, value, 0.0, PI)
}

/// The pair of selective phase rotation angles, in radians.
///
/// `theta` rotates the target state, `phi` rotates the start state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseShifts {
    theta: f64,
    phi: f64,
}

impl PhaseShifts {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        Ok(Self {
            theta: validate_angle("theta", theta)?,
            phi: validate_angle("phi", phi)?,
        })
    }

    /// Equal shifts `theta = phi`.
    pub fn equal(theta: f64) -> Result<Self> {
        Self::new(theta, theta)
    }

    /// Grover's original fixed-point choice, `pi/3` on both reflections.
    pub fn grover() -> Self {
        Self {
            theta: PI / 3.0,
            phi: PI / 3.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn swapped(&self) -> Self {
        Self {
            theta: self.phi,
            phi: self.theta,
        }
    }
}

pub fn validate_phase_shifts(theta: f64, phi: f64) -> Result<PhaseShifts> {
    PhaseShifts::new(theta, phi)
}

/// Failure probability of one application of `U`: `1 - |U_ts|^2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        within("epsilon", value, 0.0, 1.0).map(Self)
    }

    /// Builds epsilon from the overlap magnitude `|U_ts|`.
    pub fn from_overlap(overlap: f64) -> Result<Self> {
        let overlap = within("overlap", overlap, 0.0, 1.0)?;
        Self::new(1.0 - overlap * overlap)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// `|U_ts|^2 = 1 - epsilon`.
    pub fn success_probability(&self) -> f64 {
        1.0 - self.0
    }

    /// True at the closed endpoints 0 and 1, which lie outside the open
    /// interval the analysis is stated on.
    pub fn is_boundary(&self) -> bool {
        self.0 == 0.0 || self.0 == 1.0
    }
}

/// The interval `(beta, alpha)` over which epsilon is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonRange {
    beta: f64,
    alpha: f64,
}

impl EpsilonRange {
    pub fn new(beta: f64, alpha: f64) -> Result<Self> {
        let beta = within("beta", beta, 0.0, 1.0)?;
        let alpha = within("alpha", alpha, 0.0, 1.0)?;
        if beta >= alpha {
            return Err(Error::DegenerateRange { beta, alpha });
        }
        Ok(Self { beta, alpha })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn width(&self) -> f64 {
        self.alpha - self.beta
    }

    /// `(alpha + beta) / 2`, the mean of epsilon over the range.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }
}

pub fn validate_epsilon_range(beta: f64, alpha: f64) -> Result<EpsilonRange> {
    EpsilonRange::new(beta, alpha)
}
