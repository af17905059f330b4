//! Deterministic grid sweeps and their CSV / JSON encodings.
//!
//! Cells are evaluated in parallel; `rayon`'s indexed collect keeps the
//! row-major order, so output bytes do not depend on the thread count.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::average::{avg_deviation_equal, minimize_avg_deviation, CaseLabel, MinimizerReport};
use crate::deviation::deviation_trig;
use crate::domain::{Epsilon, EpsilonRange, PhaseShifts};
use crate::error::{Error, Result};

/// Formats with 17 significant digits, `%.17g`-style but without trimming
/// zeros, so every `f64` round-trips exactly.
pub fn format_sig17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0000000000000000".into() } else { "0.0000000000000000".into() };
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        sci
    }
}

/// An inclusive, uniformly spaced sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidSweep("axis bounds must be finite".into()));
        }
        if points < 2 {
            return Err(Error::InvalidSweep(format!("axis needs at least 2 points, got {points}")));
        }
        if min > max {
            return Err(Error::InvalidSweep(format!("axis min {min} exceeds max {max}")));
        }
        Ok(Self { min, max, points })
    }

    /// A one-point axis pinned at `value`.
    pub fn fixed(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            points: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = self.points - 1;
        let step = (self.max - self.min) / last as f64;
        (0..self.points)
            .map(|i| if i == last { self.max } else { self.min + i as f64 * step })
            .collect()
    }

    fn check_within(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        if self.min < lo || self.max > hi {
            return Err(Error::InvalidSweep(format!(
                "{name} axis [{}, {}] leaves [{lo}, {hi}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Grid for a `D(θ, φ; ε)` sweep. A fixed epsilon is a one-point axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub theta: Axis,
    pub phi: Axis,
    pub epsilon: Axis,
}

pub const DEFAULT_SWEEP_EPSILON: f64 = 0.9;

impl SweepSpec {
    /// Full `[0, π]²` surface at one epsilon.
    pub fn surface(points: usize, epsilon: f64) -> Result<Self> {
        let spec = Self {
            theta: Axis::new(0.0, PI, points)?,
            phi: Axis::new(0.0, PI, points)?,
            epsilon: Axis::fixed(epsilon),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.theta.check_within("theta", 0.0, PI)?;
        self.phi.check_within("phi", 0.0, PI)?;
        self.epsilon.check_within("epsilon", 0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Deviation,
    AvgDeviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RecordParams {
    Epsilon { epsilon: f64 },
    Range { beta: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub theta: f64,
    pub phi: f64,
    #[serde(flatten)]
    pub params: RecordParams,
    pub value: f64,
    pub value_kind: ValueKind,
}

pub fn sweep_deviation(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let thetas = spec.theta.values();
    let phis = spec.phi.values();
    let epss = spec.epsilon.values();
    let cells: Vec<(f64, f64, f64)> = thetas
        .iter()
        .flat_map(|&t| {
            let epss = &epss;
            phis.iter().flat_map(move |&p| epss.iter().map(move |&e| (t, p, e)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(theta, phi, epsilon)| {
            let shifts = PhaseShifts::new(theta, phi)?;
            let value = deviation_trig(&shifts, Epsilon::new(epsilon)?).value();
            Ok(SweepRecord {
                theta,
                phi,
                params: RecordParams::Epsilon { epsilon },
                value,
                value_kind: ValueKind::Deviation,
            })
        })
        .collect()
}

/// `D̄(θ, θ)` for `points` values of θ spread over `[0, π]`.
pub fn sweep_avg_equal(range: EpsilonRange, points: usize) -> Result<Vec<SweepRecord>> {
    let axis = Axis::new(0.0, PI, points)?;
    axis.values()
        .into_par_iter()
        .map(|theta| {
            Ok(SweepRecord {
                theta,
                phi: theta,
                params: RecordParams::Range {
                    beta: range.beta(),
                    alpha: range.alpha(),
                },
                value: avg_deviation_equal(theta, range)?,
                value_kind: ValueKind::AvgDeviation,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerCell {
    pub beta: f64,
    pub alpha: f64,
    /// `None` for cells with `beta >= alpha`.
    pub report: Option<MinimizerReport>,
}

/// Minimizer reports over a `(beta, alpha)` grid, row-major in beta.
pub fn sweep_minimizer_map(beta_axis: &Axis, alpha_axis: &Axis) -> Result<Vec<MinimizerCell>> {
    beta_axis.check_within("beta", 0.0, 1.0)?;
    alpha_axis.check_within("alpha", 0.0, 1.0)?;
    let alphas = alpha_axis.values();
    let cells: Vec<(f64, f64)> = beta_axis
        .values()
        .into_iter()
        .flat_map(|b| alphas.iter().map(move |&a| (b, a)))
        .collect();
    let out: Vec<MinimizerCell> = cells
        .into_par_iter()
        .map(|(beta, alpha)| MinimizerCell {
            beta,
            alpha,
            report: EpsilonRange::new(beta, alpha).ok().map(minimize_avg_deviation),
        })
        .collect();
    if out.iter().all(|c| c.report.is_none()) {
        return Err(Error::InvalidSweep("no cell satisfies beta < alpha".into()));
    }
    Ok(out)
}

/// JSON shape shared by the minimizer map and the `optimal` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MinimizerEntry {
    Solved {
        beta: f64,
        alpha: f64,
        theta_star: f64,
        phi_star: f64,
        min_value: f64,
        case_label: CaseLabel,
        value_at_pi: f64,
    },
    Skipped {
        beta: f64,
        alpha: f64,
        skipped: bool,
    },
}

impl MinimizerEntry {
    pub fn solved(range: EpsilonRange, r: &MinimizerReport) -> Self {
        MinimizerEntry::Solved {
            beta: range.beta(),
            alpha: range.alpha(),
            theta_star: r.theta_star,
            phi_star: r.phi_star,
            min_value: r.min_value,
            case_label: r.case_label,
            value_at_pi: r.value_at_pi,
        }
    }
}

impl From<&MinimizerCell> for MinimizerEntry {
    fn from(c: &MinimizerCell) -> Self {
        match &c.report {
            Some(r) => MinimizerEntry::Solved {
                beta: c.beta,
                alpha: c.alpha,
                theta_star: r.theta_star,
                phi_star: r.phi_star,
                min_value: r.min_value,
                case_label: r.case_label,
                value_at_pi: r.value_at_pi,
            },
            None => MinimizerEntry::Skipped {
                beta: c.beta,
                alpha: c.alpha,
                skipped: true,
            },
        }
    }
}

pub const DEVIATION_CSV_HEADER: &str = "theta,phi,epsilon,deviation";
pub const AVG_CSV_HEADER: &str = "theta,beta,alpha,avg_deviation";
pub const MINIMIZER_CSV_HEADER: &str = "beta,alpha,theta_star,min_value,case_label,skipped";

fn line(w: &mut impl Write, fields: &[String]) -> io::Result<()> {
    w.write_all(fields.join(",").as_bytes())?;
    w.write_all(b"\n")
}

pub fn write_deviation_csv(records: &[SweepRecord], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{DEVIATION_CSV_HEADER}")?;
    for r in records {
        let eps = match r.params {
            RecordParams::Epsilon { epsilon } => epsilon,
            RecordParams::Range { .. } => f64::NAN,
        };
        line(w, &[r.theta, r.phi, eps, r.value].map(format_sig17))?;
    }
    Ok(())
}

pub fn write_avg_csv(records: &[SweepRecord], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{AVG_CSV_HEADER}")?;
    for r in records {
        let (beta, alpha) = match r.params {
            RecordParams::Range { beta, alpha } => (beta, alpha),
            RecordParams::Epsilon { .. } => (f64::NAN, f64::NAN),
        };
        line(w, &[r.theta, beta, alpha, r.value].map(format_sig17))?;
    }
    Ok(())
}

pub fn write_minimizer_csv(cells: &[MinimizerCell], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{MINIMIZER_CSV_HEADER}")?;
    for c in cells {
        let (b, a) = (format_sig17(c.beta), format_sig17(c.alpha));
        match &c.report {
            Some(r) => line(
                w,
                &[
                    b,
                    a,
                    format_sig17(r.theta_star),
                    format_sig17(r.min_value),
                    r.case_label.as_str().into(),
                    "false".into(),
                ],
            )?,
            None => line(w, &[b, a, String::new(), String::new(), String::new(), "true".into()])?,
        }
    }
    Ok(())
}

pub fn minimizer_json(cells: &[MinimizerCell]) -> serde_json::Value {
    let entries: Vec<MinimizerEntry> = cells.iter().map(MinimizerEntry::from).collect();
    serde_json::to_value(entries).expect("minimizer entries serialize")
}
