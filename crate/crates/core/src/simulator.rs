//! Dense statevector oracle for the fixed-point step.
//!
//! Start and target states are computational-basis vectors. Everything here
//! is plain linear algebra on explicit complex matrices, independent of the
//! closed forms in [`crate::deviation`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::deviation::forms;
use crate::domain::PhaseShifts;
use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
pub const MAX_RECURSION_DIM: usize = 256;
pub const MAX_RECURSION_DEPTH: usize = 12;
/// Deviations below this are reported as zero with an underflow flag.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Default start index, `|0⟩`.
pub const DEFAULT_START: usize = 0;

/// Default target index, the last basis state.
pub fn default_target(dim: usize) -> usize {
    dim - 1
}

fn check_index(index: usize, dim: usize) -> Result<usize> {
    if index < dim {
        Ok(index)
    } else {
        Err(Error::IndexOutOfRange { index, dim })
    }
}

fn check_pair(s: usize, t: usize, dim: usize) -> Result<()> {
    check_index(s, dim)?;
    check_index(t, dim)?;
    if s == t {
        return Err(Error::SameIndices(s));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_index(index, dim)?;
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: DMatrix<Complex64>,
}

fn unitarity_residual(m: &DMatrix<Complex64>) -> f64 {
    let gram = m.adjoint() * m;
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

impl UnitaryMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        let residual = unitarity_residual(&entries);
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary(residual));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.entries)
    }

    /// `U_ts = ⟨t|U|s⟩`.
    pub fn overlap(&self, s: usize, t: usize) -> Complex64 {
        self.entries[(t, s)]
    }

    /// `1 - |U_ts|^2`, accumulated over the rows other than `t` so that small
    /// values keep their relative precision.
    pub fn epsilon(&self, s: usize, t: usize) -> f64 {
        self.entries
            .column(s)
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != t)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: state.dim(),
            });
        }
        Ok(StateVector {
            amplitudes: &self.entries * &state.amplitudes,
        })
    }
}

/// `I - (1 - e^{i phase}) |k⟩⟨k|`: identity except `e^{i phase}` at `k`.
pub fn selective_phase_operator(target_index: usize, phase: f64, dim: usize) -> Result<UnitaryMatrix> {
    check_index(target_index, dim)?;
    let mut m = DMatrix::identity(dim, dim);
    m[(target_index, target_index)] = Complex64::cis(phase);
    Ok(UnitaryMatrix { entries: m })
}

/// `I - (1 - e^{i phase}) |ψ⟩⟨ψ|` for an arbitrary unit state.
pub fn state_phase_operator(state: &StateVector, phase: f64) -> UnitaryMatrix {
    let psi = &state.amplitudes;
    let dim = psi.len();
    let k = Complex64::new(1.0, 0.0) - Complex64::cis(phase);
    let projector = psi * psi.adjoint();
    UnitaryMatrix {
        entries: DMatrix::identity(dim, dim) - projector * k,
    }
}

fn scale_row(m: &mut DMatrix<Complex64>, row: usize, phase: f64) {
    let z = Complex64::cis(phase);
    m.row_mut(row).iter_mut().for_each(|a| *a *= z);
}

fn scale_entry(v: &mut DVector<Complex64>, index: usize, phase: f64) {
    v[index] *= Complex64::cis(phase);
}

/// `U Rs U† Rt U |s⟩`, with `Rt` carrying `theta` and `Rs` carrying `phi`.
pub fn fixed_point_step(
    u: &UnitaryMatrix,
    s_index: usize,
    t_index: usize,
    shifts: &PhaseShifts,
) -> Result<StateVector> {
    check_pair(s_index, t_index, u.dim())?;
    let m = &u.entries;
    let mut v: DVector<Complex64> = m.column(s_index).into_owned();
    scale_entry(&mut v, t_index, shifts.theta());
    let mut w = m.adjoint() * v;
    scale_entry(&mut w, s_index, shifts.phi());
    Ok(StateVector {
        amplitudes: m * w,
    })
}

/// The composed operator `U Rs U† Rt U` as a matrix.
pub fn compose_step(
    u: &UnitaryMatrix,
    s_index: usize,
    t_index: usize,
    shifts: &PhaseShifts,
) -> Result<UnitaryMatrix> {
    check_pair(s_index, t_index, u.dim())?;
    let m = &u.entries;
    let mut rt_u = m.clone();
    scale_row(&mut rt_u, t_index, shifts.theta());
    let mut inner = m.adjoint() * rt_u;
    scale_row(&mut inner, s_index, shifts.phi());
    Ok(UnitaryMatrix { entries: m * inner })
}

/// Squared norm of the component orthogonal to `|t⟩`, i.e. `1 - |⟨t|ψ⟩|^2`.
pub fn measure_deviation(state: &StateVector, t_index: usize) -> f64 {
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t_index)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn gaussian_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng))
}

/// QR with the diagonal of `R` rotated to the positive real axis, so the
/// first column of the result is the normalized first column of `m`.
fn orthonormalize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|a| *a *= phase);
    }
    q
}

fn finish_unitary(q: DMatrix<Complex64>) -> Result<UnitaryMatrix> {
    let q = if unitarity_residual(&q) > UNITARY_TOL {
        orthonormalize(q)
    } else {
        q
    };
    UnitaryMatrix::new(q)
}

/// Haar-distributed unitary, deterministic per seed.
pub fn random_unitary(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    finish_unitary(orthonormalize(gaussian_matrix(dim, &mut rng)))
}

/// A unitary with `|⟨t|U|s⟩| = overlap`, using the default basis pair.
pub fn prescribed_overlap_unitary(dim: usize, overlap: f64, seed: u64) -> Result<UnitaryMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    prescribed_overlap_unitary_at(dim, DEFAULT_START, default_target(dim), overlap, seed)
}

/// Maps `|s⟩` to `a|t⟩ + sqrt(1 - a²)|w⟩` for a random unit `w ⊥ t`, then
/// completes the remaining columns by orthonormal extension.
pub fn prescribed_overlap_unitary_at(
    dim: usize,
    s_index: usize,
    t_index: usize,
    overlap: f64,
    seed: u64,
) -> Result<UnitaryMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    check_pair(s_index, t_index, dim)?;
    if !overlap.is_finite() || !(0.0..=1.0).contains(&overlap) {
        return Err(Error::OutOfRange {
            name: "overlap",
            value: overlap,
            min: 0.0,
            max: 1.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut w = DVector::from_fn(dim, |_, _| gaussian_complex(&mut rng));
    w[t_index] = Complex64::new(0.0, 0.0);
    let w = w.normalize();
    let mut image = w * Complex64::new((1.0 - overlap * overlap).sqrt(), 0.0);
    image[t_index] = Complex64::new(overlap, 0.0);

    let mut m = gaussian_matrix(dim, &mut rng);
    m.set_column(0, &image);
    let q = orthonormalize(m);

    // Column 0 of q becomes column s; the rest fill the other slots in order.
    let mut u = DMatrix::zeros(dim, dim);
    u.set_column(s_index, &q.column(0));
    let others = (0..dim).filter(|&j| j != s_index);
    for (src, dst) in (1..dim).zip(others) {
        u.set_column(dst, &q.column(src));
    }
    finish_unitary(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceLevel {
    pub level: usize,
    /// `1 - |⟨t|U_m|s⟩|²` of the explicitly composed operator.
    pub measured: f64,
    /// `eps_m` from iterating the closed-form map `eps -> D(θ, φ; eps)`.
    pub iterated: f64,
    pub underflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionTrace {
    pub levels: Vec<TraceLevel>,
}

impl RecursionTrace {
    pub fn max_discrepancy(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| (l.measured - l.iterated).abs())
            .fold(0.0, f64::max)
    }
}

/// Applies `U_{m+1} = U_m Rs U_m† Rt U_m` for `depth` levels, recording the
/// measured deviation at every level next to the iterated closed-form map.
pub fn recursion_trace(
    u: &UnitaryMatrix,
    s_index: usize,
    t_index: usize,
    shifts: &PhaseShifts,
    depth: usize,
) -> Result<RecursionTrace> {
    let dim = u.dim();
    if depth > MAX_RECURSION_DEPTH || dim > MAX_RECURSION_DIM {
        return Err(Error::RecursionCap {
            depth,
            dim,
            max_depth: MAX_RECURSION_DEPTH,
            max_dim: MAX_RECURSION_DIM,
        });
    }
    check_pair(s_index, t_index, dim)?;

    let floor = |v: f64| if v < UNDERFLOW_FLOOR { (0.0, v != 0.0) } else { (v, false) };
    let mut levels = Vec::with_capacity(depth + 1);
    let mut current = u.clone();
    let mut iterated = u.epsilon(s_index, t_index);
    let mut underflowed = false;
    let mut previous = iterated;
    for level in 0..=depth {
        if level > 0 {
            current = compose_step(&current, s_index, t_index, shifts)?;
            iterated = forms::trig(shifts.theta(), shifts.phi(), iterated).clamp(0.0, 1.0);
        }
        let (measured, m_flag) = floor(current.epsilon(s_index, t_index));
        let (it, i_flag) = floor(iterated);
        let i_flag = i_flag || (it == 0.0 && previous > 0.0);
        previous = it;
        iterated = it;
        underflowed |= m_flag || i_flag;
        levels.push(TraceLevel {
            level,
            measured,
            iterated: it,
            underflow: underflowed,
        });
    }
    Ok(RecursionTrace { levels })
}
