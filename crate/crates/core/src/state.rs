//! Single-photon state: a polarization qubit spread over time bins and
//! spatial modes.
//!
//! The wavefunction is stored sparsely, keyed by occupied `(time bin,
//! spatial mode)` slots. Each slot carries a two-component polarization
//! spinor. Multi-photon terms cannot be represented.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Tolerance on `max |M^dag M - I|` for accepted operators.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Tolerance on total norm for states labelled normalized.
pub const NORM_TOL: f64 = 1e-9;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const I: Complex = Complex::new(0.0, 1.0);

/// Polarization amplitudes in the fixed `(h, v)` basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSpinor {
    pub h: Complex,
    pub v: Complex,
}

impl PolarizationSpinor {
    pub const H: Self = Self { h: ONE, v: ZERO };
    pub const V: Self = Self { h: ZERO, v: ONE };

    pub fn new(h: Complex, v: Complex) -> Self {
        Self { h, v }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.v.is_finite()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Complex {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self {
            h: self.h * c,
            v: self.v * c,
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        if !self.is_finite() {
            return Err(Error::NonFinite("polarization spinor"));
        }
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(Complex::new(1.0 / n, 0.0)))
    }
}

/// A 2x2 unitary acting on the polarization qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[Complex; 2]; 2]", into = "[[Complex; 2]; 2]")]
pub struct PolarizationOperator {
    m: [[Complex; 2]; 2],
}

impl PolarizationOperator {
    /// Builds an operator from a row-major matrix, rejecting anything that is
    /// not unitary within [`UNITARITY_TOL`].
    pub fn new(m: [[Complex; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polarization operator"));
        }
        let op = Self { m };
        let residual = op.unitarity_residual();
        if residual > UNITARITY_TOL {
            return Err(Error::NonUnitary { residual });
        }
        Ok(op)
    }

    /// Skips the unitarity check. Only for products of already validated
    /// operators.
    pub(crate) fn from_matrix_unchecked(m: [[Complex; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            m: [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            m: [[ZERO, -I], [I, ZERO]],
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn hadamard() -> Self {
        let s = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            m: [[s, s], [s, -s]],
        }
    }

    /// `e^{i phi} I`
    pub fn global_phase(phi: f64) -> Self {
        let p = Complex::from_polar(1.0, phi);
        Self {
            m: [[p, ZERO], [ZERO, p]],
        }
    }

    /// `diag(e^{i a}, e^{i b})`
    pub fn diagonal(a: f64, b: f64) -> Self {
        Self {
            m: [
                [Complex::from_polar(1.0, a), ZERO],
                [ZERO, Complex::from_polar(1.0, b)],
            ],
        }
    }

    pub fn matrix(&self) -> &[[Complex; 2]; 2] {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    /// Max-norm of `M^dag M - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((p.m[r][c] - target).norm());
            }
        }
        worst
    }

    pub fn apply(&self, s: &PolarizationSpinor) -> PolarizationSpinor {
        PolarizationSpinor {
            h: self.m[0][0] * s.h + self.m[0][1] * s.v,
            v: self.m[1][0] * s.h + self.m[1][1] * s.v,
        }
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn matmul(&self, rhs: &Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self { m: out }
    }

    pub fn trace(&self) -> Complex {
        self.m[0][0] + self.m[1][1]
    }

    /// Largest elementwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for PolarizationOperator {
    type Output = PolarizationOperator;

    fn mul(self, rhs: Self) -> Self {
        self.matmul(&rhs)
    }
}

impl TryFrom<[[Complex; 2]; 2]> for PolarizationOperator {
    type Error = Error;

    fn try_from(m: [[Complex; 2]; 2]) -> Result<Self> {
        Self::new(m)
    }
}

impl From<PolarizationOperator> for [[Complex; 2]; 2] {
    fn from(op: PolarizationOperator) -> Self {
        op.m
    }
}

/// An occupied `(time bin, spatial mode)` position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub bin: usize,
    pub mode: usize,
}

impl Slot {
    pub fn new(bin: usize, mode: usize) -> Self {
        Self { bin, mode }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t_{}, x_{})", self.bin, self.mode)
    }
}

/// Joint single-photon wavefunction over time bins, spatial modes and
/// polarization.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonState {
    amps: BTreeMap<Slot, PolarizationSpinor>,
    n_modes: usize,
    n_bins: usize,
}

impl PhotonState {
    /// The vacuum-filled register with no occupied slots.
    pub fn empty(n_modes: usize, n_bins: usize) -> Self {
        Self {
            amps: BTreeMap::new(),
            n_modes,
            n_bins,
        }
    }

    /// Builds a state from explicit slot amplitudes without normalizing.
    pub fn from_slots<I>(n_modes: usize, n_bins: usize, slots: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Slot, PolarizationSpinor)>,
    {
        let mut state = Self::empty(n_modes, n_bins);
        for (slot, spinor) in slots {
            state.insert(slot, spinor)?;
        }
        Ok(state)
    }

    /// Encodes a time-bin control register on the input mode `x_0`:
    /// `sum_i alpha_i |psi>_{t_i, x_0}`. Amplitudes need not be normalized;
    /// the result is.
    pub fn encode_register<I>(
        n_modes: usize,
        n_bins: usize,
        amplitudes: I,
        psi: &PolarizationSpinor,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Complex)>,
    {
        let psi = psi.normalized()?;
        let slots = amplitudes
            .into_iter()
            .map(|(bin, alpha)| (Slot::new(bin, 0), psi.scale(alpha)));
        Self::from_slots(n_modes, n_bins, slots)?.normalized()
    }

    /// Inserts (or overwrites) the spinor at `slot`.
    pub fn insert(&mut self, slot: Slot, spinor: PolarizationSpinor) -> Result<()> {
        self.check_slot(slot)?;
        if !spinor.is_finite() {
            return Err(Error::NonFinite("photon state amplitude"));
        }
        self.amps.insert(slot, spinor);
        Ok(())
    }

    /// Inserts at `slot`, failing if it is already occupied.
    pub(crate) fn insert_new(&mut self, slot: Slot, spinor: PolarizationSpinor) -> Result<()> {
        self.check_slot(slot)?;
        if self.amps.insert(slot, spinor).is_some() {
            return Err(Error::Collision {
                bin: slot.bin,
                mode: slot.mode,
            });
        }
        Ok(())
    }

    fn check_slot(&self, slot: Slot) -> Result<()> {
        if slot.bin >= self.n_bins || slot.mode >= self.n_modes {
            return Err(Error::SlotOutOfRange {
                bin: slot.bin,
                mode: slot.mode,
                n_bins: self.n_bins,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn get(&self, slot: Slot) -> Option<&PolarizationSpinor> {
        self.amps.get(&slot)
    }

    /// Occupied slots in `(bin, mode)` order.
    pub fn iter(&self) -> impl Iterator<Item = (Slot, &PolarizationSpinor)> {
        self.amps.iter().map(|(s, a)| (*s, a))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Distinct occupied time bins, ascending.
    pub fn occupied_bins(&self) -> Vec<usize> {
        let mut bins: Vec<usize> = self.amps.keys().map(|s| s.bin).collect();
        bins.dedup();
        bins
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(PolarizationSpinor::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() {
            return Err(Error::NonFinite("photon state"));
        }
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let inv = Complex::new(1.0 / n, 0.0);
        Ok(Self {
            amps: self.amps.iter().map(|(s, a)| (*s, a.scale(inv))).collect(),
            n_modes: self.n_modes,
            n_bins: self.n_bins,
        })
    }

    /// Applies `op` to every occupied slot selected by `select`.
    pub fn apply_polarization_op<F>(&self, op: &PolarizationOperator, select: F) -> Self
    where
        F: Fn(Slot) -> bool,
    {
        Self {
            amps: self
                .amps
                .iter()
                .map(|(s, a)| (*s, if select(*s) { op.apply(a) } else { *a }))
                .collect(),
            n_modes: self.n_modes,
            n_bins: self.n_bins,
        }
    }

    /// Exchanges the contents of `(bin, a)` and `(bin, b)`. Vacuum swaps
    /// with vacuum.
    pub(crate) fn swap_modes(&mut self, bin: usize, a: usize, b: usize) {
        let first = self.amps.remove(&Slot::new(bin, a));
        let second = self.amps.remove(&Slot::new(bin, b));
        if let Some(x) = first {
            self.amps.insert(Slot::new(bin, b), x);
        }
        if let Some(y) = second {
            self.amps.insert(Slot::new(bin, a), y);
        }
    }

    /// `<self|other>` over the joint (time, space, polarization) space.
    pub fn inner(&self, other: &Self) -> Result<Complex> {
        self.check_dims(other)?;
        // iterate the smaller map
        let (small, large, flip) = if self.amps.len() <= other.amps.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = ZERO;
        for (slot, a) in &small.amps {
            if let Some(b) = large.amps.get(slot) {
                acc += if flip { b.inner(a) } else { a.inner(b) };
            }
        }
        Ok(acc)
    }

    /// `|<a|b>|^2`, for normalized inputs of matching dimensions.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes || self.n_bins != other.n_bins {
            return Err(Error::DimensionMismatch(
                self.n_modes,
                self.n_bins,
                other.n_modes,
                other.n_bins,
            ));
        }
        Ok(())
    }

    /// Largest spinor-component difference over the union of occupied slots.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_dims(other)?;
        let zero = PolarizationSpinor::new(ZERO, ZERO);
        let mut worst = 0.0_f64;
        for slot in self.amps.keys().chain(other.amps.keys()) {
            let a = self.amps.get(slot).unwrap_or(&zero);
            let b = other.amps.get(slot).unwrap_or(&zero);
            worst = worst.max((a.h - b.h).norm()).max((a.v - b.v).norm());
        }
        Ok(worst)
    }
}
