//! Brute-force reference semantics for the device.
//!
//! Nothing here routes photons through switches. The target output is built
//! directly from operator products per time bin, and the two-operator case
//! is additionally cross-checked with a three-qubit controlled-swap circuit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::schedule::{bin_count, operator_index};
use crate::state::{Complex, PhotonState, PolarizationOperator, PolarizationSpinor, Slot, NORM_TOL};

/// Device bins carrying the two control values of the two-operator
/// permutation at `N = M = 2`: control `|0>` (apply `U_1` then `U_0`) lives in
/// bin 2 (digits `10`), control `|1>` (apply `U_0` then `U_1`) in bin 1
/// (digits `01`).
pub const Q2_CONTROL_BINS: [usize; 2] = [2, 1];

/// Normalized amplitudes of the time-bin control register.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlRegister {
    amplitudes: BTreeMap<usize, Complex>,
}

impl ControlRegister {
    /// Normalizes arbitrary complex amplitudes. Duplicate bins are summed.
    pub fn new<I>(amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Complex)>,
    {
        let mut map: BTreeMap<usize, Complex> = BTreeMap::new();
        for (bin, a) in amplitudes {
            if !a.is_finite() {
                return Err(Error::NonFinite("control amplitude"));
            }
            *map.entry(bin).or_default() += a;
        }
        let norm = map.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        for a in map.values_mut() {
            *a /= norm;
        }
        map.retain(|_, a| *a != Complex::new(0.0, 0.0));
        Ok(Self { amplitudes: map })
    }

    /// Equal real amplitudes over `bins`.
    pub fn uniform<I>(bins: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        Self::new(bins.into_iter().map(|b| (b, Complex::new(1.0, 0.0))))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex)> + '_ {
        self.amplitudes.iter().map(|(b, a)| (*b, *a))
    }

    pub fn bins(&self) -> impl Iterator<Item = usize> + '_ {
        self.amplitudes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn max_bin(&self) -> Option<usize> {
        self.amplitudes.keys().next_back().copied()
    }
}

/// Operator indices applied first-to-last to one time bin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorSequence {
    pub indices: Vec<usize>,
}

impl OperatorSequence {
    /// The sequence seen by bin `i` over `m` passes of an `n`-operator device.
    pub fn for_bin(i: usize, n: usize, m: usize) -> Result<Self> {
        let indices = (0..m).map(|k| operator_index(i, k, n, m)).collect::<Result<_>>()?;
        Ok(Self { indices })
    }

    /// `U_{l_{m-1}} ... U_{l_1} U_{l_0}`
    pub fn product(&self, operators: &[PolarizationOperator]) -> Result<PolarizationOperator> {
        let mut acc = PolarizationOperator::identity();
        for &l in &self.indices {
            let op = operators.get(l).ok_or(Error::OutOfRange {
                what: "operator index",
                value: l,
                bound: operators.len(),
            })?;
            acc = op.matmul(&acc);
        }
        Ok(acc)
    }
}

fn check_unit(what: &'static str, norm_sqr: f64) -> Result<()> {
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { what, norm_sqr });
    }
    Ok(())
}

/// `alpha |0> (x) U_0 U_1 psi + beta |1> (x) U_1 U_0 psi`, with the control
/// value as the time bin of a one-mode, two-bin state.
pub fn q2_permute(
    u0: &PolarizationOperator,
    u1: &PolarizationOperator,
    alpha: Complex,
    beta: Complex,
    psi: &PolarizationSpinor,
) -> Result<PhotonState> {
    check_unit("control qubit", alpha.norm_sqr() + beta.norm_sqr())?;
    check_unit("input qubit", psi.norm_sqr())?;
    let branch0 = u0.matmul(u1).apply(psi).scale(alpha);
    let branch1 = u1.matmul(u0).apply(psi).scale(beta);
    PhotonState::from_slots(1, 2, [(Slot::new(0, 0), branch0), (Slot::new(1, 0), branch1)])
}

/// Re-labels a two-bin, one-mode result onto the `N = M = 2` device register
/// using [`Q2_CONTROL_BINS`].
pub fn q2_to_device_bins(q2: &PhotonState) -> Result<PhotonState> {
    let slots = q2
        .iter()
        .map(|(slot, s)| (Slot::new(Q2_CONTROL_BINS[slot.bin], 0), *s));
    PhotonState::from_slots(2, 4, slots)
}

/// `sum_i alpha_i O_i psi` on `(t_i, x_0)`, where `O_i` multiplies the
/// operators named by the base-`n` digits of `i`.
pub fn meta_operator_output(
    operators: &[PolarizationOperator],
    control: &ControlRegister,
    psi: &PolarizationSpinor,
    n: usize,
    m: usize,
) -> Result<PhotonState> {
    if operators.len() != n {
        return Err(Error::Config(format!("expected {n} operators, got {}", operators.len())));
    }
    let bins = bin_count(n, m)?;
    let mut out = PhotonState::empty(n, bins);
    for (i, alpha) in control.iter() {
        let o = OperatorSequence::for_bin(i, n, m)?.product(operators)?;
        out.insert(Slot::new(i, 0), o.apply(psi).scale(alpha))?;
    }
    Ok(out)
}

/// Three-qubit register `|control, data, ancilla>` as an 8-vector, index
/// `4c + 2d + a`.
#[derive(Clone, Debug)]
struct ThreeQubit([Complex; 8]);

#[derive(Clone, Copy)]
enum Wire {
    Data,
    Ancilla,
}

impl ThreeQubit {
    fn product(control: [Complex; 2], data: &PolarizationSpinor, ancilla: &PolarizationSpinor) -> Self {
        let d = [data.h, data.v];
        let a = [ancilla.h, ancilla.v];
        let mut v = [Complex::new(0.0, 0.0); 8];
        for c in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    v[4 * c + 2 * x + y] = control[c] * d[x] * a[y];
                }
            }
        }
        Self(v)
    }

    fn apply(&mut self, op: &PolarizationOperator, wire: Wire) {
        let m = op.matrix();
        let v = &mut self.0;
        for c in 0..2 {
            for other in 0..2 {
                let (i0, i1) = match wire {
                    Wire::Data => (4 * c + other, 4 * c + 2 + other),
                    Wire::Ancilla => (4 * c + 2 * other, 4 * c + 2 * other + 1),
                };
                let (x, y) = (v[i0], v[i1]);
                v[i0] = m[0][0] * x + m[0][1] * y;
                v[i1] = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    /// Swaps data and ancilla where the control equals `on_value`.
    fn controlled_swap(&mut self, on_value: usize) {
        let base = 4 * on_value;
        self.0.swap(base + 1, base + 2);
    }

    /// Splits off the ancilla. Returns the `(control, data)` amplitudes
    /// `phi[2c + d]` and the weight left outside the leading Schmidt term.
    fn trace_out_ancilla(&self) -> ([Complex; 4], f64) {
        // rows: (c, d), columns: ancilla
        let col = |a: usize| -> [Complex; 4] { [self.0[a], self.0[2 + a], self.0[4 + a], self.0[6 + a]] };
        let cols = [col(0), col(1)];
        // Gram matrix of the two columns; its smaller eigenvalue is the
        // residual Schmidt weight.
        let g00: f64 = cols[0].iter().map(|z| z.norm_sqr()).sum();
        let g11: f64 = cols[1].iter().map(|z| z.norm_sqr()).sum();
        let g01: Complex = cols[0].iter().zip(&cols[1]).map(|(x, y)| x.conj() * y).sum();
        let tr = g00 + g11;
        let det = g00 * g11 - g01.norm_sqr();
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let weight = (tr / 2.0 - disc).max(0.0);
        let pick = if g00 >= g11 { 0 } else { 1 };
        let norm = cols[pick].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut phi = cols[pick];
        for z in &mut phi {
            *z /= norm;
        }
        (phi, weight)
    }
}

/// Reference state of the ancilla wire.
const ANCILLA: PolarizationSpinor = PolarizationSpinor::H;

fn circuit_output(t: &ThreeQubit) -> Result<PhotonState> {
    let (phi, weight) = t.trace_out_ancilla();
    if weight > NORM_TOL {
        return Err(Error::AncillaEntangled { weight });
    }
    PhotonState::from_slots(
        1,
        2,
        [
            (Slot::new(0, 0), PolarizationSpinor::new(phi[0], phi[1])),
            (Slot::new(1, 0), PolarizationSpinor::new(phi[2], phi[3])),
        ],
    )
}

/// Controlled-swap circuit for the two-operator permutation on the wires
/// `(control, data, ancilla)`.
///
/// A controlled swap parks the data qubit on the ancilla wire, so the
/// operator on the data wire acts on it only for one control value:
///
/// 1. swap if `c = 0`, `U_0` on data, swap if `c = 0` (so `U_0` acts on psi iff `c = 1`)
/// 2. `U_1` on data
/// 3. swap if `c = 1`, `U_0` on data, swap if `c = 1` (so `U_0` acts on psi iff `c = 0`)
///
/// In both branches the ancilla absorbs exactly one `U_0`, so it ends as
/// `U_0 |a>` and factors out. The result is returned up to a global phase
/// in the layout of [`q2_permute`].
pub fn circuit_n2(
    u0: &PolarizationOperator,
    u1: &PolarizationOperator,
    alpha: Complex,
    beta: Complex,
    psi: &PolarizationSpinor,
) -> Result<PhotonState> {
    check_unit("control qubit", alpha.norm_sqr() + beta.norm_sqr())?;
    check_unit("input qubit", psi.norm_sqr())?;
    let mut t = ThreeQubit::product([alpha, beta], psi, &ANCILLA);
    t.controlled_swap(0);
    t.apply(u0, Wire::Data);
    t.controlled_swap(0);
    t.apply(u1, Wire::Data);
    t.controlled_swap(1);
    t.apply(u0, Wire::Data);
    t.controlled_swap(1);
    circuit_output(&t)
}

/// The two-copy layout drawn for the two-operator permutation: controlled
/// swap, `U_0 U_1` on the data wire and `U_1 U_0` on the ancilla wire, then
/// a second controlled swap.
///
/// Returns the residual Schmidt weight between `(control, data)` and the
/// ancilla. It vanishes only when `U_0 U_1 |a>` and `U_1 U_0 |a>` agree up
/// to phase, so for generic operators this layout leaves the ancilla
/// entangled with the control.
pub fn two_copy_layout_entanglement(
    u0: &PolarizationOperator,
    u1: &PolarizationOperator,
    alpha: Complex,
    beta: Complex,
    psi: &PolarizationSpinor,
) -> f64 {
    let mut t = ThreeQubit::product([alpha, beta], psi, &ANCILLA);
    t.controlled_swap(1);
    t.apply(&u0.matmul(u1), Wire::Data);
    t.apply(&u1.matmul(u0), Wire::Ancilla);
    t.controlled_swap(1);
    t.trace_out_ancilla().1
}

/// Resource comparison for `n` operators: switches used by the device and
/// copies of each operator needed by the circuit model.
///
/// The circuit model also needs O(n^2) ancillary operators; that count is
/// not computed here.
pub fn resource_counts(n: usize) -> Result<(usize, usize)> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidModeCount(n));
    }
    Ok((2 * n - 2, n))
}

/// Haar-random 2x2 unitary from a seeded generator.
pub fn haar_random_unitary(seed: u64) -> PolarizationOperator {
    haar_unitary_from_rng(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im)
}

/// Gram-Schmidt on a complex Ginibre matrix, which yields the Haar measure
/// on U(2).
pub fn haar_unitary_from_rng<R: Rng + ?Sized>(rng: &mut R) -> PolarizationOperator {
    loop {
        let a = [gaussian_complex(rng), gaussian_complex(rng)];
        let b = [gaussian_complex(rng), gaussian_complex(rng)];
        let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
        if na < 1e-12 {
            continue;
        }
        let e0 = [a[0] / na, a[1] / na];
        let proj = e0[0].conj() * b[0] + e0[1].conj() * b[1];
        let r = [b[0] - proj * e0[0], b[1] - proj * e0[1]];
        let nr = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
        if nr < 1e-12 {
            continue;
        }
        let e1 = [r[0] / nr, r[1] / nr];
        return PolarizationOperator::from_matrix_unchecked([[e0[0], e1[0]], [e0[1], e1[1]]]);
    }
}

/// Uniformly random pure polarization state.
pub fn random_spinor<R: Rng + ?Sized>(rng: &mut R) -> PolarizationSpinor {
    loop {
        let s = PolarizationSpinor::new(gaussian_complex(rng), gaussian_complex(rng));
        if let Ok(s) = s.normalized() {
            return s;
        }
    }
}

/// Random control register over `bins` with Gaussian complex amplitudes.
pub fn random_control<R, I>(rng: &mut R, bins: I) -> ControlRegister
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = usize>,
{
    let amps: Vec<_> = bins.into_iter().map(|b| (b, gaussian_complex(rng))).collect();
    // a zero draw across every bin has probability zero
    ControlRegister::new(amps).expect("non-degenerate Gaussian draw")
}
