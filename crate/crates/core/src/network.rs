//! Device topology and propagation.
//!
//! Two binary trees of 2x2 switches: the multiplexer `S[p,q]` fans the input
//! mode `x_0` out to `N` leaf modes, each leaf `x_l` feeds operator `U_l`, and
//! the demultiplexer `S'[p,q]` folds the leaves back onto its root. The root
//! pair is joined by a feedback loop on `x_{N/2}`.
//!
//! Switch `[p,q]` acts on modes `q*N/2^p` (port a) and `(2q+1)*N/2^(p+1)`
//! (port b). A switch that is on exchanges its two ports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{PhotonState, PolarizationOperator, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Mux,
    Demux,
}

/// Identity of one switch: tree side, level `p` and index `q < 2^p` within
/// the level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SwitchId {
    pub side: Side,
    pub level: u32,
    pub index: usize,
}

impl SwitchId {
    pub fn mux(level: u32, index: usize) -> Self {
        Self {
            side: Side::Mux,
            level,
            index,
        }
    }

    pub fn demux(level: u32, index: usize) -> Self {
        Self {
            side: Side::Demux,
            level,
            index,
        }
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }
}

impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prime = match self.side {
            Side::Mux => "",
            Side::Demux => "'",
        };
        write!(f, "S{}[{},{}]", prime, self.level, self.index)
    }
}

impl FromStr for SwitchId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed switch id `{s}`"));
        let rest = s.strip_prefix('S').ok_or_else(bad)?;
        let (side, rest) = match rest.strip_prefix('\'') {
            Some(r) => (Side::Demux, r),
            None => (Side::Mux, rest),
        };
        let inner = rest
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        let (p, q) = inner.split_once(',').ok_or_else(bad)?;
        let level: u32 = p.trim().parse().map_err(|_| bad())?;
        let index: usize = q.trim().parse().map_err(|_| bad())?;
        if level >= usize::BITS || index >= 1usize << level {
            return Err(bad());
        }
        Ok(Self { side, level, index })
    }
}

impl From<SwitchId> for String {
    fn from(id: SwitchId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for SwitchId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwitchSetting {
    pub id: SwitchId,
    pub on: bool,
}

/// A switch together with the two spatial modes it couples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwitchPorts {
    pub id: SwitchId,
    pub mode_a: usize,
    pub mode_b: usize,
}

/// Key of one logical switch setting: which switch, which time bin, which
/// pass through the device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingKey {
    pub switch: SwitchId,
    pub bin: usize,
    pub iteration: usize,
}

/// Source of on/off decisions for the propagation engine.
pub trait SwitchSettings {
    fn setting(&self, switch: SwitchId, bin: usize, iteration: usize) -> Option<bool>;
}

impl SwitchSettings for BTreeMap<SettingKey, bool> {
    fn setting(&self, switch: SwitchId, bin: usize, iteration: usize) -> Option<bool> {
        self.get(&SettingKey {
            switch,
            bin,
            iteration,
        })
        .copied()
    }
}

impl<F> SwitchSettings for F
where
    F: Fn(SwitchId, usize, usize) -> Option<bool>,
{
    fn setting(&self, switch: SwitchId, bin: usize, iteration: usize) -> Option<bool> {
        self(switch, bin, iteration)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchNetwork {
    n_modes: usize,
    levels: u32,
    mux: Vec<SwitchPorts>,
    demux: Vec<SwitchPorts>,
    operator_on_mode: Vec<Option<usize>>,
}

impl SwitchNetwork {
    /// Builds both trees for `n` spatial modes (`n` a power of two, `n >= 2`).
    pub fn build(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidModeCount(n));
        }
        let levels = n.trailing_zeros();
        let tree = |side| {
            let mut v = Vec::with_capacity(n - 1);
            for p in 0..levels {
                for q in 0..(1usize << p) {
                    let (mode_a, mode_b) = Self::ports_formula(n, p, q);
                    v.push(SwitchPorts {
                        id: SwitchId {
                            side,
                            level: p,
                            index: q,
                        },
                        mode_a,
                        mode_b,
                    });
                }
            }
            v
        };
        Ok(Self {
            n_modes: n,
            levels,
            mux: tree(Side::Mux),
            demux: tree(Side::Demux),
            operator_on_mode: (0..n).map(Some).collect(),
        })
    }

    /// `(2qN/2^(p+1), (2q+1)N/2^(p+1))`
    fn ports_formula(n: usize, p: u32, q: usize) -> (usize, usize) {
        let denom = 1usize << (p + 1);
        (2 * q * n / denom, (2 * q + 1) * n / denom)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Tree depth `log2 N`.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Mode shared by the demux root output and the mux root input.
    pub fn feedback_mode(&self) -> usize {
        self.n_modes / 2
    }

    pub fn switches(&self, side: Side) -> &[SwitchPorts] {
        match side {
            Side::Mux => &self.mux,
            Side::Demux => &self.demux,
        }
    }

    /// Every switch in the device, mux tree first, each in level order.
    pub fn all_switches(&self) -> impl Iterator<Item = &SwitchPorts> {
        self.mux.iter().chain(self.demux.iter())
    }

    pub fn switch_count(&self) -> usize {
        self.mux.len() + self.demux.len()
    }

    pub fn ports(&self, id: SwitchId) -> Option<&SwitchPorts> {
        if id.level >= self.levels || id.index >= (1usize << id.level) {
            return None;
        }
        let flat = (1usize << id.level) - 1 + id.index;
        self.switches(id.side).get(flat)
    }

    fn level(&self, side: Side, p: u32) -> &[SwitchPorts] {
        let start = (1usize << p) - 1;
        &self.switches(side)[start..start + (1usize << p)]
    }

    /// Operator index wired to leaf mode `x_mode`.
    pub fn operator_on_mode(&self, mode: usize) -> Option<usize> {
        self.operator_on_mode.get(mode).copied().flatten()
    }

    /// Detaches the operator at `mode`; used to exercise topology errors.
    pub fn without_operator(mut self, mode: usize) -> Self {
        if let Some(slot) = self.operator_on_mode.get_mut(mode) {
            *slot = None;
        }
        self
    }

    /// Exchanges `(bin, a)` and `(bin, b)` of the switch when `on`.
    pub fn apply_switch(&self, state: &PhotonState, id: SwitchId, on: bool, bin: usize) -> Result<PhotonState> {
        let ports = self.ports(id).ok_or_else(|| Error::Config(format!("{id} not in network")))?;
        if bin >= state.n_bins() {
            return Err(Error::OutOfRange {
                what: "time bin",
                value: bin,
                bound: state.n_bins(),
            });
        }
        let mut out = state.clone();
        if on {
            out.swap_modes(bin, ports.mode_a, ports.mode_b);
        }
        Ok(out)
    }

    /// Advances `state` by one pass: down the mux tree, through the operator
    /// bank, up the demux tree.
    ///
    /// Every slot must enter on a root input port (`x_0` or `x_{N/2}`) and
    /// must leave on a root output port; anything else is reported as a
    /// routing error.
    pub fn propagate_iteration<S>(
        &self,
        state: &PhotonState,
        settings: &S,
        operators: &[PolarizationOperator],
        iteration: usize,
    ) -> Result<PhotonState>
    where
        S: SwitchSettings + ?Sized,
    {
        let n = self.n_modes;
        if state.n_modes() != n {
            return Err(Error::DimensionMismatch(n, state.n_bins(), state.n_modes(), state.n_bins()));
        }
        let fb = self.feedback_mode();
        let mut out = PhotonState::empty(n, state.n_bins());
        for (slot, spinor) in state.iter() {
            if slot.mode != 0 && slot.mode != fb {
                return Err(Error::BadEntryPort {
                    bin: slot.bin,
                    mode: slot.mode,
                    iteration,
                    expected: if iteration == 0 { 0 } else { fb },
                });
            }
            let bin = slot.bin;
            let mut mode = slot.mode;
            for p in 0..self.levels {
                mode = self.route_through_level(Side::Mux, p, mode, bin, iteration, settings)?;
            }
            let op_index = self
                .operator_on_mode(mode)
                .ok_or(Error::MissingOperator { mode })?;
            let op = operators
                .get(op_index)
                .ok_or(Error::MissingOperator { mode })?;
            let spinor = op.apply(spinor);
            for p in (0..self.levels).rev() {
                mode = self.route_through_level(Side::Demux, p, mode, bin, iteration, settings)?;
            }
            if mode != 0 && mode != fb {
                return Err(Error::Misrouted {
                    bin,
                    mode,
                    iteration,
                    expected: fb,
                });
            }
            out.insert_new(Slot::new(bin, mode), spinor)?;
        }
        Ok(out)
    }

    /// Moves a photon on `mode` through level `p` of one tree. Modes that
    /// are not ports of any switch at this level pass untouched.
    fn route_through_level<S>(
        &self,
        side: Side,
        p: u32,
        mode: usize,
        bin: usize,
        iteration: usize,
        settings: &S,
    ) -> Result<usize>
    where
        S: SwitchSettings + ?Sized,
    {
        let block = self.n_modes >> p;
        let ports = &self.level(side, p)[mode / block];
        if mode != ports.mode_a && mode != ports.mode_b {
            return Ok(mode);
        }
        let on = settings
            .setting(ports.id, bin, iteration)
            .ok_or(Error::MissingSetting {
                switch: ports.id,
                bin,
                iteration,
            })?;
        Ok(match (on, mode == ports.mode_a) {
            (false, _) => mode,
            (true, true) => ports.mode_b,
            (true, false) => ports.mode_a,
        })
    }

    /// Child switches fed by the two outputs of a mux switch (port a then
    /// port b), or `None` at the leaf level.
    pub fn children(&self, id: SwitchId) -> Option<(SwitchId, SwitchId)> {
        if id.level + 1 >= self.levels {
            return None;
        }
        let mk = |index| SwitchId {
            side: id.side,
            level: id.level + 1,
            index,
        };
        Some((mk(2 * id.index), mk(2 * id.index + 1)))
    }
}
