//! Pulse schedule compiler.
//!
//! Time bin `t_i` on pass `k` is sent through operator `U_l`, where `l` is
//! the `k`-th most significant base-`N` digit of `i`. Each `(bin, pass)`
//! therefore fixes a root-to-leaf path in the mux tree and its mirror in the
//! demux tree. The root switches additionally decide whether the photon
//! enters from `x_0` or the feedback port, and whether it leaves on `x_0` or
//! goes round the loop again.
//!
//! The logical table is then laid out in device time: bin `i` reaches the
//! mux root on pass `k` at `i * bin_spacing + k * loop_delay`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{SettingKey, Side, SwitchId, SwitchNetwork, SwitchSetting, SwitchSettings};

pub const DEFAULT_SWITCH_WINDOW_PS: f64 = 10.0;
pub const DEFAULT_TRANSITION_PS: f64 = 5.0;

pub const BIN_SPACING_CONSTRAINT: &str = "binSpacing ≥ switchWindow + transition";
pub const LOOP_DELAY_CONSTRAINT: &str = "loopDelay ≥ N^M · binSpacing";

/// `n^m`, or an overflow error.
pub fn bin_count(n: usize, m: usize) -> Result<usize> {
    u32::try_from(m)
        .ok()
        .and_then(|m| n.checked_pow(m))
        .ok_or_else(|| Error::Overflow(format!("{n}^{m} time bins does not fit in usize")))
}

/// Index `l` of the operator applied to bin `i` on pass `k`:
/// `floor(i / n^(m-1-k)) mod n`.
pub fn operator_index(i: usize, k: usize, n: usize, m: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidModeCount(n));
    }
    let bins = bin_count(n, m)?;
    if i >= bins {
        return Err(Error::OutOfRange {
            what: "time bin",
            value: i,
            bound: bins,
        });
    }
    if k >= m {
        return Err(Error::OutOfRange {
            what: "iteration",
            value: k,
            bound: m,
        });
    }
    Ok((i / n.pow((m - 1 - k) as u32)) % n)
}

/// Time bins in `[0, n^n)` whose `n` base-`n` digits are all distinct, i.e.
/// the bins that see each operator exactly once.
pub fn permutation_bins(n: usize) -> BTreeSet<usize> {
    fn extend(n: usize, used: &mut Vec<bool>, prefix: usize, depth: usize, out: &mut BTreeSet<usize>) {
        if depth == n {
            out.insert(prefix);
            return;
        }
        for d in 0..n {
            if !used[d] {
                used[d] = true;
                extend(n, used, prefix * n + d, depth + 1, out);
                used[d] = false;
            }
        }
    }
    let mut out = BTreeSet::new();
    if n == 0 {
        return out;
    }
    extend(n, &mut vec![false; n], 0, 0, &mut out);
    out
}

/// Path settings for sending a photon from the tree root to leaf `x_l`
/// (mux) or from `x_l` to the root output `x_0` (demux). Switches off the
/// path are off. Listed in the network's level order.
pub fn route_settings(l: usize, net: &SwitchNetwork, side: Side) -> Vec<SwitchSetting> {
    let levels = net.levels();
    net.switches(side)
        .iter()
        .map(|sw| {
            let p = sw.id.level;
            let on_path = (l >> (levels - p)) == sw.id.index;
            let bit = (l >> (levels - 1 - p)) & 1 == 1;
            SwitchSetting {
                id: sw.id,
                on: on_path && bit,
            }
        })
        .collect()
}

/// Root switch settings `(S[0,0], S'[0,0])` for pass `k` of `m` towards
/// operator `l`.
///
/// On pass 0 the photon enters `S[0,0]` on `x_0`, later passes on the
/// feedback port `x_{N/2}`; it must leave towards the half containing `x_l`.
/// `S'[0,0]` receives it from that half and must emit on `x_0` after the
/// last pass and on `x_{N/2}` otherwise.
pub fn boundary_settings(k: usize, l: usize, n: usize, m: usize) -> (bool, bool) {
    let upper = l >= n / 2;
    let enters_on_feedback = k > 0;
    let exits_on_feedback = k + 1 < m;
    (upper != enters_on_feedback, upper != exits_on_feedback)
}

/// Timing and size parameters of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    pub n: usize,
    pub m: usize,
    pub bin_spacing_ps: f64,
    pub loop_delay_ps: f64,
    #[serde(default = "default_window")]
    pub switch_window_ps: f64,
    #[serde(default = "default_transition")]
    pub transition_ps: f64,
    /// Propagation delay between consecutive tree levels.
    #[serde(default)]
    pub level_latency_ps: f64,
}

fn default_window() -> f64 {
    DEFAULT_SWITCH_WINDOW_PS
}

fn default_transition() -> f64 {
    DEFAULT_TRANSITION_PS
}

impl SchedulerParams {
    pub fn new(n: usize, m: usize, bin_spacing_ps: f64, loop_delay_ps: f64) -> Self {
        Self {
            n,
            m,
            bin_spacing_ps,
            loop_delay_ps,
            switch_window_ps: DEFAULT_SWITCH_WINDOW_PS,
            transition_ps: DEFAULT_TRANSITION_PS,
            level_latency_ps: 0.0,
        }
    }

    pub fn n_bins(&self) -> Result<usize> {
        bin_count(self.n, self.m)
    }

    /// Checks structural and timing feasibility, naming the violated
    /// constraint on failure.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::InvalidModeCount(self.n));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        let times = [
            ("bin_spacing_ps", self.bin_spacing_ps),
            ("loop_delay_ps", self.loop_delay_ps),
            ("switch_window_ps", self.switch_window_ps),
            ("transition_ps", self.transition_ps),
            ("level_latency_ps", self.level_latency_ps),
        ];
        for (name, t) in times {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {t}")));
            }
        }
        if self.switch_window_ps <= 0.0 {
            return Err(Error::Config("switch_window_ps must be positive".into()));
        }
        let bins = self.n_bins()?;
        let need = self.switch_window_ps + self.transition_ps;
        if self.bin_spacing_ps < need {
            return Err(Error::Infeasible {
                constraint: BIN_SPACING_CONSTRAINT,
                detail: format!(
                    "bin spacing {} ps < window {} ps + transition {} ps = {} ps",
                    self.bin_spacing_ps, self.switch_window_ps, self.transition_ps, need
                ),
            });
        }
        let span = bins as f64 * self.bin_spacing_ps;
        if self.loop_delay_ps < span {
            return Err(Error::Infeasible {
                constraint: LOOP_DELAY_CONSTRAINT,
                detail: format!(
                    "loop delay {} ps < {}^{} bins x {} ps = {} ps",
                    self.loop_delay_ps, self.n, self.m, self.bin_spacing_ps, span
                ),
            });
        }
        Ok(())
    }

    /// Instant at which bin `i` on pass `k` reaches `switch`.
    pub fn arrival_ps(&self, switch: SwitchId, levels: u32, i: usize, k: usize) -> f64 {
        let hops = match switch.side {
            Side::Mux => switch.level,
            Side::Demux => 2 * levels - 1 - switch.level,
        };
        i as f64 * self.bin_spacing_ps + k as f64 * self.loop_delay_ps + hops as f64 * self.level_latency_ps
    }
}

/// One control pulse holding `switch` on over `[start_ps, end_ps]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseInterval {
    pub switch: SwitchId,
    pub start_ps: f64,
    pub end_ps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LogicalEntry {
    switch: SwitchId,
    bin: usize,
    iteration: usize,
    on: bool,
}

#[derive(Serialize, Deserialize)]
struct ScheduleDocument {
    params: SchedulerParams,
    logical: Vec<LogicalEntry>,
    timeline: Vec<PulseInterval>,
}

/// Compiled switch program: logical on/off per `(switch, bin, pass)` and the
/// matching control-pulse timeline.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub params: SchedulerParams,
    pub logical: BTreeMap<SettingKey, bool>,
    pub timeline: Vec<PulseInterval>,
}

impl SwitchSettings for PulseSchedule {
    fn setting(&self, switch: SwitchId, bin: usize, iteration: usize) -> Option<bool> {
        self.logical.setting(switch, bin, iteration)
    }
}

/// Builds the schedule for the given occupied bins.
pub fn build_schedule(
    params: &SchedulerParams,
    net: &SwitchNetwork,
    occupied_bins: &BTreeSet<usize>,
) -> Result<PulseSchedule> {
    params.validate()?;
    if net.n_modes() != params.n {
        return Err(Error::ScheduleMismatch(format!(
            "network has {} modes, params ask for {}",
            net.n_modes(),
            params.n
        )));
    }
    let (n, m) = (params.n, params.m);
    let bins = params.n_bins()?;
    if let Some(&bad) = occupied_bins.iter().find(|&&b| b >= bins) {
        return Err(Error::OutOfRange {
            what: "occupied bin",
            value: bad,
            bound: bins,
        });
    }

    let mut logical = BTreeMap::new();
    for &i in occupied_bins {
        for k in 0..m {
            let l = operator_index(i, k, n, m)?;
            let (root, root_prime) = boundary_settings(k, l, n, m);
            for side in [Side::Mux, Side::Demux] {
                for s in route_settings(l, net, side) {
                    let on = match (s.id.is_root(), side) {
                        (true, Side::Mux) => root,
                        (true, Side::Demux) => root_prime,
                        (false, _) => s.on,
                    };
                    logical.insert(
                        SettingKey {
                            switch: s.id,
                            bin: i,
                            iteration: k,
                        },
                        on,
                    );
                }
            }
        }
    }

    let timeline = lay_out_pulses(params, net, &logical);
    Ok(PulseSchedule {
        params: params.clone(),
        logical,
        timeline,
    })
}

/// Turns "on" logical entries into pulse intervals centred on the photon's
/// arrival. Consecutive bins of one pass that are both on share a pulse.
fn lay_out_pulses(
    params: &SchedulerParams,
    net: &SwitchNetwork,
    logical: &BTreeMap<SettingKey, bool>,
) -> Vec<PulseInterval> {
    let half = params.switch_window_ps / 2.0;
    let levels = net.levels();
    // (switch, iteration) -> ascending on-bins
    let mut on_bins: BTreeMap<(SwitchId, usize), Vec<usize>> = BTreeMap::new();
    for (key, &on) in logical {
        if on {
            on_bins.entry((key.switch, key.iteration)).or_default().push(key.bin);
        }
    }
    let mut timeline = Vec::new();
    for ((switch, k), bins) in on_bins {
        let mut run_start = bins[0];
        let mut prev = bins[0];
        for &b in bins.iter().skip(1).chain(std::iter::once(&usize::MAX)) {
            if b != usize::MAX && b == prev + 1 {
                prev = b;
                continue;
            }
            timeline.push(PulseInterval {
                switch,
                start_ps: params.arrival_ps(switch, levels, run_start, k) - half,
                end_ps: params.arrival_ps(switch, levels, prev, k) + half,
            });
            run_start = b;
            prev = b;
        }
    }
    timeline.sort_by(|a, b| a.switch.cmp(&b.switch).then(a.start_ps.total_cmp(&b.start_ps)));
    timeline
}

impl PulseSchedule {
    /// Distinct bins covered by the logical table.
    pub fn occupied_bins(&self) -> BTreeSet<usize> {
        self.logical.keys().map(|k| k.bin).collect()
    }

    pub fn pulse_count(&self) -> usize {
        self.timeline.len()
    }

    /// Re-checks the timeline against the logical table: per-switch pulses
    /// are disjoint and separated by at least the transition time, a bin is
    /// on exactly when its arrival falls inside a pulse, and no two
    /// `(bin, pass)` pairs that meet a switch at the same instant disagree.
    pub fn check_consistency(&self, net: &SwitchNetwork) -> Result<()> {
        let p = &self.params;
        let levels = net.levels();
        let mut by_switch: BTreeMap<SwitchId, Vec<&PulseInterval>> = BTreeMap::new();
        for pulse in &self.timeline {
            if !(pulse.end_ps >= pulse.start_ps) {
                return Err(Error::TimelineInconsistent(format!(
                    "{} pulse ends before it starts",
                    pulse.switch
                )));
            }
            by_switch.entry(pulse.switch).or_default().push(pulse);
        }
        for (switch, pulses) in &mut by_switch {
            pulses.sort_by(|a, b| a.start_ps.total_cmp(&b.start_ps));
            for w in pulses.windows(2) {
                let gap = w[1].start_ps - w[0].end_ps;
                if gap < p.transition_ps - 1e-9 {
                    return Err(Error::TimelineInconsistent(format!(
                        "{switch}: pulses at {} ps and {} ps separated by {gap} ps < transition {} ps",
                        w[0].start_ps, w[1].start_ps, p.transition_ps
                    )));
                }
            }
        }

        // femtosecond-rounded instant -> setting
        let mut seen: BTreeMap<(SwitchId, i64), (usize, usize, bool)> = BTreeMap::new();
        for (key, &on) in &self.logical {
            let t = p.arrival_ps(key.switch, levels, key.bin, key.iteration);
            let inside = by_switch
                .get(&key.switch)
                .is_some_and(|ps| ps.iter().any(|x| x.start_ps <= t && t <= x.end_ps));
            if inside != on {
                return Err(Error::TimelineInconsistent(format!(
                    "{} bin {} pass {}: logical {} but arrival at {t} ps is {} a pulse",
                    key.switch,
                    key.bin,
                    key.iteration,
                    if on { "on" } else { "off" },
                    if inside { "inside" } else { "outside" }
                )));
            }
            let instant = (t * 1e3).round() as i64;
            if let Some(&(b, k, prev)) = seen.get(&(key.switch, instant)) {
                if prev != on {
                    return Err(Error::TimelineInconsistent(format!(
                        "{} at {t} ps: bin {b} pass {k} and bin {} pass {} need opposite settings",
                        key.switch, key.bin, key.iteration
                    )));
                }
            } else {
                seen.insert((key.switch, instant), (key.bin, key.iteration, on));
            }
        }
        Ok(())
    }

    /// Serializes to the schedule document format (stable ordering).
    pub fn to_json(&self) -> Result<String> {
        let doc = ScheduleDocument {
            params: self.params.clone(),
            logical: self
                .logical
                .iter()
                .map(|(k, &on)| LogicalEntry {
                    switch: k.switch,
                    bin: k.bin,
                    iteration: k.iteration,
                    on,
                })
                .collect(),
            timeline: self.timeline.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScheduleDocument = serde_json::from_str(text)?;
        let mut logical = BTreeMap::new();
        for e in doc.logical {
            let key = SettingKey {
                switch: e.switch,
                bin: e.bin,
                iteration: e.iteration,
            };
            if logical.insert(key, e.on).is_some() {
                return Err(Error::Config(format!(
                    "duplicate logical entry for {} bin {} iteration {}",
                    e.switch, e.bin, e.iteration
                )));
            }
        }
        Ok(Self {
            params: doc.params,
            logical,
            timeline: doc.timeline,
        })
    }
}

/// The tree-level activation rule exactly as printed for `p != 0`:
/// `(q+1) N/2^(p+1) <= l < (q+2) N/2^(p+1)`.
pub fn literal_level_rule(p: u32, q: usize, l: usize, n: usize) -> bool {
    let denom = 1usize << (p + 1);
    (q + 1) * n <= l * denom && l * denom < (q + 2) * n
}

/// The root rules exactly as printed, reading their index `j` as the pass
/// number. Returns `(S[0,0], S'[0,0])`.
pub fn literal_root_rules(j: usize, l: usize, n: usize, m: usize) -> (bool, bool) {
    let upper = l >= n / 2;
    let root = (j == 0 && upper) || (j != 0 && !upper);
    let root_prime = (j + 1 == m && upper) || (j != 0 && !upper);
    (root, root_prime)
}

/// One case where the printed activation rules and path-derived routing
/// disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleDisagreement {
    pub n: usize,
    pub switch: SwitchId,
    pub l: usize,
    /// Pass index and pass count, for root switches only.
    pub pass: Option<(usize, usize)>,
    pub printed: bool,
    pub derived: bool,
}

/// Compares the printed activation rules against path-derived routing for
/// every power-of-two `n` in `[2, max_n]`, every switch and every target
/// leaf. Root switches are compared for every pass of every pass count in
/// `pass_counts`.
pub fn compare_literal_rules(max_n: usize, pass_counts: &[usize]) -> Result<Vec<RuleDisagreement>> {
    let mut out = Vec::new();
    let mut n = 2;
    while n <= max_n {
        let net = SwitchNetwork::build(n)?;
        for l in 0..n {
            for side in [Side::Mux, Side::Demux] {
                for s in route_settings(l, &net, side) {
                    if s.id.is_root() {
                        continue;
                    }
                    let printed = literal_level_rule(s.id.level, s.id.index, l, n);
                    if printed != s.on {
                        out.push(RuleDisagreement {
                            n,
                            switch: s.id,
                            l,
                            pass: None,
                            printed,
                            derived: s.on,
                        });
                    }
                }
            }
            for &m in pass_counts {
                for k in 0..m {
                    let derived = boundary_settings(k, l, n, m);
                    let printed = literal_root_rules(k, l, n, m);
                    let pairs = [
                        (SwitchId::mux(0, 0), printed.0, derived.0),
                        (SwitchId::demux(0, 0), printed.1, derived.1),
                    ];
                    for (switch, printed, derived) in pairs {
                        if printed != derived {
                            out.push(RuleDisagreement {
                                n,
                                switch,
                                l,
                                pass: Some((k, m)),
                                printed,
                                derived,
                            });
                        }
                    }
                }
            }
        }
        n *= 2;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Base-n digits of i, most significant first, by repeated division.
    fn digits_msf(mut i: usize, n: usize, m: usize) -> Vec<usize> {
        let mut d = Vec::with_capacity(m);
        for _ in 0..m {
            d.push(i % n);
            i /= n;
        }
        d.reverse();
        d
    }

    #[test]
    fn operator_index_examples() {
        assert_eq!(operator_index(1, 0, 2, 2).unwrap(), 0);
        assert_eq!(operator_index(1, 1, 2, 2).unwrap(), 1);
        assert_eq!(operator_index(0, 0, 2, 2).unwrap(), 0);
        assert_eq!(operator_index(0, 1, 2, 2).unwrap(), 0);
        assert_eq!(digits_msf(57, 4, 3), vec![3, 2, 1]);
        let seq: Vec<_> = (0..3).map(|k| operator_index(57, k, 4, 3).unwrap()).collect();
        assert_eq!(seq, vec![3, 2, 1]);
    }

    #[test]
    fn operator_index_matches_digit_oracle_exhaustively() {
        for (n, m) in [(2, 1), (2, 5), (2, 12), (3, 4), (4, 3), (4, 6), (8, 4), (16, 3)] {
            let bins = bin_count(n, m).unwrap();
            assert!(bins <= 4096);
            for i in 0..bins {
                let seq: Vec<_> = (0..m).map(|k| operator_index(i, k, n, m).unwrap()).collect();
                assert_eq!(seq, digits_msf(i, n, m), "n={n} m={m} i={i}");
                let back = seq.iter().fold(0, |acc, &d| acc * n + d);
                assert_eq!(back, i);
            }
        }
    }

    #[test]
    fn operator_index_range_errors() {
        assert!(matches!(operator_index(4, 0, 2, 2), Err(Error::OutOfRange { .. })));
        assert!(matches!(operator_index(0, 2, 2, 2), Err(Error::OutOfRange { .. })));
        assert!(matches!(operator_index(0, 0, 16, 64), Err(Error::Overflow(_))));
    }

    /// Enumerates every digit string and keeps those with distinct digits.
    fn permutation_bins_brute(n: usize) -> BTreeSet<usize> {
        let bins = n.pow(n as u32);
        (0..bins)
            .filter(|&i| {
                let d = digits_msf(i, n, n);
                let set: BTreeSet<_> = d.iter().collect();
                set.len() == n
            })
            .collect()
    }

    #[test]
    fn permutation_bins_examples() {
        assert_eq!(permutation_bins(2), BTreeSet::from([1, 2]));
        assert_eq!(permutation_bins(3).len(), 6);
        assert_eq!(permutation_bins(1), BTreeSet::from([0]));
        for n in 1..=6 {
            assert_eq!(permutation_bins(n), permutation_bins_brute(n), "n={n}");
        }
    }

    /// Walks the mux tree by explicit parent -> child links, using only
    /// "on means take the second child".
    fn walk_mux(net: &SwitchNetwork, settings: &[SwitchSetting]) -> usize {
        let on = |id: SwitchId| settings.iter().find(|s| s.id == id).unwrap().on;
        let mut id = SwitchId::mux(0, 0);
        loop {
            let take_b = on(id);
            match net.children(id) {
                Some((a, b)) => id = if take_b { b } else { a },
                None => return 2 * id.index + usize::from(take_b),
            }
        }
    }

    #[test]
    fn route_settings_examples() {
        let n2 = SwitchNetwork::build(2).unwrap();
        assert_eq!(
            route_settings(1, &n2, Side::Mux),
            vec![SwitchSetting {
                id: SwitchId::mux(0, 0),
                on: true
            }]
        );

        let n8 = SwitchNetwork::build(8).unwrap();
        assert!(route_settings(0, &n8, Side::Mux).iter().all(|s| !s.on));

        let five = route_settings(5, &n8, Side::Mux);
        let get = |p, q| five.iter().find(|s| s.id == SwitchId::mux(p, q)).unwrap().on;
        assert!(get(0, 0));
        assert!(!get(1, 1));
        assert!(get(2, 2));
        assert_eq!(five.iter().filter(|s| s.on).count(), 2);
        assert_eq!(walk_mux(&n8, &five), 5);
    }

    #[test]
    fn route_settings_reach_every_leaf() {
        for n in [2, 4, 8, 16] {
            let net = SwitchNetwork::build(n).unwrap();
            for l in 0..n {
                assert_eq!(walk_mux(&net, &route_settings(l, &net, Side::Mux)), l);
            }
        }
    }

    #[test]
    fn boundary_examples() {
        let (n, m) = (8, 3);
        assert!(boundary_settings(0, 4, n, m).0);
        assert!(boundary_settings(0, 7, n, m).0);
        assert!(!boundary_settings(0, 3, n, m).0);
        assert!(boundary_settings(m - 1, 5, n, m).1);
        assert!(!boundary_settings(m - 1, 2, n, m).1);
        // middle passes: enter and leave via feedback
        assert!(boundary_settings(1, 0, n, m).0);
        assert!(!boundary_settings(1, 6, n, m).0);
        assert!(boundary_settings(1, 0, n, m).1);
        assert!(!boundary_settings(1, 6, n, m).1);
    }

    #[test]
    fn bin_spacing_constraint() {
        let p = SchedulerParams::new(2, 2, 12.0, 200.0);
        match p.validate() {
            Err(Error::Infeasible { constraint, .. }) => assert_eq!(constraint, BIN_SPACING_CONSTRAINT),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(SchedulerParams::new(2, 2, 15.0, 60.0).validate().is_ok());
    }

    #[test]
    fn loop_delay_constraint() {
        let p = SchedulerParams::new(2, 2, 40.0, 100.0);
        match p.validate() {
            Err(Error::Infeasible { constraint, .. }) => assert_eq!(constraint, LOOP_DELAY_CONSTRAINT),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(SchedulerParams::new(2, 2, 40.0, 160.0).validate().is_ok());
        assert!(SchedulerParams::new(2, 2, 40.0, 200.0).validate().is_ok());
    }

    #[test]
    fn schedule_n2_m2_shape() {
        let params = SchedulerParams::new(2, 2, 40.0, 200.0);
        let net = SwitchNetwork::build(2).unwrap();
        let s = build_schedule(&params, &net, &BTreeSet::from([1, 2])).unwrap();
        // 2 bins x 2 passes x 2 switches
        assert_eq!(s.logical.len(), 8);
        let on = |sw, bin, it| s.logical[&SettingKey { switch: sw, bin, iteration: it }];
        let (mux, demux) = (SwitchId::mux(0, 0), SwitchId::demux(0, 0));
        // bin 1 = digits 01: U_0 then U_1
        assert!(!on(mux, 1, 0) && on(demux, 1, 0));
        assert!(!on(mux, 1, 1) && on(demux, 1, 1));
        // bin 2 = digits 10: U_1 then U_0
        assert!(on(mux, 2, 0) && !on(demux, 2, 0));
        assert!(on(mux, 2, 1) && !on(demux, 2, 1));
        s.check_consistency(&net).unwrap();
    }

    #[test]
    fn adjacent_on_bins_share_a_pulse() {
        let params = SchedulerParams::new(2, 1, 20.0, 40.0);
        let net = SwitchNetwork::build(2).unwrap();
        // m = 1: bin 1 goes through U_1, S[0,0] and S'[0,0] both on.
        let s = build_schedule(&params, &net, &BTreeSet::from([0, 1])).unwrap();
        assert_eq!(s.pulse_count(), 2);
        let mux_pulse = s.timeline.iter().find(|p| p.switch == SwitchId::mux(0, 0)).unwrap();
        assert_eq!((mux_pulse.start_ps, mux_pulse.end_ps), (15.0, 25.0));

        let params = SchedulerParams::new(4, 1, 20.0, 80.0);
        let net = SwitchNetwork::build(4).unwrap();
        let s = build_schedule(&params, &net, &BTreeSet::from([2, 3])).unwrap();
        let root: Vec<_> = s.timeline.iter().filter(|p| p.switch == SwitchId::mux(0, 0)).collect();
        assert_eq!(root.len(), 1);
        assert_eq!((root[0].start_ps, root[0].end_ps), (35.0, 65.0));
        s.check_consistency(&net).unwrap();
    }

    #[test]
    fn level_latency_shifts_pulses() {
        let mut params = SchedulerParams::new(4, 2, 20.0, 400.0);
        params.level_latency_ps = 7.0;
        let net = SwitchNetwork::build(4).unwrap();
        let s = build_schedule(&params, &net, &(0..16).collect()).unwrap();
        s.check_consistency(&net).unwrap();
        let leaf = SwitchId::mux(1, 0);
        let first = s.timeline.iter().find(|p| p.switch == leaf).unwrap();
        // bins 4..=7 target x_1 on pass 0; the leaf switch sits one hop below the root
        assert_eq!((first.start_ps, first.end_ps), (4.0 * 20.0 + 7.0 - 5.0, 7.0 * 20.0 + 7.0 + 5.0));
    }

    #[test]
    fn consistency_check_catches_tampering() {
        let params = SchedulerParams::new(2, 2, 40.0, 200.0);
        let net = SwitchNetwork::build(2).unwrap();
        let mut s = build_schedule(&params, &net, &BTreeSet::from([1, 2])).unwrap();
        s.timeline.pop();
        assert!(matches!(s.check_consistency(&net), Err(Error::TimelineInconsistent(_))));
    }

    #[test]
    fn rejects_out_of_range_bins() {
        let params = SchedulerParams::new(2, 2, 40.0, 200.0);
        let net = SwitchNetwork::build(2).unwrap();
        assert!(matches!(
            build_schedule(&params, &net, &BTreeSet::from([4])),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let params = SchedulerParams::new(4, 2, 20.0, 400.0);
        let net = SwitchNetwork::build(4).unwrap();
        let s = build_schedule(&params, &net, &(0..16).step_by(3).collect()).unwrap();
        let text = s.to_json().unwrap();
        let back = PulseSchedule::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn literal_rule_disagrees_at_n8_l5() {
        // printed rule lights S[2,2] only for l = 3
        let lit: Vec<_> = (0..8).filter(|&l| literal_level_rule(2, 2, l, 8)).collect();
        assert_eq!(lit, vec![3]);
        let report = compare_literal_rules(8, &[1, 2, 3]).unwrap();
        assert!(report
            .iter()
            .any(|d| d.n == 8 && d.l == 5 && d.switch == SwitchId::mux(2, 2) && d.derived && !d.printed));
    }

    #[test]
    fn printed_mux_root_rule_matches_derived() {
        for n in [2, 4, 8] {
            for m in 1..4 {
                for k in 0..m {
                    for l in 0..n {
                        assert_eq!(literal_root_rules(k, l, n, m).0, boundary_settings(k, l, n, m).0);
                    }
                }
            }
        }
    }
}
