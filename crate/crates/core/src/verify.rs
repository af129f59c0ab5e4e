//! Seeded randomized property suite behind `qpermute verify`.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigFile, SimulationConfig};
use crate::device::{input_state, run_device, run_device_with, schedule_for};
use crate::error::{Error, Result};
use crate::network::{Side, SwitchId, SwitchNetwork};
use crate::noise::{perturb_operator, trial_seed, DriftParams};
use crate::oracle::{
    circuit_n2, haar_unitary_from_rng, meta_operator_output, q2_permute, q2_to_device_bins, random_control,
    random_spinor, ControlRegister, Q2_CONTROL_BINS,
};
use crate::schedule::{bin_count, route_settings, PulseSchedule, SchedulerParams};
use crate::state::{PolarizationOperator, Slot};

pub const DEFAULT_BIN_BUDGET: usize = 65_536;
/// Random trials occupy at most this many bins.
const MAX_TRIAL_BINS: usize = 256;
const BIN_SPACING_PS: f64 = 20.0;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub budget: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// Worst observed deviation for the check's metric.
    pub worst: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureCase {
    pub check: &'static str,
    pub trial: usize,
    pub message: String,
    pub config: ConfigFile,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckSummary>,
    pub first_failure: Option<FailureCase>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }
}

struct Tally {
    checks: Vec<CheckSummary>,
    first_failure: Option<FailureCase>,
}

impl Tally {
    fn record(&mut self, name: &'static str, ok: bool, metric: f64) {
        let entry = match self.checks.iter_mut().position(|c| c.name == name) {
            Some(i) => &mut self.checks[i],
            None => {
                self.checks.push(CheckSummary {
                    name,
                    passed: 0,
                    failed: 0,
                    worst: 0.0,
                });
                self.checks.last_mut().unwrap()
            }
        };
        if ok {
            entry.passed += 1;
        } else {
            entry.failed += 1;
        }
        if metric.is_nan() {
            entry.worst = f64::NAN;
        } else {
            entry.worst = entry.worst.max(metric);
        }
    }

    fn fail_once(&mut self, check: &'static str, trial: usize, message: String, config: &SimulationConfig) {
        if self.first_failure.is_none() {
            self.first_failure = Some(FailureCase {
                check,
                trial,
                message,
                config: config.to_file(),
            });
        }
    }
}

/// Runs every check for `trials` seeded random instances.
pub fn run_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    let VerifyOptions { n, m, trials, seed, budget } = *opts;
    let bins = bin_count(n, m).map_err(|_| Error::BudgetExceeded { n, m, budget })?;
    if bins > budget {
        return Err(Error::BudgetExceeded { n, m, budget });
    }
    let net = SwitchNetwork::build(n)?;
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }

    let mut tally = Tally {
        checks: Vec::new(),
        first_failure: None,
    };

    check_routing(&net, &mut tally);

    let timing = SchedulerParams::new(n, m, BIN_SPACING_PS, bins as f64 * BIN_SPACING_PS);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t));
        let cfg = random_config(&mut rng, &timing, bins, seed)?;
        run_trial(&net, &cfg, t, &mut rng, &mut tally)?;
        if n == 2 && m == 2 {
            q2_trial(&net, &timing, t, &mut rng, &mut tally, seed)?;
        }
    }

    Ok(VerifyReport {
        n,
        m,
        trials,
        seed,
        checks: tally.checks,
        first_failure: tally.first_failure,
    })
}

fn random_config(rng: &mut ChaCha8Rng, timing: &SchedulerParams, bins: usize, seed: u64) -> Result<SimulationConfig> {
    let n = timing.n;
    let operators: Vec<_> = (0..n).map(|_| haar_unitary_from_rng(rng)).collect();
    let occupied: Vec<usize> = if bins <= MAX_TRIAL_BINS {
        (0..bins).collect()
    } else {
        let k = rng.random_range(1..=MAX_TRIAL_BINS);
        sample(rng, bins, k).into_iter().collect()
    };
    Ok(SimulationConfig {
        n,
        m: timing.m,
        operators,
        input_polarization: random_spinor(rng),
        control: random_control(rng, occupied),
        timing: timing.clone(),
        seed,
        drift_sigma: None,
    })
}

/// Walks the mux tree using only parent/child links for every leaf.
fn check_routing(net: &SwitchNetwork, tally: &mut Tally) {
    for l in 0..net.n_modes() {
        let settings = route_settings(l, net, Side::Mux);
        let on = |id: SwitchId| settings.iter().any(|s| s.id == id && s.on);
        let mut id = SwitchId::mux(0, 0);
        let leaf = loop {
            let b = on(id);
            match net.children(id) {
                Some((a, c)) => id = if b { c } else { a },
                None => break 2 * id.index + usize::from(b),
            }
        };
        tally.record("routing-reaches-leaf", leaf == l, (leaf != l) as u8 as f64);
    }
}

fn run_trial(
    net: &SwitchNetwork,
    cfg: &SimulationConfig,
    t: usize,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
) -> Result<()> {
    const FID_TOL: f64 = 1e-9;
    const NORM_TOL: f64 = 1e-9;

    let schedule = match schedule_for(cfg, net) {
        Ok(s) => s,
        Err(e) => {
            tally.record("schedule-build", false, f64::NAN);
            tally.fail_once("schedule-build", t, e.to_string(), cfg);
            return Ok(());
        }
    };

    let consistent = schedule.check_consistency(net);
    tally.record("schedule-timeline", consistent.is_ok(), 0.0);
    if let Err(e) = consistent {
        tally.fail_once("schedule-timeline", t, e.to_string(), cfg);
    }

    let round_trip = schedule
        .to_json()
        .and_then(|j| PulseSchedule::from_json(&j))
        .map(|back| back.logical == schedule.logical);
    let ok = matches!(round_trip, Ok(true));
    tally.record("schedule-round-trip", ok, 0.0);
    if !ok {
        tally.fail_once("schedule-round-trip", t, format!("{round_trip:?}"), cfg);
    }

    let want = meta_operator_output(&cfg.operators, &cfg.control, &cfg.input_polarization, cfg.n, cfg.m)?;
    match run_device(cfg, net, &schedule) {
        Ok(out) => {
            let infid = 1.0 - out.fidelity(&want)?;
            let ok = infid <= FID_TOL;
            tally.record("device-vs-oracle", ok, infid);
            if !ok {
                let shrunk = shrink_to_worst_bin(cfg, &out, &want);
                tally.fail_once("device-vs-oracle", t, format!("infidelity {infid:.3e}"), &shrunk);
            }
            let norm_err = (out.norm() - 1.0).abs();
            let on_input = out.iter().all(|(s, _)| s.mode == 0);
            let ok = norm_err <= NORM_TOL && on_input;
            tally.record("norm-conservation", ok, norm_err);
            if !ok {
                tally.fail_once("norm-conservation", t, format!("norm error {norm_err:.3e}, on x_0: {on_input}"), cfg);
            }
            let asym = (out.fidelity(&want)? - want.fidelity(&out)?).abs();
            tally.record("fidelity-symmetry", asym <= 1e-12, asym);
        }
        Err(e) => {
            tally.record("device-vs-oracle", false, f64::NAN);
            tally.fail_once("device-vs-oracle", t, e.to_string(), cfg);
        }
    }

    let mut ident = cfg.clone();
    ident.operators = vec![PolarizationOperator::identity(); cfg.n];
    let input = input_state(&ident)?;
    let diff = run_device(&ident, net, &schedule).and_then(|out| out.max_abs_diff(&input));
    let ok = matches!(diff, Ok(d) if d <= 1e-9);
    tally.record("identity-channel", ok, diff.as_ref().copied().unwrap_or(f64::NAN));
    if !ok {
        tally.fail_once("identity-channel", t, format!("{diff:?}"), &ident);
    }

    // U then V on the same slots equals V.U once
    let u = haar_unitary_from_rng(rng);
    let v = haar_unitary_from_rng(rng);
    let residual = u.unitarity_residual().max(v.unitarity_residual());
    tally.record("operator-unitarity", residual <= 1e-12, residual);
    let sel = |s: Slot| s.bin % 2 == 0;
    let twice = input.apply_polarization_op(&u, sel).apply_polarization_op(&v, sel);
    let once = input.apply_polarization_op(&v.matmul(&u), sel);
    let comp = twice.max_abs_diff(&once)?;
    tally.record("operator-composition", comp <= 1e-12, comp);

    let sigma = rng.random_range(0.0..0.5);
    let drift = DriftParams::new(sigma, rng.random())?;
    let drifted = run_device_with(cfg, net, &schedule, |pass| {
        cfg.operators
            .iter()
            .enumerate()
            .map(|(l, op)| perturb_operator(op, &drift, pass, l))
            .collect()
    });
    let err = drifted.map(|o| (o.norm() - 1.0).abs());
    let ok = matches!(err, Ok(e) if e <= NORM_TOL);
    tally.record("drift-norm-conservation", ok, err.as_ref().copied().unwrap_or(f64::NAN));
    if !ok {
        tally.fail_once("drift-norm-conservation", t, format!("sigma {sigma}: {err:?}"), cfg);
    }
    Ok(())
}

/// Reduces a failing configuration to the single bin with the largest error.
fn shrink_to_worst_bin(
    cfg: &SimulationConfig,
    got: &crate::state::PhotonState,
    want: &crate::state::PhotonState,
) -> SimulationConfig {
    let worst = cfg
        .control
        .bins()
        .max_by(|&a, &b| {
            let err = |bin| {
                let s = Slot::new(bin, 0);
                match (got.get(s), want.get(s)) {
                    (Some(x), Some(y)) => (x.h - y.h).norm() + (x.v - y.v).norm(),
                    _ => f64::INFINITY,
                }
            };
            err(a).total_cmp(&err(b))
        })
        .unwrap_or(0);
    let mut out = cfg.clone();
    out.control = ControlRegister::uniform([worst]).expect("single bin");
    out
}

fn q2_trial(
    net: &SwitchNetwork,
    timing: &SchedulerParams,
    t: usize,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
    seed: u64,
) -> Result<()> {
    const TOL: f64 = 1e-10;
    let u0 = haar_unitary_from_rng(rng);
    let u1 = haar_unitary_from_rng(rng);
    let psi = random_spinor(rng);
    let ctl = random_spinor(rng);
    let (alpha, beta) = (ctl.h, ctl.v);
    let control = ControlRegister::new([(Q2_CONTROL_BINS[0], alpha), (Q2_CONTROL_BINS[1], beta)])?;
    let cfg = SimulationConfig {
        n: 2,
        m: 2,
        operators: vec![u0, u1],
        input_polarization: psi,
        control,
        timing: timing.clone(),
        seed,
        drift_sigma: None,
    };
    let occupied: BTreeSet<usize> = Q2_CONTROL_BINS.into_iter().collect();
    let schedule = crate::schedule::build_schedule(timing, net, &occupied)?;
    let device = run_device(&cfg, net, &schedule);
    let q2 = q2_permute(&u0, &u1, alpha, beta, &psi).and_then(|s| q2_to_device_bins(&s));
    let circuit = circuit_n2(&u0, &u1, alpha, beta, &psi).and_then(|s| q2_to_device_bins(&s));
    match (device, q2, circuit) {
        (Ok(d), Ok(q), Ok(c)) => {
            let worst = [d.fidelity(&q)?, d.fidelity(&c)?, q.fidelity(&c)?]
                .into_iter()
                .map(|f| 1.0 - f)
                .fold(0.0, f64::max);
            let ok = worst <= TOL;
            tally.record("q2-triple-equivalence", ok, worst);
            if !ok {
                tally.fail_once("q2-triple-equivalence", t, format!("infidelity {worst:.3e}"), &cfg);
            }
        }
        (d, q, c) => {
            tally.record("q2-triple-equivalence", false, f64::NAN);
            let msg = format!("device: {:?}; q2: {:?}; circuit: {:?}", d.err(), q.err(), c.err());
            tally.fail_once("q2-triple-equivalence", t, msg, &cfg);
        }
    }
    Ok(())
}
