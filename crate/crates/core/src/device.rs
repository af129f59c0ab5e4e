//! Full device runs: `M` passes through the switch network with feedback.

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::network::SwitchNetwork;
use crate::schedule::{build_schedule, PulseSchedule};
use crate::state::{PhotonState, PolarizationOperator};

/// The input photon: every control amplitude on `x_0` carrying the input
/// polarization.
pub fn input_state(config: &SimulationConfig) -> Result<PhotonState> {
    PhotonState::encode_register(config.n, config.n_bins(), config.control.iter(), &config.input_polarization)
}

/// Schedule for the bins occupied by `config`'s control register.
pub fn schedule_for(config: &SimulationConfig, net: &SwitchNetwork) -> Result<PulseSchedule> {
    build_schedule(&config.timing, net, &config.control.bins().collect())
}

/// Runs the device with the configured operators on every pass.
pub fn run_device(config: &SimulationConfig, net: &SwitchNetwork, schedule: &PulseSchedule) -> Result<PhotonState> {
    run_device_with(config, net, schedule, |_| config.operators.clone())
}

/// Runs the device, asking `operators_for_pass(k)` for the operator bank
/// seen on pass `k`.
pub fn run_device_with<F>(
    config: &SimulationConfig,
    net: &SwitchNetwork,
    schedule: &PulseSchedule,
    operators_for_pass: F,
) -> Result<PhotonState>
where
    F: Fn(usize) -> Vec<PolarizationOperator>,
{
    if schedule.params.n != config.n || schedule.params.m != config.m {
        return Err(Error::ScheduleMismatch(format!(
            "schedule built for n = {}, m = {}; config has n = {}, m = {}",
            schedule.params.n, schedule.params.m, config.n, config.m
        )));
    }
    if net.n_modes() != config.n {
        return Err(Error::ScheduleMismatch(format!(
            "network has {} modes, config has n = {}",
            net.n_modes(),
            config.n
        )));
    }
    let feedback = net.feedback_mode();
    let mut state = input_state(config)?;
    for k in 0..config.m {
        let entry = if k == 0 { 0 } else { feedback };
        if let Some((slot, _)) = state.iter().find(|(s, _)| s.mode != entry) {
            return Err(Error::BadEntryPort {
                bin: slot.bin,
                mode: slot.mode,
                iteration: k,
                expected: entry,
            });
        }
        let ops = operators_for_pass(k);
        state = net.propagate_iteration(&state, schedule, &ops, k)?;
        let exit = if k + 1 == config.m { 0 } else { feedback };
        if let Some((slot, _)) = state.iter().find(|(s, _)| s.mode != exit) {
            return Err(Error::Misrouted {
                bin: slot.bin,
                mode: slot.mode,
                iteration: k,
                expected: exit,
            });
        }
    }
    Ok(state)
}
