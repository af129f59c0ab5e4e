//! Simulation and pulse-schedule compilation for an all-optical device that
//! applies a coherent superposition of operator orderings to a photon.
//!
//! The photon carries a polarization qubit; its time bin acts as the
//! control register. A multiplexing tree of optical switches routes each
//! time bin to one of `N` polarization operators, a demultiplexing tree
//! collects it again, and a feedback loop sends it round `M` times. With
//! the right switch program, bin `i` experiences the operator sequence
//! spelled by the base-`N` digits of `i`.
//!
//! Modules:
//!
//! - [`state`]: sparse single-photon state and 2x2 polarization operators
//! - [`network`]: switch trees and the per-pass propagation engine
//! - [`schedule`]: logical switch settings and the timed pulse program
//! - [`device`]: full multi-pass runs
//! - [`oracle`]: brute-force reference outputs and the controlled-swap circuit
//! - [`noise`]: pass-to-pass operator drift and fidelity sweeps
//! - [`config`]: JSON configuration
//! - [`verify`]: seeded property suite

pub mod config;
pub mod device;
pub mod error;
pub mod network;
pub mod noise;
pub mod oracle;
pub mod schedule;
pub mod state;
pub mod verify;

pub use config::{ConfigFile, SimulationConfig};
pub use device::{input_state, run_device, run_device_with, schedule_for};
pub use error::{Error, Result};
pub use network::{SettingKey, Side, SwitchId, SwitchNetwork, SwitchSetting};
pub use noise::{drift_fidelity_sweep, perturb_operator, DriftParams, SweepRow};
pub use oracle::{
    circuit_n2, haar_random_unitary, meta_operator_output, q2_permute, resource_counts, ControlRegister,
    OperatorSequence,
};
pub use schedule::{
    boundary_settings, build_schedule, operator_index, permutation_bins, route_settings, PulseInterval,
    PulseSchedule, SchedulerParams,
};
pub use state::{Complex, PhotonState, PolarizationOperator, PolarizationSpinor, Slot};
