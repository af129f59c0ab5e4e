use thiserror::Error;

use crate::network::SwitchId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while configuring, scheduling or simulating the device.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not unitary (max |M^dag M - I| = {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state has zero norm and cannot be normalized")]
    ZeroNorm,

    #[error("{what} is not normalized (norm^2 = {norm_sqr:.12})")]
    NotNormalized { what: &'static str, norm_sqr: f64 },

    #[error("dimension mismatch: ({0} modes, {1} bins) vs ({2} modes, {3} bins)")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("slot (bin {bin}, mode {mode}) outside a register of {n_bins} bins x {n_modes} modes")]
    SlotOutOfRange {
        bin: usize,
        mode: usize,
        n_bins: usize,
        n_modes: usize,
    },

    #[error("mode count {0} is not a power of two >= 2")]
    InvalidModeCount(usize),

    #[error("{what} = {value} out of range (must be < {bound})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("{0}")]
    Overflow(String),

    #[error("timing infeasible: constraint `{constraint}` violated ({detail})")]
    Infeasible {
        constraint: &'static str,
        detail: String,
    },

    #[error("schedule has no setting for {switch} at bin {bin}, iteration {iteration}")]
    MissingSetting {
        switch: SwitchId,
        bin: usize,
        iteration: usize,
    },

    #[error("no polarization operator assigned to leaf mode x_{mode}")]
    MissingOperator { mode: usize },

    #[error("two amplitudes collided on slot (bin {bin}, mode {mode})")]
    Collision { bin: usize, mode: usize },

    #[error("photon in bin {bin} left pass {iteration} on mode x_{mode}, expected x_{expected}")]
    Misrouted {
        bin: usize,
        mode: usize,
        iteration: usize,
        expected: usize,
    },

    #[error("photon in bin {bin} entered pass {iteration} on mode x_{mode}, expected x_{expected}")]
    BadEntryPort {
        bin: usize,
        mode: usize,
        iteration: usize,
        expected: usize,
    },

    #[error("ancilla did not disentangle (residual Schmidt weight {weight:.3e})")]
    AncillaEntangled { weight: f64 },

    #[error("schedule does not match configuration: {0}")]
    ScheduleMismatch(String),

    #[error("schedule timeline inconsistent: {0}")]
    TimelineInconsistent(String),

    #[error("{n}^{m} time bins exceeds the budget of {budget}; lower n or m, or raise --budget")]
    BudgetExceeded { n: usize, m: usize, budget: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invariant check failed: {0}")]
    Verification(String),
}

impl Error {
    /// Internal invariant violations signal a bug in the simulator or
    /// schedule rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::MissingSetting { .. }
                | Error::MissingOperator { .. }
                | Error::Collision { .. }
                | Error::Misrouted { .. }
                | Error::BadEntryPort { .. }
                | Error::AncillaEntangled { .. }
                | Error::TimelineInconsistent(_)
                | Error::Verification(_)
        )
    }

    /// Process exit code: 1 for validation/infeasibility, 2 for internal
    /// invariant violations.
    pub fn exit_code(&self) -> i32 {
        if self.is_internal() {
            2
        } else {
            1
        }
    }
}
