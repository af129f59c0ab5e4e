//! Simulation configuration and its JSON file format.
//!
//! ```json
//! {
//!   "n": 2,
//!   "m": 2,
//!   "operators": [[[[0,0],[1,0]], [[1,0],[0,0]]], "haar"],
//!   "input_polarization": [[1,0],[0,0]],
//!   "control_amplitudes": "uniform-permutations",
//!   "timing": { "bin_spacing_ps": 40, "loop_delay_ps": 200 },
//!   "seed": 7
//! }
//! ```
//!
//! Complex numbers are `[re, im]`, matrices are row-major. Each operator is
//! either a matrix or the token `"haar"` (Haar-random, derived from `seed`
//! and the operator's position); `"operators": "haar"` makes all of them
//! random. `control_amplitudes` is an object mapping bin numbers to
//! amplitudes or the token `"uniform-permutations"`, which spreads equal
//! amplitude over the bins that apply every operator exactly once and
//! requires `m = n` (defaulting `m` to `n` when omitted).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{haar_unitary_from_rng, ControlRegister};
use crate::schedule::{bin_count, permutation_bins, SchedulerParams, DEFAULT_SWITCH_WINDOW_PS, DEFAULT_TRANSITION_PS};
use crate::state::{Complex, PolarizationOperator, PolarizationSpinor};

pub const UNIFORM_PERMUTATIONS: &str = "uniform-permutations";
pub const HAAR: &str = "haar";

type ComplexPair = [f64; 2];
type MatrixSpec = [[ComplexPair; 2]; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Token(String),
    Matrix(MatrixSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorsSpec {
    Token(String),
    List(Vec<OperatorSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlSpec {
    Token(String),
    Explicit(BTreeMap<String, ComplexPair>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    pub bin_spacing_ps: f64,
    pub loop_delay_ps: f64,
    #[serde(default = "default_window")]
    pub switch_window_ps: f64,
    #[serde(default = "default_transition")]
    pub transition_ps: f64,
    #[serde(default)]
    pub level_latency_ps: f64,
}

fn default_window() -> f64 {
    DEFAULT_SWITCH_WINDOW_PS
}

fn default_transition() -> f64 {
    DEFAULT_TRANSITION_PS
}

/// On-disk form of a simulation configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub operators: OperatorsSpec,
    pub input_polarization: [ComplexPair; 2],
    pub control_amplitudes: ControlSpec,
    pub timing: TimingSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_sigma: Option<f64>,
}

/// Validated configuration with every token resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub m: usize,
    pub operators: Vec<PolarizationOperator>,
    pub input_polarization: PolarizationSpinor,
    pub control: ControlRegister,
    pub timing: SchedulerParams,
    pub seed: u64,
    pub drift_sigma: Option<f64>,
}

fn complex(p: ComplexPair) -> Complex {
    Complex::new(p[0], p[1])
}

fn pair(c: Complex) -> ComplexPair {
    [c.re, c.im]
}

/// Seed for the `index`-th Haar-random operator of a config.
fn operator_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve(&self) -> Result<SimulationConfig> {
        let n = self.n;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidModeCount(n));
        }

        let uniform = match &self.control_amplitudes {
            ControlSpec::Token(t) if t == UNIFORM_PERMUTATIONS => true,
            ControlSpec::Token(t) => {
                return Err(Error::Config(format!(
                    "unknown control_amplitudes token `{t}` (expected `{UNIFORM_PERMUTATIONS}` or an object)"
                )))
            }
            ControlSpec::Explicit(_) => false,
        };
        let m = match (self.m, uniform) {
            (Some(m), true) if m != n => {
                return Err(Error::Config(format!(
                    "`{UNIFORM_PERMUTATIONS}` requires m = n, got n = {n}, m = {m}"
                )))
            }
            (Some(m), _) => m,
            (None, true) => n,
            (None, false) => return Err(Error::Config("m is required with explicit control amplitudes".into())),
        };
        if m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        let bins = bin_count(n, m)?;

        let specs: Vec<OperatorSpec> = match &self.operators {
            OperatorsSpec::Token(t) if t == HAAR => vec![OperatorSpec::Token(HAAR.into()); n],
            OperatorsSpec::Token(t) => return Err(Error::Config(format!("unknown operators token `{t}`"))),
            OperatorsSpec::List(v) => v.clone(),
        };
        if specs.len() != n {
            return Err(Error::Config(format!("expected {n} operators, got {}", specs.len())));
        }
        let operators = specs
            .iter()
            .enumerate()
            .map(|(i, spec)| match spec {
                OperatorSpec::Token(t) if t == HAAR => {
                    let mut rng = ChaCha8Rng::seed_from_u64(operator_seed(self.seed, i));
                    Ok(haar_unitary_from_rng(&mut rng))
                }
                OperatorSpec::Token(t) => Err(Error::Config(format!("operator {i}: unknown token `{t}`"))),
                OperatorSpec::Matrix(mx) => PolarizationOperator::new([
                    [complex(mx[0][0]), complex(mx[0][1])],
                    [complex(mx[1][0]), complex(mx[1][1])],
                ])
                .map_err(|e| Error::Config(format!("operator {i}: {e}"))),
            })
            .collect::<Result<Vec<_>>>()?;

        let input_polarization = PolarizationSpinor::new(
            complex(self.input_polarization[0]),
            complex(self.input_polarization[1]),
        )
        .normalized()
        .map_err(|e| Error::Config(format!("input_polarization: {e}")))?;

        let control = match &self.control_amplitudes {
            ControlSpec::Token(_) => ControlRegister::uniform(permutation_bins(n))?,
            ControlSpec::Explicit(map) => {
                let mut amps = Vec::with_capacity(map.len());
                for (key, value) in map {
                    let bin: usize = key
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("control_amplitudes: bin `{key}` is not an integer")))?;
                    if bin >= bins {
                        return Err(Error::OutOfRange {
                            what: "control bin",
                            value: bin,
                            bound: bins,
                        });
                    }
                    amps.push((bin, complex(*value)));
                }
                ControlRegister::new(amps).map_err(|e| Error::Config(format!("control_amplitudes: {e}")))?
            }
        };

        if let Some(s) = self.drift_sigma {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Config(format!("drift_sigma must be finite and >= 0, got {s}")));
            }
        }

        let t = &self.timing;
        let timing = SchedulerParams {
            n,
            m,
            bin_spacing_ps: t.bin_spacing_ps,
            loop_delay_ps: t.loop_delay_ps,
            switch_window_ps: t.switch_window_ps,
            transition_ps: t.transition_ps,
            level_latency_ps: t.level_latency_ps,
        };
        timing.validate()?;

        Ok(SimulationConfig {
            n,
            m,
            operators,
            input_polarization,
            control,
            timing,
            seed: self.seed,
            drift_sigma: self.drift_sigma,
        })
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        ConfigFile::from_json(text)?.resolve()
    }

    pub fn n_bins(&self) -> usize {
        // validated at construction
        self.timing.n_bins().expect("bin count checked in resolve")
    }

    /// Explicit file form, with every operator and amplitude written out.
    pub fn to_file(&self) -> ConfigFile {
        let operators = self
            .operators
            .iter()
            .map(|op| {
                let m = op.matrix();
                OperatorSpec::Matrix([[pair(m[0][0]), pair(m[0][1])], [pair(m[1][0]), pair(m[1][1])]])
            })
            .collect();
        ConfigFile {
            n: self.n,
            m: Some(self.m),
            operators: OperatorsSpec::List(operators),
            input_polarization: [pair(self.input_polarization.h), pair(self.input_polarization.v)],
            control_amplitudes: ControlSpec::Explicit(
                self.control.iter().map(|(b, a)| (b.to_string(), pair(a))).collect(),
            ),
            timing: TimingSpec {
                bin_spacing_ps: self.timing.bin_spacing_ps,
                loop_delay_ps: self.timing.loop_delay_ps,
                switch_window_ps: self.timing.switch_window_ps,
                transition_ps: self.timing.transition_ps,
                level_latency_ps: self.timing.level_latency_ps,
            },
            seed: self.seed,
            drift_sigma: self.drift_sigma,
        }
    }
}
