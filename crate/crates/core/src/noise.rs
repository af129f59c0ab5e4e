//! Pass-to-pass operator drift.
//!
//! Each physical operator is met once per pass, at a different time, so
//! every pass sees a slightly different version of it. The drifted
//! operator is `R * U` with `R` a rotation by `|Normal(0, sigma)|` radians
//! about a uniformly random Bloch axis, drawn independently for every
//! `(pass, operator)` pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SimulationConfig;
use crate::device::{run_device_with, schedule_for};
use crate::error::{Error, Result};
use crate::network::SwitchNetwork;
use crate::oracle::meta_operator_output;
use crate::state::{Complex, PolarizationOperator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftParams {
    /// Standard deviation of the rotation angle, radians.
    pub sigma: f64,
    pub seed: u64,
}

impl DriftParams {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Config(format!("drift sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(seed: u64, pass: usize, op_index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ pass as u64) ^ op_index as u64)
}

/// `exp(-i angle/2 n.sigma)` for a unit axis `n`.
fn rotation(angle: f64, axis: [f64; 3]) -> PolarizationOperator {
    let (s, c) = (angle / 2.0).sin_cos();
    let [x, y, z] = axis;
    PolarizationOperator::from_matrix_unchecked([
        [Complex::new(c, -s * z), Complex::new(-s * y, -s * x)],
        [Complex::new(s * y, -s * x), Complex::new(c, s * z)],
    ])
}

/// The version of `u` met on `pass` by operator `op_index`. Deterministic in
/// `(seed, pass, op_index)`; the random draws do not depend on `sigma`, so
/// sweeps over `sigma` reuse the same directions and scaled angles.
pub fn perturb_operator(u: &PolarizationOperator, params: &DriftParams, pass: usize, op_index: usize) -> PolarizationOperator {
    if params.sigma == 0.0 {
        return *u;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(params.seed, pass, op_index));
    let z: f64 = rng.sample(StandardNormal);
    let angle = (params.sigma * z).abs();
    let axis = loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            break [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    };
    rotation(angle, axis).matmul(u)
}

/// One row of a drift sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub trials: usize,
    /// Largest `|norm - 1|` seen over the trials.
    pub max_norm_error: f64,
}

/// Drift seed for `trial` of a sweep rooted at `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(seed ^ splitmix64(trial as u64))
}

/// For each `sigma`, runs `trials` drifted devices and compares them with the
/// undrifted oracle output. Trial `t` uses the same drift seed for every
/// `sigma`.
pub fn drift_fidelity_sweep(config: &SimulationConfig, sigmas: &[f64], trials: usize) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let net = SwitchNetwork::build(config.n)?;
    let schedule = schedule_for(config, &net)?;
    let ideal = meta_operator_output(
        &config.operators,
        &config.control,
        &config.input_polarization,
        config.n,
        config.m,
    )?;

    sigmas
        .iter()
        .map(|&sigma| {
            let results = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let params = DriftParams::new(sigma, trial_seed(config.seed, t))?;
                    let out = run_device_with(config, &net, &schedule, |pass| {
                        config
                            .operators
                            .iter()
                            .enumerate()
                            .map(|(l, u)| perturb_operator(u, &params, pass, l))
                            .collect()
                    })?;
                    Ok((ideal.fidelity(&out)?, (out.norm() - 1.0).abs()))
                })
                .collect::<Result<Vec<_>>>()?;
            let n = results.len() as f64;
            let mean = results.iter().map(|r| r.0).sum::<f64>() / n;
            let std = if results.len() > 1 {
                (results.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            Ok(SweepRow {
                sigma,
                mean_fidelity: mean,
                std_fidelity: std,
                trials,
                max_norm_error: results.iter().map(|r| r.1).fold(0.0, f64::max),
            })
        })
        .collect()
}

/// Delimited table `sigma,mean_fidelity,std_fidelity,trials`.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from("sigma,mean_fidelity,std_fidelity,trials\n");
    for r in rows {
        out.push_str(&format!("{},{:.15},{:.6e},{}\n", r.sigma, r.mean_fidelity, r.std_fidelity, r.trials));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::haar_random_unitary;

    #[test]
    fn zero_sigma_is_exact() {
        let u = haar_random_unitary(8);
        let p = DriftParams::new(0.0, 5).unwrap();
        assert_eq!(perturb_operator(&u, &p, 3, 1), u);
    }

    #[test]
    fn perturbed_stays_unitary_and_deterministic() {
        let u = haar_random_unitary(8);
        for sigma in [1e-3, 0.1, 1.0, 10.0] {
            let p = DriftParams::new(sigma, 77).unwrap();
            let a = perturb_operator(&u, &p, 2, 3);
            assert!(a.unitarity_residual() <= 1e-10);
            assert_eq!(a, perturb_operator(&u, &p, 2, 3));
            assert_ne!(a, perturb_operator(&u, &p, 3, 3));
            assert_ne!(a, perturb_operator(&u, &p, 2, 2));
        }
    }

    #[test]
    fn rotation_is_unitary_and_rotates_by_angle() {
        let r = rotation(0.7, [0.0, 0.0, 1.0]);
        assert!(r.unitarity_residual() < 1e-15);
        // exp(-i theta/2 Z) has trace 2 cos(theta/2)
        assert!((r.trace() - Complex::new(2.0 * 0.35f64.cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(DriftParams::new(-0.1, 0).is_err());
        assert!(DriftParams::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn table_format() {
        let rows = [SweepRow {
            sigma: 0.1,
            mean_fidelity: 0.99,
            std_fidelity: 0.001,
            trials: 5,
            max_norm_error: 0.0,
        }];
        let t = sweep_table(&rows);
        assert!(t.starts_with("sigma,mean_fidelity,std_fidelity,trials\n0.1,"));
        assert!(t.trim_end().ends_with(",5"));
    }
}
