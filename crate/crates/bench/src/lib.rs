//! Fixtures shared by the criterion benches.

use qpermute_core::oracle::{haar_unitary_from_rng, random_control, random_spinor};
use qpermute_core::schedule::bin_count;
use qpermute_core::{SchedulerParams, SimulationConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random device configuration with every bin of the register occupied.
pub fn dense_config(n: usize, m: usize, seed: u64) -> SimulationConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bins = bin_count(n, m).expect("register fits in usize");
    SimulationConfig {
        n,
        m,
        operators: (0..n).map(|_| haar_unitary_from_rng(&mut rng)).collect(),
        input_polarization: random_spinor(&mut rng),
        control: random_control(&mut rng, 0..bins),
        timing: SchedulerParams::new(n, m, 20.0, bins as f64 * 20.0),
        seed,
        drift_sigma: None,
    }
}
