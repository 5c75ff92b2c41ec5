//! Synthetic calibration traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sma_safety::LumpedThermalParams;

/// Trace of `steps` samples from `temp0`, with duty cycles drawn uniformly
/// from `[0,1]` and zero-mean Gaussian noise of standard deviation `sigma`
/// (°C) added to every temperature update. Identical seeds give identical
/// traces.
pub fn noisy_trace(p: &LumpedThermalParams, temp0: f64, steps: usize, sigma: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut temp = temp0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let u: f64 = rng.gen_range(0.0..=1.0);
        out.push((temp, u));
        temp = p.a1 * temp + p.a2 * u + p.a3 + noise.sample(&mut rng);
    }
    out
}
