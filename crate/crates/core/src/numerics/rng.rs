//! Deterministic random streams.
//!
//! The generator is xoshiro256++ (shift-register family), seeded through the
//! standard SplitMix64 expansion, so a given seed produces the identical
//! stream on every platform. Gaussian variates come from an explicit
//! Box–Muller transform on top of the uniform stream rather than a
//! library-internal table method, which keeps the whole draw sequence
//! documented and bit-reproducible.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct RngStream {
    inner: Xoshiro256PlusPlus,
    spare_gaussian: Option<f64>,
}

/// SplitMix64 output mix, used for substream derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare_gaussian: None,
        }
    }

    /// Independent stream for task `task` derived from `seed`:
    /// `new(splitmix64(seed ^ splitmix64(task + 1)))`.
    pub fn substream(seed: u64, task: u64) -> Self {
        RngStream::new(splitmix64(seed ^ splitmix64(task.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1): top 53 bits of the next word.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller; the second variate of each pair is
    /// cached, so draws come in deterministic pairs.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        // 1 - u in (0, 1] keeps the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }
}
