//! Portable seeded randomness.
//!
//! Every random draw in the crate goes through [`SplitMix64`] so streams can
//! be reproduced bit-for-bit from any language:
//!
//! * `next_u64`: `state += 0x9E3779B97F4A7C15; return mix64(state)`.
//! * `below(n)`: high 64 bits of the 128-bit product `next_u64() * n`.
//! * `unit_open_closed()`: `((next_u64() >> 11) + 1) * 2^-53`, a value in `(0, 1]`.
//!
//! Sub-seeds are derived with [`derive_seed`], which folds each part into the
//! running hash as `h = mix64(h + 0x9E3779B97F4A7C15 ^ part)`, starting from
//! the master seed and consuming the parts left to right.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `master` in order.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(master, |h, &part| mix64(h.wrapping_add(GOLDEN_GAMMA) ^ part))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform index in `0..n`. Bias is at most `n / 2^64`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform real in `(0, 1]`.
    #[inline]
    pub fn unit_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller (test and probe helper).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.unit_open_closed();
        let u2 = self.unit_open_closed();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// First `k` elements of a uniformly shuffled `0..n` (partial Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
