//! Counter-based pseudo-random numbers for reproducible fixtures.
//!
//! The generator is stateless: draw `i` of stream `seed` is
//! `mix(seed + (i + 1) * 0x9E3779B97F4A7C15)` where `mix` is the SplitMix64
//! finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! with wrapping 64-bit arithmetic. This is exactly the `i`-th output of a
//! SplitMix64 generator seeded with `seed`, so any language can regenerate a
//! fixture bit-for-bit.
//!
//! Uniforms take the top 53 bits: `u = (bits >> 11) * 2^-53`, in `[0, 1)`.
//!
//! Gaussian sample `j` comes from Box-Muller on the pair of draws
//! `(2 * (j / 2), 2 * (j / 2) + 1)`:
//!
//! ```text
//! u1 = ((bits(2p) >> 11) + 1) * 2^-53          // in (0, 1]
//! u2 =  (bits(2p + 1) >> 11) * 2^-53
//! r  = sqrt(-2 ln u1)
//! z  = r cos(2 pi u2)   if j is even
//!      r sin(2 pi u2)   if j is odd
//! ```

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Stateless SplitMix64 stream addressed by a 64-bit counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent stream, e.g. one per fixture component.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.bits(stream ^ 0xD1B5_4A32_D192_ED03))
    }

    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        let mut z = self
            .seed
            .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.bits(counter) >> 11) as f64 * TWO_POW_M53
    }

    /// Standard normal draw `j` of the stream.
    #[inline]
    pub fn gaussian(&self, j: u64) -> f64 {
        let pair = j / 2;
        let u1 = ((self.bits(2 * pair) >> 11) + 1) as f64 * TWO_POW_M53;
        let u2 = (self.bits(2 * pair + 1) >> 11) as f64 * TWO_POW_M53;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        if j % 2 == 0 {
            r * theta.cos()
        } else {
            r * theta.sin()
        }
    }
}
