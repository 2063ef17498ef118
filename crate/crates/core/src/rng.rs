//! Counter-based deterministic random streams.
//!
//! Noise corruption draws per-pixel values from a stream keyed by (seed, frame
//! pair, pixel index). Because each stream is derived by hashing rather than
//! by sequential state, any pixel can be generated independently and in any
//! order, so parallel generation is reproducible bit-for-bit.

/// SplitMix64 step; passes through the full 64-bit state space.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mixes several coordinates into one stream key.
pub fn derive_key(parts: &[u64]) -> u64 {
    let mut state = 0x853c49e6748fea9bu64;
    for &p in parts {
        let mut folded = state ^ p.wrapping_mul(0xff51afd7ed558ccd);
        state = splitmix64(&mut folded);
    }
    state
}

/// Deterministic stream of draws for one key.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { state: key }
    }

    pub fn next_u64(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal pair via Box-Muller.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        // Guard the log against a zero draw.
        let u1 = (self.next_f64()).max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let phi = std::f64::consts::TAU * u2;
        (r * phi.cos(), r * phi.sin())
    }
}
