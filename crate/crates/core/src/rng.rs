//! Counter-based random streams.
//!
//! Every draw is a pure function of `(master_seed, realization, domain, mode, index)`.
//! The first four coordinates are folded into a 64-bit substream key; draws inside a
//! substream are `mix(key + i * GAMMA)`, i.e. a splitmix64 sequence that can be entered
//! at any counter value. Nothing here carries mutable state, so evaluation order and
//! thread count never change the numbers produced.

use num_complex::Complex64;
use std::f64::consts::TAU;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// What a substream is used for. Distinct domains never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// White-noise initial data.
    InitialData,
    /// Base-level Brownian increments on the coarsest grid of a noise path.
    Noise,
    /// Brownian-bridge midpoints used to refine a path to the given level (>= 1).
    Bridge(u32),
    /// Exact-in-law interval updates for linear high modes.
    HighInterval,
    /// Independent reference samples (e.g. the comparison draw of a two-sample test).
    Reference,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::InitialData => 1,
            Domain::Noise => 2,
            Domain::HighInterval => 3,
            Domain::Reference => 4,
            Domain::Bridge(level) => 0x100 + level as u64,
        }
    }
}

/// Root of all randomness in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Substream for one `(realization, domain, mode)` coordinate.
    pub fn substream(&self, realization: u64, domain: Domain, mode: u64) -> Substream {
        let mut k = mix64(self.master_seed ^ 0x6a09_e667_f3bc_c908);
        k = mix64(k ^ realization.wrapping_mul(0xd1b5_4a32_d192_ed03));
        k = mix64(k ^ domain.tag().wrapping_mul(0xaef1_7502_108e_f2d9));
        k = mix64(k ^ mode.wrapping_mul(0xf135_7aea_2e62_a9c5));
        Substream { key: k }
    }
}

/// A random-access sequence of draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substream {
    key: u64,
}

impl Substream {
    #[inline(always)]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_mul(GAMMA)))
    }

    /// Uniform on (0, 1].
    #[inline(always)]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard complex Gaussian (real and imaginary parts independent, variance 1/2 each)
    /// for draw `index`. Uses counters `2*index` and `2*index + 1`.
    #[inline(always)]
    pub fn complex_normal(&self, index: u64) -> Complex64 {
        let u1 = self.uniform_at(index.wrapping_mul(2));
        let u2 = self.uniform_at(index.wrapping_mul(2).wrapping_add(1));
        // -ln(u) instead of -2 ln(u) gives variance 1/2 per component
        let r = (-u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        Complex64::new(r * c, r * s)
    }

    /// Standard real Gaussian for draw `index`.
    pub fn normal(&self, index: u64) -> f64 {
        self.complex_normal(index).re * std::f64::consts::SQRT_2
    }
}

/// Largest draw index whose counters do not wrap.
pub const MAX_DRAW_INDEX: u64 = (u64::MAX >> 1) - 1;
