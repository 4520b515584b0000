//! Counter-based random numbers: sample i of stream `seed` is a pure function
//! of (seed, i), so parallel workers can draw disjoint index ranges and the
//! result never depends on scheduling.

/// SplitMix64 finalizer; full-period bijective mixer on u64.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stateless counter RNG.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// The i-th u64 of the stream.
    pub fn u64_at(&self, index: u64) -> u64 {
        // Two mixing rounds decorrelate (seed, index) pairs.
        mix(mix(self.seed ^ 0x6a09_e667_f3bc_c908).wrapping_add(index))
    }

    /// The i-th uniform draw in [0, 1).
    pub fn f64_at(&self, index: u64) -> f64 {
        // 53 high bits -> [0,1) on the dyadic grid.
        (self.u64_at(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// The i-th uniform draw in [lo, hi).
    pub fn f64_in(&self, index: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.f64_at(index)
    }
}
