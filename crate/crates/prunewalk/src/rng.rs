//! Counter-based random numbers keyed by (seed, sample index, stream role),
//! so parallel replays are order-independent and bitwise reproducible across
//! thread counts.

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// A keyed counter stream: output i is a strong mix of (key, i). Streams for
/// distinct (seed, sample, role) triples are independent for simulation
/// purposes.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
}

impl CounterRng {
    pub fn new(seed: u64, sample: u64, role: u64) -> CounterRng {
        let key = mix(mix(seed ^ GOLDEN.wrapping_mul(sample ^ 0xa076_1d64_78bd_642f)) ^ role.wrapping_mul(0xe703_7ed1_a0b4_28db));
        CounterRng { key, ctr: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.ctr = self.ctr.wrapping_add(1);
        mix(self.key ^ GOLDEN.wrapping_mul(self.ctr))
    }

    /// Uniform in 0..n without modulo bias.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniform in [0,1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
