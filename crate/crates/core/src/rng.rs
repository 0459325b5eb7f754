//! Counter-based pseudo-random streams.
//!
//! Every Monte Carlo run gets its own stream keyed by `(seed_root, run_index)`,
//! so batches are reproducible independent of execution order and thread count.
//! The generator is SplitMix64: a 64-bit counter passed through a finalizer with
//! full avalanche. That is plenty for fair coin flips and inverse-CDF sampling,
//! and it never blocks a parallel schedule on shared state.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of run `run_index` from a batch-level root seed.
#[inline]
pub fn derive_seed(seed_root: u64, run_index: u64) -> u64 {
    mix64(seed_root ^ mix64(run_index.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// One independent stream. `next_u64` walks a counter through the SplitMix64
/// finalizer; bits are consumed lazily for coin flips.
#[derive(Debug, Clone)]
pub struct RunRng {
    state: u64,
    bit_buf: u64,
    bits_left: u8,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        RunRng {
            state: seed,
            bit_buf: 0,
            bits_left: 0,
        }
    }

    /// Stream for run `run_index` of the batch rooted at `seed_root`.
    pub fn for_run(seed_root: u64, run_index: u64) -> Self {
        RunRng::new(derive_seed(seed_root, run_index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in (0, 1]; safe as an argument to `ln`.
    #[inline]
    pub fn next_f64_open(&mut self) -> f64 {
        1.0 - self.next_f64()
    }
}

/// Source of independent fair bits driving the walk transitions.
pub trait BitSource {
    fn fair_bit(&mut self) -> bool;
}

impl BitSource for RunRng {
    #[inline]
    fn fair_bit(&mut self) -> bool {
        if self.bits_left == 0 {
            self.bit_buf = self.next_u64();
            self.bits_left = 64;
        }
        let bit = self.bit_buf & 1 == 1;
        self.bit_buf >>= 1;
        self.bits_left -= 1;
        bit
    }
}
