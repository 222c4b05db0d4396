//! Small deterministic PRNG used by every seeded operation in this crate.
//!
//! Keeping the generator in-tree (rather than depending on an external RNG
//! crate) pins the byte-for-byte output of all perturbations to this
//! repository: the same corpus, method, and seed always produce the same
//! adversarial test set, on every platform and with every dependency bump.

/// splitmix64 finalizer (Steele, Lea & Flood 2014).
#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derive an independent sub-seed from `(seed, salt)`.
///
/// This is exactly the splitmix64 output stream: `derive_seed(s, i)` is the
/// `i`-th value produced by a splitmix64 generator seeded with `s`. Stages of
/// composite perturbations and per-sentence streams are all keyed this way.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    finalize(seed.wrapping_add(salt.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Stable 64-bit FNV-1a hash, used to salt per-label streams.
pub fn label_salt(label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    /// Uniform draw from `[0, bound)` via Lemire's rejection method.
    ///
    /// # Panics
    /// Panics when `bound == 0`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires a positive bound");
        loop {
            let x = self.next_u64();
            let m = u128::from(x) * u128::from(bound);
            let low = m as u64;
            if low >= bound.wrapping_neg() % bound {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform draw from the inclusive range `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        lo + self.next_below(hi - lo + 1)
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Pick `k` distinct elements uniformly (partial Fisher–Yates); the
    /// returned values keep their original relative order.
    pub fn sample_distinct(&mut self, pool: &[usize], k: usize) -> Vec<usize> {
        let mut items: Vec<usize> = pool.to_vec();
        let k = k.min(items.len());
        for i in 0..k {
            let j = i + self.next_below((items.len() - i) as u64) as usize;
            items.swap(i, j);
        }
        let mut picked: Vec<usize> = items[..k].to_vec();
        picked.sort_unstable();
        picked
    }

    /// Uniform pick from a non-empty slice.
    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.next_below(items.len() as u64) as usize]
    }
}
