//! Counter-based splittable random streams.
//!
//! A [`StreamKey`] is a 64-bit key. Children are derived with [`StreamKey::split`],
//! so every tree edge, trial or grid cell gets a key that is a pure function of
//! its path from the run seed. Values drawn from a key never depend on the
//! order in which other keys were visited.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(mix64(seed ^ 0x6A09_E667_F3BC_C908))
    }

    #[inline(always)]
    pub fn split(self, tag: u64) -> Self {
        StreamKey(mix64(self.0 ^ mix64(tag.wrapping_add(GOLDEN))))
    }

    /// Derives a key from a sequence of tags.
    pub fn split_all(self, tags: &[u64]) -> Self {
        tags.iter().fold(self, |k, &t| k.split(t))
    }

    /// The `i`-th raw 64-bit word of this key's stream.
    #[inline(always)]
    pub fn word(self, i: u64) -> u64 {
        mix64(self.0.wrapping_add(GOLDEN.wrapping_mul(i.wrapping_add(1))))
    }

    /// Uniform in [0, 1) with 53 bits of resolution, from word 0.
    #[inline(always)]
    pub fn uniform(self) -> f64 {
        to_unit(self.word(0))
    }

    /// A single Bernoulli(p) coin attached to this key.
    #[inline(always)]
    pub fn coin(self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn stream(self) -> CounterRng {
        CounterRng { key: self, counter: 0 }
    }
}

#[inline(always)]
fn to_unit(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential generator reading successive words of a key.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: StreamKey,
    counter: u64,
}

impl CounterRng {
    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        let w = self.key.word(self.counter);
        self.counter += 1;
        w
    }

    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform integer in `[0, n)` by multiply-shift.
    #[inline(always)]
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    #[inline(always)]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}
