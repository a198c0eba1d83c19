//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, stream)`. ChaCha is a counter-mode cipher, so stream `k` is a
//! fixed function of the key and never depends on which worker happens to
//! run it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Offset that separates initial-condition sampling from noise streams.
pub(crate) const SAMPLER_STREAM_BIT: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}
