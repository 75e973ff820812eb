//! Seeded random streams.
//!
//! Every consumer of randomness asks for an [`RngSpec`], a pair of a user
//! seed and a [`Stream`] tag. The tag is hashed into the seed so that, for
//! example, changing how folds are shuffled never perturbs autoencoder
//! initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    FoldShuffle,
    AeInit,
    AeBatchOrder,
    Subsample,
    Jitter,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::FoldShuffle => 0x464f_4c44_5348_5546,
            Stream::AeInit => 0x4145_494e_4954_0001,
            Stream::AeBatchOrder => 0x4145_4241_5443_4802,
            Stream::Subsample => 0x5355_4253_414d_5003,
            Stream::Jitter => 0x4a49_5454_4552_0004,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: Stream,
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(seed: u64, stream: Stream) -> Self {
        RngSpec { seed, stream }
    }

    /// A child spec on the same stream whose seed also depends on `keys`.
    /// Used to give every (K, fold) task its own independent sequence.
    pub fn derive(&self, keys: &[u64]) -> RngSpec {
        let seed = keys
            .iter()
            .fold(mix64(self.seed), |acc, &k| mix64(acc ^ mix64(k)));
        RngSpec {
            seed,
            stream: self.stream,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix64(self.seed ^ self.stream.tag()))
    }
}
