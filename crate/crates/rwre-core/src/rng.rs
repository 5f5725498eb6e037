//! Deterministic random streams.
//!
//! Environment sites draw from a counter-based ChaCha8 stream: site `j` owns
//! words `[4j, 4j + 4)` (64-bit) of the keystream for the environment seed, so
//! a site's value does not depend on how many sites were generated before it
//! or on the requested length. Walks use xoshiro256++, which is faster and
//! only ever consumed sequentially.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// 64-bit words reserved for each environment site.
pub const WORDS_PER_SITE: usize = 4;

/// Walk generator.
pub type WalkRng = Xoshiro256PlusPlus;

pub fn walk_rng(seed: u64) -> WalkRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(tag, index)` under `root`. Different tags keep the streams
/// of different roles (environment, walk, ...) apart.
pub fn derive_seed(root: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ tag.rotate_left(17)) ^ index)
}

pub mod tag {
    pub const ENVIRONMENT: u64 = 0x656e_7669;
    pub const WALK: u64 = 0x7761_6c6b;
    pub const CELL: u64 = 0x6365_6c6c;
    pub const TRIAL: u64 = 0x7472_6961;
}

/// Uniform on `(0, 1]` from 53 random bits.
#[inline]
pub fn unit_open0(w: u64) -> f64 {
    ((w >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[0, 1)` from 53 random bits.
#[inline]
pub fn unit_closed0(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Per-site word blocks of the environment keystream.
#[derive(Clone, Debug)]
pub struct SiteBlocks {
    rng: ChaCha8Rng,
    next_site: u64,
}

impl SiteBlocks {
    pub fn new(seed: u64) -> Self {
        SiteBlocks { rng: ChaCha8Rng::seed_from_u64(seed), next_site: 0 }
    }

    /// Words of site `j`. Sequential access avoids re-seeking.
    #[inline]
    pub fn site(&mut self, j: u64) -> [u64; WORDS_PER_SITE] {
        if j != self.next_site {
            self.rng.set_word_pos(2 * WORDS_PER_SITE as u128 * j as u128);
        }
        self.next_site = j + 1;
        let mut w = [0u64; WORDS_PER_SITE];
        for x in &mut w {
            *x = self.rng.next_u64();
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_blocks_are_position_addressed() {
        let mut seq = SiteBlocks::new(11);
        let all: alloc::vec::Vec<_> = (0..50).map(|j| seq.site(j)).collect();
        let mut jump = SiteBlocks::new(11);
        for j in [37u64, 3, 49, 0, 1, 2] {
            assert_eq!(jump.site(j), all[j as usize]);
        }
        assert_ne!(SiteBlocks::new(12).site(0), all[0]);
    }

    #[test]
    fn uniforms_stay_in_range() {
        assert_eq!(unit_open0(0), 1.0 / (1u64 << 53) as f64);
        assert_eq!(unit_open0(u64::MAX), 1.0);
        assert_eq!(unit_closed0(0), 0.0);
        assert!(unit_closed0(u64::MAX) < 1.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, tag::WALK, 0);
        assert_ne!(a, derive_seed(1, tag::WALK, 1));
        assert_ne!(a, derive_seed(1, tag::ENVIRONMENT, 0));
        assert_ne!(a, derive_seed(2, tag::WALK, 0));
        assert_eq!(a, derive_seed(1, tag::WALK, 0));
    }
}
