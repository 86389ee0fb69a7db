//! Stable seed derivation.
//!
//! Every randomized unit of work gets its own seed from
//! `derive(master, tag, parts)`, so results never depend on scheduling order
//! or thread count. The hash is FNV-1a over the tag and parts followed by a
//! SplitMix64 finalizer; it is fixed across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A component mixed into a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Part<'a> {
    fn from(s: &'a str) -> Self {
        Part::Str(s)
    }
}

impl From<u64> for Part<'_> {
    fn from(v: u64) -> Self {
        Part::Int(v)
    }
}

impl From<usize> for Part<'_> {
    fn from(v: usize) -> Self {
        Part::Int(v as u64)
    }
}

pub fn derive(master: u64, tag: &str, parts: &[Part<'_>]) -> u64 {
    let mut h = FNV_OFFSET;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    eat(&master.to_le_bytes());
    eat(tag.as_bytes());
    for part in parts {
        // Separator bytes keep ("ab","c") and ("a","bc") apart.
        match part {
            Part::Str(s) => {
                eat(&[0xff, 0x01]);
                eat(&(s.len() as u64).to_le_bytes());
                eat(s.as_bytes());
            }
            Part::Int(v) => {
                eat(&[0xff, 0x02]);
                eat(&v.to_le_bytes());
            }
        }
    }
    splitmix64(h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
