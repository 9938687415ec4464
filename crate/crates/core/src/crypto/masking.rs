use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::rng;

/// Boolean sharing of one byte: `secret = shares[0] ⊕ … ⊕ shares[d]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedSecret {
    shares: Vec<u8>,
}

impl SharedSecret {
    /// Needs at least two shares.
    pub fn from_shares(shares: Vec<u8>) -> Option<Self> {
        (shares.len() >= 2).then_some(Self { shares })
    }

    pub fn shares(&self) -> &[u8] {
        &self.shares
    }

    /// Masking order d (number of shares minus one).
    pub fn order(&self) -> usize {
        self.shares.len() - 1
    }
}

/// Split `secret` into `order + 1` shares: the first `order` are uniform,
/// the last closes the XOR. Deterministic in `seed`.
pub fn share_split(secret: u8, order: usize, seed: u64) -> SharedSecret {
    let mut r = rng::stream(seed, "share-split", 0);
    share_split_with(secret, order, &mut r)
}

pub fn share_split_with<R: RngCore + ?Sized>(secret: u8, order: usize, rng: &mut R) -> SharedSecret {
    assert!(order >= 1, "masking order must be >= 1");
    let mut shares: Vec<u8> = (0..order).map(|_| rng.random()).collect();
    let last = shares.iter().fold(secret, |acc, s| acc ^ s);
    shares.push(last);
    SharedSecret { shares }
}

pub fn share_recombine(shared: &SharedSecret) -> u8 {
    shared.shares.iter().fold(0, |acc, s| acc ^ s)
}

/// Share a multi-byte value; result is indexed `[share][byte]`.
pub fn split_bytes<R: RngCore + ?Sized>(secret: &[u8], order: usize, rng: &mut R) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; secret.len()]; order + 1];
    for (b, &x) in secret.iter().enumerate() {
        let s = share_split_with(x, order, rng);
        for (share, v) in s.shares.iter().enumerate() {
            out[share][b] = *v;
        }
    }
    out
}

/// XOR-fold `[share][byte]` shares back into bytes.
pub fn recombine_bytes(shares: &[Vec<u8>]) -> Vec<u8> {
    let len = shares.first().map_or(0, Vec::len);
    (0..len)
        .map(|b| shares.iter().fold(0u8, |acc, s| acc ^ s[b]))
        .collect()
}
