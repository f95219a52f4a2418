use rand::seq::SliceRandom;

use crate::rng::stream_rng;
use crate::{Error, Result};

/// A permutation `pi`; interleaving maps `v[k] = u[pi[k]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    pub fn from_permutation(perm: Vec<usize>) -> Result<Self> {
        let mut inverse = vec![usize::MAX; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            if p >= perm.len() || inverse[p] != usize::MAX {
                return Err(Error::InvalidParameter(
                    "interleaver is not a permutation".into(),
                ));
            }
            inverse[p] = k;
        }
        Ok(Self { perm, inverse })
    }

    /// Seeded pseudorandom permutation (Fisher-Yates over ChaCha8).
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut stream_rng(seed, &[len as u64]));
        Self::from_permutation(perm).expect("shuffle yields a permutation")
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| input[p]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&k| input[k]).collect()
    }
}
