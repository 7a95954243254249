//! Seeded random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A fixed permutation: `out[i] = input[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn identity(len: usize) -> Self {
        Self {
            perm: (0..len).collect(),
        }
    }

    /// Uniform random permutation (Fisher-Yates) determined by `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.perm.len() {
            return Err(Error::framing(format!(
                "interleaver of length {} applied to {n} items",
                self.perm.len()
            )));
        }
        Ok(())
    }

    pub fn interleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        self.check(seq.len())?;
        Ok(self.perm.iter().map(|&p| seq[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, seq: &[T]) -> Result<Vec<T>> {
        self.check(seq.len())?;
        let mut out = vec![T::default(); seq.len()];
        for (&p, &v) in self.perm.iter().zip(seq) {
            out[p] = v;
        }
        Ok(out)
    }
}
