//! Rate-1/2 (133,171) convolutional code, K = 7, zero-tail terminated, with
//! DVB-style puncturing to 2/3 and 3/4.

use crate::{Error, Result};

use super::CodeRate;

pub const GENERATORS: [u32; 2] = [0o133, 0o171];
pub const CONSTRAINT_LENGTH: usize = 7;
pub const MEMORY: usize = CONSTRAINT_LENGTH - 1;
pub const N_STATES: usize = 1 << MEMORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    pub generators: [u32; 2],
    pub constraint_length: usize,
    pub rate: CodeRate,
}

impl CodecConfig {
    pub fn new(rate: CodeRate) -> Self {
        Self {
            generators: GENERATORS,
            constraint_length: CONSTRAINT_LENGTH,
            rate,
        }
    }
}

/// Output pair of one encoder step: `(c1, c2)` for register contents `reg`,
/// where bit 6 of `reg` is the current input and bit 0 the oldest.
#[inline]
pub(crate) fn step_output(reg: u32) -> (u8, u8) {
    (
        ((reg & GENERATORS[0]).count_ones() & 1) as u8,
        ((reg & GENERATORS[1]).count_ones() & 1) as u8,
    )
}

/// Encodes at the mother rate, appending `K - 1` zero tail bits.
pub fn encode_mother(bits: &[u8]) -> Vec<u8> {
    let mut state: u32 = 0;
    let mut out = Vec::with_capacity(2 * (bits.len() + MEMORY));
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, MEMORY)) {
        let reg = (u32::from(b & 1) << MEMORY) | state;
        let (c1, c2) = step_output(reg);
        out.push(c1);
        out.push(c2);
        state = reg >> 1;
    }
    debug_assert_eq!(state, 0);
    out
}

/// Keep-flags over one puncturing period in mother output order.
fn keep_pattern(rate: CodeRate) -> Vec<bool> {
    let [g1, g2] = rate.mask();
    g1.iter().zip(g2).flat_map(|(&a, &b)| [a == 1, b == 1]).collect()
}

/// Number of coded bits left after puncturing `steps` trellis steps.
pub fn punctured_len(rate: CodeRate, steps: usize) -> usize {
    let pat = keep_pattern(rate);
    (0..2 * steps).filter(|&i| pat[i % pat.len()]).count()
}

/// Drops the masked positions of a mother-rate sequence.
pub fn puncture<T: Copy>(mother: &[T], rate: CodeRate) -> Vec<T> {
    let pat = keep_pattern(rate);
    mother
        .iter()
        .enumerate()
        .filter(|(i, _)| pat[i % pat.len()])
        .map(|(_, &v)| v)
        .collect()
}

/// Reinserts zero LLRs (erasures) at punctured positions of a frame that
/// spans `steps` trellis steps.
pub fn depuncture(llrs: &[f64], rate: CodeRate, steps: usize) -> Result<Vec<f64>> {
    let expected = punctured_len(rate, steps);
    if llrs.len() != expected {
        return Err(Error::framing(format!(
            "punctured frame has {} LLRs, rate {rate} over {steps} steps needs {expected}",
            llrs.len()
        )));
    }
    let pat = keep_pattern(rate);
    let mut it = llrs.iter();
    Ok((0..2 * steps)
        .map(|i| {
            if pat[i % pat.len()] {
                *it.next().expect("length checked")
            } else {
                0.0
            }
        })
        .collect())
}

/// Terminated encoding followed by puncturing.
pub fn conv_encode(bits: &[u8], cfg: &CodecConfig) -> Vec<u8> {
    puncture(&encode_mother(bits), cfg.rate)
}

/// Sizes of one coded frame mapped onto `capacity` modulated bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub info_bits: usize,
    pub steps: usize,
    pub coded_bits: usize,
    /// Modulated bits; positions past `coded_bits` carry known zero padding.
    pub capacity: usize,
}

impl FrameLayout {
    /// Largest information block whose terminated, punctured codeword fits
    /// into `capacity` bits.
    pub fn for_capacity(rate: CodeRate, capacity: usize) -> Result<Self> {
        let (k, n) = rate.ratio();
        // punctured_len(steps) >= steps * n / k - 1, so this bound is safe
        let mut steps = capacity * k / n + 2;
        while steps > 0 && punctured_len(rate, steps) > capacity {
            steps -= 1;
        }
        if steps <= MEMORY {
            return Err(Error::config(format!(
                "frame capacity {capacity} too small for a terminated codeword"
            )));
        }
        Ok(Self {
            info_bits: steps - MEMORY,
            steps,
            coded_bits: punctured_len(rate, steps),
            capacity,
        })
    }

    pub fn pad_bits(&self) -> usize {
        self.capacity - self.coded_bits
    }
}
