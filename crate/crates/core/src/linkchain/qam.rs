//! Square Gray-labelled QAM: mapping, max-log demapping and soft mapping.
//!
//! Each axis carries `B/2` bits labelled with the reflected Gray code over
//! ascending amplitude levels; the first half of a symbol's bits select the
//! real level. For 16-QAM the axis table is `00 -> -3, 01 -> -1, 11 -> +1,
//! 10 -> +3`, scaled by `1/sqrt(10)`.

use std::str::FromStr;

use num_complex::Complex64;

use crate::{Error, Result};

use super::clamp_llr;

/// How decoder LLRs are turned into feedback symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SoftMapper {
    /// Conditional mean of the axis level given independent bit LLRs.
    #[default]
    Expectation,
    /// Most likely constellation level.
    Hard,
}

impl FromStr for SoftMapper {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "expectation" | "soft" => Ok(SoftMapper::Expectation),
            "hard" | "projection" => Ok(SoftMapper::Hard),
            other => Err(Error::config(format!("unknown soft mapper '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_axis: usize,
    /// Axis amplitudes in ascending order, unit average symbol energy.
    levels: Vec<f64>,
    /// `labels[k]` is the Gray label of `levels[k]`.
    labels: Vec<u32>,
    /// `level_of_label[label]` inverts `labels`.
    level_of_label: Vec<usize>,
}

impl Constellation {
    /// Square QAM of the given order (4, 16, 64 or 256).
    pub fn new(order: usize) -> Result<Self> {
        let bits = match order {
            4 => 1,
            16 => 2,
            64 => 3,
            256 => 4,
            _ => {
                return Err(Error::config(format!(
                    "unsupported constellation order {order} (expected 4, 16, 64 or 256)"
                )))
            }
        };
        let l = 1usize << bits;
        let scale = (2.0 * ((l * l - 1) as f64) / 3.0).sqrt().recip();
        let levels: Vec<f64> = (0..l).map(|k| (2.0 * k as f64 - (l as f64 - 1.0)) * scale).collect();
        let labels: Vec<u32> = (0..l as u32).map(|k| k ^ (k >> 1)).collect();
        let mut level_of_label = vec![0; l];
        for (k, &lab) in labels.iter().enumerate() {
            level_of_label[lab as usize] = k;
        }
        Ok(Self {
            order,
            bits_per_axis: bits,
            levels,
            labels,
            level_of_label,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits per complex symbol `B`.
    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_axis
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Bit `i` (MSB first) of a label.
    #[inline]
    fn label_bit(&self, label: u32, i: usize) -> u8 {
        ((label >> (self.bits_per_axis - 1 - i)) & 1) as u8
    }

    fn axis_level(&self, bits: &[u8]) -> f64 {
        let label = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
        self.levels[self.level_of_label[label as usize]]
    }

    /// All constellation points in label order.
    pub fn points(&self) -> Vec<Complex64> {
        let b = self.bits_per_symbol();
        (0..self.order)
            .map(|v| {
                let bits: Vec<u8> = (0..b).map(|i| ((v >> (b - 1 - i)) & 1) as u8).collect();
                self.map(&bits).expect("exact length")[0]
            })
            .collect()
    }

    /// Maps `B` bits per symbol onto complex points.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let b = self.bits_per_symbol();
        if !bits.len().is_multiple_of(b) {
            return Err(Error::framing(format!(
                "{} bits is not a multiple of {b} bits per symbol",
                bits.len()
            )));
        }
        let m = self.bits_per_axis;
        Ok(bits
            .chunks_exact(b)
            .map(|c| Complex64::new(self.axis_level(&c[..m]), self.axis_level(&c[m..])))
            .collect())
    }

    /// Max-log LLRs of the `B/2` bits on one axis for the unbiased estimate
    /// `s_hat = s + nu`, `Var(nu) = 1 / (2 sinr)`. With `priors`, the output
    /// is extrinsic: each bit's own prior is left out.
    pub fn llrs(&self, s_hat: f64, sinr: f64, priors: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.bits_per_axis];
        self.llrs_into(s_hat, sinr, priors, &mut out)?;
        Ok(out)
    }

    pub fn llrs_into(&self, s_hat: f64, sinr: f64, priors: Option<&[f64]>, out: &mut [f64]) -> Result<()> {
        if !(sinr > 0.0) {
            return Err(Error::NumericDomain(format!("SINR must be positive, got {sinr}")));
        }
        let m = self.bits_per_axis;
        if let Some(p) = priors {
            if p.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: p.len(),
                });
            }
        }
        // (s_hat - a)^2 / (2 sigma^2) with sigma^2 = 1 / (2 sinr)
        let mut best = [[f64::INFINITY; 2]; 8];
        for (&a, &label) in self.levels.iter().zip(&self.labels) {
            let d = (s_hat - a) * (s_hat - a) * sinr;
            let prior_cost: f64 = match priors {
                Some(p) => (0..m).map(|i| f64::from(self.label_bit(label, i)) * p[i]).sum(),
                None => 0.0,
            };
            for (i, slot) in best.iter_mut().take(m).enumerate() {
                let bit = self.label_bit(label, i);
                let own = match priors {
                    Some(p) => f64::from(bit) * p[i],
                    None => 0.0,
                };
                let metric = d + prior_cost - own;
                if metric < slot[bit as usize] {
                    slot[bit as usize] = metric;
                }
            }
        }
        for (o, slot) in out.iter_mut().zip(best.iter()) {
            *o = clamp_llr(slot[1] - slot[0]);
        }
        Ok(())
    }

    /// Axis estimate from the `B/2` LLRs of one axis.
    pub fn soft_axis(&self, llrs: &[f64], mode: SoftMapper) -> f64 {
        let m = self.bits_per_axis;
        debug_assert_eq!(llrs.len(), m);
        match mode {
            SoftMapper::Hard => {
                let bits: Vec<u8> = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
                self.axis_level(&bits)
            }
            SoftMapper::Expectation => {
                // P(bit = 1) = 1 / (1 + exp(L))
                let mut p1 = [0.0f64; 8];
                for (p, &l) in p1.iter_mut().zip(llrs) {
                    *p = 1.0 / (1.0 + l.exp());
                }
                self.levels
                    .iter()
                    .zip(&self.labels)
                    .map(|(&a, &label)| {
                        let prob: f64 = (0..m)
                            .map(|i| {
                                if self.label_bit(label, i) == 1 {
                                    p1[i]
                                } else {
                                    1.0 - p1[i]
                                }
                            })
                            .product();
                        a * prob
                    })
                    .sum()
            }
        }
    }

    /// Soft symbol estimates as stacked reals `[re, im, re, im, ...]`, one
    /// pair per `B` LLRs.
    pub fn soft_map(&self, llrs: &[f64], mode: SoftMapper) -> Result<Vec<f64>> {
        let b = self.bits_per_symbol();
        if !llrs.len().is_multiple_of(b) {
            return Err(Error::framing(format!(
                "{} LLRs is not a multiple of {b} bits per symbol",
                llrs.len()
            )));
        }
        Ok(llrs
            .chunks_exact(self.bits_per_axis)
            .map(|axis| self.soft_axis(axis, mode))
            .collect())
    }
}
