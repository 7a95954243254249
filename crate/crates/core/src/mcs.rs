//! Modulation and coding schemes: space-time code, QAM order and code rate.

use std::fmt;

use crate::linkchain::CodeRate;
use crate::stcode::StScheme;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mcs {
    pub scheme: StScheme,
    pub order: usize,
    pub rate: CodeRate,
}

/// The four supported combinations and their spectral efficiency.
pub const STANDARD_MCS: [(f64, Mcs); 4] = [
    (
        4.0,
        Mcs {
            scheme: StScheme::Alamouti,
            order: 64,
            rate: CodeRate::TwoThirds,
        },
    ),
    (
        4.0,
        Mcs {
            scheme: StScheme::Golden,
            order: 16,
            rate: CodeRate::Half,
        },
    ),
    (
        6.0,
        Mcs {
            scheme: StScheme::Alamouti,
            order: 256,
            rate: CodeRate::ThreeQuarters,
        },
    ),
    (
        6.0,
        Mcs {
            scheme: StScheme::Golden,
            order: 64,
            rate: CodeRate::Half,
        },
    ),
];

impl Mcs {
    pub fn new(scheme: StScheme, order: usize, rate: CodeRate) -> Self {
        Self { scheme, order, rate }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// `eta = R * B * R_c` in bit/s/Hz.
    pub fn eta(&self) -> f64 {
        self.scheme.rate() * self.bits_per_symbol() as f64 * self.rate.value()
    }

    pub fn is_standard(&self) -> bool {
        STANDARD_MCS.iter().any(|(_, m)| m == self)
    }

    /// Rejects combinations outside [`STANDARD_MCS`] unless `allow_nonstandard`.
    pub fn check(&self, allow_nonstandard: bool) -> Result<()> {
        if self.is_standard() || allow_nonstandard {
            return Ok(());
        }
        Err(Error::config(format!(
            "{self} (eta = {}) is not one of the supported combinations: {}; set allow_nonstandard_mcs = true to override",
            self.eta(),
            STANDARD_MCS
                .iter()
                .map(|(eta, m)| format!("{m} (eta = {eta})"))
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }

    /// Identifier of the constellation and code pair. The AWGN reference
    /// curve depends on this only, so LUTs and models are keyed by it.
    pub fn id(&self) -> String {
        let (a, b) = self.rate.ratio();
        format!("{}qam-r{a}_{b}", self.order)
    }
}

impl fmt::Display for Mcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}-QAM rate {}", self.scheme, self.order, self.rate)
    }
}
