//! Bit-level transmit chain and its soft inverse.
//!
//! Transmit: [`conv::conv_encode`] (zero-terminated (133,171) code, then
//! puncturing), [`interleave::Interleaver`], [`qam::Constellation::map`].
//! Receive: [`qam::Constellation::llrs`] (max-log demapping),
//! [`conv::depuncture`], [`bcjr::siso_decode`] and
//! [`qam::Constellation::soft_map`] for interference-cancellation feedback.

pub mod bcjr;
pub mod conv;
pub mod frame;
pub mod interleave;
pub mod qam;

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

pub use bcjr::{siso_decode, siso_decode_log, SisoOutput};
pub use conv::{conv_encode, depuncture, puncture, CodecConfig, FrameLayout};
pub use frame::{FrameDecode, LinkChain};
pub use interleave::Interleaver;
pub use qam::{Constellation, SoftMapper};

/// Magnitude at which every LLR in the chain saturates.
pub const LLR_CLAMP: f64 = 50.0;

pub(crate) fn clamp_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

/// Punctured code rate of the (133,171) mother code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeRate {
    Half,
    TwoThirds,
    ThreeQuarters,
}

impl CodeRate {
    pub fn value(self) -> f64 {
        let (k, n) = self.ratio();
        k as f64 / n as f64
    }

    pub fn ratio(self) -> (usize, usize) {
        match self {
            CodeRate::Half => (1, 2),
            CodeRate::TwoThirds => (2, 3),
            CodeRate::ThreeQuarters => (3, 4),
        }
    }

    /// Puncturing mask, one row per generator, one column per trellis step
    /// of the period.
    pub fn mask(self) -> [&'static [u8]; 2] {
        match self {
            CodeRate::Half => [&[1], &[1]],
            CodeRate::TwoThirds => [&[1, 1], &[1, 0]],
            CodeRate::ThreeQuarters => [&[1, 1, 0], &[1, 0, 1]],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CodeRate::Half => "1/2",
            CodeRate::TwoThirds => "2/3",
            CodeRate::ThreeQuarters => "3/4",
        }
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" => Ok(CodeRate::Half),
            "2/3" => Ok(CodeRate::TwoThirds),
            "3/4" => Ok(CodeRate::ThreeQuarters),
            other => Err(Error::config(format!(
                "unsupported code rate '{other}' (expected 1/2, 2/3 or 3/4)"
            ))),
        }
    }
}
