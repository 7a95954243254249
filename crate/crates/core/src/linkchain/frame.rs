//! One coded frame spread over the codeword slots of a packet: encoding,
//! padding, interleaving and QAM mapping, plus the matching soft decode
//! stage used inside the iterative receiver.

use num_complex::Complex64;

use crate::stcode::SymbolVector;
use crate::{Error, Result};

use super::conv::{conv_encode, depuncture, puncture, CodecConfig, FrameLayout};
use super::{siso_decode, Constellation, Interleaver, SisoOutput, SoftMapper, LLR_CLAMP};

/// Transmit/receive bit chain for a fixed frame geometry.
#[derive(Debug, Clone)]
pub struct LinkChain {
    pub codec: CodecConfig,
    pub constellation: Constellation,
    pub interleaver: Interleaver,
    pub layout: FrameLayout,
    /// Complex symbols per codeword slot (`Q`).
    pub q_symbols: usize,
    pub n_slots: usize,
}

/// Soft decoder output re-expressed in transmitted (interleaved) bit order.
#[derive(Debug, Clone)]
pub struct FrameDecode {
    pub siso: SisoOutput,
    /// Posterior LLR per transmitted bit; padding bits sit at `+LLR_CLAMP`.
    pub frame_posterior: Vec<f64>,
    /// Extrinsic LLR per transmitted bit.
    pub frame_extrinsic: Vec<f64>,
}

impl LinkChain {
    /// `interleaver_seed = None` selects the identity permutation.
    pub fn new(
        codec: CodecConfig,
        constellation: Constellation,
        q_symbols: usize,
        n_slots: usize,
        interleaver_seed: Option<u64>,
    ) -> Result<Self> {
        let capacity = n_slots * q_symbols * constellation.bits_per_symbol();
        let layout = FrameLayout::for_capacity(codec.rate, capacity)?;
        let interleaver = match interleaver_seed {
            Some(seed) => Interleaver::random(capacity, seed),
            None => Interleaver::identity(capacity),
        };
        Ok(Self {
            codec,
            constellation,
            interleaver,
            layout,
            q_symbols,
            n_slots,
        })
    }

    pub fn info_bits(&self) -> usize {
        self.layout.info_bits
    }

    /// Encoded, zero-padded and interleaved frame of `capacity` bits.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.layout.info_bits {
            return Err(Error::framing(format!(
                "frame takes {} information bits, got {}",
                self.layout.info_bits,
                info.len()
            )));
        }
        let mut coded = conv_encode(info, &self.codec);
        coded.resize(self.layout.capacity, 0);
        self.interleaver.interleave(&coded)
    }

    /// Maps frame bits onto one stacked symbol vector per slot. Symbol `m`
    /// goes to slot `m / Q`.
    pub fn modulate(&self, frame: &[u8]) -> Result<Vec<SymbolVector>> {
        let symbols = self.constellation.map(frame)?;
        if symbols.len() != self.n_slots * self.q_symbols {
            return Err(Error::framing("frame does not fill the packet"));
        }
        Ok(symbols
            .chunks_exact(self.q_symbols)
            .map(SymbolVector::from_complex)
            .collect())
    }

    pub fn symbols(&self, frame: &[u8]) -> Result<Vec<Complex64>> {
        self.constellation.map(frame)
    }

    /// Runs the SISO decoder on channel LLRs given in transmitted bit order.
    pub fn decode(&self, frame_llrs: &[f64]) -> Result<FrameDecode> {
        let coded = &self.interleaver.deinterleave(frame_llrs)?[..self.layout.coded_bits];
        let mother = depuncture(coded, self.codec.rate, self.layout.steps)?;
        let siso = siso_decode(&mother)?;
        let to_frame = |mother_llrs: &[f64]| -> Result<Vec<f64>> {
            let mut v = puncture(mother_llrs, self.codec.rate);
            v.resize(self.layout.capacity, LLR_CLAMP);
            self.interleaver.interleave(&v)
        };
        let frame_posterior = to_frame(&siso.posterior)?;
        let frame_extrinsic = to_frame(&siso.extrinsic)?;
        Ok(FrameDecode {
            siso,
            frame_posterior,
            frame_extrinsic,
        })
    }

    /// Feedback symbols per slot from frame-order LLRs.
    pub fn soft_symbols(&self, frame_llrs: &[f64], mode: SoftMapper) -> Result<Vec<Vec<f64>>> {
        let flat = self.constellation.soft_map(frame_llrs, mode)?;
        Ok(flat.chunks_exact(2 * self.q_symbols).map(<[f64]>::to_vec).collect())
    }
}
