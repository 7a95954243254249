//! One packet through transmitter, channel and iterative receiver.

use rand::Rng;

use crate::channel::{
    apply_channel, equivalent_channels, EquivalentChannel, FrequencyChannel, NoiseModel, PowerProfile,
};
use crate::detector::{IterativeReceiver, ReceiverConfig, ReceiverOutput};
use crate::linkchain::{CodecConfig, Constellation, LinkChain};
use crate::mcs::Mcs;
use crate::stcode::{build_f, dispersion_set, DispersionSet};
use crate::{RMatrix, Result};

/// Frame geometry and receiver settings shared by every packet of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub mcs: Mcs,
    pub n_subcarriers: usize,
    /// Codeword slots per subcarrier in one packet (`K`).
    pub codewords_per_subcarrier: usize,
    pub interleaver_seed: Option<u64>,
    pub receiver: ReceiverConfig,
    pub m_r: usize,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub params: LinkParams,
    pub ds: DispersionSet,
    pub f: RMatrix,
    pub chain: LinkChain,
}

#[derive(Debug, Clone)]
pub struct PacketOutcome {
    pub bits: u64,
    /// Information bit errors after each iteration.
    pub errors: Vec<u64>,
    pub output: ReceiverOutput,
}

impl PacketOutcome {
    pub fn final_errors(&self) -> u64 {
        self.errors.last().copied().unwrap_or(0)
    }
}

impl Link {
    pub fn new(params: LinkParams) -> Result<Self> {
        let ds = dispersion_set(params.mcs.scheme);
        let f = build_f(&ds);
        let chain = LinkChain::new(
            CodecConfig::new(params.mcs.rate),
            Constellation::new(params.mcs.order)?,
            ds.q_symbols(),
            params.n_subcarriers * params.codewords_per_subcarrier,
            params.interleaver_seed,
        )?;
        Ok(Self { params, ds, f, chain })
    }

    pub fn info_bits(&self) -> usize {
        self.chain.info_bits()
    }

    pub fn equivalent(&self, h: &FrequencyChannel, power: &PowerProfile) -> Result<Vec<EquivalentChannel>> {
        equivalent_channels(h, power, &self.f, self.ds.t_slots())
    }

    pub fn receiver(&self, channels: &[EquivalentChannel], noise: &NoiseModel) -> Result<IterativeReceiver> {
        IterativeReceiver::new(channels, noise, self.params.receiver.clone())
    }

    /// Sends one random packet. Data and noise come from separate streams.
    pub fn run_packet<D: Rng, W: Rng>(
        &self,
        channels: &[EquivalentChannel],
        receiver: &IterativeReceiver,
        noise: &NoiseModel,
        data_rng: &mut D,
        noise_rng: &mut W,
    ) -> Result<PacketOutcome> {
        let info: Vec<u8> = (0..self.info_bits()).map(|_| data_rng.random_range(0..2u8)).collect();
        let frame = self.chain.encode(&info)?;
        let slots = self.chain.modulate(&frame)?;
        let n_sc = channels.len();
        let y = slots
            .iter()
            .enumerate()
            .map(|(j, s)| apply_channel(&channels[j % n_sc], &s.0, noise, noise_rng))
            .collect::<Result<Vec<_>>>()?;
        let output = receiver.run(&y, &self.chain)?;
        let errors = output
            .hard_bits
            .iter()
            .map(|hb| hb.iter().zip(&info).filter(|(a, b)| a != b).count() as u64)
            .collect();
        Ok(PacketOutcome {
            bits: info.len() as u64,
            errors,
            output,
        })
    }
}
