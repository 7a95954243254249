//! Flat TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelKind, PowerProfile};
use crate::detector::{FeedbackLlr, ReceiverConfig};
use crate::eesm::{CalibrationOptions, LutSetup, SinrSource};
use crate::linkchain::{CodeRate, SoftMapper};
use crate::mcs::Mcs;
use crate::sim::link::LinkParams;
use crate::sim::seeds::derive_u64;
use crate::stcode::StScheme;
use crate::{Error, Result};

/// Every key of the configuration file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scheme: String,
    pub constellation: usize,
    pub code_rate: String,
    pub allow_nonstandard_mcs: bool,

    pub channel: String,
    pub n_subcarriers: usize,
    pub bandwidth_hz: f64,
    /// Accepted for completeness; the frequency-domain model ignores it.
    pub guard_interval: usize,
    pub m_r: usize,
    pub power_db: Vec<f64>,
    pub snr_db: Vec<f64>,

    pub codewords_per_subcarrier: usize,
    pub interleaver: String,

    pub l_max: usize,
    pub soft_mapper: String,
    pub feedback_llr: String,
    pub demapper_priors: bool,
    pub sinr_window: usize,
    pub sinr_source: String,

    pub seed: u64,
    pub min_realizations: usize,
    pub max_realizations: usize,
    pub packets_per_realization: usize,
    pub batch_realizations: usize,
    pub min_bit_errors: u64,
    pub max_bits: u64,
    pub write_diagnostics: bool,

    pub lut_snr_db: Vec<f64>,
    pub lut_min_errors: u64,
    pub lut_max_bits: u64,
    pub lut_batch_packets: usize,

    pub calib_min_record_errors: u64,

    /// Second-antenna powers swept by `validate`, first antenna at 0 dB.
    pub validate_p2_db: Vec<f64>,
    pub waterfall_ber: [f64; 2],

    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: "alamouti".into(),
            constellation: 64,
            code_rate: "2/3".into(),
            allow_nonstandard_mcs: false,
            channel: "tu6".into(),
            n_subcarriers: 128,
            bandwidth_hz: 8e6,
            guard_interval: 1024,
            m_r: 2,
            power_db: vec![0.0, 0.0],
            snr_db: (0..=8).map(|i| 4.0 + 2.0 * i as f64).collect(),
            codewords_per_subcarrier: 8,
            interleaver: "random".into(),
            l_max: 4,
            soft_mapper: "expectation".into(),
            feedback_llr: "posterior".into(),
            demapper_priors: false,
            sinr_window: 2,
            sinr_source: "first".into(),
            seed: 1,
            min_realizations: 50,
            max_realizations: 2000,
            packets_per_realization: 1,
            batch_realizations: 16,
            min_bit_errors: 100,
            max_bits: 20_000_000,
            write_diagnostics: false,
            lut_snr_db: (0..=60).map(|i| -2.0 + 0.5 * i as f64).collect(),
            lut_min_errors: 100,
            lut_max_bits: 2_000_000,
            lut_batch_packets: 8,
            calib_min_record_errors: 10,
            validate_p2_db: vec![0.0, -3.0, -6.0],
            waterfall_ber: [1e-4, 1e-1],
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Settings that change the meaning of simulated numbers. MCS, power,
/// operating points, seeds, run lengths and paths are left out, so files
/// from one experimental setup share a hash across schemes and profiles.
#[derive(Serialize)]
struct HashedFields<'a> {
    channel: &'a str,
    n_subcarriers: usize,
    bandwidth_hz: f64,
    m_r: usize,
    codewords_per_subcarrier: usize,
    interleaver: &'a str,
    l_max: usize,
    soft_mapper: &'a str,
    feedback_llr: &'a str,
    demapper_priors: bool,
    sinr_window: usize,
    sinr_source: &'a str,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::config(format!("bad configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialise configuration: {e}")))
    }

    pub fn st_scheme(&self) -> Result<StScheme> {
        self.scheme.parse()
    }

    pub fn rate(&self) -> Result<CodeRate> {
        self.code_rate.parse()
    }

    pub fn mcs(&self) -> Result<Mcs> {
        Ok(Mcs::new(self.st_scheme()?, self.constellation, self.rate()?))
    }

    pub fn channel_kind(&self) -> Result<ChannelKind> {
        self.channel.parse()
    }

    pub fn power_profile(&self) -> Result<PowerProfile> {
        PowerProfile::new(self.power_db.clone())
    }

    pub fn sinr_source(&self) -> Result<SinrSource> {
        self.sinr_source.parse()
    }

    pub fn receiver(&self) -> Result<ReceiverConfig> {
        Ok(ReceiverConfig {
            l_max: self.l_max,
            soft_mapper: self.soft_mapper.parse::<SoftMapper>()?,
            feedback: self.feedback_llr.parse::<FeedbackLlr>()?,
            demapper_priors: self.demapper_priors,
            sinr_window: self.sinr_window,
        })
    }

    pub fn interleaver_seed(&self) -> Result<Option<u64>> {
        match self.interleaver.as_str() {
            // fixed across runs: the interleaver is part of the system, not
            // of the random experiment
            "random" => Ok(Some(derive_u64(0x1e, &[self.n_subcarriers as u64]))),
            "identity" => Ok(None),
            other => Err(Error::config(format!(
                "unknown interleaver `{other}` (random | identity)"
            ))),
        }
    }

    pub fn link_params(&self) -> Result<LinkParams> {
        Ok(LinkParams {
            mcs: self.mcs()?,
            n_subcarriers: self.n_subcarriers,
            codewords_per_subcarrier: self.codewords_per_subcarrier,
            interleaver_seed: self.interleaver_seed()?,
            receiver: self.receiver()?,
            m_r: self.m_r,
        })
    }

    pub fn lut_setup(&self) -> Result<LutSetup> {
        Ok(LutSetup {
            order: self.constellation,
            rate: self.rate()?,
            n_subcarriers: self.n_subcarriers,
            codewords_per_subcarrier: self.codewords_per_subcarrier,
            interleaver_seed: self.interleaver_seed()?,
            receiver: self.receiver()?,
            min_errors: self.lut_min_errors,
            max_bits: self.lut_max_bits,
            batch_packets: self.lut_batch_packets,
            config_hash: self.hash(),
        })
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        CalibrationOptions {
            min_record_errors: self.calib_min_record_errors,
            ..CalibrationOptions::default()
        }
    }

    /// First 16 hex digits of SHA-256 over the hashed settings.
    pub fn hash(&self) -> String {
        let fields = HashedFields {
            channel: &self.channel,
            n_subcarriers: self.n_subcarriers,
            bandwidth_hz: self.bandwidth_hz,
            m_r: self.m_r,
            codewords_per_subcarrier: self.codewords_per_subcarrier,
            interleaver: &self.interleaver,
            l_max: self.l_max,
            soft_mapper: &self.soft_mapper,
            feedback_llr: &self.feedback_llr,
            demapper_priors: self.demapper_priors,
            sinr_window: self.sinr_window,
            sinr_source: &self.sinr_source,
        };
        let canonical = toml::to_string(&fields).expect("plain struct serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        let mcs = self.mcs()?;
        mcs.check(self.allow_nonstandard_mcs)?;
        self.channel_kind()?;
        self.receiver()?;
        self.sinr_source()?;
        self.interleaver_seed()?;
        if self.m_r == 0 {
            return Err(Error::config("m_r must be at least 1"));
        }
        if self.n_subcarriers == 0 || self.n_subcarriers > 8192 {
            return Err(Error::config(format!(
                "n_subcarriers must be in 1..=8192, got {}",
                self.n_subcarriers
            )));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::config("bandwidth_hz must be positive"));
        }
        if self.power_db.len() != mcs.scheme.m_t() {
            return Err(Error::config(format!(
                "power_db needs {} entries, got {}",
                mcs.scheme.m_t(),
                self.power_db.len()
            )));
        }
        self.power_profile()?;
        if self.codewords_per_subcarrier == 0 {
            return Err(Error::config("codewords_per_subcarrier must be at least 1"));
        }
        if self.l_max == 0 {
            return Err(Error::config("l_max must be at least 1"));
        }
        check_increasing("snr_db", &self.snr_db)?;
        check_increasing("lut_snr_db", &self.lut_snr_db)?;
        if self.packets_per_realization == 0 || self.batch_realizations == 0 || self.lut_batch_packets == 0 {
            return Err(Error::config("packet and batch counts must be at least 1"));
        }
        if self.max_realizations < self.min_realizations.max(1) {
            return Err(Error::config("max_realizations must be at least min_realizations"));
        }
        if self.max_bits == 0 || self.lut_max_bits == 0 {
            return Err(Error::config("bit budgets must be positive"));
        }
        if !(self.waterfall_ber[0] > 0.0 && self.waterfall_ber[0] < self.waterfall_ber[1]) {
            return Err(Error::config(
                "waterfall_ber must be an increasing pair of positive BERs",
            ));
        }
        Ok(())
    }
}

fn check_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::config(format!("{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(SimConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = SimConfig::from_toml("scheme = \"golden\"\nconstellation = 16\ncode_rate = \"1/2\"\n").unwrap();
        assert_eq!(cfg.mcs().unwrap().eta(), 4.0);
        assert_eq!(cfg.n_subcarriers, 128);
    }

    #[test]
    fn rejects_bad_files() {
        let bad = [
            "bogus_key = 1",
            "scheme = \"golden\"\nconstellation = 256\ncode_rate = \"3/4\"",
            "snr_db = []",
            "snr_db = [3.0, 1.0]",
            "power_db = [0.0]",
            "channel = \"rician\"",
            "l_max = 0",
            "interleaver = \"block\"",
        ];
        for text in bad {
            assert!(matches!(SimConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
        let ok = "scheme = \"golden\"\nconstellation = 256\ncode_rate = \"3/4\"\nallow_nonstandard_mcs = true";
        assert!(SimConfig::from_toml(ok).is_ok());
    }

    #[test]
    fn hash_ignores_run_fields() {
        let a = SimConfig::default();
        let mut b = a.clone();
        b.seed = 99;
        b.output_dir = "elsewhere".into();
        b.power_db = vec![0.0, -6.0];
        b.scheme = "golden".into();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.l_max = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
