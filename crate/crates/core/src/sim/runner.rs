//! Monte Carlo over channel realizations with a deterministic stopping rule.

use rayon::prelude::*;

use crate::channel::{ChannelKind, FadingGenerator, FrequencyChannel, NoiseModel, PowerDelayProfile, PowerProfile};
use crate::detector::SinrGrid;
use crate::eesm::{effective_sinr, predict_ber, to_db, AwgnLut, CalibrationRecord, EesmModel, SinrSource};
use crate::mcs::Mcs;
use crate::sim::config::SimConfig;
use crate::sim::link::Link;
use crate::sim::records::{profile_label, DiagnosticRow, PointSummary, RecordSet, RunRecord};
use crate::sim::seeds::{stream, Stage};
use crate::Result;

/// Seed domain of `simulate` runs.
pub const DOMAIN_SIMULATE: u64 = 0;
/// Held-out seed domain of `validate` runs.
pub const DOMAIN_VALIDATE: u64 = 1;

/// Everything simulated on one channel realization.
#[derive(Debug, Clone)]
pub struct RealizationOutcome {
    pub packets: u64,
    pub bits: u64,
    pub errors_per_iteration: Vec<u64>,
    /// Grid handed to the EESM, per the configured SINR source.
    pub grid: SinrGrid,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl RealizationOutcome {
    pub fn bit_errors(&self) -> u64 {
        self.errors_per_iteration.last().copied().unwrap_or(0)
    }
}

/// Output of one sweep over the configured operating points.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub run: RunRecord,
    pub records: RecordSet,
    pub diagnostics: Vec<DiagnosticRow>,
}

pub struct Runner {
    pub cfg: SimConfig,
    pub mcs: Mcs,
    pub link: Link,
    fading: Option<FadingGenerator>,
    source: SinrSource,
}

impl Runner {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mcs = cfg.mcs()?;
        let link = Link::new(cfg.link_params()?)?;
        let fading = match cfg.channel_kind()? {
            ChannelKind::Tu6 => Some(FadingGenerator::new(
                PowerDelayProfile::tu6(),
                cfg.n_subcarriers,
                cfg.bandwidth_hz,
            )?),
            ChannelKind::Flat => Some(FadingGenerator::new(
                PowerDelayProfile::single_tap(),
                cfg.n_subcarriers,
                cfg.bandwidth_hz,
            )?),
            ChannelKind::Awgn => None,
        };
        let source = cfg.sinr_source()?;
        Ok(Self {
            cfg,
            mcs,
            link,
            fading,
            source,
        })
    }

    fn draw_channel(&self, path: &[u64]) -> FrequencyChannel {
        let m_t = self.link.ds.m_t();
        match &self.fading {
            Some(f) => f.draw(&mut stream(self.cfg.seed, path, Stage::Channel), self.cfg.m_r, m_t),
            None => FrequencyChannel::unit(self.cfg.n_subcarriers, self.cfg.m_r, m_t),
        }
    }

    /// Runs `packets_per_realization` packets on realization `path`.
    pub fn realization(
        &self,
        path: &[u64],
        power: &PowerProfile,
        noise: &NoiseModel,
        snr_db: f64,
    ) -> Result<RealizationOutcome> {
        let h = self.draw_channel(path);
        let channels = self.link.equivalent(&h, power)?;
        let rx = self.link.receiver(&channels, noise)?;
        let l_max = self.cfg.l_max;
        let mut errors = vec![0u64; l_max];
        let mut bits = 0;
        let mut final_sum: Option<Vec<f64>> = None;
        let mut diagnostics = Vec::new();
        let packets = self.cfg.packets_per_realization as u64;
        for k in 0..packets {
            let mut p = path.to_vec();
            p.push(k);
            let out = self.link.run_packet(
                &channels,
                &rx,
                noise,
                &mut stream(self.cfg.seed, &p, Stage::Data),
                &mut stream(self.cfg.seed, &p, Stage::Noise),
            )?;
            for (e, o) in errors.iter_mut().zip(&out.errors) {
                *e += o;
            }
            bits += out.bits;
            if self.source == SinrSource::Final {
                let g = &out.output.final_grid().values;
                match final_sum.as_mut() {
                    None => final_sum = Some(g.clone()),
                    Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
                }
            }
            if self.cfg.write_diagnostics {
                // realization-major packet index within the operating point
                let packet_id = path.last().copied().unwrap_or(0) * packets + k;
                for (grid, diag) in out.output.grids.iter().zip(&out.output.diagnostics) {
                    for (idx, &sinr) in grid.values.iter().enumerate() {
                        diagnostics.push(DiagnosticRow {
                            snr_db,
                            packet_id,
                            iteration: grid.iteration,
                            subcarrier: idx / grid.dims,
                            p: idx % grid.dims,
                            sinr,
                            i1_power: diag.i1_power[idx],
                            i2_power: diag.i2_power[idx],
                        });
                    }
                }
            }
        }
        let grid = match final_sum {
            Some(sum) => {
                let values = sum.into_iter().map(|v| v / packets as f64).collect();
                SinrGrid::new(self.cfg.n_subcarriers, self.link.ds.q_symbols() * 2, values, l_max)?
            }
            None => rx.analytic_grid(),
        };
        Ok(RealizationOutcome {
            packets,
            bits,
            errors_per_iteration: errors,
            grid,
            diagnostics,
        })
    }

    /// One operating point: batches of realizations until the stopping rule
    /// holds. Batches run in parallel and are reduced in index order.
    pub fn run_point(
        &self,
        domain: u64,
        profile_idx: u64,
        power: &PowerProfile,
        snr_idx: u64,
        snr_db: f64,
        predictor: Option<(&EesmModel, &AwgnLut)>,
    ) -> Result<(PointSummary, Vec<CalibrationRecord>, Vec<DiagnosticRow>)> {
        let cfg = &self.cfg;
        let noise = NoiseModel::from_snr_db(snr_db)?;
        let label = profile_label(&power.p_db);
        let mut summary = PointSummary {
            snr_db,
            profile: label.clone(),
            realizations: 0,
            packets: 0,
            bits: 0,
            bit_errors: 0,
            errors_per_iteration: vec![0; cfg.l_max],
            ber_pred: None,
            sinr_eff_db: None,
            low_confidence: false,
        };
        let mut records = Vec::new();
        let mut diagnostics = Vec::new();
        let mut pred_sum = 0.0;
        let mut eff_sum = 0.0;
        let mut done = 0usize;
        loop {
            let stop = (summary.bit_errors >= cfg.min_bit_errors && done >= cfg.min_realizations)
                || summary.bits >= cfg.max_bits
                || done >= cfg.max_realizations;
            if stop {
                break;
            }
            let end = (done + cfg.batch_realizations).min(cfg.max_realizations);
            let batch = (done..end)
                .into_par_iter()
                .map(|r| self.realization(&[domain, profile_idx, snr_idx, r as u64], power, &noise, snr_db))
                .collect::<Result<Vec<_>>>()?;
            for (r, out) in (done..end).zip(batch) {
                summary.realizations += 1;
                summary.packets += out.packets;
                summary.bits += out.bits;
                summary.bit_errors += out.bit_errors();
                for (a, b) in summary.errors_per_iteration.iter_mut().zip(&out.errors_per_iteration) {
                    *a += b;
                }
                if let Some((model, lut)) = predictor {
                    pred_sum += predict_ber(&out.grid, model, lut)?;
                    eff_sum += to_db(effective_sinr(&out.grid, model.lambda)?);
                }
                diagnostics.extend(out.diagnostics.iter().cloned());
                records.push(CalibrationRecord {
                    realization_id: r as u64,
                    snr_db,
                    profile: label.clone(),
                    packets: out.packets,
                    bits: out.bits,
                    bit_errors: out.bit_errors(),
                    grid: out.grid,
                });
            }
            done = end;
        }
        if predictor.is_some() && summary.realizations > 0 {
            let n = summary.realizations as f64;
            summary.ber_pred = Some(pred_sum / n);
            summary.sinr_eff_db = Some(eff_sum / n);
        }
        summary.low_confidence = summary.bit_errors < cfg.min_bit_errors;
        Ok((summary, records, diagnostics))
    }

    /// Sweeps `snr_db` for one power profile.
    pub fn sweep(
        &self,
        domain: u64,
        profile_idx: u64,
        power: &PowerProfile,
        predictor: Option<(&EesmModel, &AwgnLut)>,
    ) -> Result<SweepOutput> {
        let mut points = Vec::new();
        let mut records = Vec::new();
        let mut diagnostics = Vec::new();
        for (i, &snr_db) in self.cfg.snr_db.iter().enumerate() {
            let (s, r, d) = self.run_point(domain, profile_idx, power, i as u64, snr_db, predictor)?;
            points.push(s);
            records.extend(r);
            diagnostics.extend(d);
        }
        Ok(SweepOutput {
            run: RunRecord {
                config_hash: self.cfg.hash(),
                mcs_id: self.mcs.id(),
                scheme: self.mcs.scheme.name().to_string(),
                points,
            },
            records: RecordSet {
                config_hash: self.cfg.hash(),
                mcs_id: self.mcs.id(),
                scheme: self.mcs.scheme.name().to_string(),
                sinr_source: self.source,
                n_subcarriers: self.cfg.n_subcarriers,
                dims: 2 * self.link.ds.q_symbols(),
                records,
            },
            diagnostics,
        })
    }

    /// The configured power profile on the `simulate` seed domain.
    pub fn simulate(&self, predictor: Option<(&EesmModel, &AwgnLut)>) -> Result<SweepOutput> {
        self.sweep(DOMAIN_SIMULATE, 0, &self.cfg.power_profile()?, predictor)
    }

    /// Held-out runs over `validate_p2_db` with the first antenna at 0 dB.
    pub fn validate(&self, model: &EesmModel, lut: &AwgnLut) -> Result<SweepOutput> {
        let mut merged: Option<SweepOutput> = None;
        for (i, &p2) in self.cfg.validate_p2_db.iter().enumerate() {
            let power = PowerProfile::new(vec![0.0, p2])?;
            let out = self.sweep(DOMAIN_VALIDATE, i as u64, &power, Some((model, lut)))?;
            match merged.as_mut() {
                None => merged = Some(out),
                Some(m) => {
                    m.run.points.extend(out.run.points);
                    m.records.records.extend(out.records.records);
                    m.diagnostics.extend(out.diagnostics);
                }
            }
        }
        merged.ok_or_else(|| crate::Error::config("validate_p2_db is empty"))
    }
}
