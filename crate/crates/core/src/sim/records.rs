//! CSV files written by the simulation commands. Each starts with a
//! `# key=value` metadata line carrying the configuration hash.

use std::io::{BufRead, Write};

use crate::detector::SinrGrid;
use crate::eesm::{CalibrationRecord, SinrSource};
use crate::numfmt::{meta_line, parse_f64, parse_meta_line, sig9};
use crate::{Error, Result};

pub const RECORDS_HEADER: &str = "snr_db,profile,realization,packets,bits,bit_errors,sinr_grid";
pub const RUN_HEADER: &str =
    "snr_db,profile,ber_sim,ber_pred,sinr_eff_db,packets,bit_errors,bits,realizations,low_confidence,ber_per_iteration";
pub const VALIDATE_HEADER: &str =
    "snr_db,power_profile,ber_sim,ber_pred,abs_log10_gap,sinr_eff_db,packets,bit_errors,bits,in_waterfall";
pub const DIAGNOSTICS_HEADER: &str = "snr_db,packet_id,iteration,subcarrier,p,sinr,i1_power,i2_power";

/// Label of a transmit power profile, e.g. `0:-3`.
pub fn profile_label(p_db: &[f64]) -> String {
    p_db.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(":")
}

fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_else(|| "nan".to_string())
}

/// Per-realization calibration records of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    pub config_hash: String,
    pub mcs_id: String,
    pub scheme: String,
    pub sinr_source: SinrSource,
    pub n_subcarriers: usize,
    pub dims: usize,
    pub records: Vec<CalibrationRecord>,
}

impl RecordSet {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = meta_line(&[
            ("config_hash", self.config_hash.clone()),
            ("mcs_id", self.mcs_id.clone()),
            ("scheme", self.scheme.clone()),
            ("sinr_source", self.sinr_source.to_string()),
            ("n_subcarriers", self.n_subcarriers.to_string()),
            ("dims", self.dims.to_string()),
        ]);
        writeln!(w, "{meta}")?;
        writeln!(w, "{RECORDS_HEADER}")?;
        for r in &self.records {
            let grid: Vec<String> = r.grid.values.iter().map(|&v| sig9(v)).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                sig9(r.snr_db),
                r.profile,
                r.realization_id,
                r.packets,
                r.bits,
                r.bit_errors,
                grid.join(" ")
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let meta = parse_meta_line(&lines.next().ok_or_else(|| Error::parse("empty records file"))??)?;
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("records file has no header"))??;
        if header.trim() != RECORDS_HEADER {
            return Err(Error::parse(format!("unexpected records header '{header}'")));
        }
        let field = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::parse(format!("records metadata lacks '{k}'")))
        };
        let int = |k: &str| -> Result<usize> { field(k)?.parse().map_err(|e| Error::parse(format!("bad {k}: {e}"))) };
        let n_subcarriers = int("n_subcarriers")?;
        let dims = int("dims")?;
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::parse(format!("bad records row '{line}'")));
            }
            let count = |s: &str| -> Result<u64> {
                s.trim()
                    .parse()
                    .map_err(|e| Error::parse(format!("bad count '{s}': {e}")))
            };
            let values = f[6].split_whitespace().map(parse_f64).collect::<Result<Vec<_>>>()?;
            records.push(CalibrationRecord {
                snr_db: parse_f64(f[0])?,
                profile: f[1].to_string(),
                realization_id: count(f[2])?,
                packets: count(f[3])?,
                bits: count(f[4])?,
                bit_errors: count(f[5])?,
                grid: SinrGrid::new(n_subcarriers, dims, values, 0)?,
            });
        }
        Ok(Self {
            config_hash: field("config_hash")?,
            mcs_id: field("mcs_id")?,
            scheme: field("scheme")?,
            sinr_source: field("sinr_source")?.parse()?,
            n_subcarriers,
            dims,
            records,
        })
    }
}

/// Aggregate of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub snr_db: f64,
    pub profile: String,
    pub realizations: u64,
    pub packets: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub errors_per_iteration: Vec<u64>,
    /// Mean predicted BER over realizations, when a model was supplied.
    pub ber_pred: Option<f64>,
    /// Mean effective SINR in dB over realizations.
    pub sinr_eff_db: Option<f64>,
    pub low_confidence: bool,
}

impl PointSummary {
    pub fn ber_sim(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    /// `|log10 ber_pred - log10 ber_sim|`, undefined without errors.
    pub fn abs_log10_gap(&self) -> Option<f64> {
        let pred = self.ber_pred?;
        if self.bit_errors == 0 || !(pred > 0.0) {
            return None;
        }
        Some((pred.log10() - self.ber_sim().log10()).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub mcs_id: String,
    pub scheme: String,
    pub points: Vec<PointSummary>,
}

impl RunRecord {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{}",
            meta_line(&[
                ("config_hash", self.config_hash.clone()),
                ("mcs_id", self.mcs_id.clone()),
                ("scheme", self.scheme.clone()),
            ])
        )?;
        writeln!(w, "{RUN_HEADER}")?;
        for p in &self.points {
            let per_iter: Vec<String> = p
                .errors_per_iteration
                .iter()
                .map(|&e| sig9(e as f64 / p.bits as f64))
                .collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                sig9(p.snr_db),
                p.profile,
                sig9(p.ber_sim()),
                opt(p.ber_pred),
                opt(p.sinr_eff_db),
                p.packets,
                p.bit_errors,
                p.bits,
                p.realizations,
                u8::from(p.low_confidence),
                per_iter.join(" ")
            )?;
        }
        Ok(())
    }

    /// Rows in the validation layout; `waterfall` bounds the BER region
    /// flagged as `in_waterfall`.
    pub fn write_validation_csv<W: Write>(&self, mut w: W, waterfall: [f64; 2]) -> Result<()> {
        writeln!(
            w,
            "{}",
            meta_line(&[
                ("config_hash", self.config_hash.clone()),
                ("mcs_id", self.mcs_id.clone()),
                ("scheme", self.scheme.clone()),
            ])
        )?;
        writeln!(w, "{VALIDATE_HEADER}")?;
        for p in &self.points {
            let b = p.ber_sim();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                sig9(p.snr_db),
                p.profile,
                sig9(b),
                opt(p.ber_pred),
                opt(p.abs_log10_gap()),
                opt(p.sinr_eff_db),
                p.packets,
                p.bit_errors,
                p.bits,
                u8::from(b >= waterfall[0] && b <= waterfall[1])
            )?;
        }
        Ok(())
    }
}

/// One line of the optional per-packet diagnostics file.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub snr_db: f64,
    pub packet_id: u64,
    pub iteration: usize,
    pub subcarrier: usize,
    pub p: usize,
    pub sinr: f64,
    pub i1_power: f64,
    pub i2_power: f64,
}

pub fn write_diagnostics<W: Write>(mut w: W, config_hash: &str, rows: &[DiagnosticRow]) -> Result<()> {
    writeln!(w, "{}", meta_line(&[("config_hash", config_hash.to_string())]))?;
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            sig9(r.snr_db),
            r.packet_id,
            r.iteration,
            r.subcarrier,
            r.p,
            sig9(r.sinr),
            sig9(r.i1_power),
            sig9(r.i2_power)
        )?;
    }
    Ok(())
}
