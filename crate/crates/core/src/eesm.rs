//! Exponential effective SINR mapping.
//!
//! A packet's SINR grid is compressed to one effective SINR,
//! `-lambda ln(mean exp(-SINR_q[n] / lambda))`, which is then read off an
//! AWGN reference curve for the same constellation and code rate. The
//! parameter `lambda` is fitted once per MCS on simulated records.
//!
//! All arithmetic is in linear SINR; dB appears only in LUT coordinates and
//! files.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{FrequencyChannel, NoiseModel, PowerProfile};
use crate::detector::{ReceiverConfig, SinrGrid};
use crate::linkchain::CodeRate;
use crate::mcs::Mcs;
use crate::numfmt::{meta_line, parse_f64, parse_meta_line, round9, sig9};
use crate::sim::link::{Link, LinkParams};
use crate::sim::seeds::{stream, Stage};
use crate::stcode::StScheme;
use crate::{Error, Result};

pub const LUT_HEADER: &str = "snr_db,ber,censored";

/// Search interval for `lambda`.
pub const LAMBDA_MIN: f64 = 1e-2;
pub const LAMBDA_MAX: f64 = 1e4;

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// EESM over arbitrary linear SINR values.
pub fn effective_sinr_values(values: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::NumericDomain(format!("lambda must be positive, got {lambda}")));
    }
    if values.is_empty() {
        return Err(Error::NumericDomain("effective SINR of an empty set".into()));
    }
    let mut min = f64::INFINITY;
    for &v in values {
        if !(v > 0.0) {
            return Err(Error::NumericDomain(format!("SINR must be positive, got {v}")));
        }
        min = min.min(v);
    }
    // shift by the minimum so the largest exponential is exactly 1
    let mean = values.iter().map(|&v| (-(v - min) / lambda).exp()).sum::<f64>() / values.len() as f64;
    Ok(min - lambda * mean.ln())
}

/// EESM of a detector grid, one entry per complex symbol `(n, q)`.
pub fn effective_sinr(grid: &SinrGrid, lambda: f64) -> Result<f64> {
    effective_sinr_values(&grid.per_symbol(), lambda)
}

/// Pool-adjacent-violators fit of a non-increasing sequence under weights.
pub fn isotonic_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, c1 + c2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, c)| std::iter::repeat_n(m, c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutPoint {
    pub snr_db: f64,
    pub ber: f64,
    /// No error observed: `ber` is the upper bound `1 / bits`.
    pub censored: bool,
}

/// AWGN reference curve `BER = xi(SINR)` of one constellation/code pair.
/// The abscissa is the per-symbol detector SINR in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct AwgnLut {
    pub mcs_id: String,
    pub points: Vec<LutPoint>,
    pub scheme: String,
    pub packets: u64,
    pub config_hash: String,
}

impl AwgnLut {
    /// Values are rounded to the 9 significant digits of the file format.
    pub fn new(mcs_id: impl Into<String>, points: Vec<LutPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("LUT has no points"));
        }
        let points: Vec<LutPoint> = points
            .into_iter()
            .map(|p| LutPoint {
                snr_db: round9(p.snr_db),
                ber: round9(p.ber),
                censored: p.censored,
            })
            .collect();
        for w in points.windows(2) {
            if !(w[1].snr_db > w[0].snr_db) {
                return Err(Error::config(format!(
                    "LUT SNR grid must be strictly increasing ({} then {})",
                    w[0].snr_db, w[1].snr_db
                )));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.ber > 0.0 && p.ber.is_finite())) {
            return Err(Error::NumericDomain(format!("LUT BER must be positive, got {}", p.ber)));
        }
        Ok(Self {
            mcs_id: mcs_id.into(),
            points,
            scheme: StScheme::Alamouti.name().to_string(),
            packets: 0,
            config_hash: String::new(),
        })
    }

    /// Log-linear interpolation of BER at `sinr_db`, clamped to the end
    /// points.
    pub fn lookup(&self, sinr_db: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if sinr_db.is_nan() || sinr_db <= first.snr_db {
            return first.ber;
        }
        if sinr_db >= last.snr_db {
            return last.ber;
        }
        let i = pts.partition_point(|p| p.snr_db <= sinr_db);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (sinr_db - a.snr_db) / (b.snr_db - a.snr_db);
        let la = a.ber.log10();
        let lb = b.ber.log10();
        10f64.powf(la + t * (lb - la))
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].ber <= w[0].ber)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = meta_line(&[
            ("mcs_id", self.mcs_id.clone()),
            ("scheme", self.scheme.clone()),
            ("packets", self.packets.to_string()),
            ("config_hash", self.config_hash.clone()),
        ]);
        writeln!(w, "{meta}")?;
        writeln!(w, "{LUT_HEADER}")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", sig9(p.snr_db), sig9(p.ber), u8::from(p.censored))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let meta = parse_meta_line(&lines.next().ok_or_else(|| Error::parse("empty LUT file"))??)?;
        let header = lines.next().ok_or_else(|| Error::parse("LUT file has no header"))??;
        if header.trim() != LUT_HEADER {
            return Err(Error::parse(format!("unexpected LUT header '{header}'")));
        }
        let mut points = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(Error::parse(format!("bad LUT row '{line}'")));
            }
            let censored = match f[2].trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(format!("bad censored flag '{other}'"))),
            };
            points.push(LutPoint {
                snr_db: parse_f64(f[0])?,
                ber: parse_f64(f[1])?,
                censored,
            });
        }
        let field = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::parse(format!("LUT metadata lacks '{k}'")))
        };
        let mut lut = AwgnLut::new(field("mcs_id")?, points)?;
        lut.scheme = field("scheme")?;
        lut.packets = field("packets")?
            .parse()
            .map_err(|e| Error::parse(format!("bad packet count: {e}")))?;
        lut.config_hash = field("config_hash")?;
        Ok(lut)
    }
}

/// Everything `generate_awgn_lut` needs besides the SNR grid.
#[derive(Debug, Clone)]
pub struct LutSetup {
    pub order: usize,
    pub rate: CodeRate,
    pub n_subcarriers: usize,
    pub codewords_per_subcarrier: usize,
    pub interleaver_seed: Option<u64>,
    pub receiver: ReceiverConfig,
    pub min_errors: u64,
    pub max_bits: u64,
    /// Packets simulated between stopping-rule checks.
    pub batch_packets: usize,
    pub config_hash: String,
}

impl LutSetup {
    pub fn mcs(&self) -> Mcs {
        Mcs::new(StScheme::Alamouti, self.order, self.rate)
    }
}

/// Per-component noise level at which Alamouti on the unit channel has the
/// requested detector SINR, by bisection on `log N0`.
pub fn n0_for_sinr(link: &Link, sinr: f64) -> Result<f64> {
    let h = FrequencyChannel::unit(1, link.params.m_r, link.ds.m_t());
    let ch = link.equivalent(&h, &PowerProfile::equal(link.ds.m_t()))?;
    let sinr_at = |n0: f64| -> Result<f64> {
        let rx = link.receiver(&ch, &NoiseModel::new(n0)?)?;
        Ok(rx.analytic_grid().mean())
    };
    let (mut lo, mut hi) = (-30.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sinr_at(10f64.powf(mid))? > sinr {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(10f64.powf(0.5 * (lo + hi)))
}

/// Simulates the AWGN reference curve: Alamouti over the unit channel at
/// equal powers, one Monte Carlo run per requested SINR. Points run in
/// parallel; each draws from its own seed path so the result does not
/// depend on scheduling.
pub fn generate_awgn_lut(setup: &LutSetup, snr_grid_db: &[f64], seed: u64) -> Result<AwgnLut> {
    if snr_grid_db.is_empty() {
        return Err(Error::config("LUT SNR grid is empty"));
    }
    if snr_grid_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("LUT SNR grid must be strictly increasing"));
    }
    if setup.min_errors < 100 {
        return Err(Error::config(format!(
            "LUT points need at least 100 bit errors, min_errors = {}",
            setup.min_errors
        )));
    }
    if setup.max_bits == 0 || setup.batch_packets == 0 {
        return Err(Error::config("LUT bit budget and batch size must be positive"));
    }
    let link = Link::new(LinkParams {
        mcs: setup.mcs(),
        n_subcarriers: setup.n_subcarriers,
        codewords_per_subcarrier: setup.codewords_per_subcarrier,
        interleaver_seed: setup.interleaver_seed,
        receiver: setup.receiver.clone(),
        m_r: 2,
    })?;
    let h = FrequencyChannel::unit(setup.n_subcarriers, link.params.m_r, link.ds.m_t());
    let channels = link.equivalent(&h, &PowerProfile::equal(link.ds.m_t()))?;

    let runs = snr_grid_db
        .par_iter()
        .enumerate()
        .map(|(i, &snr_db)| -> Result<(u64, u64, u64)> {
            let noise = NoiseModel::new(n0_for_sinr(&link, from_db(snr_db))?)?;
            let rx = link.receiver(&channels, &noise)?;
            let (mut bits, mut errors, mut packets) = (0u64, 0u64, 0u64);
            while errors < setup.min_errors && bits < setup.max_bits {
                for _ in 0..setup.batch_packets {
                    let path = [i as u64, packets];
                    let out = link.run_packet(
                        &channels,
                        &rx,
                        &noise,
                        &mut stream(seed, &path, Stage::Data),
                        &mut stream(seed, &path, Stage::Noise),
                    )?;
                    bits += out.bits;
                    errors += out.final_errors();
                    packets += 1;
                }
            }
            Ok((bits, errors, packets))
        })
        .collect::<Result<Vec<_>>>()?;

    // isotonic fit in log10 BER, weighted by the error count
    let raw: Vec<f64> = runs
        .iter()
        .map(|&(bits, errors, _)| (errors.max(1) as f64 / bits as f64).log10())
        .collect();
    let weights: Vec<f64> = runs.iter().map(|&(_, e, _)| e as f64 + 1.0).collect();
    let smooth = isotonic_nonincreasing(&raw, &weights);
    let points = snr_grid_db
        .iter()
        .zip(&runs)
        .zip(&smooth)
        .map(|((&snr_db, &(_, errors, _)), &lb)| LutPoint {
            snr_db,
            ber: 10f64.powf(lb).min(0.5),
            censored: errors == 0,
        })
        .collect();
    let mut lut = AwgnLut::new(setup.mcs().id(), points)?;
    lut.packets = runs.iter().map(|r| r.2).sum();
    lut.config_hash = setup.config_hash.clone();
    Ok(lut)
}

/// One channel realization's simulated outcome and its SINR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub realization_id: u64,
    pub snr_db: f64,
    /// Transmit power profile label, e.g. `0:-3`.
    pub profile: String,
    pub grid: SinrGrid,
    pub packets: u64,
    pub bits: u64,
    pub bit_errors: u64,
}

impl CalibrationRecord {
    pub fn ber_sim(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Records with fewer errors carry too little information in log-BER
    /// and are left out of the objective.
    pub min_record_errors: u64,
    /// Coarse log-spaced scan points before the golden-section refinement.
    pub scan_points: usize,
    /// Golden-section stopping width on `ln lambda`.
    pub tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            min_record_errors: 10,
            scan_points: 61,
            tolerance: 1e-6,
        }
    }
}

/// Where the EESM grids come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SinrSource {
    /// Analytic MMSE SINR of iteration 1, known before decoding.
    #[default]
    First,
    /// Feedback SINR of the last iteration.
    Final,
}

impl fmt::Display for SinrSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SinrSource::First => "first",
            SinrSource::Final => "final",
        })
    }
}

impl FromStr for SinrSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" => Ok(SinrSource::First),
            "final" => Ok(SinrSource::Final),
            other => Err(Error::config(format!("unknown SINR source `{other}`"))),
        }
    }
}

/// Calibrated EESM parameter of one MCS with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EesmModel {
    pub mcs_id: String,
    pub scheme: String,
    pub eta: f64,
    pub lambda: f64,
    /// RMS log10-BER residual at the optimum.
    pub residual: f64,
    pub snr_range_db: [f64; 2],
    pub records: usize,
    pub realizations: usize,
    pub objective: String,
    pub sinr_source: SinrSource,
    pub ill_conditioned: bool,
    pub single_profile: bool,
    /// Set when the model was carried over from another scheme of the same
    /// spectral efficiency.
    pub transferred_from: Option<String>,
    pub config_hash: String,
}

impl EesmModel {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse(format!("cannot serialise model: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: EesmModel = toml::from_str(text).map_err(|e| Error::parse(format!("bad model file: {e}")))?;
        if !(m.lambda > 0.0) {
            return Err(Error::parse(format!("model lambda must be positive, got {}", m.lambda)));
        }
        Ok(m)
    }

    /// Reuses `lambda` for another MCS of the same spectral efficiency.
    pub fn transfer(&self, target: &Mcs) -> Result<Self> {
        if (target.eta() - self.eta).abs() > 1e-9 {
            return Err(Error::config(format!(
                "cannot transfer a model of eta = {} to {target} (eta = {})",
                self.eta,
                target.eta()
            )));
        }
        let mut m = self.clone();
        m.transferred_from = Some(format!("{}:{}", self.scheme, self.mcs_id));
        m.mcs_id = target.id();
        m.scheme = target.scheme.name().to_string();
        Ok(m)
    }
}

fn objective(records: &[(Vec<f64>, f64)], lut: &AwgnLut, lambda: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (values, log_ber) in records {
        let eff = effective_sinr_values(values, lambda)?;
        let r = log_ber - lut.lookup(to_db(eff)).log10();
        acc += r * r;
    }
    Ok(acc)
}

/// Least-squares fit of `lambda` in log10-BER over `[LAMBDA_MIN, LAMBDA_MAX]`:
/// a log-spaced scan brackets the best point, then golden-section search on
/// `ln lambda` refines it.
pub fn calibrate_lambda(
    records: &[CalibrationRecord],
    lut: &AwgnLut,
    mcs: &Mcs,
    opts: &CalibrationOptions,
) -> Result<EesmModel> {
    if lut.mcs_id != mcs.id() {
        return Err(Error::config(format!(
            "LUT is for {} but records are for {}",
            lut.mcs_id,
            mcs.id()
        )));
    }
    let usable: Vec<&CalibrationRecord> = records
        .iter()
        .filter(|r| r.bits > 0 && r.bit_errors >= opts.min_record_errors.max(1) && r.ber_sim() <= 0.5)
        .collect();
    if usable.len() < 10 {
        return Err(Error::config(format!(
            "calibration needs at least 10 usable records, got {} of {}",
            usable.len(),
            records.len()
        )));
    }
    let (bmin, bmax) = usable
        .iter()
        .map(|r| r.ber_sim())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), b| (lo.min(b), hi.max(b)));
    if (bmax / bmin).log10() < 2.0 {
        return Err(Error::config(format!(
            "calibration records must span two decades of BER, got {bmin:e} .. {bmax:e}"
        )));
    }
    let data: Vec<(Vec<f64>, f64)> = usable
        .iter()
        .map(|r| (r.grid.per_symbol(), r.ber_sim().log10()))
        .collect();

    let (lo, hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    let n = opts.scan_points.max(3);
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = grid
        .par_iter()
        .map(|&x| objective(&data, lut, x.exp()))
        .collect::<Result<Vec<_>>>()?;
    let (best, fbest) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let fmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ill_conditioned = fmax - fbest <= 1e-9 * (1.0 + fbest);

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| objective(&data, lut, x.exp());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > opts.tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    let (mut x, mut fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    if fbest < fx {
        x = grid[best];
        fx = fbest;
    }

    let snr_lo = usable.iter().map(|r| r.snr_db).fold(f64::INFINITY, f64::min);
    let snr_hi = usable.iter().map(|r| r.snr_db).fold(f64::NEG_INFINITY, f64::max);
    let first_profile = &usable[0].profile;
    let mut ids: Vec<u64> = usable.iter().map(|r| r.realization_id).collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(EesmModel {
        mcs_id: mcs.id(),
        scheme: mcs.scheme.name().to_string(),
        eta: mcs.eta(),
        lambda: x.exp(),
        residual: (fx / data.len() as f64).sqrt(),
        snr_range_db: [snr_lo, snr_hi],
        records: data.len(),
        realizations: ids.len(),
        objective: "log10-ber".to_string(),
        sinr_source: SinrSource::First,
        ill_conditioned,
        single_profile: usable.iter().all(|r| &r.profile == first_profile),
        transferred_from: None,
        config_hash: lut.config_hash.clone(),
    })
}

/// `xi(SINR_eff)` for one grid.
pub fn predict_ber(grid: &SinrGrid, model: &EesmModel, lut: &AwgnLut) -> Result<f64> {
    if model.mcs_id != lut.mcs_id {
        return Err(Error::config(format!(
            "model is for {} but the LUT is for {}",
            model.mcs_id, lut.mcs_id
        )));
    }
    Ok(lut.lookup(to_db(effective_sinr(grid, model.lambda)?)))
}
