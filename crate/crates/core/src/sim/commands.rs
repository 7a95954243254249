//! The four command-line operations, each reading and writing files under
//! an output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::eesm::{calibrate_lambda, generate_awgn_lut, AwgnLut, EesmModel};
use crate::sim::config::SimConfig;
use crate::sim::records::{write_diagnostics, RecordSet, RunRecord};
use crate::sim::runner::{Runner, SweepOutput};
use crate::sim::seeds::derive_u64;
use crate::{Error, Result};

pub const RUN_FILE: &str = "run.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const LUT_FILE: &str = "lut.csv";
pub const MODEL_FILE: &str = "model.toml";
pub const VALIDATE_FILE: &str = "validate.csv";
pub const VALIDATE_RECORDS_FILE: &str = "validate_records.csv";

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load_lut(path: &Path) -> Result<AwgnLut> {
    AwgnLut::read_csv(open(path)?)
}

pub fn load_model(path: &Path) -> Result<EesmModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    EesmModel::from_toml(&text)
}

pub fn load_records(path: &Path) -> Result<RecordSet> {
    RecordSet::read_csv(open(path)?)
}

fn check_hash(what: &str, got: &str, cfg: &SimConfig) -> Result<()> {
    if got == cfg.hash() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "{what} was produced with configuration hash {got}, current configuration is {}",
            cfg.hash()
        )))
    }
}

/// Optional EESM inputs attached to `simulate`.
pub struct Predictor {
    pub model: EesmModel,
    pub lut: AwgnLut,
}

fn write_sweep(cfg: &SimConfig, out: &SweepOutput, dir: &Path, run_name: &str, records_name: &str) -> Result<()> {
    let mut w = create(dir, run_name)?;
    if run_name == VALIDATE_FILE {
        out.run.write_validation_csv(&mut w, cfg.waterfall_ber)?;
    } else {
        out.run.write_csv(&mut w)?;
    }
    w.flush()?;
    let mut w = create(dir, records_name)?;
    out.records.write_csv(&mut w)?;
    w.flush()?;
    if cfg.write_diagnostics {
        let mut w = create(dir, DIAGNOSTICS_FILE)?;
        write_diagnostics(&mut w, &cfg.hash(), &out.diagnostics)?;
        w.flush()?;
    }
    Ok(())
}

/// Simulated BER per operating point plus per-realization records.
pub fn cmd_simulate(cfg: &SimConfig, dir: &Path, predictor: Option<&Predictor>) -> Result<RunRecord> {
    let runner = Runner::new(cfg.clone())?;
    let pred = match predictor {
        Some(p) => {
            check_hash("model", &p.model.config_hash, cfg)?;
            check_hash("LUT", &p.lut.config_hash, cfg)?;
            Some((&p.model, &p.lut))
        }
        None => None,
    };
    let out = runner.simulate(pred)?;
    write_sweep(cfg, &out, dir, RUN_FILE, RECORDS_FILE)?;
    Ok(out.run)
}

/// AWGN reference curve for the configured constellation and code rate.
pub fn cmd_lutgen(cfg: &SimConfig, dir: &Path) -> Result<AwgnLut> {
    cfg.validate()?;
    let lut = generate_awgn_lut(&cfg.lut_setup()?, &cfg.lut_snr_db, derive_u64(cfg.seed, &[0x1u64]))?;
    let mut w = create(dir, LUT_FILE)?;
    lut.write_csv(&mut w)?;
    w.flush()?;
    Ok(lut)
}

/// Fits `lambda` on one or more record files against a LUT.
pub fn cmd_calibrate(cfg: &SimConfig, dir: &Path, lut_path: &Path, records: &[PathBuf]) -> Result<EesmModel> {
    cfg.validate()?;
    let mcs = cfg.mcs()?;
    let lut = load_lut(lut_path)?;
    check_hash("LUT", &lut.config_hash, cfg)?;
    if records.is_empty() {
        return Err(Error::config("calibration needs at least one records file"));
    }
    let mut all = Vec::new();
    let mut source = None;
    for path in records {
        let set = load_records(path)?;
        check_hash(&format!("records file {}", path.display()), &set.config_hash, cfg)?;
        if set.mcs_id != lut.mcs_id {
            return Err(Error::config(format!(
                "records in {} are for {} but the LUT is for {}",
                path.display(),
                set.mcs_id,
                lut.mcs_id
            )));
        }
        if *source.get_or_insert(set.sinr_source) != set.sinr_source {
            return Err(Error::config("records files mix SINR sources"));
        }
        all.extend(set.records);
    }
    let mut model = calibrate_lambda(&all, &lut, &mcs, &cfg.calibration_options())?;
    model.sinr_source = source.unwrap_or_default();
    model.config_hash = cfg.hash();
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MODEL_FILE), model.to_toml()?)?;
    Ok(model)
}

/// Held-out comparison of simulated and predicted BER over the validation
/// power profiles. A model of another scheme with the same spectral
/// efficiency is accepted only with `allow_transfer`.
pub fn cmd_validate(
    cfg: &SimConfig,
    dir: &Path,
    model_path: &Path,
    lut_path: &Path,
    allow_transfer: bool,
) -> Result<RunRecord> {
    let runner = Runner::new(cfg.clone())?;
    let mcs = runner.mcs;
    let lut = load_lut(lut_path)?;
    let mut model = load_model(model_path)?;
    check_hash("model", &model.config_hash, cfg)?;
    check_hash("LUT", &lut.config_hash, cfg)?;
    if lut.mcs_id != mcs.id() {
        return Err(Error::config(format!(
            "LUT is for {} but the configuration is {}",
            lut.mcs_id,
            mcs.id()
        )));
    }
    if model.mcs_id != mcs.id() || model.scheme != mcs.scheme.name() {
        if !allow_transfer {
            return Err(Error::config(format!(
                "model is for {} {}; pass --transfer to reuse it for {mcs}",
                model.scheme, model.mcs_id
            )));
        }
        model = model.transfer(&mcs)?;
    }
    if model.sinr_source != cfg.sinr_source()? {
        return Err(Error::config(format!(
            "model was calibrated on '{}' SINR grids but the configuration uses '{}'",
            model.sinr_source, cfg.sinr_source
        )));
    }
    let out = runner.validate(&model, &lut)?;
    write_sweep(cfg, &out, dir, VALIDATE_FILE, VALIDATE_RECORDS_FILE)?;
    Ok(out.run)
}
