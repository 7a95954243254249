use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mimo_eesm::eesm::to_db;
use mimo_eesm::numfmt::sig9;
use mimo_eesm::sim::commands::{
    cmd_calibrate, cmd_lutgen, cmd_simulate, cmd_validate, load_lut, load_model, Predictor, LUT_FILE, MODEL_FILE,
    RECORDS_FILE,
};
use mimo_eesm::sim::records::RunRecord;
use mimo_eesm::sim::SimConfig;

#[derive(Parser)]
#[command(
    name = "mimo-eesm",
    version,
    about = "Coded MIMO-OFDM link simulation and EESM BER prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat TOML)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate BER over the configured SNR sweep and log SINR grids
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Add EESM predictions using this model (requires --lut)
        #[arg(long, requires = "lut")]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        lut: Option<PathBuf>,
    },
    /// Generate the AWGN reference LUT for the configured QAM and code rate
    Lutgen {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the EESM parameter on simulated records
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// LUT file [default: <out>/lut.csv]
        #[arg(long)]
        lut: Option<PathBuf>,
        /// Records file, repeatable [default: <out>/records.csv]
        #[arg(long)]
        records: Vec<PathBuf>,
    },
    /// Compare predictions with held-out simulations over the validation power profiles
    Validate {
        #[command(flatten)]
        common: Common,
        /// Model file [default: <out>/model.toml]
        #[arg(long)]
        model: Option<PathBuf>,
        /// LUT file [default: <out>/lut.csv]
        #[arg(long)]
        lut: Option<PathBuf>,
        /// Accept a model of another scheme with the same spectral efficiency
        #[arg(long)]
        transfer: bool,
    },
}

fn load(common: &Common) -> mimo_eesm::Result<(SimConfig, PathBuf)> {
    let mut cfg = SimConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    let dir = cfg.output_dir.clone();
    Ok((cfg, dir))
}

fn print_run(run: &RunRecord) {
    println!("snr_db  profile  ber_sim  ber_pred  packets  bit_errors");
    for p in &run.points {
        println!(
            "{}  {}  {}  {}  {}  {}",
            sig9(p.snr_db),
            p.profile,
            sig9(p.ber_sim()),
            p.ber_pred.map(sig9).unwrap_or_else(|| "-".into()),
            p.packets,
            p.bit_errors
        );
    }
}

fn run(cli: Cli) -> mimo_eesm::Result<()> {
    match cli.command {
        Command::Simulate { common, model, lut } => {
            let (cfg, dir) = load(&common)?;
            let predictor = match (model, lut) {
                (Some(m), Some(l)) => Some(Predictor {
                    model: load_model(&m)?,
                    lut: load_lut(&l)?,
                }),
                _ => None,
            };
            let run = cmd_simulate(&cfg, &dir, predictor.as_ref())?;
            print_run(&run);
            println!("wrote {}", dir.display());
        }
        Command::Lutgen { common } => {
            let (cfg, dir) = load(&common)?;
            let lut = cmd_lutgen(&cfg, &dir)?;
            for p in &lut.points {
                println!(
                    "{}  {}{}",
                    sig9(p.snr_db),
                    sig9(p.ber),
                    if p.censored { "  (censored)" } else { "" }
                );
            }
            println!("wrote {}", dir.join(LUT_FILE).display());
        }
        Command::Calibrate { common, lut, records } => {
            let (cfg, dir) = load(&common)?;
            let lut = lut.unwrap_or_else(|| dir.join(LUT_FILE));
            let records = if records.is_empty() {
                vec![dir.join(RECORDS_FILE)]
            } else {
                records
            };
            let m = cmd_calibrate(&cfg, &dir, &lut, &records)?;
            println!(
                "lambda = {} ({:.2} dB), rms log10 residual = {}, records = {}{}{}",
                m.lambda,
                to_db(m.lambda),
                m.residual,
                m.records,
                if m.ill_conditioned { ", ILL-CONDITIONED" } else { "" },
                if m.single_profile { ", single-profile" } else { "" }
            );
            println!("wrote {}", dir.join(MODEL_FILE).display());
        }
        Command::Validate {
            common,
            model,
            lut,
            transfer,
        } => {
            let (cfg, dir) = load(&common)?;
            let model = model.unwrap_or_else(|| dir.join(MODEL_FILE));
            let lut = lut.unwrap_or_else(|| dir.join(LUT_FILE));
            let run = cmd_validate(&cfg, &dir, &model, &lut, transfer)?;
            print_run(&run);
            let worst = run
                .points
                .iter()
                .filter(|p| {
                    let b = p.ber_sim();
                    b >= cfg.waterfall_ber[0] && b <= cfg.waterfall_ber[1]
                })
                .filter_map(|p| p.abs_log10_gap())
                .fold(0.0f64, f64::max);
            println!("largest |log10 gap| in the waterfall region: {worst:.3}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
