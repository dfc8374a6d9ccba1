//! Command-line front end: end-to-end runs of the joint and separated
//! codecs, the Bernoulli threshold experiment, the efficiency sweep, offline
//! library construction, and the model-allocation study.
//!
//! Reports go to `--out-dir` as JSON/CSV; reconstructions as PGM.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use jscc::channel::{binary_entropy, inverse_binary_entropy};
use jscc::decode::BpConfig;
use jscc::image::ImagePlane;
use jscc::library::{build_library, chain_only_library, PunctureLibrary};
use jscc::pipeline::{
    efficiency_sweep, jscc_run, model_study, shannon_limit_eta, sscc_run, threshold_experiment,
    CodecConfig, RunReport,
};

#[derive(Parser)]
#[command(name = "jscc", version, about = "Joint source-channel image codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the joint codec over a simulated BSC and report PSNR.
    Jscc(RunArgs),
    /// Run the separated (arithmetic coding + turbo) baseline.
    Sscc(SsccArgs),
    /// Bernoulli-source BER waterfall around the Shannon limit.
    Threshold(ThresholdArgs),
    /// PSNR-vs-efficiency sweep comparing both systems at equal budget.
    Sweep(SweepArgs),
    /// Build a punctured-code library offline and save it as JSON.
    BuildLibrary(BuildLibraryArgs),
    /// Compare model description-length allocation strategies.
    ModelStudy(StudyArgs),
}

#[derive(Args)]
struct CodecArgs {
    /// Input image (8-bit PGM). Defaults to a seeded synthetic image.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Synthetic image size when no --image is given.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// DWT decomposition levels.
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// Magnitude bit-planes (plus one sign plane).
    #[arg(long, default_value_t = 8)]
    planes: usize,
    /// BSC crossover probability.
    #[arg(long, default_value_t = 0.05)]
    bsc_rho: f64,
    /// Additive rate margin on H/C when sizing codewords.
    #[arg(long, default_value_t = 0.03)]
    delta_margin: f64,
    /// Multiplier on the entropy-proportional redundancy.
    #[arg(long, default_value_t = 1.0)]
    rate_factor: f64,
    /// Size the whole transmission to K/eta channel uses.
    #[arg(long)]
    target_eta: Option<f64>,
    /// Belief-propagation iteration cap per plane.
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
    /// Punctured-code library JSON (falls back to the chain-only default).
    #[arg(long)]
    library: Option<PathBuf>,
    /// Output directory for reports and reconstructions.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    codec: CodecArgs,
    /// Base channel-noise seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent noise realizations (seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Args)]
struct SsccArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Spend exactly this many channel uses (defaults to the source-coded
    /// length at the design rate).
    #[arg(long)]
    channel_uses: Option<usize>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Source entropy H(U) in bits.
    #[arg(long, default_value_t = 0.5)]
    source_entropy: f64,
    /// BSC crossover probability. Defaults to the rho with C = 1 - H(U).
    #[arg(long)]
    bsc_rho: Option<f64>,
    /// Block length as a power of two.
    #[arg(long, default_value_t = 16)]
    block_log2: u32,
    /// Efficiencies eta = K/N to measure, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 1.0, 1.1, 1.2])]
    etas: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    codec: CodecArgs,
    /// Fractions of the Shannon-limit efficiency to sweep.
    #[arg(long, value_delimiter = ',',
          default_values_t = [0.7, 0.8, 0.9, 0.95, 1.0, 1.1, 1.2, 1.3])]
    fracs: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 100)]
    seed: u64,
}

#[derive(Args)]
struct BuildLibraryArgs {
    #[arg(long, default_value_t = 0.05)]
    bsc_rho: f64,
    /// Design block length the patterns are tuned at.
    #[arg(long, default_value_t = 4096)]
    design_k: usize,
    /// Entropy grid points, comma separated.
    #[arg(long, value_delimiter = ',',
          default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
    grid: Vec<f64>,
    /// Candidate batch seeds tried per growth step.
    #[arg(long, default_value_t = 4)]
    candidates: usize,
    /// Monte Carlo trials per BER estimate.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output library path.
    #[arg(long, default_value = "library.json")]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 8)]
    planes: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn load_image(path: &Option<PathBuf>, size: usize) -> Result<ImagePlane, jscc::JsccError> {
    match path {
        Some(p) => ImagePlane::read_pgm(p),
        None => Ok(ImagePlane::synthetic(size, size, 5)),
    }
}

fn load_library(path: &Option<PathBuf>, rho: f64) -> Result<PunctureLibrary, jscc::JsccError> {
    match path {
        Some(p) => PunctureLibrary::load(p),
        None => Ok(chain_only_library(rho, 4096, 7)),
    }
}

fn codec_config(a: &CodecArgs) -> CodecConfig {
    CodecConfig {
        levels: a.levels,
        planes: a.planes,
        rho: a.bsc_rho,
        delta_margin: a.delta_margin,
        rate_factor: a.rate_factor,
        target_eta: a.target_eta,
        bp: BpConfig {
            max_iters: a.max_iters,
            ..BpConfig::default()
        },
        ..CodecConfig::default()
    }
}

fn report_json(report: &RunReport) -> serde_json::Value {
    json!({
        "eta": report.eta,
        "channel_uses": report.channel_uses,
        "psnr_db": report.psnr_db,
        "quant_psnr_db": report.quant_psnr_db,
        "source_rate_bps": report.source_rate,
        "sideband_bits": report.sideband_bits,
        "catastrophic": report.catastrophic,
        "planes": report.plane_rows.iter().map(|r| json!({
            "plane": r.plane,
            "k": r.k,
            "h_hat": r.h_hat,
            "n": r.n,
            "eta_bar": r.eta_bar,
            "ber": r.ber,
            "iters": r.iters,
        })).collect::<Vec<_>>(),
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    fs::write(path, format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn run_codec(
    label: &str,
    args: &RunArgs,
    channel_uses: Option<usize>,
) -> Result<(), Box<dyn std::error::Error>> {
    let img = load_image(&args.codec.image, args.codec.size)?;
    let lib = load_library(&args.codec.library, args.codec.bsc_rho)?;
    let cfg = codec_config(&args.codec);
    fs::create_dir_all(&args.codec.out_dir)?;
    let mut reports = Vec::new();
    for t in 0..args.trials.max(1) {
        let seed = args.seed.wrapping_add(t as u64);
        let (rec, report) = match label {
            "jscc" => jscc_run(&img, &lib, &cfg, seed)?,
            _ => sscc_run(&img, &lib, &cfg, seed, channel_uses)?,
        };
        println!(
            "{label} seed {seed}: eta {:.4}, psnr {:.2} dB (quantizer limit {:.2} dB)",
            report.eta, report.psnr_db, report.quant_psnr_db
        );
        rec.write_pgm(&args.codec.out_dir.join(format!("{label}_seed{seed}.pgm")))?;
        reports.push(report_json(&report));
    }
    write_json(
        &args.codec.out_dir.join(format!("{label}_report.json")),
        &json!({ "runs": reports }),
    )?;
    Ok(())
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Jscc(args) => run_codec("jscc", &args, None),
        Command::Sscc(args) => run_codec("sscc", &args.run, args.channel_uses),
        Command::Threshold(args) => {
            let rho = args
                .bsc_rho
                .unwrap_or_else(|| inverse_binary_entropy(1.0 - args.source_entropy));
            let lib = load_library(&args.library, rho)?;
            let bp = BpConfig {
                max_iters: args.max_iters,
                ..BpConfig::default()
            };
            let points = threshold_experiment(
                args.source_entropy,
                rho,
                1usize << args.block_log2,
                &args.etas,
                args.trials,
                &lib,
                &bp,
                args.seed,
            )?;
            fs::create_dir_all(&args.out_dir)?;
            let mut csv = String::from("eta,ber,trials\n");
            for p in &points {
                println!("eta {:.3}: ber {:.6} ({} trials)", p.eta, p.ber, p.trials);
                csv.push_str(&format!("{},{},{}\n", p.eta, p.ber, p.trials));
            }
            fs::write(args.out_dir.join("threshold.csv"), csv)?;
            println!(
                "channel capacity {:.4} bits/use (rho {:.5})",
                1.0 - binary_entropy(rho),
                rho
            );
            Ok(())
        }
        Command::Sweep(args) => {
            let img = load_image(&args.codec.image, args.codec.size)?;
            let lib = load_library(&args.codec.library, args.codec.bsc_rho)?;
            let cfg = codec_config(&args.codec);
            fs::create_dir_all(&args.codec.out_dir)?;
            let eta_star = shannon_limit_eta(&img, &cfg)?;
            println!("shannon-limit efficiency eta* = {eta_star:.4} samples/use");
            let rows = efficiency_sweep(&img, &lib, &cfg, &args.fracs, args.trials, args.seed)?;
            let mut csv =
                String::from("eta_frac,target_eta,jscc_eta,sscc_eta,jscc_psnr_db,sscc_psnr_db,quant_psnr_db\n");
            for r in &rows {
                println!(
                    "frac {:.2}: jscc {:.2} dB, sscc {:.2} dB (quantizer limit {:.2} dB)",
                    r.eta_frac, r.jscc_psnr_db, r.sscc_psnr_db, r.quant_psnr_db
                );
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.eta_frac,
                    r.target_eta,
                    r.jscc_eta,
                    r.sscc_eta,
                    r.jscc_psnr_db,
                    r.sscc_psnr_db,
                    r.quant_psnr_db
                ));
            }
            fs::write(args.codec.out_dir.join("sweep.csv"), csv)?;
            Ok(())
        }
        Command::BuildLibrary(args) => {
            let lib = build_library(
                args.bsc_rho,
                args.design_k,
                &args.grid,
                args.candidates,
                args.trials,
                args.max_iters,
                7,
                args.seed,
            );
            for e in &lib.entries {
                println!(
                    "h {:.2}: {} batches ({}-chain), design ber {:.5}",
                    e.h,
                    e.batches,
                    if e.high { "high" } else { "low" },
                    e.design_ber
                );
            }
            lib.save(&args.out)?;
            println!("library written to {}", args.out.display());
            Ok(())
        }
        Command::ModelStudy(args) => {
            let img = load_image(&args.image, args.size)?;
            let cfg = CodecConfig {
                levels: args.levels,
                planes: args.planes,
                ..CodecConfig::default()
            };
            let rows = model_study(&img, &cfg)?;
            fs::create_dir_all(&args.out_dir)?;
            let mut csv = String::from("allocation,total_bits,data_bits,side_bits,bits_per_sample\n");
            for r in &rows {
                println!(
                    "{:>12}: {:.4} bits/sample (data {:.0}, side {:.0})",
                    r.label, r.bits_per_sample, r.data_bits, r.side_bits
                );
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.label, r.total_bits, r.data_bits, r.side_bits, r.bits_per_sample
                ));
            }
            fs::write(args.out_dir.join("model_study.csv"), csv)?;
            Ok(())
        }
    }
}
