//! `hrst` — texture-enhancement super-resolution from the command line.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hrst_core::complexity::{fit_scale_model, mmi, read_calibration_csv};
use hrst_core::image::to_luma;
use hrst_core::io::{read_image, write_image};
use hrst_core::loss::TransferConfig;
use hrst_core::metrics::{psnr, ssim};
use hrst_core::net::Network;
use hrst_core::pipeline::{
    super_resolve, super_resolve_4k, Diagnostics, PatchOptions, PipelineConfig,
};
use hrst_core::scale::ScaleModel;
use hrst_core::{ComplexityConfig, Error};

/// Thread-count fallback when `--threads` is not given.
const THREADS_ENV: &str = "HRST_THREADS";

#[derive(Parser)]
#[command(
    name = "hrst",
    version,
    about = "Texture-enhancement super-resolution via HR style transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Super-resolve / texture-enhance an image
    Enhance(EnhanceArgs),
    /// Print the structural-complexity score of an image
    Mmi {
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit the scale-factor line to calibration samples (CSV: delta,phi[,mmi_gap])
    Calibrate {
        #[arg(long)]
        samples: PathBuf,
    },
    /// Print PSNR and SSIM between two images
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Args)]
struct EnhanceArgs {
    /// Low-resolution input image (PNG/PPM/PGM)
    #[arg(long)]
    input: PathBuf,
    /// Initial HR image from an external enhancer; bicubic fallback if absent
    #[arg(long = "initial-hr")]
    initial_hr: Option<PathBuf>,
    /// Network weight file (HRSTNET1 format)
    #[arg(long)]
    weights: PathBuf,
    /// Output image path (extension selects the format)
    #[arg(long)]
    output: PathBuf,
    /// Up-sampling factor
    #[arg(long, default_value_t = 4)]
    factor: usize,
    /// Style/content loss weight ratio
    #[arg(long = "alpha-beta-ratio", default_value_t = 1.0e4)]
    alpha_beta_ratio: f64,
    /// Optimizer iteration budget
    #[arg(long, default_value_t = 300)]
    iterations: usize,
    /// Force this down-scaling factor instead of estimating it
    #[arg(long)]
    phi: Option<f64>,
    /// Scale-model slope
    #[arg(long, default_value_t = -4.626, allow_hyphen_values = true)]
    slope: f64,
    /// Scale-model intercept
    #[arg(long, default_value_t = 0.792)]
    intercept: f64,
    /// Histogram bins for the complexity score
    #[arg(long, default_value_t = 16)]
    bins: usize,
    /// Patch mode for large images: enhance overlapping patches at native
    /// resolution (applies to --initial-hr when given, else to --input)
    #[arg(long = "4k")]
    four_k: bool,
    /// Patch size in patch mode
    #[arg(long, default_value_t = 240)]
    patch: usize,
    /// Patch overlap fraction in patch mode
    #[arg(long, default_value_t = 0.3)]
    overlap: f64,
    /// Worker threads (default: HRST_THREADS or all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Write the generated style image here (single-image mode)
    #[arg(long = "dump-style")]
    dump_style: Option<PathBuf>,
    /// Write the loss trace as CSV
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print diagnostics to stderr
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<(), Error> {
    match Cli::parse().command {
        Command::Enhance(args) => enhance(args),
        Command::Mmi { input } => {
            let img = read_image(&input)?;
            let score = mmi(&to_luma(&img)?, &ComplexityConfig::default())?;
            println!("{score:.6}");
            Ok(())
        }
        Command::Calibrate { samples } => {
            let model = fit_scale_model(&read_calibration_csv(&samples)?)?;
            println!("slope {:.6}", model.slope);
            println!("intercept {:.6}", model.intercept);
            Ok(())
        }
        Command::Metrics { a, b } => {
            let (ia, ib) = (read_image(&a)?, read_image(&b)?);
            println!("PSNR {:.4} dB", psnr(&ia, &ib)?);
            println!("SSIM {:.6}", ssim(&ia, &ib)?);
            Ok(())
        }
    }
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

fn enhance(args: EnhanceArgs) -> Result<(), Error> {
    let net = Network::load(&args.weights)?;
    let input = read_image(&args.input)?;
    let initial_hr = args.initial_hr.as_ref().map(read_image).transpose()?;

    let cfg = PipelineConfig {
        upsample_factor: args.factor,
        scale_model: ScaleModel {
            slope: args.slope,
            intercept: args.intercept,
            ..ScaleModel::default()
        },
        transfer: TransferConfig {
            alpha: args.alpha_beta_ratio,
            beta: 1.0,
            iterations: args.iterations,
            ..TransferConfig::default()
        },
        complexity: ComplexityConfig {
            num_bins: args.bins,
        },
        patch: PatchOptions {
            enabled: args.four_k,
            patch_size: args.patch,
            overlap: args.overlap,
        },
        threads: args.threads.or_else(threads_from_env),
        phi_override: args.phi,
        keep_style: args.dump_style.is_some(),
    };

    if args.four_k {
        if args.dump_style.is_some() {
            return Err(Error::InvalidArgument(
                "--dump-style applies to single-image mode only".into(),
            ));
        }
        // patch whichever image is given: the external initial HR when
        // supplied, otherwise the input itself at its native resolution
        let img = initial_hr.unwrap_or(input);
        let (out, diags) = super_resolve_4k(&img, &net, &cfg)?;
        write_image(&args.output, &out)?;
        if let Some(path) = &args.trace {
            let mut csv = String::from("patch,iteration,loss\n");
            for (pi, d) in diags.iter().enumerate() {
                for (i, loss) in d.report.loss_trace.iter().enumerate() {
                    let _ = writeln!(csv, "{pi},{i},{loss}");
                }
            }
            std::fs::write(path, csv).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        if args.verbose {
            for (pi, d) in diags.iter().enumerate() {
                eprintln!(
                    "patch {pi}: delta {:.6} phi {:.4} -> {:.3}, {} iterations, final loss {:.6e}, {:?}",
                    d.delta,
                    d.phi_raw,
                    d.phi_hat,
                    d.report.iterations_used,
                    d.report.final_loss,
                    d.elapsed
                );
            }
        }
        return Ok(());
    }

    let (out, diag) = super_resolve(&input, initial_hr.as_ref(), &net, &cfg)?;
    write_image(&args.output, &out)?;
    if let Some(path) = &args.dump_style {
        if let Some(style) = &diag.style {
            write_image(path, style)?;
        }
    }
    if let Some(path) = &args.trace {
        let mut csv = String::from("iteration,loss\n");
        for (i, loss) in diag.report.loss_trace.iter().enumerate() {
            let _ = writeln!(csv, "{i},{loss}");
        }
        std::fs::write(path, csv).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    print_diag(&diag, args.verbose);
    Ok(())
}

fn print_diag(diag: &Diagnostics, verbose: bool) {
    if !verbose {
        return;
    }
    eprintln!(
        "delta {:.6}, phi {:.4} quantized to {:.3}",
        diag.delta, diag.phi_raw, diag.phi_hat
    );
    eprintln!(
        "{} iterations, final loss {:.6e}, stopped by {:?}, took {:?}",
        diag.report.iterations_used,
        diag.report.final_loss,
        diag.report.termination_reason,
        diag.elapsed
    );
}
