use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use logvol_cli::commands::{
    cmd_denoise_sim, cmd_duality, cmd_figure1, cmd_select, cmd_volume, DualityConfig,
    Figure1Config, SelectConfig, VolumeConfig,
};
use logvol_cli::denoise::DenoiseSpec;
use logvol_cli::jsonfmt::to_json_bytes;
use logvol_cli::verify::run_verify;
use logvol_cli::{CliError, EXIT_NONCONVERGED, EXIT_OK, EXIT_USAGE};
use logvol_core::volume::IntegrationConfig;

/// Fisher information volumes of logistic regression models: validated
/// integration, MDL-style model selection and boundary-duality diagnostics.
#[derive(Parser)]
#[command(name = "logvol", version, about, max_term_width = 100)]
struct Cli {
    /// Worker threads for parallel integration (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct IntegrationArgs {
    /// Target relative error of volume integration.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// RNG seed (recorded in all outputs).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integrand evaluation budget.
    #[arg(long, default_value_t = 80_000_000)]
    max_evals: u64,
}

impl IntegrationArgs {
    fn config(&self) -> IntegrationConfig {
        IntegrationConfig {
            rel_tol: self.tol,
            seed: self.seed,
            max_evals: self.max_evals,
            ..IntegrationConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fisher information volume of one design matrix.
    Volume {
        /// Design CSV: comma-separated, no header, one row per observation.
        #[arg(long)]
        design: PathBuf,
        /// Rows with all |entries| <= this count as zero rows.
        #[arg(long, default_value_t = 0.0)]
        zero_row_tol: f64,
        #[command(flatten)]
        integration: IntegrationArgs,
        /// Write the JSON payload here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score and rank candidate designs against one response.
    Select {
        /// Directory of candidate design CSVs (sorted by filename).
        #[arg(long)]
        designs_dir: PathBuf,
        /// Response file: one 0/1 per line.
        #[arg(long)]
        response: PathBuf,
        /// approx-volume, bic or exact-volume.
        #[arg(long, default_value = "approx-volume")]
        criterion: String,
        #[arg(long, default_value_t = 0.0)]
        zero_row_tol: f64,
        #[command(flatten)]
        integration: IntegrationArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff-distance checks of the boundary duality, per face and radius.
    Duality {
        #[arg(long)]
        design: PathBuf,
        /// Sphere radii, comma separated.
        #[arg(long, default_value = "10,100,1000")]
        r_list: String,
        /// Softening parameter in (0, pi/2).
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Sphere samples per radius.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON output path; also writes <out>.points.csv with the sampled
        /// point clouds.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduced-scale image denoising simulation.
    DenoiseSim {
        #[arg(long, default_value_t = 48)]
        width: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 0.1)]
        noise_rate: f64,
        #[arg(long, default_value_t = 9.0)]
        segment_len: f64,
        #[arg(long, default_value_t = 2.0)]
        segment_thickness: f64,
        #[arg(long, default_value_t = 12)]
        orientations: usize,
        #[arg(long, default_value_t = 2)]
        lattice_stride: usize,
        #[arg(long, default_value_t = 6)]
        signal_segments: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Prefix for CSV artifacts (signal, noisy, predictions).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embedding curves and volumes for the designs [x1; 1].
    Figure1 {
        /// Comma-separated x1 values.
        #[arg(long, default_value = "1,0.5,0.2,0.07,0.01,0")]
        x1_list: String,
        #[command(flatten)]
        integration: IntegrationArgs,
        /// JSON output path; also writes <out>.curves.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in property suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number in list: '{t}'")))
        })
        .collect()
}

fn deliver(bytes: Vec<u8>, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(t) = cli.threads {
        // best effort: a later duplicate initialization is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Volume { design, zero_row_tol, integration, out } => {
            let cfg = VolumeConfig { design, zero_row_tol, integration: integration.config() };
            let (bytes, exit) = cmd_volume(&cfg)?;
            deliver(bytes, out.as_ref())?;
            Ok(exit)
        }
        Command::Select { designs_dir, response, criterion, zero_row_tol, integration, out } => {
            let cfg = SelectConfig {
                designs_dir,
                response,
                criterion: criterion.parse()?,
                zero_row_tol,
                integration: integration.config(),
            };
            let (bytes, exit) = cmd_select(&cfg)?;
            deliver(bytes, out.as_ref())?;
            Ok(exit)
        }
        Command::Duality { design, r_list, delta, samples, seed, out } => {
            let cfg = DualityConfig {
                design,
                r_list: parse_f64_list(&r_list)?,
                delta,
                samples,
                seed,
                points_csv: out
                    .as_ref()
                    .map(|p| PathBuf::from(format!("{}.points.csv", p.display()))),
            };
            let (bytes, exit) = cmd_duality(&cfg)?;
            deliver(bytes, out.as_ref())?;
            Ok(exit)
        }
        Command::DenoiseSim {
            width,
            height,
            noise_rate,
            segment_len,
            segment_thickness,
            orientations,
            lattice_stride,
            signal_segments,
            folds,
            seed,
            out,
        } => {
            let spec = DenoiseSpec {
                width,
                height,
                noise_rate,
                segment_len,
                segment_thickness,
                orientations,
                lattice_stride,
                signal_segments,
                cv_folds: folds,
                seed,
            };
            let (bytes, exit) = cmd_denoise_sim(&spec, out.as_deref())?;
            deliver(bytes, out.as_ref().map(|p| PathBuf::from(format!("{}.json", p.display()))).as_ref())?;
            Ok(exit)
        }
        Command::Figure1 { x1_list, integration, out } => {
            let cfg = Figure1Config {
                x1_list: parse_f64_list(&x1_list)?,
                integration: integration.config(),
                curves_csv: out
                    .as_ref()
                    .map(|p| PathBuf::from(format!("{}.curves.csv", p.display()))),
            };
            let (bytes, exit) = cmd_figure1(&cfg)?;
            deliver(bytes, out.as_ref())?;
            Ok(exit)
        }
        Command::Verify { seed } => {
            let results = run_verify(seed);
            let all_passed = results.iter().all(|r| r.passed);
            let bytes = to_json_bytes(&results)?;
            deliver(bytes, None)?;
            Ok(if all_passed { EXIT_OK } else { EXIT_NONCONVERGED })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version output is a success, not a usage error
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
            print!("{e}");
            return ExitCode::from(EXIT_OK as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
