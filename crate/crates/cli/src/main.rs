use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use skyirr_cli::pipeline::{self, EvalTask};

#[derive(Parser)]
#[command(name = "skyirr", version, about = "Sky image segmentation and irradiance estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Classifier,
    Regressor,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic sky scenes with known ground-truth GHI
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of scenes drawn from the cloudy mixture
        #[arg(long, default_value_t = 0.5)]
        mix: f64,
    },
    /// Fit a color palette with mini-batch k-means over manifest images
    TrainKmeans {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 256)]
        k: usize,
        #[arg(long, default_value_t = 1024)]
        batch_size: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on pooled training pixels; larger pools are stride-sampled
        #[arg(long, default_value_t = 1_000_000)]
        max_pixels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize one image to its palette colors
    Segment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract per-cluster pixel-count features for every manifest image
    Extract {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the clear/cloudy classifier on a features CSV
    TrainClassifier {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 0.75)]
        split: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scaler_out: PathBuf,
    },
    /// Train the GHI regressor on a features CSV
    TrainRegressor {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// Optional train fraction; held-out metrics print when given
        #[arg(long)]
        split: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scaler_out: PathBuf,
    },
    /// Classify sky condition from an image or a features CSV
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scaler: PathBuf,
        #[arg(long, requires = "kmeans", conflicts_with = "features")]
        image: Option<PathBuf>,
        /// Palette model, required with --image
        #[arg(long)]
        kmeans: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Estimate GHI from an image or a features CSV
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scaler: PathBuf,
        #[arg(long, requires = "kmeans", conflicts_with = "features")]
        image: Option<PathBuf>,
        /// Palette model, required with --image
        #[arg(long)]
        kmeans: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// K-fold cross validation report over a features CSV
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Regressor epochs per fold; ignored for the classifier task
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> skyirr::Result<()> {
    match cli.command {
        Command::Synth { count, out, seed, mix } => pipeline::cmd_synth(count, &out, seed, mix),
        Command::TrainKmeans { manifest, k, batch_size, epochs, seed, max_pixels, out } => {
            pipeline::cmd_train_kmeans(&manifest, k, batch_size, epochs, seed, max_pixels, &out)
        }
        Command::Segment { model, image, out } => pipeline::cmd_segment(&model, &image, &out),
        Command::Extract { model, manifest, out } => {
            pipeline::cmd_extract(&model, &manifest, &out)
        }
        Command::TrainClassifier { features, split, seed, out, scaler_out } => {
            pipeline::cmd_train_classifier(&features, split, seed, &out, &scaler_out)
        }
        Command::TrainRegressor { features, epochs, batch_size, split, seed, out, scaler_out } => {
            pipeline::cmd_train_regressor(
                &features,
                epochs,
                batch_size,
                split,
                seed,
                &out,
                &scaler_out,
            )
        }
        Command::Classify { model, scaler, image, kmeans, features } => {
            let image = validate_input_source(&image, &kmeans, &features)?;
            pipeline::cmd_classify(&model, &scaler, image, features.as_deref())
        }
        Command::Estimate { model, scaler, image, kmeans, features } => {
            let image = validate_input_source(&image, &kmeans, &features)?;
            pipeline::cmd_estimate(&model, &scaler, image, features.as_deref())
        }
        Command::Evaluate { features, task, folds, seed, epochs, batch_size, out } => {
            let task = match task {
                Task::Classifier => EvalTask::Classifier,
                Task::Regressor => EvalTask::Regressor,
            };
            pipeline::cmd_evaluate(&features, task, folds, seed, epochs, batch_size, &out)
        }
    }
}

/// Exactly one of --image (with --kmeans) or --features must be given.
/// Clap enforces the pairing; this enforces presence.
fn validate_input_source<'a>(
    image: &'a Option<PathBuf>,
    kmeans: &'a Option<PathBuf>,
    features: &Option<PathBuf>,
) -> skyirr::Result<Option<(&'a std::path::Path, &'a std::path::Path)>> {
    match (image, features) {
        (Some(img), None) => Ok(Some((kmeans.as_deref().expect("clap requires"), img))),
        (None, Some(_)) => Ok(None),
        _ => Err(skyirr::Error::Usage(
            "exactly one of --image or --features is required".into(),
        )),
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on its own for flag-level usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if matches!(err, skyirr::Error::Usage(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
