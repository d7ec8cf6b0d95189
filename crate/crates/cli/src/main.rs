//! Command-line front end tying the pipeline together.
//!
//! Exit codes: 0 success, 1 processing failure, 2 usage/input error.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "seaseg",
    about = "Water segmentation and in-water obstacle detection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the detector-driving commands.
#[derive(Args, Clone)]
struct DetectorFlags {
    /// Weak-priors JSON file.
    #[arg(long)]
    priors: PathBuf,
    /// Working-resolution side length.
    #[arg(long, default_value_t = 50)]
    working_size: usize,
    /// Soft-reset weight on the previous frame's parameters.
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Colorspace for the feature vector.
    #[arg(long, default_value = "ycrcb")]
    colorspace: String,
    /// Detector variant: full model or ablations.
    #[arg(long, default_value = "ssm")]
    mode: String,
    /// EM iteration cap.
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    /// EM convergence threshold on the mean absolute posterior change.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
    /// Box-merge threshold as a fraction of the working-image diagonal.
    #[arg(long, default_value_t = 0.05)]
    merge_gap: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a single frame: writes mask, edge profile and obstacle boxes.
    Segment {
        /// Input frame (PPM/PGM natively, PNG/JPEG via the image codec).
        frame: PathBuf,
        #[command(flatten)]
        detector: DetectorFlags,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
        /// Also write an overlay image with the edge and boxes drawn in.
        #[arg(long)]
        overlay: bool,
    },
    /// Process a frame sequence with temporal warm starts; reports timing.
    Run {
        /// Directory of frames named in sortable order.
        sequence: PathBuf,
        #[command(flatten)]
        detector: DetectorFlags,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
        /// Drop temporal state every N frames (1 disables warm starts).
        #[arg(long, default_value_t = 0)]
        reset_every: usize,
    },
    /// Learn the weak priors from images with `_labels.pgm` masks.
    LearnPriors {
        /// Training directory.
        training: PathBuf,
        /// Output priors JSON path.
        #[arg(short, long, default_value = "priors.json")]
        output: PathBuf,
        #[arg(long, default_value_t = 50)]
        working_size: usize,
        #[arg(long, default_value = "ycrcb")]
        colorspace: String,
        /// Detector variant the priors are meant for (sets the feature set).
        #[arg(long, default_value = "ssm")]
        mode: String,
    },
    /// Score per-frame results against annotations.
    Evaluate {
        /// Directory with `<stem>_boxes.json`, `<stem>_edge.txt`,
        /// `<stem>_mask.pgm` per frame.
        results: PathBuf,
        /// Directory with `<stem>.json` annotations.
        annotations: PathBuf,
        /// Minimum object side in pixels; 0 disables the size sweep.
        #[arg(long, default_value_t = 0.0)]
        min_size: f64,
        /// Glitter handling: ignore or account.
        #[arg(long, default_value = "account")]
        glitter: String,
        /// Report the buffered success probability for this many frames.
        #[arg(long)]
        nbuf: Option<u32>,
        /// Where to write metrics.json / metrics.txt (defaults to the
        /// results directory).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic scene sequence from a spec file.
    Synth {
        /// Scene spec JSON.
        spec: PathBuf,
        /// Output sequence directory.
        #[arg(short, long)]
        output: PathBuf,
        /// Also write 3-region label masks for prior learning.
        #[arg(long)]
        labels: bool,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convert an external annotation export into per-frame JSON files.
    ImportModd {
        /// A single JSON export holding all frames (see README).
        export: PathBuf,
        /// Output annotations directory.
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment { frame, detector, output, overlay } => {
            commands::cmd_segment(&frame, &detector, &output, overlay)
        }
        Command::Run { sequence, detector, output, reset_every } => {
            commands::cmd_run(&sequence, &detector, &output, reset_every)
        }
        Command::LearnPriors { training, output, working_size, colorspace, mode } => {
            commands::cmd_learn_priors(&training, &output, working_size, &colorspace, &mode)
        }
        Command::Evaluate { results, annotations, min_size, glitter, nbuf, output } => {
            commands::cmd_evaluate(&results, &annotations, min_size, &glitter, nbuf, output.as_deref())
        }
        Command::Synth { spec, output, labels, seed } => {
            commands::cmd_synth(&spec, &output, labels, seed)
        }
        Command::ImportModd { export, output } => commands::cmd_import_modd(&export, &output),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {:#}", err.message);
            std::process::exit(err.code);
        }
    }
}
