use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use frlstm_core::{Kernel, PipelineConfig};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "frlstm", version, about = "Fractional-domain LSTM audio modeling")]
#[command(after_help = "Exit codes: 0 success, 2 I/O failure, 3 bad file format, 4 invalid configuration, \
5 numerical failure (training diverged).")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write time-domain, STFT and fractional-domain feature maps as CSV.
    #[command(after_help = "Outputs in --out-dir:\n  \
time.csv        index,time_s,amplitude\n  \
stft.csv        frame,time_s,bin,freq_hz,magnitude\n  \
frft_real.csv   index,value\n  \
frft_imag.csv   index,value\n\
With --svg, matching .svg plots are written next to them.")]
    Analyze(AnalyzeArgs),
    /// Turn a WAV file into a normalized two-channel dataset (.fwd1).
    #[command(after_help = "Also writes <output>.json with the effective configuration.")]
    Prepare(PrepareArgs),
    /// Train the channel networks on a prepared dataset.
    #[command(after_help = "Outputs in --out-dir:\n  \
real.fwm1, imag.fwm1   checkpoints (imag absent with --ablation)\n  \
report.json            effective config, per-epoch losses, test MSE\n  \
loss.csv               epoch,loss_real,loss_imag\n\
Window length and horizon are taken from the dataset.")]
    Train(TrainArgs),
    /// Generate samples autoregressively and write them as audio.
    #[command(after_help = "Outputs:\n  \
<output>              16-bit mono WAV of the inverse-transformed sequence\n  \
<output>.json         effective config and generation summary\n  \
--overlay PATH        channel,position,offset,predicted,truth (teacher-forced)\n\
Use the same --order/--kernel/--rate as at prepare time.")]
    Generate(GenerateArgs),
    /// Compare the fractional-domain pipeline against the raw-waveform baseline.
    #[command(after_help = "Writes a JSON report with both arms' per-epoch losses and test MSEs.")]
    Ablate(AblateArgs),
}

/// Flags shared by every subcommand. Precedence: flags, then --config, then defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with pipeline settings
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for weight init and shuffling
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Fractional order a in [-2, 2)
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub order: Option<f64>,
    /// Transform kernel
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Working sample rate in Hz
    #[arg(long, value_name = "HZ")]
    pub rate: Option<u32>,
    /// Samples per input window
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,
    /// Samples predicted per window
    #[arg(long, value_name = "N")]
    pub horizon: Option<usize>,
    /// Step between training windows
    #[arg(long, value_name = "N")]
    pub stride: Option<usize>,
    /// Step between evaluation windows
    #[arg(long, value_name = "N")]
    pub eval_stride: Option<usize>,
    /// Fraction of samples used for training
    #[arg(long, value_name = "F")]
    pub train_fraction: Option<f64>,
    /// Training epochs
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    /// Learning rate
    #[arg(long, value_name = "X")]
    pub lr: Option<f64>,
    /// Mini-batch size
    #[arg(long, value_name = "N")]
    pub batch: Option<usize>,
    /// LSTM hidden units per layer
    #[arg(long, value_name = "N")]
    pub hidden: Option<usize>,
    /// Stacked LSTM layers
    #[arg(long, value_name = "N")]
    pub layers: Option<usize>,
    /// Skip the transform and model the raw waveform with one network
    #[arg(long)]
    pub ablation: bool,
    /// Train the two networks sequentially on one thread
    #[arg(long)]
    pub single_thread: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Paper,
    Standard,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Paper => Kernel::PaperLiteral,
            KernelArg::Standard => Kernel::StandardChirp,
        }
    }
}

impl CommonArgs {
    /// Defaults, overlaid by the config file, overlaid by flags.
    pub fn effective_config(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => load_config(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.seed {
            c.train.seed = v;
        }
        if let Some(v) = self.order {
            c.frft_order = v;
        }
        if let Some(v) = self.kernel {
            c.kernel = v.into();
        }
        if let Some(v) = self.rate {
            c.sample_rate_hz = v;
        }
        if let Some(v) = self.window {
            c.window_len = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = self.stride {
            c.window_stride = v;
        }
        if let Some(v) = self.eval_stride {
            c.eval_stride = v;
        }
        if let Some(v) = self.train_fraction {
            c.train_fraction = v;
        }
        if let Some(v) = self.epochs {
            c.train.epochs = v;
        }
        if let Some(v) = self.lr {
            c.train.learning_rate = v;
        }
        if let Some(v) = self.batch {
            c.train.batch_size = v;
        }
        if let Some(v) = self.hidden {
            c.hidden_size = v;
        }
        if let Some(v) = self.layers {
            c.num_layers = v;
        }
        c.ablation |= self.ablation;
        c.single_thread |= self.single_thread;
        c.validate()?;
        Ok(c)
    }
}

fn load_config(path: &Path) -> Result<PipelineConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Also render SVG plots
    #[arg(long)]
    pub svg: bool,
    /// STFT window length in samples
    #[arg(long, value_name = "N", default_value_t = 256)]
    pub stft_window: usize,
    /// STFT hop in samples
    #[arg(long, value_name = "N", default_value_t = 128)]
    pub stft_hop: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Write per-epoch wall-clock seconds here
    #[arg(long, value_name = "PATH")]
    pub timings: Option<PathBuf>,
    /// Also render loss.svg
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverlayRange {
    /// The generated span
    Span,
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// Real-channel checkpoint
    #[arg(long, value_name = "PATH")]
    pub real: PathBuf,
    /// Imaginary-channel checkpoint (not used with --ablation)
    #[arg(long, value_name = "PATH")]
    pub imag: Option<PathBuf>,
    #[arg(long, value_name = "WAV")]
    pub output: PathBuf,
    /// First sample of the seed window (default: start of the test interval)
    #[arg(long, value_name = "N")]
    pub seed_start: Option<usize>,
    /// Samples to generate after the seed window
    #[arg(long, value_name = "N", default_value_t = 1000)]
    pub samples: usize,
    /// Teacher-forced overlay CSV
    #[arg(long, value_name = "PATH")]
    pub overlay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OverlayRange::Span)]
    pub overlay_range: OverlayRange,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}
