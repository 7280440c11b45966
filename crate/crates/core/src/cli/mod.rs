//! Command-line front end: argument parsing, config merging and the
//! subcommand implementations.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_eval, cmd_gradcheck, cmd_inspect, cmd_prepare, cmd_synth, cmd_train, cmd_tune, Split,
    SynthArgs, CONFIG_FILE, METRICS_FILE, TUNING_FILE,
};
pub use config::{
    CliConfig, CorpusSection, GradcheckSection, ModelsSection, PathsSection, TrainerSection,
};

use crate::error::{Error, Result};
use crate::trainer::preset;

#[derive(Debug, Parser)]
#[command(
    name = "slicernn",
    version,
    about = "Review-score classification with slice-trained recurrent networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults shown.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML config file with [paths], [corpus], [models], [trainer] and [gradcheck] sections
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Root random seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// modified_rnn, perstep_rnn or gru [default: modified_rnn; gradcheck: all]
    #[arg(long, global = true)]
    pub arch: Option<String>,
    /// 4 or 5 [default: 5]
    #[arg(long, global = true)]
    pub classes: Option<usize>,
    /// Pad every review to --max-len [default: true]
    #[arg(long, global = true, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub padded: Option<bool>,
    /// Learning rate [default: 0.05]
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// L2 weight λ [default: 0]
    #[arg(long, global = true)]
    pub l2: Option<f64>,
    /// Dropout keep probability [default: 1.0]
    #[arg(long, global = true)]
    pub keep_prob: Option<f64>,
    /// [default: 7]
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// [default: 50]
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Tokens per slice [default: 8]
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Padded review length including EOS [default: 88]
    #[arg(long, global = true)]
    pub max_len: Option<usize>,
    /// Worker threads for tune [default: 1]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter, resample, split, tokenize and encode a review CSV
    Prepare(PrepareArgs),
    /// Train one model and write metrics and checkpoints
    Train(TrainArgs),
    /// Grid-search lr, l2 and keep probability
    Tune(TuneArgs),
    /// Accuracy and confusion matrix of a checkpoint
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences
    Gradcheck(GradcheckArgs),
    /// Per-class mean hidden state at EOS
    Inspect(InspectArgs),
    /// Write a synthetic review CSV whose labels are planted in the text
    Synth(SynthCliArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Review CSV with Score and Text columns
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shortest review kept, in tokens [default: 75]
    #[arg(long)]
    pub min_tokens: Option<usize>,
    /// Longest review kept, in tokens [default: 87]
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// none, drop_top or subsample [default: none, or drop_top with --classes 4]
    #[arg(long)]
    pub resample: Option<String>,
    /// Per-class cap for scores 4 and 5 under subsample [default: 4000]
    #[arg(long)]
    pub subsample_target: Option<usize>,
    /// Tokens rarer than this map to <unk> [default: 1]
    #[arg(long)]
    pub min_freq: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// Named hyperparameter preset, e.g. gru/5cls; sets arch, classes, lr, l2 and keep probability
    #[arg(long)]
    pub preset: Option<String>,
    /// Word-vector size [default: 50]
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Hidden units [default: 50]
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// per_slice or full_sequence [default: per_slice]
    #[arg(long)]
    pub truncation: Option<String>,
    /// Skip prediction points whose inputs are all padding [default: false]
    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub mask_pad_slices: Option<bool>,
    /// Evaluate every N epochs [default: 1]
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Record per-epoch seconds in the metrics CSV [default: false]
    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub record_time: Option<bool>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared-data directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Prepared-data directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated learning rates [default: 1e-6,1e-5,1e-4,1e-3]
    #[arg(long, value_delimiter = ',')]
    pub lrs: Option<Vec<f64>>,
    /// Comma-separated L2 weights [default: 1e-6,1e-4,0.009,0.09]
    #[arg(long, value_delimiter = ',')]
    pub l2s: Option<Vec<f64>>,
    /// Comma-separated keep probabilities [default: 0.8,0.9,1.0]
    #[arg(long, value_delimiter = ',')]
    pub keep_probs: Option<Vec<f64>>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prepared-data directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// train, val or test
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Confusion-matrix CSV to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Prepared-data directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// train, val or test
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Hidden-state CSV to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Only this truncation mode [default: both]
    #[arg(long)]
    pub truncation: Option<String>,
    /// Finite-difference step [default: 1e-5]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest accepted relative error [default: 1e-5]
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthCliArgs {
    /// CSV file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Reviews per class
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    /// Class tokens planted in each review [default: 30]
    #[arg(long)]
    pub plants: Option<usize>,
}

impl CommonArgs {
    /// Loads the config file, if any, and applies these flags on top.
    pub fn resolve(&self) -> Result<CliConfig> {
        let mut cfg = match &self.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut CliConfig) {
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.models.arch, self.arch.clone());
        set(&mut cfg.models.classes, self.classes);
        set(&mut cfg.corpus.padded, self.padded);
        set(&mut cfg.trainer.lr, self.lr);
        set(&mut cfg.trainer.l2, self.l2);
        set(&mut cfg.trainer.keep_prob, self.keep_prob);
        set(&mut cfg.trainer.epochs, self.epochs);
        set(&mut cfg.trainer.batch_size, self.batch_size);
        set(&mut cfg.models.steps, self.steps);
        set(&mut cfg.corpus.max_len, self.max_len);
        set(&mut cfg.trainer.jobs, self.jobs);
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut CliConfig, common: &CommonArgs) -> Result<()> {
        if let Some(name) = &self.preset {
            let p =
                preset(name).ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
            cfg.models.arch = p.arch.name().into();
            cfg.models.classes = p.classes;
            cfg.trainer.lr = p.lr;
            cfg.trainer.l2 = p.l2;
            cfg.trainer.keep_prob = p.keep_prob;
            // Explicit flags still win over the preset.
            common.apply(cfg);
        }
        set(&mut cfg.models.embed_dim, self.embed_dim);
        set(&mut cfg.models.hidden_dim, self.hidden_dim);
        set(&mut cfg.models.truncation, self.truncation.clone());
        set(&mut cfg.models.mask_pad_slices, self.mask_pad_slices);
        set(&mut cfg.trainer.eval_every, self.eval_every);
        set(&mut cfg.trainer.record_time, self.record_time);
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

/// Runs a parsed command line, writing progress to `log`.
pub fn run(cli: &Cli, log: &mut dyn Write) -> Result<()> {
    let mut cfg = cli.common.resolve()?;
    match &cli.command {
        Command::Prepare(a) => {
            set_path(&mut cfg.paths.input, &a.input);
            set_path(&mut cfg.paths.out, &a.out);
            set(&mut cfg.corpus.min_tokens, a.min_tokens);
            set(&mut cfg.corpus.max_tokens, a.max_tokens);
            set(&mut cfg.corpus.subsample_target, a.subsample_target);
            set(&mut cfg.corpus.min_freq, a.min_freq);
            match &a.resample {
                Some(r) => cfg.corpus.resample = r.clone(),
                None if cli.common.classes == Some(4) && cfg.corpus.resample == "none" => {
                    cfg.corpus.resample = "drop_top".into()
                }
                None => {}
            }
            cmd_prepare(&cfg, log).map(|_| ())
        }
        Command::Train(a) => {
            set_path(&mut cfg.paths.data, &a.data);
            set_path(&mut cfg.paths.out, &a.out);
            a.model.apply(&mut cfg, &cli.common)?;
            cmd_train(&cfg, log).map(|_| ())
        }
        Command::Tune(a) => {
            set_path(&mut cfg.paths.data, &a.data);
            set_path(&mut cfg.paths.out, &a.out);
            a.model.apply(&mut cfg, &cli.common)?;
            set(&mut cfg.trainer.lrs, a.lrs.clone());
            set(&mut cfg.trainer.l2s, a.l2s.clone());
            set(&mut cfg.trainer.keep_probs, a.keep_probs.clone());
            cmd_tune(&cfg, log).map(|_| ())
        }
        Command::Eval(a) => {
            set_path(&mut cfg.paths.data, &a.data);
            set_path(&mut cfg.paths.checkpoint, &a.checkpoint);
            set_path(&mut cfg.paths.out, &a.out);
            cmd_eval(&cfg, a.split, log).map(|_| ())
        }
        Command::Inspect(a) => {
            set_path(&mut cfg.paths.data, &a.data);
            set_path(&mut cfg.paths.checkpoint, &a.checkpoint);
            set_path(&mut cfg.paths.out, &a.out);
            cmd_inspect(&cfg, a.split, log).map(|_| ())
        }
        Command::Gradcheck(a) => {
            set(&mut cfg.gradcheck.eps, a.eps);
            set(&mut cfg.gradcheck.tol, a.tol);
            let arch = cli.common.arch.as_deref().map(str::parse).transpose()?;
            let truncation = a.truncation.as_deref().map(str::parse).transpose()?;
            cmd_gradcheck(&cfg, arch, truncation, log).map(|_| ())
        }
        Command::Synth(a) => {
            let args = SynthArgs {
                per_class: a.per_class,
                plants: a.plants,
            };
            cmd_synth(&cfg, &args, &a.out, log)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, log) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
