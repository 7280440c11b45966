//! TOML configuration with one section per pipeline stage.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, a
//! `--preset`, then individual command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{PrepareOptions, Resample};
use crate::error::{Error, Result};
use crate::models::{Arch, Hyper, Truncation};
use crate::trainer::{Grid, TrainConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// Root of every random stream.
    pub seed: u64,
    pub paths: PathsSection,
    pub corpus: CorpusSection,
    pub models: ModelsSection,
    pub trainer: TrainerSection,
    pub gradcheck: GradcheckSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Raw review CSV read by `prepare`.
    pub input: Option<PathBuf>,
    /// Prepared-data directory.
    pub data: Option<PathBuf>,
    /// Output directory or file.
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// `none`, `drop_top` or `subsample`.
    pub resample: String,
    pub subsample_target: usize,
    pub max_len: usize,
    pub padded: bool,
    pub min_freq: usize,
    /// Train, validation and test fractions.
    pub ratios: [f64; 3],
}

impl Default for CorpusSection {
    fn default() -> Self {
        let o = PrepareOptions::default();
        CorpusSection {
            min_tokens: o.min_tokens,
            max_tokens: o.max_tokens,
            resample: "none".into(),
            subsample_target: 4000,
            max_len: o.max_len,
            padded: o.padded,
            min_freq: o.min_freq,
            ratios: o.ratios,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub arch: String,
    pub classes: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub steps: usize,
    pub truncation: String,
    pub mask_pad_slices: bool,
}

impl Default for ModelsSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        ModelsSection {
            arch: t.arch.name().into(),
            classes: t.classes,
            embed_dim: t.embed_dim,
            hidden_dim: t.hidden_dim,
            steps: t.steps,
            truncation: t.hyper.truncation.name().into(),
            mask_pad_slices: t.hyper.mask_pad_slices,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerSection {
    pub lr: f64,
    pub l2: f64,
    pub keep_prob: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_every: usize,
    /// Adds wall-clock seconds to the metrics CSV, which makes it vary
    /// between runs.
    pub record_time: bool,
    /// Worker threads for `tune`.
    pub jobs: usize,
    pub lrs: Vec<f64>,
    pub l2s: Vec<f64>,
    pub keep_probs: Vec<f64>,
}

impl Default for TrainerSection {
    fn default() -> Self {
        let h = Hyper::default();
        let g = Grid::default();
        TrainerSection {
            lr: h.lr,
            l2: h.l2,
            keep_prob: h.keep_prob,
            epochs: h.epochs,
            batch_size: h.batch_size,
            eval_every: 1,
            record_time: false,
            jobs: 1,
            lrs: g.lrs,
            l2s: g.l2s,
            keep_probs: g.keep_probs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub steps: usize,
    pub rows: usize,
    pub eps: f64,
    pub tol: f64,
    pub l2s: Vec<f64>,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        GradcheckSection {
            vocab_size: 20,
            embed_dim: 6,
            hidden_dim: 8,
            classes: 4,
            steps: 4,
            rows: 2,
            eps: 1e-5,
            tol: 1e-5,
            l2s: vec![0.0, 0.009],
        }
    }
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn arch(&self) -> Result<Arch> {
        self.models.arch.parse()
    }

    pub fn truncation(&self) -> Result<Truncation> {
        self.models.truncation.parse()
    }

    pub fn resample(&self) -> Result<Resample> {
        match self.corpus.resample.as_str() {
            "none" => Ok(Resample::None),
            "drop_top" => Ok(Resample::DropTop),
            "subsample" => Ok(Resample::Subsample {
                n_target: self.corpus.subsample_target,
            }),
            other => Err(Error::Config(format!(
                "unknown resample mode {other:?}; expected none, drop_top or subsample"
            ))),
        }
    }

    pub fn prepare_options(&self) -> Result<PrepareOptions> {
        let resample = self.resample()?;
        if resample.num_classes() != self.models.classes {
            return Err(Error::Config(format!(
                "resample mode {resample} yields {} classes but classes = {}",
                resample.num_classes(),
                self.models.classes
            )));
        }
        Ok(PrepareOptions {
            min_tokens: self.corpus.min_tokens,
            max_tokens: self.corpus.max_tokens,
            resample,
            max_len: self.corpus.max_len,
            padded: self.corpus.padded,
            min_freq: self.corpus.min_freq,
            ratios: self.corpus.ratios,
        })
    }

    pub fn hyper(&self) -> Result<Hyper> {
        let t = &self.trainer;
        let hyper = Hyper {
            lr: t.lr,
            l2: t.l2,
            keep_prob: t.keep_prob,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: self.seed,
            mask_pad_slices: self.models.mask_pad_slices,
            truncation: self.truncation()?,
        };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            arch: self.arch()?,
            embed_dim: self.models.embed_dim,
            hidden_dim: self.models.hidden_dim,
            steps: self.models.steps,
            classes: self.models.classes,
            padded: self.corpus.padded,
            max_len: self.corpus.max_len,
            hyper: self.hyper()?,
            eval_every: self.trainer.eval_every,
            record_time: self.trainer.record_time,
        })
    }

    pub fn grid(&self) -> Grid {
        Grid {
            lrs: self.trainer.lrs.clone(),
            l2s: self.trainer.l2s.clone(),
            keep_probs: self.trainer.keep_probs.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = CliConfig::default();
        assert_eq!(CliConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(CliConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            CliConfig::from_toml("sed = 1"),
            Err(Error::Config(_))
        ));
        let err = CliConfig::from_toml("[trainer]\nlearning_rate = 0.1").unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
    }

    #[test]
    fn sections_override_defaults() {
        let c = CliConfig::from_toml(
            "seed = 9\n[models]\narch = \"gru\"\nclasses = 4\n[corpus]\nresample = \"drop_top\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.arch().unwrap(), Arch::Gru);
        assert_eq!(c.prepare_options().unwrap().resample, Resample::DropTop);
        assert_eq!(c.hyper().unwrap().seed, 9);
    }

    #[test]
    fn class_count_must_match_resampling() {
        let mut c = CliConfig::default();
        c.corpus.resample = "drop_top".into();
        assert!(matches!(c.prepare_options(), Err(Error::Config(_))));
    }
}
