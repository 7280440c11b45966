use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cli::CliConfig;
use crate::corpus::files::layout;
use crate::corpus::{
    parse_reviews_csv, prepare, synth_corpus, EncodedReview, PlantSpec, Prepared, PreparedData,
};
use crate::error::{Error, Result};
use crate::evalinspect::{evaluate, hidden_dump, EvalReport, HiddenDump};
use crate::models::{
    gradient_check, load_checkpoint, Arch, Dims, GradCheckReport, Hyper, Params, Truncation,
};
use crate::numkernel::Rng;
use crate::trainer::{grid_search, train, write_checkpoints, TrainOutcome, TuningTable};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TUNING_FILE: &str = "tuning.csv";
/// Fully resolved configuration saved next to training outputs.
pub const CONFIG_FILE: &str = "config.toml";

/// Which part of a prepared dataset to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split {s:?}; expected train, val or test")),
        }
    }
}

impl Split {
    fn of(self, data: &PreparedData) -> &[EncodedReview] {
        match self {
            Split::Train => &data.train.reviews,
            Split::Val => &data.val.reviews,
            Split::Test => &data.test.reviews,
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Argument(format!("missing {flag}")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_data(cfg: &CliConfig) -> Result<PreparedData> {
    let dir = required(&cfg.paths.data, "--data")?;
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "prepared-data directory not found",
            ),
        ));
    }
    PreparedData::load(dir)
}

fn line(log: &mut dyn Write, text: impl AsRef<str>) {
    let _ = writeln!(log, "{}", text.as_ref());
}

/// Reads the review CSV, runs the preparation pipeline and writes the
/// splits, vocabulary and class histograms into the output directory.
pub fn cmd_prepare(cfg: &CliConfig, log: &mut dyn Write) -> Result<Prepared> {
    let input = required(&cfg.paths.input, "--input")?;
    let out = required(&cfg.paths.out, "--out")?;
    let opts = cfg.prepare_options()?;
    let (reviews, report) = parse_reviews_csv(input)?;
    line(
        log,
        format!(
            "read {} rows, skipped {}",
            report.rows_read,
            report.rows_skipped()
        ),
    );
    for (row, reason) in report.skipped.iter().take(10) {
        line(log, format!("  row {row}: {reason}"));
    }
    let prepared = prepare(&reviews, &opts, &mut Rng::new(cfg.seed))?;
    prepared.data.save(out)?;
    write_file(&out.join(layout::HISTOGRAM), &prepared.filtered.to_csv())?;
    write_file(
        &out.join(layout::HISTOGRAM_RESAMPLED),
        &prepared.resampled.to_csv(),
    )?;
    line(log, format!("after length filter: {}", prepared.filtered));
    line(
        log,
        format!("after resample ({}): {}", opts.resample, prepared.resampled),
    );
    let d = &prepared.data;
    line(
        log,
        format!(
            "train {} / val {} / test {} reviews, vocabulary {}",
            d.train.reviews.len(),
            d.val.reviews.len(),
            d.test.reviews.len(),
            d.vocab.len()
        ),
    );
    Ok(prepared)
}

/// Trains one model and writes the metrics CSV, both checkpoints and the
/// resolved config. Divergence is reported as an error after the files are
/// written.
pub fn cmd_train(cfg: &CliConfig, log: &mut dyn Write) -> Result<TrainOutcome<f64>> {
    let data = load_data(cfg)?;
    let out = required(&cfg.paths.out, "--out")?;
    let config = cfg.train_config()?;
    create_dir(out)?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_toml())?;
    let outcome = train::<f64>(&config, &data)?;
    for r in &outcome.metrics.rows {
        let acc = |v: Option<f64>| v.map_or("-".to_string(), |a| format!("{a:.4}"));
        line(
            log,
            format!(
                "epoch {} loss {:.6} train_acc {} val_acc {}",
                r.epoch,
                r.loss,
                acc(r.train_acc),
                acc(r.val_acc)
            ),
        );
    }
    outcome.metrics.write(&out.join(METRICS_FILE))?;
    write_checkpoints(&outcome, out)?;
    if let Some(epoch) = outcome.diverged_at {
        return Err(Error::Diverged { epoch });
    }
    Ok(outcome)
}

/// Runs the hyperparameter grid and writes the ranked table.
pub fn cmd_tune(cfg: &CliConfig, log: &mut dyn Write) -> Result<TuningTable> {
    let data = load_data(cfg)?;
    let out = required(&cfg.paths.out, "--out")?;
    let base = cfg.train_config()?;
    let grid = cfg.grid();
    create_dir(out)?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_toml())?;
    line(
        log,
        format!(
            "{} trials on {} thread(s)",
            grid.points().len(),
            cfg.trainer.jobs.max(1)
        ),
    );
    let table = grid_search::<f64>(&base, &grid, &data, cfg.trainer.jobs)?;
    table.write(&out.join(TUNING_FILE))?;
    for r in &table.rows {
        line(
            log,
            format!(
                "lr {:e} l2 {} keep {} -> val_acc {:.4}{}",
                r.lr,
                r.l2,
                r.keep_prob,
                r.val_acc,
                if r.diverged { " (diverged)" } else { "" }
            ),
        );
    }
    Ok(table)
}

fn load_model(cfg: &CliConfig, data: &PreparedData) -> Result<Params<f64>> {
    let path = required(&cfg.paths.checkpoint, "--checkpoint")?;
    let params: Params<f64> = load_checkpoint(path)?;
    if params.dims.num_classes != data.classes() {
        return Err(Error::Config(format!(
            "checkpoint predicts {} classes but the dataset has {}",
            params.dims.num_classes,
            data.classes()
        )));
    }
    if params.dims.vocab_size != data.vocab.len() {
        return Err(Error::Config(format!(
            "checkpoint vocabulary has {} entries but the dataset's has {}",
            params.dims.vocab_size,
            data.vocab.len()
        )));
    }
    Ok(params)
}

fn eval_hyper(cfg: &CliConfig) -> Result<Hyper> {
    let hyper = Hyper {
        mask_pad_slices: cfg.models.mask_pad_slices,
        ..Hyper::default()
    };
    hyper.validate()?;
    Ok(hyper)
}

/// Evaluates a checkpoint and optionally writes its confusion matrix.
pub fn cmd_eval(cfg: &CliConfig, split: Split, log: &mut dyn Write) -> Result<EvalReport> {
    let data = load_data(cfg)?;
    let params = load_model(cfg, &data)?;
    let report = evaluate(&params, split.of(&data), &eval_hyper(cfg)?)?;
    line(log, report.to_string());
    if let Some(out) = &cfg.paths.out {
        write_file(out, &report.confusion_csv())?;
    }
    Ok(report)
}

/// Writes the per-class mean EOS hidden state of a checkpoint.
pub fn cmd_inspect(cfg: &CliConfig, split: Split, log: &mut dyn Write) -> Result<HiddenDump> {
    let data = load_data(cfg)?;
    let params = load_model(cfg, &data)?;
    let dump = hidden_dump(&params, split.of(&data), &eval_hyper(cfg)?)?;
    let out = required(&cfg.paths.out, "--out")?;
    write_file(out, &dump.to_csv())?;
    line(
        log,
        format!(
            "wrote {} classes x {} hidden units to {}",
            dump.counts.len(),
            dump.hidden_dim(),
            out.display()
        ),
    );
    Ok(dump)
}

/// Runs the gradient check for the selected architectures and truncation
/// modes (all when `None`) and every configured λ. Fails if any
/// combination exceeds the tolerance.
pub fn cmd_gradcheck(
    cfg: &CliConfig,
    arch: Option<Arch>,
    truncation: Option<Truncation>,
    log: &mut dyn Write,
) -> Result<Vec<GradCheckReport>> {
    let g = &cfg.gradcheck;
    let dims = Dims {
        vocab_size: g.vocab_size,
        embed_dim: g.embed_dim,
        hidden_dim: g.hidden_dim,
        num_classes: g.classes,
        steps: g.steps,
    };
    let archs: Vec<Arch> = arch.map_or(Arch::ALL.to_vec(), |a| vec![a]);
    let truncs: Vec<Truncation> = truncation.map_or(Truncation::ALL.to_vec(), |t| vec![t]);
    let mut reports = Vec::new();
    for &a in &archs {
        for &t in &truncs {
            for &l2 in &g.l2s {
                let hyper = Hyper {
                    l2,
                    truncation: t,
                    mask_pad_slices: cfg.models.mask_pad_slices,
                    seed: cfg.seed,
                    ..Hyper::default()
                };
                let report = gradient_check(
                    a,
                    dims,
                    g.rows,
                    &hyper,
                    &mut Rng::new(cfg.seed),
                    g.eps,
                    g.tol,
                )?;
                let _ = write!(log, "{report}");
                reports.push(report);
            }
        }
    }
    let worst = reports
        .iter()
        .max_by(|x, y| x.max_rel_error().total_cmp(&y.max_rel_error()))
        .ok_or_else(|| Error::Config("no gradient-check combinations selected".into()))?;
    line(
        log,
        format!(
            "{} combinations, max relative error {:.3e} ({} {} l2={})",
            reports.len(),
            worst.max_rel_error(),
            worst.arch,
            worst.truncation,
            worst.l2
        ),
    );
    worst.check()?;
    Ok(reports)
}

#[derive(Clone, Debug)]
pub struct SynthArgs {
    pub per_class: usize,
    pub plants: Option<usize>,
}

/// Writes a planted-token corpus as a review CSV.
pub fn cmd_synth(cfg: &CliConfig, args: &SynthArgs, out: &Path, log: &mut dyn Write) -> Result<()> {
    if args.per_class == 0 {
        return Err(Error::Argument("--per-class must be positive".into()));
    }
    let mut spec = PlantSpec::default();
    if let Some(p) = args.plants {
        if p > spec.min_tokens {
            return Err(Error::Argument(format!(
                "--plants {p} exceeds the shortest review ({} tokens)",
                spec.min_tokens
            )));
        }
        spec.plants_per_review = p;
    }
    let reviews = synth_corpus(args.per_class, &spec, &mut Rng::new(cfg.seed));
    let mut w = csv::Writer::from_path(out).map_err(|e| csv_error(out, e))?;
    w.write_record(["Id", "Score", "Text"])
        .map_err(|e| csv_error(out, e))?;
    for r in &reviews {
        w.write_record([r.id.as_str(), &r.score.to_string(), r.text.as_str()])
            .map_err(|e| csv_error(out, e))?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    line(
        log,
        format!("wrote {} reviews to {}", reviews.len(), out.display()),
    );
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}
