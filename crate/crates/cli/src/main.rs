//! `faceqvec`: assess face images against the 25-test compliance vector,
//! calibrate thresholds, evaluate them and build synthetic corpora.
//!
//! Exit codes: 0 success (assess: overall pass), 1 assess found a failing
//! test, 2 no face detected, 3 I/O, schema or usage error.

mod hints;
mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use faceqvec::calibration::{calibrate_corpus, ThresholdConfig, DEFAULT_MAX_FPR};
use faceqvec::evaluation::{balance_report, evaluate, CorpusMeta, LabelTable};
use faceqvec::pipeline::{decide, load_annotation, score_corpus, Assessor, AssessorConfig, PipelineError};
use faceqvec::synth::{build_corpus, load_bases, render_bases, save_bases, CorpusPlan};

use report::AssessReport;

const EXIT_FAIL: u8 = 1;
const EXIT_NO_FACE: u8 = 2;
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "faceqvec", version, about = "Face image compliance vector (ISO/IEC 19794-5)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Preprocessing and scoring constants (JSON).
    #[arg(long, env = "FACEQVEC_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Corpus {
    /// Directory the label file's image paths are relative to.
    #[arg(long)]
    corpus: PathBuf,
    /// Label CSV: `image,t1,...,t25` with values 1, 0 or NA.
    #[arg(long)]
    labels: PathBuf,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Score one image and decide every test.
    Assess {
        image: PathBuf,
        /// Threshold file; defaults to 0.5 for every test.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Sidecar with boxes and landmarks; defaults to `<stem>.landmarks.json` next to the image.
        #[arg(long)]
        landmarks: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Choose per-test thresholds from a labeled corpus by ROC analysis.
    Calibrate {
        #[command(flatten)]
        corpus: Corpus,
        /// Where to write the threshold file.
        #[arg(long)]
        out: PathBuf,
        /// Upper bound (exclusive) on the false positive rate.
        #[arg(long, default_value_t = DEFAULT_MAX_FPR)]
        max_fpr: f64,
        /// Seed for the background clustering; defaults to the config value.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Accuracy, TPR and FPR of thresholds on a labeled corpus.
    Evaluate {
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        thresholds: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Per-test label counts, flagging tests with too few non-compliant examples.
    Balance {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Degrade base images according to a plan into a labeled corpus.
    Synth {
        #[arg(long)]
        plan: PathBuf,
        /// Directory of clean images with optional sidecars.
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Render synthetic frontal base faces with sidecars.
    Bases {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(common: &Common) -> Result<AssessorConfig> {
    match &common.config {
        Some(path) => AssessorConfig::load(path).with_context(|| format!("loading config {}", path.display())),
        None => Ok(AssessorConfig::default()),
    }
}

fn load_thresholds(path: &Path) -> Result<ThresholdConfig> {
    ThresholdConfig::load(path).with_context(|| format!("loading thresholds {}", path.display()))
}

fn jobs(n: Option<usize>) -> usize {
    n.filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn load_labels(path: &Path) -> Result<LabelTable> {
    LabelTable::load(path).with_context(|| format!("loading labels {}", path.display()))
}

fn corpus_name(dir: &Path) -> String {
    dir.file_name()
        .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Write to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// The error and its causes, skipping causes whose text the message already carries.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
    }
    msg
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Assess {
            image,
            thresholds,
            landmarks,
            common,
            json,
        } => {
            let config = load_config(&common)?;
            let thresholds = match thresholds {
                Some(path) => load_thresholds(&path)?,
                None => ThresholdConfig::default(),
            };
            let annotation = landmarks.as_deref().map(load_annotation).transpose()?;
            let assessor = Assessor::new(config, thresholds);
            let vector = match assessor.assess_path(&image, annotation.as_ref()) {
                Ok((_, vector)) => vector,
                Err(PipelineError::NoFaceDetected) => {
                    eprintln!("{}: no face detected", image.display());
                    return Ok(EXIT_NO_FACE);
                }
                Err(e) => return Err(e.into()),
            };
            let report = AssessReport::new(image.display().to_string(), &vector);
            if json {
                emit(&(report.to_json() + "\n"))?;
            } else {
                emit(&report.to_text())?;
            }
            Ok(if report.overall_pass { 0 } else { EXIT_FAIL })
        }
        Command::Calibrate {
            corpus,
            out,
            max_fpr,
            seed,
            common,
            json,
        } => {
            let mut config = load_config(&common)?;
            if let Some(seed) = seed {
                config.scoring.background_seed = seed;
            }
            let labels = load_labels(&corpus.labels)?;
            let assessor = Assessor::new(config, ThresholdConfig::default());
            let samples = score_corpus(&assessor, &corpus.corpus, &labels, jobs(corpus.jobs))?;
            let outcome = calibrate_corpus(&samples, max_fpr)?;
            outcome
                .thresholds
                .save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            if json {
                emit(&(serde_json::to_string_pretty(&outcome.tests)? + "\n"))?;
            } else {
                emit(&outcome.to_text())?;
            }
            Ok(0)
        }
        Command::Evaluate {
            corpus,
            thresholds,
            common,
            json,
        } => {
            let config = load_config(&common)?;
            let thresholds = load_thresholds(&thresholds)?;
            let labels = load_labels(&corpus.labels)?;
            let assessor = Assessor::new(config, thresholds);
            let samples = score_corpus(&assessor, &corpus.corpus, &labels, jobs(corpus.jobs))?;
            let meta = CorpusMeta {
                name: corpus_name(&corpus.corpus),
                size: 0,
                date: chrono::Local::now().format("%Y-%m-%d").to_string(),
            };
            let report = evaluate(&decide(&samples, &assessor.thresholds), meta)?;
            if json {
                emit(&(report.to_json() + "\n"))?;
            } else {
                emit(&report.to_text())?;
            }
            Ok(0)
        }
        Command::Balance { labels, json } => {
            let balance = balance_report(&load_labels(&labels)?);
            if json {
                emit(&(serde_json::to_string_pretty(&balance)? + "\n"))?;
            } else {
                emit(&balance.to_text())?;
            }
            Ok(0)
        }
        Command::Synth {
            plan,
            base,
            out,
            seed,
            common,
        } => {
            let config = load_config(&common)?;
            let plan = CorpusPlan::load(&plan)?;
            let bases = load_bases(&base)?;
            let assessor = Assessor::new(config, ThresholdConfig::default());
            let summary = build_corpus(&bases, &plan, seed, &out, &assessor)?;
            emit(&format!(
                "wrote {} degraded and {} clean images; labels in {}\n",
                summary.degraded,
                summary.clean,
                summary.labels.display()
            ))?;
            Ok(0)
        }
        Command::Bases { out, count, seed } => {
            save_bases(&render_bases(count, seed), &out)?;
            emit(&format!("wrote {count} base images to {}\n", out.display()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_ERROR)
        }
    }
}
