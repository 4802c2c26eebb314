//! Image file to quality vector: sidecar lookup, preprocessing, scoring and
//! binarization, plus parallel corpus scoring.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{ScoredSample, ThresholdConfig};
use crate::evaluation::{LabelTable, LabeledOutcome};
use crate::face_model::{
    Annotation, FaceDetector, FaceModelError, FixedBoxes, FixedExpression, FixedHairOverlap, FixedLandmarks,
    FixedPose, GeometricPose, LandmarkEstimator, PoseEstimator, SkinChromaDetector, TemplateLandmarks,
};
use crate::imagery::{load_image, ImageBuffer, ImageryError};
use crate::preprocess::{preprocess, FaceContext, PreprocessConfig, PreprocessError};
use crate::quality::{run_all, score_all, Decision, Plugins, QualityVector, RawScore, ScoringConfig, TEST_COUNT};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: ImageryError },
    #[error("{path}: {source}")]
    Sidecar { path: PathBuf, source: FaceModelError },
    #[error("no face detected")]
    NoFaceDetected,
    #[error(transparent)]
    Preprocess(PreprocessError),
    #[error("failed to start worker pool: {0}")]
    Pool(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<PreprocessError> for PipelineError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::NoFaceDetected => PipelineError::NoFaceDetected,
            other => PipelineError::Preprocess(other),
        }
    }
}

/// Tunables file: preprocessing and scoring constants. Missing keys take
/// defaults; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssessorConfig {
    pub preprocess: PreprocessConfig,
    pub scoring: ScoringConfig,
}

impl AssessorConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.preprocess.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.scoring.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Everything needed to turn an image into a quality vector.
#[derive(Clone, Debug, Default)]
pub struct Assessor {
    pub preprocess: PreprocessConfig,
    pub scoring: ScoringConfig,
    pub thresholds: ThresholdConfig,
}

/// Estimators for one image: sidecar content when present, built-in fallbacks otherwise.
struct Estimators {
    detector: Box<dyn FaceDetector>,
    landmarks: Box<dyn LandmarkEstimator>,
    pose: Box<dyn PoseEstimator>,
    hair: Option<FixedHairOverlap>,
    expression: Option<FixedExpression>,
}

impl Estimators {
    fn new(ann: Option<&Annotation>, scoring: &ScoringConfig) -> Self {
        let ann = ann.cloned().unwrap_or_default();
        Self {
            detector: match ann.boxes {
                Some(b) => Box::new(FixedBoxes(b)),
                None => Box::new(SkinChromaDetector),
            },
            landmarks: match ann.landmarks {
                Some(lm) => Box::new(FixedLandmarks(lm)),
                None => Box::new(TemplateLandmarks),
            },
            pose: match ann.pose {
                Some(p) => Box::new(FixedPose(p)),
                None => Box::new(GeometricPose {
                    pitch_ratio: scoring.pitch_ratio,
                }),
            },
            hair: ann.hair_overlap.map(FixedHairOverlap),
            expression: ann.expression_neutral.map(FixedExpression),
        }
    }

    fn plugins(&self) -> Plugins<'_> {
        Plugins {
            pose: self.pose.as_ref(),
            hair: self.hair.as_ref().map(|h| h as _),
            expression: self.expression.as_ref().map(|e| e as _),
        }
    }
}

/// Load the sidecar next to `image`, if any.
pub fn load_sidecar(image: &Path) -> Result<Option<Annotation>, PipelineError> {
    match Annotation::find_for_image(image) {
        Some(path) => Annotation::load(&path)
            .map(Some)
            .map_err(|source| PipelineError::Sidecar { path, source }),
        None => Ok(None),
    }
}

pub fn load_annotation(path: &Path) -> Result<Annotation, PipelineError> {
    Annotation::load(path).map_err(|source| PipelineError::Sidecar {
        path: path.to_path_buf(),
        source,
    })
}

impl Assessor {
    pub fn new(config: AssessorConfig, thresholds: ThresholdConfig) -> Self {
        Self {
            preprocess: config.preprocess,
            scoring: config.scoring,
            thresholds,
        }
    }

    pub fn context(&self, img: &ImageBuffer, ann: Option<&Annotation>) -> Result<FaceContext, PipelineError> {
        let est = Estimators::new(ann, &self.scoring);
        Ok(preprocess(img, &self.preprocess, est.detector.as_ref(), est.landmarks.as_ref())?)
    }

    /// Raw scores of an in-memory image.
    pub fn score_image(&self, img: &ImageBuffer, ann: Option<&Annotation>) -> Result<Vec<RawScore>, PipelineError> {
        let est = Estimators::new(ann, &self.scoring);
        let ctx = preprocess(img, &self.preprocess, est.detector.as_ref(), est.landmarks.as_ref())?;
        Ok(score_all(&ctx, &self.scoring, &est.plugins()))
    }

    pub fn assess_image(&self, img: &ImageBuffer, ann: Option<&Annotation>) -> Result<(FaceContext, QualityVector), PipelineError> {
        let est = Estimators::new(ann, &self.scoring);
        let ctx = preprocess(img, &self.preprocess, est.detector.as_ref(), est.landmarks.as_ref())?;
        let vector = run_all(&ctx, &self.scoring, &est.plugins(), &self.thresholds);
        Ok((ctx, vector))
    }

    /// Assess a file; `annotation` overrides the sidecar lookup.
    pub fn assess_path(&self, path: &Path, annotation: Option<&Annotation>) -> Result<(FaceContext, QualityVector), PipelineError> {
        let img = load_image(path).map_err(|source| PipelineError::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let found;
        let ann = match annotation {
            Some(a) => Some(a),
            None => {
                found = load_sidecar(path)?;
                found.as_ref()
            }
        };
        self.assess_image(&img, ann)
    }

    /// Raw scores of a file; images without a detectable face score NotComputable throughout.
    pub fn score_path(&self, path: &Path) -> Result<Vec<RawScore>, PipelineError> {
        let img = load_image(path).map_err(|source| PipelineError::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let ann = load_sidecar(path)?;
        match self.score_image(&img, ann.as_ref()) {
            Err(PipelineError::NoFaceDetected) => Ok(vec![RawScore::not_computable("no face detected"); TEST_COUNT]),
            other => other,
        }
    }
}

/// Raw scores of every labeled corpus image, in label-file order.
pub fn score_corpus(
    assessor: &Assessor,
    corpus_dir: &Path,
    labels: &LabelTable,
    jobs: usize,
) -> Result<Vec<ScoredSample>, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    pool.install(|| {
        labels
            .rows
            .par_iter()
            .map(|row| {
                let scores = assessor.score_path(&corpus_dir.join(&row.image))?;
                Ok(ScoredSample {
                    image: row.image.clone(),
                    scores,
                    labels: row.labels.clone(),
                })
            })
            .collect()
    })
}

/// Binarize corpus scores with `thresholds`.
pub fn decide(samples: &[ScoredSample], thresholds: &ThresholdConfig) -> Vec<LabeledOutcome> {
    samples
        .iter()
        .map(|s| LabeledOutcome {
            image: s.image.clone(),
            decisions: s
                .scores
                .iter()
                .enumerate()
                .map(|(k, raw)| Decision::of(raw, thresholds.threshold(k as u8 + 1)))
                .collect(),
            labels: s.labels.clone(),
        })
        .collect()
}
