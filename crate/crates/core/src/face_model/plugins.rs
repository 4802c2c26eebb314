use crate::imagery::ImageBuffer;

use super::{FaceBox, FaceModelError, LandmarkSet, PoseAngles, RegionAtlas};

/// Source of face boxes in source-image coordinates.
pub trait FaceDetector: Send + Sync {
    fn detect(&self, img: &ImageBuffer) -> Result<Vec<FaceBox>, FaceModelError>;
}

/// Landmarks on a normalized face crop.
pub trait LandmarkEstimator: Send + Sync {
    fn estimate_landmarks(&self, crop: &ImageBuffer) -> Result<LandmarkSet, FaceModelError>;
}

pub trait PoseEstimator: Send + Sync {
    fn estimate_pose(&self, lm: &LandmarkSet) -> Result<PoseAngles, FaceModelError>;
}

/// Fraction of the upper face covered by hair, in [0, 1].
pub trait HairSegmenter: Send + Sync {
    fn hair_overlap(&self, crop: &ImageBuffer, atlas: &RegionAtlas) -> Result<f64, FaceModelError>;
}

/// Probability that the expression is neutral, in [0, 1].
pub trait ExpressionClassifier: Send + Sync {
    fn neutral_probability(&self, crop: &ImageBuffer, lm: &LandmarkSet) -> Result<f64, FaceModelError>;
}

/// Hair overlap reported by an external segmenter.
#[derive(Clone, Copy, Debug)]
pub struct FixedHairOverlap(pub f64);

impl HairSegmenter for FixedHairOverlap {
    fn hair_overlap(&self, _crop: &ImageBuffer, _atlas: &RegionAtlas) -> Result<f64, FaceModelError> {
        Ok(self.0)
    }
}

/// Neutral-expression probability reported by an external classifier.
#[derive(Clone, Copy, Debug)]
pub struct FixedExpression(pub f64);

impl ExpressionClassifier for FixedExpression {
    fn neutral_probability(&self, _crop: &ImageBuffer, _lm: &LandmarkSet) -> Result<f64, FaceModelError> {
        Ok(self.0)
    }
}
