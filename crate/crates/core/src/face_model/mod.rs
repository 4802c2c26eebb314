//! Face detection, landmarks, named regions and head pose.
//!
//! Learned components sit behind the traits in this module. The built-in
//! implementations are classical fallbacks; external models plug in either by
//! implementing a trait or by writing an annotation sidecar.

mod atlas;
mod detect;
mod geometry;
mod landmarks;
mod plugins;
mod pose;
mod sidecar;

pub use atlas::{build_region_atlas, RegionAtlas};
pub use detect::{detect_faces, FixedBoxes, SkinChromaDetector};
pub use geometry::{is_simple_polygon, FaceBox, LandmarkSet, Point, PoseAngles, CROP_SIZE, MIN_BOX_EDGE};
pub use landmarks::{FixedLandmarks, TemplateLandmarks};
pub use plugins::{
    ExpressionClassifier, FaceDetector, FixedExpression, FixedHairOverlap, HairSegmenter,
    LandmarkEstimator, PoseEstimator,
};
pub use pose::{estimate_pose, FixedPose, GeometricPose, DEFAULT_PITCH_RATIO};
pub use sidecar::Annotation;

use thiserror::Error;

use crate::imagery::{ImageBuffer, ImageryError};

#[derive(Debug, Error)]
pub enum FaceModelError {
    #[error("no face detected")]
    NoFaceDetected,
    #[error("landmark estimation failed: {0}")]
    LandmarkFailure(String),
    #[error("degenerate landmark geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid landmarks: {0}")]
    InvalidLandmarks(String),
    #[error("invalid face box: {0}")]
    InvalidBox(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid annotation sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Imagery(#[from] ImageryError),
}

/// Landmarks for a crop; the result is validated against the crop size.
pub fn estimate_landmarks(
    crop: &ImageBuffer,
    estimator: &dyn LandmarkEstimator,
) -> Result<LandmarkSet, FaceModelError> {
    let lm = estimator.estimate_landmarks(crop)?;
    lm.validate(crop.width().min(crop.height()))?;
    Ok(lm)
}
