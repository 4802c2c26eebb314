//! Detect, crop with margin, resize: the normalized face every test consumes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::face_model::{
    build_region_atlas, detect_faces, estimate_landmarks, FaceBox, FaceDetector, FaceModelError,
    LandmarkEstimator, LandmarkSet, RegionAtlas,
};
use crate::imagery::{resize_bilinear, ImageBuffer, ImageryError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub margin: f64,
    pub out_size: usize,
    /// Keep the full-resolution source on the context for estimators that want it.
    pub keep_source: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            margin: 20.0,
            out_size: 112,
            keep_source: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(PreprocessError::InvalidConfig(format!("margin {} must be >= 0", self.margin)));
        }
        if self.out_size < 32 {
            return Err(PreprocessError::InvalidConfig(format!(
                "out_size {} must be >= 32",
                self.out_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("no face detected")]
    NoFaceDetected,
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("face box {0:?} does not overlap the image")]
    BoxOutsideImage(FaceBox),
    #[error(transparent)]
    FaceModel(FaceModelError),
    #[error(transparent)]
    Imagery(#[from] ImageryError),
}

impl From<FaceModelError> for PreprocessError {
    fn from(e: FaceModelError) -> Self {
        match e {
            FaceModelError::NoFaceDetected => PreprocessError::NoFaceDetected,
            other => PreprocessError::FaceModel(other),
        }
    }
}

/// Pixel rectangle of the source image that was cropped; `x1`/`y1` exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CropRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// Box grown by `margin` on every side and clamped to the image.
pub fn crop_rect(face: &FaceBox, margin: f64, width: usize, height: usize) -> Option<CropRect> {
    face.expanded_clamped(margin, width, height)
        .map(|(x0, y0, x1, y1)| CropRect { x0, y0, x1, y1 })
}

/// Everything the quality tests see for one image.
#[derive(Clone, Debug)]
pub struct FaceContext {
    pub crop: ImageBuffer,
    /// `None` when landmark estimation failed.
    pub landmarks: Option<LandmarkSet>,
    pub landmark_failure: Option<String>,
    /// Built from the landmarks, or from the canonical template when they failed.
    pub atlas: RegionAtlas,
    pub source_box: FaceBox,
    pub crop_rect: CropRect,
    pub face_count: usize,
    pub source: Option<Arc<ImageBuffer>>,
}

impl FaceContext {
    pub fn landmarks_ok(&self) -> bool {
        self.landmarks.is_some()
    }

    /// Context for an already normalized crop with known landmarks, bypassing detection.
    pub fn from_crop(crop: ImageBuffer, landmarks: Option<LandmarkSet>, face_count: usize) -> Result<Self, PreprocessError> {
        crop.require_channels(3)?;
        let size = crop.width();
        if crop.height() != size {
            return Err(PreprocessError::InvalidConfig(format!(
                "crop {}x{} is not square",
                crop.width(),
                crop.height()
            )));
        }
        let (landmarks, landmark_failure, atlas) = settle_landmarks(Ok(landmarks), size)?;
        let side = size as f64;
        Ok(Self {
            crop,
            landmarks,
            landmark_failure,
            atlas,
            source_box: FaceBox {
                x: 0.0,
                y: 0.0,
                w: side,
                h: side,
                confidence: 1.0,
            },
            crop_rect: CropRect {
                x0: 0,
                y0: 0,
                x1: size,
                y1: size,
            },
            face_count: face_count.max(1),
            source: None,
        })
    }
}

type Settled = (Option<LandmarkSet>, Option<String>, RegionAtlas);

fn settle_landmarks(estimate: Result<Option<LandmarkSet>, FaceModelError>, size: usize) -> Result<Settled, PreprocessError> {
    let (landmarks, failure) = match estimate {
        Ok(Some(lm)) => match build_region_atlas(&lm, size) {
            Ok(atlas) => return Ok((Some(lm), None, atlas)),
            Err(e) => (None, Some(e.to_string())),
        },
        Ok(None) => (None, Some("no landmarks supplied".to_string())),
        Err(
            e @ (FaceModelError::LandmarkFailure(_)
            | FaceModelError::DegenerateGeometry(_)
            | FaceModelError::InvalidLandmarks(_)),
        ) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let atlas = build_region_atlas(&LandmarkSet::canonical(size), size)?;
    Ok((landmarks, failure, atlas))
}

/// Normalize `img` into a [`FaceContext`].
///
/// Landmark failure is not an error: the context keeps the crop, records the
/// failure and falls back to the canonical region layout.
pub fn preprocess(
    img: &ImageBuffer,
    cfg: &PreprocessConfig,
    detector: &dyn FaceDetector,
    estimator: &dyn LandmarkEstimator,
) -> Result<FaceContext, PreprocessError> {
    cfg.validate()?;
    img.require_channels(3)?;
    let boxes = detect_faces(img, detector)?;
    let top = boxes[0];
    let rect = crop_rect(&top, cfg.margin, img.width(), img.height())
        .ok_or(PreprocessError::BoxOutsideImage(top))?;
    let region = img.crop(rect.x0, rect.y0, rect.width(), rect.height());
    let crop = resize_bilinear(&region, cfg.out_size, cfg.out_size);
    let estimate = estimate_landmarks(&crop, estimator).map(Some);
    let (landmarks, landmark_failure, atlas) = settle_landmarks(estimate, cfg.out_size)?;
    Ok(FaceContext {
        crop,
        landmarks,
        landmark_failure,
        atlas,
        source_box: top,
        crop_rect: rect,
        face_count: boxes.len(),
        source: cfg.keep_source.then(|| Arc::new(img.clone())),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::face_model::{FixedBoxes, FixedLandmarks, TemplateLandmarks, CROP_SIZE};

    fn boxes(list: &[(f64, f64, f64, f64, f64)]) -> FixedBoxes {
        FixedBoxes(list.iter().map(|&(x, y, w, h, c)| FaceBox::new(x, y, w, h, c).unwrap()).collect())
    }

    #[test]
    fn margin_example_from_box() {
        let img = ImageBuffer::filled(500, 500, [120, 90, 70]);
        let ctx = preprocess(&img, &PreprocessConfig::default(), &boxes(&[(100.0, 100.0, 200.0, 200.0, 1.0)]), &TemplateLandmarks).unwrap();
        assert_eq!(ctx.crop_rect, CropRect { x0: 80, y0: 80, x1: 320, y1: 320 });
        assert_eq!((ctx.crop.width(), ctx.crop.height(), ctx.crop.channels()), (112, 112, 3));
        assert!(ctx.landmarks.is_none());
        assert!(ctx.landmark_failure.is_some());
        assert_eq!(ctx.face_count, 1);
    }

    #[test]
    fn corner_box_clamps_to_origin() {
        let img = ImageBuffer::filled(300, 200, [10, 20, 30]);
        let ctx = preprocess(&img, &PreprocessConfig::default(), &boxes(&[(0.0, 0.0, 60.0, 60.0, 1.0)]), &TemplateLandmarks).unwrap();
        assert_eq!((ctx.crop_rect.x0, ctx.crop_rect.y0), (0, 0));
        assert_eq!((ctx.crop_rect.x1, ctx.crop_rect.y1), (80, 80));
    }

    #[test]
    fn top_confidence_box_and_count() {
        let img = ImageBuffer::from_fn_rgb(400, 200, |x, _| if x < 200 { [0, 0, 0] } else { [200, 200, 200] });
        let det = boxes(&[(40.0, 40.0, 100.0, 100.0, 0.4), (250.0, 40.0, 100.0, 100.0, 0.9)]);
        let ctx = preprocess(&img, &PreprocessConfig::default(), &det, &TemplateLandmarks).unwrap();
        assert_eq!(ctx.face_count, 2);
        assert_eq!(ctx.source_box.x, 250.0);
        assert_eq!(ctx.crop.rgb(56, 56), [200, 200, 200]);
    }

    #[test]
    fn no_face_propagates() {
        let img = ImageBuffer::filled(64, 64, [0, 0, 255]);
        let err = preprocess(&img, &PreprocessConfig::default(), &crate::face_model::SkinChromaDetector, &TemplateLandmarks).unwrap_err();
        assert!(matches!(err, PreprocessError::NoFaceDetected));
    }

    #[test]
    fn sidecar_landmarks_survive_and_build_atlas() {
        let img = ImageBuffer::filled(152, 152, [150, 105, 80]);
        let lm = LandmarkSet::canonical(CROP_SIZE);
        let ctx = preprocess(&img, &PreprocessConfig::default(), &boxes(&[(20.0, 20.0, 112.0, 112.0, 1.0)]), &FixedLandmarks(lm.clone())).unwrap();
        assert_eq!(ctx.landmarks, Some(lm));
        assert!(ctx.landmark_failure.is_none());
    }

    #[test]
    fn config_validation() {
        let bad = PreprocessConfig { out_size: 16, ..Default::default() };
        assert!(bad.validate().is_err());
        let neg = PreprocessConfig { margin: -1.0, ..Default::default() };
        assert!(neg.validate().is_err());
        assert!(serde_json::from_str::<PreprocessConfig>(r#"{"margin":5,"bogus":1}"#).is_err());
    }

    #[test]
    fn keep_source_attaches_image() {
        let img = ImageBuffer::filled(100, 100, [1, 2, 3]);
        let cfg = PreprocessConfig { keep_source: true, ..Default::default() };
        let ctx = preprocess(&img, &cfg, &boxes(&[(20.0, 20.0, 50.0, 50.0, 1.0)]), &TemplateLandmarks).unwrap();
        assert_eq!(ctx.source.as_deref(), Some(&img));
    }

    proptest! {
        #[test]
        fn margin_monotone_for_interior_boxes(x in 40.0f64..100.0, y in 40.0f64..100.0, w in 16.0f64..60.0, m in 0.0f64..20.0, extra in 0.0f64..20.0) {
            let b = FaceBox::new(x, y, w, w, 1.0).unwrap();
            let a = crop_rect(&b, m, 400, 400).unwrap();
            let c = crop_rect(&b, m + extra, 400, 400).unwrap();
            prop_assert!(c.x0 <= a.x0 && c.y0 <= a.y0 && c.x1 >= a.x1 && c.y1 >= a.y1);
        }

        #[test]
        fn preprocessing_is_deterministic(seed in any::<u8>()) {
            let img = ImageBuffer::from_fn_rgb(90, 70, |x, y| [(x * 3) as u8 ^ seed, (y * 5) as u8, seed]);
            let det = boxes(&[(10.0, 10.0, 40.0, 30.0, 1.0)]);
            let a = preprocess(&img, &PreprocessConfig::default(), &det, &TemplateLandmarks).unwrap();
            let b = preprocess(&img, &PreprocessConfig::default(), &det, &TemplateLandmarks).unwrap();
            prop_assert_eq!(a.crop, b.crop);
            prop_assert_eq!(a.landmarks, b.landmarks);
        }
    }
}
