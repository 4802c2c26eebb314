use crate::imagery::{connected_components, ChromaBox, ImageBuffer, RegionMask};

use super::{FaceBox, FaceDetector, FaceModelError, MIN_BOX_EDGE};

const MIN_AREA_FRACTION: f64 = 0.01;
const ASPECT_RANGE: (f64, f64) = (0.6, 1.4);

/// Skin-chroma blob detector used when no external boxes are supplied.
///
/// Every 8-connected skin component passing the aspect and area gates becomes
/// a box; confidence is the component size relative to the largest survivor.
#[derive(Clone, Copy, Debug, Default)]
pub struct SkinChromaDetector;

impl FaceDetector for SkinChromaDetector {
    fn detect(&self, img: &ImageBuffer) -> Result<Vec<FaceBox>, FaceModelError> {
        img.require_channels(3)?;
        let (w, h) = (img.width(), img.height());
        let mask = RegionMask::from_fn(w, h, |x, y| ChromaBox::SKIN.contains(img.rgb(x, y)));
        let min_area = MIN_AREA_FRACTION * (w * h) as f64;
        let mut passing: Vec<_> = connected_components(&mask)
            .into_iter()
            .filter(|c| {
                let (bw, bh) = (c.bbox.width() as f64, c.bbox.height() as f64);
                let aspect = bw / bh;
                c.pixel_count as f64 >= min_area
                    && (ASPECT_RANGE.0..=ASPECT_RANGE.1).contains(&aspect)
                    && bw >= MIN_BOX_EDGE
                    && bh >= MIN_BOX_EDGE
            })
            .collect();
        if passing.is_empty() {
            return Err(FaceModelError::NoFaceDetected);
        }
        passing.sort_by(|a, b| {
            b.pixel_count
                .cmp(&a.pixel_count)
                .then((a.bbox.y0, a.bbox.x0).cmp(&(b.bbox.y0, b.bbox.x0)))
        });
        let largest = passing[0].pixel_count as f64;
        Ok(passing
            .iter()
            .map(|c| FaceBox {
                x: c.bbox.x0 as f64,
                y: c.bbox.y0 as f64,
                w: c.bbox.width() as f64,
                h: c.bbox.height() as f64,
                confidence: c.pixel_count as f64 / largest,
            })
            .collect())
    }
}

/// Detector returning a fixed list of boxes, typically from an annotation sidecar.
#[derive(Clone, Debug)]
pub struct FixedBoxes(pub Vec<FaceBox>);

impl FaceDetector for FixedBoxes {
    fn detect(&self, _img: &ImageBuffer) -> Result<Vec<FaceBox>, FaceModelError> {
        if self.0.is_empty() {
            return Err(FaceModelError::NoFaceDetected);
        }
        let mut boxes = self.0.clone();
        boxes.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        Ok(boxes)
    }
}

/// Run `detector` and enforce the descending-confidence contract.
pub fn detect_faces(img: &ImageBuffer, detector: &dyn FaceDetector) -> Result<Vec<FaceBox>, FaceModelError> {
    let mut boxes = detector.detect(img)?;
    if boxes.is_empty() {
        return Err(FaceModelError::NoFaceDetected);
    }
    for b in &boxes {
        b.validate()?;
    }
    boxes.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    Ok(boxes)
}
