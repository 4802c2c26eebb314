//! Degradation oracle: rendered frontal faces and seeded perturbations whose
//! ground-truth labels follow from construction.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::Label;
use crate::evaluation::{LabelRow, LabelTable};
use crate::face_model::{Annotation, FaceBox, LandmarkSet, Point, RegionAtlas, CROP_SIZE};
use crate::imagery::{
    encode_png, gaussian_blur, load_image, quantize, rgb_to_ycbcr, ycbcr_to_rgb, ImageBuffer, ImageryError,
    RegionMask,
};
use crate::pipeline::{load_sidecar, Assessor, PipelineError};
use crate::preprocess::{CropRect, FaceContext};
use crate::quality::TEST_COUNT;

/// Edge of rendered base images.
pub const BASE_SIZE: usize = 144;
/// Edge of the face box in rendered bases; with the default 20 px margin the crop is exactly 112.
pub const BASE_FACE_BOX: f64 = 72.0;

const SKIN_TONES: [[u8; 3]; 4] = [[150, 105, 80], [135, 95, 72], [120, 82, 62], [158, 112, 90]];
const BACKDROPS: [[u8; 3]; 3] = [[200, 215, 235], [190, 205, 225], [210, 220, 232]];
const SCLERA: [u8; 3] = [225, 225, 220];
const PUPIL: [u8; 3] = [40, 40, 40];
const BROW: [u8; 3] = [70, 60, 55];
const LIPS: [u8; 3] = [150, 70, 70];
const FRAME: [u8; 3] = [20, 20, 20];
/// Clutter objects: two colors far from any backdrop and from each other.
const CLUTTER: [[u8; 3]; 2] = [[110, 70, 40], [40, 120, 60]];
const RED_EYE: [u8; 3] = [200, 30, 30];
const DEFAULT_PATCH: [u8; 3] = [40, 60, 160];
const BACKGROUND_SHADE: f64 = 0.4;
const FACE_SHADE: f64 = 0.45;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("region unavailable: {0}")]
    RegionUnavailable(String),
    #[error("invalid degradation: {0}")]
    InvalidSpec(String),
    #[error("invalid corpus plan: {0}")]
    Plan(String),
    #[error("no base images found")]
    EmptyBase,
    #[error("two plan entries produce {0}")]
    DuplicateOutput(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Imagery(#[from] ImageryError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionRegion {
    /// Filled from the top rows down (hat).
    Forehead,
    /// Filled from the bottom rows up (veil).
    LowerFace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DegradationKind {
    /// Severity: Gaussian sigma in pixels.
    GaussianBlur,
    /// Severity: per-channel noise sigma in gray levels.
    WhiteNoise,
    /// Severity: block edge in pixels.
    Pixelate,
    /// Severity `s`: gamma `1 + s`.
    Darken,
    /// Severity: offset as a fraction of 255.
    Brighten,
    /// Severity: fraction of the distance to mid-gray removed.
    ContrastCompress,
    /// Severity: fraction of the background covered by colored shapes.
    BackgroundClutter,
    /// Severity: fraction of background columns, from the left, darkened to 40%.
    BackgroundShadow,
    /// Severity: fraction of face columns, from the left, darkened to 45%.
    FaceShadow,
    /// Severity: fraction of the skin turned white around a cheek point.
    SpecularBlob,
    /// Severity: disc radius as a fraction of 0.3 eye widths.
    RedEye,
    /// Severity: fraction of the region's rows covered by `color`.
    OcclusionPatch { region: OcclusionRegion, color: [u8; 3] },
    /// Severity: thickness in pixels of a dark rim on each eye-zone boundary.
    FrameLines,
    /// Severity: amount subtracted from Cr on skin pixels.
    TintSkin,
}

impl DegradationKind {
    /// The 14 kinds with their default parameters.
    pub fn all() -> [DegradationKind; 14] {
        use DegradationKind::*;
        [
            GaussianBlur,
            WhiteNoise,
            Pixelate,
            Darken,
            Brighten,
            ContrastCompress,
            BackgroundClutter,
            BackgroundShadow,
            FaceShadow,
            SpecularBlob,
            RedEye,
            OcclusionPatch {
                region: OcclusionRegion::Forehead,
                color: DEFAULT_PATCH,
            },
            FrameLines,
            TintSkin,
        ]
    }

    pub fn name(&self) -> &'static str {
        use DegradationKind::*;
        match self {
            GaussianBlur => "gaussian_blur",
            WhiteNoise => "white_noise",
            Pixelate => "pixelate",
            Darken => "darken",
            Brighten => "brighten",
            ContrastCompress => "contrast_compress",
            BackgroundClutter => "background_clutter",
            BackgroundShadow => "background_shadow",
            FaceShadow => "face_shadow",
            SpecularBlob => "specular_blob",
            RedEye => "red_eye",
            OcclusionPatch { .. } => "occlusion_patch",
            FrameLines => "frame_lines",
            TintSkin => "tint_skin",
        }
    }

    /// File-name slug; distinguishes occlusion targets and colors.
    pub fn slug(&self) -> String {
        match self {
            DegradationKind::OcclusionPatch { region, color } => {
                let r = match region {
                    OcclusionRegion::Forehead => "forehead",
                    OcclusionRegion::LowerFace => "lower_face",
                };
                format!("occlusion_patch-{r}-{:02x}{:02x}{:02x}", color[0], color[1], color[2])
            }
            other => other.name().to_string(),
        }
    }

    /// Test ids whose labels this kind determines.
    pub fn affected_tests(&self) -> &'static [u8] {
        use DegradationKind::*;
        match self {
            GaussianBlur => &[1],
            WhiteNoise => &[24],
            Pixelate => &[7],
            Darken => &[5],
            Brighten => &[12],
            ContrastCompress => &[6],
            BackgroundClutter => &[10],
            BackgroundShadow => &[14],
            FaceShadow => &[15],
            SpecularBlob => &[12],
            RedEye => &[13],
            OcclusionPatch {
                region: OcclusionRegion::Forehead,
                ..
            } => &[20],
            OcclusionPatch {
                region: OcclusionRegion::LowerFace,
                ..
            } => &[21],
            FrameLines => &[18, 19],
            TintSkin => &[4],
        }
    }

    /// Smallest severity that is labeled non-compliant.
    pub fn defect_threshold(&self) -> f64 {
        use DegradationKind::*;
        match self {
            GaussianBlur => 3.0,
            WhiteNoise => 20.0,
            Pixelate => 8.0,
            Darken => 1.0,
            Brighten => 0.8,
            ContrastCompress => 0.6,
            BackgroundClutter => 0.3,
            BackgroundShadow => 0.3,
            FaceShadow => 0.3,
            SpecularBlob => 0.05,
            RedEye => 0.75,
            OcclusionPatch { .. } => 0.5,
            FrameLines => 3.0,
            TintSkin => 30.0,
        }
    }

    /// Five-step ladder starting at the identity.
    pub fn default_ladder(&self) -> [f64; 5] {
        use DegradationKind::*;
        match self {
            GaussianBlur => [0.0, 1.0, 2.0, 3.0, 5.0],
            WhiteNoise => [0.0, 5.0, 10.0, 20.0, 40.0],
            Pixelate => [0.0, 4.0, 8.0, 12.0, 16.0],
            Darken => [0.0, 0.25, 0.5, 1.0, 1.5],
            Brighten => [0.0, 0.2, 0.4, 0.6, 0.8],
            ContrastCompress => [0.0, 0.2, 0.4, 0.6, 0.8],
            BackgroundClutter => [0.0, 0.15, 0.3, 0.45, 0.6],
            BackgroundShadow | FaceShadow => [0.0, 0.1, 0.2, 0.3, 0.4],
            SpecularBlob => [0.0, 0.025, 0.05, 0.075, 0.1],
            RedEye => [0.0, 0.25, 0.5, 0.75, 1.0],
            OcclusionPatch { .. } => [0.0, 0.25, 0.5, 0.75, 1.0],
            FrameLines => [0.0, 1.0, 2.0, 3.0, 4.0],
            TintSkin => [0.0, 10.0, 20.0, 30.0, 40.0],
        }
    }

    /// Whether applying the kind needs face regions from landmarks.
    pub fn needs_regions(&self) -> bool {
        use DegradationKind::*;
        !matches!(
            self,
            GaussianBlur | WhiteNoise | Pixelate | Darken | Brighten | ContrastCompress
        )
    }

    fn max_severity(&self) -> Option<f64> {
        use DegradationKind::*;
        match self {
            ContrastCompress | BackgroundClutter | BackgroundShadow | FaceShadow | SpecularBlob | OcclusionPatch { .. } => {
                Some(1.0)
            }
            _ => None,
        }
    }
}

impl fmt::Display for DegradationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.slug())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegradationSpec {
    pub kind: DegradationKind,
    pub severity: f64,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn new(kind: DegradationKind, severity: f64, seed: u64) -> Self {
        Self { kind, severity, seed }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let s = self.severity;
        if !(s.is_finite() && s >= 0.0) {
            return Err(SynthError::InvalidSpec(format!("{}: severity {s} must be >= 0", self.kind)));
        }
        if let Some(max) = self.kind.max_severity() {
            if s > max {
                return Err(SynthError::InvalidSpec(format!("{}: severity {s} exceeds {max}", self.kind)));
            }
        }
        Ok(())
    }

    /// 1 at severity 0, 0 at or beyond the defect threshold, NA in between
    /// and for tests the kind does not touch.
    pub fn implied_labels(&self) -> Vec<Label> {
        let mut labels = vec![Label::NotAvailable; TEST_COUNT];
        let label = if self.severity == 0.0 {
            Label::Compliant
        } else if self.severity >= self.kind.defect_threshold() {
            Label::NonCompliant
        } else {
            Label::NotAvailable
        };
        for &id in self.kind.affected_tests() {
            labels[id as usize - 1] = label;
        }
        labels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    pub image: ImageBuffer,
    pub spec: DegradationSpec,
    pub labels: Vec<Label>,
}

/// Face regions of a source image, mapped back from the normalized crop.
#[derive(Clone, Debug)]
pub struct SourceGeometry {
    width: usize,
    height: usize,
    rect: CropRect,
    size: usize,
    atlas: RegionAtlas,
    landmarks: LandmarkSet,
}

impl SourceGeometry {
    pub fn from_context(ctx: &FaceContext, width: usize, height: usize) -> Result<Self, SynthError> {
        let landmarks = ctx.landmarks.clone().ok_or_else(|| {
            SynthError::RegionUnavailable(ctx.landmark_failure.clone().unwrap_or_else(|| "no landmarks".into()))
        })?;
        Ok(Self {
            width,
            height,
            rect: ctx.crop_rect,
            size: ctx.crop.width(),
            atlas: ctx.atlas.clone(),
            landmarks,
        })
    }

    /// Geometry of an image and its optional sidecar under `assessor`'s preprocessing.
    pub fn of_image(assessor: &Assessor, img: &ImageBuffer, ann: Option<&Annotation>) -> Result<Self, SynthError> {
        let ctx = assessor.context(img, ann)?;
        Self::from_context(&ctx, img.width(), img.height())
    }

    fn scale_x(&self) -> f64 {
        self.rect.width() as f64 / self.size as f64
    }

    fn to_crop(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        let r = &self.rect;
        if x < r.x0 || x >= r.x1 || y < r.y0 || y >= r.y1 {
            return None;
        }
        let s = self.size as f64;
        let cx = ((x - r.x0) as f64 + 0.5) * s / r.width() as f64 - 0.5;
        let cy = ((y - r.y0) as f64 + 0.5) * s / r.height() as f64 - 0.5;
        let (cx, cy) = (cx.round().clamp(0.0, s - 1.0) as usize, cy.round().clamp(0.0, s - 1.0) as usize);
        Some((cx, cy))
    }

    /// A crop-space mask in source coordinates.
    pub fn region(&self, mask: &RegionMask) -> RegionMask {
        RegionMask::from_fn(self.width, self.height, |x, y| {
            self.to_crop(x, y).is_some_and(|(cx, cy)| mask.get(cx, cy))
        })
    }

    fn point(&self, p: Point) -> Point {
        let r = &self.rect;
        let s = self.size as f64;
        Point::new(
            r.x0 as f64 + (p.x + 0.5) * r.width() as f64 / s - 0.5,
            r.y0 as f64 + (p.y + 0.5) * r.height() as f64 / s - 0.5,
        )
    }

    pub fn atlas(&self) -> &RegionAtlas {
        &self.atlas
    }

    pub fn landmarks(&self) -> &LandmarkSet {
        &self.landmarks
    }
}

/// Stable seed for one (corpus seed, kind, base) triple so ladders share their randomness.
pub fn derive_seed(seed: u64, kind: &str, base: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in kind.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(splitmix(seed ^ h) ^ base as u64)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn map_values(img: &ImageBuffer, f: impl Fn(f64) -> f64) -> ImageBuffer {
    let lut: Vec<u8> = (0..256).map(|v| quantize(f(v as f64))).collect();
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    ImageBuffer::new(img.width(), img.height(), img.channels(), data).expect("same dims")
}

fn scale_in(img: &mut ImageBuffer, mask: &RegionMask, factor: f64) {
    for i in mask.indices() {
        let rgb = img.rgb_at(i).map(|c| quantize(c as f64 * factor));
        img.put_rgb_at(i, rgb);
    }
}

fn fill(img: &mut ImageBuffer, mask: &RegionMask, rgb: [u8; 3]) {
    for i in mask.indices() {
        img.put_rgb_at(i, rgb);
    }
}

/// Columns of `mask` left of `fraction` of its horizontal extent.
fn left_columns(mask: &RegionMask, fraction: f64) -> RegionMask {
    let Some((x0, _, x1, _)) = mask.bounds() else {
        return mask.clone();
    };
    let cut = x0 as f64 + fraction * (x1 - x0 + 1) as f64;
    RegionMask::from_fn(mask.width(), mask.height(), |x, y| mask.get(x, y) && (x as f64) < cut)
}

fn pixelate(img: &ImageBuffer, block: usize) -> ImageBuffer {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (ex, ey) = ((bx + block).min(w), (by + block).min(h));
            let n = ((ex - bx) * (ey - by)) as f64;
            let mut acc = [0.0; 3];
            for y in by..ey {
                for x in bx..ex {
                    let rgb = img.rgb(x, y);
                    for c in 0..3 {
                        acc[c] += rgb[c] as f64;
                    }
                }
            }
            let mean = acc.map(|v| quantize(v / n));
            for y in by..ey {
                for x in bx..ex {
                    out.put_rgb(x, y, mean);
                }
            }
        }
    }
    out
}

fn red_eye_mask(geom: &SourceGeometry, fraction: f64) -> RegionMask {
    let lm = geom.landmarks();
    let s = geom.scale_x();
    let discs = [(lm.pupil_l, lm.eye_width_l()), (lm.pupil_r, lm.eye_width_r())].map(|(p, w)| (geom.point(p), fraction * 0.3 * w * s));
    RegionMask::from_fn(geom.width, geom.height, |x, y| {
        discs
            .iter()
            .any(|(c, r)| (x as f64 - c.x).hypot(y as f64 - c.y) <= *r)
    })
}

fn frame_mask(geom: &SourceGeometry, thickness: usize) -> RegionMask {
    let outside = (thickness / 2) as isize;
    let inside = (thickness - thickness / 2) as isize;
    let zones = [&geom.atlas().eye_zone_l, &geom.atlas().eye_zone_r].map(|z| geom.region(z).bounds());
    RegionMask::from_fn(geom.width, geom.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        zones.iter().flatten().any(|&(x0, y0, x1, y1)| {
            let (x0, y0, x1, y1) = (x0 as isize, y0 as isize, x1 as isize, y1 as isize);
            let in_outer = x >= x0 - outside && x <= x1 + outside && y >= y0 - outside && y <= y1 + outside;
            let in_inner = x >= x0 + inside && x <= x1 - inside && y >= y0 + inside && y <= y1 - inside;
            in_outer && !in_inner
        })
    })
}

/// Skin pixels nearest to a cheek point; nested in `fraction`.
fn specular_mask(geom: &SourceGeometry, fraction: f64) -> RegionMask {
    let skin = geom.region(&geom.atlas().skin);
    let lm = geom.landmarks();
    let c = geom.point(Point::new(
        (lm.pupil_l.x + lm.mouth_corner_l.x) / 2.0,
        (lm.pupil_l.y + lm.mouth_corner_l.y) / 2.0,
    ));
    let w = skin.width();
    let mut order: Vec<(f64, usize)> = skin
        .indices()
        .map(|i| (((i % w) as f64 - c.x).hypot((i / w) as f64 - c.y), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let take = (fraction * order.len() as f64).ceil() as usize;
    let mut mask = RegionMask::empty(skin.width(), skin.height());
    for &(_, i) in order.iter().take(take) {
        mask.set_index(i, true);
    }
    mask
}

fn occlusion_mask(geom: &SourceGeometry, region: OcclusionRegion, fraction: f64) -> RegionMask {
    let crop_mask = match region {
        OcclusionRegion::Forehead => &geom.atlas().forehead,
        OcclusionRegion::LowerFace => &geom.atlas().lower_face,
    };
    let mask = geom.region(crop_mask);
    let Some((_, y0, _, y1)) = mask.bounds() else {
        return mask;
    };
    let rows = fraction * (y1 - y0 + 1) as f64;
    RegionMask::from_fn(mask.width(), mask.height(), |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        let depth = match region {
            OcclusionRegion::Forehead => y - y0,
            OcclusionRegion::LowerFace => y1 - y,
        };
        (depth as f64) < rows
    })
}

/// Paint seeded shapes inside `region` until `coverage` of it is painted.
/// Later severities repaint the same shape sequence further, so ladders nest.
fn clutter(img: &mut ImageBuffer, region: &RegionMask, coverage: f64, seed: u64) {
    let n = region.pixel_count();
    let Some((x0, y0, x1, y1)) = region.bounds() else {
        return;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut painted = RegionMask::empty(region.width(), region.height());
    let mut count = 0usize;
    for _ in 0..10_000 {
        if count as f64 >= coverage * n as f64 {
            break;
        }
        let cx = rng.random_range(x0 as f64..=x1 as f64);
        let cy = rng.random_range(y0 as f64..=y1 as f64);
        let rx = rng.random_range(3.0..10.0);
        let ry = rng.random_range(3.0..10.0);
        let rect = rng.random_bool(0.5);
        let color = CLUTTER[rng.random_range(0..CLUTTER.len())];
        let (w, h) = (region.width(), region.height());
        let bx0 = (cx - rx).floor().max(0.0) as usize;
        let by0 = (cy - ry).floor().max(0.0) as usize;
        let bx1 = ((cx + rx).ceil() as usize).min(w - 1);
        let by1 = ((cy + ry).ceil() as usize).min(h - 1);
        for y in by0..=by1 {
            for x in bx0..=bx1 {
                let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                let inside = if rect { dx.abs() <= 1.0 && dy.abs() <= 1.0 } else { dx * dx + dy * dy <= 1.0 };
                if inside && region.get(x, y) {
                    img.put_rgb(x, y, color);
                    if !painted.get(x, y) {
                        painted.set(x, y, true);
                        count += 1;
                    }
                }
            }
        }
    }
}

/// Pixels a region-targeted degradation may touch; `None` for global kinds.
pub fn target_region(spec: &DegradationSpec, geom: &SourceGeometry) -> Option<RegionMask> {
    use DegradationKind::*;
    let atlas = geom.atlas();
    let s = spec.severity;
    Some(match spec.kind {
        BackgroundClutter => geom.region(&atlas.background),
        BackgroundShadow => left_columns(&geom.region(&atlas.background), s),
        FaceShadow => left_columns(&geom.region(&atlas.face), s),
        SpecularBlob => specular_mask(geom, s),
        RedEye => red_eye_mask(geom, s),
        OcclusionPatch { region, .. } => occlusion_mask(geom, region, s),
        FrameLines => frame_mask(geom, s.round() as usize),
        TintSkin => geom.region(&atlas.skin),
        GaussianBlur | WhiteNoise | Pixelate | Darken | Brighten | ContrastCompress => return None,
    })
}

/// Apply one degradation. Severity 0 returns the input unchanged.
pub fn apply(img: &ImageBuffer, spec: &DegradationSpec, geom: Option<&SourceGeometry>) -> Result<SynthSample, SynthError> {
    use DegradationKind::*;
    spec.validate()?;
    img.require_channels(3)?;
    let s = spec.severity;
    let sample = |image| SynthSample {
        image,
        spec: *spec,
        labels: spec.implied_labels(),
    };
    if s == 0.0 {
        return Ok(sample(img.clone()));
    }
    let image = match spec.kind {
        GaussianBlur => gaussian_blur(img, s),
        WhiteNoise => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let data = img
                .data()
                .iter()
                .map(|&v| {
                    let z: f64 = rng.sample(StandardNormal);
                    quantize(v as f64 + s * z)
                })
                .collect();
            ImageBuffer::new(img.width(), img.height(), 3, data)?
        }
        Pixelate => match s.round() as usize {
            0 | 1 => img.clone(),
            b => pixelate(img, b),
        },
        Darken => map_values(img, |v| 255.0 * (v / 255.0).powf(1.0 + s)),
        Brighten => map_values(img, |v| v + s * 255.0),
        ContrastCompress => map_values(img, |v| 128.0 + (1.0 - s) * (v - 128.0)),
        kind => {
            let geom = geom.ok_or_else(|| SynthError::RegionUnavailable(format!("{kind} needs face landmarks")))?;
            if geom.width != img.width() || geom.height != img.height() {
                return Err(SynthError::InvalidSpec("geometry does not match the image size".into()));
            }
            let region = target_region(spec, geom).expect("region-targeted kind");
            let mut out = img.clone();
            match kind {
                BackgroundClutter => clutter(&mut out, &region, s, spec.seed),
                BackgroundShadow => scale_in(&mut out, &region, BACKGROUND_SHADE),
                FaceShadow => scale_in(&mut out, &region, FACE_SHADE),
                SpecularBlob => fill(&mut out, &region, [255; 3]),
                RedEye => fill(&mut out, &region, RED_EYE),
                OcclusionPatch { color, .. } => fill(&mut out, &region, color),
                FrameLines => fill(&mut out, &region, FRAME),
                TintSkin => {
                    for i in region.indices() {
                        let [y, cb, cr] = rgb_to_ycbcr(out.rgb_at(i));
                        out.put_rgb_at(i, ycbcr_to_rgb([y, cb, cr - s]).map(quantize));
                    }
                }
                _ => unreachable!("global kinds handled above"),
            }
            out
        }
    };
    Ok(sample(image))
}

/// A clean image with its optional sidecar.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseImage {
    pub name: String,
    pub image: ImageBuffer,
    pub annotation: Option<Annotation>,
}

/// Render synthetic frontal face `index`: flat lit backdrop, textured skin,
/// sclera, pupils, brows and closed lips, with a sidecar holding the true box
/// and landmarks.
pub fn render_base(index: usize, seed: u64) -> BaseImage {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "base", index));
    let tone = SKIN_TONES[index % SKIN_TONES.len()];
    let backdrop = BACKDROPS[(index / SKIN_TONES.len()) % BACKDROPS.len()];
    let ox = rng.random_range(8..=24usize);
    let oy = rng.random_range(8..=24usize);
    let k = rng.random_range(0.95..1.05);
    let shade = rng.random_range(-0.06..0.06);

    let canonical = LandmarkSet::canonical(CROP_SIZE);
    let centre = Point::new(56.0, 58.0);
    let lm = canonical.map_points(|p| Point::new(centre.x + (p.x - centre.x) * k, centre.y + (p.y - centre.y) * k));

    let s = CROP_SIZE;
    let face = RegionMask::polygon(s, s, &lm.contour.iter().map(|p| (p.x, p.y)).collect::<Vec<_>>());
    let eye = |outer: Point, inner: Point, top: Point, bot: Point| {
        let c = outer.midpoint(inner);
        let rx = outer.distance(inner) / 2.0 * 0.9;
        let ry = (top.distance(bot) / 2.0).max(1.5);
        RegionMask::ellipse(s, s, c.x, c.y, rx, ry)
    };
    let sclera = eye(lm.eye_outer_l, lm.eye_inner_l, lm.lid_top_l, lm.lid_bot_l)
        .union(&eye(lm.eye_inner_r, lm.eye_outer_r, lm.lid_top_r, lm.lid_bot_r));
    let pr = 0.13 * lm.eye_width_l();
    let pupils = RegionMask::ellipse(s, s, lm.pupil_l.x, lm.pupil_l.y, pr, pr)
        .union(&RegionMask::ellipse(s, s, lm.pupil_r.x, lm.pupil_r.y, pr, pr));
    let brow = |p: Point, w: f64| RegionMask::rect(s, s, p.x - 0.45 * w, p.y - 1.0, p.x + 0.45 * w, p.y + 1.0);
    let brows = brow(lm.brow_l, lm.eye_width_l()).union(&brow(lm.brow_r, lm.eye_width_r()));
    let lip_y = lm.lip_top.midpoint(lm.lip_bot).y;
    let lips = RegionMask::rect(s, s, lm.mouth_corner_l.x, lip_y - 1.0, lm.mouth_corner_r.x, lip_y + 1.0);

    let mut image = ImageBuffer::filled(BASE_SIZE, BASE_SIZE, backdrop);
    for y in 0..BASE_SIZE {
        for x in 0..BASE_SIZE {
            let crop = (x.checked_sub(ox), y.checked_sub(oy));
            let base = match crop {
                (Some(cx), Some(cy)) if cx < s && cy < s => {
                    if pupils.get(cx, cy) {
                        Some(PUPIL)
                    } else if sclera.get(cx, cy) {
                        Some(SCLERA)
                    } else if brows.get(cx, cy) {
                        Some(BROW)
                    } else if lips.get(cx, cy) {
                        Some(LIPS)
                    } else if face.get(cx, cy) {
                        let f = 1.0 + shade * (cx as f64 - centre.x) / 40.0;
                        Some(tone.map(|c| quantize(c as f64 * f)))
                    } else {
                        None
                    }
                }
                _ => None,
            };
            let (rgb, sigma) = match base {
                Some(rgb) => (rgb, 2.0),
                None => (backdrop, 1.5),
            };
            let noisy = rgb.map(|c| {
                let z: f64 = rng.sample(StandardNormal);
                quantize(c as f64 + sigma * z)
            });
            image.put_rgb(x, y, noisy);
        }
    }
    let face_box = FaceBox::new(ox as f64 + 20.0, oy as f64 + 20.0, BASE_FACE_BOX, BASE_FACE_BOX, 1.0).expect("valid box");
    BaseImage {
        name: format!("base{index:03}"),
        image,
        annotation: Some(Annotation {
            boxes: Some(vec![face_box]),
            landmarks: Some(lm),
            ..Default::default()
        }),
    }
}

pub fn render_bases(count: usize, seed: u64) -> Vec<BaseImage> {
    (0..count).map(|i| render_base(i, seed)).collect()
}

/// Load every PNG or JPEG in `dir` (sorted by name) with its sidecar.
pub fn load_bases(dir: &Path) -> Result<Vec<BaseImage>, SynthError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(SynthError::EmptyBase);
    }
    paths
        .iter()
        .map(|p| {
            Ok(BaseImage {
                name: p.file_stem().and_then(|s| s.to_str()).unwrap_or("base").to_string(),
                image: load_image(p)?,
                annotation: load_sidecar(p)?,
            })
        })
        .collect()
}

/// Write base images and sidecars into `dir`.
pub fn save_bases(bases: &[BaseImage], dir: &Path) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for b in bases {
        write_image(dir, &b.name, &b.image, b.annotation.as_ref())?;
    }
    Ok(())
}

fn write_image(dir: &Path, stem: &str, img: &ImageBuffer, ann: Option<&Annotation>) -> Result<(), SynthError> {
    let path = dir.join(format!("{stem}.png"));
    std::fs::write(&path, encode_png(img)?).map_err(io_err(&path))?;
    if let Some(a) = ann {
        let side = dir.join(format!("{stem}.landmarks.json"));
        std::fs::write(&side, a.to_json() + "\n").map_err(io_err(&side))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindName {
    GaussianBlur,
    WhiteNoise,
    Pixelate,
    Darken,
    Brighten,
    ContrastCompress,
    BackgroundClutter,
    BackgroundShadow,
    FaceShadow,
    SpecularBlob,
    RedEye,
    OcclusionPatch,
    FrameLines,
    TintSkin,
}

/// One plan file entry: `{"kind": ..., "severities": [...], "count": n}`;
/// `occlusion_patch` also takes optional `region` and `color`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<OcclusionRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color: Option<[u8; 3]>,
    pub severities: Vec<f64>,
    /// Number of base images degraded; bases are reused cyclically with fresh seeds.
    pub count: usize,
}

impl PlanEntry {
    pub fn new(kind: DegradationKind, severities: Vec<f64>, count: usize) -> Self {
        use DegradationKind as K;
        let (name, region, color) = match kind {
            K::GaussianBlur => (KindName::GaussianBlur, None, None),
            K::WhiteNoise => (KindName::WhiteNoise, None, None),
            K::Pixelate => (KindName::Pixelate, None, None),
            K::Darken => (KindName::Darken, None, None),
            K::Brighten => (KindName::Brighten, None, None),
            K::ContrastCompress => (KindName::ContrastCompress, None, None),
            K::BackgroundClutter => (KindName::BackgroundClutter, None, None),
            K::BackgroundShadow => (KindName::BackgroundShadow, None, None),
            K::FaceShadow => (KindName::FaceShadow, None, None),
            K::SpecularBlob => (KindName::SpecularBlob, None, None),
            K::RedEye => (KindName::RedEye, None, None),
            K::OcclusionPatch { region, color } => (KindName::OcclusionPatch, Some(region), Some(color)),
            K::FrameLines => (KindName::FrameLines, None, None),
            K::TintSkin => (KindName::TintSkin, None, None),
        };
        Self {
            kind: name,
            region,
            color,
            severities,
            count,
        }
    }

    pub fn kind(&self) -> Result<DegradationKind, SynthError> {
        use DegradationKind as K;
        if self.kind != KindName::OcclusionPatch && (self.region.is_some() || self.color.is_some()) {
            return Err(SynthError::Plan("region and color apply to occlusion_patch only".into()));
        }
        Ok(match self.kind {
            KindName::GaussianBlur => K::GaussianBlur,
            KindName::WhiteNoise => K::WhiteNoise,
            KindName::Pixelate => K::Pixelate,
            KindName::Darken => K::Darken,
            KindName::Brighten => K::Brighten,
            KindName::ContrastCompress => K::ContrastCompress,
            KindName::BackgroundClutter => K::BackgroundClutter,
            KindName::BackgroundShadow => K::BackgroundShadow,
            KindName::FaceShadow => K::FaceShadow,
            KindName::SpecularBlob => K::SpecularBlob,
            KindName::RedEye => K::RedEye,
            KindName::OcclusionPatch => K::OcclusionPatch {
                region: self.region.unwrap_or(OcclusionRegion::Forehead),
                color: self.color.unwrap_or(DEFAULT_PATCH),
            },
            KindName::FrameLines => K::FrameLines,
            KindName::TintSkin => K::TintSkin,
        })
    }
}

/// Corpus plan: a JSON list of [`PlanEntry`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorpusPlan {
    pub entries: Vec<PlanEntry>,
}

impl CorpusPlan {
    /// Every kind at its nonzero default severities.
    pub fn default_plan(count: usize) -> Self {
        Self {
            entries: DegradationKind::all()
                .into_iter()
                .map(|k| PlanEntry::new(k, k.default_ladder()[1..].to_vec(), count))
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let plan: Self = serde_json::from_str(text).map_err(|e| SynthError::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        Self::from_json(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.entries.is_empty() {
            return Err(SynthError::Plan("plan has no entries".into()));
        }
        for e in &self.entries {
            let kind = e.kind()?;
            if e.severities.is_empty() || e.count == 0 {
                return Err(SynthError::Plan(format!("{kind}: needs severities and count >= 1")));
            }
            for &s in &e.severities {
                DegradationSpec::new(kind, s, 0).validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub clean: usize,
    pub degraded: usize,
    pub labels: PathBuf,
}

fn severity_tag(s: f64) -> String {
    format!("{s}").replace('.', "p")
}

/// One planned output before rendering.
struct Job<'a> {
    stem: String,
    base: &'a BaseImage,
    base_index: usize,
    spec: Option<DegradationSpec>,
}

/// Render `plan` over `bases` into `out/images/*.png` plus `out/labels.csv`.
///
/// Clean copies of every used base are labeled compliant for all tests the
/// plan touches. Rows are sorted by path.
pub fn build_corpus(
    bases: &[BaseImage],
    plan: &CorpusPlan,
    seed: u64,
    out: &Path,
    assessor: &Assessor,
) -> Result<CorpusSummary, SynthError> {
    if bases.is_empty() {
        return Err(SynthError::EmptyBase);
    }
    plan.validate()?;
    let mut affected = [false; TEST_COUNT];
    let mut jobs = Vec::new();
    let mut used = vec![false; bases.len()];
    for entry in &plan.entries {
        let kind = entry.kind()?;
        for &id in kind.affected_tests() {
            affected[id as usize - 1] = true;
        }
        for i in 0..entry.count {
            let b = i % bases.len();
            used[b] = true;
            let round = i / bases.len();
            let spec_seed = derive_seed(seed, &kind.slug(), i);
            for &sev in &entry.severities {
                let mut stem = format!("{}_{}_{}", bases[b].name, kind.slug(), severity_tag(sev));
                if round > 0 {
                    stem.push_str(&format!("_r{round}"));
                }
                jobs.push(Job {
                    stem,
                    base: &bases[b],
                    base_index: b,
                    spec: Some(DegradationSpec::new(kind, sev, spec_seed)),
                });
            }
        }
    }
    let degraded = jobs.len();
    for (b, base) in bases.iter().enumerate().filter(|(b, _)| used[*b]) {
        jobs.push(Job {
            stem: format!("{}_clean", base.name),
            base,
            base_index: b,
            spec: None,
        });
    }
    let clean = jobs.len() - degraded;
    let mut seen = std::collections::HashSet::new();
    for j in &jobs {
        if !seen.insert(j.stem.clone()) {
            return Err(SynthError::DuplicateOutput(j.stem.clone()));
        }
    }

    // Geometry once per used base, only when some kind needs it.
    let needs_geometry = plan.entries.iter().any(|e| e.kind().is_ok_and(|k| k.needs_regions()));
    let geometry: Vec<Option<Result<SourceGeometry, String>>> = bases
        .par_iter()
        .enumerate()
        .map(|(b, base)| {
            (used[b] && needs_geometry).then(|| {
                SourceGeometry::of_image(assessor, &base.image, base.annotation.as_ref()).map_err(|e| e.to_string())
            })
        })
        .collect();

    let rendered: Vec<(String, ImageBuffer, Vec<Label>, Option<&Annotation>)> = jobs
        .par_iter()
        .map(|job| {
            let (image, labels) = match &job.spec {
                None => {
                    let labels = affected
                        .iter()
                        .map(|&a| if a { Label::Compliant } else { Label::NotAvailable })
                        .collect();
                    (job.base.image.clone(), labels)
                }
                Some(spec) => {
                    let geom = match &geometry[job.base_index] {
                        Some(Ok(g)) => Some(g),
                        Some(Err(e)) if spec.kind.needs_regions() => {
                            return Err(SynthError::RegionUnavailable(format!("{}: {e}", job.base.name)))
                        }
                        _ => None,
                    };
                    let s = apply(&job.base.image, spec, geom)?;
                    (s.image, s.labels)
                }
            };
            Ok((job.stem.clone(), image, labels, job.base.annotation.as_ref()))
        })
        .collect::<Result<_, SynthError>>()?;

    let images = out.join("images");
    std::fs::create_dir_all(&images).map_err(io_err(&images))?;
    let mut rows = Vec::with_capacity(rendered.len());
    for (stem, image, labels, ann) in &rendered {
        write_image(&images, stem, image, *ann)?;
        rows.push(LabelRow {
            image: format!("images/{stem}.png"),
            labels: labels.clone(),
        });
    }
    rows.sort_by(|a, b| a.image.cmp(&b.image));
    let labels = out.join("labels.csv");
    std::fs::write(&labels, LabelTable { rows }.to_csv()).map_err(io_err(&labels))?;
    Ok(CorpusSummary { clean, degraded, labels })
}

#[cfg(test)]
mod tests;
