use serde::Serialize;

use crate::face_model::{ExpressionClassifier, HairSegmenter, LandmarkSet, PoseEstimator};
use crate::imagery::{
    chromaticity, convolve_raster, gaussian_blur_raster, gradient_magnitude_raster, histogram, kmeans,
    luma, percentile, remove_small_components, rgb_to_hsv, ChromaBox, ImageBuffer,
    Kernel2D, Raster, RegionMask,
};
use crate::preprocess::FaceContext;

use super::{ColorModel, Feature, Region, ScoringConfig};

/// Outcome of one scoring operation; higher values are more compliant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RawScore {
    Computable { value: f64 },
    NotComputable { reason: String },
}

impl RawScore {
    /// Clamp into [0, 1]; a NaN becomes `NotComputable`.
    pub fn of(value: f64) -> Self {
        if value.is_nan() {
            return Self::not_computable("score is undefined");
        }
        RawScore::Computable {
            value: value.clamp(0.0, 1.0),
        }
    }

    pub fn not_computable(reason: impl Into<String>) -> Self {
        RawScore::NotComputable { reason: reason.into() }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            RawScore::Computable { value } => Some(*value),
            RawScore::NotComputable { .. } => None,
        }
    }

    pub fn is_computable(&self) -> bool {
        self.value().is_some()
    }
}

/// `1 - min(1, x / reference)`.
fn penalty(x: f64, reference: f64) -> RawScore {
    RawScore::of(1.0 - (x / reference).min(1.0))
}

/// External estimators consulted by the learned-model tests.
#[derive(Clone, Copy)]
pub struct Plugins<'a> {
    pub pose: &'a dyn PoseEstimator,
    pub hair: Option<&'a dyn HairSegmenter>,
    pub expression: Option<&'a dyn ExpressionClassifier>,
}

/// Per-image derived planes shared by all tests.
pub struct Scene<'a> {
    pub ctx: &'a FaceContext,
    pub cfg: &'a ScoringConfig,
    /// Integer grayscale as reals.
    pub gray: Raster,
    pub gradient: Raster,
}

impl<'a> Scene<'a> {
    pub fn new(ctx: &'a FaceContext, cfg: &'a ScoringConfig) -> Self {
        let gray = luma(&ctx.crop).map(f64::round);
        let gradient = gradient_magnitude_raster(&gray).unwrap_or_else(|_| Raster::zeros(gray.width(), gray.height()));
        Self { ctx, cfg, gray, gradient }
    }

    fn crop(&self) -> &ImageBuffer {
        &self.ctx.crop
    }

    fn landmarks(&self) -> Result<&LandmarkSet, RawScore> {
        self.ctx.landmarks.as_ref().ok_or_else(|| {
            RawScore::not_computable(
                self.ctx
                    .landmark_failure
                    .clone()
                    .unwrap_or_else(|| "landmarks unavailable".into()),
            )
        })
    }

    pub fn region(&self, r: Region) -> RegionMask {
        let a = &self.ctx.atlas;
        match r {
            Region::Face => a.face.clone(),
            Region::Background => a.background.clone(),
            Region::FaceAndBackground => a.face.union(&a.background),
            Region::Skin => a.skin.clone(),
            Region::Forehead => a.forehead.clone(),
            Region::LowerFace => a.lower_face.clone(),
            Region::EyeZones => a.eye_zones(),
            Region::EyeSurround => a.eye_surround.clone(),
            Region::EyeZonesAndSurround => a.eye_zones().union(&a.eye_surround),
            Region::EyeRim => a.eye_rim.clone(),
        }
    }

    fn fraction(&self, region: &RegionMask, pred: impl Fn(usize) -> bool) -> Option<f64> {
        let n = region.pixel_count();
        (n > 0).then(|| region.indices().filter(|&i| pred(i)).count() as f64 / n as f64)
    }

    /// Test 1: variance of the Laplacian over the face.
    pub fn blur(&self) -> RawScore {
        let Ok(lap) = convolve_raster(&self.gray, &Kernel2D::laplacian()) else {
            return RawScore::not_computable("crop smaller than the Laplacian kernel");
        };
        match self.ctx.atlas.face.mean_variance(&lap) {
            Some((_, v)) => RawScore::of((v / self.cfg.blur_v_ref).min(1.0)),
            None => RawScore::not_computable("empty face region"),
        }
    }

    /// Test 2: pupil offset from the eye-corner midpoint in half eye widths.
    pub fn gaze(&self) -> RawScore {
        let lm = match self.landmarks() {
            Ok(lm) => lm,
            Err(s) => return s,
        };
        let offset = |pupil: crate::face_model::Point, a: crate::face_model::Point, b: crate::face_model::Point| {
            let half = a.distance(b) / 2.0;
            if half > 0.0 {
                Some(pupil.distance(a.midpoint(b)) / half)
            } else {
                None
            }
        };
        match (
            offset(lm.pupil_l, lm.eye_outer_l, lm.eye_inner_l),
            offset(lm.pupil_r, lm.eye_inner_r, lm.eye_outer_r),
        ) {
            (Some(l), Some(r)) => RawScore::of(1.0 - l.max(r).min(1.0)),
            _ => RawScore::not_computable("eye corners coincide"),
        }
    }

    /// Tests 3, 4, 20, 21.
    pub fn unnatural_color(&self, region: Region, model: ColorModel) -> RawScore {
        let mask = self.region(region);
        if mask.is_empty() {
            return RawScore::not_computable("empty region");
        }
        let crop = self.crop();
        let cfg = self.cfg;
        let fraction = match model {
            ColorModel::Ink => {
                let ink = RegionMask::from_fn(mask.width(), mask.height(), |x, y| {
                    if !mask.get(x, y) {
                        return false;
                    }
                    let rgb = crop.rgb(x, y);
                    let (_, s, v) = rgb_to_hsv(rgb);
                    s > cfg.ink_min_saturation && v > cfg.ink_min_value && !ChromaBox::SKIN.contains(rgb)
                });
                let kept = remove_small_components(&ink, cfg.ink_min_blob);
                kept.pixel_count() as f64 / mask.pixel_count() as f64
            }
            ColorModel::Skin => {
                let widened = ChromaBox::SKIN.widened(cfg.skin_box_widening);
                self.fraction(&mask, |i| !widened.contains(crop.rgb_at(i))).unwrap_or(0.0)
            }
            ColorModel::Occlusion => self
                .fraction(&mask, |i| {
                    let rgb = crop.rgb_at(i);
                    let (_, s, v) = rgb_to_hsv(rgb);
                    let hair_like = s <= cfg.occlusion_hair_max_saturation && v <= cfg.occlusion_hair_max_value;
                    !ChromaBox::SKIN.contains(rgb) && !hair_like
                })
                .unwrap_or(0.0),
        };
        RawScore::of(1.0 - fraction)
    }

    /// Test 5: distance of the mean face gray level from mid-gray.
    pub fn luminance(&self) -> RawScore {
        match self.ctx.atlas.face.mean_variance(&self.gray) {
            Some((m, _)) => RawScore::of(1.0 - (m - 128.0).abs() / 128.0),
            None => RawScore::not_computable("empty face region"),
        }
    }

    /// Test 6: 1st to 99th percentile spread of face gray levels.
    pub fn contrast(&self) -> RawScore {
        let gray = self.gray.to_image();
        let Ok(hist) = histogram(&gray, Some(&self.ctx.atlas.face)) else {
            return RawScore::not_computable("empty face region");
        };
        match (percentile(&hist, 0.01), percentile(&hist, 0.99)) {
            (Ok(lo), Ok(hi)) => RawScore::of((hi as f64 - lo as f64) / 255.0),
            _ => RawScore::not_computable("empty histogram"),
        }
    }

    /// Test 7: periodic peaks in the autocorrelation of edge projections.
    pub fn pixelation(&self) -> RawScore {
        let g = &self.gray;
        let (w, h) = (g.width(), g.height());
        let mut cols = vec![0.0; w.saturating_sub(1)];
        let mut rows = vec![0.0; h.saturating_sub(1)];
        for y in 0..h {
            for x in 0..w {
                let v = g.get(x, y);
                if x + 1 < w {
                    cols[x] += (g.get(x + 1, y) - v).abs();
                }
                if y + 1 < h {
                    rows[y] += (g.get(x, y + 1) - v).abs();
                }
            }
        }
        let (lo, hi) = (self.cfg.pixelation_min_lag, self.cfg.pixelation_max_lag);
        let floor = self.cfg.pixelation_cv_floor;
        // Coarser blocks lose more detail: weight the peak by its fundamental period.
        let weighted = |profile: &[f64]| {
            periodic_peak(profile, lo, hi, floor).map_or(0.0, |(lag, p)| p * lag as f64 / hi as f64)
        };
        penalty(weighted(&cols).max(weighted(&rows)), self.cfg.pixelation_p_ref)
    }

    /// Test 8: share of the upper face close to the hair color above the forehead.
    pub fn hair_overlap(&self, plugin: Option<&dyn HairSegmenter>) -> RawScore {
        if let Err(s) = self.landmarks() {
            return s;
        }
        if let Some(seg) = plugin {
            return match seg.hair_overlap(self.crop(), &self.ctx.atlas) {
                Ok(f) => RawScore::of(1.0 - f),
                Err(e) => RawScore::not_computable(e.to_string()),
            };
        }
        let atlas = &self.ctx.atlas;
        let band = &atlas.hair_band;
        if band.is_empty() {
            return RawScore::not_computable("hair reference band is empty");
        }
        let crop = self.crop();
        let n = band.pixel_count() as f64;
        let mut reference = [0.0; 3];
        for i in band.indices() {
            let rgb = crop.rgb_at(i);
            for c in 0..3 {
                reference[c] += rgb[c] as f64 / n;
            }
        }
        let Some((_, y0, _, y1)) = atlas.face.bounds() else {
            return RawScore::not_computable("empty face region");
        };
        let mid = (y0 + y1) as f64 / 2.0;
        let upper = RegionMask::from_fn(atlas.face.width(), atlas.face.height(), |x, y| {
            atlas.face.get(x, y) && (y as f64) < mid
        });
        let limit = self.cfg.hair_color_distance;
        match self.fraction(&upper, |i| {
            let rgb = crop.rgb_at(i);
            let d2: f64 = (0..3).map(|c| (rgb[c] as f64 - reference[c]).powi(2)).sum();
            d2.sqrt() <= limit
        }) {
            Some(f) => RawScore::of(1.0 - f),
            None => RawScore::not_computable("empty upper face"),
        }
    }

    /// Tests 9 and 22.
    pub fn aperture(&self, feature: Feature) -> RawScore {
        let lm = match self.landmarks() {
            Ok(lm) => lm,
            Err(s) => return s,
        };
        match feature {
            Feature::Eyes => {
                let (wl, wr) = (lm.eye_width_l(), lm.eye_width_r());
                if wl <= 0.0 || wr <= 0.0 {
                    return RawScore::not_computable("eye corners coincide");
                }
                let a = (lm.lid_top_l.distance(lm.lid_bot_l) / wl + lm.lid_top_r.distance(lm.lid_bot_r) / wr) / 2.0;
                RawScore::of((a / self.cfg.eye_open_ratio).min(1.0))
            }
            Feature::Mouth => match mouth_aperture(lm) {
                Some(a) => penalty(a, self.cfg.mouth_open_ratio),
                None => RawScore::not_computable("mouth corners coincide"),
            },
        }
    }

    /// Test 10: dominance and tightness of the largest background color cluster.
    pub fn background_homogeneity(&self) -> RawScore {
        let bg = &self.ctx.atlas.background;
        let n = bg.pixel_count();
        if n < self.cfg.background_min_pixels.max(self.cfg.background_k) {
            return RawScore::not_computable(format!("background has {n} pixels"));
        }
        let crop = self.crop();
        let samples: Vec<[f64; 3]> = bg
            .indices()
            .map(|i| {
                let [r, g, b] = crop.rgb_at(i);
                [r as f64, g as f64, b as f64]
            })
            .collect();
        let km = match kmeans(&samples, self.cfg.background_k, self.cfg.background_seed) {
            Ok(km) => km,
            Err(e) => return RawScore::not_computable(e.to_string()),
        };
        let sizes = km.cluster_sizes();
        let (best, _) = sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("k >= 1");
        // k-means always splits a flat noisy backdrop k ways; clusters whose
        // centroids sit next to the dominant one are the same backdrop.
        let anchor = km.centroids[best];
        let dominant: Vec<bool> = km
            .centroids
            .iter()
            .map(|c| (0..3).map(|k| (c[k] - anchor[k]).powi(2)).sum::<f64>().sqrt() <= self.cfg.background_merge_distance)
            .collect();
        let members: Vec<&[f64; 3]> = samples
            .iter()
            .zip(&km.assignments)
            .filter(|(_, &a)| dominant[a])
            .map(|(s, _)| s)
            .collect();
        let count = members.len();
        let mut c = [0.0; 3];
        for s in &members {
            for k in 0..3 {
                c[k] += s[k];
            }
        }
        let c = c.map(|v| v / count as f64);
        let sq: f64 = members
            .iter()
            .map(|s| (0..3).map(|k| (s[k] - c[k]).powi(2)).sum::<f64>())
            .sum();
        let rms = (sq / count as f64).sqrt();
        let share = count as f64 / n as f64;
        RawScore::of(share * (1.0 - rms / self.cfg.background_rms_ref).max(0.0))
    }

    /// Test 11.
    pub fn pose_compliance(&self, estimator: &dyn PoseEstimator) -> RawScore {
        let lm = match self.landmarks() {
            Ok(lm) => lm,
            Err(s) => return s,
        };
        match estimator.estimate_pose(lm) {
            Ok(p) => {
                let worst = (p.roll.abs() / self.cfg.roll_limit)
                    .max(p.yaw.abs() / self.cfg.yaw_limit)
                    .max(p.pitch.abs() / self.cfg.pitch_limit);
                RawScore::of(1.0 - worst.min(1.0))
            }
            Err(e) => RawScore::not_computable(e.to_string()),
        }
    }

    /// Tests 12 and 17: saturated blobs.
    pub fn overexposure(&self, region: Region) -> RawScore {
        let mask = self.region(region);
        if mask.is_empty() {
            return RawScore::not_computable("empty region");
        }
        let crop = self.crop();
        let level = self.cfg.overexposure_level;
        let hot = RegionMask::from_fn(mask.width(), mask.height(), |x, y| {
            mask.get(x, y) && crop.rgb(x, y).iter().all(|&c| c >= level)
        });
        let kept = remove_small_components(&hot, self.cfg.overexposure_min_blob);
        penalty(kept.pixel_count() as f64 / mask.pixel_count() as f64, self.cfg.overexposure_ref)
    }

    /// Test 13: red pixels in a disc around each pupil.
    pub fn red_eye(&self) -> RawScore {
        let lm = match self.landmarks() {
            Ok(lm) => lm,
            Err(s) => return s,
        };
        let crop = self.crop();
        let (w, h) = (crop.width() as isize, crop.height() as isize);
        let redness = |pupil: crate::face_model::Point, eye_width: f64| -> Option<f64> {
            let r = self.cfg.red_eye_radius * eye_width;
            let (mut total, mut red) = (0usize, 0usize);
            let (x0, x1) = ((pupil.x - r).floor() as isize, (pupil.x + r).ceil() as isize);
            let (y0, y1) = ((pupil.y - r).floor() as isize, (pupil.y + r).ceil() as isize);
            for y in y0.max(0)..=y1.min(h - 1) {
                for x in x0.max(0)..=x1.min(w - 1) {
                    if (x as f64 - pupil.x).hypot(y as f64 - pupil.y) > r {
                        continue;
                    }
                    total += 1;
                    let [rr, g, b] = crop.rgb(x as usize, y as usize);
                    if rr as f64 - g.max(b) as f64 > self.cfg.red_eye_margin {
                        red += 1;
                    }
                }
            }
            (total > 0).then(|| red as f64 / total as f64)
        };
        match (redness(lm.pupil_l, lm.eye_width_l()), redness(lm.pupil_r, lm.eye_width_r())) {
            (Some(l), Some(r)) => penalty(l.max(r), self.cfg.red_eye_ref),
            _ => RawScore::not_computable("pupil disc outside the crop"),
        }
    }

    /// Tests 14 and 15: darkened pixels that keep the chromaticity of their lit surroundings.
    pub fn shadow(&self, region: Region) -> RawScore {
        let mask = self.region(region);
        let n = mask.pixel_count();
        if n == 0 {
            return RawScore::not_computable("empty region");
        }
        let mut levels: Vec<f64> = mask.indices().map(|i| self.gray.data()[i]).collect();
        levels.sort_by(f64::total_cmp);
        // Upper-quantile reference: a median would sink into any shadow covering half the region.
        let q = ((n - 1) as f64 * self.cfg.shadow_reference_quantile).round() as usize;
        let cut = self.cfg.shadow_ratio * levels[q];
        let (w, h) = (mask.width(), mask.height());
        let crop = self.crop();
        let gray = self.gray.data();
        let dark = RegionMask::from_fn(w, h, |x, y| mask.get(x, y) && gray[y * w + x] < cut);
        let lit = mask.subtract(&dark);
        if lit.is_empty() {
            return RawScore::of(0.0);
        }
        let chroma: Vec<(f64, f64)> = (0..w * h).map(|i| chromaticity(crop.rgb_at(i))).collect();
        let local = LocalMean::new(&lit, &chroma);
        let global = local.global();
        let radius = self.cfg.shadow_window;
        let tol = self.cfg.shadow_chroma_tolerance;
        let shadow = RegionMask::from_fn(w, h, |x, y| {
            if !dark.get(x, y) {
                return false;
            }
            let reference = local.window(x, y, radius).unwrap_or(global);
            let (r, g) = chroma[y * w + x];
            (r - reference.0).hypot(g - reference.1) <= tol
        });
        let kept = remove_small_components(&shadow, self.cfg.shadow_min_blob);
        penalty(kept.pixel_count() as f64 / n as f64, self.cfg.shadow_ref)
    }

    /// Test 16.
    pub fn dark_ratio(&self, region: Region) -> RawScore {
        if let Err(s) = self.landmarks() {
            return s;
        }
        let mask = self.region(region);
        let gray = self.gray.data();
        match self.fraction(&mask, |i| gray[i] < self.cfg.dark_level) {
            Some(f) => penalty(f, self.cfg.dark_ref),
            None => RawScore::not_computable("empty region"),
        }
    }

    /// Tests 18 and 19: dilated strong-edge coverage.
    pub fn edge_density(&self, region: Region) -> RawScore {
        let mask = self.region(region);
        if mask.is_empty() {
            return RawScore::not_computable("empty region");
        }
        let grad = self.gradient.data();
        let edges = RegionMask::from_fn(mask.width(), mask.height(), |x, y| {
            grad[y * mask.width() + x] > self.cfg.edge_threshold
        })
        .dilate(1);
        let f = self.fraction(&mask, |i| edges.get_index(i)).unwrap_or(0.0);
        penalty(f, self.cfg.edge_ref)
    }

    /// Test 23.
    pub fn other_faces(&self) -> RawScore {
        RawScore::of(if self.ctx.face_count == 1 { 1.0 } else { 0.0 })
    }

    /// Test 24: high-pass energy on flat pixels.
    pub fn white_noise(&self) -> RawScore {
        let Ok(response) = convolve_raster(&self.gray, &Kernel2D::high_pass()) else {
            return RawScore::not_computable("crop smaller than the high-pass kernel");
        };
        let smooth = gaussian_blur_raster(&self.gray, self.cfg.noise_flat_sigma);
        let Ok(flat_grad) = gradient_magnitude_raster(&smooth) else {
            return RawScore::not_computable("crop too small");
        };
        let (mut n, mut energy) = (0usize, 0.0);
        for (g, r) in flat_grad.data().iter().zip(response.data()) {
            if *g < self.cfg.noise_flat_gradient {
                n += 1;
                energy += r * r;
            }
        }
        let total = flat_grad.data().len();
        if (n as f64) < self.cfg.noise_min_flat_fraction * total as f64 || n == 0 {
            return RawScore::not_computable(format!("only {n} of {total} pixels are flat"));
        }
        penalty((energy / n as f64).sqrt(), self.cfg.noise_rms_ref)
    }

    /// Test 25.
    pub fn expression(&self, plugin: Option<&dyn ExpressionClassifier>) -> RawScore {
        let lm = match self.landmarks() {
            Ok(lm) => lm,
            Err(s) => return s,
        };
        if let Some(cls) = plugin {
            return match cls.neutral_probability(self.crop(), lm) {
                Ok(p) => RawScore::of(p),
                Err(e) => RawScore::not_computable(e.to_string()),
            };
        }
        let width = lm.mouth_width();
        let Some(aperture) = mouth_aperture(lm) else {
            return RawScore::not_computable("mouth corners coincide");
        };
        let mid = lm.lip_top.midpoint(lm.lip_bot);
        let lift = ((lm.mouth_corner_l.y - mid.y).abs() + (lm.mouth_corner_r.y - mid.y).abs()) / 2.0 / width;
        let worst = (aperture / self.cfg.expression_aperture_ref).max(lift / self.cfg.expression_lift_ref);
        RawScore::of(1.0 - worst.min(1.0))
    }
}

fn mouth_aperture(lm: &LandmarkSet) -> Option<f64> {
    let width = lm.mouth_width();
    (width > 0.0).then(|| lm.lip_top.distance(lm.lip_bot) / width)
}

/// Largest prominence `r(L) - max(r(L-1), r(L+1))` of the normalized
/// autocorrelation over lags `lo..=hi`.
///
/// The normalizer is floored at `(cv_floor * mean)^2` per sample so that
/// near-constant profiles (smooth images, quantization ripple) carry no peaks.
pub fn periodic_prominence(profile: &[f64], lo: usize, hi: usize, cv_floor: f64) -> f64 {
    prominences(profile, lo, hi, cv_floor).into_iter().fold(0.0, f64::max)
}

/// Fundamental period and strongest prominence: the smallest lag whose
/// prominence reaches half the maximum, since a period-`L` profile also peaks
/// at every multiple of `L`. `None` when nothing is periodic.
pub fn periodic_peak(profile: &[f64], lo: usize, hi: usize, cv_floor: f64) -> Option<(usize, f64)> {
    let prom = prominences(profile, lo, hi, cv_floor);
    let best = prom.iter().copied().fold(0.0, f64::max);
    if best <= 0.0 {
        return None;
    }
    let k = prom.iter().position(|&p| p >= 0.5 * best)?;
    Some((lo + k, best))
}

/// Prominence `r(L) - max(r(L-1), r(L+1))` for lags `lo..=hi`, all zero when the profile is too short.
fn prominences(profile: &[f64], lo: usize, hi: usize, cv_floor: f64) -> Vec<f64> {
    let n = profile.len();
    let lags = hi + 1 - lo;
    if n < hi + 2 {
        return vec![0.0; lags];
    }
    let mean = profile.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = profile.iter().map(|v| v - mean).collect();
    let denom: f64 = centred.iter().map(|v| v * v).sum::<f64>() + n as f64 * (cv_floor * mean).powi(2);
    if denom <= f64::EPSILON {
        return vec![0.0; lags];
    }
    let r = |lag: usize| -> f64 {
        let sum: f64 = (0..n - lag).map(|i| centred[i] * centred[i + lag]).sum();
        sum / denom * n as f64 / (n - lag) as f64
    };
    let corr: Vec<f64> = (0..=hi + 1).map(|l| if l >= lo - 1 { r(l) } else { 0.0 }).collect();
    (lo..=hi).map(|l| corr[l] - corr[l - 1].max(corr[l + 1])).collect()
}

/// Windowed means of a 2-vector field over member pixels via summed-area tables.
struct LocalMean {
    width: usize,
    height: usize,
    count: Vec<f64>,
    sum_a: Vec<f64>,
    sum_b: Vec<f64>,
}

impl LocalMean {
    fn new(mask: &RegionMask, field: &[(f64, f64)]) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let stride = w + 1;
        let mut count = vec![0.0; stride * (h + 1)];
        let mut sum_a = count.clone();
        let mut sum_b = count.clone();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (m, a, b) = if mask.get_index(i) {
                    (1.0, field[i].0, field[i].1)
                } else {
                    (0.0, 0.0, 0.0)
                };
                let at = (y + 1) * stride + x + 1;
                let up = y * stride + x + 1;
                let left = (y + 1) * stride + x;
                let diag = y * stride + x;
                count[at] = m + count[up] + count[left] - count[diag];
                sum_a[at] = a + sum_a[up] + sum_a[left] - sum_a[diag];
                sum_b[at] = b + sum_b[up] + sum_b[left] - sum_b[diag];
            }
        }
        Self {
            width: w,
            height: h,
            count,
            sum_a,
            sum_b,
        }
    }

    fn rect(&self, table: &[f64], x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.width + 1;
        table[y1 * s + x1] - table[y0 * s + x1] - table[y1 * s + x0] + table[y0 * s + x0]
    }

    fn global(&self) -> (f64, f64) {
        let (w, h) = (self.width, self.height);
        let n = self.rect(&self.count, 0, 0, w, h).max(1.0);
        (self.rect(&self.sum_a, 0, 0, w, h) / n, self.rect(&self.sum_b, 0, 0, w, h) / n)
    }

    /// Mean over the square window of the given radius, if it holds enough members.
    fn window(&self, x: usize, y: usize, radius: usize) -> Option<(f64, f64)> {
        let (x0, y0) = (x.saturating_sub(radius), y.saturating_sub(radius));
        let (x1, y1) = ((x + radius + 1).min(self.width), (y + radius + 1).min(self.height));
        let n = self.rect(&self.count, x0, y0, x1, y1);
        (n >= radius as f64).then(|| {
            (
                self.rect(&self.sum_a, x0, y0, x1, y1) / n,
                self.rect(&self.sum_b, x0, y0, x1, y1) / n,
            )
        })
    }
}
