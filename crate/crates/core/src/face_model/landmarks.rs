use crate::imagery::{gaussian_blur_raster, luma, sobel, ImageBuffer, Raster};

use super::{FaceModelError, LandmarkEstimator, LandmarkSet, Point, CROP_SIZE};

/// Canonical pupil coordinates and spacing on the 112 grid.
const PUPIL_ROW: f64 = 45.0;
const PUPIL_MID_X: f64 = 56.0;
const PUPIL_SPACING: f64 = 32.0;
const EYE_BAND: (f64, f64) = (35.0, 55.0);
const MOUTH_BAND: (f64, f64) = (70.0, 95.0);
/// Minimum depth of a pupil valley below its surroundings, in gray levels.
const MIN_VALLEY_DEPTH: f64 = 20.0;

/// Template landmarks refined by pupil-valley and mouth-edge search.
#[derive(Clone, Copy, Debug, Default)]
pub struct TemplateLandmarks;

/// Estimator returning a fixed set, typically from an annotation sidecar.
#[derive(Clone, Debug)]
pub struct FixedLandmarks(pub LandmarkSet);

impl LandmarkEstimator for FixedLandmarks {
    fn estimate_landmarks(&self, crop: &ImageBuffer) -> Result<LandmarkSet, FaceModelError> {
        self.0.validate(crop.width().min(crop.height()))?;
        Ok(self.0.clone())
    }
}

/// Per-pixel darkest channel; pupils, brows and red-eye discs all read dark here.
fn darkness_map(crop: &ImageBuffer) -> Raster {
    Raster::from_fn(crop.width(), crop.height(), |x, y| {
        let [r, g, b] = crop.rgb(x, y);
        r.min(g).min(b) as f64
    })
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

/// Strongest dark spot of a window: the point whose value sits furthest below
/// the mean of a surrounding ring. Bars such as brows score weakly because the
/// ring runs along them.
fn valley(map: &Raster, x0: usize, x1: usize, y0: usize, y1: usize, radius: f64) -> (Point, f64) {
    let (w, h) = (map.width() as isize, map.height() as isize);
    let ring: Vec<(isize, isize)> = (0..16)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 16.0;
            ((radius * t.cos()).round() as isize, (radius * t.sin()).round() as isize)
        })
        .collect();
    let mut best = (x0, y0, f64::NEG_INFINITY);
    for y in y0..=y1 {
        for x in x0..x1 {
            let ring_mean = ring
                .iter()
                .map(|&(dx, dy)| {
                    let nx = (x as isize + dx).clamp(0, w - 1) as usize;
                    let ny = (y as isize + dy).clamp(0, h - 1) as usize;
                    map.get(nx, ny)
                })
                .sum::<f64>()
                / ring.len() as f64;
            let depth = ring_mean - map.get(x, y);
            if depth > best.2 {
                best = (x, y, depth);
            }
        }
    }
    (Point::new(best.0 as f64, best.1 as f64), best.2)
}

impl LandmarkEstimator for TemplateLandmarks {
    fn estimate_landmarks(&self, crop: &ImageBuffer) -> Result<LandmarkSet, FaceModelError> {
        crop.require_channels(3)?;
        let size = crop.width().min(crop.height());
        if size < 32 {
            return Err(FaceModelError::LandmarkFailure(format!("crop of {size} px is too small")));
        }
        let s = size as f64 / CROP_SIZE as f64;
        let px = |v: f64| ((v * s).round() as usize).min(size - 1);
        let smooth = gaussian_blur_raster(&darkness_map(crop), s);

        let (ey0, ey1) = (px(EYE_BAND.0), px(EYE_BAND.1));
        let (pl, depth_l) = valley(&smooth, px(18.0), px(56.0), ey0, ey1, 5.0 * s);
        let (pr, depth_r) = valley(&smooth, px(56.0), px(94.0), ey0, ey1, 5.0 * s);
        if depth_l < MIN_VALLEY_DEPTH || depth_r < MIN_VALLEY_DEPTH {
            return Err(FaceModelError::LandmarkFailure(
                "no distinct pupil valley in the eye band".into(),
            ));
        }
        let spacing = pl.distance(pr);
        if spacing < 12.0 * s {
            return Err(FaceModelError::LandmarkFailure("pupil candidates coincide".into()));
        }

        // Similarity transform from canonical 112-grid points anchored on the pupils.
        let u = spacing / PUPIL_SPACING;
        let e = Point::new((pr.x - pl.x) / spacing, (pr.y - pl.y) / spacing);
        let n = Point::new(-e.y, e.x);
        let mid = pl.midpoint(pr);
        let t = |cx: f64, cy: f64| {
            let (a, b) = ((cx - PUPIL_MID_X) * u, (cy - PUPIL_ROW) * u);
            Point::new(mid.x + a * e.x + b * n.x, mid.y + a * e.y + b * n.y)
        };

        let mouth_map = gaussian_blur_raster(&luma(crop), s);
        let mouth = locate_mouth(crop, &mouth_map, t(56.0, 80.0), 10.0 * u, s);
        let template = LandmarkSet::canonical(CROP_SIZE);
        let shift = |p: Point| Point::new(p.x, p.y + mouth.dy);
        let mouth_mid = shift(t(56.0, 80.0));
        let half_gap = mouth.aperture / 2.0;
        let lm = LandmarkSet {
            pupil_l: pl,
            pupil_r: pr,
            eye_outer_l: t(30.0, 45.0),
            eye_inner_l: t(50.0, 45.0),
            eye_inner_r: t(62.0, 45.0),
            eye_outer_r: t(82.0, 45.0),
            lid_top_l: t(40.0, 42.0),
            lid_bot_l: t(40.0, 48.0),
            lid_top_r: t(72.0, 42.0),
            lid_bot_r: t(72.0, 48.0),
            brow_l: t(40.0, 36.0),
            brow_r: t(72.0, 36.0),
            nose_tip: t(56.0, 62.0),
            nose_base: t(56.0, 68.0),
            mouth_corner_l: shift(t(46.0, 80.0)),
            mouth_corner_r: shift(t(66.0, 80.0)),
            lip_top: Point::new(mouth_mid.x, mouth_mid.y - half_gap),
            lip_bot: Point::new(mouth_mid.x, mouth_mid.y + half_gap),
            chin: t(56.0, 95.0),
            contour: template.contour.iter().map(|p| t(p.x, p.y)).collect(),
        }
        .clamped(size);
        lm.validate(size)?;
        Ok(lm)
    }
}

struct MouthFit {
    /// Vertical correction of the template mouth line.
    dy: f64,
    /// Estimated lip gap in pixels.
    aperture: f64,
}

/// Mouth line from the strongest horizontal edge in the mouth band, refined to
/// the darkest nearby row; the dark run thickness beyond a closed-lip line is
/// read as aperture.
fn locate_mouth(crop: &ImageBuffer, smooth: &Raster, guess: Point, half_width: f64, s: f64) -> MouthFit {
    let size = crop.width().min(crop.height());
    let clampi = |v: f64| (v.round().max(0.0) as usize).min(size - 1);
    let (x0, x1) = (clampi(guess.x - half_width), clampi(guess.x + half_width));
    let (y0, y1) = (clampi(MOUTH_BAND.0 * s), clampi(MOUTH_BAND.1 * s));
    let fallback = MouthFit { dy: 0.0, aperture: 0.0 };
    if x1 <= x0 || y1 <= y0 {
        return fallback;
    }
    let Ok((_, gy)) = sobel(smooth) else {
        return fallback;
    };
    let row_mean = |r: &Raster, y: usize, abs: bool| {
        let sum: f64 = (x0..=x1).map(|x| if abs { r.get(x, y).abs() } else { r.get(x, y) }).sum();
        sum / (x1 - x0 + 1) as f64
    };
    let edge_row = (y0..=y1)
        .max_by(|&a, &b| row_mean(&gy, a, true).total_cmp(&row_mean(&gy, b, true)).then(b.cmp(&a)))
        .unwrap_or(y0);
    let (r0, r1) = (edge_row.saturating_sub(4).max(y0), (edge_row + 4).min(y1));
    let profile: Vec<f64> = (y0..=y1).map(|y| row_mean(smooth, y, false)).collect();
    let at = |y: usize| profile[y - y0];
    let dark_row = (r0..=r1)
        .min_by(|&a, &b| at(a).total_cmp(&at(b)).then(a.cmp(&b)))
        .unwrap_or(edge_row);
    let reference = median(profile.clone());
    let cut = (reference + at(dark_row)) / 2.0;
    if reference - at(dark_row) < MIN_VALLEY_DEPTH / 2.0 {
        return fallback;
    }
    let (mut top, mut bot) = (dark_row, dark_row);
    while top > y0 && at(top - 1) < cut {
        top -= 1;
    }
    while bot < y1 && at(bot + 1) < cut {
        bot += 1;
    }
    let thickness = (bot - top + 1) as f64;
    let centre = (top + bot) as f64 / 2.0;
    MouthFit {
        dy: centre - guess.y,
        aperture: (thickness - 6.0 * s).max(0.0),
    }
}
