use crate::imagery::RegionMask;

use super::{FaceModelError, LandmarkSet, Point};

const BACKGROUND_GAP: usize = 4;
const EYE_ZONE_GROWTH: f64 = 0.25;
/// Total scale of the surround relative to the eye zone (30% added per side).
const SURROUND_SCALE: f64 = 1.6;
const FOREHEAD_SPAN: f64 = 0.35;
/// Dilation of the eye opening ellipse carved out of the eye-zone rim.
const OPENING_PAD: f64 = 2.5;
/// Distance kept from the face outline by the frame-search regions, so the
/// outline's own edge is not mistaken for a frame.
const OUTLINE_INSET: usize = 3;

/// Named regions of a face crop. All masks share the crop dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionAtlas {
    pub face: RegionMask,
    pub background: RegionMask,
    pub eye_zone_l: RegionMask,
    pub eye_zone_r: RegionMask,
    /// Ring around the eye zones, minus the eye openings, the brows and the face outline.
    pub eye_surround: RegionMask,
    /// Eye zones minus the eye openings; where frame rims cross the eyes.
    pub eye_rim: RegionMask,
    pub forehead: RegionMask,
    pub lower_face: RegionMask,
    /// Face minus eye zones, brows and mouth.
    pub skin: RegionMask,
    /// Band just above the face contour used as the hair color reference.
    pub hair_band: RegionMask,
}

impl RegionAtlas {
    pub fn eye_zones(&self) -> RegionMask {
        self.eye_zone_l.union(&self.eye_zone_r)
    }

    pub fn size(&self) -> (usize, usize) {
        (self.face.width(), self.face.height())
    }
}

#[derive(Clone, Copy)]
struct Bounds {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Bounds {
    fn of(points: &[Point]) -> Self {
        let mut b = Bounds {
            x0: f64::INFINITY,
            y0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for p in points {
            b.x0 = b.x0.min(p.x);
            b.y0 = b.y0.min(p.y);
            b.x1 = b.x1.max(p.x);
            b.y1 = b.y1.max(p.y);
        }
        b
    }

    /// Grow by `frac` of the width and height on each side.
    fn grown(self, frac: f64) -> Self {
        let (dw, dh) = ((self.x1 - self.x0) * frac, (self.y1 - self.y0) * frac);
        Bounds {
            x0: self.x0 - dw,
            y0: self.y0 - dh,
            x1: self.x1 + dw,
            y1: self.y1 + dh,
        }
    }

    fn mask(self, size: usize) -> RegionMask {
        RegionMask::rect(size, size, self.x0, self.y0, self.x1, self.y1)
    }
}

fn row_band(size: usize, y0: f64, y1: f64) -> RegionMask {
    RegionMask::from_fn(size, size, |_, y| {
        let y = y as f64;
        y >= y0 && y <= y1
    })
}

fn eye_points(lm: &LandmarkSet, left: bool) -> [Point; 4] {
    if left {
        [lm.eye_outer_l, lm.eye_inner_l, lm.lid_top_l, lm.lid_bot_l]
    } else {
        [lm.eye_outer_r, lm.eye_inner_r, lm.lid_top_r, lm.lid_bot_r]
    }
}

fn eye_opening(size: usize, pts: [Point; 4]) -> RegionMask {
    let [outer, inner, top, bot] = pts;
    let c = outer.midpoint(inner);
    let cy = top.midpoint(bot).y;
    let rx = outer.distance(inner) / 2.0 + OPENING_PAD;
    let ry = top.distance(bot) / 2.0 + OPENING_PAD;
    RegionMask::ellipse(size, size, c.x, cy, rx, ry)
}

/// Derive all named regions of a `size`x`size` crop from its landmarks.
pub fn build_region_atlas(lm: &LandmarkSet, size: usize) -> Result<RegionAtlas, FaceModelError> {
    let brow_y = (lm.brow_l.y + lm.brow_r.y) / 2.0;
    if lm.chin.y <= brow_y {
        return Err(FaceModelError::DegenerateGeometry(format!(
            "chin row {} is not below the brow line {brow_y}",
            lm.chin.y
        )));
    }
    if lm.contour.len() < 3 {
        return Err(FaceModelError::DegenerateGeometry("contour has fewer than 3 points".into()));
    }
    let contour: Vec<(f64, f64)> = lm.contour.iter().map(|p| (p.x, p.y)).collect();
    let face = RegionMask::polygon(size, size, &contour);
    if face.is_empty() {
        return Err(FaceModelError::DegenerateGeometry("contour encloses no pixels".into()));
    }
    let background = face.dilate(BACKGROUND_GAP).complement();
    let interior = face.complement().dilate(OUTLINE_INSET).complement();

    let boxes = [true, false].map(|left| Bounds::of(&eye_points(lm, left)).grown(EYE_ZONE_GROWTH));
    let [eye_zone_l, eye_zone_r] = boxes.map(|b| b.mask(size).intersect(&face));
    let eye_zones = eye_zone_l.union(&eye_zone_r);
    let eye_w = (lm.eye_width_l() + lm.eye_width_r()) / 2.0;
    let brows = [lm.brow_l, lm.brow_r]
        .iter()
        .map(|b| {
            RegionMask::rect(size, size, b.x - 0.6 * eye_w, b.y - 0.2 * eye_w, b.x + 0.6 * eye_w, b.y + 0.2 * eye_w)
        })
        .fold(RegionMask::empty(size, size), |acc, m| acc.union(&m));
    let openings = eye_opening(size, eye_points(lm, true)).union(&eye_opening(size, eye_points(lm, false)));
    let surround_growth = (SURROUND_SCALE - 1.0) / 2.0;
    let eye_surround = boxes
        .iter()
        .map(|b| b.grown(surround_growth).mask(size))
        .fold(RegionMask::empty(size, size), |acc, m| acc.union(&m))
        .subtract(&eye_zones)
        .subtract(&openings)
        .subtract(&brows)
        .intersect(&interior);
    let eye_rim = eye_zones.subtract(&openings).intersect(&interior);

    let forehead_top = brow_y - FOREHEAD_SPAN * (lm.chin.y - brow_y);
    let forehead = row_band(size, forehead_top, brow_y).intersect(&face);
    let lower_face = row_band(size, lm.nose_base.y, lm.chin.y).intersect(&face);

    let mouth_pad = 0.15 * lm.mouth_width().max(1.0);
    let mb = Bounds::of(&[lm.mouth_corner_l, lm.mouth_corner_r, lm.lip_top, lm.lip_bot]);
    let mouth = RegionMask::rect(size, size, mb.x0 - mouth_pad, mb.y0 - mouth_pad, mb.x1 + mouth_pad, mb.y1 + mouth_pad);
    let skin = face.subtract(&eye_zones).subtract(&brows).subtract(&mouth);

    let hair_band = match face.bounds() {
        Some((x0, top, x1, _)) => {
            let depth = 0.08 * size as f64;
            let span = (x1 - x0) as f64 * 0.2;
            RegionMask::rect(size, size, x0 as f64 + span, top as f64 - depth, x1 as f64 - span, top as f64 + depth)
                .subtract(&face.dilate(1))
        }
        None => RegionMask::empty(size, size),
    };

    Ok(RegionAtlas {
        face,
        background,
        eye_zone_l,
        eye_zone_r,
        eye_surround,
        eye_rim,
        forehead,
        lower_face,
        skin,
        hair_band,
    })
}
