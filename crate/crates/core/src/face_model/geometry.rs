use serde::{Deserialize, Serialize};

use super::FaceModelError;

/// Edge length of the normalized face crop.
pub const CROP_SIZE: usize = 112;

/// Minimum face box edge in source pixels.
pub const MIN_BOX_EDGE: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    fn mirrored(self, width: f64) -> Point {
        Point::new(width - self.x, self.y)
    }

    fn scaled(self, factor: f64) -> Point {
        Point::new(self.x * factor, self.y * factor)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Face bounding box in source-image pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

impl FaceBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, confidence: f64) -> Result<Self, FaceModelError> {
        let b = Self {
            x,
            y,
            w,
            h,
            confidence,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), FaceModelError> {
        let finite = [self.x, self.y, self.w, self.h, self.confidence]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.w < MIN_BOX_EDGE || self.h < MIN_BOX_EDGE {
            return Err(FaceModelError::InvalidBox(format!(
                "box {}x{} must be finite with edges >= {MIN_BOX_EDGE}",
                self.w, self.h
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(FaceModelError::InvalidBox(format!(
                "confidence {} outside [0,1]",
                self.confidence
            )));
        }
        Ok(())
    }

    /// Integer pixel rectangle `(x0, y0, x1, y1)` (exclusive end) after expanding
    /// by `margin` and clamping to a `width`x`height` image.
    pub fn expanded_clamped(
        &self,
        margin: f64,
        width: usize,
        height: usize,
    ) -> Option<(usize, usize, usize, usize)> {
        let clamp = |v: f64, hi: usize| v.max(0.0).min(hi as f64) as usize;
        let x0 = clamp((self.x - margin).floor(), width);
        let y0 = clamp((self.y - margin).floor(), height);
        let x1 = clamp((self.x + self.w + margin).ceil(), width);
        let y1 = clamp((self.y + self.h + margin).ceil(), height);
        (x1 > x0 && y1 > y0).then_some((x0, y0, x1, y1))
    }
}

/// Named facial keypoints in crop coordinates. `_l` is image-left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkSet {
    pub pupil_l: Point,
    pub pupil_r: Point,
    pub eye_outer_l: Point,
    pub eye_inner_l: Point,
    pub eye_inner_r: Point,
    pub eye_outer_r: Point,
    pub lid_top_l: Point,
    pub lid_bot_l: Point,
    pub lid_top_r: Point,
    pub lid_bot_r: Point,
    pub brow_l: Point,
    pub brow_r: Point,
    pub nose_tip: Point,
    pub nose_base: Point,
    pub mouth_corner_l: Point,
    pub mouth_corner_r: Point,
    pub lip_top: Point,
    pub lip_bot: Point,
    pub chin: Point,
    pub contour: Vec<Point>,
}

impl LandmarkSet {
    /// Canonical frontal layout scaled to a `size`x`size` crop.
    pub fn canonical(size: usize) -> Self {
        let s = size as f64 / CROP_SIZE as f64;
        let p = |x: f64, y: f64| Point::new(x * s, y * s);
        let contour = (0..16)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 16.0;
                p(56.0 + 34.0 * t.cos(), 58.0 + 37.0 * t.sin())
            })
            .collect();
        Self {
            pupil_l: p(40.0, 45.0),
            pupil_r: p(72.0, 45.0),
            eye_outer_l: p(30.0, 45.0),
            eye_inner_l: p(50.0, 45.0),
            eye_inner_r: p(62.0, 45.0),
            eye_outer_r: p(82.0, 45.0),
            lid_top_l: p(40.0, 42.0),
            lid_bot_l: p(40.0, 48.0),
            lid_top_r: p(72.0, 42.0),
            lid_bot_r: p(72.0, 48.0),
            brow_l: p(40.0, 36.0),
            brow_r: p(72.0, 36.0),
            nose_tip: p(56.0, 62.0),
            nose_base: p(56.0, 68.0),
            mouth_corner_l: p(46.0, 80.0),
            mouth_corner_r: p(66.0, 80.0),
            lip_top: p(56.0, 80.0),
            lip_bot: p(56.0, 80.0),
            chin: p(56.0, 95.0),
            contour,
        }
    }

    fn named(&self) -> [(&'static str, Point); 19] {
        [
            ("pupil_l", self.pupil_l),
            ("pupil_r", self.pupil_r),
            ("eye_outer_l", self.eye_outer_l),
            ("eye_inner_l", self.eye_inner_l),
            ("eye_inner_r", self.eye_inner_r),
            ("eye_outer_r", self.eye_outer_r),
            ("lid_top_l", self.lid_top_l),
            ("lid_bot_l", self.lid_bot_l),
            ("lid_top_r", self.lid_top_r),
            ("lid_bot_r", self.lid_bot_r),
            ("brow_l", self.brow_l),
            ("brow_r", self.brow_r),
            ("nose_tip", self.nose_tip),
            ("nose_base", self.nose_base),
            ("mouth_corner_l", self.mouth_corner_l),
            ("mouth_corner_r", self.mouth_corner_r),
            ("lip_top", self.lip_top),
            ("lip_bot", self.lip_bot),
            ("chin", self.chin),
        ]
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        Self {
            pupil_l: f(self.pupil_l),
            pupil_r: f(self.pupil_r),
            eye_outer_l: f(self.eye_outer_l),
            eye_inner_l: f(self.eye_inner_l),
            eye_inner_r: f(self.eye_inner_r),
            eye_outer_r: f(self.eye_outer_r),
            lid_top_l: f(self.lid_top_l),
            lid_bot_l: f(self.lid_bot_l),
            lid_top_r: f(self.lid_top_r),
            lid_bot_r: f(self.lid_bot_r),
            brow_l: f(self.brow_l),
            brow_r: f(self.brow_r),
            nose_tip: f(self.nose_tip),
            nose_base: f(self.nose_base),
            mouth_corner_l: f(self.mouth_corner_l),
            mouth_corner_r: f(self.mouth_corner_r),
            lip_top: f(self.lip_top),
            lip_bot: f(self.lip_bot),
            chin: f(self.chin),
            contour: self.contour.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_points(|p| p.scaled(factor))
    }

    /// Clamp every point into `[0, size - 1]`.
    pub fn clamped(&self, size: usize) -> Self {
        let hi = (size - 1) as f64;
        self.map_points(|p| Point::new(p.x.clamp(0.0, hi), p.y.clamp(0.0, hi)))
    }

    /// Mirror about the vertical axis of a `width`-wide crop, swapping left and right.
    pub fn mirrored(&self, width: f64) -> Self {
        let m = |p: Point| p.mirrored(width);
        let mut contour: Vec<Point> = self.contour.iter().map(|&p| m(p)).collect();
        contour.reverse();
        Self {
            pupil_l: m(self.pupil_r),
            pupil_r: m(self.pupil_l),
            eye_outer_l: m(self.eye_outer_r),
            eye_inner_l: m(self.eye_inner_r),
            eye_inner_r: m(self.eye_inner_l),
            eye_outer_r: m(self.eye_outer_l),
            lid_top_l: m(self.lid_top_r),
            lid_bot_l: m(self.lid_bot_r),
            lid_top_r: m(self.lid_top_l),
            lid_bot_r: m(self.lid_bot_l),
            brow_l: m(self.brow_r),
            brow_r: m(self.brow_l),
            nose_tip: m(self.nose_tip),
            nose_base: m(self.nose_base),
            mouth_corner_l: m(self.mouth_corner_r),
            mouth_corner_r: m(self.mouth_corner_l),
            lip_top: m(self.lip_top),
            lip_bot: m(self.lip_bot),
            chin: m(self.chin),
            contour,
        }
    }

    pub fn eye_width_l(&self) -> f64 {
        self.eye_outer_l.distance(self.eye_inner_l)
    }

    pub fn eye_width_r(&self) -> f64 {
        self.eye_outer_r.distance(self.eye_inner_r)
    }

    pub fn mouth_width(&self) -> f64 {
        self.mouth_corner_l.distance(self.mouth_corner_r)
    }

    /// Check the set against a `size`x`size` crop: finite points inside the
    /// crop, consistent eye ordering and a simple contour of at least 8 points.
    pub fn validate(&self, size: usize) -> Result<(), FaceModelError> {
        let hi = size as f64;
        let inside = |p: Point| p.x.is_finite() && p.y.is_finite() && (0.0..=hi).contains(&p.x) && (0.0..=hi).contains(&p.y);
        for (name, p) in self.named() {
            if !inside(p) {
                return Err(FaceModelError::InvalidLandmarks(format!(
                    "{name} ({}, {}) lies outside the {size}x{size} crop",
                    p.x, p.y
                )));
            }
        }
        if let Some(p) = self.contour.iter().find(|p| !inside(**p)) {
            return Err(FaceModelError::InvalidLandmarks(format!(
                "contour point ({}, {}) lies outside the crop",
                p.x, p.y
            )));
        }
        if self.eye_inner_l.x >= self.eye_inner_r.x {
            return Err(FaceModelError::InvalidLandmarks(
                "eye_inner_l must lie left of eye_inner_r".into(),
            ));
        }
        if self.contour.len() < 8 {
            return Err(FaceModelError::InvalidLandmarks(format!(
                "contour has {} points, need at least 8",
                self.contour.len()
            )));
        }
        if !is_simple_polygon(&self.contour) {
            return Err(FaceModelError::InvalidLandmarks(
                "contour polygon self-intersects".into(),
            ));
        }
        Ok(())
    }
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2) = (orientation(a, b, c), orientation(a, b, d));
    let (o3, o4) = (orientation(c, d, a), orientation(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// True when no two non-adjacent edges of the closed polygon touch.
pub fn is_simple_polygon(pts: &[Point]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(a, b, pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Head orientation in degrees, each in [-90, 90].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl PoseAngles {
    pub fn validate(&self) -> Result<(), FaceModelError> {
        for (name, v) in [("roll", self.roll), ("pitch", self.pitch), ("yaw", self.yaw)] {
            if !(-90.0..=90.0).contains(&v) {
                return Err(FaceModelError::InvalidPose(format!("{name} {v} outside [-90, 90]")));
            }
        }
        Ok(())
    }
}
