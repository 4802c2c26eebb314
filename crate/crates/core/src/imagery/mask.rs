use super::{ImageryError, Raster};

/// Per-pixel boolean membership over a `width × height` grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegionMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask bit count");
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Pixels whose centers lie in the closed real rectangle.
    pub fn rect(width: usize, height: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::from_fn(width, height, |x, y| {
            let (px, py) = (x as f64, y as f64);
            px >= x0 && px <= x1 && py >= y0 && py <= y1
        })
    }

    /// Pixels whose centers lie inside the axis-aligned ellipse.
    pub fn ellipse(width: usize, height: usize, cx: f64, cy: f64, rx: f64, ry: f64) -> Self {
        Self::from_fn(width, height, |x, y| {
            let dx = (x as f64 - cx) / rx;
            let dy = (y as f64 - cy) / ry;
            dx * dx + dy * dy <= 1.0
        })
    }

    /// Even-odd fill of a closed polygon sampled at pixel centers.
    pub fn polygon(width: usize, height: usize, pts: &[(f64, f64)]) -> Self {
        let mut mask = Self::empty(width, height);
        if pts.len() < 3 {
            return mask;
        }
        for y in 0..height {
            let py = y as f64;
            let mut xs: Vec<f64> = Vec::new();
            for i in 0..pts.len() {
                let (ax, ay) = pts[i];
                let (bx, by) = pts[(i + 1) % pts.len()];
                if (ay <= py && by > py) || (by <= py && ay > py) {
                    xs.push(ax + (py - ay) / (by - ay) * (bx - ax));
                }
            }
            xs.sort_by(|a, b| a.partial_cmp(b).expect("finite polygon"));
            for pair in xs.chunks_exact(2) {
                let start = pair[0].ceil().max(0.0) as isize;
                let end = pair[1].floor().min(width as f64 - 1.0) as isize;
                for x in start..=end {
                    if x >= 0 {
                        mask.bits[y * width + x as usize] = true;
                    }
                }
            }
        }
        mask
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn pixel_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Linear indices of member pixels, in raster order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn check_dims(&self, width: usize, height: usize) -> Result<(), ImageryError> {
        if self.width != width || self.height != height {
            return Err(ImageryError::DimensionMismatch {
                expected: (width, height),
                found: (self.width, self.height),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &RegionMask, f: impl Fn(bool, bool) -> bool) -> RegionMask {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "mask dimensions differ"
        );
        RegionMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn subtract(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !(a && b))
    }

    /// Dilation by a Euclidean disc of the given radius.
    pub fn dilate(&self, radius: usize) -> RegionMask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as isize;
        let offsets: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
            .collect();
        let mut out = RegionMask::empty(self.width, self.height);
        let (w, h) = (self.width as isize, self.height as isize);
        for y in 0..h {
            for x in 0..w {
                if !self.bits[(y * w + x) as usize] {
                    continue;
                }
                for &(dx, dy) in &offsets {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < w && ny < h {
                        out.bits[(ny * w + nx) as usize] = true;
                    }
                }
            }
        }
        out
    }

    /// Bounding box `(x0, y0, x1, y1)` inclusive, or `None` when empty.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut b: Option<(usize, usize, usize, usize)> = None;
        for i in self.indices() {
            let (x, y) = (i % self.width, i / self.width);
            b = Some(match b {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        b
    }

    pub fn flip_horizontal(&self) -> RegionMask {
        RegionMask::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y)
        })
    }

    /// Mean and population variance of `values` over member pixels.
    pub fn mean_variance(&self, values: &Raster) -> Option<(f64, f64)> {
        let n = self.pixel_count();
        if n == 0 {
            return None;
        }
        let data = values.data();
        let mean = self.indices().map(|i| data[i]).sum::<f64>() / n as f64;
        let var = self
            .indices()
            .map(|i| (data[i] - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        Some((mean, var))
    }
}
