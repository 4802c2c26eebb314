//! Color conversions. YCbCr is BT.601 full range.

use super::{quantize, ImageBuffer, ImageryError, Raster};

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

#[inline]
pub fn luma_of(rgb: [u8; 3]) -> f64 {
    KR * rgb[0] as f64 + KG * rgb[1] as f64 + KB * rgb[2] as f64
}

/// Rounded BT.601 luma of an RGB image.
pub fn to_grayscale(img: &ImageBuffer) -> Result<ImageBuffer, ImageryError> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| quantize(luma_of([p[0], p[1], p[2]])))
        .collect();
    ImageBuffer::new(img.width(), img.height(), 1, data)
}

/// Unquantized luma plane. Gray images pass through unchanged.
pub fn luma(img: &ImageBuffer) -> Raster {
    if img.channels() == 1 {
        return Raster::from_image(img);
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| luma_of([p[0], p[1], p[2]]))
        .collect();
    Raster::from_vec(img.width(), img.height(), data)
}

#[inline]
pub fn rgb_to_ycbcr(rgb: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (rgb[0] as f64, rgb[1] as f64, rgb[2] as f64);
    [
        KR * r + KG * g + KB * b,
        128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b,
        128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b,
    ]
}

#[inline]
pub fn ycbcr_to_rgb(ycc: [f64; 3]) -> [f64; 3] {
    let (y, cb, cr) = (ycc[0], ycc[1] - 128.0, ycc[2] - 128.0);
    [
        y + 1.402 * cr,
        y - 0.344_136 * cb - 0.714_136 * cr,
        y + 1.772 * cb,
    ]
}

pub fn to_ycbcr(img: &ImageBuffer) -> Result<ImageBuffer, ImageryError> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| rgb_to_ycbcr([p[0], p[1], p[2]]).map(quantize))
        .collect();
    ImageBuffer::new(img.width(), img.height(), 3, data)
}

pub fn from_ycbcr(img: &ImageBuffer) -> Result<ImageBuffer, ImageryError> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| ycbcr_to_rgb([p[0] as f64, p[1] as f64, p[2] as f64]).map(quantize))
        .collect();
    ImageBuffer::new(img.width(), img.height(), 3, data)
}

/// HSV with saturation and value in `[0, 1]`; hue in degrees.
#[inline]
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let (r, g, b) = (rgb[0] as f64, rgb[1] as f64, rgb[2] as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, v)
}

/// Normalized (r, g) chromaticity scaled to 0..255. Invariant to
/// multiplicative intensity changes, so shadows keep their chromaticity.
#[inline]
pub fn chromaticity(rgb: [u8; 3]) -> (f64, f64) {
    let sum = rgb[0] as f64 + rgb[1] as f64 + rgb[2] as f64;
    if sum == 0.0 {
        return (85.0, 85.0);
    }
    (255.0 * rgb[0] as f64 / sum, 255.0 * rgb[1] as f64 / sum)
}

/// Axis-aligned chroma box in the Cb/Cr plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChromaBox {
    pub cb: (f64, f64),
    pub cr: (f64, f64),
}

impl ChromaBox {
    /// Classical skin-chroma bounds Cb ∈ [77, 127], Cr ∈ [133, 173].
    pub const SKIN: ChromaBox = ChromaBox {
        cb: (77.0, 127.0),
        cr: (133.0, 173.0),
    };

    /// Grow each axis by `frac` of its width, split evenly between both ends.
    pub fn widened(self, frac: f64) -> ChromaBox {
        let gb = (self.cb.1 - self.cb.0) * frac / 2.0;
        let gr = (self.cr.1 - self.cr.0) * frac / 2.0;
        ChromaBox {
            cb: (self.cb.0 - gb, self.cb.1 + gb),
            cr: (self.cr.0 - gr, self.cr.1 + gr),
        }
    }

    #[inline]
    pub fn contains_chroma(&self, cb: f64, cr: f64) -> bool {
        cb >= self.cb.0 && cb <= self.cb.1 && cr >= self.cr.0 && cr <= self.cr.1
    }

    #[inline]
    pub fn contains(&self, rgb: [u8; 3]) -> bool {
        let [_, cb, cr] = rgb_to_ycbcr(rgb);
        self.contains_chroma(cb, cr)
    }
}
