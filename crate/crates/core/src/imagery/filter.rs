//! Spatial filtering. Every border lookup uses reflect-101 (`dcb|abcd|cba`).

use super::{quantize, ImageBuffer, ImageryError, Raster};

/// Odd-sized square kernel of real weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self, ImageryError> {
        if size < 3 || size.is_multiple_of(2) || weights.len() != size * size {
            return Err(ImageryError::InvalidKernel {
                size,
                weights: weights.len(),
            });
        }
        Ok(Self { size, weights })
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self, ImageryError> {
        Self::new(N, rows.iter().flatten().copied().collect())
    }

    /// 4-neighbour Laplacian `[[0,1,0],[1,-4,1],[0,1,0]]`.
    pub fn laplacian() -> Self {
        Self::from_rows([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]).unwrap()
    }

    pub fn sobel_x() -> Self {
        Self::from_rows([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]).unwrap()
    }

    pub fn sobel_y() -> Self {
        Self::from_rows([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]]).unwrap()
    }

    /// Center-minus-surround high pass `[[-1,-1,-1],[-1,8,-1],[-1,-1,-1]] / 8`.
    pub fn high_pass() -> Self {
        let mut w = vec![-1.0 / 8.0; 9];
        w[4] = 1.0;
        Self::new(3, w).unwrap()
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }
}

/// Reflect-101 index mapping for `i` in `[-n+1, 2n-2]`.
#[inline]
pub fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let mut i = i;
    while i < 0 || i >= n {
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * n - 2 - i;
        }
    }
    i as usize
}

/// Filter a single-channel image with `k`.
///
/// The kernel is applied as a correlation (filter2D semantics): an impulse
/// produces the kernel flipped about its center.
pub fn convolve(img: &ImageBuffer, k: &Kernel2D) -> Result<Raster, ImageryError> {
    img.require_channels(1)?;
    convolve_raster(&Raster::from_image(img), k)
}

pub fn convolve_raster(src: &Raster, k: &Kernel2D) -> Result<Raster, ImageryError> {
    let (w, h) = (src.width(), src.height());
    if w < k.size() || h < k.size() {
        return Err(ImageryError::KernelLargerThanImage {
            kernel: k.size(),
            width: w,
            height: h,
        });
    }
    let r = (k.size() / 2) as isize;
    let mut out = Raster::zeros(w, h);
    let data = src.data();
    for y in 0..h as isize {
        let interior_y = y >= r && y < h as isize - r;
        for x in 0..w as isize {
            let interior = interior_y && x >= r && x < w as isize - r;
            let mut acc = 0.0;
            for ky in 0..k.size() {
                let sy = y + ky as isize - r;
                let sy = if interior { sy as usize } else { reflect101(sy, h) };
                let row = sy * w;
                for kx in 0..k.size() {
                    let wgt = k.weight(ky, kx);
                    if wgt == 0.0 {
                        continue;
                    }
                    let sx = x + kx as isize - r;
                    let sx = if interior { sx as usize } else { reflect101(sx, w) };
                    acc += wgt * data[row + sx];
                }
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    Ok(out)
}

/// Sobel derivatives `(gx, gy)` of a real plane.
pub fn sobel(src: &Raster) -> Result<(Raster, Raster), ImageryError> {
    if src.width() < 3 || src.height() < 3 {
        return Err(ImageryError::ImageTooSmall {
            width: src.width(),
            height: src.height(),
            min: 3,
        });
    }
    Ok((
        convolve_raster(src, &Kernel2D::sobel_x())?,
        convolve_raster(src, &Kernel2D::sobel_y())?,
    ))
}

/// `sqrt(gx² + gy²)` with 3×3 Sobel operators.
pub fn gradient_magnitude(img: &ImageBuffer) -> Result<Raster, ImageryError> {
    img.require_channels(1)?;
    gradient_magnitude_raster(&Raster::from_image(img))
}

pub fn gradient_magnitude_raster(src: &Raster) -> Result<Raster, ImageryError> {
    let (gx, gy) = sobel(src)?;
    let data = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    Ok(Raster::from_vec(src.width(), src.height(), data))
}

/// Normalized 1-D Gaussian taps truncated at 3σ.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian smoothing of a real plane; `sigma <= 0` is the identity.
pub fn gaussian_blur_raster(src: &Raster, sigma: f64) -> Raster {
    if sigma <= 0.0 {
        return src.clone();
    }
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let (w, h) = (src.width(), src.height());
    let mut tmp = Raster::zeros(w, h);
    for y in 0..h {
        for x in 0..w as isize {
            let acc: f64 = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * src.get(reflect101(x + i as isize - r, w), y))
                .sum();
            tmp.set(x as usize, y, acc);
        }
    }
    let mut out = Raster::zeros(w, h);
    for y in 0..h as isize {
        for x in 0..w {
            let acc: f64 = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * tmp.get(x, reflect101(y + i as isize - r, h)))
                .sum();
            out.set(x, y as usize, acc);
        }
    }
    out
}

/// Split into per-channel real planes.
pub fn channel_planes(img: &ImageBuffer) -> Vec<Raster> {
    let c = img.channels();
    (0..c)
        .map(|ch| {
            let data = img.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
            Raster::from_vec(img.width(), img.height(), data)
        })
        .collect()
}

/// Recombine real planes into an 8-bit image (rounded, clamped).
pub fn merge_planes(planes: &[Raster]) -> ImageBuffer {
    let (w, h) = (planes[0].width(), planes[0].height());
    let mut data = Vec::with_capacity(w * h * planes.len());
    for i in 0..w * h {
        for p in planes {
            data.push(quantize(p.data()[i]));
        }
    }
    ImageBuffer::new(w, h, planes.len(), data).expect("planes share dimensions")
}

/// Gaussian blur of every channel.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> ImageBuffer {
    if sigma <= 0.0 {
        return img.clone();
    }
    let planes: Vec<Raster> = channel_planes(img)
        .iter()
        .map(|p| gaussian_blur_raster(p, sigma))
        .collect();
    merge_planes(&planes)
}

/// Bilinear resampling with half-pixel centers. Same-size resizes are exact copies.
pub fn resize_bilinear(img: &ImageBuffer, out_w: usize, out_h: usize) -> ImageBuffer {
    assert!(out_w > 0 && out_h > 0);
    if out_w == img.width() && out_h == img.height() {
        return img.clone();
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let src = img.data();
    let mut data = Vec::with_capacity(out_w * out_h * c);
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            for ch in 0..c {
                let p = |x: usize, y: usize| src[(y * w + x) * c + ch] as f64;
                let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
                let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
                data.push(quantize(top * (1.0 - ty) + bottom * ty));
            }
        }
    }
    ImageBuffer::new(out_w, out_h, c, data).expect("resize output dims are valid")
}
