use super::ImageryError;

/// Owned row-major 8-bit raster with one (gray) or three (RGB) channels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<u8>,
    ) -> Result<Self, ImageryError> {
        if width == 0
            || height == 0
            || !(channels == 1 || channels == 3)
            || data.len() != width * height * channels
        {
            return Err(ImageryError::InvalidDimensions {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Solid RGB image.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::from_fn_rgb(width, height, |_, _| rgb)
    }

    pub fn from_fn_rgb(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn from_fn_gray(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            channels: 1,
            data,
        }
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
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn len_pixels(&self) -> usize {
        self.width * self.height
    }

    /// RGB triple at (x, y). Single-channel images replicate the gray value.
    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 3 {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        } else {
            let v = self.data[i];
            [v, v, v]
        }
    }

    #[inline]
    pub fn rgb_at(&self, index: usize) -> [u8; 3] {
        self.rgb(index % self.width, index / self.width)
    }

    /// First channel value at (x, y).
    #[inline]
    pub fn value(&self, x: usize, y: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels]
    }

    #[inline]
    pub fn put_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        debug_assert_eq!(self.channels, 3);
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    #[inline]
    pub fn put_rgb_at(&mut self, index: usize, rgb: [u8; 3]) {
        let i = index * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub(crate) fn require_channels(&self, expected: usize) -> Result<(), ImageryError> {
        if self.channels != expected {
            return Err(ImageryError::ChannelMismatch {
                expected,
                found: self.channels,
            });
        }
        Ok(())
    }

    /// Copy of the rectangle `[x, x+w) × [y, y+h)`; panics when out of bounds.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> ImageBuffer {
        assert!(x + w <= self.width && y + h <= self.height && w > 0 && h > 0);
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        ImageBuffer {
            width: w,
            height: h,
            channels: self.channels,
            data,
        }
    }

    /// Mirror left/right.
    pub fn flip_horizontal(&self) -> ImageBuffer {
        let mut out = self.clone();
        let c = self.channels;
        for y in 0..self.height {
            for x in 0..self.width {
                let src = (y * self.width + (self.width - 1 - x)) * c;
                let dst = (y * self.width + x) * c;
                out.data[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
            }
        }
        out
    }

    /// Nearest-neighbour integer upscale.
    pub fn upscale_nearest(&self, factor: usize) -> ImageBuffer {
        assert!(factor >= 1);
        let (w, h, c) = (self.width * factor, self.height * factor, self.channels);
        let mut data = Vec::with_capacity(w * h * c);
        for y in 0..h {
            for x in 0..w {
                let i = ((y / factor) * self.width + x / factor) * c;
                data.extend_from_slice(&self.data[i..i + c]);
            }
        }
        ImageBuffer {
            width: w,
            height: h,
            channels: c,
            data,
        }
    }
}

/// Real-valued single-plane raster; all intermediate arithmetic happens here.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Promote the first channel of an 8-bit image.
    pub fn from_image(img: &ImageBuffer) -> Self {
        Self::from_fn(img.width(), img.height(), |x, y| img.value(x, y) as f64)
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
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Round and clamp to an 8-bit gray image.
    pub fn to_image(&self) -> ImageBuffer {
        let data = self.data.iter().map(|&v| quantize(v)).collect();
        ImageBuffer::new(self.width, self.height, 1, data).expect("raster dims are valid")
    }
}

/// Round half away from zero and clamp to `0..=255`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
