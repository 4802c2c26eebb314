//! Pixel-level primitives shared by every quality test.

mod buffer;
mod color;
mod components;
mod filter;
mod histogram;
mod io;
mod kmeans;
mod mask;

pub use buffer::{quantize, ImageBuffer, Raster};
pub use color::{
    chromaticity, from_ycbcr, luma, luma_of, rgb_to_hsv, rgb_to_ycbcr, to_grayscale, to_ycbcr,
    ycbcr_to_rgb, ChromaBox,
};
pub use components::{
    connected_components, label_components, remove_small_components, BoundingBox, Component,
    ComponentLabels,
};
pub use filter::{
    channel_planes, convolve, convolve_raster, gaussian_blur, gaussian_blur_raster,
    gaussian_taps, gradient_magnitude, gradient_magnitude_raster, merge_planes, reflect101,
    resize_bilinear, sobel, Kernel2D,
};
pub use histogram::{histogram, percentile, Histogram};
pub use io::{decode_image, encode_png, load_image, save_png};
pub use kmeans::{kmeans, KMeans};
pub use mask::RegionMask;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageryError {
    #[error("invalid image dimensions {width}x{height}x{channels} for {len} samples")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },
    #[error("expected {expected} channel(s), found {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("kernel of size {kernel} does not fit a {width}x{height} image")]
    KernelLargerThanImage {
        kernel: usize,
        width: usize,
        height: usize,
    },
    #[error("kernel size {size} with {weights} weights is not an odd square >= 3")]
    InvalidKernel { size: usize, weights: usize },
    #[error("image {width}x{height} is smaller than {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("mask is {found:?}, image is {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("region selects no pixels")]
    EmptyRegion,
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("{samples} samples cannot form {k} clusters")]
    TooFewSamples { samples: usize, k: usize },
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
