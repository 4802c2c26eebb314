use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, ImageReader};

use super::{ImageBuffer, ImageryError};

/// Decode a PNG or JPEG file into 8-bit RGB; alpha is dropped, gray expanded.
pub fn load_image(path: &Path) -> Result<ImageBuffer, ImageryError> {
    let bytes = fs::read(path)?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer, ImageryError> {
    let format = image::guess_format(bytes).map_err(|e| ImageryError::Decode(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(ImageryError::Decode(format!(
            "unsupported image format {format:?}"
        )));
    }
    let decoded = ImageReader::with_format(Cursor::new(bytes), format)
        .decode()
        .map_err(|e| ImageryError::Decode(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ImageBuffer::new(w, h, 3, rgb.into_raw())
}

/// Encode as PNG (gray or RGB).
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>, ImageryError> {
    let color = if img.channels() == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    let mut out = Vec::new();
    image::write_buffer_with_format(
        &mut Cursor::new(&mut out),
        img.data(),
        img.width() as u32,
        img.height() as u32,
        color,
        ImageFormat::Png,
    )
    .map_err(|e| ImageryError::Encode(e.to_string()))?;
    Ok(out)
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<(), ImageryError> {
    fs::write(path, encode_png(img)?)?;
    Ok(())
}
