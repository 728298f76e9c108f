use std::path::Path;

use image::{DynamicImage, ImageBuffer, Rgb};

use super::ImageTensor;
use crate::error::{Error, Result};

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image { path: path.to_path_buf(), source }
}

/// Decodes an 8-bit PNG or JPEG into `[0,1]` RGB planes. Grayscale inputs are
/// promoted to three equal channels; alpha is dropped.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let rgb = image::open(path).map_err(image_err(path))?.to_rgb8();
    let (w, h) = rgb.dimensions();
    ImageTensor::from_fn(w, h, |x, y| rgb.get_pixel(x, y).0.map(|v| f64::from(v) / 255.0))
}

/// Reads only the header to get `(width, height)`.
pub fn image_dimensions(path: &Path) -> Result<(u32, u32)> {
    image::image_dimensions(path).map_err(image_err(path))
}

/// Encodes as 8-bit RGB; the format follows the file extension.
pub fn save_image(img: &ImageTensor, path: &Path) -> Result<()> {
    let buf = ImageBuffer::from_fn(img.width(), img.height(), |x, y| {
        Rgb(img.pixel(x, y).map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8))
    });
    DynamicImage::ImageRgb8(buf).save(path).map_err(image_err(path))
}
