//! Image tensors, saliency maps and the numerical primitives shared by every
//! cropping strategy.

mod bbox;
mod blur;
mod io;
mod stats;

pub use bbox::BBox;
pub use blur::{default_sigma, gaussian_blur, gaussian_blur_plane, gaussian_kernel};
pub use io::{image_dimensions, load_image, save_image};
pub use stats::{mean, minmax_normalize, minmax_normalize_values, percentile_value};

use crate::error::{Error, Result};

/// Three-plane RGB image with values in `[0, 1]`, planes stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    width: u32,
    height: u32,
    planes: [Vec<f64>; 3],
}

impl ImageTensor {
    pub fn from_planes(width: u32, height: u32, planes: [Vec<f64>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        let n = width as usize * height as usize;
        for (c, p) in planes.iter().enumerate() {
            if p.len() != n {
                return Err(Error::invalid(format!(
                    "plane {c} has {} values, expected {n}",
                    p.len()
                )));
            }
            if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!("plane {c} holds {v}, outside [0,1]")));
            }
        }
        Ok(Self { width, height, planes })
    }

    /// Constant-colour image.
    pub fn filled(width: u32, height: u32, rgb: [f64; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::from_planes(width, height, rgb.map(|v| vec![v; n]))
    }

    /// Builds an image from a per-pixel function returning RGB.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [f64; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    planes[c].push(px[c]);
                }
            }
        }
        Self::from_planes(width, height, planes)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    pub fn full_box(&self) -> BBox {
        BBox::full(self.width, self.height)
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        let i = y as usize * self.width as usize + x as usize;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    pub(crate) fn set_pixel(&mut self, x: u32, y: u32, rgb: [f64; 3]) {
        let i = y as usize * self.width as usize + x as usize;
        for (plane, v) in self.planes.iter_mut().zip(rgb) {
            plane[i] = v;
        }
    }

    /// ITU-R BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
    pub fn luminance(&self) -> Vec<f64> {
        let [r, g, b] = &self.planes;
        r.iter()
            .zip(g)
            .zip(b)
            .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
            .collect()
    }
}

/// Copies the sub-image covered by `bbox`. The source is left untouched.
pub fn crop_image(img: &ImageTensor, bbox: BBox) -> Result<ImageTensor> {
    if !bbox.fits(img.width, img.height) {
        return Err(Error::invalid(format!(
            "box {bbox} outside {}x{} image",
            img.width, img.height
        )));
    }
    let (w, h) = (bbox.width(), bbox.height());
    let src_w = img.width as usize;
    let planes = img.planes.each_ref().map(|p| {
        let mut out = Vec::with_capacity(w as usize * h as usize);
        for y in bbox.y0..bbox.y1 {
            let row = y as usize * src_w;
            out.extend_from_slice(&p[row + bbox.x0 as usize..row + bbox.x1 as usize]);
        }
        out
    });
    Ok(ImageTensor { width: w, height: h, planes })
}

/// Single-channel non-negative map over pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "saliency map of {width}x{height} needs {} values, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("saliency value {v} is negative or non-finite")));
        }
        Ok(Self { width, height, values })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self { width, height, values: vec![0.0; width as usize * height as usize] }
    }

    pub(crate) fn from_raw(width: u32, height: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width as usize * height as usize);
        Self { width, height, values }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Row-major {0,1} mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::invalid("mask size does not match its dimensions"));
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_image(w: u32, h: u32) -> ImageTensor {
        ImageTensor::from_fn(w, h, |x, y| {
            [x as f64 / w as f64, y as f64 / h as f64, ((x + y) % 7) as f64 / 7.0]
        })
        .unwrap()
    }

    #[test]
    fn crop_full_box_is_identity() {
        let img = gradient_image(13, 9);
        assert_eq!(crop_image(&img, img.full_box()).unwrap(), img);
    }

    #[test]
    fn crop_offsets_pixels() {
        let img = gradient_image(100, 100);
        let out = crop_image(&img, BBox::new(10, 20, 30, 50).unwrap()).unwrap();
        assert_eq!((out.width(), out.height()), (20, 30));
        assert_eq!(out.pixel(0, 0), img.pixel(10, 20));
        assert_eq!(out.pixel(19, 29), img.pixel(29, 49));
    }

    #[test]
    fn crop_single_pixel() {
        let img = gradient_image(5, 5);
        let out = crop_image(&img, BBox::new(4, 4, 5, 5).unwrap()).unwrap();
        assert_eq!((out.width(), out.height()), (1, 1));
        assert_eq!(out.pixel(0, 0), img.pixel(4, 4));
    }

    #[test]
    fn crop_out_of_bounds_rejected() {
        let img = gradient_image(5, 5);
        let err = crop_image(&img, BBox::new(0, 0, 6, 5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn image_rejects_out_of_range_values() {
        assert!(ImageTensor::filled(2, 2, [0.5, 1.5, 0.0]).is_err());
        assert!(ImageTensor::from_planes(0, 2, [vec![], vec![], vec![]]).is_err());
    }

    #[test]
    fn saliency_rejects_negative() {
        assert!(SaliencyMap::new(2, 1, vec![0.0, -1.0]).is_err());
        assert!(SaliencyMap::new(2, 1, vec![0.0, f64::NAN]).is_err());
    }
}
