use super::ImageTensor;
use crate::error::{Error, Result};

/// OpenCV's sigma rule for a given kernel size:
/// `0.3 * ((k - 1) * 0.5 - 1) + 0.8`, 1.1 for k = 5.
pub fn default_sigma(kernel_size: usize) -> f64 {
    0.3 * ((kernel_size as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// 1-D Gaussian sampled at integer offsets `-k/2..=k/2`, normalized to sum 1.
pub fn gaussian_kernel(kernel_size: usize, sigma: f64) -> Result<Vec<f64>> {
    if kernel_size.is_multiple_of(2) {
        return Err(Error::invalid(format!("kernel size {kernel_size} must be odd")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma {sigma} must be positive")));
    }
    let radius = (kernel_size / 2) as i64;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Separable Gaussian blur of one row-major plane with edge replication.
pub fn gaussian_blur_plane(
    plane: &[f64],
    width: usize,
    height: usize,
    kernel_size: usize,
    sigma: f64,
) -> Result<Vec<f64>> {
    if plane.len() != width * height {
        return Err(Error::invalid("plane length does not match its dimensions"));
    }
    let kernel = gaussian_kernel(kernel_size, sigma)?;
    let radius = (kernel_size / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * row[clamp(x as isize + t as isize - radius, width)];
            }
            horizontal[y * width + x] = acc;
        }
    }

    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * horizontal[clamp(y as isize + t as isize - radius, height) * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    Ok(out)
}

/// Blurs each colour plane independently.
pub fn gaussian_blur(img: &ImageTensor, kernel_size: usize, sigma: f64) -> Result<ImageTensor> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut planes: [Vec<f64>; 3] = Default::default();
    for (dst, src) in planes.iter_mut().zip(img.planes()) {
        let mut p = gaussian_blur_plane(src, w, h, kernel_size, sigma)?;
        // unit-sum kernel keeps values in [0,1] up to rounding
        p.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        *dst = p;
    }
    ImageTensor::from_planes(img.width(), img.height(), planes)
}
