//! Sliding-window patch scoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcrop::{cells_bbox, highlight_values, patch_grid_dims, BinaryPatchGrid};
use crate::imagecore::{minmax_normalize_values, BBox};

/// Highlight rounds used when selecting patches.
pub const SELECT_HIGHLIGHT_ITERS: usize = 50;

/// Relative spread below which patch averages count as constant.
pub const FLAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub patch_size: u32,
    /// Window side, in patches.
    pub window_patches: usize,
    /// Stride, in patches.
    pub stride: usize,
    pub threshold: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { patch_size: 16, window_patches: 6, stride: 1, threshold: 0.5 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.window_patches == 0 || self.stride == 0 {
            return Err(Error::invalid("patch_size, window_patches and stride must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!("threshold {} not in [0,1]", self.threshold)));
        }
        Ok(())
    }
}

/// Window start indices along one axis with `patches` patches.
///
/// Covers `0, s, 2s, ..` up to and including `patches - w`, appending
/// `patches - w` when the stride skips it, so the trailing patches are always
/// covered. An axis shorter than a window gets a single start at 0.
fn axis_starts(patches: usize, window: usize, stride: usize) -> Vec<usize> {
    if patches <= window {
        return vec![0];
    }
    let last = patches - window;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    if starts.last() != Some(&last) {
        starts.push(last);
    }
    starts
}

/// All windows, row-major over their top-left patch, clamped to the image.
pub fn enumerate_windows(img_w: u32, img_h: u32, cfg: &WindowConfig) -> Result<Vec<BBox>> {
    cfg.validate()?;
    if img_w == 0 || img_h == 0 {
        return Err(Error::invalid("image must be non-empty"));
    }
    let n = cfg.patch_size;
    let (cols, rows) = patch_grid_dims(img_w, img_h, n);
    let w = cfg.window_patches as u32;
    let xs = axis_starts(cols, cfg.window_patches, cfg.stride);
    let ys = axis_starts(rows, cfg.window_patches, cfg.stride);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &j in &ys {
        for &i in &xs {
            let (i, j) = (i as u32, j as u32);
            out.push(BBox {
                x0: i * n,
                y0: j * n,
                x1: ((i + w) * n).min(img_w),
                y1: ((j + w) * n).min(img_h),
            });
        }
    }
    Ok(out)
}

/// Per-patch sum of window scores and the number of windows covering it.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    cols: usize,
    rows: usize,
    sums: Vec<f64>,
    coverage: Vec<u32>,
}

impl PatchGrid {
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn coverage(&self) -> &[u32] {
        &self.coverage
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Mean score per patch; uncovered patches read as 0.
    pub fn averages(&self) -> Vec<f64> {
        self.sums
            .iter()
            .zip(&self.coverage)
            .map(|(s, c)| if *c == 0 { 0.0 } else { s / f64::from(*c) })
            .collect()
    }

    /// Builds a grid directly from per-patch averages (coverage 1 everywhere).
    pub fn from_averages(cols: usize, rows: usize, averages: Vec<f64>) -> Result<Self> {
        if averages.len() != cols * rows {
            return Err(Error::invalid("average grid size mismatch"));
        }
        Ok(Self { cols, rows, coverage: vec![1; averages.len()], sums: averages })
    }
}

/// Adds each window's score to every patch it covers; see [`PatchGrid::averages`].
pub fn accumulate_patch_scores(
    windows: &[BBox],
    scores: &[f64],
    cfg: &WindowConfig,
    img_w: u32,
    img_h: u32,
) -> Result<PatchGrid> {
    if windows.len() != scores.len() {
        return Err(Error::invalid(format!(
            "{} windows but {} scores",
            windows.len(),
            scores.len()
        )));
    }
    if cfg.patch_size == 0 {
        return Err(Error::invalid("patch_size must be >= 1"));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite window score {s}")));
    }
    let n = cfg.patch_size;
    let (cols, rows) = patch_grid_dims(img_w, img_h, n);
    let mut sums = vec![0.0; cols * rows];
    let mut coverage = vec![0u32; cols * rows];
    for (win, score) in windows.iter().zip(scores) {
        if !win.fits(img_w, img_h) {
            return Err(Error::invalid(format!("window {win} outside {img_w}x{img_h} image")));
        }
        for row in (win.y0 / n) as usize..win.y1.div_ceil(n) as usize {
            for col in (win.x0 / n) as usize..win.x1.div_ceil(n) as usize {
                sums[row * cols + col] += score;
                coverage[row * cols + col] += 1;
            }
        }
    }
    Ok(PatchGrid { cols, rows, sums, coverage })
}

/// Min-max normalizes the patch averages, applies the mean-highlight
/// recursion, and keeps cells whose surviving value exceeds `threshold`.
pub fn select_patches(grid: &PatchGrid, threshold: f64) -> BinaryPatchGrid {
    let mut averages = grid.averages();
    let (lo, hi) = averages
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // Summing then dividing equal scores leaves ulp-level jitter; treat it as flat.
    if hi - lo <= FLAT_TOLERANCE * hi.abs().max(lo.abs()).max(1.0) {
        averages.iter_mut().for_each(|v| *v = lo);
    }
    let normalized = minmax_normalize_values(&averages);
    let highlighted = highlight_values(&normalized, SELECT_HIGHLIGHT_ITERS);
    let cells = highlighted.iter().map(|v| *v > threshold).collect();
    BinaryPatchGrid::new(grid.cols, grid.rows, cells).expect("grid dims are consistent")
}

/// Tight pixel box around every selected patch, or `None` when empty.
pub fn selection_bbox(sel: &BinaryPatchGrid, patch: u32, img_w: u32, img_h: u32) -> Option<BBox> {
    cells_bbox(&sel.selected(), patch, img_w, img_h)
}
