//! Gradient-based cropping.
//!
//! Pipeline: combine channel gradients → discard outliers and normalize →
//! recursive highlighting → high-frequency mask → ViT token pooling →
//! largest connected component → expanded bounding box.

mod bundle;
mod pooling;
mod saliency;

pub use bundle::{BundleMeta, GradientBundle, MAGIC, VERSION};
pub use pooling::{
    cells_bbox, component_bbox_expand, largest_component, patch_extent, patch_grid_dims, token_pool,
    token_pool_binarize, BinaryPatchGrid, Cell, Connectivity,
};
pub(crate) use saliency::highlight_values;
pub use saliency::{apply_mask, combine_gradients, discard_and_normalize, high_pass_mask, highlight};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{default_sigma, BBox, ImageTensor, SaliencyMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradConfig {
    /// Percent trimmed from each tail before normalization.
    pub k_discard: f64,
    pub kernel_size: usize,
    pub sigma: f64,
    /// ViT token size in pixels.
    pub patch_size: u32,
    /// Top percent of each patch used as its representative.
    pub n_pool: f64,
    pub expansion: f64,
    pub connectivity: Connectivity,
    pub enable_highlighting: bool,
    pub enable_highpass: bool,
    pub max_highlight_iters: usize,
}

impl Default for GradConfig {
    fn default() -> Self {
        Self {
            k_discard: 1.0,
            kernel_size: 5,
            sigma: default_sigma(5),
            patch_size: 16,
            n_pool: 5.0,
            expansion: 1.5,
            connectivity: Connectivity::Four,
            enable_highlighting: true,
            enable_highpass: true,
            max_highlight_iters: 50,
        }
    }
}

impl GradConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..50.0).contains(&self.k_discard) {
            return Err(Error::invalid(format!("k_discard {} not in [0,50)", self.k_discard)));
        }
        if !(self.n_pool > 0.0 && self.n_pool <= 100.0) {
            return Err(Error::invalid(format!("n_pool {} not in (0,100]", self.n_pool)));
        }
        if !(self.expansion >= 1.0 && self.expansion.is_finite()) {
            return Err(Error::invalid(format!("expansion {} must be >= 1", self.expansion)));
        }
        if self.patch_size == 0 {
            return Err(Error::invalid("patch_size must be >= 1"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel_size {} must be odd", self.kernel_size)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma {} must be positive", self.sigma)));
        }
        Ok(())
    }
}

/// Intermediate products of one [`grad_crop`] run, kept for debugging and
/// overlays.
#[derive(Debug, Clone)]
pub struct GradCropTrace {
    pub saliency: SaliencyMap,
    pub grid: BinaryPatchGrid,
    pub component: Vec<Cell>,
    pub bbox: BBox,
    /// True when no region survived and the full image was returned.
    pub fallback: bool,
}

pub fn grad_crop(img: &ImageTensor, bundle: &GradientBundle, cfg: &GradConfig) -> Result<BBox> {
    grad_crop_trace(img, bundle, cfg).map(|t| t.bbox)
}

pub fn grad_crop_trace(img: &ImageTensor, bundle: &GradientBundle, cfg: &GradConfig) -> Result<GradCropTrace> {
    cfg.validate()?;
    if (img.width(), img.height()) != (bundle.width(), bundle.height()) {
        return Err(Error::invalid(format!(
            "image is {}x{} but gradients are {}x{}",
            img.width(),
            img.height(),
            bundle.width(),
            bundle.height()
        )));
    }
    let mut map = discard_and_normalize(&combine_gradients(bundle)?, cfg.k_discard)?;
    if cfg.enable_highlighting {
        map = highlight(&map, cfg.max_highlight_iters);
    }
    if cfg.enable_highpass {
        map = apply_mask(&map, &high_pass_mask(img, cfg.kernel_size, cfg.sigma)?)?;
    }
    let grid = token_pool_binarize(&map, cfg.patch_size, cfg.n_pool)?;
    let component = largest_component(&grid, cfg.connectivity);
    let (bbox, fallback) =
        match component_bbox_expand(&component, cfg.patch_size, cfg.expansion, img.width(), img.height()) {
            Ok(b) => (b, false),
            Err(Error::NoRegion) => (img.full_box(), true),
            Err(e) => return Err(e),
        };
    Ok(GradCropTrace { saliency: map, grid, component, bbox, fallback })
}
