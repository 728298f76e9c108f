//! Similarity-driven cropping: sliding-window patch scoring (clip-w) and
//! recursive directional cropping (clip-r). Both talk to a [`Scorer`].

mod recursive;
mod scorer;
mod window;

pub use recursive::{directional_crops, shrunk_side, Direction, RecursiveConfig};
pub use scorer::{
    serve, ClientMessage, ConstantScorer, FnScorer, HelloReply, OverlapScorer, ScoreQuery, ScoreReply, Scorer,
    ScorerSession, ServeStats, DEFAULT_TIMEOUT, PROTOCOL_VERSION,
};
pub use window::{
    accumulate_patch_scores, enumerate_windows, select_patches, selection_bbox, PatchGrid, WindowConfig,
    SELECT_HIGHLIGHT_ITERS,
};

use std::path::Path;

use crate::error::Result;
use crate::gradcrop::BinaryPatchGrid;
use crate::imagecore::{image_dimensions, BBox};

#[derive(Debug, Clone)]
pub struct ClipWOutcome {
    pub bbox: BBox,
    pub windows: Vec<BBox>,
    pub grid: PatchGrid,
    pub selection: BinaryPatchGrid,
    pub fallback: bool,
}

/// Sliding-window crop of the image at `image_path`.
pub fn clip_w_crop(image_path: &Path, prompt: &str, scorer: &mut dyn Scorer, cfg: &WindowConfig) -> Result<BBox> {
    let (w, h) = image_dimensions(image_path)?;
    clip_w_crop_sized(image_path, w, h, prompt, scorer, cfg).map(|o| o.bbox)
}

/// [`clip_w_crop`] with known image dimensions.
pub fn clip_w_crop_sized(
    image_path: &Path,
    img_w: u32,
    img_h: u32,
    prompt: &str,
    scorer: &mut dyn Scorer,
    cfg: &WindowConfig,
) -> Result<ClipWOutcome> {
    let windows = enumerate_windows(img_w, img_h, cfg)?;
    let scores = scorer.score_regions(image_path, prompt, &windows)?;
    let grid = accumulate_patch_scores(&windows, &scores, cfg, img_w, img_h)?;
    let selection = select_patches(&grid, cfg.threshold);
    let (bbox, fallback) = match selection_bbox(&selection, cfg.patch_size, img_w, img_h) {
        Some(b) => (b, false),
        None => (BBox::full(img_w, img_h), true),
    };
    Ok(ClipWOutcome { bbox, windows, grid, selection, fallback })
}

/// Recursive crop of the image at `image_path`; returns the final box.
pub fn clip_r_crop(image_path: &Path, prompt: &str, scorer: &mut dyn Scorer, cfg: &RecursiveConfig) -> Result<BBox> {
    let (w, h) = image_dimensions(image_path)?;
    let trace = clip_r_trace(image_path, w, h, prompt, scorer, cfg)?;
    Ok(*trace.last().expect("trace starts with the full image"))
}

/// Every box visited by clip-r, starting with the full image. Each entry is
/// strictly inside its predecessor.
pub fn clip_r_trace(
    image_path: &Path,
    img_w: u32,
    img_h: u32,
    prompt: &str,
    scorer: &mut dyn Scorer,
    cfg: &RecursiveConfig,
) -> Result<Vec<BBox>> {
    cfg.validate()?;
    let mut current = BBox::full(img_w, img_h);
    let mut trace = vec![current];
    for _ in 0..cfg.iterations {
        if !recursive::can_step(&current, cfg) {
            break;
        }
        let candidates = directional_crops(current, cfg.ratio)?;
        let scores = scorer.score_regions(image_path, prompt, &candidates)?;
        if scores.len() != candidates.len() {
            return Err(crate::Error::Protocol(format!("expected 4 scores, got {}", scores.len())));
        }
        current = candidates[recursive::argmax_first(&scores)];
        trace.push(current);
    }
    Ok(trace)
}
