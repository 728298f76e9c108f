//! Recursive four-direction cropping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::BBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursiveConfig {
    /// Fraction of the cropped side kept at each step.
    pub ratio: f64,
    pub iterations: usize,
    /// Smallest side a candidate crop may have.
    pub min_side: u32,
}

impl Default for RecursiveConfig {
    fn default() -> Self {
        Self { ratio: 0.9, iterations: 20, min_side: 16 }
    }
}

impl RecursiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::invalid(format!("ratio {} not in (0,1)", self.ratio)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Top,
    Bottom,
    Left,
    Right,
}

impl Direction {
    /// Candidate order; earlier wins ties.
    pub const ALL: [Direction; 4] = [Direction::Top, Direction::Bottom, Direction::Left, Direction::Right];
}

fn round_half_up(v: f64) -> u32 {
    (v + 0.5).floor() as u32
}

/// Side length kept when shrinking `side` by `ratio`.
pub fn shrunk_side(side: u32, ratio: f64) -> u32 {
    round_half_up(ratio * f64::from(side))
}

/// The four crops keeping `ratio` of the height (top, bottom) or width
/// (left, right), each anchored at the named edge.
pub fn directional_crops(bbox: BBox, ratio: f64) -> Result<[BBox; 4]> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::invalid(format!("ratio {ratio} not in (0,1]")));
    }
    let h = shrunk_side(bbox.height(), ratio);
    let w = shrunk_side(bbox.width(), ratio);
    if h < 1 || w < 1 {
        return Err(Error::invalid(format!("ratio {ratio} collapses box {bbox}")));
    }
    Ok([
        BBox { y1: bbox.y0 + h, ..bbox },
        BBox { y0: bbox.y1 - h, ..bbox },
        BBox { x1: bbox.x0 + w, ..bbox },
        BBox { x0: bbox.x1 - w, ..bbox },
    ])
}

/// Whether another step from `bbox` stays above `min_side` and still shrinks.
pub(crate) fn can_step(bbox: &BBox, cfg: &RecursiveConfig) -> bool {
    [bbox.width(), bbox.height()].into_iter().all(|side| {
        let next = shrunk_side(side, cfg.ratio);
        next >= cfg.min_side.max(1) && next < side
    })
}

/// Index of the best score, earliest index on ties.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
