//! ViT-token pooling and component extraction on the patch grid.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{mean, percentile_value, BBox, SaliencyMap};

/// Patch-level {0,1} grid, `cols = ceil(W/N)`, `rows = ceil(H/N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPatchGrid {
    cols: usize,
    rows: usize,
    cells: Vec<bool>,
}

impl BinaryPatchGrid {
    pub fn new(cols: usize, rows: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != cols * rows {
            return Err(Error::invalid(format!(
                "grid {cols}x{rows} needs {} cells, got {}",
                cols * rows,
                cells.len()
            )));
        }
        Ok(Self { cols, rows, cells })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Selected cells in row-major order.
    pub fn selected(&self) -> Vec<Cell> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(|(i, _)| Cell { row: i / self.cols, col: i % self.cols })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::invalid(format!("connectivity must be 4 or 8, got {other}"))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] =
            [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Grid dimensions for tiling a `width x height` map into `patch`-sized tiles.
pub fn patch_grid_dims(width: u32, height: u32, patch: u32) -> (usize, usize) {
    (width.div_ceil(patch) as usize, height.div_ceil(patch) as usize)
}

/// Pixel extent of one patch, clipped to the image.
pub fn patch_extent(cell: Cell, patch: u32, width: u32, height: u32) -> BBox {
    let x0 = cell.col as u32 * patch;
    let y0 = cell.row as u32 * patch;
    BBox {
        x0,
        y0,
        x1: (x0 + patch).min(width),
        y1: (y0 + patch).min(height),
    }
}

/// Per-patch representative = top `n_pool`% value (nearest-rank
/// `100 - n_pool` percentile); a cell is on iff its representative exceeds the
/// mean of all representatives.
pub fn token_pool(map: &SaliencyMap, patch: u32, n_pool: f64) -> Result<Vec<f64>> {
    if patch == 0 {
        return Err(Error::invalid("patch size must be >= 1"));
    }
    if !(n_pool > 0.0 && n_pool <= 100.0) {
        return Err(Error::invalid(format!("n_pool {n_pool} must be in (0,100]")));
    }
    let (w, h) = (map.width(), map.height());
    let (cols, rows) = patch_grid_dims(w, h, patch);
    let mut reps = Vec::with_capacity(cols * rows);
    let mut buf = Vec::with_capacity((patch * patch) as usize);
    for row in 0..rows {
        for col in 0..cols {
            let ext = patch_extent(Cell { row, col }, patch, w, h);
            buf.clear();
            for y in ext.y0..ext.y1 {
                for x in ext.x0..ext.x1 {
                    buf.push(map.get(x, y));
                }
            }
            reps.push(percentile_value(&buf, 100.0 - n_pool)?);
        }
    }
    Ok(reps)
}

pub fn token_pool_binarize(map: &SaliencyMap, patch: u32, n_pool: f64) -> Result<BinaryPatchGrid> {
    let reps = token_pool(map, patch, n_pool)?;
    let (cols, rows) = patch_grid_dims(map.width(), map.height(), patch);
    let m = mean(&reps);
    BinaryPatchGrid::new(cols, rows, reps.iter().map(|r| *r > m).collect())
}

/// Largest connected set of on-cells. Among equal sizes the component whose
/// first cell in row-major order comes earliest wins. Returned cells are in
/// row-major order; an empty grid yields an empty vector.
pub fn largest_component(grid: &BinaryPatchGrid, connectivity: Connectivity) -> Vec<Cell> {
    let (cols, rows) = (grid.cols, grid.rows);
    let mut seen = vec![false; cols * rows];
    let mut best: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..cols * rows {
        if !grid.cells[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            for (dr, dc) in connectivity.offsets() {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                let j = nr as usize * cols + nc as usize;
                if grid.cells[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best.into_iter().map(|i| Cell { row: i / cols, col: i % cols }).collect()
}

/// Tight pixel box of the cells' patch extents, grown by `expansion` about its
/// centre and clamped to the image.
pub fn component_bbox_expand(
    cells: &[Cell],
    patch: u32,
    expansion: f64,
    img_w: u32,
    img_h: u32,
) -> Result<BBox> {
    let tight = cells_bbox(cells, patch, img_w, img_h).ok_or(Error::NoRegion)?;
    tight.scale_about_center(expansion, img_w, img_h)
}

/// Smallest pixel rectangle covering every cell's (clipped) patch extent.
pub fn cells_bbox(cells: &[Cell], patch: u32, img_w: u32, img_h: u32) -> Option<BBox> {
    let first = cells.first()?;
    let mut acc = patch_extent(*first, patch, img_w, img_h);
    for c in &cells[1..] {
        let e = patch_extent(*c, patch, img_w, img_h);
        acc = BBox {
            x0: acc.x0.min(e.x0),
            y0: acc.y0.min(e.y0),
            x1: acc.x1.max(e.x1),
            y1: acc.y1.max(e.y1),
        };
    }
    Some(acc)
}
