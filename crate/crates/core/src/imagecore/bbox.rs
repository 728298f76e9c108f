use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`, never empty.
///
/// Serialized as `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::invalid(format!("degenerate box ({x0},{y0},{x1},{y1})")));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// Box covering a whole `width x height` image.
    pub fn full(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        Self { x0: 0, y0: 0, x1: width, y1: height }
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Whether the box lies inside a `width x height` image.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= f64::from(self.x0) && x < f64::from(self.x1) && y >= f64::from(self.y0) && y < f64::from(self.y1)
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 < x1 && y0 < y1).then_some(BBox { x0, y0, x1, y1 })
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        self.intersection(other).map_or(0, |b| b.area())
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.x0) + f64::from(self.x1)) / 2.0,
            (f64::from(self.y0) + f64::from(self.y1)) / 2.0,
        )
    }

    /// Translates a box expressed inside `self` back into the parent frame.
    pub fn offset_by(&self, origin: &BBox) -> BBox {
        BBox {
            x0: self.x0 + origin.x0,
            y0: self.y0 + origin.y0,
            x1: self.x1 + origin.x0,
            y1: self.y1 + origin.y0,
        }
    }

    /// Scales width and height by `factor` about the centre, rounding outward,
    /// then clamps to the image.
    pub fn scale_about_center(&self, factor: f64, width: u32, height: u32) -> Result<BBox> {
        if !(factor >= 1.0 && factor.is_finite()) {
            return Err(Error::invalid(format!("expansion factor {factor} must be >= 1")));
        }
        if !self.fits(width, height) {
            return Err(Error::invalid(format!("box {self} outside {width}x{height} image")));
        }
        let axis = |lo: u32, hi: u32, limit: u32| {
            let (lo, hi) = (f64::from(lo), f64::from(hi));
            let center = (lo + hi) / 2.0;
            let half = factor * (hi - lo) / 2.0;
            // Tolerance keeps exact binary fractions from rounding outward twice.
            let a = ((center - half) + 1e-9).floor().max(0.0);
            let b = ((center + half) - 1e-9).ceil().min(f64::from(limit));
            (a as u32, b as u32)
        };
        let (x0, x1) = axis(self.x0, self.x1, width);
        let (y0, y1) = axis(self.y0, self.y1, height);
        BBox::new(x0.min(self.x0), y0.min(self.y0), x1.max(self.x1), y1.max(self.y1))
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{}]", self.x0, self.y0, self.x1, self.y1)
    }
}

impl TryFrom<[u32; 4]> for BBox {
    type Error = Error;

    fn try_from([x0, y0, x1, y1]: [u32; 4]) -> Result<Self> {
        BBox::new(x0, y0, x1, y1)
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

impl std::str::FromStr for BBox {
    type Err = Error;

    /// Parses `x0,y0,x1,y1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::invalid(format!("bad box {s:?}: {e}")))?;
        let arr: [u32; 4] = parts
            .try_into()
            .map_err(|_| Error::invalid(format!("box {s:?} needs four integers")))?;
        BBox::try_from(arr)
    }
}
