//! Box overlays for eyeballing crops.

use crate::error::{Error, Result};
use crate::imagecore::{BBox, ImageTensor};

const PALETTE: [[f64; 3]; 8] = [
    [0.90, 0.10, 0.10],
    [0.10, 0.75, 0.20],
    [0.15, 0.35, 0.95],
    [0.95, 0.80, 0.05],
    [0.85, 0.20, 0.85],
    [0.05, 0.80, 0.85],
    [0.95, 0.50, 0.05],
    [1.00, 1.00, 1.00],
];

const BORDER: u32 = 2;

/// Stable colour for a label (FNV-1a over its bytes).
pub fn label_color(label: &str) -> [f64; 3] {
    let mut h: u32 = 0x811c_9dc5;
    for b in label.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    PALETTE[(h % PALETTE.len() as u32) as usize]
}

// 3x5 glyphs, rows top to bottom, 3 bits per row (MSB = left column).
fn glyph(c: char) -> Option<[u8; 5]> {
    let g = match c.to_ascii_uppercase() {
        '0' => [7, 5, 5, 5, 7],
        '1' => [2, 6, 2, 2, 7],
        '2' => [7, 1, 7, 4, 7],
        '3' => [7, 1, 7, 1, 7],
        '4' => [5, 5, 7, 1, 1],
        '5' => [7, 4, 7, 1, 7],
        '6' => [7, 4, 7, 5, 7],
        '7' => [7, 1, 1, 1, 1],
        '8' => [7, 5, 7, 5, 7],
        '9' => [7, 5, 7, 1, 7],
        'A' => [2, 5, 7, 5, 5],
        'B' => [6, 5, 6, 5, 6],
        'C' => [7, 4, 4, 4, 7],
        'D' => [6, 5, 5, 5, 6],
        'E' => [7, 4, 6, 4, 7],
        'F' => [7, 4, 6, 4, 4],
        'G' => [7, 4, 5, 5, 7],
        'H' => [5, 5, 7, 5, 5],
        'I' => [7, 2, 2, 2, 7],
        'J' => [1, 1, 1, 5, 7],
        'K' => [5, 5, 6, 5, 5],
        'L' => [4, 4, 4, 4, 7],
        'M' => [5, 7, 7, 5, 5],
        'N' => [6, 5, 5, 5, 5],
        'O' => [2, 5, 5, 5, 2],
        'P' => [6, 5, 6, 4, 4],
        'Q' => [2, 5, 5, 6, 3],
        'R' => [6, 5, 6, 5, 5],
        'S' => [3, 4, 2, 1, 6],
        'T' => [7, 2, 2, 2, 2],
        'U' => [5, 5, 5, 5, 7],
        'V' => [5, 5, 5, 5, 2],
        'W' => [5, 5, 7, 7, 5],
        'X' => [5, 5, 2, 5, 5],
        'Y' => [5, 5, 2, 2, 2],
        'Z' => [7, 1, 2, 4, 7],
        '-' => [0, 0, 7, 0, 0],
        '+' => [0, 2, 7, 2, 0],
        '_' => [0, 0, 0, 0, 7],
        '.' => [0, 0, 0, 0, 2],
        ':' => [0, 2, 0, 2, 0],
        ' ' => [0, 0, 0, 0, 0],
        _ => return None,
    };
    Some(g)
}

fn draw_label(img: &mut ImageTensor, bbox: &BBox, label: &str, color: [f64; 3]) {
    let (ox, oy) = (bbox.x0 + BORDER + 1, bbox.y0 + BORDER + 1);
    for (i, ch) in label.chars().enumerate() {
        let rows = glyph(ch).unwrap_or([7, 5, 5, 5, 7]);
        let gx = ox + 4 * i as u32;
        for (dy, bits) in rows.iter().enumerate() {
            for dx in 0..3u32 {
                if bits & (4 >> dx) == 0 {
                    continue;
                }
                let (x, y) = (gx + dx, oy + dy as u32);
                // labels never spill outside their own box
                if x + BORDER < bbox.x1 && y + BORDER < bbox.y1 {
                    img.set_pixel(x, y, color);
                }
            }
        }
    }
}

/// Copy of `img` with a 2-px outline (inside each box) and its label drawn in
/// the box's top-left corner. Boxes are drawn in order, so later ones end up
/// on top. Empty labels get only the outline.
pub fn render_overlay(img: &ImageTensor, boxes: &[(BBox, String)]) -> Result<ImageTensor> {
    for (b, _) in boxes {
        if !b.fits(img.width(), img.height()) {
            return Err(Error::invalid(format!(
                "box {b} outside {}x{} image",
                img.width(),
                img.height()
            )));
        }
    }
    let mut out = img.clone();
    for (b, label) in boxes {
        let color = label_color(label);
        for y in b.y0..b.y1 {
            for x in b.x0..b.x1 {
                let edge = x < b.x0 + BORDER || x + BORDER >= b.x1 || y < b.y0 + BORDER || y + BORDER >= b.y1;
                if edge {
                    out.set_pixel(x, y, color);
                }
            }
        }
        if !label.is_empty() {
            draw_label(&mut out, b, label, color);
        }
    }
    Ok(out)
}
