//! Fixtures and independent oracles shared by the integration suites.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vcrop::gradcrop::{BinaryPatchGrid, Cell, Connectivity};
use vcrop::{BBox, GradientBundle, ImageTensor};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Dense (non-separable) Gaussian convolution with edge replication, built
/// from a freshly sampled 2-D kernel.
pub fn dense_blur_oracle(plane: &[f64], w: usize, h: usize, k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as isize;
    let mut kernel = Vec::with_capacity(k * k);
    for dy in -r..=r {
        for dx in -r..=r {
            kernel.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = kernel.iter().sum();
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            let mut t = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                    let sy = (y + dy).clamp(0, h as isize - 1) as usize;
                    acc += kernel[t] * plane[sy * w + sx];
                    t += 1;
                }
            }
            out[y as usize * w + x as usize] = acc / total;
        }
    }
    out
}

/// Largest component by iterative min-label propagation (no queue, no
/// visited set): each on-cell repeatedly adopts the smallest label among
/// itself and its on-neighbours until nothing changes.
pub fn components_oracle(grid: &BinaryPatchGrid, conn: Connectivity) -> Vec<Cell> {
    let (cols, rows) = (grid.cols(), grid.rows());
    let on = grid.cells();
    let mut label: Vec<usize> = (0..cols * rows).collect();
    let diag = conn == Connectivity::Eight;
    loop {
        let mut changed = false;
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if !on[i] {
                    continue;
                }
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        if (dr == 0 && dc == 0) || (!diag && dr != 0 && dc != 0) {
                            continue;
                        }
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                            continue;
                        }
                        let j = nr as usize * cols + nc as usize;
                        if on[j] && label[j] < label[i] {
                            label[i] = label[j];
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut sizes = std::collections::BTreeMap::<usize, usize>::new();
    for i in 0..cols * rows {
        if on[i] {
            *sizes.entry(label[i]).or_default() += 1;
        }
    }
    // BTreeMap iterates labels ascending; the label is the component's first cell
    let best = sizes.iter().fold(None, |best: Option<(usize, usize)>, (&l, &n)| match best {
        Some((_, bn)) if bn >= n => best,
        _ => Some((l, n)),
    });
    match best {
        None => Vec::new(),
        Some((l, _)) => (0..cols * rows)
            .filter(|&i| on[i] && label[i] == l)
            .map(|i| Cell { row: i / cols, col: i % cols })
            .collect(),
    }
}

pub fn random_grid(rng: &mut StdRng, cols: usize, rows: usize, density: f64) -> BinaryPatchGrid {
    let cells = (0..cols * rows).map(|_| rng.random_bool(density)).collect();
    BinaryPatchGrid::new(cols, rows, cells).unwrap()
}

/// Per-pixel uniform RGB noise.
pub fn noise_image(rng: &mut StdRng, w: u32, h: u32) -> ImageTensor {
    ImageTensor::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

pub struct BlobFixture {
    pub image: ImageTensor,
    pub bundle: GradientBundle,
    /// Blob centre +- `extent` sigma, clamped.
    pub truth: BBox,
    pub quadrant: BBox,
}

#[derive(Clone, Copy, Debug)]
pub struct BlobParams {
    pub sigma: (f64, f64),
    /// Noise amplitude relative to the blob peak.
    pub noise: f32,
    /// The true extent is centre +- `extent` sigma.
    pub extent: f64,
    pub size: u32,
}

impl Default for BlobParams {
    fn default() -> Self {
        BlobParams { sigma: (20.0, 26.0), noise: 0.05, extent: 3.0, size: 320 }
    }
}

/// Positive Gaussian gradient blob centred in a random quadrant, on top of
/// zero-mean gradient noise, over a textured noise image.
pub fn blob_fixture(seed: u64) -> BlobFixture {
    blob_fixture_with(seed, BlobParams::default())
}

pub fn blob_fixture_with(seed: u64, p: BlobParams) -> BlobFixture {
    let (w, h) = (p.size, p.size);
    let mut r = rng(seed);
    let image = noise_image(&mut r, w, h);
    let q = r.random_range(0..4u32);
    let (qw, qh) = (w / 2, h / 2);
    let quadrant = BBox::new((q % 2) * qw, (q / 2) * qh, (q % 2 + 1) * qw, (q / 2 + 1) * qh).unwrap();
    let sigma: f64 = r.random_range(p.sigma.0..p.sigma.1);
    let margin = p.extent * sigma;
    let cx = r.random_range(f64::from(quadrant.x0) + margin..f64::from(quadrant.x1) - margin);
    let cy = r.random_range(f64::from(quadrant.y0) + margin..f64::from(quadrant.y1) - margin);
    let amp: f32 = r.random_range(0.5..2.0);
    let gains: [f32; 3] = [r.random_range(0.3..1.0), r.random_range(0.3..1.0), r.random_range(0.3..1.0)];
    let noise_amp = p.noise * amp;
    let mut planes: [Vec<f32>; 3] = Default::default();
    for y in 0..h {
        for x in 0..w {
            let d2 = (f64::from(x) + 0.5 - cx).powi(2) + (f64::from(y) + 0.5 - cy).powi(2);
            let g = (-d2 / (2.0 * sigma * sigma)).exp() as f32;
            for c in 0..3 {
                let n: f32 = r.random_range(-1.0..1.0);
                planes[c].push(amp * gains[c] * g + noise_amp * n);
            }
        }
    }
    let bundle = GradientBundle::new(w, h, planes, "what is in the corner?", "a blob", 2.5).unwrap();
    let clamp = |v: f64, hi: u32| v.clamp(0.0, f64::from(hi)).round() as u32;
    let truth = BBox::new(
        clamp(cx - margin, w),
        clamp(cy - margin, h),
        clamp(cx + margin, w),
        clamp(cy + margin, h),
    )
    .unwrap();
    BlobFixture { image, bundle, truth, quadrant }
}

/// Random target box inside a `w x h` image with sides in `[min_side, max_side]`.
pub fn random_target(rng: &mut StdRng, w: u32, h: u32, min_side: u32, max_side: u32) -> BBox {
    let bw = rng.random_range(min_side..=max_side.min(w));
    let bh = rng.random_range(min_side..=max_side.min(h));
    let x0 = rng.random_range(0..=w - bw);
    let y0 = rng.random_range(0..=h - bh);
    BBox::new(x0, y0, x0 + bw, y0 + bh).unwrap()
}

/// LCS length by memoized recursion over suffixes.
pub fn lcs_oracle(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

pub fn random_word(rng: &mut StdRng, alphabet: &[char], max_len: usize) -> String {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

/// Random bundle whose planes mix ordinary values with signed zeros,
/// subnormals and extremes.
pub fn random_bundle(rng: &mut StdRng) -> GradientBundle {
    let (w, h) = (rng.random_range(1..40u32), rng.random_range(1..40u32));
    let special = [0.0f32, -0.0, f32::MIN_POSITIVE / 2.0, f32::MAX, f32::MIN, 1e-30];
    let mut planes: [Vec<f32>; 3] = Default::default();
    for p in &mut planes {
        *p = (0..w * h)
            .map(|_| {
                if rng.random_bool(0.05) {
                    special[rng.random_range(0..special.len())]
                } else {
                    rng.random_range(-10.0f32..10.0)
                }
            })
            .collect();
    }
    let q = random_word(rng, &['w', 'h', 'é', ' ', '?', '"', '\\', '\n'], 20);
    let a = random_word(rng, &['x', '7', 'ü', ' '], 8);
    GradientBundle::new(w, h, planes, q, a, rng.random_range(0.0..10.0)).unwrap()
}
