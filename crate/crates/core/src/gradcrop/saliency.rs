//! Pixel-level saliency stages: gradient combination, outlier discard,
//! recursive highlighting and the high-frequency mask.

use super::GradientBundle;
use crate::error::{Error, Result};
use crate::imagecore::{gaussian_blur_plane, mean, percentile_value, BinaryMask, ImageTensor, SaliencyMap};

/// Sums the positive part of the three channel gradients at every pixel.
pub fn combine_gradients(bundle: &GradientBundle) -> Result<SaliencyMap> {
    bundle.validate()?;
    let [r, g, b] = bundle.planes();
    let values = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| f64::from(r.max(0.0)) + f64::from(g.max(0.0)) + f64::from(b.max(0.0)))
        .collect();
    Ok(SaliencyMap::from_raw(bundle.width(), bundle.height(), values))
}

/// Zeroes values outside `[P_k, P_{100-k}]`, then min-max normalizes the
/// surviving nonzero values. Output lies in `[0, 1]`.
pub fn discard_and_normalize(map: &SaliencyMap, k_discard: f64) -> Result<SaliencyMap> {
    if !(0.0..50.0).contains(&k_discard) {
        return Err(Error::invalid(format!("k_discard {k_discard} must be in [0,50)")));
    }
    let values = map.values();
    if values.is_empty() {
        return Ok(map.clone());
    }
    let lo = percentile_value(values, k_discard)?;
    let hi = percentile_value(values, 100.0 - k_discard)?;
    let kept: Vec<f64> = values
        .iter()
        .map(|&v| if v < lo || v > hi { 0.0 } else { v })
        .collect();

    let (min, max) = kept
        .iter()
        .filter(|v| **v != 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let out = if max > min {
        let span = max - min;
        kept.iter()
            .map(|&v| if v == 0.0 { 0.0 } else { ((v - min) / span).clamp(0.0, 1.0) })
            .collect()
    } else {
        vec![0.0; kept.len()]
    };
    Ok(SaliencyMap::from_raw(map.width(), map.height(), out))
}

/// Repeatedly keeps only values strictly above the mean of the whole current
/// map (zeros included).
///
/// Stops at a fixpoint, when nothing exceeds the mean, or after `max_iters`
/// rounds.
pub fn highlight(map: &SaliencyMap, max_iters: usize) -> SaliencyMap {
    SaliencyMap::from_raw(map.width(), map.height(), highlight_values(map.values(), max_iters))
}

pub(crate) fn highlight_values(values: &[f64], max_iters: usize) -> Vec<f64> {
    let mut current = values.to_vec();
    for _ in 0..max_iters {
        let m = mean(&current);
        if !current.iter().any(|v| *v > m) {
            break;
        }
        let next: Vec<f64> = current.iter().map(|&v| if v > m { v } else { 0.0 }).collect();
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Luminance minus its Gaussian blur, thresholded at its own (signed) mean.
pub fn high_pass_mask(img: &ImageTensor, kernel_size: usize, sigma: f64) -> Result<BinaryMask> {
    let gray = img.luminance();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let blurred = gaussian_blur_plane(&gray, w, h, kernel_size, sigma)?;
    let detail: Vec<f64> = gray.iter().zip(&blurred).map(|(g, b)| g - b).collect();
    let m = mean(&detail);
    BinaryMask::new(img.width(), img.height(), detail.iter().map(|v| *v > m).collect())
}

pub fn apply_mask(map: &SaliencyMap, mask: &BinaryMask) -> Result<SaliencyMap> {
    if (map.width(), map.height()) != (mask.width(), mask.height()) {
        return Err(Error::invalid(format!(
            "mask {}x{} does not match map {}x{}",
            mask.width(),
            mask.height(),
            map.width(),
            map.height()
        )));
    }
    let values = map
        .values()
        .iter()
        .zip(mask.bits())
        .map(|(v, keep)| if *keep { *v } else { 0.0 })
        .collect();
    Ok(SaliencyMap::from_raw(map.width(), map.height(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bundle_1px(r: f32, g: f32, b: f32) -> GradientBundle {
        GradientBundle::new(1, 1, [vec![r], vec![g], vec![b]], "q", "a", 0.0).unwrap()
    }

    fn map(w: u32, h: u32, v: Vec<f64>) -> SaliencyMap {
        SaliencyMap::new(w, h, v).unwrap()
    }

    #[test]
    fn combine_relu_sum() {
        assert_eq!(combine_gradients(&bundle_1px(1.0, -2.0, 0.0)).unwrap().values(), &[1.0]);
        assert_eq!(combine_gradients(&bundle_1px(-2.0, 3.0, -1.0)).unwrap().values(), &[3.0]);
        assert_eq!(combine_gradients(&bundle_1px(-2.0, -3.0, -1.0)).unwrap().values(), &[0.0]);
        assert_eq!(combine_gradients(&bundle_1px(0.0, 0.0, 0.0)).unwrap().values(), &[0.0]);
    }

    #[test]
    fn discard_k0_is_pure_normalization() {
        let m = map(3, 1, vec![2.0, 4.0, 6.0]);
        assert_eq!(discard_and_normalize(&m, 0.0).unwrap().values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn discard_drops_top_outlier() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let out = discard_and_normalize(&map(100, 1, v), 1.0).unwrap();
        let out = out.values();
        assert_eq!(out[99], 0.0);
        assert_eq!(out[0], 0.0); // 1 is the survivor minimum
        assert_eq!(out[98], 1.0);
        assert!((out[49] - 49.0 / 98.0).abs() < 1e-12);
    }

    #[test]
    fn discard_constant_is_zero() {
        let out = discard_and_normalize(&map(2, 2, vec![3.0; 4]), 1.0).unwrap();
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn discard_rejects_bad_k() {
        assert!(discard_and_normalize(&map(1, 1, vec![1.0]), 50.0).is_err());
    }

    #[test]
    fn highlight_example() {
        let out = highlight(&map(4, 1, vec![1.0, 1.0, 1.0, 5.0]), 50);
        assert_eq!(out.values(), &[0.0, 0.0, 0.0, 5.0]);
        let c = map(3, 1, vec![2.0; 3]);
        assert_eq!(highlight(&c, 50), c);
        let z = map(3, 1, vec![0.0; 3]);
        assert_eq!(highlight(&z, 50), z);
    }

    #[test]
    fn highlight_zero_iterations_is_identity() {
        let m = map(4, 1, vec![1.0, 1.0, 1.0, 5.0]);
        assert_eq!(highlight(&m, 0), m);
    }

    #[test]
    fn highlight_settles_after_one_pruning_round() {
        // Zeros stay in the mean, so survivors always clear the next (lower) mean.
        let m = map(6, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 30.0]);
        assert_eq!(highlight(&m, 1), highlight(&m, 50));
        assert_eq!(highlight(&m, 1).values(), &[0.0, 0.0, 0.0, 0.0, 0.0, 30.0]);
    }

    #[test]
    fn high_pass_constant_is_empty() {
        let img = ImageTensor::filled(9, 9, [0.4, 0.4, 0.4]).unwrap();
        assert_eq!(high_pass_mask(&img, 5, 1.1).unwrap().count_ones(), 0);
    }

    #[test]
    fn high_pass_marks_bright_line() {
        let img = ImageTensor::from_fn(21, 21, |x, _| if x == 10 { [1.0; 3] } else { [0.0; 3] }).unwrap();
        let mask = high_pass_mask(&img, 5, 1.1).unwrap();
        for y in 0..21 {
            for x in 0..21 {
                let bit = mask.bits()[y * 21 + x];
                if x == 10 {
                    assert!(bit, "line pixel ({x},{y}) not kept");
                }
                if x.abs_diff(10) > 2 {
                    assert!(!bit, "flat pixel ({x},{y}) kept");
                }
            }
        }
    }

    #[test]
    fn mask_application() {
        let m = map(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let ones = BinaryMask::new(2, 2, vec![true; 4]).unwrap();
        let zeros = BinaryMask::new(2, 2, vec![false; 4]).unwrap();
        let checker = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(apply_mask(&m, &ones).unwrap(), m);
        assert!(apply_mask(&m, &zeros).unwrap().values().iter().all(|v| *v == 0.0));
        assert_eq!(apply_mask(&m, &checker).unwrap().values(), &[1.0, 0.0, 0.0, 4.0]);
        let small = BinaryMask::new(1, 1, vec![true]).unwrap();
        assert!(matches!(apply_mask(&m, &small), Err(Error::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn combine_bounded_by_abs_sum(planes in prop::collection::vec((-5f32..5.0, -5f32..5.0, -5f32..5.0), 12)) {
            let r = planes.iter().map(|p| p.0).collect();
            let g = planes.iter().map(|p| p.1).collect();
            let b = planes.iter().map(|p| p.2).collect();
            let bundle = GradientBundle::new(4, 3, [r, g, b], "", "", 0.0).unwrap();
            let out = combine_gradients(&bundle).unwrap();
            for (v, p) in out.values().iter().zip(&planes) {
                prop_assert!(*v >= 0.0);
                prop_assert!(*v <= f64::from(p.0.abs()) + f64::from(p.1.abs()) + f64::from(p.2.abs()) + 1e-12);
            }
        }

        #[test]
        fn highlight_never_grows(values in prop::collection::vec(0.0f64..10.0, 1..64), iters in 0usize..60) {
            let m = map(values.len() as u32, 1, values.clone());
            let out = highlight(&m, iters);
            prop_assert!(out.nonzero_count() <= m.nonzero_count());
            for (a, b) in out.values().iter().zip(&values) {
                prop_assert!(*a <= *b);
                prop_assert!(*a == 0.0 || *a == *b);
            }
        }

        #[test]
        fn discard_output_in_unit_range(values in prop::collection::vec(0.0f64..100.0, 1..64), k in 0.0f64..49.0) {
            let out = discard_and_normalize(&map(values.len() as u32, 1, values), k).unwrap();
            prop_assert!(out.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
