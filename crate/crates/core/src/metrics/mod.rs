//! Answer and localization metrics.

mod answer;
mod report;

pub use answer::{lcs_len, lcs_similarity, majority_pass, modal_answers, normalize_answer, vqa_accuracy, HUMAN_ANSWERS};
pub use report::{evaluate_dataset, EvalRow, MetricsReport, QARecord, StrSimiReference};

use crate::imagecore::BBox;

/// Intersection over union of two half-open boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x0: u32, y0: u32, x1: u32, y1: u32) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn iou_hand_cases() {
        assert_eq!(iou(&bx(0, 0, 10, 10), &bx(0, 0, 10, 10)), 1.0);
        assert_eq!(iou(&bx(0, 0, 10, 10), &bx(10, 0, 20, 10)), 0.0);
        assert!((iou(&bx(0, 0, 10, 10), &bx(5, 0, 15, 10)) - 1.0 / 3.0).abs() < 1e-12);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0u32..50, 0u32..50, 1u32..30, 1u32..30).prop_map(|(x, y, w, h)| bx(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let v = iou(&a, &b);
            prop_assert_eq!(v, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn iou_containment(a in arb_box(), fx in 0.0f64..1.0, fy in 0.0f64..1.0, fw in 0.0f64..1.0, fh in 0.0f64..1.0) {
            let x0 = a.x0 + (fx * f64::from(a.width() - 1)) as u32;
            let y0 = a.y0 + (fy * f64::from(a.height() - 1)) as u32;
            let x1 = x0 + 1 + (fw * f64::from(a.x1 - x0 - 1)) as u32;
            let y1 = y0 + 1 + (fh * f64::from(a.y1 - y0 - 1)) as u32;
            let b = bx(x0, y0, x1, y1);
            prop_assert!(a.contains(&b));
            prop_assert!((iou(&a, &b) - b.area() as f64 / a.area() as f64).abs() < 1e-15);
        }
    }
}
