//! Builders for the text, random and hard evaluation subsets.

use std::collections::{BTreeSet, HashMap};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{DatasetManifest, ManifestEntry, PredictionRecord, QuestionId};
use crate::error::{Error, Result};
use crate::imagecore::{image_dimensions, BBox};
use crate::metrics::{majority_pass, normalize_answer};

/// Growth applied to the matched OCR box so surrounding text is included.
pub const TEXT_BOX_EXPANSION: f64 = 1.5;

/// Keeps entries where exactly one OCR box reads as a ground-truth answer and
/// records that box, grown 1.5x about its centre, as `human_box`.
pub fn build_text_subset(manifest: &DatasetManifest) -> Result<DatasetManifest> {
    build_text_subset_with(manifest, |e| image_dimensions(&e.image_path))
}

/// [`build_text_subset`] with a caller-supplied image size lookup.
pub fn build_text_subset_with(
    manifest: &DatasetManifest,
    mut dims: impl FnMut(&ManifestEntry) -> Result<(u32, u32)>,
) -> Result<DatasetManifest> {
    let mut kept = Vec::new();
    for entry in manifest.entries() {
        let answers: Vec<String> = entry
            .human_answers
            .iter()
            .map(|a| normalize_answer(a))
            .filter(|a| !a.is_empty())
            .collect();
        let mut hits: Vec<BBox> = entry
            .ocr_boxes
            .iter()
            .filter(|o| {
                let t = normalize_answer(&o.text);
                !t.is_empty() && answers.contains(&t)
            })
            .map(|o| o.bbox)
            .collect();
        hits.sort_by_key(|b| <[u32; 4]>::from(*b));
        hits.dedup();
        if let [only] = hits.as_slice() {
            let (w, h) = dims(entry)?;
            let mut e = entry.clone();
            e.human_box = Some(only.scale_about_center(TEXT_BOX_EXPANSION, w, h)?);
            kept.push(e);
        }
    }
    DatasetManifest::new(kept)
}

/// First `n` positions of a seeded Fisher-Yates shuffle of `0..len`.
///
/// Generator: ChaCha8 seeded with `seed_from_u64(seed)`. Step `i` swaps
/// position `i` with `i + ((next_u64() as u128 * (len - i)) >> 64)`.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > len {
        return Err(Error::invalid(format!("cannot sample {n} of {len} entries")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let span = (len - i) as u128;
        let j = i + ((u128::from(rng.next_u64()) * span) >> 64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok(idx)
}

/// Uniform sample of `n` entries without replacement, reproducible from
/// `seed`. Input order does not matter; output is sorted by question id.
pub fn build_random_subset(manifest: &DatasetManifest, n: usize, seed: u64) -> Result<DatasetManifest> {
    let sorted = manifest.sorted();
    let picks = sample_indices(sorted.len(), n, seed)?;
    let mut chosen: Vec<ManifestEntry> = picks.into_iter().map(|i| sorted[i].clone()).collect();
    chosen.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    DatasetManifest::new(chosen)
}

fn answers_by_id<'a>(
    preds: &'a [PredictionRecord],
    manifest: &DatasetManifest,
    label: &str,
) -> Result<HashMap<&'a QuestionId, &'a str>> {
    let map: HashMap<&QuestionId, &str> = preds
        .iter()
        .filter_map(|p| p.answer.as_deref().map(|a| (&p.question_id, a)))
        .collect();
    let missing: Vec<String> = manifest
        .sorted()
        .iter()
        .filter(|e| !map.contains_key(&e.question_id))
        .map(|e| e.question_id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "predictions {label} lack answers for: {}",
            missing.join(", ")
        )));
    }
    Ok(map)
}

/// Question ids that both prediction sets get wrong under the majority test.
pub fn failure_intersection(
    preds_a: &[PredictionRecord],
    preds_b: &[PredictionRecord],
    manifest: &DatasetManifest,
) -> Result<BTreeSet<QuestionId>> {
    let a = answers_by_id(preds_a, manifest, "A")?;
    let b = answers_by_id(preds_b, manifest, "B")?;
    let mut out = BTreeSet::new();
    for e in manifest.entries() {
        let fails = |ans: &str| majority_pass(ans, &e.human_answers).map(|pass| !pass);
        if fails(a[&e.question_id])? && fails(b[&e.question_id])? {
            out.insert(e.question_id.clone());
        }
    }
    Ok(out)
}
