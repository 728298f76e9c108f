mod common;

use std::path::{Path, PathBuf};

use vcrop::harness::{
    read_jsonl, run_crop_batch, write_jsonl, BatchOptions, CropConfig, CropMethod, DatasetManifest, ManifestEntry,
    PredictionRecord, QuestionId, ScorerFactory,
};
use vcrop::imagecore::{image_dimensions, save_image};
use vcrop::simcrop::OverlapScorer;
use vcrop::{BBox, Error, Scorer};

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    manifest: DatasetManifest,
    quadrants: Vec<BBox>,
}

fn fixture(n: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    std::fs::create_dir_all(root.join("bundles")).unwrap();
    let mut entries = Vec::new();
    let mut quadrants = Vec::new();
    for i in 0..n {
        let f = common::blob_fixture(100 + i);
        let qid = QuestionId::from(i + 1);
        let image_path = root.join(format!("img{i}.png"));
        save_image(&f.image, &image_path).unwrap();
        f.bundle.save(&root.join("bundles").join(format!("{qid}.vcgb"))).unwrap();
        entries.push(ManifestEntry {
            question_id: qid,
            image_id: Some(format!("img{i}")),
            image_path,
            question: "what is highlighted?".into(),
            human_answers: vec!["blob".into(); 10],
            ocr_boxes: Vec::new(),
            human_box: Some(f.truth),
        });
        quadrants.push(f.quadrant);
    }
    Fixture { _dir: dir, root, manifest: DatasetManifest::new(entries).unwrap(), quadrants }
}

fn overlap_factory(target: BBox) -> impl Fn() -> vcrop::Result<Box<dyn Scorer + Send>> + Sync {
    move || Ok(Box::new(OverlapScorer { target }) as Box<dyn Scorer + Send>)
}

#[test]
fn none_and_human_baselines() {
    let f = fixture(3);
    let cfg = CropConfig::default();
    let none = run_crop_batch(&f.manifest, CropMethod::None, &cfg, None, None, &BatchOptions::default()).unwrap();
    assert_eq!(none.errors, 0);
    assert!(none.records.iter().all(|r| r.bbox == Some(BBox::full(320, 320))));
    let human = run_crop_batch(&f.manifest, CropMethod::Human, &cfg, None, None, &BatchOptions::default()).unwrap();
    for (r, e) in human.records.iter().zip(f.manifest.sorted()) {
        assert_eq!(r.bbox, e.human_box);
    }
}

#[test]
fn human_baseline_without_box_is_a_per_entry_error() {
    let f = fixture(2);
    let mut entries = f.manifest.entries().to_vec();
    entries[1].human_box = None;
    let m = DatasetManifest::new(entries).unwrap();
    let out = run_crop_batch(&m, CropMethod::Human, &CropConfig::default(), None, None, &BatchOptions::default())
        .unwrap();
    assert_eq!(out.errors, 1);
    assert!(out.records[1].error.is_some() && out.records[1].bbox.is_none());
    assert!(out.records[0].error.is_none());
}

#[test]
fn grad_batch_hits_blob_quadrants_and_is_worker_independent() {
    let f = fixture(6);
    let bundles = f.root.join("bundles");
    let crops = f.root.join("crops");
    let cfg = CropConfig::default();
    let opts = BatchOptions { workers: 1, crops_dir: Some(crops.clone()), progress: None };
    let one = run_crop_batch(&f.manifest, CropMethod::Grad, &cfg, None, Some(&bundles), &opts).unwrap();
    let four = run_crop_batch(
        &f.manifest,
        CropMethod::Grad,
        &cfg,
        None,
        Some(&bundles),
        &BatchOptions { workers: 4, ..Default::default() },
    )
    .unwrap();
    assert_eq!(one, four);
    assert_eq!(one.errors, 0);
    for (r, q) in one.records.iter().zip(&f.quadrants) {
        let b = r.bbox.unwrap();
        let (cx, cy) = b.center();
        assert!(q.contains_point(cx, cy), "{b} misses {q}");
        let crop = crops.join(format!("{}.png", r.question_id));
        assert_eq!(image_dimensions(&crop).unwrap(), (b.width(), b.height()));
    }
}

#[test]
fn grad_batch_reports_missing_bundle_per_entry() {
    let f = fixture(2);
    std::fs::remove_file(f.root.join("bundles").join("2.vcgb")).unwrap();
    let out = run_crop_batch(
        &f.manifest,
        CropMethod::Grad,
        &CropConfig::default(),
        None,
        Some(&f.root.join("bundles")),
        &BatchOptions::default(),
    )
    .unwrap();
    assert_eq!(out.errors, 1);
    assert_eq!(out.records[1].question_id, QuestionId::from(2));
    assert!(out.records[1].error.is_some());
}

#[test]
fn clip_r_batch_records_nested_trace() {
    let f = fixture(2);
    let target = BBox::new(200, 200, 300, 300).unwrap();
    let factory = overlap_factory(target);
    let out = run_crop_batch(
        &f.manifest,
        CropMethod::ClipR,
        &CropConfig::default(),
        Some(&factory as &ScorerFactory<'_>),
        None,
        &BatchOptions::default(),
    )
    .unwrap();
    for r in &out.records {
        assert!(!r.trace.is_empty() && r.trace.len() <= 21);
        assert_eq!(r.trace[0], BBox::full(320, 320));
        assert!(r.trace.windows(2).all(|p| p[0].contains(&p[1]) && p[0] != p[1]));
        assert_eq!(r.bbox, r.trace.last().copied());
    }
}

#[test]
fn clip_w_batch_needs_scorer() {
    let f = fixture(1);
    let err = run_crop_batch(&f.manifest, CropMethod::ClipW, &CropConfig::default(), None, None, &BatchOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn transport_failure_aborts_and_progress_resumes() {
    let f = fixture(4);
    let progress = f.root.join("progress.jsonl");
    let target = BBox::new(0, 0, 160, 160).unwrap();

    // scorer that dies on the third region it is asked about
    struct Flaky(u32);
    impl Scorer for Flaky {
        fn score_regions(&mut self, _: &Path, _: &str, boxes: &[BBox]) -> vcrop::Result<Vec<f64>> {
            self.0 += 1;
            if self.0 == 3 {
                return Err(Error::Transport("scorer went away".into()));
            }
            Ok(vec![0.5; boxes.len()])
        }
    }
    let flaky = || Ok(Box::new(Flaky(0)) as Box<dyn Scorer + Send>);
    let opts = BatchOptions { workers: 1, crops_dir: None, progress: Some(progress.clone()) };
    let err = run_crop_batch(&f.manifest, CropMethod::ClipW, &CropConfig::default(), Some(&flaky), None, &opts)
        .unwrap_err();
    assert!(err.is_transport(), "{err:?}");
    let saved: Vec<PredictionRecord> = read_jsonl(&progress).unwrap();
    assert_eq!(saved.len(), 2);

    let good = overlap_factory(target);
    let out = run_crop_batch(&f.manifest, CropMethod::ClipW, &CropConfig::default(), Some(&good), None, &opts).unwrap();
    assert_eq!(out.records.len(), 4);
    // resumed records keep the constant-scorer fallback box
    assert_eq!(out.records[0].bbox, Some(BBox::full(320, 320)));
    assert_eq!(out.records[1].bbox, Some(BBox::full(320, 320)));
    assert_ne!(out.records[3].bbox, Some(BBox::full(320, 320)));
}

#[test]
fn predictions_round_trip_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("preds.jsonl");
    let recs = vec![
        PredictionRecord::new(QuestionId::from(2), CropMethod::ClipR)
            .with_box(BBox::new(1, 2, 3, 4).unwrap())
            .with_answer("yes"),
        PredictionRecord::new(QuestionId::from("q-x"), CropMethod::None),
    ];
    write_jsonl(&path, &recs).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("{\"question_id\":2,\"method\":\"clip-r\",\"box\":[1,2,3,4]"), "{text}");
    assert_eq!(read_jsonl::<PredictionRecord>(&path).unwrap(), recs);
}
