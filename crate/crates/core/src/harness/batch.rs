//! Runs one cropping method over a whole manifest.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl, CropConfig, DatasetManifest, ManifestEntry, QuestionId};
use crate::error::{Error, Result};
use crate::gradcrop::{grad_crop, GradientBundle};
use crate::imagecore::{crop_image, image_dimensions, load_image, save_image, BBox};
use crate::simcrop::{clip_r_trace, clip_w_crop_sized, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CropMethod {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "grad")]
    Grad,
    #[serde(rename = "clip-w")]
    ClipW,
    #[serde(rename = "clip-r")]
    ClipR,
}

impl CropMethod {
    pub fn needs_scorer(self) -> bool {
        matches!(self, CropMethod::ClipW | CropMethod::ClipR)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub question_id: QuestionId,
    pub method: CropMethod,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    /// clip-r box chain, starting at the full image.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    pub fn new(question_id: QuestionId, method: CropMethod) -> Self {
        Self { question_id, method, bbox: None, answer: None, trace: Vec::new(), error: None }
    }

    pub fn with_answer(mut self, answer: impl Into<String>) -> Self {
        self.answer = Some(answer.into());
        self
    }

    pub fn with_box(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }
}

/// Creates one scorer per worker.
pub type ScorerFactory<'a> = dyn Fn() -> Result<Box<dyn Scorer + Send>> + Sync + 'a;

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub workers: usize,
    /// Write each crop as `<question_id>.png` here.
    pub crops_dir: Option<PathBuf>,
    /// Completed records are kept here so an aborted run can resume.
    pub progress: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { workers: 1, crops_dir: None, progress: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    /// One record per manifest entry, sorted by question id.
    pub records: Vec<PredictionRecord>,
    pub errors: usize,
}

const PROGRESS_EVERY: usize = 32;

/// Crops every entry with `method`. Per-entry failures are recorded on the
/// entry; a scorer transport failure aborts the batch after saving progress.
pub fn run_crop_batch(
    manifest: &DatasetManifest,
    method: CropMethod,
    config: &CropConfig,
    scorer: Option<&ScorerFactory<'_>>,
    bundles_dir: Option<&Path>,
    opts: &BatchOptions,
) -> Result<BatchOutput> {
    config.validate()?;
    if method.needs_scorer() && scorer.is_none() {
        return Err(Error::invalid(format!("{method:?} needs a scorer")));
    }
    if method == CropMethod::Grad && bundles_dir.is_none() {
        return Err(Error::invalid("grad cropping needs a bundles directory"));
    }
    if let Some(dir) = &opts.crops_dir {
        fs::create_dir_all(dir)?;
    }

    let mut done: HashMap<QuestionId, PredictionRecord> = HashMap::new();
    if let Some(p) = opts.progress.as_deref().filter(|p| p.exists()) {
        let ids: HashSet<&QuestionId> = manifest.entries().iter().map(|e| &e.question_id).collect();
        for r in read_jsonl::<PredictionRecord>(p)? {
            if r.method == method && ids.contains(&r.question_id) {
                done.insert(r.question_id.clone(), r);
            }
        }
    }
    let todo: Vec<&ManifestEntry> =
        manifest.sorted().into_iter().filter(|e| !done.contains_key(&e.question_id)).collect();

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let fatal: Mutex<Option<Error>> = Mutex::new(None);
    let finished = Mutex::new(done);
    let workers = opts.workers.max(1).min(todo.len().max(1));

    let save_progress = |records: &HashMap<QuestionId, PredictionRecord>| -> Result<()> {
        match &opts.progress {
            Some(p) => {
                let mut v: Vec<&PredictionRecord> = records.values().collect();
                v.sort_by(|a, b| a.question_id.cmp(&b.question_id));
                write_jsonl(p, v)
            }
            None => Ok(()),
        }
    };

    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                let mut session: Option<Box<dyn Scorer + Send>> = None;
                loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(entry) = todo.get(i) else { break };
                    if method.needs_scorer() && session.is_none() {
                        match scorer.expect("checked above")() {
                            Ok(s) => session = Some(s),
                            Err(e) => {
                                abort.store(true, Ordering::SeqCst);
                                fatal.lock().unwrap().get_or_insert(e);
                                break;
                            }
                        }
                    }
                    let mut rec = PredictionRecord::new(entry.question_id.clone(), method);
                    match crop_entry(entry, method, config, session.as_mut().map(|s| s.as_mut() as &mut dyn Scorer), bundles_dir) {
                        Ok((bbox, trace)) => {
                            rec.bbox = Some(bbox);
                            rec.trace = trace;
                            if let Some(dir) = &opts.crops_dir {
                                if let Err(e) = write_crop(entry, bbox, dir) {
                                    rec.error = Some(e.to_string());
                                }
                            }
                        }
                        Err(e) if e.is_transport() => {
                            abort.store(true, Ordering::SeqCst);
                            fatal.lock().unwrap().get_or_insert(e);
                            break;
                        }
                        Err(e) => rec.error = Some(e.to_string()),
                    }
                    let mut fin = finished.lock().unwrap();
                    fin.insert(rec.question_id.clone(), rec);
                    if fin.len().is_multiple_of(PROGRESS_EVERY) {
                        // best effort; the final write below reports errors
                        let _ = save_progress(&fin);
                    }
                }
            });
        }
    });

    let finished = finished.into_inner().unwrap();
    if let Some(e) = fatal.into_inner().unwrap() {
        save_progress(&finished)?;
        return Err(e);
    }
    if let Some(p) = &opts.progress {
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    let mut records: Vec<PredictionRecord> = finished.into_values().collect();
    records.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    Ok(BatchOutput { records, errors })
}

fn crop_entry(
    entry: &ManifestEntry,
    method: CropMethod,
    config: &CropConfig,
    scorer: Option<&mut dyn Scorer>,
    bundles_dir: Option<&Path>,
) -> Result<(BBox, Vec<BBox>)> {
    let path = &entry.image_path;
    match method {
        CropMethod::None => {
            let (w, h) = image_dimensions(path)?;
            Ok((BBox::full(w, h), Vec::new()))
        }
        CropMethod::Human => {
            let b = entry
                .human_box
                .ok_or_else(|| Error::invalid(format!("entry {} has no human box", entry.question_id)))?;
            let (w, h) = image_dimensions(path)?;
            if !b.fits(w, h) {
                return Err(Error::invalid(format!("human box {b} outside {w}x{h} image")));
            }
            Ok((b, Vec::new()))
        }
        CropMethod::Grad => {
            let dir = bundles_dir.expect("checked by caller");
            let bundle = GradientBundle::load(&dir.join(format!("{}.vcgb", entry.question_id)))?;
            let img = load_image(path)?;
            Ok((grad_crop(&img, &bundle, &config.grad)?, Vec::new()))
        }
        CropMethod::ClipW => {
            let scorer = scorer.expect("checked by caller");
            let (w, h) = image_dimensions(path)?;
            let out = clip_w_crop_sized(path, w, h, &entry.question, scorer, &config.window)?;
            Ok((out.bbox, Vec::new()))
        }
        CropMethod::ClipR => {
            let scorer = scorer.expect("checked by caller");
            let (w, h) = image_dimensions(path)?;
            let trace = clip_r_trace(path, w, h, &entry.question, scorer, &config.recursive)?;
            Ok((*trace.last().expect("non-empty trace"), trace))
        }
    }
}

fn write_crop(entry: &ManifestEntry, bbox: BBox, dir: &Path) -> Result<()> {
    let img = load_image(&entry.image_path)?;
    save_image(&crop_image(&img, bbox)?, &dir.join(format!("{}.png", entry.question_id)))
}
