use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl, QuestionId};
use crate::error::{Error, Result};
use crate::imagecore::BBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrBox {
    pub text: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub question_id: QuestionId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    pub image_path: PathBuf,
    pub question: String,
    #[serde(default)]
    pub human_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ocr_boxes: Vec<OcrBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_box: Option<BBox>,
}

/// Ordered set of manifest entries with unique question ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(&e.question_id) {
                return Err(Error::invalid(format!("duplicate question id {}", e.question_id)));
            }
        }
        Ok(Self { entries })
    }

    /// Loads a JSONL manifest. Relative image paths are resolved against the
    /// manifest's directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let base = std::path::absolute(path)?
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let mut entries: Vec<ManifestEntry> = read_jsonl(path)?;
        let mut missing = Vec::new();
        for e in &mut entries {
            if e.image_path.is_relative() {
                e.image_path = base.join(&e.image_path);
            }
            if !e.image_path.is_file() {
                missing.push(format!("{} ({})", e.question_id, e.image_path.display()));
            }
        }
        if !missing.is_empty() {
            return Err(Error::invalid(format!("unresolvable image paths: {}", missing.join(", "))));
        }
        Self::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.entries)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &QuestionId) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| &e.question_id == id)
    }

    /// Entries sorted by question id.
    pub fn sorted(&self) -> Vec<&ManifestEntry> {
        let mut v: Vec<&ManifestEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| a.question_id.cmp(&b.question_id));
        v
    }
}
