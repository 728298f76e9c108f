//! VCGB gradient bundle files.
//!
//! Layout (little-endian): magic `VCGB`, `u32` version (1), `u32` width,
//! `u32` height, three `width*height` planes of `f32` (R, G, B, row-major),
//! then `u32` length and a UTF-8 JSON object with at least `question`,
//! `answer` and `loss`. Extra JSON keys are preserved.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VCGB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub question: String,
    pub answer: String,
    pub loss: f64,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Per-channel loss gradients w.r.t. input pixels plus the QA they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    width: u32,
    height: u32,
    planes: [Vec<f32>; 3],
    pub meta: BundleMeta,
}

impl GradientBundle {
    pub fn new(
        width: u32,
        height: u32,
        planes: [Vec<f32>; 3],
        question: impl Into<String>,
        answer: impl Into<String>,
        loss: f64,
    ) -> Result<Self> {
        let meta = BundleMeta {
            question: question.into(),
            answer: answer.into(),
            loss,
            extra: Default::default(),
        };
        let bundle = Self { width, height, planes, meta };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn planes(&self) -> &[Vec<f32>; 3] {
        &self.planes
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("bundle dimensions must be at least 1x1"));
        }
        if !self.meta.loss.is_finite() {
            return Err(Error::invalid("loss must be finite"));
        }
        let n = self.width as usize * self.height as usize;
        for (name, p) in ["R", "G", "B"].iter().zip(&self.planes) {
            if p.len() != n {
                return Err(Error::invalid(format!(
                    "{name} plane has {} values, expected {n}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} plane holds non-finite gradients")));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let json = serde_json::to_vec(&self.meta)?;
        let n = self.width as usize * self.height as usize;
        let mut out = Vec::with_capacity(16 + 12 * n + 4 + json.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for plane in &self.planes {
            for v in plane {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let len = u32::try_from(json.len()).map_err(|_| Error::Format("metadata too large".into()))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&json);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf: bytes, pos: 0 };
        let magic = cur.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("unknown magic {magic:?}")));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let width = cur.u32()?;
        let height = cur.u32()?;
        let n = (width as usize)
            .checked_mul(height as usize)
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let mut planes: [Vec<f32>; 3] = Default::default();
        for plane in planes.iter_mut() {
            let raw = cur.take(n.checked_mul(4).ok_or_else(|| Error::Format("dimensions overflow".into()))?)?;
            *plane = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
        }
        let len = cur.u32()? as usize;
        let meta: BundleMeta = serde_json::from_slice(cur.take(len)?)
            .map_err(|e| Error::Format(format!("metadata: {e}")))?;
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - cur.pos)));
        }
        let bundle = Self { width, height, planes, meta };
        bundle.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(bundle)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated: wanted {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
