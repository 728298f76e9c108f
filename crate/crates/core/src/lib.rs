//! Saliency-guided visual cropping for visual question answering.
//!
//! The crate turns answer-loss gradients ([`gradcrop`]) or image-text
//! similarity scores ([`simcrop`]) into question-relevant bounding boxes and
//! scores the results ([`metrics`]). Models never run in-process: gradients
//! arrive as VCGB files and similarity scores over a line-delimited JSON
//! protocol, so everything here is deterministic and testable offline.

pub mod error;
pub mod gradcrop;
pub mod harness;
pub mod imagecore;
pub mod metrics;
pub mod simcrop;

pub use error::{Error, Result};
pub use gradcrop::{grad_crop, GradConfig, GradientBundle};
pub use imagecore::{BBox, BinaryMask, ImageTensor, SaliencyMap};
pub use simcrop::{clip_r_crop, clip_w_crop, RecursiveConfig, Scorer, WindowConfig};
