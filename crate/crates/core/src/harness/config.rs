use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcrop::GradConfig;
use crate::simcrop::{RecursiveConfig, WindowConfig};

/// Keyed config file: `[grad]`, `[window]` and `[recursive]` tables whose keys
/// mirror the fields of the respective config structs.
///
/// ```toml
/// [grad]
/// n_pool = 5
/// connectivity = 8
///
/// [window]
/// threshold = 0.5
///
/// [recursive]
/// iterations = 20
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropConfig {
    pub grad: GradConfig,
    pub window: WindowConfig,
    pub recursive: RecursiveConfig,
}

impl CropConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: CropConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.grad.validate()?;
        self.window.validate()?;
        self.recursive.validate()
    }
}
