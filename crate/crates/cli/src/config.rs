use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vsnit::{GeneratorConfig, ModelConfig, TrainConfig};

use crate::commands::Usage;

/// Config file layout. Every section is optional and falls back to its
/// defaults; command-line flags are applied on top.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Usage(format!("invalid config {}: {e}", path.display())).into())
    }
}
