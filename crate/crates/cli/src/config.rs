//! Optional TOML config file with per-command defaults. Flags always win;
//! the config only fills values the user did not pass.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub track: TrackConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub ablate: AblateConfig,
    #[serde(default)]
    pub visualize: VisualizeConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub seed: Option<u64>,
    pub deltas: Option<String>,
    pub occl_thresh: Option<f32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub deltas: Option<String>,
    pub queries: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    pub deltas: Option<String>,
    pub occl_thresh: Option<f32>,
    pub direction: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub mode: Option<String>,
    pub rescale: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblateConfig {
    pub delta_sets: Option<String>,
    pub mode: Option<String>,
    pub occl_thresh: Option<f32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualizeConfig {
    pub cell_size: Option<usize>,
    pub occl_thresh: Option<f32>,
    pub darken: Option<f32>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}
