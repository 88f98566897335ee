//! Run manifest: the resolved configuration snapshot plus timings and
//! per-stage diagnostics, written next to every result set.

use serde::Serialize;
use std::time::Instant;

use crate::config::ExperimentConfig;

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed_override: Option<u64>,
    pub threads: usize,
    pub emit_svg: bool,
    /// The configuration the run actually used, after flag overrides.
    pub config: &'a ExperimentConfig,
    pub stages: &'a [StageTiming],
    pub diagnostics: &'a serde_json::Value,
}

#[derive(Serialize)]
pub struct StageTiming {
    pub name: String,
    pub wall_ms: u128,
}

/// Collects wall-clock timings per pipeline stage.
#[derive(Default)]
pub struct StageClock {
    stages: Vec<StageTiming>,
}

impl StageClock {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTiming {
            name: name.to_string(),
            wall_ms: start.elapsed().as_millis(),
        });
        out
    }

    pub fn stages(&self) -> &[StageTiming] {
        &self.stages
    }
}

pub fn render(manifest: &RunManifest) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}
