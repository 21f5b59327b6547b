use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_scene, run_scene, write_atomic, PipelineError, PipelineRun, PipelineSettings, Providers, SceneInputs};
use crate::graspctl::Verdict;
use crate::reconstruction::SCENE_FILE;

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("no scenes found in {0}")]
    Empty(String),
    #[error("duplicate scene name '{name}' in {first} and {second}")]
    DuplicateScene { name: String, first: String, second: String },
    #[error("{path}: {source}")]
    Fixture { path: String, source: PipelineError },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub name: String,
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub final_forces: Vec<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub seed: u64,
    pub force_lock: bool,
    pub transfer: bool,
    pub scene_count: usize,
    pub stable: usize,
    pub unstable: usize,
    pub damaged: usize,
    pub failed: usize,
    /// Stable scenes over all scenes.
    pub success_rate: f64,
    /// Mean per-finger retarget residual over all executed scenes (m).
    pub mean_residual: f64,
    pub scenes: Vec<SceneSummary>,
}

impl BatchSummary {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.scenes.iter().filter(|s| s.verdict == Some(verdict)).count()
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scene", "verdict", "final_forces", "residuals", "error"])?;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(";");
        for s in &self.scenes {
            w.write_record([
                s.name.as_str(),
                s.verdict.map_or("failed".to_string(), |v| v.to_string()).as_str(),
                join(&s.final_forces).as_str(),
                join(&s.residuals).as_str(),
                s.error.as_deref().unwrap_or(""),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Scene directories under `dir` (or `dir` itself when it is a scene).
pub fn discover_scenes(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    if dir.join(SCENE_FILE).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| BatchError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut scenes: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(SCENE_FILE).is_file())
        .collect();
    scenes.sort();
    if scenes.is_empty() {
        return Err(BatchError::Empty(dir.display().to_string()));
    }
    Ok(scenes)
}

/// Runs every scene under `dir`, ordered by scene name. When `out` is given,
/// each scene's report and trace are written to `out/<scene>/`.
pub fn run_batch(dir: &Path, settings: &PipelineSettings, out: Option<&Path>) -> Result<BatchSummary, BatchError> {
    let mut by_name: BTreeMap<String, (PathBuf, SceneInputs)> = BTreeMap::new();
    for path in discover_scenes(dir)? {
        let inputs = load_scene(&path).map_err(|source| BatchError::Fixture {
            path: path.display().to_string(),
            source,
        })?;
        let name = inputs.fixture.scene.name.clone();
        if let Some((first, _)) = by_name.get(&name) {
            return Err(BatchError::DuplicateScene {
                name,
                first: first.display().to_string(),
                second: path.display().to_string(),
            });
        }
        by_name.insert(name, (path, inputs));
    }

    let scenes: Vec<(String, SceneInputs)> = by_name.into_iter().map(|(n, (_, i))| (n, i)).collect();
    let results: Vec<(String, Result<PipelineRun, PipelineError>)> = scenes
        .par_iter()
        .map(|(name, inputs)| {
            let providers = Providers::from_fixture(&inputs.fixture);
            let run = run_scene(inputs, &providers, settings);
            if let (Some(out), Ok(run)) = (out, &run) {
                // per-scene output failures are reported as scene errors
                if let Err(e) = write_scene_outputs(&out.join(name), run) {
                    return (name.clone(), Err(PipelineError::Fixture(crate::reconstruction::ProviderError::Invalid {
                        path: out.join(name).display().to_string(),
                        message: e.to_string(),
                    })));
                }
            }
            (name.clone(), run)
        })
        .collect();

    let mut summaries = Vec::with_capacity(results.len());
    let mut residuals = Vec::new();
    for (name, res) in results {
        summaries.push(match res {
            Ok(run) => {
                residuals.extend(run.report.grasp_object.residual.iter().copied());
                SceneSummary {
                    name,
                    verdict: Some(run.report.verdict),
                    error: None,
                    final_forces: run.report.execution.final_forces.clone(),
                    residuals: run.report.grasp_object.residual.clone(),
                }
            }
            Err(e) => SceneSummary { name, verdict: None, error: Some(e.to_string()), final_forces: vec![], residuals: vec![] },
        });
    }
    let n = summaries.len();
    let count = |v: Verdict| summaries.iter().filter(|s| s.verdict == Some(v)).count();
    let stable = count(Verdict::Stable);
    Ok(BatchSummary {
        seed: settings.seed,
        force_lock: settings.run.lock_enabled,
        transfer: settings.transfer,
        scene_count: n,
        stable,
        unstable: count(Verdict::Unstable),
        damaged: count(Verdict::Damaged),
        failed: summaries.iter().filter(|s| s.verdict.is_none()).count(),
        success_rate: stable as f64 / n as f64,
        mean_residual: if residuals.is_empty() { 0.0 } else { residuals.iter().sum::<f64>() / residuals.len() as f64 },
        scenes: summaries,
    })
}

pub fn write_scene_outputs(dir: &Path, run: &PipelineRun) -> std::io::Result<()> {
    let report = serde_json::to_vec_pretty(&run.report).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("report.json"), &report)?;
    let mut trace = Vec::new();
    run.execution.write_trace_csv(&mut trace).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("trace.csv"), &trace)
}
