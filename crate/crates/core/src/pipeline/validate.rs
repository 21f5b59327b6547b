use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{resolve_hand_model, HAND_MODEL_FILE};
use crate::geometry::{parse_obj, MeshError};
use crate::graspctl::{ContactSpec, CONTACT_FILE};
use crate::kinematics::{bundled_model, load_hand_model};
use crate::reconstruction::{
    HandEstimateDocument, PosesDocument, ProviderError, SceneDocument, HAND_FILE, MESH_FILE, POSES_FILE, SCENE_FILE,
};
use super::trajectory::{ObjectTrajectory, TRAJECTORY_FILE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, path: &Path, message: impl ToString) {
        self.0.push(Diagnostic { path: path.display().to_string(), message: message.to_string() });
    }

    fn read(&mut self, path: &Path) -> Option<String> {
        match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(_) => {
                self.push(path, "fixture missing");
                None
            }
        }
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Option<T> {
        let text = self.read(path)?;
        match serde_json::from_str(&text) {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, format!("schema error: {e}"));
                None
            }
        }
    }
}

/// Lists every problem found in a scene directory, a directory of scenes,
/// a hand model document or an OBJ mesh. Empty means clean.
pub fn validate_path(path: &Path) -> Vec<Diagnostic> {
    let mut d = Diagnostics(Vec::new());
    if path.is_dir() {
        if path.join(SCENE_FILE).is_file() {
            validate_scene(path, &mut d);
        } else {
            let mut subdirs: Vec<_> = std::fs::read_dir(path)
                .map(|r| r.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join(SCENE_FILE).is_file()).collect())
                .unwrap_or_default();
            subdirs.sort();
            if subdirs.is_empty() {
                d.push(path, "no scenes found");
            }
            for s in subdirs {
                validate_scene(&s, &mut d);
            }
        }
    } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
        if let Some(text) = d.read(path) {
            mesh_issues(path, &text, 1.0, &mut d);
        }
    } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        if let Some(text) = d.read(path) {
            if let Err(e) = load_hand_model(&text) {
                for v in e.violations {
                    d.push(path, v);
                }
            }
        }
    } else if !path.exists() {
        d.push(path, "fixture missing");
    } else {
        d.push(path, "unrecognized fixture type");
    }
    d.0
}

fn mesh_issues(path: &Path, text: &str, scale: f64, d: &mut Diagnostics) {
    match parse_obj(text, scale) {
        Ok(mesh) => {
            let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for t in mesh.triangles() {
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    *edges.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            let open = edges.values().filter(|n| **n != 2).count();
            if open > 0 {
                d.push(path, format!("mesh is not watertight: {open} edges not shared by exactly two faces"));
            }
        }
        Err(MeshError::Invalid(issues)) => {
            for i in issues {
                d.push(path, i);
            }
        }
        Err(e) => d.push(path, e),
    }
}

fn validate_scene(dir: &Path, d: &mut Diagnostics) {
    let scene: Option<SceneDocument> = d.json(&dir.join(SCENE_FILE));
    let scale = scene.as_ref().map_or(1.0, |s| s.mesh_scale);
    if let Some(s) = &scene {
        let p = dir.join(SCENE_FILE);
        if s.name.trim().is_empty() {
            d.push(&p, "scene name is empty");
        }
        if !s.intrinsics.is_valid() {
            d.push(&p, "intrinsics must be positive");
        }
        if let Some(f) = &s.target_force {
            if !(f.newtons > 0.0 && f.newtons.is_finite()) {
                d.push(&p, "target force must be positive");
            }
        }
    }
    let mesh_path = dir.join(MESH_FILE);
    if let Some(text) = d.read(&mesh_path) {
        mesh_issues(&mesh_path, &text, scale, d);
    }
    let hand_path = dir.join(HAND_FILE);
    if let Some(h) = d.json::<HandEstimateDocument>(&hand_path) {
        match bundled_model(&h.skeleton) {
            Ok(m) => {
                if h.joint_angles.len() != m.joint_count() {
                    d.push(&hand_path, format!("expected {} joint angles, found {}", m.joint_count(), h.joint_angles.len()));
                }
                if let Some(k) = &h.keypoints {
                    if k.len() != m.finger_count() {
                        d.push(&hand_path, format!("expected {} keypoints, found {}", m.finger_count(), k.len()));
                    }
                }
            }
            Err(e) => d.push(&hand_path, e),
        }
    }
    d.json::<PosesDocument>(&dir.join(POSES_FILE));
    let contact_path = dir.join(CONTACT_FILE);
    let contact = d.json::<ContactSpec>(&contact_path);
    if dir.join(HAND_MODEL_FILE).is_file() {
        let p = dir.join(HAND_MODEL_FILE);
        if let Some(text) = d.read(&p) {
            if let Err(e) = load_hand_model(&text) {
                for v in e.violations {
                    d.push(&p, v);
                }
            }
        }
    }
    let model = resolve_hand_model(dir, scene.as_ref().and_then(|s| s.hand_model.as_deref()));
    match (&model, &contact) {
        (Ok(m), Some(c)) => {
            if let Err(e) = c.materials(m.finger_count()) {
                d.push(&contact_path, e);
            }
            if let Some(e) = &c.engagement {
                if e.len() != m.finger_count() {
                    d.push(&contact_path, format!("expected {} engagement entries, found {}", m.finger_count(), e.len()));
                }
            }
            if c.stiffness.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                d.push(&contact_path, "stiffness must be positive");
            }
        }
        (Err(super::PipelineError::Fixture(ProviderError::Invalid { path, message })), _) => {
            d.push(Path::new(path), message)
        }
        _ => {}
    }
    if let Some(s) = &scene {
        if let Some(fingers) = &s.contact_fingers {
            if let Ok(h) = serde_json::from_str::<HandEstimateDocument>(&std::fs::read_to_string(&hand_path).unwrap_or_default()) {
                if let Ok(sk) = bundled_model(&h.skeleton) {
                    for f in fingers.iter().filter(|f| **f >= sk.finger_count()) {
                        d.push(&dir.join(SCENE_FILE), format!("contact finger {f} out of range"));
                    }
                }
            }
        }
    }
    let traj = dir.join(TRAJECTORY_FILE);
    if traj.is_file() {
        if let Some(t) = d.json::<ObjectTrajectory>(&traj) {
            if let Err(e) = t.check() {
                d.push(&traj, e);
            }
        }
    }
}
