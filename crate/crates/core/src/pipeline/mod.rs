//! End-to-end grasp pipeline over a scene fixture directory.

mod batch;
mod export;
mod trajectory;
mod validate;

pub use batch::{run_batch, BatchError, BatchSummary, SceneSummary};
pub use export::stage_snapshots;
pub use trajectory::{
    load_trajectory, manipulation_trajectory, ObjectTrajectory, TrajectoryError, TrajectorySample,
    TRAJECTORY_FILE,
};
pub use validate::{validate_path, Diagnostic};

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{MeshError, Pose, TriangleMesh};
use crate::graspctl::{
    run_grasp, ClosingPath, ContactModel, ContactSpec, FingerContactModel, GraspError,
    GraspExecutionResult, RunSettings, Verdict,
};
use crate::kinematics::{
    bundled_model, load_hand_model, HandModelError, HandPoseEstimate, KinematicHandModel,
    KinematicsError,
};
use crate::reconstruction::{
    align_depth, build_prompt, contact_fingers_within, to_object_frame, ForcePredictor,
    GraspImageProvider, HandEstimator, MeshProvider, ObjectPoseEstimator, PromptBundle,
    PromptKind, ProviderError, ReconstructionError, SceneFixture, DEFAULT_CONTACT_RADIUS,
};
use crate::retarget::{
    human_targets, initialize_retarget, make_offset_grasp, plan_two_stage, refine_retarget,
    to_robot_frame, GraspAction, RetargetError, SolverSettings, TwoStagePlan,
    DEFAULT_ENGAGE_THRESHOLD, PREGRASP_OFFSET, SQUEEZE_OFFSET,
};

/// Optional per-scene hand model overriding the bundled one named in `scene.json`.
pub const HAND_MODEL_FILE: &str = "hand_model.json";
pub const DEFAULT_HAND_MODEL: &str = "shadow-like-22dof";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Prompt,
    Providers,
    AlignDepth,
    ToObjectFrame,
    Retarget,
    PreSqueeze,
    ToRobotFrame,
    TwoStage,
    RunGrasp,
}

pub const STAGE_ORDER: [Stage; 9] = [
    Stage::Prompt,
    Stage::Providers,
    Stage::AlignDepth,
    Stage::ToObjectFrame,
    Stage::Retarget,
    Stage::PreSqueeze,
    Stage::ToRobotFrame,
    Stage::TwoStage,
    Stage::RunGrasp,
];

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Prompt => "prompt",
            Stage::Providers => "providers",
            Stage::AlignDepth => "align_depth",
            Stage::ToObjectFrame => "to_object_frame",
            Stage::Retarget => "retarget",
            Stage::PreSqueeze => "pre_squeeze",
            Stage::ToRobotFrame => "to_robot_frame",
            Stage::TwoStage => "two_stage",
            Stage::RunGrasp => "run_grasp",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
    #[error(transparent)]
    Retarget(#[from] RetargetError),
    #[error(transparent)]
    Grasp(#[from] GraspError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Fixture(#[from] ProviderError),
    #[error("hand model in {path}: {source}")]
    HandModel { path: String, source: HandModelError },
    #[error("stage {stage} failed: {source}")]
    Stage { stage: Stage, source: StageError },
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub seed: u64,
    pub solver: SolverSettings,
    pub run: RunSettings,
    /// Fingertips within this distance of the surface become contacts (m).
    pub engage_threshold: f64,
    /// Proximity radius for depth-alignment contacts when the scene lists none (m).
    pub depth_contact_radius: f64,
    pub wrist_free: bool,
    /// When false the generated-image object pose is used in place of the observed one.
    pub transfer: bool,
    /// Record wall-clock stage timings (makes reports non-reproducible).
    pub timing: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            solver: SolverSettings::default(),
            run: RunSettings::default(),
            engage_threshold: DEFAULT_ENGAGE_THRESHOLD,
            depth_contact_radius: DEFAULT_CONTACT_RADIUS,
            wrist_free: true,
            transfer: true,
            timing: false,
        }
    }
}

impl PipelineSettings {
    /// Copy with the seed pushed into every seeded component.
    pub fn seeded(&self) -> Self {
        let mut s = self.clone();
        s.solver.seed = self.seed;
        s.run.noise_seed = self.seed;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub input_digest: String,
    pub output_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub shift: f64,
    pub objective_before: f64,
    pub objective_after: f64,
    pub contact_fingers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionSummary {
    pub verdict: Verdict,
    pub steps: usize,
    pub final_forces: Vec<f64>,
    pub peak_forces: Vec<f64>,
    pub locked: Vec<bool>,
    pub engagement: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub scene: String,
    pub hand_model: String,
    pub seed: u64,
    pub force_lock: bool,
    pub transfer: bool,
    pub stages: Vec<StageRecord>,
    pub prompt: PromptBundle,
    pub target_force: f64,
    pub depth: DepthSummary,
    pub human_object: HandPoseEstimate,
    pub grasp_object: GraspAction,
    pub pregrasp: GraspAction,
    pub squeeze: GraspAction,
    pub grasp_robot: GraspAction,
    pub plan: TwoStagePlan,
    pub execution: ExecutionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manipulation: Option<Vec<GraspAction>>,
    pub verdict: Verdict,
}

/// Report plus the data needed for trace and geometry export.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: PipelineReport,
    pub execution: GraspExecutionResult,
    pub mesh: TriangleMesh,
    pub human_generated: HandPoseEstimate,
    pub human_aligned: HandPoseEstimate,
    pub t_o_gen: Pose,
    pub t_o_obs: Pose,
    pub hand_eye: Pose,
    pub model: KinematicHandModel,
}

/// Everything the stages need besides the providers.
#[derive(Debug, Clone)]
pub struct SceneInputs {
    pub fixture: SceneFixture,
    pub model: KinematicHandModel,
    pub contact: ContactSpec,
    pub trajectory: Option<ObjectTrajectory>,
}

pub fn load_scene(dir: &Path) -> Result<SceneInputs, PipelineError> {
    let fixture = SceneFixture::load(dir)?;
    let model = resolve_hand_model(dir, fixture.scene.hand_model.as_deref())?;
    let contact = ContactSpec::load(dir)?;
    let trajectory = load_trajectory(dir)?;
    Ok(SceneInputs { fixture, model, contact, trajectory })
}

pub fn resolve_hand_model(dir: &Path, name: Option<&str>) -> Result<KinematicHandModel, PipelineError> {
    let custom = dir.join(HAND_MODEL_FILE);
    if custom.is_file() {
        let text = std::fs::read_to_string(&custom)
            .map_err(|_| ProviderError::FixtureMissing(custom.display().to_string()))?;
        return load_hand_model(&text).map_err(|source| PipelineError::HandModel {
            path: custom.display().to_string(),
            source,
        });
    }
    let name = name.unwrap_or(DEFAULT_HAND_MODEL);
    bundled_model(name).map_err(|e| {
        PipelineError::Fixture(ProviderError::Invalid {
            path: dir.join(crate::reconstruction::SCENE_FILE).display().to_string(),
            message: e.to_string(),
        })
    })
}

pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("report values serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub(crate) fn mesh_digest(mesh: &TriangleMesh) -> String {
    let verts: Vec<[f64; 3]> = mesh.vertices().iter().map(|v| [v.x, v.y, v.z]).collect();
    digest(&(verts, mesh.triangles()))
}

/// Foundation-model stand-ins used by the providers stage.
pub struct Providers<'a> {
    pub image: &'a dyn GraspImageProvider,
    pub hand: &'a dyn HandEstimator,
    pub pose: &'a dyn ObjectPoseEstimator,
    pub mesh: &'a dyn MeshProvider,
    pub force: &'a dyn ForcePredictor,
}

impl<'a> Providers<'a> {
    pub fn from_fixture(f: &'a SceneFixture) -> Self {
        Self { image: f, hand: f, pose: f, mesh: f, force: f }
    }
}

struct Recorder {
    stages: Vec<StageRecord>,
    timing: bool,
}

impl Recorder {
    fn run<I, O, E>(&mut self, stage: Stage, input: &I, f: impl FnOnce() -> Result<O, E>) -> Result<O, PipelineError>
    where
        I: Serialize + ?Sized,
        O: Serialize,
        E: Into<StageError>,
    {
        let start = Instant::now();
        let out = f().map_err(|e| PipelineError::Stage { stage, source: e.into() })?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        self.stages.push(StageRecord {
            stage,
            input_digest: digest(input),
            output_digest: digest(&out),
            elapsed_ms: self.timing.then_some(elapsed),
        });
        Ok(out)
    }
}

pub fn run_pipeline(dir: &Path, settings: &PipelineSettings) -> Result<PipelineRun, PipelineError> {
    let inputs = load_scene(dir)?;
    let providers = Providers::from_fixture(&inputs.fixture);
    run_scene(&inputs, &providers, settings)
}

#[derive(Serialize)]
struct ProviderOutputs {
    generated: String,
    hand: HandPoseEstimate,
    mesh: String,
    t_o_gen: Pose,
    t_o_obs: Pose,
    target_force: f64,
}

pub fn run_scene(inputs: &SceneInputs, providers: &Providers<'_>, settings: &PipelineSettings) -> Result<PipelineRun, PipelineError> {
    let settings = settings.seeded();
    let scene = &inputs.fixture.scene;
    let model = &inputs.model;
    let mut rec = Recorder { stages: Vec::new(), timing: settings.timing };

    let prompt = rec.run(Stage::Prompt, &(&scene.object, &scene.intent, scene.prompt_kind), || {
        let mut p = build_prompt(&scene.object, &scene.intent, scene.prompt_kind)?;
        match scene.prompt_kind {
            PromptKind::VisualRegion => {
                if let Some(m) = &scene.region_mask {
                    p = p.with_attachment("region_mask", m);
                }
            }
            PromptKind::DemoImage => {
                if let Some(d) = &scene.demo_image {
                    p = p.with_attachment("demo_image", d);
                }
            }
            PromptKind::Language => {}
        }
        Ok::<_, ReconstructionError>(p)
    })?;

    let observation = inputs.fixture.observation();
    let force_key = scene.target_force.as_ref().map_or(scene.object.as_str(), |e| e.object.as_str());
    let mut mesh = None;
    let mut human_generated = None;
    let provided = rec.run(Stage::Providers, &(&prompt, &observation.rgb_image_ref, mesh_digest(&observation.object_mesh)), || {
        let generated = providers.image.generate(&observation, &prompt)?;
        let hand = providers.hand.estimate_hand(&generated)?;
        let m = providers.mesh.object_mesh(&observation.rgb_image_ref)?;
        let t_o_gen = providers.pose.estimate_pose(&generated, &m)?;
        let t_o_obs = providers.pose.estimate_pose(&observation.rgb_image_ref, &m)?;
        let target_force = providers.force.target_force(force_key)?;
        let out = ProviderOutputs { generated: generated.0, hand: hand.clone(), mesh: mesh_digest(&m), t_o_gen, t_o_obs, target_force };
        mesh = Some(m);
        human_generated = Some(hand);
        Ok::<_, ProviderError>(out)
    })?;
    let mesh = mesh.expect("set by providers stage");
    let human_generated = human_generated.expect("set by providers stage");
    let (t_o_gen, t_o_obs, f_target) = (provided.t_o_gen, provided.t_o_obs, provided.target_force);
    let hand_eye = inputs.fixture.poses.hand_eye;
    let skeleton = bundled_model(&human_generated.skeleton)
        .map_err(|e| PipelineError::Stage { stage: Stage::Providers, source: e.into() })?;

    let mesh_gen = mesh.transformed(&t_o_gen);
    let alignment = rec.run(Stage::AlignDepth, &(&human_generated, mesh_digest(&mesh_gen)), || {
        let contacts = match &scene.contact_fingers {
            Some(c) => c.clone(),
            None => contact_fingers_within(&human_generated, &mesh_gen, settings.depth_contact_radius)?,
        };
        align_depth(&skeleton, &human_generated, &mesh_gen, &contacts)
    })?;

    let human_object = rec.run(Stage::ToObjectFrame, &(&alignment.hand, t_o_gen), || {
        to_object_frame(&skeleton, &t_o_gen, &alignment.hand)
    })?;

    let grasp_object = rec.run(Stage::Retarget, &(&human_object, model.name(), &settings.solver), || {
        let init = initialize_retarget(&human_object, &skeleton, model)?;
        let targets = human_targets(&human_object, &skeleton, model)?;
        refine_retarget(&init, &targets, model, settings.wrist_free, &settings.solver)
    })?;

    let (pregrasp, squeeze) = rec.run(Stage::PreSqueeze, &(&grasp_object, mesh_digest(&mesh)), || {
        let pre = make_offset_grasp(&grasp_object, &mesh, model, PREGRASP_OFFSET, settings.engage_threshold, &settings.solver)?;
        let squ = make_offset_grasp(&grasp_object, &mesh, model, SQUEEZE_OFFSET, settings.engage_threshold, &settings.solver)?;
        Ok::<_, RetargetError>((pre, squ))
    })?;

    let object_to_camera = if settings.transfer { t_o_obs } else { t_o_gen };
    let grasp_robot = rec.run(Stage::ToRobotFrame, &(&grasp_object, object_to_camera, hand_eye), || {
        to_robot_frame(&grasp_object, &object_to_camera, &hand_eye)
    })?;

    let plan = rec.run(Stage::TwoStage, &(&grasp_robot, &pregrasp.config.joint_angles), || {
        plan_two_stage(&grasp_robot, &pregrasp.config.joint_angles, model)
    })?;

    // where the executed wrist really sits relative to the observed object
    let executed_root = hand_eye.compose(&t_o_obs).inverse().compose(&grasp_robot.config.root_pose);
    let mut execution = None;
    let contact_model = rec.run(Stage::RunGrasp, &(&pregrasp, &squeeze, executed_root, &inputs.contact, f_target, &settings.run), || {
        let contact = build_contact_model(inputs, model, &executed_root, &pregrasp, &squeeze, &mesh)?;
        let mut run = settings.run.clone();
        if let Some(dt) = inputs.contact.dt {
            run.dt = dt;
        }
        if let Some(n) = inputs.contact.max_steps {
            run.max_steps = n;
        }
        run.gains = inputs.contact.gains;
        let result = run_grasp(&pregrasp, &squeeze, model, &contact, f_target, &run)?;
        let out = (contact.clone(), result.clone());
        execution = Some(result);
        Ok::<_, StageError>(out)
    })?
    .0;
    let execution = execution.expect("set by run_grasp stage");

    let manipulation = match &inputs.trajectory {
        Some(t) => Some(
            manipulation_trajectory(&grasp_object, t, &hand_eye)
                .map_err(|e| PipelineError::Stage { stage: Stage::RunGrasp, source: e.into() })?,
        ),
        None => None,
    };

    let report = PipelineReport {
        scene: scene.name.clone(),
        hand_model: model.name().to_string(),
        seed: settings.seed,
        force_lock: settings.run.lock_enabled,
        transfer: settings.transfer,
        stages: rec.stages,
        prompt,
        target_force: f_target,
        depth: DepthSummary {
            shift: alignment.shift,
            objective_before: alignment.objective_before,
            objective_after: alignment.objective_after,
            contact_fingers: alignment.contact_fingers.clone(),
        },
        human_object,
        grasp_object,
        pregrasp,
        squeeze,
        grasp_robot,
        plan,
        execution: ExecutionSummary {
            verdict: execution.verdict,
            steps: execution.steps,
            final_forces: execution.final_forces(),
            peak_forces: execution.fingers.iter().map(|f| f.peak_force).collect(),
            locked: execution.fingers.iter().map(|f| f.locked).collect(),
            engagement: contact_model.fingers.iter().map(|f| f.engagement).collect(),
        },
        manipulation,
        verdict: execution.verdict,
    };
    Ok(PipelineRun {
        report,
        execution,
        mesh,
        human_generated,
        human_aligned: alignment.hand,
        t_o_gen,
        t_o_obs,
        hand_eye,
        model: model.clone(),
    })
}

fn build_contact_model(
    inputs: &SceneInputs,
    model: &KinematicHandModel,
    executed_root: &Pose,
    pre: &GraspAction,
    squeeze: &GraspAction,
    mesh: &TriangleMesh,
) -> Result<ContactModel, StageError> {
    let spec = &inputs.contact;
    let k = model.finger_count();
    let materials = spec.materials(k)?;
    let contact = match &spec.engagement {
        Some(e) if e.len() != k => return Err(GraspError::DimensionMismatch { expected: k, got: e.len() }.into()),
        Some(e) => ContactModel::new(
            materials
                .iter()
                .zip(e)
                .map(|(m, e)| FingerContactModel { engagement: *e, stiffness: m.stiffness, yield_force: m.yield_force })
                .collect(),
        )?,
        None => {
            let path = ClosingPath::new(model, &pre.config.joint_angles, &squeeze.config.joint_angles)?;
            let stiffness: Vec<f64> = materials.iter().map(|m| m.stiffness).collect();
            let yields: Vec<Option<f64>> = materials.iter().map(|m| m.yield_force).collect();
            ContactModel::from_geometry(model, executed_root, &path, mesh, &stiffness, &yields)?
        }
    };
    Ok(contact.with_noise(spec.noise_sigma))
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
