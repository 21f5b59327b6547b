//! Regenerates the bundled scene fixtures.
//!
//! Usage: cargo run --example author_scenes -- <fixtures-dir>

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dexgrasp::geometry::primitives::{cuboid, cylinder, ellipsoid, icosphere};
use dexgrasp::geometry::{write_obj, Pose, TriangleMesh};
use dexgrasp::graspctl::{ClosingPath, ContactSpec, FingerMaterial, Gains, RunSettings, Verdict};
use dexgrasp::kinematics::{bundled_model, fingertips, Frame, HandConfiguration, HUMAN_SKELETON};
use dexgrasp::pipeline::{run_pipeline, PipelineSettings};
use dexgrasp::reconstruction::{HandEstimateDocument, Intrinsics, PosesDocument, SceneDocument};
use dexgrasp::retarget::{refine_retarget, GraspAction, SolverSettings};
use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

struct SceneRecipe {
    name: &'static str,
    object: &'static str,
    intent: &'static str,
    hand: &'static str,
    mesh: TriangleMesh,
    /// Direction of palm travel toward the object, object frame.
    approach: Vector3<f64>,
    /// Finger pointing direction, roughly orthogonal to `approach`.
    along: Vector3<f64>,
    fragile: bool,
}

const DEPTH_ERROR: f64 = 0.02;
const RETREAT: f64 = 0.08;

fn main() {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("crates/core/fixtures"));
    write_meshes(&root.join("meshes"));

    let mug = SceneRecipe {
        name: "mug-01",
        object: "mug",
        intent: "pick it up to pour",
        hand: "shadow-like-22dof",
        mesh: cylinder(0.04, 0.05, 32).unwrap(),
        approach: Vector3::new(1.0, 0.0, 0.0),
        along: Vector3::new(0.0, 1.0, 0.0),
        fragile: false,
    };
    author(&root.join("scenes"), mug, 0);

    for (i, recipe) in fragile_recipes().into_iter().enumerate() {
        author(&root.join("fragile"), recipe, i + 1);
    }
}

fn write_meshes(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let meshes = [
        ("cube.obj", cuboid(Vector3::new(0.05, 0.05, 0.05)).unwrap()),
        ("icosphere.obj", icosphere(0.05, 2).unwrap()),
        ("cylinder.obj", cylinder(0.04, 0.06, 32).unwrap()),
    ];
    for (name, mesh) in meshes {
        std::fs::write(dir.join(name), write_obj(&mesh, &[])).unwrap();
    }
}

fn fragile_recipes() -> Vec<SceneRecipe> {
    let side = Vector3::new(1.0, 0.0, 0.0);
    let up = Vector3::new(0.0, 0.0, 1.0);
    let y = Vector3::new(0.0, 1.0, 0.0);
    let tilt = Vector3::new(1.0, 0.0, -0.4).normalize();
    vec![
        SceneRecipe { name: "paper-cup", object: "paper cup", intent: "lift it without spilling", hand: "shadow-like-22dof", mesh: cylinder(0.035, 0.05, 32).unwrap(), approach: side, along: y, fragile: true },
        SceneRecipe { name: "plastic-cup", object: "plastic cup", intent: "hand it over", hand: "leap-like-16dof", mesh: cylinder(0.04, 0.055, 32).unwrap(), approach: side, along: y, fragile: true },
        SceneRecipe { name: "egg", object: "egg", intent: "place it in the carton", hand: "shadow-like-22dof", mesh: ellipsoid(Vector3::new(0.028, 0.028, 0.038), 2).unwrap(), approach: -up, along: side, fragile: true },
        SceneRecipe { name: "strawberry", object: "strawberry", intent: "put it in the bowl", hand: "inspire-like-6dof", mesh: icosphere(0.03, 2).unwrap(), approach: -up, along: side, fragile: true },
        SceneRecipe { name: "tofu", object: "tofu", intent: "move it to the plate", hand: "shadow-like-22dof", mesh: cuboid(Vector3::new(0.035, 0.03, 0.025)).unwrap(), approach: -up, along: side, fragile: true },
        SceneRecipe { name: "potato-chip", object: "potato chip", intent: "pick it up", hand: "leap-like-16dof", mesh: ellipsoid(Vector3::new(0.035, 0.03, 0.012), 2).unwrap(), approach: -up, along: side, fragile: true },
        SceneRecipe { name: "sponge", object: "sponge", intent: "wipe the table", hand: "inspire-like-6dof", mesh: cuboid(Vector3::new(0.045, 0.03, 0.02)).unwrap(), approach: -up, along: side, fragile: true },
        SceneRecipe { name: "banana", object: "banana", intent: "peel it", hand: "shadow-like-22dof", mesh: ellipsoid(Vector3::new(0.07, 0.02, 0.02), 2).unwrap(), approach: -up, along: y, fragile: true },
        SceneRecipe { name: "tennis-ball", object: "tennis ball", intent: "throw it", hand: "leap-like-16dof", mesh: icosphere(0.033, 2).unwrap(), approach: tilt, along: y, fragile: true },
        SceneRecipe { name: "glass-bottle", object: "glass bottle", intent: "pour water", hand: "shadow-like-22dof", mesh: cylinder(0.035, 0.1, 32).unwrap(), approach: side, along: y, fragile: true },
    ]
}

fn frame_from(approach: &Vector3<f64>, along: &Vector3<f64>) -> UnitQuaternion<f64> {
    let z = -approach.normalize();
    let x = (along - z * along.dot(&z)).normalize();
    let y = z.cross(&x);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z])))
}

/// Human grasp in the object frame with every reachable fingertip on the surface.
fn human_grasp(recipe: &SceneRecipe) -> (HandConfiguration, Vec<usize>) {
    let human = bundled_model(HUMAN_SKELETON).unwrap();
    let q: Vec<f64> = human.joints().iter().map(|j| j.lo + 0.45 * (j.hi - j.lo)).collect();
    let q = human.clamp_to_limits(&q).unwrap();
    let rot = frame_from(&recipe.approach, &recipe.along);
    let local = fingertips(&human, &HandConfiguration::new(Pose::from_rotation(rot), q.clone())).unwrap();
    let centroid = local.iter().sum::<Vector3<f64>>() / local.len() as f64;
    let mut grasp = GraspAction {
        hand_model: human.name().into(),
        config: HandConfiguration::new(Pose::from_parts(rot, -centroid), q),
        frame: Frame::Object,
        residual: vec![],
    };
    let settings = SolverSettings::default();
    for _ in 0..40 {
        let tips = fingertips(&human, &grasp.config).unwrap();
        let targets: Vec<Vector3<f64>> = tips.iter().map(|p| recipe.mesh.nearest_surface_point(p).unwrap().point).collect();
        grasp = refine_retarget(&grasp, &targets, &human, true, &settings).unwrap();
    }
    let tips = fingertips(&human, &grasp.config).unwrap();
    let contacts = tips
        .iter()
        .enumerate()
        .filter(|(_, p)| recipe.mesh.signed_distance(p).unwrap().abs() < 1e-4)
        .map(|(i, _)| i)
        .collect();
    (grasp.config, contacts)
}

fn author(dir: &Path, recipe: SceneRecipe, index: usize) {
    let scene_dir = dir.join(recipe.name);
    std::fs::create_dir_all(&scene_dir).unwrap();
    let (human_object, contacts) = human_grasp(&recipe);

    let a = index as f64;
    let t_o_obs = Pose::from_parts(
        UnitQuaternion::from_euler_angles(0.3 + 0.05 * a, -0.2 + 0.03 * a, 0.4 * a),
        Vector3::new(0.02 - 0.004 * a, -0.03 + 0.005 * a, 0.55 + 0.01 * a),
    );
    let t_o_gen = if recipe.fragile {
        t_o_obs.compose(&Pose::from_translation(-RETREAT * recipe.approach.normalize()))
    } else {
        Pose::from_parts(UnitQuaternion::from_euler_angles(-0.4, 0.5, 1.1), Vector3::new(-0.05, 0.01, 0.6))
    };
    let hand_eye = Pose::from_parts(
        UnitQuaternion::from_euler_angles(PI, 0.0, PI / 2.0),
        Vector3::new(0.45, 0.0, 0.7),
    );
    let root_cam = Pose::from_translation(Vector3::new(0.0, 0.0, DEPTH_ERROR)).compose(&t_o_gen.compose(&human_object.root_pose));

    let target_force = dexgrasp::reconstruction::FixtureForcePredictor::bundled();
    let f = dexgrasp::reconstruction::ForcePredictor::target_force(&target_force, recipe.object).unwrap();

    let scene = SceneDocument {
        name: recipe.name.into(),
        object: recipe.object.into(),
        intent: recipe.intent.into(),
        prompt_kind: Default::default(),
        intrinsics: Intrinsics { fx: 615.0, fy: 615.0, cx: 320.0, cy: 240.0 },
        mesh_scale: 1.0,
        hand_model: Some(recipe.hand.into()),
        target_force: None,
        contact_fingers: Some(contacts),
        observation_image: "observation.png".into(),
        region_mask: None,
        demo_image: None,
        point_cloud: None,
    };
    let hand = HandEstimateDocument {
        skeleton: HUMAN_SKELETON.into(),
        root_pose: root_cam,
        joint_angles: human_object.joint_angles.iter().map(|v| (v * 1e12).round() / 1e12).collect(),
        keypoints: None,
    };
    let poses = PosesDocument { object_gen: t_o_gen, object_obs: t_o_obs, hand_eye };
    write_json(&scene_dir.join("scene.json"), &scene);
    write_json(&scene_dir.join("hand_estimate.json"), &hand);
    write_json(&scene_dir.join("poses.json"), &poses);
    std::fs::write(scene_dir.join("object.obj"), write_obj(&recipe.mesh, &[])).unwrap();

    let yield_force = recipe.fragile.then_some(1.5 * f);
    let model = bundled_model(recipe.hand).unwrap();
    let provisional = contact_spec(vec![FingerMaterial { stiffness: 40.0, yield_force }; model.finger_count()]);
    write_json(&scene_dir.join("contact.json"), &provisional);

    // stiffness so that closing all the way to squeeze would press at 2F
    let run = run_pipeline(&scene_dir, &PipelineSettings::default()).unwrap();
    let path = ClosingPath::new(&model, &run.report.pregrasp.config.joint_angles, &run.report.squeeze.config.joint_angles).unwrap();
    let per_finger: Vec<FingerMaterial> = run
        .report
        .execution
        .engagement
        .iter()
        .zip(&path.lengths)
        .map(|(e, l)| match e {
            Some(e) if l - e > 1e-3 => FingerMaterial { stiffness: round6(2.0 * f / (l - e)), yield_force },
            _ => FingerMaterial { stiffness: 40.0, yield_force },
        })
        .collect();
    write_json(&scene_dir.join("contact.json"), &contact_spec(per_finger));

    let verdict = |settings: PipelineSettings| run_pipeline(&scene_dir, &settings).unwrap().report.verdict;
    let base = verdict(PipelineSettings::default());
    let no_lock = PipelineSettings { run: RunSettings { lock_enabled: false, ..Default::default() }, ..Default::default() };
    let no_transfer = PipelineSettings { transfer: false, ..Default::default() };
    println!(
        "{:<14} {:<18} default={} no-lock={} no-transfer={} residual={:.2e}",
        recipe.name,
        recipe.hand,
        base,
        verdict(no_lock),
        verdict(no_transfer),
        run.report.grasp_object.max_residual()
    );
    if base != Verdict::Stable {
        eprintln!("warning: {} is not stable by default", recipe.name);
    }
}

fn contact_spec(per_finger: Vec<FingerMaterial>) -> ContactSpec {
    let mut stiff: Vec<f64> = per_finger.iter().map(|m| m.stiffness).collect();
    stiff.sort_by(f64::total_cmp);
    ContactSpec {
        stiffness: stiff[stiff.len() / 2],
        yield_force: per_finger[0].yield_force,
        per_finger: Some(per_finger),
        engagement: None,
        noise_sigma: 0.0,
        gains: Gains::default(),
        dt: None,
        max_steps: None,
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    std::fs::write(path, text).unwrap();
}
