use std::path::{Path, PathBuf};

use dexgrasp::graspctl::Verdict;
use dexgrasp::pipeline::{load_scene, run_batch, run_pipeline, BatchError, PipelineError, PipelineSettings, Stage, STAGE_ORDER};
use dexgrasp::reconstruction::{HandEstimateDocument, ProviderError, SceneFixture};

fn mug() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenes/mug-01")
}

fn copy_scene(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dst.join(entry.file_name())).unwrap();
    }
}

fn edit_json(path: &Path, edit: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    edit(&mut v);
    std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn mug_scene_is_stable_with_every_stage() {
    let run = run_pipeline(&mug(), &PipelineSettings::default()).unwrap();
    assert_eq!(run.report.verdict, Verdict::Stable);
    let stages: Vec<Stage> = run.report.stages.iter().map(|s| s.stage).collect();
    assert_eq!(stages, STAGE_ORDER.to_vec());
    // the fixture hand was authored 2 cm too far along the camera axis
    assert!((run.report.depth.shift + 0.02).abs() < 1e-4, "{}", run.report.depth.shift);
    assert!(run.report.grasp_object.max_residual() < 5e-3);
    assert!(run.report.stages.iter().all(|s| s.elapsed_ms.is_none()));
}

#[test]
fn hand_estimator_returns_stored_configuration() {
    let fixture = SceneFixture::load(&mug()).unwrap();
    let doc: HandEstimateDocument =
        serde_json::from_str(&std::fs::read_to_string(mug().join("hand_estimate.json")).unwrap()).unwrap();
    assert_eq!(fixture.hand.config.joint_angles, doc.joint_angles);
    assert_eq!(fixture.hand.config.root_pose, doc.root_pose);
    assert_eq!(fixture.hand.skeleton, "human-20dof");
}

#[test]
fn identical_runs_give_identical_reports() {
    let a = run_pipeline(&mug(), &PipelineSettings::default()).unwrap();
    let b = run_pipeline(&mug(), &PipelineSettings::default()).unwrap();
    assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
}

#[test]
fn missing_poses_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("mug-01");
    copy_scene(&mug(), &dir);
    std::fs::remove_file(dir.join("poses.json")).unwrap();
    match run_pipeline(&dir, &PipelineSettings::default()) {
        Err(PipelineError::Fixture(ProviderError::FixtureMissing(p))) => assert!(p.ends_with("poses.json"), "{p}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn stage_failure_is_attributed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("mug-01");
    copy_scene(&mug(), &dir);
    edit_json(&dir.join("scene.json"), |v| v["contact_fingers"] = serde_json::json!([9]));
    let err = run_pipeline(&dir, &PipelineSettings::default()).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::AlignDepth));
}

#[test]
fn trajectory_produces_manipulation_poses() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("mug-01");
    copy_scene(&mug(), &dir);
    let fixture = SceneFixture::load(&dir).unwrap();
    let obs = fixture.poses.object_obs;
    let lifted = obs.with_translation(obs.translation() + nalgebra::Vector3::new(0.0, -0.1, 0.0));
    let traj = serde_json::json!({ "samples": [
        { "time": 0.0, "pose": obs },
        { "time": 1.0, "pose": lifted },
    ]});
    std::fs::write(dir.join("trajectory.json"), traj.to_string()).unwrap();
    assert!(load_scene(&dir).unwrap().trajectory.is_some());
    let run = run_pipeline(&dir, &PipelineSettings::default()).unwrap();
    let poses = run.report.manipulation.unwrap();
    assert_eq!(poses.len(), 2);
    assert_eq!(poses[0], run.report.grasp_robot);
    let moved = poses[1].config.root_pose.translation() - poses[0].config.root_pose.translation();
    let expected = run.hand_eye.transform_vector(&nalgebra::Vector3::new(0.0, -0.1, 0.0));
    assert!((moved - expected).norm() < 1e-12);
}

#[test]
fn batch_counts_and_rejects_duplicates() {
    let single = run_batch(&mug(), &PipelineSettings::default(), None).unwrap();
    assert_eq!(single.scene_count, 1);
    assert_eq!(single.stable, 1);
    assert_eq!(single.success_rate, 1.0);

    let fragile = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fragile");
    for transfer in [true, false] {
        let summary = run_batch(&fragile, &PipelineSettings { transfer, ..Default::default() }, None).unwrap();
        assert_eq!(summary.success_rate, summary.stable as f64 / summary.scene_count as f64);
        assert_eq!(summary.stable + summary.unstable + summary.damaged + summary.failed, summary.scene_count);
        let names: Vec<&str> = summary.scenes.iter().map(|s| s.name.as_str()).collect();
        assert!(names.windows(2).all(|w| w[0] < w[1]));
    }

    let tmp = tempfile::tempdir().unwrap();
    copy_scene(&mug(), &tmp.path().join("a"));
    copy_scene(&mug(), &tmp.path().join("b"));
    assert!(matches!(run_batch(tmp.path(), &PipelineSettings::default(), None), Err(BatchError::DuplicateScene { .. })));
}
