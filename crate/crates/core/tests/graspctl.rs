use dexgrasp::geometry::Pose;
use dexgrasp::graspctl::{
    run_grasp, sense_force, ClosingPath, ContactModel, FingerContactModel, RunSettings, Verdict,
};
use dexgrasp::kinematics::{bundled_model, Frame, HandConfiguration, KinematicHandModel};
use dexgrasp::retarget::GraspAction;
use proptest::prelude::*;

fn action(model: &KinematicHandModel, q: Vec<f64>) -> GraspAction {
    GraspAction {
        hand_model: model.name().into(),
        config: HandConfiguration::new(Pose::identity(), q),
        frame: Frame::Object,
        residual: vec![],
    }
}

fn closing_pair(model: &KinematicHandModel, step: f64) -> (GraspAction, GraspAction) {
    let pre = model.rest_angles();
    let squ: Vec<f64> = model.joints().iter().zip(&pre).map(|(j, r)| (r + step).min(j.hi)).collect();
    let squ = model.clamp_to_limits(&squ).unwrap();
    (action(model, pre), action(model, squ))
}

/// Scalar spring + PD recursion along one finger's closing line.
struct Recursion {
    final_s: f64,
    lock_step: Option<usize>,
}

fn scalar_recursion(length: f64, engagement: Option<f64>, stiffness: f64, f_target: f64, settings: &RunSettings, steps: usize) -> Recursion {
    let (kp, kd, dt) = (settings.gains.kp, settings.gains.kd, settings.dt);
    let mut s = 0.0;
    let mut target = length;
    let mut prev_e: Option<f64> = None;
    let mut lock_step = None;
    for n in 0..steps {
        let force = engagement.map_or(0.0, |e| stiffness * (s - e).max(0.0));
        if lock_step.is_none() && force >= f_target {
            lock_step = Some(n);
            // the error history follows the setpoint jump
            prev_e = prev_e.map(|p| p + (s - target));
            target = s;
        }
        let e = target - s;
        let de = prev_e.map_or(0.0, |p| (e - p) / dt);
        s += (kp * e + kd * de) * dt;
        prev_e = Some(e);
    }
    Recursion { final_s: s, lock_step }
}

#[test]
fn run_grasp_matches_scalar_recursion() {
    for name in ["leap-like-16dof", "inspire-like-6dof", "shadow-like-22dof"] {
        let model = bundled_model(name).unwrap();
        let (pre, squ) = closing_pair(&model, 0.15);
        let path = ClosingPath::new(&model, &pre.config.joint_angles, &squ.config.joint_angles).unwrap();
        let fingers: Vec<_> = path
            .lengths
            .iter()
            .enumerate()
            .map(|(i, l)| FingerContactModel {
                engagement: if i == 0 { None } else { Some(l * (0.3 + 0.1 * i as f64)) },
                stiffness: 20.0,
                yield_force: None,
            })
            .collect();
        let contact = ContactModel::new(fingers.clone()).unwrap();
        let settings = RunSettings::default();
        let r = run_grasp(&pre, &squ, &model, &contact, 2.0, &settings).unwrap();
        for (i, f) in fingers.iter().enumerate() {
            let o = scalar_recursion(path.lengths[i], f.engagement, 20.0, 2.0, &settings, r.steps);
            let expected = f.engagement.map_or(0.0, |e| 20.0 * (o.final_s - e).max(0.0));
            assert!((r.fingers[i].final_force - expected).abs() < 1e-6, "{name} finger {i}");
            assert_eq!(r.fingers[i].lock_step, o.lock_step, "{name} finger {i}");
            if o.lock_step.is_some() {
                assert!((1.8..=2.2).contains(&r.fingers[i].final_force));
            }
        }
    }
}

#[test]
fn trace_invariants() {
    let model = bundled_model("shadow-like-22dof").unwrap();
    let (pre, squ) = closing_pair(&model, 0.15);
    let path = ClosingPath::new(&model, &pre.config.joint_angles, &squ.config.joint_angles).unwrap();
    let fingers = path
        .lengths
        .iter()
        .map(|l| FingerContactModel { engagement: Some(0.4 * l), stiffness: 35.0, yield_force: None })
        .collect();
    let contact = ContactModel::new(fingers).unwrap();
    let settings = RunSettings::default();
    let r = run_grasp(&pre, &squ, &model, &contact, 1.5, &settings).unwrap();
    let again = run_grasp(&pre, &squ, &model, &contact, 1.5, &settings).unwrap();
    assert_eq!(r, again);
    for (i, f) in r.fingers.iter().enumerate() {
        assert!(f.peak_force >= f.final_force && f.final_force >= 0.0);
        assert!(f.peak_force <= 1.5 + 35.0 * f.max_rate * settings.dt + 1e-12);
        let lock = f.lock_step.unwrap();
        let held = r.trace[lock].targets[i];
        for row in &r.trace[lock..] {
            assert!(row.locked[i]);
            assert_eq!(row.targets[i], held);
        }
    }
}

#[test]
fn locking_prevents_damage_on_fragile_object() {
    let model = bundled_model("inspire-like-6dof").unwrap();
    let (pre, squ) = closing_pair(&model, 0.25);
    let path = ClosingPath::new(&model, &pre.config.joint_angles, &squ.config.joint_angles).unwrap();
    let fingers = path
        .lengths
        .iter()
        .map(|l| FingerContactModel { engagement: Some(0.5 * l), stiffness: 30.0, yield_force: Some(3.0) })
        .collect();
    let contact = ContactModel::new(fingers).unwrap();
    let locked = run_grasp(&pre, &squ, &model, &contact, 2.0, &RunSettings::default()).unwrap();
    let free = run_grasp(&pre, &squ, &model, &contact, 2.0, &RunSettings { lock_enabled: false, ..Default::default() }).unwrap();
    assert_eq!(locked.verdict, Verdict::Stable);
    assert_eq!(free.verdict, Verdict::Damaged);
}

proptest! {
    #[test]
    fn sense_force_matches_elementwise_oracle(
        cases in prop::collection::vec((-1.0f64..2.0, prop::option::of(0.0f64..1.0), 0.1f64..100.0), 1..6)
    ) {
        let fingers = cases.iter().map(|(_, e, k)| FingerContactModel { engagement: *e, stiffness: *k, yield_force: None }).collect();
        let m = ContactModel::new(fingers).unwrap();
        let s: Vec<f64> = cases.iter().map(|c| c.0).collect();
        let f = sense_force(&m, &s).unwrap();
        for ((s, e, k), got) in cases.iter().zip(f) {
            let expected = match e { Some(e) if s > e => k * (s - e), _ => 0.0 };
            prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + expected));
        }
    }
}
