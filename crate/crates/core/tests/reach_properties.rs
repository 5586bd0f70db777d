use proptest::prelude::*;
use stlplan::geometry::wrap_angle;
use stlplan::primitives::{rollout_end, Policy, RobotModel, RobotState};
use stlplan::reach::ReachConfig;
use stlplan::{MotionLibrary, Point};

fn libraries(degree: usize) -> Vec<MotionLibrary> {
    let cfg = ReachConfig {
        degree,
        ..ReachConfig::default()
    };
    [RobotModel::differential_drive(), RobotModel::quadruped_proxy()]
        .into_iter()
        .map(|m| MotionLibrary::build(m, 3, &cfg).unwrap())
        .collect()
}

/// Magnitude of the pose change a policy produces from the origin.
fn displacement(lib: &MotionLibrary, p: &Policy, duration: f64) -> f64 {
    let start = RobotState::new(Point::zeros(), 0.0);
    let end = rollout_end(&lib.model, start, p, duration).unwrap();
    if p.kind().is_rotation() {
        (end.heading - start.heading).abs()
    } else {
        (end.pos - start.pos).norm()
    }
}

fn round_trip_error(lib: &MotionLibrary, p: &Policy, d: f64) -> f64 {
    let duration = lib.estimator(p.id).predict_duration(d).unwrap();
    (displacement(lib, p, duration) - d).abs() / d
}

#[test]
fn cubic_estimators_round_trip_within_one_percent() {
    for lib in libraries(3) {
        for p in &lib.policies {
            let e = lib.estimator(p.id);
            for k in 0..50 {
                let d = e.d_min + (e.d_max - e.d_min) * k as f64 / 49.0;
                let err = round_trip_error(&lib, p, d);
                assert!(err <= 0.01, "{} d={d} err={err}", p.id);
            }
        }
    }
}

#[test]
fn linear_estimators_are_exact_for_constant_velocity() {
    for lib in libraries(1) {
        for p in &lib.policies {
            let e = lib.estimator(p.id);
            assert_eq!(e.degree(), 1);
            for k in 0..50 {
                let d = e.d_min + (e.d_max - e.d_min) * k as f64 / 49.0;
                let err = round_trip_error(&lib, p, d);
                assert!(err <= 1e-6, "{} d={d} err={err}", p.id);
            }
        }
    }
}

#[test]
fn quarter_turn_duration() {
    let lib = &libraries(1)[0];
    let fastest = lib
        .policies
        .iter()
        .find(|p| p.kind().is_rotation() && p.velocity > 0.0 && p.id.level == 3)
        .unwrap();
    let t = lib
        .estimator(fastest.id)
        .predict_duration(std::f64::consts::FRAC_PI_2)
        .unwrap();
    assert!((t - std::f64::consts::FRAC_PI_2 / 2.84).abs() < 1e-9);
}

fn pose() -> impl Strategy<Value = RobotState> {
    (0.0..3.0f64, 0.0..3.0f64, -3.2..3.2f64).prop_map(|(x, y, h)| RobotState::new(Point::new(x, y), h))
}

proptest! {
    #[test]
    fn rollouts_compose(start in pose(), which in 0usize..12, a in 0.01..5.0f64, b in 0.01..5.0f64) {
        let m = RobotModel::differential_drive();
        let policies = stlplan::primitives::policy_library(&m, 3).unwrap();
        let p = &policies[which];
        let whole = rollout_end(&m, start, p, a + b).unwrap();
        let mid = rollout_end(&m, start, p, a).unwrap();
        let split = rollout_end(&m, mid, p, b).unwrap();
        prop_assert!((whole.pos - split.pos).norm() < 1e-12);
        prop_assert!(wrap_angle(whole.heading - split.heading).abs() < 1e-12);
    }

    #[test]
    fn estimators_are_increasing(which in 0usize..12, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let lib = MotionLibrary::build(RobotModel::differential_drive(), 3, &ReachConfig::default()).unwrap();
        let e = lib.estimator(lib.policies[which].id);
        let (lo, hi) = (u.min(v), u.max(v));
        prop_assume!(hi - lo > 1e-6);
        let d = |f: f64| e.d_min + (e.d_max - e.d_min) * f;
        prop_assert!(e.predict_duration(d(lo)).unwrap() < e.predict_duration(d(hi)).unwrap());
    }
}
