use std::sync::OnceLock;

use stlplan::executor::{EventKind, Kick};
use stlplan::primitives::NoiseSpec;
use stlplan::{execute, plan, ExecConfig, ExecError, MotionLibrary, PlanResult, Scenario};

/// A seed for which the bundled phi3 scenario finds a satisfying plan.
const PHI3_SATISFIABLE_SEED: u64 = 3;

struct Fixture {
    scenario: Scenario,
    lib: MotionLibrary,
    plan: PlanResult,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mut scenario = Scenario::bundled("phi3").unwrap();
        scenario.planner.seed = PHI3_SATISFIABLE_SEED;
        let lib = MotionLibrary::build(scenario.model, scenario.levels, &scenario.reach).unwrap();
        let plan = plan(&scenario, &lib).expect("satisfying plan for the fixture seed");
        Fixture { scenario, lib, plan }
    })
}

#[test]
fn noiseless_execution_reproduces_the_plan() {
    let f = fixture();
    let cfg = ExecConfig::from_scenario(&f.scenario, 1);
    let trace = execute(&f.plan.nodes, &f.scenario, &f.lib, &cfg).unwrap();
    assert_eq!(trace.replans, 0);
    assert_eq!(trace.corrections, 0);
    assert_eq!(trace.count(EventKind::DeviationDetected), 0);
    let planned = f.plan.trajectory.samples();
    let realized = trace.trajectory.samples();
    assert_eq!(planned.len(), realized.len());
    for (p, r) in planned.iter().zip(realized) {
        assert!((p.pos - r.pos).norm() <= 1e-6);
        assert!((p.t - r.t).abs() <= 1e-9);
    }
    assert!((trace.robustness - f.plan.robustness).abs() <= 1e-6);
    let segments = f.plan.schedule().len();
    assert_eq!(trace.count(EventKind::SegmentStart), segments);
    assert_eq!(trace.count(EventKind::SegmentEnd), segments);
    assert!(trace.events.windows(2).all(|w| w[0].t <= w[1].t));

    let again = execute(&f.plan.nodes, &f.scenario, &f.lib, &cfg).unwrap();
    assert_eq!(again.trajectory, trace.trajectory);
    assert_eq!(again.events, trace.events);
}

#[test]
fn kick_triggers_exactly_one_replan() {
    let f = fixture();
    let mut cfg = ExecConfig::from_scenario(&f.scenario, 4);
    cfg.eps_track = 0.1;
    cfg.kick = Some(Kick { node: 2, offset: 0.3 });
    let clean = execute(
        &f.plan.nodes,
        &f.scenario,
        &f.lib,
        &ExecConfig::from_scenario(&f.scenario, 4),
    )
    .unwrap();
    let trace = match execute(&f.plan.nodes, &f.scenario, &f.lib, &cfg) {
        Ok(t) => t,
        Err(ExecError::Replan { trace, .. }) => *trace,
        Err(e) => panic!("{e}"),
    };
    assert_eq!(trace.count(EventKind::ReplanTriggered), 1);
    assert_eq!(trace.count(EventKind::DeviationDetected), 1);
    let replan_at = trace
        .events
        .iter()
        .find(|e| e.kind == EventKind::ReplanTriggered)
        .unwrap()
        .t;
    assert!((replan_at - f.plan.nodes[2].time).abs() < 0.01);

    let before: Vec<_> = trace
        .trajectory
        .samples()
        .iter()
        .filter(|s| s.t <= f.plan.nodes[2].time)
        .collect();
    let clean_before: Vec<_> = clean
        .trajectory
        .samples()
        .iter()
        .filter(|s| s.t <= f.plan.nodes[2].time)
        .collect();
    assert_eq!(before, clean_before, "replanning rewrote realized history");
    assert!(trace.trajectory.samples().windows(2).all(|w| w[0].t < w[1].t));
    if trace.replans == 1 {
        assert_eq!(trace.plans.len(), 2);
        assert!((trace.plans[1][0].state.pos - f.plan.nodes[2].state.pos).norm() > 0.29);
    }
}

fn noisy(f: &Fixture, seed: u64, eps_correct: f64) -> Result<stlplan::ExecutionTrace, ExecError> {
    let mut cfg = ExecConfig::from_scenario(&f.scenario, seed);
    cfg.noise = NoiseSpec {
        pos_std: 0.005,
        ang_std: 0.0,
    };
    cfg.eps_correct = eps_correct;
    cfg.max_replans = 0;
    execute(&f.plan.nodes, &f.scenario, &f.lib, &cfg)
}

#[test]
fn small_noise_needs_no_replan() {
    let f = fixture();
    let quiet = (0..20)
        .filter(|&seed| match noisy(f, seed, f.scenario.exec.eps_track / 2.0) {
            Ok(t) => t.count(EventKind::ReplanTriggered) == 0,
            Err(ExecError::ReplanBudget { .. }) => false,
            Err(e) => panic!("{e}"),
        })
        .count();
    assert!(quiet >= 16, "only {quiet}/20 runs needed no replan");
}

#[test]
fn correction_legs_keep_the_robot_on_schedule() {
    let f = fixture();
    let mut quiet = 0;
    let mut corrections = 0;
    for seed in 0..10 {
        if let Ok(t) = noisy(f, seed, 0.01) {
            quiet += 1;
            corrections += t.corrections;
            let last = t.trajectory.samples().last().unwrap();
            let planned = f.plan.nodes.last().unwrap();
            assert!((last.pos - planned.state.pos).norm() <= f.scenario.exec.eps_track);
        }
    }
    assert!(quiet >= 8, "only {quiet}/10 runs needed no replan");
    assert!(corrections > 0);
}

#[test]
fn tracking_error_without_budget_fails_with_trace() {
    let f = fixture();
    let mut cfg = ExecConfig::from_scenario(&f.scenario, 0);
    cfg.kick = Some(Kick {
        node: 1,
        offset: -0.5,
    });
    cfg.max_replans = 0;
    match execute(&f.plan.nodes, &f.scenario, &f.lib, &cfg) {
        Err(ExecError::ReplanBudget { trace }) => {
            assert_eq!(trace.count(EventKind::DeviationDetected), 1);
            assert_eq!(trace.count(EventKind::ReplanTriggered), 0);
            assert!(trace.robustness.is_nan());
        }
        other => panic!("{other:?}"),
    }
}
