mod common;

use common::{arb_formula, arb_trajectory, eval_config, oracle_position, oracle_robustness};
use proptest::prelude::*;
use stlplan::stl::{
    parse_formula, prefix_robustness, robustness, EvalConfig, Formula, Monitor, Predicate, TimedTrajectory,
};

const SPAN: f64 = 10.0;

fn traj_and_formula() -> impl Strategy<Value = (Formula, TimedTrajectory)> {
    (arb_formula(SPAN), arb_trajectory(10, SPAN))
}

/// Largest speed of the interpolated signal.
fn max_speed(traj: &TimedTrajectory) -> f64 {
    traj.samples()
        .windows(2)
        .map(|w| (w[1].pos - w[0].pos).norm() / (w[1].t - w[0].t))
        .fold(0.0, f64::max)
}

/// Lipschitz bound of the formula's atoms over the 3 m box.
fn atom_lipschitz(f: &Formula) -> f64 {
    f.predicates()
        .iter()
        .map(|p| match p {
            Predicate::HalfPlane { b: Some(b), a, .. } => {
                3.0 + (3.0 - a).abs().max(a.abs()) + (3.0 - b).abs().max(b.abs())
            }
            _ => 1.0,
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(f in arb_formula(SPAN)) {
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn negation_is_exact((f, traj) in traj_and_formula()) {
        let cfg = eval_config();
        let v = robustness(&f, &traj, 0.0, &cfg).unwrap();
        let n = robustness(&Formula::not(f), &traj, 0.0, &cfg).unwrap();
        prop_assert_eq!(n.to_bits(), (-v).to_bits());
    }

    #[test]
    fn matches_independent_evaluator((f, traj) in traj_and_formula()) {
        let cfg = eval_config();
        let v = robustness(&f, &traj, 0.0, &cfg).unwrap();
        let o = oracle_robustness(&f, &traj, 0.0, &cfg);
        prop_assert!((v - o).abs() <= 1e-9, "{} vs {} for {}", v, o, f);
    }

    #[test]
    fn derived_operators_agree(
        g in common::arb_state_formula(2),
        i in common::arb_interval(SPAN),
        traj in arb_trajectory(10, SPAN),
    ) {
        let cfg = eval_config();
        let ev = robustness(&Formula::eventually(g.clone(), i), &traj, 0.0, &cfg).unwrap();
        let until = robustness(&Formula::until(Formula::True, g.clone(), i), &traj, 0.0, &cfg).unwrap();
        prop_assert!((ev - until).abs() <= 1e-12);
        let al = robustness(&Formula::always(g.clone(), i), &traj, 0.0, &cfg).unwrap();
        let dual = robustness(&Formula::eventually(Formula::not(g), i), &traj, 0.0, &cfg).unwrap();
        prop_assert!((al + dual).abs() <= 1e-12);
    }

    #[test]
    fn prefix_of_complete_trajectory_is_robustness((f, traj) in traj_and_formula()) {
        let cfg = eval_config();
        let full = robustness(&f, &traj, 0.0, &cfg).unwrap();
        prop_assert_eq!(prefix_robustness(&f, &traj, &cfg), full);
    }

    #[test]
    fn monitor_matches_direct_prefix((f, traj) in traj_and_formula()) {
        let cfg = eval_config();
        let monitor = Monitor::new(&f, cfg).unwrap();
        let mut st = monitor.start(traj.first());
        for (k, s) in traj.samples().iter().enumerate().skip(1) {
            monitor.extend(&mut st, s.pos, s.t);
            let prefix = TimedTrajectory::new(traj.samples()[..=k].to_vec(), false).unwrap();
            let direct = prefix_robustness(&f, &prefix, &cfg);
            let inc = monitor.prefix_value(&st);
            prop_assert!((inc - direct).abs() <= 1e-12, "k={} {} vs {}", k, inc, direct);
            prop_assert!(monitor.prefix_upper_bound(&st) >= inc);
        }
    }

    #[test]
    fn finer_grid_moves_robustness_by_at_most_lipschitz_step((f, traj) in traj_and_formula()) {
        let coarse = eval_config();
        let fine = EvalConfig { dt_eval: coarse.dt_eval / 2.0, ..coarse };
        let a = robustness(&f, &traj, 0.0, &coarse).unwrap();
        let b = robustness(&f, &traj, 0.0, &fine).unwrap();
        let bound = atom_lipschitz(&f) * max_speed(&traj) * coarse.dt_eval;
        prop_assert!((a - b).abs() <= bound + 1e-9, "{} vs {} bound {}", a, b, bound);
    }

    #[test]
    fn nonnegative_robustness_is_sound_on_the_grid(
        p in common::arb_predicate(),
        i in common::arb_interval(SPAN),
        traj in arb_trajectory(10, SPAN),
    ) {
        let cfg = eval_config();
        let f = Formula::always(Formula::Atom(p.clone()), i);
        if robustness(&f, &traj, 0.0, &cfg).unwrap() >= 0.0 {
            for t in common::oracle_instants(&traj, &i, cfg.dt_eval) {
                prop_assert!(p.eval(&oracle_position(&traj, t)) >= 0.0, "t={}", t);
            }
        }
    }
}

#[test]
fn goal_window_example() {
    let f = parse_formula("F[20,25](ball(x, (2.5,0.5)) <= 0.25)").unwrap();
    assert_eq!(
        f,
        Formula::eventually(
            Formula::Atom(Predicate::Ball {
                center: stlplan::Point::new(2.5, 0.5),
                radius: 0.25,
                inside: true
            }),
            stlplan::stl::TimeInterval::new(20.0, 25.0).unwrap()
        )
    );
}

#[test]
fn halving_grid_regression() {
    use stlplan::stl::TimedSample;
    use stlplan::Point;
    let traj = TimedTrajectory::new(
        vec![
            TimedSample::new(Point::new(0.2, 0.2), 0.0, 0.0),
            TimedSample::new(Point::new(2.8, 0.4), 0.0, 3.33),
            TimedSample::new(Point::new(1.0, 2.9), 0.0, 7.01),
        ],
        true,
    )
    .unwrap();
    let f = parse_formula("F[1.02,6.97](ball(x,(2.0,2.0)) <= 0.3)").unwrap();
    let mut last = None;
    for k in 0..6 {
        let cfg = EvalConfig {
            dt_eval: 0.1 / 2f64.powi(k),
            rho_opt: 4.0,
        };
        let v = robustness(&f, &traj, 0.0, &cfg).unwrap();
        let oracle = oracle_robustness(&f, &traj, 0.0, &cfg);
        assert!((v - oracle).abs() < 1e-12);
        if let Some(prev) = last {
            assert!(
                v >= prev - 1e-12,
                "a finer grid only adds instants to an eventually"
            );
            assert!(v - prev <= max_speed(&traj) * cfg.dt_eval * 2.0);
        }
        last = Some(v);
    }
}
