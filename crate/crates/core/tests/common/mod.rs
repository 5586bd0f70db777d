//! Independent reference evaluator and random inputs shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use proptest::prelude::*;
use stlplan::stl::{EvalConfig, Formula, Predicate, TimeInterval, TimedSample, TimedTrajectory};
use stlplan::Point;

/// Piecewise-linear position by linear scan.
pub fn oracle_position(traj: &TimedTrajectory, t: f64) -> Point {
    let s = traj.samples();
    if t <= s[0].t {
        return s[0].pos;
    }
    for w in s.windows(2) {
        if t <= w[1].t {
            let f = (t - w[0].t) / (w[1].t - w[0].t);
            return w[0].pos + (w[1].pos - w[0].pos) * f;
        }
    }
    s[s.len() - 1].pos
}

fn oracle_atom(p: &Predicate, x: Point) -> f64 {
    match *p {
        Predicate::Ball {
            center,
            radius,
            inside,
        } => {
            let d = ((x.x - center.x).powi(2) + (x.y - center.y).powi(2)).sqrt();
            if inside {
                radius - d
            } else {
                d - radius
            }
        }
        Predicate::Box { lower, upper, inside } => {
            let m = [x.x - lower.x, upper.x - x.x, x.y - lower.y, upper.y - x.y]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if inside {
                m
            } else {
                -m
            }
        }
        Predicate::HalfPlane { axis, a, b } => {
            let v = if axis == 0 { x.x } else { x.y };
            b.map_or(v - a, |b| (v - a) * (v - b))
        }
    }
}

/// Evaluation instants of an interval: every grid instant, sample time and
/// endpoint inside both the interval and the trajectory span.
pub fn oracle_instants(traj: &TimedTrajectory, i: &TimeInterval, dt: f64) -> Vec<f64> {
    let (t0, t_end) = (traj.start_time(), traj.end_time());
    let (lo, hi) = (i.start().max(t0), i.end().min(t_end));
    let mut out: Vec<f64> = (0..)
        .map(|k| t0 + k as f64 * dt)
        .take_while(|&t| t <= hi)
        .filter(|&t| t >= lo)
        .collect();
    out.extend(traj.samples().iter().map(|s| s.t).filter(|&t| t >= lo && t <= hi));
    out.extend([i.start(), i.end()].into_iter().filter(|&t| t >= lo && t <= hi));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn raw(f: &Formula, traj: &TimedTrajectory, t: f64, dt: f64) -> f64 {
    match f {
        Formula::True => f64::INFINITY,
        Formula::Atom(p) => oracle_atom(p, oracle_position(traj, t)),
        Formula::Not(g) => -raw(g, traj, t, dt),
        Formula::And(l, r) => raw(l, traj, t, dt).min(raw(r, traj, t, dt)),
        Formula::Or(l, r) => raw(l, traj, t, dt).max(raw(r, traj, t, dt)),
        Formula::Always(g, i) => oracle_instants(traj, i, dt)
            .iter()
            .map(|&s| raw(g, traj, s, dt))
            .fold(f64::INFINITY, f64::min),
        Formula::Eventually(g, i) => oracle_instants(traj, i, dt)
            .iter()
            .map(|&s| raw(g, traj, s, dt))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Until(l, r, i) => {
            let ts = oracle_instants(traj, i, dt);
            ts.iter()
                .enumerate()
                .map(|(k, &s)| {
                    let hold = ts[..=k]
                        .iter()
                        .map(|&u| raw(l, traj, u, dt))
                        .fold(f64::INFINITY, f64::min);
                    raw(r, traj, s, dt).min(hold)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Robustness of a complete trajectory by plain recursion, with infinite
/// results reported as `±rho_opt`.
pub fn oracle_robustness(f: &Formula, traj: &TimedTrajectory, at: f64, cfg: &EvalConfig) -> f64 {
    let v = raw(f, traj, at, cfg.dt_eval);
    if v.is_infinite() {
        cfg.rho_opt.copysign(v)
    } else {
        v
    }
}

fn coord() -> impl Strategy<Value = f64> {
    (0i32..=300).prop_map(|k| k as f64 / 100.0)
}

fn point() -> impl Strategy<Value = Point> {
    (coord(), coord()).prop_map(|(x, y)| Point::new(x, y))
}

pub fn arb_predicate() -> impl Strategy<Value = Predicate> {
    prop_oneof![
        (point(), 1i32..=150, any::<bool>()).prop_map(|(center, r, inside)| Predicate::Ball {
            center,
            radius: r as f64 / 100.0,
            inside,
        }),
        (point(), 1i32..=200, 1i32..=200, any::<bool>()).prop_map(|(lower, w, h, inside)| {
            Predicate::Box {
                lower,
                upper: lower + Point::new(w as f64 / 100.0, h as f64 / 100.0),
                inside,
            }
        }),
        (0usize..2, coord(), proptest::option::of(coord())).prop_map(|(axis, a, b)| Predicate::HalfPlane {
            axis,
            a,
            b
        }),
    ]
}

/// Interval with endpoints on a 0.25 s lattice inside `[0, span]`.
pub fn arb_interval(span: f64) -> impl Strategy<Value = TimeInterval> {
    let n = (span * 4.0) as i32;
    (0..n, 1..=n).prop_map(move |(a, len)| {
        let t1 = a as f64 / 4.0;
        let t2 = (t1 + len as f64 / 4.0).min(span);
        let t1 = t1.min(t2 - 0.25);
        TimeInterval::new(t1, t2).unwrap()
    })
}

/// Boolean combinations of atoms and `true`, up to `depth` operators deep.
pub fn arb_state_formula(depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::True),
        6 => arb_predicate().prop_map(Formula::Atom),
    ];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::or(l, r)),
        ]
    })
}

/// Formulas of depth ≤ 3 over the three atom families, with temporal
/// operators never nested and intervals inside `[0, span]`.
pub fn arb_formula(span: f64) -> impl Strategy<Value = Formula> {
    let temporal = prop_oneof![
        (arb_state_formula(1), arb_interval(span)).prop_map(|(f, i)| Formula::always(f, i)),
        (arb_state_formula(1), arb_interval(span)).prop_map(|(f, i)| Formula::eventually(f, i)),
        (arb_state_formula(0), arb_state_formula(0), arb_interval(span))
            .prop_map(|(l, r, i)| Formula::until(l, r, i)),
    ];
    let level = prop_oneof![3 => temporal, 1 => arb_state_formula(1)];
    prop_oneof![
        level.clone(),
        level.clone().prop_map(Formula::not),
        (level.clone(), level.clone()).prop_map(|(l, r)| Formula::and(l, r)),
        (level.clone(), level).prop_map(|(l, r)| Formula::or(l, r)),
    ]
}

/// `n` samples starting at t = 0 and ending at `span`, positions inside
/// the 3 m × 3 m workspace.
pub fn arb_trajectory(n: usize, span: f64) -> impl Strategy<Value = TimedTrajectory> {
    (
        proptest::collection::vec(point(), n),
        proptest::collection::vec(1u32..=100, n - 1),
        proptest::collection::vec(-314i32..=314, n),
    )
        .prop_map(move |(pts, gaps, headings)| {
            let total: u32 = gaps.iter().sum();
            let mut t = 0.0;
            let mut samples = vec![TimedSample::new(pts[0], headings[0] as f64 / 100.0, 0.0)];
            for (k, g) in gaps.iter().enumerate() {
                t += span * *g as f64 / total as f64;
                let t = if k + 2 == n { span } else { t };
                samples.push(TimedSample::new(pts[k + 1], headings[k + 1] as f64 / 100.0, t));
            }
            TimedTrajectory::new(samples, true).unwrap()
        })
}

pub fn eval_config() -> EvalConfig {
    EvalConfig {
        dt_eval: 0.05,
        rho_opt: 18f64.sqrt(),
    }
}
