//! Direct recursive evaluation of quantitative STL semantics on a
//! piecewise-linear position signal.
//!
//! Intervals are absolute times. Temporal min/max run over the evaluation
//! set of an interval: grid instants `t0 + k·dt_eval`, every sample time,
//! and the interval endpoints, all restricted to the covered window.

use super::ast::{Formula, TimeInterval};
use super::trajectory::TimedTrajectory;
use super::{finalize, grid_time, EvalConfig, StlError};

#[derive(Debug, Clone, Copy)]
enum Mode {
    Complete,
    Prefix { t_end: f64 },
}

struct Ctx<'a> {
    traj: &'a TimedTrajectory,
    cfg: &'a EvalConfig,
    mode: Mode,
}

impl Ctx<'_> {
    fn points(&self, i: &TimeInterval) -> Vec<f64> {
        let t0 = self.traj.start_time();
        let dt = self.cfg.dt_eval;
        let lo = i.start().max(t0);
        let hi = i.end().min(self.traj.end_time());
        if lo > hi {
            return Vec::new();
        }
        let mut pts = Vec::new();
        let mut k = (((lo - t0) / dt).floor() as i64 - 1).max(0);
        loop {
            let t = grid_time(t0, k, dt);
            if t > hi {
                break;
            }
            if t >= lo {
                pts.push(t);
            }
            k += 1;
        }
        let samples = self.traj.samples();
        let first = samples.partition_point(|s| s.t < lo);
        pts.extend(samples[first..].iter().take_while(|s| s.t <= hi).map(|s| s.t));
        if i.start() >= t0 && i.start() <= hi {
            pts.push(i.start());
        }
        if i.end() >= lo && i.end() <= hi {
            pts.push(i.end());
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    fn unelapsed(&self, i: &TimeInterval) -> bool {
        match self.mode {
            Mode::Complete => false,
            Mode::Prefix { t_end } => t_end < i.end(),
        }
    }

    fn value(&self, f: &Formula, t: f64) -> f64 {
        match f {
            Formula::True => f64::INFINITY,
            Formula::Atom(p) => p.eval(&self.traj.position_at(t)),
            Formula::Not(g) => -self.value(g, t),
            Formula::And(l, r) => self.value(l, t).min(self.value(r, t)),
            Formula::Or(l, r) => self.value(l, t).max(self.value(r, t)),
            Formula::Always(g, i) => {
                let pts = self.points(i);
                if pts.is_empty() && matches!(self.mode, Mode::Prefix { .. }) {
                    return self.cfg.rho_opt;
                }
                pts.iter()
                    .map(|&s| self.value(g, s))
                    .fold(f64::INFINITY, f64::min)
            }
            Formula::Eventually(g, i) => {
                if self.unelapsed(i) {
                    return self.cfg.rho_opt;
                }
                self.points(i)
                    .iter()
                    .map(|&s| self.value(g, s))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Formula::Until(l, r, i) => {
                if self.unelapsed(i) {
                    return self.cfg.rho_opt;
                }
                let mut hold = f64::INFINITY;
                let mut best = f64::NEG_INFINITY;
                for s in self.points(i) {
                    hold = hold.min(self.value(l, s));
                    best = best.max(self.value(r, s).min(hold));
                }
                best
            }
        }
    }
}

/// Robustness of `formula` on a complete trajectory, evaluated at `at`.
///
/// Every interval in the formula must lie inside the sampled time span.
pub fn robustness(
    formula: &Formula,
    traj: &TimedTrajectory,
    at: f64,
    cfg: &EvalConfig,
) -> Result<f64, StlError> {
    if !traj.is_complete() {
        return Err(StlError::Incomplete);
    }
    let (start, end) = (traj.start_time(), traj.end_time());
    for i in formula.intervals() {
        if i.start() < start || i.end() > end {
            return Err(StlError::UncoveredInterval {
                t1: i.start(),
                t2: i.end(),
                start,
                end,
            });
        }
    }
    if at < start || at > end {
        return Err(StlError::UncoveredInterval {
            t1: at,
            t2: at,
            start,
            end,
        });
    }
    let ctx = Ctx {
        traj,
        cfg,
        mode: Mode::Complete,
    };
    Ok(finalize(ctx.value(formula, at), cfg.rho_opt))
}

/// Robustness of a possibly unfinished trajectory at its first sample.
///
/// Obligations whose window is not fully elapsed are optimistic:
/// eventually/until contribute `rho_opt`, always is taken over the elapsed
/// part of its window only.
pub fn prefix_robustness(formula: &Formula, traj: &TimedTrajectory, cfg: &EvalConfig) -> f64 {
    let ctx = Ctx {
        traj,
        cfg,
        mode: Mode::Prefix {
            t_end: traj.end_time(),
        },
    };
    finalize(ctx.value(formula, traj.start_time()), cfg.rho_opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::stl::{parse_formula, Predicate, TimedSample};

    fn traj(points: &[(f64, f64, f64)], complete: bool) -> TimedTrajectory {
        TimedTrajectory::new(
            points
                .iter()
                .map(|&(x, y, t)| TimedSample::new(Point::new(x, y), 0.0, t))
                .collect(),
            complete,
        )
        .unwrap()
    }

    fn cfg() -> EvalConfig {
        EvalConfig {
            dt_eval: 0.05,
            rho_opt: 10.0,
        }
    }

    #[test]
    fn ball_at_goal_equals_radius() {
        let f = parse_formula("ball(x,(2.5,0.5)) <= 0.25").unwrap();
        let tr = traj(&[(2.5, 0.5, 0.0), (1.0, 1.0, 1.0)], true);
        assert_eq!(robustness(&f, &tr, 0.0, &cfg()).unwrap(), 0.25);
    }

    #[test]
    fn always_halfplane_dense_grid() {
        // x0 >= 0 as a single-root half-plane; values 1.0, 0.5, 0.2 at t=0,1,2.
        let f = Formula::always(
            Formula::Atom(Predicate::HalfPlane {
                axis: 0,
                a: 0.0,
                b: None,
            }),
            TimeInterval::new(0.0, 2.0).unwrap(),
        );
        let tr = traj(&[(1.0, 0.0, 0.0), (0.5, 0.0, 1.0), (0.2, 0.0, 2.0)], true);
        let r = robustness(&f, &tr, 0.0, &cfg()).unwrap();
        // Brute force over the 0.05 s grid of the interpolated signal.
        let brute = (0..=40)
            .map(|k| tr.position_at(k as f64 * 0.05).x)
            .fold(f64::INFINITY, f64::min);
        assert!((r - 0.2).abs() < 1e-12);
        assert!((r - brute).abs() < 1e-12);
    }

    #[test]
    fn negation_is_exact() {
        let f = parse_formula("F[0,1](ball(x,(0,0)) <= 1) & G[0,2](box(x,(-1,-1),(2,2)))").unwrap();
        let tr = traj(&[(0.3, 0.1, 0.0), (0.9, 1.4, 1.0), (1.5, 0.2, 2.0)], true);
        let r = robustness(&f, &tr, 0.0, &cfg()).unwrap();
        let n = robustness(&Formula::not(f), &tr, 0.0, &cfg()).unwrap();
        assert_eq!(r, -n);
    }

    #[test]
    fn uncovered_interval_is_an_error() {
        let f = parse_formula("F[1,5](true)").unwrap();
        let tr = traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 2.0)], true);
        match robustness(&f, &tr, 0.0, &cfg()) {
            Err(StlError::UncoveredInterval { t1, t2, .. }) => {
                assert_eq!((t1, t2), (1.0, 5.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        let open = traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 9.0)], false);
        assert!(matches!(
            robustness(&f, &open, 0.0, &cfg()),
            Err(StlError::Incomplete)
        ));
    }

    #[test]
    fn true_maps_to_rho_opt() {
        let tr = traj(&[(0.0, 0.0, 0.0)], true);
        assert_eq!(robustness(&Formula::True, &tr, 0.0, &cfg()).unwrap(), 10.0);
        assert_eq!(
            robustness(&Formula::not(Formula::True), &tr, 0.0, &cfg()).unwrap(),
            -10.0
        );
    }

    #[test]
    fn prefix_unelapsed_eventually_is_optimistic() {
        let f = parse_formula("F[20,25](ball(x,(2.5,0.5)) <= 0.25)").unwrap();
        let tr = traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 10.0)], false);
        assert_eq!(prefix_robustness(&f, &tr, &cfg()), 10.0);
    }

    #[test]
    fn prefix_always_uses_elapsed_window() {
        let f = parse_formula("G[0,50](halfplane(x,0))").unwrap();
        let tr = traj(&[(2.0, 0.0, 0.0), (0.5, 0.0, 5.0), (1.0, 0.0, 10.0)], false);
        let oracle = (0..=200)
            .map(|k| tr.position_at(k as f64 * 0.05).x)
            .fold(f64::INFINITY, f64::min);
        let r = prefix_robustness(&f, &tr, &cfg());
        assert!((r - oracle).abs() < 1e-12);
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn prefix_of_complete_matches_robustness() {
        let f = parse_formula("G[0,2](ball(x,(1,1)) >= 0.3) & F[1,2](box(x,(0,0),(1,1)))").unwrap();
        let tr = traj(&[(0.0, 0.0, 0.0), (1.0, 0.2, 1.0), (0.8, 0.9, 2.0)], true);
        assert_eq!(
            prefix_robustness(&f, &tr, &cfg()),
            robustness(&f, &tr, 0.0, &cfg()).unwrap()
        );
    }
}
