//! Workspace geometry, static and timed disc obstacles, and collision checks
//! in workspace × time.

mod scenario;

pub use scenario::{
    bundled_scenario, ExecParams, NearRadius, PlannerParams, Scenario, ScenarioError, BUNDLED_SCENARIOS,
};

use crate::geometry::Point;
use crate::primitives::{RobotState, Segment};
use crate::stl::TimeInterval;

/// Axis-aligned workspace box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub lower: Point,
    pub upper: Point,
}

impl Workspace {
    pub fn new(lower: Point, upper: Point) -> Option<Self> {
        (lower.x < upper.x && lower.y < upper.y).then_some(Self { lower, upper })
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.lower.x && p.x <= self.upper.x && p.y >= self.lower.y && p.y <= self.upper.y
    }

    pub fn diagonal(&self) -> f64 {
        (self.upper - self.lower).norm()
    }

    pub fn extent(&self) -> Point {
        self.upper - self.lower
    }
}

/// Disc obstacle, optionally present only during `active`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
    pub active: Option<TimeInterval>,
}

impl Obstacle {
    pub fn is_active(&self, t: f64) -> bool {
        self.active.is_none_or(|i| i.contains(t))
    }

    pub fn is_static(&self) -> bool {
        self.active.is_none()
    }

    /// Whether the obstacle is present at any instant of `[t0, t1]`.
    fn active_during(&self, t0: f64, t1: f64) -> bool {
        self.active.is_none_or(|i| i.start() <= t1 && i.end() >= t0)
    }
}

/// Workspace plus obstacles, as seen by the collision checker.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub workspace: Workspace,
    pub obstacles: Vec<Obstacle>,
    /// Inflates every obstacle; 0 for a point robot.
    pub robot_radius: f64,
    /// Maximum arc length between checked points along a translation, meters.
    pub collision_step: f64,
}

/// A point of a piecewise-linear space-time path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub pos: Point,
    pub t: f64,
}

impl World {
    fn clear_of(&self, o: &Obstacle, p: &Point) -> bool {
        (p - o.center).norm() > o.radius + self.robot_radius
    }

    /// Inside the workspace and outside every obstacle active at `t`.
    pub fn point_free(&self, p: &Point, t: f64) -> bool {
        self.workspace.contains(p)
            && self
                .obstacles
                .iter()
                .all(|o| !o.is_active(t) || self.clear_of(o, p))
    }

    /// Inside the workspace and outside every always-present obstacle.
    pub fn point_free_static(&self, p: &Point) -> bool {
        self.workspace.contains(p)
            && self
                .obstacles
                .iter()
                .all(|o| !o.is_static() || self.clear_of(o, p))
    }

    /// Checks a piecewise-linear space-time path. Moving legs are checked
    /// every `collision_step` of arc length including both ends; stationary
    /// legs are checked against every obstacle active at any instant of the
    /// leg.
    pub fn path_free(&self, path: &[Waypoint]) -> bool {
        let Some(first) = path.first() else {
            return true;
        };
        if !self.point_free(&first.pos, first.t) {
            return false;
        }
        path.windows(2).all(|w| self.leg_free(&w[0], &w[1]))
    }

    fn leg_free(&self, a: &Waypoint, b: &Waypoint) -> bool {
        let len = (b.pos - a.pos).norm();
        if len == 0.0 {
            return self.workspace.contains(&a.pos)
                && self
                    .obstacles
                    .iter()
                    .all(|o| !o.active_during(a.t, b.t) || self.clear_of(o, &a.pos));
        }
        let n = (len / self.collision_step).ceil().max(1.0) as usize;
        (1..=n).all(|k| {
            let f = k as f64 / n as f64;
            let p = if k == n {
                b.pos
            } else {
                a.pos + (b.pos - a.pos) * f
            };
            let t = if k == n { b.t } else { a.t + (b.t - a.t) * f };
            self.point_free(&p, t)
        })
    }

    /// Simulates an edge made of policy segments from `start` at `t0` and
    /// checks it. Rotations hold position; translations move linearly.
    pub fn edge_free(&self, start: RobotState, t0: f64, segments: &[Segment]) -> bool {
        self.path_free(&edge_waypoints(start, t0, segments))
    }
}

/// Space-time corners of an edge described by policy segments.
pub fn edge_waypoints(start: RobotState, t0: f64, segments: &[Segment]) -> Vec<Waypoint> {
    let mut out = vec![Waypoint {
        pos: start.pos,
        t: t0,
    }];
    let mut s = start;
    let mut t = t0;
    for seg in segments {
        let (p, d) = (seg.policy, seg.duration);
        if p.kind().is_rotation() {
            s.heading += p.velocity * d;
        } else {
            s.pos += crate::geometry::direction(s.heading) * (p.velocity * d);
        }
        t += d;
        out.push(Waypoint { pos: s.pos, t });
    }
    out
}
