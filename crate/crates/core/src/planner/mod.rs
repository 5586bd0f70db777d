//! Tree search in workspace × time.
//!
//! Each iteration samples a free point, steers the nearest node towards it,
//! realizes the move with randomly chosen policies and, if the edge is
//! collision-free at its actual times, adds the landing point as a node. A
//! node's cost is its parent's cost minus the prefix robustness of the
//! trajectory ending at the node, so cheaper paths keep the specification
//! satisfiable for longer. Nearby nodes are then rewired through the new node
//! when that lowers their cost without delaying them, and the times of their
//! subtrees are recomputed. The answer is the node whose trajectory, held still until the
//! formula horizon, has the largest non-negative robustness.

mod edge;
mod tree;

pub use edge::{correction_edge, exact_edge, realign, sample_policies, segment_ends, Choice, Edge};
pub use tree::{Node, Tree};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Point;
use crate::library::MotionLibrary;
use crate::primitives::{RobotState, Segment};
use crate::stl::{
    prefix_robustness, EvalConfig, Monitor, MonitorState, StlError, TimedSample, TimedTrajectory,
};
use crate::world::{NearRadius, Scenario, World};

/// Largest mismatch between a history's last sample and the planner start.
const HISTORY_TOL: f64 = 1e-9;
/// Sampling attempts before giving up on rejecting static obstacles.
const MAX_SAMPLE_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no satisfying trajectory after {iterations} iterations (best robustness {})",
        best.map_or("n/a".to_string(), |b| format!("{b:.6}")))]
    Unsatisfied { iterations: usize, best: Option<f64> },
    #[error("start position is not collision-free")]
    StartInCollision,
    #[error("history must end at the start state")]
    History,
    #[error(transparent)]
    Formula(#[from] StlError),
}

/// One node of a returned plan with the edge that reaches it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub state: RobotState,
    pub time: f64,
    /// Empty for the first node.
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub nodes: Vec<PlanNode>,
    /// Samples from the first node on, including the end of every rotation
    /// leg. Not held until the horizon.
    pub trajectory: TimedTrajectory,
    /// Robustness of the history, the plan, and a final stop, at the history
    /// start.
    pub robustness: f64,
    pub iterations: usize,
    pub seed: u64,
    pub tree_size: usize,
}

impl PlanResult {
    /// All segments in execution order.
    pub fn schedule(&self) -> Vec<Segment> {
        self.nodes
            .iter()
            .flat_map(|n| n.segments.iter().copied())
            .collect()
    }

    pub fn end_time(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.time)
    }
}

/// One accepted rewire.
#[derive(Debug, Clone, PartialEq)]
pub struct RewireRecord {
    pub node: usize,
    pub old_parent: usize,
    pub new_parent: usize,
    pub old_cost: f64,
    pub new_cost: f64,
    pub old_time: f64,
    pub new_time: f64,
    /// Descendants whose times and costs were recomputed, breadth first.
    pub moved: Vec<usize>,
    /// Descendants removed because their edge became infeasible.
    pub pruned: usize,
}

/// Arrival time of an edge, as accumulated segment by segment so that it
/// equals the time of the edge's last sample bit for bit.
fn end_time(samples: &[TimedSample]) -> f64 {
    samples.last().expect("edges have segments").t
}

/// Uniform sample of the workspace outside always-present obstacles.
pub fn sample_free<R: Rng + ?Sized>(world: &World, rng: &mut R) -> Point {
    let (lo, hi) = (world.workspace.lower, world.workspace.upper);
    let mut p = lo;
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        p = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if world.point_free_static(&p) {
            break;
        }
    }
    p
}

/// Alive node closest to `p` in the workspace; ties go to the lowest id.
pub fn nearest(tree: &Tree, p: &Point) -> usize {
    let mut best = (0, f64::INFINITY);
    for (id, n) in tree.alive() {
        let d = (n.state.pos - p).norm_squared();
        if d < best.1 {
            best = (id, d);
        }
    }
    best.0
}

/// Point on the ray from `from` through `to` at the clamped distance.
pub fn steer(to: Point, from: Point, d_min: f64, d_max: f64) -> Point {
    let v = to - from;
    let d = v.norm();
    if d == 0.0 {
        return from + Point::new(d_min, 0.0);
    }
    from + v * (d.clamp(d_min, d_max) / d)
}

/// Incremental planner state, exposed so runs can be stepped and inspected.
pub struct Planner<'a> {
    scenario: &'a Scenario,
    lib: &'a MotionLibrary,
    monitor: Monitor,
    cfg: EvalConfig,
    horizon: f64,
    near_radius: f64,
    /// Realized samples strictly before the root.
    history: Vec<TimedSample>,
    tree: Tree,
    rng: ChaCha8Rng,
    iterations: usize,
}

impl<'a> Planner<'a> {
    /// Roots a tree at the scenario start. With `history`, its last sample
    /// must be the start state and robustness is evaluated on the history
    /// followed by the planned motion.
    pub fn new(
        scenario: &'a Scenario,
        lib: &'a MotionLibrary,
        history: Option<&TimedTrajectory>,
    ) -> Result<Self, PlanError> {
        let cfg = scenario.eval_config();
        let monitor = Monitor::new(&scenario.formula, cfg)?;
        let root = TimedSample::new(scenario.start.pos, scenario.start.heading, scenario.start_time);
        if !scenario.world.point_free(&root.pos, root.t) {
            return Err(PlanError::StartInCollision);
        }
        let (history, state) = match history {
            Some(h) => {
                let last = h.last();
                if (last.pos - root.pos).norm() > HISTORY_TOL || (last.t - root.t).abs() > HISTORY_TOL {
                    return Err(PlanError::History);
                }
                let mut samples = h.samples().to_vec();
                samples.pop();
                let mut st = monitor.start(h.first());
                for s in &samples[1.min(samples.len())..] {
                    monitor.extend(&mut st, s.pos, s.t);
                }
                if !samples.is_empty() {
                    monitor.extend(&mut st, root.pos, root.t);
                }
                (samples, st)
            }
            None => (Vec::new(), monitor.start(&root)),
        };
        let prefix = monitor.prefix_value(&state);
        let mut tree = Tree::default();
        tree.push(Node {
            state: scenario.start,
            time: scenario.start_time,
            parent: None,
            segments: Vec::new(),
            cost: -prefix,
            prefix_robustness: prefix,
            alive: true,
            children: Vec::new(),
            monitor: state,
        });
        let near_radius = match scenario.planner.near_radius {
            NearRadius::DMax => lib.d_max,
            NearRadius::Fixed(r) => r,
        };
        Ok(Self {
            scenario,
            lib,
            horizon: scenario.formula.horizon(),
            monitor,
            cfg,
            near_radius,
            history,
            tree,
            rng: ChaCha8Rng::seed_from_u64(scenario.planner.seed),
            iterations: 0,
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn eval_config(&self) -> &EvalConfig {
        &self.cfg
    }

    fn world(&self) -> &World {
        &self.scenario.world
    }

    /// Samples along an edge: the end of every segment, with the last one
    /// placed exactly on the edge's end pose.
    fn edge_samples(&self, from: RobotState, t0: f64, edge: &Edge) -> Vec<TimedSample> {
        let mut ends = segment_ends(self.lib, from, t0, &edge.segments);
        if let Some(last) = ends.last_mut() {
            last.0 = edge.end;
        }
        ends.into_iter()
            .map(|(s, t)| TimedSample::new(s.pos, s.heading, t))
            .collect()
    }

    fn extend_monitor(&self, st: &mut MonitorState, samples: &[TimedSample]) {
        for s in samples {
            self.monitor.extend(st, s.pos, s.t);
        }
    }

    /// Runs one sampling round and returns the rewires it caused.
    pub fn iterate(&mut self) -> Vec<RewireRecord> {
        self.iterations += 1;
        let rnd = sample_free(&self.scenario.world, &mut self.rng);
        let parent_id = nearest(&self.tree, &rnd);
        let parent = self.tree.node(parent_id);
        let (from, t0) = (parent.state, parent.time);
        let target = steer(rnd, from.pos, self.lib.d_min, self.lib.d_max);
        let Some(edge) = sample_policies(
            self.lib,
            from,
            target,
            self.scenario.planner.theta_tol,
            &mut self.rng,
        ) else {
            return Vec::new();
        };
        if !self.world().edge_free(from, t0, &edge.segments) {
            return Vec::new();
        }
        let samples = self.edge_samples(from, t0, &edge);
        let parent = self.tree.node(parent_id);
        let mut st = parent.monitor.clone();
        self.extend_monitor(&mut st, &samples);
        let prefix = self.monitor.prefix_value(&st);
        let node = Node {
            state: edge.end,
            time: end_time(&samples),
            parent: Some(parent_id),
            segments: edge.segments,
            cost: parent.cost - prefix,
            prefix_robustness: prefix,
            alive: true,
            children: Vec::new(),
            monitor: st,
        };
        let id = self.tree.push(node);
        self.rewire(id)
    }

    fn rewire(&mut self, new: usize) -> Vec<RewireRecord> {
        let center = self.tree.node(new).state.pos;
        let (lo, hi) = (
            self.lib.d_min * self.lib.d_min,
            self.near_radius * self.near_radius,
        );
        let near: Vec<usize> = self
            .tree
            .alive()
            .filter(|(id, n)| {
                let d2 = (n.state.pos - center).norm_squared();
                *id != new && d2 >= lo && d2 <= hi
            })
            .map(|(id, _)| id)
            .collect();
        let bound = self.monitor.prefix_upper_bound(&self.tree.node(new).monitor);
        let mut out = Vec::new();
        for n in near {
            if let Some(rec) = self.try_rewire(new, n, bound) {
                out.push(rec);
            }
        }
        out
    }

    fn try_rewire(&mut self, new: usize, near: usize, bound: f64) -> Option<RewireRecord> {
        let n = self.tree.node(near);
        let old_parent = n.parent?;
        if !n.alive || self.tree.is_ancestor(near, new) {
            return None;
        }
        let (old_cost, old_time) = (n.cost, n.time);
        let target = n.state.pos;
        let via = self.tree.node(new);
        // No extension of the new node's trajectory can beat the bound.
        if via.cost - bound >= old_cost {
            return None;
        }
        let (from, t0, via_cost) = (via.state, via.time, via.cost);
        let edge = exact_edge(self.lib, from, target, Choice::Random(&mut self.rng))?;
        if !self.world().edge_free(from, t0, &edge.segments) {
            return None;
        }
        let samples = self.edge_samples(from, t0, &edge);
        let mut st = self.tree.node(new).monitor.clone();
        self.extend_monitor(&mut st, &samples);
        let prefix = self.monitor.prefix_value(&st);
        let new_cost = via_cost - prefix;
        let time = end_time(&samples);
        // Summed prefix costs favour longer paths, so without the time test
        // rewiring keeps pushing nodes later until goal windows are missed.
        if !(new_cost < old_cost) || time > old_time {
            return None;
        }

        self.tree.reparent(near, new);
        let node = self.tree.node_mut(near);
        node.state = edge.end;
        node.time = time;
        node.segments = edge.segments;
        node.monitor = st;
        node.prefix_robustness = prefix;
        node.cost = new_cost;
        let (moved, pruned) = self.propagate(near);
        Some(RewireRecord {
            node: near,
            old_parent,
            new_parent: new,
            old_cost,
            new_cost,
            old_time,
            new_time: time,
            moved,
            pruned,
        })
    }

    /// Recomputes edges, times, and costs below `root` after it changed,
    /// pruning descendants whose edge no longer fits or now collides.
    fn propagate(&mut self, root: usize) -> (Vec<usize>, usize) {
        let mut moved = Vec::new();
        let mut pruned = 0;
        let mut queue: std::collections::VecDeque<usize> = self.tree.children(root).iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            let child = self.tree.node(c);
            if !child.alive {
                continue;
            }
            let p = self.tree.node(child.parent.expect("descendant has a parent"));
            let (from, t0) = (p.state, p.time);
            let edge = self.refit_edge(from, child.state.pos, &child.segments);
            let feasible = edge
                .as_ref()
                .is_some_and(|e| self.world().edge_free(from, t0, &e.segments));
            let Some(edge) = edge.filter(|_| feasible) else {
                pruned += self.tree.prune(c);
                continue;
            };
            let samples = self.edge_samples(from, t0, &edge);
            let mut st = self.tree.node(child.parent.unwrap()).monitor.clone();
            let parent_cost = self.tree.node(child.parent.unwrap()).cost;
            self.extend_monitor(&mut st, &samples);
            let prefix = self.monitor.prefix_value(&st);
            let node = self.tree.node_mut(c);
            node.state = edge.end;
            node.time = end_time(&samples);
            node.segments = edge.segments;
            node.monitor = st;
            node.prefix_robustness = prefix;
            node.cost = parent_cost - prefix;
            moved.push(c);
            queue.extend(self.tree.children(c).iter().copied());
        }
        (moved, pruned)
    }

    /// The child's old segments if they still land on it from the moved
    /// parent, otherwise an exact edge reusing its policies where possible.
    fn refit_edge(&self, from: RobotState, target: Point, old: &[Segment]) -> Option<Edge> {
        let ends = segment_ends(self.lib, from, 0.0, old);
        if let Some(&(end, _)) = ends.last() {
            if (end.pos - target).norm() <= 1e-6 {
                return Some(Edge {
                    segments: old.to_vec(),
                    end: RobotState::new(target, end.heading),
                });
            }
        }
        let rotation_level = old
            .iter()
            .find(|s| s.policy.kind().is_rotation())
            .map(|s| s.policy.id.level);
        let forward = old.iter().find(|s| !s.policy.kind().is_rotation())?.policy;
        exact_edge::<ChaCha8Rng>(
            self.lib,
            from,
            target,
            Choice::Keep {
                rotation_level,
                forward,
            },
        )
    }

    /// Samples from the first history sample to node `id`.
    pub fn trajectory_to(&self, id: usize) -> TimedTrajectory {
        let path = self.tree.path(id);
        let mut samples = self.history.clone();
        let root = self.tree.node(path[0]);
        samples.push(TimedSample::new(root.state.pos, root.state.heading, root.time));
        for w in path.windows(2) {
            let (p, c) = (self.tree.node(w[0]), self.tree.node(w[1]));
            let edge = Edge {
                segments: c.segments.clone(),
                end: c.state,
            };
            samples.extend(self.edge_samples(p.state, p.time, &edge));
        }
        TimedTrajectory::new(samples, false).expect("tree times increase")
    }

    /// Cost of node `id` recomputed along its path with the direct
    /// evaluator, independent of the cached monitor states.
    pub fn cost_from_scratch(&self, id: usize) -> f64 {
        let path = self.tree.path(id);
        let full = self.trajectory_to(id);
        path.iter()
            .map(|&n| {
                let t = self.tree.node(n).time;
                let upto: Vec<TimedSample> = full.samples().iter().copied().filter(|s| s.t <= t).collect();
                let traj = TimedTrajectory::new(upto, false).expect("non-empty prefix");
                -prefix_robustness(&self.scenario.formula, &traj, &self.cfg)
            })
            .sum()
    }

    /// Robustness of node `id`'s trajectory held still until the horizon.
    pub fn completed_robustness(&self, id: usize) -> Result<f64, StlError> {
        let mut st = self.tree.node(id).monitor.clone();
        self.monitor.hold_until(&mut st, self.horizon);
        self.monitor.complete_value(&st)
    }

    /// Runs the remaining iterations and extracts the best plan.
    pub fn run(mut self) -> Result<PlanResult, PlanError> {
        while self.iterations < self.scenario.planner.max_iterations {
            self.iterate();
        }
        self.finish()
    }

    /// Picks the alive node with the largest non-negative completed
    /// robustness; ties go to the lowest id.
    pub fn finish(self) -> Result<PlanResult, PlanError> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_any: Option<f64> = None;
        for (id, _) in self.tree.alive() {
            let Ok(v) = self.completed_robustness(id) else {
                continue;
            };
            best_any = Some(best_any.map_or(v, |b: f64| b.max(v)));
            if v >= 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((id, v));
            }
        }
        let Some((id, robustness)) = best else {
            return Err(PlanError::Unsatisfied {
                iterations: self.iterations,
                best: best_any,
            });
        };
        let nodes = self
            .tree
            .path(id)
            .into_iter()
            .map(|n| {
                let n = self.tree.node(n);
                PlanNode {
                    state: n.state,
                    time: n.time,
                    segments: n.segments.clone(),
                }
            })
            .collect();
        let full = self.trajectory_to(id);
        let own: Vec<TimedSample> = full.samples()[self.history.len()..].to_vec();
        Ok(PlanResult {
            nodes,
            trajectory: TimedTrajectory::new(own, false).expect("non-empty"),
            robustness,
            iterations: self.iterations,
            seed: self.scenario.planner.seed,
            tree_size: self.tree.alive().count(),
        })
    }
}

/// Plans from the scenario start.
pub fn plan(scenario: &Scenario, lib: &MotionLibrary) -> Result<PlanResult, PlanError> {
    Planner::new(scenario, lib, None)?.run()
}

/// Plans from the scenario start, which must end the realized `history`.
pub fn plan_with_history(
    scenario: &Scenario,
    lib: &MotionLibrary,
    history: &TimedTrajectory,
) -> Result<PlanResult, PlanError> {
    Planner::new(scenario, lib, Some(history))?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steer_clamps() {
        let o = Point::zeros();
        let far = steer(Point::new(0.7, 0.0), o, 0.2, 0.5);
        assert!((far - Point::new(0.5, 0.0)).norm() < 1e-12);
        let close = steer(Point::new(0.0, 0.05), o, 0.2, 0.5);
        assert!((close - Point::new(0.0, 0.2)).norm() < 1e-12);
        let inside = Point::new(0.3 * 0.6, 0.3 * 0.8);
        assert_eq!(steer(inside, o, 0.2, 0.5), inside);
    }
}
