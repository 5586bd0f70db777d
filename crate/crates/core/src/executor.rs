//! Closed-loop execution of a plan on the simulated robot: disturbances,
//! tracking checks at node boundaries, correction legs and replanning.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{direction, wrap_angle, Point};
use crate::library::MotionLibrary;
use crate::planner::{correction_edge, plan_with_history, realign, PlanError, PlanNode};
use crate::primitives::{rollout, NoiseSpec, PrimitiveError, RobotState, Segment, NOISY_DT};
use crate::stl::{robustness, StlError, TimedSample, TimedTrajectory};
use crate::world::Scenario;

/// One-off lateral displacement applied when the robot reaches a plan node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kick {
    /// Index of the node in the original plan, counting the root as 0.
    pub node: usize,
    /// Meters to the left of the current heading; negative pushes right.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecConfig {
    pub noise: NoiseSpec,
    pub eps_track: f64,
    /// Positional error at a node above which the next leg is replaced by a
    /// correction leg; below it the planned segments run unchanged.
    pub eps_correct: f64,
    pub eps_time: f64,
    pub max_replans: usize,
    /// Seeds the disturbances and every replanning run.
    pub seed: u64,
    pub kick: Option<Kick>,
}

impl ExecConfig {
    /// Noiseless execution with the scenario's tracking thresholds.
    pub fn from_scenario(scenario: &Scenario, seed: u64) -> Self {
        Self {
            noise: NoiseSpec::default(),
            eps_track: scenario.exec.eps_track,
            eps_correct: scenario.exec.eps_track / 2.0,
            eps_time: scenario.exec.eps_time,
            max_replans: scenario.exec.max_replans,
            seed,
            kick: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    SegmentStart,
    SegmentEnd,
    DeviationDetected,
    ReplanTriggered,
    ReplanDone,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SegmentStart => "segment_start",
            Self::SegmentEnd => "segment_end",
            Self::DeviationDetected => "deviation_detected",
            Self::ReplanTriggered => "replan_triggered",
            Self::ReplanDone => "replan_done",
        }
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Self::SegmentStart,
            Self::SegmentEnd,
            Self::DeviationDetected,
            Self::ReplanTriggered,
            Self::ReplanDone,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| format!("unknown event {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    /// Realized motion, ending where the robot stopped.
    pub trajectory: TimedTrajectory,
    pub events: Vec<Event>,
    /// Robustness of the realized motion held still until the horizon;
    /// NaN while execution is unfinished.
    pub robustness: f64,
    pub replans: usize,
    pub corrections: usize,
    /// Nodes of every plan followed, the original first.
    pub plans: Vec<Vec<PlanNode>>,
}

impl ExecutionTrace {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("plan has no nodes")]
    EmptyPlan,
    #[error("replanning budget of {} exhausted", .trace.replans)]
    ReplanBudget { trace: Box<ExecutionTrace> },
    #[error("replanning failed: {source}")]
    Replan {
        source: PlanError,
        trace: Box<ExecutionTrace>,
    },
    #[error("no correction leg reaches plan node {node}")]
    Correction { node: usize, trace: Box<ExecutionTrace> },
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
    #[error(transparent)]
    Stl(#[from] StlError),
}

impl ExecError {
    /// The realized trace up to the failure, when there is one.
    pub fn trace(&self) -> Option<&ExecutionTrace> {
        match self {
            Self::ReplanBudget { trace } | Self::Replan { trace, .. } | Self::Correction { trace, .. } => {
                Some(trace)
            }
            _ => None,
        }
    }
}

struct Run<'a> {
    lib: &'a MotionLibrary,
    cfg: &'a ExecConfig,
    rng: ChaCha8Rng,
    samples: Vec<TimedSample>,
    events: Vec<Event>,
    state: RobotState,
    t: f64,
    replans: usize,
    corrections: usize,
    plans: Vec<Vec<PlanNode>>,
}

impl Run<'_> {
    fn event(&mut self, kind: EventKind) {
        self.events.push(Event { t: self.t, kind });
    }

    fn push(&mut self, s: TimedSample) {
        self.samples.push(s);
        self.state = RobotState::new(s.pos, s.heading);
        self.t = s.t;
    }

    fn apply(&mut self, seg: &Segment) -> Result<(), PrimitiveError> {
        self.event(EventKind::SegmentStart);
        let noise = (!self.cfg.noise.is_zero()).then_some((&self.cfg.noise, &mut self.rng));
        let out = rollout(
            &self.lib.model,
            self.state,
            self.t,
            &seg.policy,
            seg.duration,
            noise,
        )?;
        for s in out.into_iter().skip(1) {
            self.push(s);
        }
        self.event(EventKind::SegmentEnd);
        Ok(())
    }

    fn history(&self) -> TimedTrajectory {
        TimedTrajectory::new(self.samples.clone(), false).expect("realized times increase")
    }

    fn trace(&self, robustness: f64) -> Box<ExecutionTrace> {
        Box::new(ExecutionTrace {
            trajectory: self.history(),
            events: self.events.clone(),
            robustness,
            replans: self.replans,
            corrections: self.corrections,
            plans: self.plans.clone(),
        })
    }

    fn replan_seed(&self) -> u64 {
        self.cfg
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.replans as u64 + 1)
    }
}

/// Runs `plan` (as produced by the planner, first node = start) on the
/// simulated robot.
pub fn execute(
    plan: &[PlanNode],
    scenario: &Scenario,
    lib: &MotionLibrary,
    cfg: &ExecConfig,
) -> Result<ExecutionTrace, ExecError> {
    let root = plan.first().ok_or(ExecError::EmptyPlan)?;
    let mut run = Run {
        lib,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        samples: vec![TimedSample::new(root.state.pos, root.state.heading, root.time)],
        events: Vec::new(),
        state: root.state,
        t: root.time,
        replans: 0,
        corrections: 0,
        plans: vec![plan.to_vec()],
    };
    let mut current = plan.to_vec();
    let mut next = 1;
    let mut reached = 0;
    let mut kicked = false;

    while next < current.len() {
        let (prev, target) = (&current[next - 1], &current[next]);
        // Off the node, re-aim at the next one; if no leg fits the distance,
        // follow the planned leg and leave it to the tracking check.
        let correction = ((run.state.pos - prev.state.pos).norm() > cfg.eps_correct)
            .then(|| {
                let budget = target.time - run.t;
                let theta_tol = scenario.planner.theta_tol;
                correction_edge(
                    lib,
                    run.state,
                    target.state.pos,
                    &target.segments,
                    theta_tol,
                    budget,
                )
            })
            .flatten();
        let segments = match correction {
            Some(e) => {
                run.corrections += 1;
                e.segments
            }
            None => {
                let heading_error = wrap_angle(prev.state.heading - run.state.heading);
                realign(lib, &target.segments, heading_error).ok_or_else(|| ExecError::Correction {
                    node: next,
                    trace: run.trace(f64::NAN),
                })?
            }
        };
        let (goal_pos, goal_time) = (target.state.pos, target.time);
        for seg in &segments {
            run.apply(seg)?;
        }
        reached += 1;

        if let Some(k) = cfg.kick.filter(|k| !kicked && k.node == reached) {
            kicked = true;
            let left = direction(run.state.heading + std::f64::consts::FRAC_PI_2);
            let pos: Point = run.state.pos + left * k.offset;
            run.push(TimedSample::new(pos, run.state.heading, run.t + NOISY_DT));
        }

        let deviation = (run.state.pos - goal_pos).norm();
        let slip = (run.t - goal_time).abs();
        if deviation <= cfg.eps_track && slip <= cfg.eps_time {
            next += 1;
            continue;
        }
        run.event(EventKind::DeviationDetected);
        if run.replans == cfg.max_replans {
            return Err(ExecError::ReplanBudget {
                trace: run.trace(f64::NAN),
            });
        }
        run.event(EventKind::ReplanTriggered);
        let mut restarted = scenario.restarted(run.state, run.t);
        restarted.planner.seed = run.replan_seed();
        let fresh = match plan_with_history(&restarted, lib, &run.history()) {
            Ok(p) => p,
            Err(source) => {
                return Err(ExecError::Replan {
                    source,
                    trace: run.trace(f64::NAN),
                })
            }
        };
        run.replans += 1;
        run.event(EventKind::ReplanDone);
        current = fresh.nodes;
        run.plans.push(current.clone());
        next = 1;
    }

    let realized = run.history();
    let horizon = scenario.formula.horizon().max(realized.end_time());
    let held = realized.held_until(horizon);
    let rho = robustness(
        &scenario.formula,
        &held,
        realized.start_time(),
        &scenario.eval_config(),
    )?;
    let mut trace = run.trace(rho);
    trace.trajectory = realized;
    Ok(*trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_names_round_trip() {
        for k in [
            EventKind::SegmentStart,
            EventKind::SegmentEnd,
            EventKind::DeviationDetected,
            EventKind::ReplanTriggered,
            EventKind::ReplanDone,
        ] {
            assert_eq!(k.as_str().parse::<EventKind>().unwrap(), k);
        }
        assert!("kick".parse::<EventKind>().is_err());
    }
}
