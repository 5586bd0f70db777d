//! Motion-primitive classes and the velocity-limited policies that realize
//! them on a planar kinematic robot.
//!
//! Each policy tracks one primitive at a constant velocity level. The
//! kinematics are exact for noiseless rollouts; noisy rollouts integrate with
//! a fixed step and add Gaussian perturbations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{direction, Point};
use crate::stl::TimedSample;

/// Integration step of noisy rollouts, seconds.
pub const NOISY_DT: f64 = 1e-3;
/// Noisy rollouts record one sample every this many steps.
const RECORD_EVERY: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrimitiveError {
    #[error("policy {policy} was built for {policy_model}, not {model}")]
    UnknownPairing {
        policy: PolicyId,
        policy_model: ModelId,
        model: ModelId,
    },
    #[error("rollout duration must be positive, got {0}")]
    Duration(f64),
    #[error("policy levels must be at least 1")]
    Levels,
    #[error("unknown robot model `{0}`")]
    UnknownModel(String),
    #[error("malformed policy id `{0}`")]
    PolicyId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    Clockwise,
    Counterclockwise,
    Forward,
    Backward,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 4] = [
        PrimitiveKind::Clockwise,
        PrimitiveKind::Counterclockwise,
        PrimitiveKind::Forward,
        PrimitiveKind::Backward,
    ];

    pub fn is_rotation(self) -> bool {
        matches!(self, PrimitiveKind::Clockwise | PrimitiveKind::Counterclockwise)
    }

    /// Sign of the velocity the class commands.
    pub fn sign(self) -> f64 {
        match self {
            PrimitiveKind::Counterclockwise | PrimitiveKind::Forward => 1.0,
            PrimitiveKind::Clockwise | PrimitiveKind::Backward => -1.0,
        }
    }

    /// The class moving the opposite way.
    pub fn mirror(self) -> Self {
        match self {
            PrimitiveKind::Clockwise => PrimitiveKind::Counterclockwise,
            PrimitiveKind::Counterclockwise => PrimitiveKind::Clockwise,
            PrimitiveKind::Forward => PrimitiveKind::Backward,
            PrimitiveKind::Backward => PrimitiveKind::Forward,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            PrimitiveKind::Clockwise => "cw",
            PrimitiveKind::Counterclockwise => "ccw",
            PrimitiveKind::Forward => "fwd",
            PrimitiveKind::Backward => "bwd",
        }
    }
}

/// A motion-primitive class of the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimitiveClass {
    pub id: usize,
    pub kind: PrimitiveKind,
}

/// The four classes every bundled robot provides.
pub fn primitive_classes() -> Vec<PrimitiveClass> {
    PrimitiveKind::ALL
        .iter()
        .enumerate()
        .map(|(id, &kind)| PrimitiveClass { id, kind })
        .collect()
}

/// `<class>-<level>`, e.g. `fwd-3`. Level `L` of `L` is the fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicyId {
    pub kind: PrimitiveKind,
    pub level: u32,
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.kind.tag(), self.level)
    }
}

impl FromStr for PolicyId {
    type Err = PrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PrimitiveError::PolicyId(s.to_string());
        let (tag, level) = s.trim().split_once('-').ok_or_else(bad)?;
        let kind = PrimitiveKind::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(bad)?;
        let level = level.parse().map_err(|_| bad())?;
        Ok(PolicyId { kind, level })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    DifferentialDrive,
    QuadrupedProxy,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::DifferentialDrive => "differential-drive",
            ModelId::QuadrupedProxy => "quadruped-proxy",
        })
    }
}

impl FromStr for ModelId {
    type Err = PrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "differential-drive" => Ok(ModelId::DifferentialDrive),
            "quadruped-proxy" => Ok(ModelId::QuadrupedProxy),
            other => Err(PrimitiveError::UnknownModel(other.to_string())),
        }
    }
}

/// Unicycle kinematics with symmetric velocity limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotModel {
    pub id: ModelId,
    /// m/s
    pub max_linear: f64,
    /// rad/s
    pub max_angular: f64,
}

impl RobotModel {
    /// Turtlebot3-class differential drive: 0.22 m/s, 2.84 rad/s.
    pub fn differential_drive() -> Self {
        Self {
            id: ModelId::DifferentialDrive,
            max_linear: 0.22,
            max_angular: 2.84,
        }
    }

    /// Same kinematics with quadruped-like limits.
    pub fn quadruped_proxy() -> Self {
        Self {
            id: ModelId::QuadrupedProxy,
            max_linear: 0.4,
            max_angular: 1.5,
        }
    }

    pub fn from_id(id: ModelId) -> Self {
        match id {
            ModelId::DifferentialDrive => Self::differential_drive(),
            ModelId::QuadrupedProxy => Self::quadruped_proxy(),
        }
    }

    fn limit(&self, kind: PrimitiveKind) -> f64 {
        if kind.is_rotation() {
            self.max_angular
        } else {
            self.max_linear
        }
    }
}

/// A controller tracking one primitive at a fixed signed velocity:
/// m/s for translations, rad/s for rotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub id: PolicyId,
    pub class: PrimitiveClass,
    pub velocity: f64,
    pub model: ModelId,
}

impl Policy {
    pub fn kind(&self) -> PrimitiveKind {
        self.id.kind
    }

    pub fn speed(&self) -> f64 {
        self.velocity.abs()
    }
}

/// A policy applied for a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub policy: Policy,
    pub duration: f64,
}

impl Segment {
    pub fn new(policy: Policy, duration: f64) -> Self {
        Self { policy, duration }
    }
}

/// Planar pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pos: Point,
    /// Radians, not wrapped.
    pub heading: f64,
}

impl RobotState {
    pub fn new(pos: Point, heading: f64) -> Self {
        Self { pos, heading }
    }
}

/// Gaussian disturbance intensities: standard deviation per √s of applied
/// motion, so a step of `dt` perturbs with `std · √dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub pos_std: f64,
    pub ang_std: f64,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.pos_std == 0.0 && self.ang_std == 0.0
    }
}

/// `levels` evenly spaced magnitudes per class, up to the model limits.
pub fn policy_library(model: &RobotModel, levels: u32) -> Result<Vec<Policy>, PrimitiveError> {
    if levels == 0 {
        return Err(PrimitiveError::Levels);
    }
    let mut out = Vec::with_capacity(4 * levels as usize);
    for class in primitive_classes() {
        for level in 1..=levels {
            let magnitude = model.limit(class.kind) * level as f64 / levels as f64;
            out.push(Policy {
                id: PolicyId {
                    kind: class.kind,
                    level,
                },
                class,
                velocity: class.kind.sign() * magnitude,
                model: model.id,
            });
        }
    }
    Ok(out)
}

fn check_pairing(model: &RobotModel, policy: &Policy, duration: f64) -> Result<(), PrimitiveError> {
    if policy.model != model.id {
        return Err(PrimitiveError::UnknownPairing {
            policy: policy.id,
            policy_model: policy.model,
            model: model.id,
        });
    }
    if !(duration > 0.0) {
        return Err(PrimitiveError::Duration(duration));
    }
    Ok(())
}

/// Closed-form noiseless end pose of applying `policy` for `duration`.
pub fn rollout_end(
    model: &RobotModel,
    start: RobotState,
    policy: &Policy,
    duration: f64,
) -> Result<RobotState, PrimitiveError> {
    check_pairing(model, policy, duration)?;
    Ok(advance(start, policy, duration))
}

#[inline]
fn advance(s: RobotState, policy: &Policy, duration: f64) -> RobotState {
    if policy.kind().is_rotation() {
        RobotState::new(s.pos, s.heading + policy.velocity * duration)
    } else {
        RobotState::new(
            s.pos + direction(s.heading) * (policy.velocity * duration),
            s.heading,
        )
    }
}

/// Simulates `policy` from `start` at absolute time `t0`.
///
/// Without noise the result is the exact two-sample segment (the motion is
/// linear in position). With noise the motion is integrated at
/// [`NOISY_DT`] and recorded every few steps, always including the end.
pub fn rollout<R: Rng + ?Sized>(
    model: &RobotModel,
    start: RobotState,
    t0: f64,
    policy: &Policy,
    duration: f64,
    noise: Option<(&NoiseSpec, &mut R)>,
) -> Result<Vec<TimedSample>, PrimitiveError> {
    check_pairing(model, policy, duration)?;
    let first = TimedSample::new(start.pos, start.heading, t0);
    let (spec, rng) = match noise {
        Some((spec, rng)) if !spec.is_zero() => (spec, rng),
        _ => {
            let end = advance(start, policy, duration);
            return Ok(vec![first, TimedSample::new(end.pos, end.heading, t0 + duration)]);
        }
    };

    let steps = (duration / NOISY_DT).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let pos_noise = Normal::new(0.0, spec.pos_std * h.sqrt()).expect("finite std");
    let ang_noise = Normal::new(0.0, spec.ang_std * h.sqrt()).expect("finite std");
    let mut out = vec![first];
    let mut s = start;
    for k in 1..=steps {
        s = advance(s, policy, h);
        s.pos += Point::new(pos_noise.sample(rng), pos_noise.sample(rng));
        s.heading += ang_noise.sample(rng);
        if k % RECORD_EVERY == 0 || k == steps {
            let t = if k == steps {
                t0 + duration
            } else {
                t0 + k as f64 * h
            };
            out.push(TimedSample::new(s.pos, s.heading, t));
        }
    }
    Ok(out)
}
