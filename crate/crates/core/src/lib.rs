//! Planning STL-satisfying trajectories for robots whose dynamics are only
//! known through a library of motion-primitive policies.
//!
//! The pipeline is:
//!
//! 1. [`primitives`] builds a policy set over a kinematic robot model.
//! 2. [`reach`] rolls every policy out and fits a displacement → duration
//!    estimator for it.
//! 3. [`planner`] grows a tree in workspace × time whose node cost is the
//!    accumulated negative prefix robustness of the [`stl`] formula.
//! 4. [`executor`] replays the returned policy schedule on a (possibly noisy)
//!    model and replans when tracking fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod executor;
pub mod geometry;
pub mod library;
pub mod planner;
pub mod primitives;
pub mod reach;
pub mod report;
pub mod stl;
pub mod world;

pub use executor::{execute, ExecConfig, ExecError, ExecutionTrace};
pub use geometry::Point;
pub use library::MotionLibrary;
pub use planner::{plan, PlanError, PlanResult};
pub use stl::{parse_formula, Formula, TimedTrajectory};
pub use world::{Scenario, ScenarioError};
