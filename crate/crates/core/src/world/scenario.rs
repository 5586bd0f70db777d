//! Scenario files.
//!
//! A scenario is a TOML document with flat sections:
//!
//! ```toml
//! name = "phi1"
//!
//! [workspace]
//! lower = [0.0, 0.0]
//! upper = [3.0, 3.0]
//!
//! [robot]                  # optional
//! model = "differential-drive"
//! levels = 3
//!
//! [start]
//! position = [0.5, 0.5]
//! heading = 0.0            # optional, radians
//! time = 0.0               # optional, seconds
//!
//! [obstacle.1]             # any number, ordered by key
//! center = [1.5, 1.5]
//! radius = 0.5
//! active = [0.0, 30.0]     # optional; absent means always present
//!
//! [planner]                # optional, every key has a default
//! max_iterations = 3000
//! seed = 0
//! dt_eval = 0.05
//! rho_opt = 4.24           # default: workspace diagonal
//! near_radius = "dmax"     # or a number in meters
//! collision_step = 0.02
//! robot_radius = 0.0
//! theta_tol = 0.02
//!
//! [reach]                  # optional
//! degree = 3
//! horizon_step = 0.1
//! horizon_max = 10.0
//! holdout = 0.2
//!
//! [execute]                # optional
//! eps_track = 0.1
//! eps_time = 1.0
//! max_replans = 5
//!
//! [formula]
//! stl = "G[0,50](box(x,(0,0),(3,3))) & F[20,25](ball(x,(2.5,0.5)) <= 0.25)"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{Obstacle, Workspace, World};
use crate::geometry::Point;
use crate::primitives::{ModelId, PrimitiveError, RobotModel, RobotState};
use crate::reach::ReachConfig;
use crate::stl::{parse_formula, EvalConfig, Formula, StlError, TimeInterval};

/// Names of the scenarios shipped with the crate.
pub const BUNDLED_SCENARIOS: [&str; 3] = ["phi1", "phi2", "phi3"];

/// Text of a bundled scenario by name.
pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    match name {
        "phi1" => Some(include_str!("../../../../scenarios/phi1.scn")),
        "phi2" => Some(include_str!("../../../../scenarios/phi2.scn")),
        "phi3" => Some(include_str!("../../../../scenarios/phi3.scn")),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario formula: {0}")]
    Formula(#[from] StlError),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
}

/// How the rewiring neighbourhood radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NearRadius {
    /// The largest steerable distance of the motion library.
    DMax,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub max_iterations: usize,
    pub seed: u64,
    pub dt_eval: f64,
    pub rho_opt: Option<f64>,
    pub near_radius: NearRadius,
    pub collision_step: f64,
    pub robot_radius: f64,
    pub theta_tol: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            seed: 0,
            dt_eval: 0.05,
            rho_opt: None,
            near_radius: NearRadius::DMax,
            collision_step: 0.02,
            robot_radius: 0.0,
            theta_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecParams {
    pub eps_track: f64,
    pub eps_time: f64,
    pub max_replans: usize,
}

impl Default for ExecParams {
    fn default() -> Self {
        Self {
            eps_track: 0.1,
            eps_time: 1.0,
            max_replans: 5,
        }
    }
}

/// Everything a planning run needs. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub world: World,
    pub formula: Formula,
    pub formula_text: String,
    pub start: RobotState,
    pub start_time: f64,
    pub model: RobotModel,
    pub levels: u32,
    pub planner: PlannerParams,
    pub reach: ReachConfig,
    pub exec: ExecParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileWorkspace {
    lower: [f64; 2],
    upper: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRobot {
    model: Option<String>,
    levels: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileStart {
    position: [f64; 2],
    heading: Option<f64>,
    time: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileObstacle {
    center: [f64; 2],
    radius: f64,
    active: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FileNear {
    Fixed(f64),
    Named(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FilePlanner {
    max_iterations: Option<usize>,
    seed: Option<u64>,
    dt_eval: Option<f64>,
    rho_opt: Option<f64>,
    near_radius: Option<FileNear>,
    collision_step: Option<f64>,
    robot_radius: Option<f64>,
    theta_tol: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileReach {
    degree: Option<usize>,
    horizon_step: Option<f64>,
    horizon_max: Option<f64>,
    holdout: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileExec {
    eps_track: Option<f64>,
    eps_time: Option<f64>,
    max_replans: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFormula {
    stl: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    workspace: FileWorkspace,
    robot: Option<FileRobot>,
    start: FileStart,
    #[serde(default)]
    obstacle: BTreeMap<String, FileObstacle>,
    planner: Option<FilePlanner>,
    reach: Option<FileReach>,
    execute: Option<FileExec>,
    formula: FileFormula,
}

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::parse(&text)?;
        if s.name.is_empty() {
            s.name = path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(s)
    }

    pub fn bundled(name: &str) -> Result<Self, ScenarioError> {
        let text = bundled_scenario(name).ok_or_else(|| invalid(format!("no bundled scenario `{name}`")))?;
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;

        let workspace = Workspace::new(pt(file.workspace.lower), pt(file.workspace.upper))
            .ok_or_else(|| invalid("workspace lower corner must be below the upper corner"))?;

        let mut keyed: Vec<(String, FileObstacle)> = file.obstacle.into_iter().collect();
        keyed.sort_by(|a, b| match (a.0.parse::<u64>(), b.0.parse::<u64>()) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            _ => a.0.cmp(&b.0),
        });
        let mut obstacles = Vec::with_capacity(keyed.len());
        for (key, o) in keyed {
            if !(o.radius > 0.0) {
                return Err(invalid(format!("obstacle.{key}: radius must be positive")));
            }
            let active = match o.active {
                Some([a, b]) => Some(
                    TimeInterval::new(a, b)
                        .map_err(|_| invalid(format!("obstacle.{key}: need 0 <= t1 < t2")))?,
                ),
                None => None,
            };
            obstacles.push(Obstacle {
                center: pt(o.center),
                radius: o.radius,
                active,
            });
        }

        let fp = file.planner.unwrap_or_default();
        let d = PlannerParams::default();
        let near_radius = match fp.near_radius {
            None => d.near_radius,
            Some(FileNear::Fixed(r)) if r > 0.0 => NearRadius::Fixed(r),
            Some(FileNear::Named(s)) if s == "dmax" => NearRadius::DMax,
            Some(_) => {
                return Err(invalid(
                    "planner.near_radius must be \"dmax\" or a positive number",
                ))
            }
        };
        let planner = PlannerParams {
            max_iterations: fp.max_iterations.unwrap_or(d.max_iterations),
            seed: fp.seed.unwrap_or(d.seed),
            dt_eval: fp.dt_eval.unwrap_or(d.dt_eval),
            rho_opt: fp.rho_opt,
            near_radius,
            collision_step: fp.collision_step.unwrap_or(d.collision_step),
            robot_radius: fp.robot_radius.unwrap_or(d.robot_radius),
            theta_tol: fp.theta_tol.unwrap_or(d.theta_tol),
        };
        if !(planner.dt_eval > 0.0) || !(planner.collision_step > 0.0) || planner.robot_radius < 0.0 {
            return Err(invalid("planner step sizes must be positive"));
        }
        if planner.rho_opt.is_some_and(|r| !(r > 0.0)) {
            return Err(invalid("planner.rho_opt must be positive"));
        }

        let fr = file.reach.unwrap_or_default();
        let step = fr.horizon_step.unwrap_or(0.1);
        let max = fr.horizon_max.unwrap_or(10.0);
        if !(step > 0.0 && max >= step) {
            return Err(invalid("reach horizons need 0 < horizon_step <= horizon_max"));
        }
        let n = (max / step + 1e-9).floor() as usize;
        let reach = ReachConfig {
            horizons: (1..=n).map(|k| k as f64 * step).collect(),
            degree: fr.degree.unwrap_or(3),
            holdout: fr.holdout.unwrap_or(0.2),
        };
        let reach = if step == 0.1 && max == 10.0 {
            ReachConfig {
                horizons: crate::reach::default_horizons(),
                ..reach
            }
        } else {
            reach
        };

        let fe = file.execute.unwrap_or_default();
        let de = ExecParams::default();
        let exec = ExecParams {
            eps_track: fe.eps_track.unwrap_or(de.eps_track),
            eps_time: fe.eps_time.unwrap_or(de.eps_time),
            max_replans: fe.max_replans.unwrap_or(de.max_replans),
        };

        let (model_id, levels) = match file.robot {
            Some(r) => (
                r.model
                    .as_deref()
                    .unwrap_or("differential-drive")
                    .parse::<ModelId>()?,
                r.levels.unwrap_or(3),
            ),
            None => (ModelId::DifferentialDrive, 3),
        };
        if levels == 0 {
            return Err(invalid("robot.levels must be at least 1"));
        }

        let start = RobotState::new(pt(file.start.position), file.start.heading.unwrap_or(0.0));
        let start_time = file.start.time.unwrap_or(0.0);
        if !workspace.contains(&start.pos) {
            return Err(invalid("start position lies outside the workspace"));
        }
        if !(start_time >= 0.0) {
            return Err(invalid("start time must be non-negative"));
        }

        let formula = parse_formula(&file.formula.stl)?;

        Ok(Scenario {
            name: file.name.unwrap_or_default(),
            world: World {
                workspace,
                obstacles,
                robot_radius: planner.robot_radius,
                collision_step: planner.collision_step,
            },
            formula,
            formula_text: file.formula.stl,
            start,
            start_time,
            model: RobotModel::from_id(model_id),
            levels,
            planner,
            reach,
            exec,
        })
    }

    /// Robustness settings: the planner grid spacing, and `rho_opt`
    /// defaulting to the workspace diagonal.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            dt_eval: self.planner.dt_eval,
            rho_opt: self
                .planner
                .rho_opt
                .unwrap_or_else(|| self.world.workspace.diagonal()),
        }
    }

    /// Copy with the root moved to a new space-time state.
    pub fn restarted(&self, start: RobotState, time: f64) -> Self {
        Scenario {
            start,
            start_time: time,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_load() {
        for name in BUNDLED_SCENARIOS {
            let s = Scenario::bundled(name).unwrap();
            assert_eq!(s.name, name);
            assert!(s.formula.horizon() > 0.0);
        }
        let phi1 = Scenario::bundled("phi1").unwrap();
        assert_eq!(phi1.world.obstacles.len(), 3);
        assert_eq!(phi1.start.pos, Point::new(0.5, 0.5));
        assert_eq!(phi1.formula.horizon(), 55.0);
        assert!((phi1.eval_config().rho_opt - 18f64.sqrt()).abs() < 1e-12);
        let phi3 = Scenario::bundled("phi3").unwrap();
        assert_eq!(phi3.model.id, ModelId::QuadrupedProxy);
        assert_eq!(phi3.world.workspace.upper, Point::new(4.0, 4.0));
    }

    #[test]
    fn phi1_timed_obstacle_queries() {
        let s = Scenario::bundled("phi1").unwrap();
        assert!(!s.world.point_free(&Point::new(1.5, 1.5), 10.0));
        assert!(s.world.point_free(&Point::new(1.5, 1.5), 40.0));
        assert!(!s.world.point_free(&Point::new(-0.1, 1.5), 40.0));
    }

    #[test]
    fn rejects_bad_files() {
        let base = |extra: &str| {
            format!(
                "[workspace]\nlower=[0,0]\nupper=[1,1]\n[start]\nposition=[0.5,0.5]\n{extra}[formula]\nstl=\"true\"\n"
            )
        };
        assert!(Scenario::parse(&base("")).is_ok());
        assert!(Scenario::parse(&base("[obstacle.1]\ncenter=[0,0]\nradius=-1\n")).is_err());
        assert!(Scenario::parse(&base("[obstacle.1]\ncenter=[0,0]\nradius=1\nactive=[3,2]\n")).is_err());
        assert!(Scenario::parse(&base("[robot]\nmodel=\"hexapod\"\n")).is_err());
        assert!(Scenario::parse(&base("[planner]\nnear_radius=\"big\"\n")).is_err());
        assert!(Scenario::parse(&base("[planner]\nbogus=1\n")).is_err());
        assert!(Scenario::parse(
            "[workspace]\nlower=[0,0]\nupper=[1,1]\n[start]\nposition=[2,2]\n[formula]\nstl=\"true\""
        )
        .is_err());
        assert!(matches!(
            Scenario::parse("[workspace]\nlower=[0,0]\nupper=[1,1]\n[start]\nposition=[0.5,0.5]\n[formula]\nstl=\"F[2,1](true)\""),
            Err(ScenarioError::Formula(_))
        ));
    }

    #[test]
    fn obstacles_sorted_numerically() {
        let text = "[workspace]\nlower=[0,0]\nupper=[5,5]\n[start]\nposition=[0.5,0.5]\n\
            [obstacle.10]\ncenter=[4,4]\nradius=0.1\n[obstacle.2]\ncenter=[2,2]\nradius=0.1\n\
            [formula]\nstl=\"true\"\n";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.world.obstacles[0].center, Point::new(2.0, 2.0));
    }
}
