//! Browser bindings: plan a bundled scenario, execute the plan with a
//! scripted kick, and check a formula against a pasted CSV.
//!
//! The logic lives in plain functions so it can be tested natively; the
//! `wasm_bindgen` wrappers only convert errors.

use stlplan::executor::{EventKind, Kick};
use stlplan::primitives::NoiseSpec;
use stlplan::report::{render_svg, trajectory_from_csv};
use stlplan::stl::{robustness, EvalConfig};
use stlplan::{execute, parse_formula, plan, ExecConfig, MotionLibrary, PlanResult, Scenario};
use wasm_bindgen::prelude::*;

/// A bundled scenario with its fitted library and the latest plan.
#[wasm_bindgen]
pub struct Demo {
    scenario: Scenario,
    lib: MotionLibrary,
    plan: Option<PlanResult>,
    status: String,
}

impl Demo {
    pub fn load(name: &str) -> Result<Demo, String> {
        let scenario = Scenario::bundled(name).map_err(|e| e.to_string())?;
        let lib = MotionLibrary::build(scenario.model, scenario.levels, &scenario.reach)
            .map_err(|e| e.to_string())?;
        Ok(Demo {
            scenario,
            lib,
            plan: None,
            status: String::new(),
        })
    }

    /// Plans with `seed` and returns the figure. A failed search still
    /// renders the scenario and reports the best robustness in `status`.
    pub fn plan_svg(&mut self, seed: u32, iterations: u32) -> String {
        let mut s = self.scenario.clone();
        s.planner.seed = seed.into();
        s.planner.max_iterations = iterations as usize;
        match plan(&s, &self.lib) {
            Ok(p) => {
                self.status = format!(
                    "robustness {:.4}, {} nodes, ends at t = {:.1} s",
                    p.robustness,
                    p.nodes.len(),
                    p.end_time()
                );
                self.plan = Some(p);
            }
            Err(e) => {
                self.status = e.to_string();
                self.plan = None;
            }
        }
        render_svg(&self.scenario, self.plan.as_ref().map(|p| &p.nodes[..]), None)
    }

    /// Runs the current plan, kicking the robot `offset` meters sideways at
    /// plan node `kick_node` (0 disables the kick), and overlays the result.
    pub fn execute_svg(
        &mut self,
        kick_node: u32,
        offset: f64,
        noise_pos: f64,
        seed: u32,
    ) -> Result<String, String> {
        let p = self.plan.as_ref().ok_or("plan first")?;
        let mut cfg = ExecConfig::from_scenario(&self.scenario, seed.into());
        cfg.noise = NoiseSpec {
            pos_std: noise_pos,
            ang_std: 0.0,
        };
        cfg.kick = (kick_node > 0).then_some(Kick {
            node: kick_node as usize,
            offset,
        });
        let (trace, outcome) = match execute(&p.nodes, &self.scenario, &self.lib, &cfg) {
            Ok(t) => {
                let rho = t.robustness;
                (t, format!("executed robustness {rho:.4}"))
            }
            Err(e) => {
                let msg = e.to_string();
                let trace = e.trace().cloned().ok_or_else(|| msg.clone())?;
                (trace, msg)
            }
        };
        self.status = format!(
            "{outcome}; {} replans, {} correction legs",
            trace.count(EventKind::ReplanDone),
            trace.corrections
        );
        Ok(render_svg(
            &self.scenario,
            Some(&p.nodes),
            Some(&trace.trajectory),
        ))
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str) -> Result<Demo, JsError> {
        Demo::load(name).map_err(|e| JsError::new(&e))
    }

    pub fn plan(&mut self, seed: u32, iterations: u32) -> String {
        self.plan_svg(seed, iterations)
    }

    pub fn execute(
        &mut self,
        kick_node: u32,
        offset: f64,
        noise_pos: f64,
        seed: u32,
    ) -> Result<String, JsError> {
        self.execute_svg(kick_node, offset, noise_pos, seed)
            .map_err(|e| JsError::new(&e))
    }

    pub fn status(&self) -> String {
        self.status.clone()
    }

    pub fn formula(&self) -> String {
        self.scenario.formula_text.clone()
    }

    /// Planned motion held still until the formula horizon, as CSV.
    pub fn plan_csv(&self) -> String {
        let horizon = self.scenario.formula.horizon();
        self.plan
            .as_ref()
            .map(|p| stlplan::report::trace_to_csv(&p.trajectory.held_until(horizon), &[]))
            .unwrap_or_default()
    }

    /// Optimistic bound the scenario evaluates with.
    pub fn rho_opt(&self) -> f64 {
        self.scenario.eval_config().rho_opt
    }
}

/// Robustness of `formula` on a CSV trajectory with `t`, `x`, `y` columns,
/// at its first sample.
pub fn check_csv(formula: &str, csv: &str, rho_opt: f64) -> Result<f64, String> {
    let f = parse_formula(formula).map_err(|e| format!("formula: {e}"))?;
    let traj = trajectory_from_csv(csv).map_err(|e| format!("csv: {e}"))?;
    let cfg = EvalConfig {
        dt_eval: 0.05,
        rho_opt,
    };
    robustness(&f, &traj, traj.start_time(), &cfg).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn check(formula: &str, csv: &str, rho_opt: f64) -> Result<f64, JsError> {
    check_csv(formula, csv, rho_opt).map_err(|e| JsError::new(&e))
}
