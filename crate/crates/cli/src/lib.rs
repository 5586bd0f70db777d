//! Commands behind the `stlplan` binary, usable as a library by tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use stlplan::executor::{EventKind, Kick};
use stlplan::primitives::NoiseSpec;
use stlplan::report::{plan_from_csv, plan_to_csv, render_svg, trace_to_csv, trajectory_from_csv};
use stlplan::stl::{robustness, EvalConfig};
use stlplan::{
    execute, parse_formula, plan, ExecConfig, ExecError, MotionLibrary, PlanError, PlanResult, Scenario,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files.
    #[error("{0}")]
    Input(String),
    /// Planning or execution did not produce a satisfying result.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// A scenario given as a file path, or the name of a bundled one.
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub path: Option<PathBuf>,
}

pub fn load_scenario(arg: &str) -> Result<LoadedScenario, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let scenario = Scenario::from_path(path).map_err(|e| input(format!("{arg}: {e}")))?;
        return Ok(LoadedScenario {
            scenario,
            path: Some(path.to_path_buf()),
        });
    }
    let scenario =
        Scenario::bundled(arg).map_err(|_| input(format!("{arg}: no such file or bundled scenario")))?;
    Ok(LoadedScenario { scenario, path: None })
}

fn estimator_key(s: &Scenario) -> String {
    let h = &s.reach.horizons;
    format!(
        "# key model={} levels={} degree={} holdout={} horizons={}..{}/{}",
        s.model.id,
        s.levels,
        s.reach.degree,
        s.reach.holdout,
        h.first().copied().unwrap_or(0.0),
        h.last().copied().unwrap_or(0.0),
        h.len()
    )
}

/// Where the estimator cache of a scenario file lives.
pub fn cache_path(scenario_path: &Path) -> PathBuf {
    scenario_path.with_extension("estimators")
}

/// Fits the scenario's estimators, reusing the cache beside the scenario
/// file when its key matches. Bundled scenarios are always fitted.
pub fn load_library(loaded: &LoadedScenario, refit: bool) -> Result<MotionLibrary, CliError> {
    let s = &loaded.scenario;
    let key = estimator_key(s);
    let cache = loaded.path.as_deref().map(cache_path);
    if let (Some(cache), false) = (&cache, refit) {
        if let Ok(text) = fs::read_to_string(cache) {
            if text.lines().next() == Some(key.as_str()) {
                if let Ok(lib) = MotionLibrary::from_table(s.model, s.levels, &text) {
                    return Ok(lib);
                }
            }
        }
    }
    let lib = MotionLibrary::build(s.model, s.levels, &s.reach).map_err(input)?;
    if let Some(cache) = cache {
        // A read-only scenario directory only costs a refit next time.
        let _ = fs::write(cache, format!("{key}\n{}", lib.table()));
    }
    Ok(lib)
}

/// Per-run summary, also written next to the outputs as TOML.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub planning_seconds: f64,
    pub iterations: usize,
    pub plan_robustness: Option<f64>,
    pub executed_robustness: Option<f64>,
    pub replans: usize,
    pub satisfied: bool,
    pub message: String,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    fn new(scenario: &Scenario, seed: u64) -> Self {
        Self {
            scenario: scenario.name.clone(),
            seed,
            planning_seconds: 0.0,
            iterations: 0,
            plan_robustness: None,
            executed_robustness: None,
            replans: 0,
            satisfied: false,
            message: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn summary(&self) -> String {
        let fmt = |r: Option<f64>| r.map_or("-".to_string(), |v| format!("{v:.6}"));
        format!(
            "{} seed={} {} plan_rho={} exec_rho={} replans={} iterations={} time={:.2}s{}",
            self.scenario,
            self.seed,
            if self.satisfied { "ok" } else { "FAIL" },
            fmt(self.plan_robustness),
            fmt(self.executed_robustness),
            self.replans,
            self.iterations,
            self.planning_seconds,
            if self.message.is_empty() {
                String::new()
            } else {
                format!(" ({})", self.message)
            }
        )
    }

    fn save(&mut self, out: &Path, stem: &str) -> Result<(), CliError> {
        let path = out.join(format!("{stem}.report.toml"));
        self.outputs.push(path.clone());
        let text = toml::to_string(self).map_err(input)?;
        write(&path, &text)
    }
}

/// Runs `f` once per seed on up to `available_parallelism` threads and
/// returns the results in seed order.
pub fn fan_out<T: Send>(seeds: &[u64], f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(seeds.len().max(1));
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..seeds.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(&seed) = seeds.get(i) else { break };
                let r = f(seed);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PlanOpts {
    pub scenario: String,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub out: PathBuf,
    pub runs: usize,
    pub refit_estimators: bool,
}

fn seeds(first: u64, runs: usize) -> Vec<u64> {
    (0..runs.max(1) as u64).map(|k| first + k).collect()
}

fn prepared(loaded: &LoadedScenario, seed: u64, iterations: Option<usize>) -> Scenario {
    let mut s = loaded.scenario.clone();
    s.planner.seed = seed;
    if let Some(n) = iterations {
        s.planner.max_iterations = n;
    }
    s
}

fn timed_plan(s: &Scenario, lib: &MotionLibrary, report: &mut RunReport) -> Result<PlanResult, PlanError> {
    let start = Instant::now();
    let result = plan(s, lib);
    report.planning_seconds = start.elapsed().as_secs_f64();
    match &result {
        Ok(p) => {
            report.iterations = p.iterations;
            report.plan_robustness = Some(p.robustness);
        }
        Err(PlanError::Unsatisfied { iterations, best }) => {
            report.iterations = *iterations;
            report.plan_robustness = *best;
        }
        Err(_) => {}
    }
    result
}

/// Plans once per seed and writes `<name>-seed<k>.plan.csv`, `.svg` and
/// `.report.toml` into `out`.
pub fn cmd_plan(opts: &PlanOpts) -> Result<Vec<RunReport>, CliError> {
    let loaded = load_scenario(&opts.scenario)?;
    let lib = load_library(&loaded, opts.refit_estimators)?;
    fs::create_dir_all(&opts.out).map_err(|e| input(format!("{}: {e}", opts.out.display())))?;
    let first = opts.seed.unwrap_or(loaded.scenario.planner.seed);
    fan_out(&seeds(first, opts.runs), |seed| {
        let s = prepared(&loaded, seed, opts.iterations);
        let mut report = RunReport::new(&s, seed);
        let stem = format!("{}-seed{seed}", s.name);
        match timed_plan(&s, &lib, &mut report) {
            Ok(p) => {
                let csv = opts.out.join(format!("{stem}.plan.csv"));
                let svg = opts.out.join(format!("{stem}.svg"));
                write(&csv, &plan_to_csv(&p.nodes))?;
                write(&svg, &render_svg(&s, Some(&p.nodes), None))?;
                report.outputs.extend([csv, svg]);
                report.satisfied = p.robustness >= 0.0;
            }
            Err(e) => report.message = e.to_string(),
        }
        report.save(&opts.out, &stem)?;
        Ok(report)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
pub struct ExecuteOpts {
    pub plan: PlanOpts,
    /// Plan CSV to execute; planned afresh when absent.
    pub plan_path: Option<PathBuf>,
    pub noise: NoiseSpec,
    /// `(node index, lateral offset in meters)`.
    pub kick: Option<(usize, f64)>,
    pub eps_track: Option<f64>,
}

/// Executes a plan per seed and writes `<name>-seed<k>.trace.csv`, an
/// overlay `.exec.svg` and `.report.toml` into `out`.
pub fn cmd_execute(opts: &ExecuteOpts) -> Result<Vec<RunReport>, CliError> {
    let po = &opts.plan;
    let loaded = load_scenario(&po.scenario)?;
    let lib = load_library(&loaded, po.refit_estimators)?;
    fs::create_dir_all(&po.out).map_err(|e| input(format!("{}: {e}", po.out.display())))?;
    let given = match &opts.plan_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            Some(plan_from_csv(&text, &lib).map_err(|e| input(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    let first = po.seed.unwrap_or(loaded.scenario.planner.seed);
    fan_out(&seeds(first, po.runs), |seed| {
        let s = prepared(&loaded, seed, po.iterations);
        let mut report = RunReport::new(&s, seed);
        let stem = format!("{}-seed{seed}", s.name);
        let nodes = match &given {
            Some(n) => n.clone(),
            None => match timed_plan(&s, &lib, &mut report) {
                Ok(p) => p.nodes,
                Err(e) => {
                    report.message = e.to_string();
                    report.save(&po.out, &stem)?;
                    return Ok(report);
                }
            },
        };
        let mut cfg = ExecConfig::from_scenario(&s, seed);
        cfg.noise = opts.noise;
        cfg.kick = opts.kick.map(|(node, offset)| Kick { node, offset });
        if let Some(eps) = opts.eps_track {
            cfg.eps_track = eps;
            cfg.eps_correct = eps / 2.0;
        }
        let (trace, failure) = match execute(&nodes, &s, &lib, &cfg) {
            Ok(t) => (Some(t), None),
            Err(ExecError::ReplanBudget { trace }) => {
                (Some(*trace), Some("replanning budget exhausted".to_string()))
            }
            Err(ExecError::Replan { source, trace }) => {
                (Some(*trace), Some(format!("replanning failed: {source}")))
            }
            Err(ExecError::Correction { node, trace }) => {
                (Some(*trace), Some(format!("no correction leg to node {node}")))
            }
            Err(e) => (None, Some(e.to_string())),
        };
        if let Some(t) = &trace {
            let csv = po.out.join(format!("{stem}.trace.csv"));
            let svg = po.out.join(format!("{stem}.exec.svg"));
            write(&csv, &trace_to_csv(&t.trajectory, &t.events))?;
            write(&svg, &render_svg(&s, Some(&nodes), Some(&t.trajectory)))?;
            report.outputs.extend([csv, svg]);
            report.replans = t.count(EventKind::ReplanDone);
            if failure.is_none() {
                report.executed_robustness = Some(t.robustness);
                report.satisfied = t.robustness >= 0.0;
            }
        }
        report.message = failure.unwrap_or_default();
        report.save(&po.out, &stem)?;
        Ok(report)
    })
    .into_iter()
    .collect()
}

/// Robustness of `formula` on the trajectory in a CSV, at its first sample.
/// `rho_opt` defaults to twice the largest coordinate magnitude in the
/// trace, which bounds every ball or box predicate over it.
pub fn cmd_check(formula: &str, trace: &Path, rho_opt: Option<f64>, dt_eval: f64) -> Result<f64, CliError> {
    let f = parse_formula(formula).map_err(|e| input(format!("formula: {e}")))?;
    let text = fs::read_to_string(trace).map_err(|e| input(format!("{}: {e}", trace.display())))?;
    let traj = trajectory_from_csv(&text).map_err(|e| input(format!("{}: {e}", trace.display())))?;
    let rho_opt = rho_opt.unwrap_or_else(|| {
        let m = traj
            .samples()
            .iter()
            .map(|s| s.pos.x.abs().max(s.pos.y.abs()))
            .fold(1.0f64, f64::max);
        2.0 * m * std::f64::consts::SQRT_2
    });
    let cfg = EvalConfig { dt_eval, rho_opt };
    robustness(&f, &traj, traj.start_time(), &cfg).map_err(|e| input(format!("evaluation: {e}")))
}
