use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stlplan::primitives::NoiseSpec;
use stlplan_cli::{
    cmd_check, cmd_execute, cmd_plan, load_scenario, CliError, ExecuteOpts, PlanOpts, RunReport,
};

/// Plan and execute STL-satisfying motions with motion-primitive policies.
///
/// Exit status: 0 when every run satisfies its formula, 1 when planning or
/// execution fails, 2 on bad input.
#[derive(Parser)]
#[command(name = "stlplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a bundled scenario (phi1, phi2, phi3).
    #[arg(long)]
    scenario: String,
    /// First seed; defaults to the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's iteration budget.
    #[arg(long)]
    iterations: Option<usize>,
    /// Independent runs with consecutive seeds, spread over all cores.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Ignore the estimator cache beside the scenario file.
    #[arg(long)]
    refit_estimators: bool,
}

impl Common {
    fn opts(self) -> PlanOpts {
        PlanOpts {
            scenario: self.scenario,
            seed: self.seed,
            iterations: self.iterations,
            out: self.out,
            runs: self.runs,
            refit_estimators: self.refit_estimators,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan and write the plan CSV, SVG and a report.
    Plan(Common),
    /// Plan (or load a plan) and run it in closed loop.
    Execute {
        #[command(flatten)]
        common: Common,
        /// Plan CSV to execute instead of planning afresh.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Position disturbance, meters per sqrt(second).
        #[arg(long, default_value_t = 0.0)]
        noise_pos: f64,
        /// Heading disturbance, radians per sqrt(second).
        #[arg(long, default_value_t = 0.0)]
        noise_ang: f64,
        /// Push the robot sideways on reaching this plan node (root = 0).
        #[arg(long)]
        kick_node: Option<usize>,
        /// Kick distance in meters, to the left of the heading.
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        kick_offset: f64,
        /// Override the scenario's tracking tolerance, meters.
        #[arg(long)]
        eps_track: Option<f64>,
    },
    /// Print the robustness of a formula on a trajectory CSV.
    Check {
        #[arg(long)]
        formula: String,
        /// CSV with t, x, y columns (trace or plan output).
        #[arg(long)]
        trace: PathBuf,
        /// Take rho_opt and the evaluation grid from this scenario.
        #[arg(long, conflicts_with = "rho_opt")]
        scenario: Option<String>,
        #[arg(long)]
        rho_opt: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        dt_eval: f64,
    },
}

fn finish(reports: Result<Vec<RunReport>, CliError>) -> ExitCode {
    match reports {
        Ok(reports) => {
            for r in &reports {
                println!("{}", r.summary());
            }
            let ok = reports.iter().filter(|r| r.satisfied).count();
            if reports.len() > 1 {
                println!("satisfied {ok}/{}", reports.len());
            }
            ExitCode::from(if ok == reports.len() { 0 } else { 1 })
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Plan(common) => finish(cmd_plan(&common.opts())),
        Command::Execute {
            common,
            plan,
            noise_pos,
            noise_ang,
            kick_node,
            kick_offset,
            eps_track,
        } => finish(cmd_execute(&ExecuteOpts {
            plan: common.opts(),
            plan_path: plan,
            noise: NoiseSpec {
                pos_std: noise_pos,
                ang_std: noise_ang,
            },
            kick: kick_node.map(|n| (n, kick_offset)),
            eps_track,
        })),
        Command::Check {
            formula,
            trace,
            scenario,
            rho_opt,
            dt_eval,
        } => {
            let (rho_opt, dt_eval) = match scenario.map(|s| load_scenario(&s)) {
                Some(Ok(l)) => {
                    let cfg = l.scenario.eval_config();
                    (Some(cfg.rho_opt), cfg.dt_eval)
                }
                Some(Err(e)) => return fail(e),
                None => (rho_opt, dt_eval),
            };
            match cmd_check(&formula, &trace, rho_opt, dt_eval) {
                Ok(v) => {
                    println!("{v:.9}");
                    ExitCode::from(if v >= 0.0 { 0 } else { 1 })
                }
                Err(e) => fail(e),
            }
        }
    }
}
