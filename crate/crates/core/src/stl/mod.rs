//! Signal temporal logic: syntax, parsing, and quantitative robustness.

mod ast;
mod monitor;
mod parser;
mod robustness;
mod trajectory;

pub use ast::{Formula, Predicate, TimeInterval};
pub use monitor::{Monitor, MonitorState};
pub use parser::parse_formula;
pub use robustness::{prefix_robustness, robustness};
pub use trajectory::{TimedSample, TimedTrajectory};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("syntax error at line {line}, column {column}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("invalid interval [{t1},{t2}] at line {line}, column {column}: need 0 <= t1 < t2")]
    Interval {
        line: usize,
        column: usize,
        t1: f64,
        t2: f64,
    },
    #[error("nested temporal operator `{op}` at line {line}, column {column}")]
    NestedTemporal { line: usize, column: usize, op: String },
    #[error("invalid predicate at line {line}, column {column}: {message}")]
    Predicate {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("interval [{t1},{t2}] is not covered by the trajectory span [{start},{end}]")]
    UncoveredInterval { t1: f64, t2: f64, start: f64, end: f64 },
    #[error("robustness requires a complete trajectory")]
    Incomplete,
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
}

/// Evaluation parameters shared by all robustness routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Spacing of the dense evaluation grid, seconds.
    pub dt_eval: f64,
    /// Value used for unbounded robustness (`true`) and for obligations
    /// whose window has not elapsed yet.
    pub rho_opt: f64,
}

impl Default for EvalConfig {
    /// 0.05 s grid; `rho_opt` is the diagonal of a 3 m × 3 m workspace.
    fn default() -> Self {
        Self {
            dt_eval: 0.05,
            rho_opt: 18f64.sqrt(),
        }
    }
}

#[inline]
pub(crate) fn grid_time(t0: f64, k: i64, dt: f64) -> f64 {
    t0 + k as f64 * dt
}

/// Infinite values only arise from `true`; report them as `±rho_opt`.
#[inline]
pub(crate) fn finalize(v: f64, rho_opt: f64) -> f64 {
    if v == f64::INFINITY {
        rho_opt
    } else if v == f64::NEG_INFINITY {
        -rho_opt
    } else {
        v
    }
}
