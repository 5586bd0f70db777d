//! Incremental prefix-robustness monitor.
//!
//! Formulas without nested temporal operators reduce to a boolean skeleton
//! over (a) state formulas evaluated at the first sample and (b) temporal
//! obligations whose window value is a running min/max over evaluation
//! instants. A [`MonitorState`] keeps those accumulators, so extending a
//! trajectory by one sample only visits the new evaluation instants. The
//! values agree exactly with [`super::prefix_robustness`] and
//! [`super::robustness`] because the same instants are visited in the same
//! order.

use crate::geometry::{lerp, Point};

use super::ast::{Formula, TimeInterval};
use super::trajectory::{TimedSample, TimedTrajectory};
use super::{finalize, grid_time, EvalConfig, StlError};

#[derive(Debug, Clone)]
enum Skeleton {
    State(usize),
    Op(usize),
    Not(Box<Skeleton>),
    And(Box<Skeleton>, Box<Skeleton>),
    Or(Box<Skeleton>, Box<Skeleton>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum OpKind {
    Always,
    Eventually,
    Until,
}

#[derive(Debug, Clone)]
struct Obligation {
    kind: OpKind,
    interval: TimeInterval,
    body: Formula,
    /// Left operand of `Until`.
    hold: Option<Formula>,
}

#[derive(Debug, Clone, Copy)]
struct Acc {
    /// Running min (always, until's left operand) or max (eventually).
    a: f64,
    /// Until's best witness so far.
    b: f64,
    seen: bool,
}

/// Accumulated evaluation of a trajectory prefix.
#[derive(Debug, Clone)]
pub struct MonitorState {
    t0: f64,
    last_pos: Point,
    last_t: f64,
    top: Vec<f64>,
    acc: Vec<Acc>,
}

impl MonitorState {
    pub fn end_time(&self) -> f64 {
        self.last_t
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }
}

/// Compiled formula ready for incremental evaluation.
#[derive(Debug, Clone)]
pub struct Monitor {
    skeleton: Skeleton,
    states: Vec<Formula>,
    obligations: Vec<Obligation>,
    cfg: EvalConfig,
}

impl Monitor {
    /// Fails with [`StlError::NestedTemporal`] when a temporal operator
    /// appears below another one.
    pub fn new(formula: &Formula, cfg: EvalConfig) -> Result<Self, StlError> {
        let mut m = Monitor {
            skeleton: Skeleton::State(0),
            states: Vec::new(),
            obligations: Vec::new(),
            cfg,
        };
        m.skeleton = m.compile(formula)?;
        Ok(m)
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    fn compile(&mut self, f: &Formula) -> Result<Skeleton, StlError> {
        if f.is_temporal_free() {
            self.states.push(f.clone());
            return Ok(Skeleton::State(self.states.len() - 1));
        }
        let nested = || StlError::NestedTemporal {
            line: 0,
            column: 0,
            op: "monitor".into(),
        };
        let (kind, interval, body, hold) = match f {
            Formula::Not(g) => return Ok(Skeleton::Not(Box::new(self.compile(g)?))),
            Formula::And(l, r) => {
                return Ok(Skeleton::And(
                    Box::new(self.compile(l)?),
                    Box::new(self.compile(r)?),
                ))
            }
            Formula::Or(l, r) => {
                return Ok(Skeleton::Or(
                    Box::new(self.compile(l)?),
                    Box::new(self.compile(r)?),
                ))
            }
            Formula::Always(g, i) => (OpKind::Always, *i, g, None),
            Formula::Eventually(g, i) => (OpKind::Eventually, *i, g, None),
            Formula::Until(l, r, i) => {
                if !l.is_temporal_free() {
                    return Err(nested());
                }
                (OpKind::Until, *i, r, Some((**l).clone()))
            }
            Formula::True | Formula::Atom(_) => unreachable!(),
        };
        if !body.is_temporal_free() {
            return Err(nested());
        }
        self.obligations.push(Obligation {
            kind,
            interval,
            body: (**body).clone(),
            hold,
        });
        Ok(Skeleton::Op(self.obligations.len() - 1))
    }

    /// State after observing only the first sample.
    pub fn start(&self, first: &TimedSample) -> MonitorState {
        let mut st = MonitorState {
            t0: first.t,
            last_pos: first.pos,
            last_t: first.t,
            top: self.states.iter().map(|f| f.eval_state(&first.pos)).collect(),
            acc: vec![
                Acc {
                    a: f64::NAN,
                    b: f64::NEG_INFINITY,
                    seen: false
                };
                self.obligations.len()
            ],
        };
        for (ob, acc) in self.obligations.iter().zip(st.acc.iter_mut()) {
            acc.a = match ob.kind {
                OpKind::Eventually => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            };
            if ob.interval.contains(first.t) {
                Self::observe(ob, acc, &first.pos);
            }
        }
        st
    }

    /// Runs a whole trajectory through the monitor.
    pub fn run(&self, traj: &TimedTrajectory) -> MonitorState {
        let mut st = self.start(traj.first());
        for s in &traj.samples()[1..] {
            self.extend(&mut st, s.pos, s.t);
        }
        st
    }

    #[inline]
    fn observe(ob: &Obligation, acc: &mut Acc, p: &Point) {
        acc.seen = true;
        match ob.kind {
            OpKind::Always => acc.a = acc.a.min(ob.body.eval_state(p)),
            OpKind::Eventually => acc.a = acc.a.max(ob.body.eval_state(p)),
            OpKind::Until => {
                let hold = ob.hold.as_ref().expect("until has a left operand");
                acc.a = acc.a.min(hold.eval_state(p));
                acc.b = acc.b.max(ob.body.eval_state(p).min(acc.a));
            }
        }
    }

    /// Appends the sample `(pos, t)`; `t` must exceed the state's end time.
    pub fn extend(&self, st: &mut MonitorState, pos: Point, t: f64) {
        debug_assert!(t > st.last_t, "monitor samples must advance in time");
        let (ts, ps) = (st.last_t, st.last_pos);
        let dt = self.cfg.dt_eval;
        let at = |s: f64| if s == t { pos } else { lerp(&ps, ts, &pos, t, s) };

        let mut shared: Vec<f64> = Vec::with_capacity(((t - ts) / dt) as usize + 2);
        let mut k = (((ts - st.t0) / dt).floor() as i64).max(0);
        loop {
            let g = grid_time(st.t0, k, dt);
            if g > t {
                break;
            }
            if g > ts {
                shared.push(g);
            }
            k += 1;
        }
        if shared.last() != Some(&t) {
            shared.push(t);
        }
        let shared_pos: Vec<Point> = shared.iter().map(|&s| at(s)).collect();

        let mut own: Vec<(f64, Point)> = Vec::new();
        for (ob, acc) in self.obligations.iter().zip(st.acc.iter_mut()) {
            let (a, b) = (ob.interval.start(), ob.interval.end());
            if b <= ts || a > t {
                continue;
            }
            own.clear();
            for (&s, p) in shared.iter().zip(&shared_pos) {
                if a <= s && s <= b {
                    own.push((s, *p));
                }
            }
            for e in [a, b] {
                if e > ts && e <= t && !own.iter().any(|&(s, _)| s == e) {
                    own.push((e, at(e)));
                }
            }
            own.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            for (_, p) in &own {
                Self::observe(ob, acc, p);
            }
        }
        st.last_t = t;
        st.last_pos = pos;
    }

    /// Extends the prefix with a stationary segment up to `t`.
    pub fn hold_until(&self, st: &mut MonitorState, t: f64) {
        if t > st.last_t {
            let p = st.last_pos;
            self.extend(st, p, t);
        }
    }

    fn skeleton_value(&self, sk: &Skeleton, st: &MonitorState) -> f64 {
        match sk {
            Skeleton::State(i) => st.top[*i],
            Skeleton::Not(g) => -self.skeleton_value(g, st),
            Skeleton::And(l, r) => self.skeleton_value(l, st).min(self.skeleton_value(r, st)),
            Skeleton::Or(l, r) => self.skeleton_value(l, st).max(self.skeleton_value(r, st)),
            Skeleton::Op(i) => {
                let ob = &self.obligations[*i];
                let acc = &st.acc[*i];
                let unelapsed = st.last_t < ob.interval.end();
                match ob.kind {
                    OpKind::Always if !acc.seen => self.cfg.rho_opt,
                    OpKind::Always => acc.a,
                    _ if unelapsed => self.cfg.rho_opt,
                    OpKind::Eventually => acc.a,
                    OpKind::Until => acc.b,
                }
            }
        }
    }

    /// Range the raw skeleton value can take over every extension of `st`.
    fn skeleton_bounds(&self, sk: &Skeleton, st: &MonitorState) -> (f64, f64) {
        match sk {
            Skeleton::State(i) => (st.top[*i], st.top[*i]),
            Skeleton::Not(g) => {
                let (lo, hi) = self.skeleton_bounds(g, st);
                (-hi, -lo)
            }
            Skeleton::And(l, r) => {
                let (a, b) = (self.skeleton_bounds(l, st), self.skeleton_bounds(r, st));
                (a.0.min(b.0), a.1.min(b.1))
            }
            Skeleton::Or(l, r) => {
                let (a, b) = (self.skeleton_bounds(l, st), self.skeleton_bounds(r, st));
                (a.0.max(b.0), a.1.max(b.1))
            }
            Skeleton::Op(i) => {
                let ob = &self.obligations[*i];
                if st.last_t >= ob.interval.end() {
                    let v = self.skeleton_value(sk, st);
                    return (v, v);
                }
                match ob.kind {
                    OpKind::Always if st.acc[*i].seen => (f64::NEG_INFINITY, st.acc[*i].a),
                    _ => (f64::NEG_INFINITY, f64::INFINITY),
                }
            }
        }
    }

    /// Upper bound on the prefix robustness of any extension of `st`;
    /// `+inf` when nothing useful is known.
    pub fn prefix_upper_bound(&self, st: &MonitorState) -> f64 {
        let (_, hi) = self.skeleton_bounds(&self.skeleton, st);
        if hi == f64::INFINITY {
            hi
        } else {
            finalize(hi, self.cfg.rho_opt).max(-self.cfg.rho_opt)
        }
    }

    /// Prefix robustness of the observed samples.
    pub fn prefix_value(&self, st: &MonitorState) -> f64 {
        finalize(self.skeleton_value(&self.skeleton, st), self.cfg.rho_opt)
    }

    /// Robustness of the observed samples as a finished trajectory.
    pub fn complete_value(&self, st: &MonitorState) -> Result<f64, StlError> {
        for ob in &self.obligations {
            let i = ob.interval;
            if i.start() < st.t0 || i.end() > st.last_t {
                return Err(StlError::UncoveredInterval {
                    t1: i.start(),
                    t2: i.end(),
                    start: st.t0,
                    end: st.last_t,
                });
            }
        }
        Ok(self.prefix_value(st))
    }
}
