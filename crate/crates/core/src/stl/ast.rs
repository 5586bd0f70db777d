use std::fmt;

use crate::geometry::Point;

use super::StlError;

/// Closed absolute time window `[t1, t2]` with `0 <= t1 < t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    t1: f64,
    t2: f64,
}

impl TimeInterval {
    pub fn new(t1: f64, t2: f64) -> Result<Self, StlError> {
        if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 || t1 >= t2 {
            return Err(StlError::Interval {
                line: 0,
                column: 0,
                t1,
                t2,
            });
        }
        Ok(Self { t1, t2 })
    }

    pub fn start(&self) -> f64 {
        self.t1
    }

    pub fn end(&self) -> f64 {
        self.t2
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t1 <= t && t <= self.t2
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.t1, self.t2)
    }
}

/// Atomic predicate `h(x) >= 0` over workspace positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// `radius - |x - center|` when `inside`, negated otherwise.
    Ball {
        center: Point,
        radius: f64,
        inside: bool,
    },
    /// Signed distance to the nearest box face, negated when `!inside`.
    Box {
        lower: Point,
        upper: Point,
        inside: bool,
    },
    /// `(x_axis - a)(x_axis - b)`, or the plain half-plane `x_axis - a` when
    /// the second root is absent.
    HalfPlane { axis: usize, a: f64, b: Option<f64> },
}

impl Predicate {
    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Predicate::Ball {
                center,
                radius,
                inside,
            } => {
                let h = radius - (p - center).norm();
                if *inside {
                    h
                } else {
                    -h
                }
            }
            Predicate::Box { lower, upper, inside } => {
                let mut h = f64::INFINITY;
                for i in 0..2 {
                    h = h.min(p[i] - lower[i]).min(upper[i] - p[i]);
                }
                if *inside {
                    h
                } else {
                    -h
                }
            }
            Predicate::HalfPlane { axis, a, b } => {
                let x = p[*axis];
                match b {
                    Some(b) => (x - a) * (x - b),
                    None => x - a,
                }
            }
        }
    }
}

fn fmt_point(p: &Point, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "({},{})", p.x, p.y)
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Ball {
                center,
                radius,
                inside,
            } => {
                f.write_str("ball(x,")?;
                fmt_point(center, f)?;
                write!(f, ") {} {}", if *inside { "<=" } else { ">=" }, radius)
            }
            Predicate::Box { lower, upper, inside } => {
                if !inside {
                    f.write_str("!")?;
                }
                f.write_str("box(x,")?;
                fmt_point(lower, f)?;
                f.write_str(",")?;
                fmt_point(upper, f)?;
                f.write_str(")")
            }
            Predicate::HalfPlane { axis, a, b } => {
                write!(f, "halfplane(x{axis},{a}")?;
                if let Some(b) = b {
                    write!(f, ",{b}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// STL abstract syntax tree. `Always` and `Eventually` are kept as their own
/// variants; the evaluator treats them exactly like their `Until` encodings.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Atom(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>, TimeInterval),
    Always(Box<Formula>, TimeInterval),
    Eventually(Box<Formula>, TimeInterval),
}

impl Formula {
    pub fn atom(p: Predicate) -> Self {
        Formula::Atom(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn until(l: Formula, r: Formula, i: TimeInterval) -> Self {
        Formula::Until(Box::new(l), Box::new(r), i)
    }

    pub fn always(f: Formula, i: TimeInterval) -> Self {
        Formula::Always(Box::new(f), i)
    }

    pub fn eventually(f: Formula, i: TimeInterval) -> Self {
        Formula::Eventually(Box::new(f), i)
    }

    /// Conjunction of all formulas, left-associated. `true` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            Formula::Until(..) | Formula::Always(..) | Formula::Eventually(..)
        )
    }

    /// True when no temporal operator occurs anywhere in the tree.
    pub fn is_temporal_free(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_temporal_free(),
            Formula::And(l, r) | Formula::Or(l, r) => l.is_temporal_free() && r.is_temporal_free(),
            _ => false,
        }
    }

    /// Largest interval end over all temporal operators; 0 for state formulas.
    pub fn horizon(&self) -> f64 {
        match self {
            Formula::True | Formula::Atom(_) => 0.0,
            Formula::Not(f) => f.horizon(),
            Formula::And(l, r) | Formula::Or(l, r) => l.horizon().max(r.horizon()),
            Formula::Until(l, r, i) => i.end().max(l.horizon()).max(r.horizon()),
            Formula::Always(f, i) | Formula::Eventually(f, i) => i.end().max(f.horizon()),
        }
    }

    /// Every interval in the tree, outermost first.
    pub fn intervals(&self) -> Vec<TimeInterval> {
        let mut out = Vec::new();
        self.collect_intervals(&mut out);
        out
    }

    fn collect_intervals(&self, out: &mut Vec<TimeInterval>) {
        match self {
            Formula::True | Formula::Atom(_) => {}
            Formula::Not(f) => f.collect_intervals(out),
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_intervals(out);
                r.collect_intervals(out);
            }
            Formula::Until(l, r, i) => {
                out.push(*i);
                l.collect_intervals(out);
                r.collect_intervals(out);
            }
            Formula::Always(f, i) | Formula::Eventually(f, i) => {
                out.push(*i);
                f.collect_intervals(out);
            }
        }
    }

    /// Every predicate in the tree, in left-to-right order.
    pub fn predicates(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Formula::True => {}
            Formula::Atom(p) => out.push(p),
            Formula::Not(f) | Formula::Always(f, _) | Formula::Eventually(f, _) => f.collect_predicates(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r, _) => {
                l.collect_predicates(out);
                r.collect_predicates(out);
            }
        }
    }

    /// Non-temporal evaluation at a single position. Temporal operators are
    /// not allowed here.
    pub(crate) fn eval_state(&self, p: &Point) -> f64 {
        match self {
            Formula::True => f64::INFINITY,
            Formula::Atom(pred) => pred.eval(p),
            Formula::Not(f) => -f.eval_state(p),
            Formula::And(l, r) => l.eval_state(p).min(r.eval_state(p)),
            Formula::Or(l, r) => l.eval_state(p).max(r.eval_state(p)),
            _ => unreachable!("temporal operator in state formula"),
        }
    }
}

/// Prints the concrete syntax accepted by [`super::parse_formula`]. Binary
/// operators are fully parenthesized so printing then parsing is the identity.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(inner) => write!(f, "!({inner})"),
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Or(l, r) => write!(f, "({l} | {r})"),
            Formula::Until(l, r, i) => write!(f, "({l} U{i} {r})"),
            Formula::Always(inner, i) => write!(f, "G{i}({inner})"),
            Formula::Eventually(inner, i) => write!(f, "F{i}({inner})"),
        }
    }
}
