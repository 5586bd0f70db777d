//! CSV interchange for plans and realized traces, and SVG rendering of a
//! scenario with planned and actual motion.

use std::fmt::Write as _;

use thiserror::Error;

use crate::executor::Event;
use crate::geometry::Point;
use crate::library::MotionLibrary;
use crate::planner::PlanNode;
use crate::primitives::{PolicyId, RobotState, Segment};
use crate::stl::{Predicate, StlError, TimedSample, TimedTrajectory};
use crate::world::Scenario;

/// SVG scale, pixels per meter.
pub const PX_PER_M: f64 = 200.0;
const MARGIN_PX: f64 = 24.0;
const PLAN_COLOR: &str = "#f28e2b";
const ACTUAL_COLOR: &str = "#1f77b4";

pub const PLAN_HEADER: [&str; 7] = [
    "node_index",
    "x",
    "y",
    "heading",
    "t",
    "incoming_policy_ids",
    "incoming_durations",
];
pub const TRACE_HEADER: [&str; 5] = ["t", "x", "y", "heading", "event"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("missing column {0:?}")]
    Column(&'static str),
    #[error(transparent)]
    Stl(#[from] StlError),
}

fn num(x: f64) -> String {
    format!("{x:.9}")
}

fn csv_string(wtr: csv::Writer<Vec<u8>>) -> String {
    let bytes = wtr.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("utf-8 fields")
}

/// One row per node; the incoming edge's segments are `;`-joined.
pub fn plan_to_csv(nodes: &[PlanNode]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(PLAN_HEADER).expect("in-memory writer");
    for (i, n) in nodes.iter().enumerate() {
        let ids: Vec<String> = n.segments.iter().map(|s| s.policy.id.to_string()).collect();
        let durations: Vec<String> = n.segments.iter().map(|s| num(s.duration)).collect();
        wtr.write_record([
            i.to_string(),
            num(n.state.pos.x),
            num(n.state.pos.y),
            num(n.state.heading),
            num(n.time),
            ids.join(";"),
            durations.join(";"),
        ])
        .expect("in-memory writer");
    }
    csv_string(wtr)
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize, ReportError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or(ReportError::Column(name))
}

fn field_f64(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<f64, ReportError> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| ReportError::Row {
        row,
        msg: format!("{raw:?} is not a number"),
    })
}

fn split_list(raw: &str) -> Vec<&str> {
    raw.split(';').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Parses a plan written by [`plan_to_csv`], resolving policy ids in `lib`.
pub fn plan_from_csv(text: &str, lib: &MotionLibrary) -> Result<Vec<PlanNode>, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let [x, y, heading, t, ids, durations] = [
        "x",
        "y",
        "heading",
        "t",
        "incoming_policy_ids",
        "incoming_durations",
    ]
    .map(|c| column(&headers, c));
    let (x, y, heading, t, ids, durations) = (x?, y?, heading?, t?, ids?, durations?);
    let mut nodes = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |msg: String| ReportError::Row { row, msg };
        let names = split_list(rec.get(ids).unwrap_or(""));
        let lengths = split_list(rec.get(durations).unwrap_or(""));
        if names.len() != lengths.len() {
            return Err(bad("policy and duration counts differ".into()));
        }
        let segments = names
            .iter()
            .zip(&lengths)
            .map(|(name, d)| {
                let id: PolicyId = name.parse().map_err(|e| bad(format!("{e}")))?;
                let policy = *lib
                    .policy(id)
                    .ok_or_else(|| bad(format!("policy {id} is not in the library")))?;
                let duration = d.parse().map_err(|_| bad(format!("{d:?} is not a number")))?;
                Ok(Segment::new(policy, duration))
            })
            .collect::<Result<Vec<_>, ReportError>>()?;
        nodes.push(PlanNode {
            state: RobotState::new(
                Point::new(field_f64(&rec, x, row)?, field_f64(&rec, y, row)?),
                field_f64(&rec, heading, row)?,
            ),
            time: field_f64(&rec, t, row)?,
            segments,
        });
    }
    if nodes.is_empty() {
        return Err(ReportError::Row {
            row: 0,
            msg: "plan has no nodes".into(),
        });
    }
    Ok(nodes)
}

/// Samples with an empty event column, then one annotation row per event
/// placed at the interpolated position.
pub fn trace_to_csv(traj: &TimedTrajectory, events: &[Event]) -> String {
    let mut rows: Vec<(f64, u8, [String; 5])> = traj
        .samples()
        .iter()
        .map(|s| {
            let r = [
                num(s.t),
                num(s.pos.x),
                num(s.pos.y),
                num(s.heading),
                String::new(),
            ];
            (s.t, 0, r)
        })
        .collect();
    for e in events {
        let p = traj.position_at(e.t);
        let heading = traj
            .samples()
            .iter()
            .rev()
            .find(|s| s.t <= e.t)
            .map_or(traj.first().heading, |s| s.heading);
        let r = [
            num(e.t),
            num(p.x),
            num(p.y),
            num(heading),
            e.kind.as_str().to_string(),
        ];
        rows.push((e.t, 1, r));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(TRACE_HEADER).expect("in-memory writer");
    for (_, _, r) in rows {
        wtr.write_record(&r).expect("in-memory writer");
    }
    csv_string(wtr)
}

/// Reads a complete trajectory from any CSV with `t`, `x`, `y` columns and
/// optionally `heading` and `event`. Rows with a non-empty event are
/// annotations and skipped.
pub fn trajectory_from_csv(text: &str) -> Result<TimedTrajectory, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let (t, x, y) = (
        column(&headers, "t")?,
        column(&headers, "x")?,
        column(&headers, "y")?,
    );
    let heading = column(&headers, "heading").ok();
    let event = column(&headers, "event").ok();
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if event.is_some_and(|e| !rec.get(e).unwrap_or("").trim().is_empty()) {
            continue;
        }
        let row = i + 1;
        let h = match heading {
            Some(h) => field_f64(&rec, h, row)?,
            None => 0.0,
        };
        samples.push(TimedSample::new(
            Point::new(field_f64(&rec, x, row)?, field_f64(&rec, y, row)?),
            h,
            field_f64(&rec, t, row)?,
        ));
    }
    Ok(TimedTrajectory::new(samples, true)?)
}

/// Maps workspace coordinates to SVG pixels with the y axis pointing up.
struct Canvas {
    lower: Point,
    height: f64,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        MARGIN_PX + (x - self.lower.x) * PX_PER_M
    }

    fn y(&self, y: f64) -> f64 {
        self.height - MARGIN_PX - (y - self.lower.y) * PX_PER_M
    }

    fn polyline(&self, out: &mut String, pts: impl Iterator<Item = Point>, color: &str, width: f64) {
        let coords: Vec<String> = pts
            .map(|p| format!("{:.2},{:.2}", self.x(p.x), self.y(p.y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}" stroke-linejoin="round"/>"#,
            coords.join(" ")
        );
    }
}

/// Scenario figure: workspace, obstacles (timed ones dashed and labelled with
/// their window), goal balls of the formula, the plan in orange with node
/// times and the realized motion in blue.
pub fn render_svg(
    scenario: &Scenario,
    plan: Option<&[PlanNode]>,
    actual: Option<&TimedTrajectory>,
) -> String {
    let ws = scenario.world.workspace;
    let ext = ws.extent();
    let (w, h) = (
        ext.x * PX_PER_M + 2.0 * MARGIN_PX,
        ext.y * PX_PER_M + 2.0 * MARGIN_PX,
    );
    let c = Canvas {
        lower: ws.lower,
        height: h,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
        c.x(ws.lower.x),
        c.y(ws.upper.y),
        ext.x * PX_PER_M,
        ext.y * PX_PER_M
    );
    for p in scenario.formula.predicates() {
        if let Predicate::Ball {
            center,
            radius,
            inside: true,
        } = p
        {
            let _ = writeln!(
                out,
                r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#59a14f" fill-opacity="0.25" stroke="#59a14f"/>"##,
                c.x(center.x),
                c.y(center.y),
                radius * PX_PER_M
            );
        }
    }
    for o in &scenario.world.obstacles {
        let (cx, cy, r) = (c.x(o.center.x), c.y(o.center.y), o.radius * PX_PER_M);
        match o.active {
            None => {
                let _ = writeln!(
                    out,
                    r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="#555" fill-opacity="0.6"/>"##
                );
            }
            Some(i) => {
                let _ = writeln!(
                    out,
                    r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="#e15759" fill-opacity="0.2" stroke="#e15759" stroke-dasharray="6 4"/>"##
                );
                let _ = writeln!(
                    out,
                    r##"<text x="{cx:.2}" y="{cy:.2}" text-anchor="middle" fill="#b03030">t in {i}</text>"##
                );
            }
        }
    }
    if let Some(nodes) = plan {
        c.polyline(&mut out, nodes.iter().map(|n| n.state.pos), PLAN_COLOR, 2.5);
        for n in nodes {
            let (x, y) = (c.x(n.state.pos.x), c.y(n.state.pos.y));
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{PLAN_COLOR}"/>"#
            );
        }
        if let Some(last) = nodes.last() {
            let (x, y) = (c.x(last.state.pos.x), c.y(last.state.pos.y));
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" fill="{PLAN_COLOR}">t={:.1}</text>"#,
                x + 5.0,
                y - 5.0,
                last.time
            );
        }
    }
    if let Some(traj) = actual {
        c.polyline(&mut out, traj.samples().iter().map(|s| s.pos), ACTUAL_COLOR, 1.5);
    }
    let start = scenario.start.pos;
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="black"/>"#,
        c.x(start.x) - 4.0,
        c.y(start.y) - 4.0
    );
    out.push_str("</svg>\n");
    out
}
