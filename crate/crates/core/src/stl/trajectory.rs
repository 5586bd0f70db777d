use crate::geometry::{lerp, Point};

use super::StlError;

/// Coordinates beyond this magnitude are rejected as corrupt input.
const AMBIENT_BOUND: f64 = 1.0e6;

/// One pose of the robot at an absolute time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub pos: Point,
    pub heading: f64,
    pub t: f64,
}

impl TimedSample {
    pub fn new(pos: Point, heading: f64, t: f64) -> Self {
        Self { pos, heading, t }
    }
}

/// Time-ordered pose samples; the position signal is the piecewise-linear
/// interpolation of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrajectory {
    samples: Vec<TimedSample>,
    complete: bool,
}

impl TimedTrajectory {
    pub fn new(samples: Vec<TimedSample>, complete: bool) -> Result<Self, StlError> {
        if samples.is_empty() {
            return Err(StlError::Trajectory("trajectory has no samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            let finite = s.pos.x.is_finite() && s.pos.y.is_finite() && s.t.is_finite();
            if !finite || s.pos.x.abs() > AMBIENT_BOUND || s.pos.y.abs() > AMBIENT_BOUND {
                return Err(StlError::Trajectory(format!(
                    "sample {i} lies outside the ambient bounds"
                )));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(StlError::Trajectory(format!(
                "sample times must be strictly increasing (sample {})",
                i + 1
            )));
        }
        Ok(Self { samples, complete })
    }

    pub fn samples(&self) -> &[TimedSample] {
        &self.samples
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn set_complete(&mut self, complete: bool) {
        self.complete = complete;
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn first(&self) -> &TimedSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TimedSample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends a sample; its time must exceed the current end time.
    pub fn push(&mut self, s: TimedSample) -> Result<(), StlError> {
        if s.t <= self.end_time() {
            return Err(StlError::Trajectory(format!(
                "appended sample at {} does not follow {}",
                s.t,
                self.end_time()
            )));
        }
        self.samples.push(s);
        Ok(())
    }

    /// Returns a copy extended with a stationary sample at `t` when `t` is
    /// past the end, modelling a robot that stops after its last motion.
    pub fn held_until(&self, t: f64) -> TimedTrajectory {
        let mut out = self.clone();
        if t > out.end_time() {
            let last = *out.last();
            out.samples.push(TimedSample::new(last.pos, last.heading, t));
        }
        out.complete = true;
        out
    }

    /// Interpolated position. Times outside the sample range are clamped.
    pub fn position_at(&self, t: f64) -> Point {
        let s = &self.samples;
        match s.binary_search_by(|x| x.t.partial_cmp(&t).unwrap()) {
            Ok(i) => s[i].pos,
            Err(0) => s[0].pos,
            Err(i) if i == s.len() => s[s.len() - 1].pos,
            Err(i) => lerp(&s[i - 1].pos, s[i - 1].t, &s[i].pos, s[i].t, t),
        }
    }
}
