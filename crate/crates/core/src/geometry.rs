use std::f64::consts::PI;

use nalgebra::Vector2;

/// A point of the planar workspace, in meters.
pub type Point = Vector2<f64>;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Unit vector pointing along `heading`.
pub fn direction(heading: f64) -> Point {
    Point::new(heading.cos(), heading.sin())
}

/// Linear interpolation between two timed positions. Callers must pass
/// `t0 < t < t1`; sample instants themselves are never interpolated.
#[inline]
pub fn lerp(p0: &Point, t0: f64, p1: &Point, t1: f64, t: f64) -> Point {
    let frac = (t - t0) / (t1 - t0);
    p0 + (p1 - p0) * frac
}
