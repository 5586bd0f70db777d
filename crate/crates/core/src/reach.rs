//! Reachability-time estimators: for each policy, a monotone polynomial
//! mapping the displacement it produces (meters, or radians for rotations)
//! to the time it has to be applied.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::primitives::{rollout_end, Policy, PolicyId, PrimitiveError, RobotModel, RobotState};
use crate::Point;

/// Points used to verify monotonicity and positivity over the valid range.
const MONOTONE_GRID: usize = 256;
/// Relative slack when checking a displacement against the valid range.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReachError {
    #[error("degree {degree} fit is not increasing on [{d_min}, {d_max}]; try a lower degree")]
    NonMonotone { degree: usize, d_min: f64, d_max: f64 },
    #[error("degree {degree} fit predicts a non-positive duration inside its range")]
    NonPositive { degree: usize },
    #[error("least-squares system is rank deficient for degree {degree}")]
    RankDeficient { degree: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("displacement {d} outside the estimator range [{d_min}, {d_max}]")]
    OutOfRange { d: f64, d_min: f64, d_max: f64 },
    #[error("translation ranges do not intersect ({d_min} >= {d_max})")]
    EmptyRange { d_min: f64, d_max: f64 },
    #[error("no translation estimators given")]
    NoEstimators,
    #[error("horizons must be positive and strictly increasing")]
    Horizons,
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
    #[error("estimator table line {line}: {message}")]
    Table { line: usize, message: String },
}

/// One rollout observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachSample {
    pub duration: f64,
    /// Magnitude of the pose change.
    pub displacement: f64,
}

/// Fitted `duration = Σ cᵢ·dⁱ` valid on `[d_min, d_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachEstimator {
    pub policy: PolicyId,
    pub coefficients: Vec<f64>,
    pub d_min: f64,
    pub d_max: f64,
    /// Max relative duration error on the held-out samples.
    pub residual: f64,
}

/// 0.1 s steps from 0.1 s to 10 s.
pub fn default_horizons() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 10.0).collect()
}

/// Settings for building the estimator set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachConfig {
    pub horizons: Vec<f64>,
    pub degree: usize,
    pub holdout: f64,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self {
            horizons: default_horizons(),
            degree: 3,
            holdout: 0.2,
        }
    }
}

/// One noiseless rollout per horizon from the origin, heading 0.
pub fn collect_samples(
    model: &RobotModel,
    policy: &Policy,
    horizons: &[f64],
) -> Result<Vec<ReachSample>, ReachError> {
    if horizons.iter().any(|&h| !(h > 0.0)) || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ReachError::Horizons);
    }
    let start = RobotState::new(Point::zeros(), 0.0);
    horizons
        .iter()
        .map(|&h| {
            let end = rollout_end(model, start, policy, h)?;
            let displacement = if policy.kind().is_rotation() {
                (end.heading - start.heading).abs()
            } else {
                (end.pos - start.pos).norm()
            };
            Ok(ReachSample {
                duration: h,
                displacement,
            })
        })
        .collect()
}

fn holdout_period(fraction: f64) -> Option<usize> {
    if fraction <= 0.0 {
        None
    } else {
        Some(((1.0 / fraction).round() as usize).max(2))
    }
}

fn horner(c: &[f64], d: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * d + ci)
}

fn derivative(c: &[f64], d: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &ci)| acc * d + i as f64 * ci)
}

/// Least-squares polynomial fit of duration against displacement.
///
/// With `holdout > 0`, every `round(1/holdout)`-th sample (by index) is held
/// out and only used to compute the residual; otherwise the residual is
/// measured on the training samples.
pub fn fit_estimator(
    policy: PolicyId,
    samples: &[ReachSample],
    degree: usize,
    holdout: f64,
) -> Result<ReachEstimator, ReachError> {
    let period = holdout_period(holdout);
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (i, s) in samples.iter().enumerate() {
        match period {
            Some(p) if i % p == p - 1 => held.push(*s),
            _ => train.push(*s),
        }
    }
    let needed = degree + 1 + usize::from(period.is_some());
    if train.len() < degree + 1 || samples.len() < needed {
        return Err(ReachError::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }

    let mut distinct: Vec<f64> = train.iter().map(|s| s.displacement).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(ReachError::RankDeficient { degree });
    }

    // Fit in u = d / scale for conditioning, then map back.
    let scale = distinct.last().copied().unwrap().abs().max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(train.len(), degree + 1, |r, c| {
        (train[r].displacement / scale).powi(c as i32)
    });
    let b = DVector::from_iterator(train.len(), train.iter().map(|s| s.duration));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return Err(ReachError::RankDeficient { degree });
    }
    let u = svd
        .solve(&b, 0.0)
        .map_err(|_| ReachError::RankDeficient { degree })?;
    let coefficients: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, ci)| ci / scale.powi(i as i32))
        .collect();

    let d_min = distinct[0];
    let d_max = *distinct.last().unwrap();
    for k in 0..=MONOTONE_GRID {
        let d = d_min + (d_max - d_min) * k as f64 / MONOTONE_GRID as f64;
        if !(derivative(&coefficients, d) > 0.0) {
            return Err(ReachError::NonMonotone { degree, d_min, d_max });
        }
        if !(horner(&coefficients, d) > 0.0) {
            return Err(ReachError::NonPositive { degree });
        }
    }

    let check = if held.is_empty() { &train } else { &held };
    let residual = check
        .iter()
        .map(|s| ((horner(&coefficients, s.displacement) - s.duration) / s.duration).abs())
        .fold(0.0, f64::max);

    Ok(ReachEstimator {
        policy,
        coefficients,
        d_min,
        d_max,
        residual,
    })
}

/// [`fit_estimator`] at `degree`, retried at degree 1 if the fit is not
/// monotone or positive.
pub fn fit_with_fallback(
    policy: PolicyId,
    samples: &[ReachSample],
    degree: usize,
    holdout: f64,
) -> Result<ReachEstimator, ReachError> {
    match fit_estimator(policy, samples, degree, holdout) {
        Err(ReachError::NonMonotone { .. } | ReachError::NonPositive { .. }) if degree > 1 => {
            fit_estimator(policy, samples, 1, holdout)
        }
        other => other,
    }
}

impl ReachEstimator {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.d_min * (1.0 - RANGE_SLACK) && d <= self.d_max * (1.0 + RANGE_SLACK)
    }

    /// Duration needed to cover `d`. Never extrapolates.
    pub fn predict_duration(&self, d: f64) -> Result<f64, ReachError> {
        if !self.contains(d) {
            return Err(ReachError::OutOfRange {
                d,
                d_min: self.d_min,
                d_max: self.d_max,
            });
        }
        Ok(horner(&self.coefficients, d))
    }
}

/// Common displacement range every translation estimator can realize.
pub fn compute_distance_range<'a>(
    estimators: impl IntoIterator<Item = &'a ReachEstimator>,
) -> Result<(f64, f64), ReachError> {
    let mut range: Option<(f64, f64)> = None;
    for e in estimators {
        range = Some(match range {
            None => (e.d_min, e.d_max),
            Some((lo, hi)) => (lo.max(e.d_min), hi.min(e.d_max)),
        });
    }
    let (d_min, d_max) = range.ok_or(ReachError::NoEstimators)?;
    if d_min >= d_max {
        return Err(ReachError::EmptyRange { d_min, d_max });
    }
    Ok((d_min, d_max))
}

/// Text table, one estimator per line:
/// `policy,degree,c0;c1;...,d_min,d_max,residual`.
pub fn write_table(estimators: &[ReachEstimator]) -> String {
    let mut out = String::from("# policy,degree,coefficients,d_min,d_max,residual\n");
    for e in estimators {
        let coeffs: Vec<String> = e.coefficients.iter().map(|c| format!("{c:e}")).collect();
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e}",
            e.policy,
            e.degree(),
            coeffs.join(";"),
            e.d_min,
            e.d_max,
            e.residual
        );
    }
    out
}

pub fn read_table(text: &str) -> Result<Vec<ReachEstimator>, ReachError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| ReachError::Table {
            line: n + 1,
            message: message.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err("expected 6 fields"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err("bad number"));
        let policy: PolicyId = fields[0].parse().map_err(|_| err("bad policy id"))?;
        let degree: usize = fields[1].trim().parse().map_err(|_| err("bad degree"))?;
        let coefficients = fields[2].split(';').map(num).collect::<Result<Vec<f64>, _>>()?;
        if coefficients.len() != degree + 1 {
            return Err(err("coefficient count does not match degree"));
        }
        out.push(ReachEstimator {
            policy,
            coefficients,
            d_min: num(fields[3])?,
            d_max: num(fields[4])?,
            residual: num(fields[5])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{policy_library, PrimitiveKind};

    fn linear_samples(v: f64, horizons: &[f64]) -> Vec<ReachSample> {
        horizons
            .iter()
            .map(|&t| ReachSample {
                duration: t,
                displacement: v * t,
            })
            .collect()
    }

    fn fwd(level: u32) -> PolicyId {
        PolicyId {
            kind: PrimitiveKind::Forward,
            level,
        }
    }

    #[test]
    fn collect_forward_samples() {
        let m = RobotModel::differential_drive();
        let mut p = policy_library(&m, 1).unwrap()[2];
        p.velocity = 0.2;
        let s = collect_samples(&m, &p, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.len(), 3);
        for (got, want) in s.iter().zip([0.2, 0.4, 0.6]) {
            assert!((got.displacement - want).abs() < 1e-12);
        }
    }

    #[test]
    fn collect_clockwise_is_magnitude() {
        let m = RobotModel::differential_drive();
        let p = policy_library(&m, 1)
            .unwrap()
            .into_iter()
            .find(|p| p.kind() == PrimitiveKind::Clockwise)
            .unwrap();
        assert_eq!(p.velocity, -2.84);
        let s = collect_samples(&m, &p, &[1.0]).unwrap();
        assert!((s[0].displacement - 2.84).abs() < 1e-12);
        assert!(collect_samples(&m, &p, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn linear_fit_recovers_inverse_velocity() {
        let e = fit_estimator(fwd(1), &linear_samples(0.2, &default_horizons()), 1, 0.2).unwrap();
        assert!((e.coefficients[1] - 5.0).abs() < 1e-9);
        assert!(e.coefficients[0].abs() < 1e-9);
        assert!(e.residual < 1e-9);
        assert!((e.predict_duration(0.5).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn two_point_line_interpolates() {
        let s = linear_samples(0.1, &[1.0, 3.0]);
        let e = fit_estimator(fwd(1), &s, 1, 0.0).unwrap();
        assert!(e.residual < 1e-12);
        assert_eq!((e.d_min, e.d_max), (0.1, 0.30000000000000004));
    }

    #[test]
    fn holdout_residual_recomputed() {
        // Mildly nonlinear data so the residual is non-trivial.
        let s: Vec<ReachSample> = default_horizons()
            .iter()
            .map(|&t| ReachSample {
                duration: t,
                displacement: 0.2 * t + 0.01 * (3.0 * t).sin(),
            })
            .collect();
        let e = fit_estimator(fwd(1), &s, 1, 0.2).unwrap();
        let recomputed = s
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 5 == 4)
            .map(|(_, s)| {
                let p = e.coefficients[0] + e.coefficients[1] * s.displacement;
                ((p - s.duration) / s.duration).abs()
            })
            .fold(0.0, f64::max);
        assert!((e.residual - recomputed).abs() < 1e-15);
        assert!(e.residual > 0.0);
    }

    #[test]
    fn non_monotone_and_rank_errors() {
        // duration falls with displacement.
        let s: Vec<ReachSample> = (1..=20)
            .map(|k| ReachSample {
                duration: 10.0 - 0.4 * k as f64,
                displacement: k as f64,
            })
            .collect();
        assert!(matches!(
            fit_estimator(fwd(1), &s, 1, 0.0),
            Err(ReachError::NonMonotone { .. })
        ));
        let dup = vec![
            ReachSample {
                duration: 1.0,
                displacement: 0.5
            };
            6
        ];
        assert!(matches!(
            fit_estimator(fwd(1), &dup, 1, 0.0),
            Err(ReachError::RankDeficient { .. })
        ));
        assert!(matches!(
            fit_estimator(fwd(1), &dup[..2], 3, 0.0),
            Err(ReachError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn fallback_to_linear() {
        // A cubic through these points wiggles; the fallback must return a line.
        let s: Vec<ReachSample> = [(0.1, 1.0), (0.2, 4.0), (0.3, 1.5), (0.4, 2.0), (0.5, 6.0)]
            .iter()
            .map(|&(d, t)| ReachSample {
                duration: t,
                displacement: d,
            })
            .collect();
        assert!(fit_estimator(fwd(1), &s, 3, 0.0).is_err());
        let e = fit_with_fallback(fwd(1), &s, 3, 0.0).unwrap();
        assert_eq!(e.degree(), 1);
    }

    #[test]
    fn out_of_range_prediction() {
        let e = fit_estimator(fwd(1), &linear_samples(0.2, &default_horizons()), 1, 0.2).unwrap();
        assert!(matches!(
            e.predict_duration(5.0),
            Err(ReachError::OutOfRange { .. })
        ));
        assert!(e.predict_duration(0.001).is_err());
    }

    fn est(d_min: f64, d_max: f64) -> ReachEstimator {
        ReachEstimator {
            policy: fwd(1),
            coefficients: vec![0.0, 1.0],
            d_min,
            d_max,
            residual: 0.0,
        }
    }

    #[test]
    fn distance_range_intersection() {
        let (a, b) = (est(0.05, 2.0), est(0.1, 1.5));
        assert_eq!(compute_distance_range([&a, &b]).unwrap(), (0.1, 1.5));
        assert_eq!(compute_distance_range([&a]).unwrap(), (0.05, 2.0));
        let c = est(3.0, 4.0);
        assert!(matches!(
            compute_distance_range([&a, &c]),
            Err(ReachError::EmptyRange { .. })
        ));
        assert!(matches!(
            compute_distance_range(std::iter::empty()),
            Err(ReachError::NoEstimators)
        ));
    }

    #[test]
    fn table_round_trip_is_exact() {
        let e = fit_estimator(fwd(2), &linear_samples(0.147, &default_horizons()), 3, 0.2).unwrap();
        let text = write_table(std::slice::from_ref(&e));
        assert_eq!(read_table(&text).unwrap(), vec![e]);
        assert!(read_table("fwd-1,1,0.0,0.1,0.2,0").is_err());
    }
}
