//! Turning a move between two workspace points into a policy sequence: an
//! optional rotation leg towards the target followed by one forward leg.

use std::f64::consts::TAU;

use rand::Rng;

use crate::geometry::{wrap_angle, Point};
use crate::library::MotionLibrary;
use crate::primitives::{rollout_end, Policy, PrimitiveKind, RobotState, Segment};

/// Heading differences below this are treated as already aligned when an
/// edge has to hit its target exactly.
pub(crate) const ANGLE_EPS: f64 = 1e-9;
/// Largest landing error accepted for an exactly realized edge, meters.
const LANDING_TOL: f64 = 1e-6;

/// Policy sequence of one edge and where it leaves the robot.
#[derive(Debug, Clone)]
pub struct Edge {
    pub segments: Vec<Segment>,
    pub end: RobotState,
}

impl Edge {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

fn rotation_kind(delta: f64) -> PrimitiveKind {
    if delta > 0.0 {
        PrimitiveKind::Counterclockwise
    } else {
        PrimitiveKind::Clockwise
    }
}

fn admissible(lib: &MotionLibrary, kind: PrimitiveKind, d: f64) -> Vec<Policy> {
    lib.of_kind(kind)
        .filter(|p| lib.estimator(p.id).contains(d))
        .copied()
        .collect()
}

fn leg(lib: &MotionLibrary, policy: Policy, d: f64) -> Option<Segment> {
    let duration = lib.estimator(policy.id).predict_duration(d).ok()?;
    (duration > 0.0).then_some(Segment::new(policy, duration))
}

fn land(lib: &MotionLibrary, from: RobotState, segments: &[Segment]) -> Option<RobotState> {
    segments.iter().try_fold(from, |s, seg| {
        rollout_end(&lib.model, s, &seg.policy, seg.duration).ok()
    })
}

/// Segment end poses with their absolute times, starting after `from`.
pub fn segment_ends(
    lib: &MotionLibrary,
    from: RobotState,
    t0: f64,
    segments: &[Segment],
) -> Vec<(RobotState, f64)> {
    let mut out = Vec::with_capacity(segments.len());
    let (mut s, mut t) = (from, t0);
    for seg in segments {
        s = rollout_end(&lib.model, s, &seg.policy, seg.duration).expect("library policy");
        t += seg.duration;
        out.push((s, t));
    }
    out
}

/// Random policy sequence towards `target` for a newly added node.
///
/// Small turns are approximated: up to `theta_tol` the rotation is skipped,
/// and turns below every rotational estimator's range use the slowest
/// policy's smallest rotation. The returned end pose is the actual noiseless
/// landing point, which may differ slightly from `target`.
pub fn sample_policies<R: Rng + ?Sized>(
    lib: &MotionLibrary,
    from: RobotState,
    target: Point,
    theta_tol: f64,
    rng: &mut R,
) -> Option<Edge> {
    let v = target - from.pos;
    let d = v.norm();
    let forward = admissible(lib, PrimitiveKind::Forward, d);
    if forward.is_empty() {
        return None;
    }
    let delta = wrap_angle(v.y.atan2(v.x) - from.heading);
    let mut segments = Vec::with_capacity(2);
    if delta.abs() > theta_tol {
        let kind = rotation_kind(delta);
        let options = admissible(lib, kind, delta.abs());
        if options.is_empty() {
            let slowest = lib.of_kind(kind).min_by(|a, b| a.speed().total_cmp(&b.speed()))?;
            let e = lib.estimator(slowest.id);
            if delta.abs() > e.d_min {
                return None;
            }
            segments.push(leg(lib, *slowest, e.d_min)?);
        } else {
            let p = options[rng.random_range(0..options.len())];
            segments.push(leg(lib, p, delta.abs())?);
        }
    }
    let p = forward[rng.random_range(0..forward.len())];
    segments.push(leg(lib, p, d)?);
    let end = land(lib, from, &segments)?;
    Some(Edge { segments, end })
}

/// Ways to turn exactly by the signed angle `delta`: the short way first,
/// then the long way round.
fn exact_turns(delta: f64) -> [(PrimitiveKind, f64); 2] {
    let kind = rotation_kind(delta);
    [(kind, delta.abs()), (kind.mirror(), TAU - delta.abs())]
}

/// How [`exact_edge`] picks its policies.
pub enum Choice<'a, R: Rng + ?Sized> {
    /// Uniformly among admissible policies.
    Random(&'a mut R),
    /// Keep a previous edge's rotation level and forward policy when they
    /// still fit, otherwise the slowest admissible ones.
    Keep {
        rotation_level: Option<u32>,
        forward: Policy,
    },
}

/// Policy sequence from `from` that ends exactly on `target`, facing along
/// the move. Turns too small for any rotational policy go the long way
/// round. `None` when no admissible sequence exists.
pub fn exact_edge<R: Rng + ?Sized>(
    lib: &MotionLibrary,
    from: RobotState,
    target: Point,
    choice: Choice<'_, R>,
) -> Option<Edge> {
    let v = target - from.pos;
    let d = v.norm();
    let forward = admissible(lib, PrimitiveKind::Forward, d);
    if forward.is_empty() {
        return None;
    }
    let delta = wrap_angle(v.y.atan2(v.x) - from.heading);
    let mut segments = Vec::with_capacity(2);
    let fwd = match choice {
        Choice::Random(rng) => {
            if delta.abs() > ANGLE_EPS {
                let (kind, angle, options) = exact_turns(delta)
                    .into_iter()
                    .map(|(k, a)| (k, a, admissible(lib, k, a)))
                    .find(|(_, _, o)| !o.is_empty())?;
                debug_assert!(kind.is_rotation());
                let p = options[rng.random_range(0..options.len())];
                segments.push(leg(lib, p, angle)?);
            }
            forward[rng.random_range(0..forward.len())]
        }
        Choice::Keep {
            rotation_level,
            forward: keep,
        } => {
            if delta.abs() > ANGLE_EPS {
                let level = rotation_level.unwrap_or(1);
                let turns = exact_turns(delta);
                let same_level = turns.iter().find_map(|&(k, a)| {
                    admissible(lib, k, a)
                        .into_iter()
                        .find(|p| p.id.level == level)
                        .map(|p| (p, a))
                });
                let (p, angle) = same_level.or_else(|| {
                    turns.iter().find_map(|&(k, a)| {
                        admissible(lib, k, a)
                            .into_iter()
                            .min_by(|x, y| x.speed().total_cmp(&y.speed()))
                            .map(|p| (p, a))
                    })
                })?;
                segments.push(leg(lib, p, angle)?);
            }
            if forward.iter().any(|p| p.id == keep.id) {
                keep
            } else {
                forward[0]
            }
        }
    };
    segments.push(leg(lib, fwd, d)?);
    let end = land(lib, from, &segments)?;
    if (end.pos - target).norm() > LANDING_TOL {
        return None;
    }
    Some(Edge {
        segments,
        end: RobotState::new(target, end.heading),
    })
}

/// Deterministic policy sequence from a perturbed pose onto the position of
/// a planned node, timed to arrive as close to `duration` from now as the
/// library allows. Candidates combine every admissible forward policy with
/// every rotation level, turning either way round; ties keep the planned
/// policies. Turns up to `theta_tol` are skipped.
pub fn correction_edge(
    lib: &MotionLibrary,
    from: RobotState,
    target: Point,
    planned: &[Segment],
    theta_tol: f64,
    duration: f64,
) -> Option<Edge> {
    let v = target - from.pos;
    let d = v.norm();
    let delta = wrap_angle(v.y.atan2(v.x) - from.heading);
    let rotations: Vec<Option<Segment>> = if delta.abs() > theta_tol {
        let the_long_way = delta - TAU.copysign(delta);
        [delta, the_long_way]
            .into_iter()
            .flat_map(|angle| {
                lib.of_kind(rotation_kind(angle))
                    .filter_map(move |p| turn(lib, angle, p.id.level))
            })
            .map(Some)
            .collect()
    } else {
        vec![None]
    };
    let planned_ids: Vec<_> = planned.iter().map(|s| s.policy.id).collect();
    let mismatch = |segs: &[Segment]| {
        segs.iter()
            .filter(|s| !planned_ids.contains(&s.policy.id))
            .count()
    };
    let mut best: Option<(f64, usize, Vec<Segment>)> = None;
    for fwd in admissible(lib, PrimitiveKind::Forward, d) {
        let forward = leg(lib, fwd, d)?;
        for rot in &rotations {
            let segments: Vec<Segment> = rot.iter().copied().chain([forward]).collect();
            let total: f64 = segments.iter().map(|s| s.duration).sum();
            let key = ((total - duration).abs(), mismatch(&segments));
            if best
                .as_ref()
                .is_none_or(|(e, m, _)| key.0 < *e - 1e-12 || (key.0 <= *e + 1e-12 && key.1 < *m))
            {
                best = Some((key.0, key.1, segments));
            }
        }
    }
    let segments = best?.2;
    let end = land(lib, from, &segments)?;
    Some(Edge { segments, end })
}

/// Rotation by the signed `angle`, preferring velocity `level`. Angles
/// smaller than any estimator covers run the slowest rotation for a
/// proportionally shorter time.
fn turn(lib: &MotionLibrary, angle: f64, level: u32) -> Option<Segment> {
    let kind = rotation_kind(angle);
    let options = admissible(lib, kind, angle.abs());
    if let Some(p) = options.iter().find(|p| p.id.level == level).or(options.first()) {
        return leg(lib, *p, angle.abs());
    }
    let slowest = lib.of_kind(kind).min_by(|a, b| a.speed().total_cmp(&b.speed()))?;
    let e = lib.estimator(slowest.id);
    if angle.abs() > e.d_min {
        return None;
    }
    let at_min = leg(lib, *slowest, e.d_min)?;
    Some(Segment::new(*slowest, at_min.duration * angle.abs() / e.d_min))
}

/// The planned segments of one edge with the leading rotation changed by
/// `heading_error`, so a robot that lies on the edge's start position but
/// faces the wrong way ends up on the planned course.
pub fn realign(lib: &MotionLibrary, planned: &[Segment], heading_error: f64) -> Option<Vec<Segment>> {
    let split = planned
        .iter()
        .take_while(|s| s.policy.kind().is_rotation())
        .count();
    let (rotations, rest) = planned.split_at(split);
    let planned_angle: f64 = rotations.iter().map(|s| s.policy.velocity * s.duration).sum();
    let angle = planned_angle + heading_error;
    let level = rotations.first().map_or(1, |s| s.policy.id.level);
    let mut out = Vec::with_capacity(planned.len());
    if rotations.len() == 1 && angle * planned_angle > 0.0 {
        let r = rotations[0];
        out.push(Segment::new(r.policy, r.duration * angle / planned_angle));
    } else if angle.abs() > ANGLE_EPS {
        out.push(turn(lib, angle, level)?);
    }
    out.extend_from_slice(rest);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::RobotModel;
    use crate::reach::ReachConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn lib(levels: u32) -> MotionLibrary {
        MotionLibrary::build(RobotModel::differential_drive(), levels, &ReachConfig::default()).unwrap()
    }

    #[test]
    fn aligned_move_is_one_forward_leg() {
        let lib = lib(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let from = RobotState::new(Point::new(0.5, 0.5), 0.0);
        let e = sample_policies(&lib, from, Point::new(0.7, 0.5), 0.02, &mut rng).unwrap();
        assert_eq!(e.segments.len(), 1);
        // 0.2 m at 0.22 m/s.
        assert!((e.duration() - 0.2 / 0.22).abs() < 1e-9);
        assert!((e.end.pos - Point::new(0.7, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn quarter_turn_duration() {
        let lib = lib(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let from = RobotState::new(Point::new(0.5, 0.5), 0.0);
        let e = sample_policies(&lib, from, Point::new(0.5, 0.8), 0.02, &mut rng).unwrap();
        assert_eq!(e.segments.len(), 2);
        assert_eq!(e.segments[0].policy.kind(), PrimitiveKind::Counterclockwise);
        assert!((e.segments[0].duration - FRAC_PI_2 / 2.84).abs() < 1e-9);
        assert!((e.end.heading - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn tiny_turn_is_skipped_and_landing_snapped() {
        let lib = lib(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let from = RobotState::new(Point::zeros(), 0.0);
        let target = Point::new(0.4, 0.4 * 0.01f64.tan());
        let e = sample_policies(&lib, from, target, 0.02, &mut rng).unwrap();
        assert_eq!(e.segments.len(), 1);
        assert_eq!(e.end.heading, 0.0);
        assert!((e.end.pos - Point::new(target.norm(), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn small_turn_uses_slowest_minimum() {
        let lib = lib(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let from = RobotState::new(Point::zeros(), 0.0);
        let target = Point::new(0.4, -0.4 * 0.05f64.tan());
        let e = sample_policies(&lib, from, target, 0.02, &mut rng).unwrap();
        let rot = e.segments[0];
        assert_eq!(rot.policy.kind(), PrimitiveKind::Clockwise);
        assert_eq!(rot.policy.id.level, 1);
        assert!((e.end.heading + 2.84 / 3.0 * 0.1).abs() < 1e-9);
    }

    #[test]
    fn exact_edge_lands_on_target() {
        let lib = lib(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let from = RobotState::new(Point::new(1.0, 1.0), 0.3);
        for target in [
            Point::new(1.3, 1.2),
            Point::new(0.6, 0.9),
            Point::new(1.0 + 0.5 * 0.3f64.cos() + 1e-4, 1.0 + 0.5 * 0.3f64.sin()),
        ] {
            let e = exact_edge(&lib, from, target, Choice::Random(&mut rng)).unwrap();
            let end = land(&lib, from, &e.segments).unwrap();
            assert!((end.pos - target).norm() < 1e-9);
            let v = target - from.pos;
            assert!(wrap_angle(end.heading - v.y.atan2(v.x)).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_exact_turn_goes_long_way() {
        let lib = lib(3);
        let from = RobotState::new(Point::zeros(), 0.0);
        let target = Point::new(0.4, 0.4 * 0.01f64.tan());
        let fwd = *lib.of_kind(PrimitiveKind::Forward).next().unwrap();
        let e = exact_edge::<ChaCha8Rng>(
            &lib,
            from,
            target,
            Choice::Keep {
                rotation_level: Some(2),
                forward: fwd,
            },
        )
        .unwrap();
        assert_eq!(e.segments[0].policy.kind(), PrimitiveKind::Clockwise);
        assert_eq!(e.segments[0].policy.id.level, 2);
        assert_eq!(e.segments[1].policy.id, fwd.id);
        assert!((e.end.pos - target).norm() < 1e-12);
    }

    #[test]
    fn correction_matches_the_time_budget() {
        let lib = lib(3);
        let from = RobotState::new(Point::new(0.0, 0.02), 0.0);
        let target = Point::new(0.5, -0.3);
        let id = |e: &Edge| {
            e.segments
                .iter()
                .map(|s| s.policy.id.to_string())
                .collect::<Vec<_>>()
        };

        let fast = correction_edge(&lib, from, target, &[], 0.02, 0.0).unwrap();
        assert_eq!(id(&fast), ["cw-3", "fwd-3"]);
        assert!((fast.end.pos - target).norm() < 1e-9);

        let slow = correction_edge(&lib, from, target, &[], 0.02, 100.0).unwrap();
        assert_eq!(id(&slow), ["ccw-1", "fwd-1"]);
        assert!((slow.end.pos - target).norm() < 1e-9);
    }

    #[test]
    fn out_of_range_distance_is_rejected() {
        let lib = lib(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let from = RobotState::new(Point::zeros(), 0.0);
        assert!(sample_policies(&lib, from, Point::new(50.0, 0.0), 0.02, &mut rng).is_none());
        assert!(exact_edge(&lib, from, Point::new(0.001, 0.0), Choice::Random(&mut rng)).is_none());
    }
}
