//! Minimal-norm point on a segment.

use crate::vector::{dot, Vector};

/// The point of `[a, b]` closest to the origin, written `(1 - t) a + t b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPoint {
    pub point: Vector,
    pub t: f64,
}

/// Projects the origin onto the segment `[a, b]`.
///
/// `t = clamp(<a, a - b> / |a - b|^2, 0, 1)`. The returned norm never exceeds
/// `min(|a|, |b|)`, including in floating point: if rounding pushes the
/// interior point above an endpoint, the endpoint is returned instead.
pub fn min_norm_on_segment(a: &[f64], b: &[f64]) -> SegmentPoint {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = dot(&diff, &diff);
    if denom == 0.0 {
        return SegmentPoint { point: Vector::from(a), t: 0.0 };
    }
    let t = (dot(a, &diff) / denom).clamp(0.0, 1.0);
    if t == 0.0 {
        return SegmentPoint { point: Vector::from(a), t };
    }
    if t == 1.0 {
        return SegmentPoint { point: Vector::from(b), t };
    }
    let point: Vector = a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect::<Vec<_>>().into();
    let n = point.norm_squared();
    let (na, nb) = (dot(a, a), dot(b, b));
    if n > na || n > nb {
        if na <= nb {
            return SegmentPoint { point: Vector::from(a), t: 0.0 };
        }
        return SegmentPoint { point: Vector::from(b), t: 1.0 };
    }
    SegmentPoint { point, t }
}
