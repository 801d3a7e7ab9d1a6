//! Ellipse parameters measured from bubble shapes by their diameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::young_laplace::BubbleProfile;

const MIN_RANGE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),
}

/// `(x - x_c)²/a² + (y - y_c)²/b² = 1`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    /// Horizontal semi-axis.
    pub a: f64,
    /// Vertical semi-axis.
    pub b: f64,
    pub center: (f64, f64),
}

impl EllipseParams {
    pub fn new(a: f64, b: f64, center: (f64, f64)) -> Self {
        Self { a, b, center }
    }

    /// Point at polar parameter `phi`.
    pub fn point(&self, phi: f64) -> (f64, f64) {
        (
            self.center.0 + self.a * phi.cos(),
            self.center.1 + self.b * phi.sin(),
        )
    }
}

/// Fit a half-profile: `a` is the largest radius, `b` half the height, and
/// the center sits on the axis at mid-height.
pub fn fit_ellipse(profile: &BubbleProfile) -> Result<EllipseParams, ShapeError> {
    if profile.samples.len() < 2 {
        return Err(ShapeError::DegenerateProfile(format!(
            "{} samples",
            profile.samples.len()
        )));
    }
    let (r_lo, r_hi) = range(profile.samples.iter().map(|(_, y)| y.r));
    let (z_lo, z_hi) = range(profile.samples.iter().map(|(_, y)| y.z));
    check_range("r", r_lo, r_hi)?;
    check_range("z", z_lo, z_hi)?;
    Ok(EllipseParams::new(
        r_hi,
        0.5 * (z_hi - z_lo),
        (0.0, 0.5 * (z_lo + z_hi)),
    ))
}

/// Fit a closed planar curve: half of each coordinate range, centered
/// between the extremes.
pub fn fit_points(points: &[(f64, f64)]) -> Result<EllipseParams, ShapeError> {
    if points.len() < 2 {
        return Err(ShapeError::DegenerateProfile(format!(
            "{} points",
            points.len()
        )));
    }
    let (x_lo, x_hi) = range(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = range(points.iter().map(|p| p.1));
    check_range("x", x_lo, x_hi)?;
    check_range("y", y_lo, y_hi)?;
    Ok(EllipseParams::new(
        0.5 * (x_hi - x_lo),
        0.5 * (y_hi - y_lo),
        (0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)),
    ))
}

/// Reflect the half-profile through the axis, `(r, z) -> (-r, z)`, giving a
/// closed counterclockwise curve of `2n - 2` points. The first and last
/// profile samples are shared by both halves and appear once.
pub fn mirror_axisymmetric(profile: &BubbleProfile) -> Result<Vec<(f64, f64)>, ShapeError> {
    fit_ellipse(profile)?;
    let half: Vec<(f64, f64)> = profile.samples.iter().map(|(_, y)| (y.r, y.z)).collect();
    let n = half.len();
    let mut curve = Vec::with_capacity(2 * n - 2);
    curve.extend_from_slice(&half);
    curve.extend(half[1..n - 1].iter().rev().map(|&(r, z)| (-r, z)));
    if signed_area(&curve) < 0.0 {
        curve.reverse();
    }
    Ok(curve)
}

/// Shoelace area; positive for counterclockwise curves.
pub fn signed_area(curve: &[(f64, f64)]) -> f64 {
    let n = curve.len();
    0.5 * (0..n)
        .map(|k| {
            let (x0, y0) = curve[k];
            let (x1, y1) = curve[(k + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum::<f64>()
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn check_range(name: &str, lo: f64, hi: f64) -> Result<(), ShapeError> {
    if !(hi - lo >= MIN_RANGE) {
        return Err(ShapeError::DegenerateProfile(format!(
            "{name} range {} is below {MIN_RANGE:e}",
            hi - lo
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::young_laplace::{FormKind, ProfileState};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn half_ellipse(a: f64, b: f64, n: usize) -> BubbleProfile {
        // odd n puts a sample on the equator
        let samples = (0..n)
            .map(|k| {
                let t = PI * k as f64 / (n - 1) as f64;
                (t, ProfileState::new(a * t.sin(), b * (1.0 - t.cos()), t))
            })
            .collect();
        BubbleProfile {
            samples,
            length: PI,
            variant: FormKind::Bond,
            newton_updates: vec![],
        }
    }

    #[test]
    fn semicircle() {
        let e = fit_ellipse(&half_ellipse(1.0, 1.0, 201)).unwrap();
        assert!((e.a - 1.0).abs() < 1e-12);
        assert!((e.b - 1.0).abs() < 1e-12);
        assert!((e.center.1 - 1.0).abs() < 1e-12);
        assert_eq!(e.center.0, 0.0);
    }

    #[test]
    fn synthetic_half_ellipse() {
        let e = fit_ellipse(&half_ellipse(0.6, 0.9, 129)).unwrap();
        assert!((e.a - 0.6).abs() < 1e-6);
        assert!((e.b - 0.9).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let mut flat = half_ellipse(1.0, 1.0, 11);
        for (_, y) in flat.samples.iter_mut() {
            y.z = 0.3;
        }
        assert!(fit_ellipse(&flat).is_err());
        assert!(mirror_axisymmetric(&flat).is_err());
        let mut single = half_ellipse(1.0, 1.0, 11);
        single.samples.truncate(1);
        assert!(fit_ellipse(&single).is_err());
        assert!(fit_points(&[(0.0, 0.0)]).is_err());
    }

    #[test]
    fn mirrored_circle_is_closed_and_ccw() {
        let prof = half_ellipse(1.0, 1.0, 101);
        let curve = mirror_axisymmetric(&prof).unwrap();
        assert_eq!(curve.len(), 200);
        assert!(signed_area(&curve) > 0.0);
        assert!((signed_area(&curve) - PI).abs() < 1e-2);
        // closing segment is a regular chord, not a jump
        let (first, last) = (curve[0], curve[curve.len() - 1]);
        let gap = ((first.0 - last.0).powi(2) + (first.1 - last.1).powi(2)).sqrt();
        assert!(gap < 2.0 * PI / 200.0 * 1.01);
        // the first point sits on the axis and coincides with its own mirror image
        assert!(curve.iter().any(|p| p.0.abs() < 1e-12 && p.1.abs() < 1e-12));
    }

    #[test]
    fn mirror_consistent_with_fit() {
        let prof = half_ellipse(0.7, 1.3, 65);
        let e = fit_ellipse(&prof).unwrap();
        let curve = mirror_axisymmetric(&prof).unwrap();
        let max_x = curve.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = range(curve.iter().map(|p| p.1));
        assert_eq!(max_x, e.a);
        assert!((hi - lo - 2.0 * e.b).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip(a in 0.1f64..5.0, b in 0.1f64..5.0, half_n in 32usize..200) {
            let e = fit_ellipse(&half_ellipse(a, b, 2 * half_n + 1)).unwrap();
            prop_assert!((e.a - a).abs() <= 1e-6 * a);
            prop_assert!((e.b - b).abs() <= 1e-6 * b);
        }

        #[test]
        fn scale_equivariance(a in 0.1f64..5.0, b in 0.1f64..5.0, lambda in 0.01f64..100.0) {
            let prof = half_ellipse(a, b, 65);
            let mut scaled = prof.clone();
            for (_, y) in scaled.samples.iter_mut() {
                y.r *= lambda;
                y.z *= lambda;
            }
            let e = fit_ellipse(&prof).unwrap();
            let s = fit_ellipse(&scaled).unwrap();
            prop_assert!((s.a - lambda * e.a).abs() <= 1e-12 * s.a);
            prop_assert!((s.b - lambda * e.b).abs() <= 1e-12 * s.b);
        }

        #[test]
        fn reflection_invariance(a in 0.1f64..5.0, b in 0.1f64..5.0, n in 5usize..100) {
            let prof = half_ellipse(a, b, 2 * n + 1);
            let e = fit_ellipse(&prof).unwrap();
            let curve = mirror_axisymmetric(&prof).unwrap();
            prop_assert_eq!(curve.len(), 2 * (2 * n + 1) - 2);
            let c = fit_points(&curve).unwrap();
            prop_assert!((c.a - e.a).abs() <= 1e-12 * e.a);
            prop_assert!((c.b - e.b).abs() <= 1e-12 * e.b);
            prop_assert!(c.center.0.abs() <= 1e-12);
            prop_assert!((c.center.1 - e.center.1).abs() <= 1e-12 * (1.0 + e.center.1.abs()));
        }
    }
}
