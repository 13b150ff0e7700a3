use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Provenance, RomDataset};
use crate::error::{Error, Result};
use crate::kinematics::JointVector;

/// Planar test shapes with closed-form areas (degrees, deg²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Axis-aligned ellipse with semi-axes `a` (first DoF) and `b`.
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    /// `inner ≤ r ≤ outer`, polar angle in `[start_deg, end_deg]`.
    AnnulusSector {
        center: [f64; 2],
        inner: f64,
        outer: f64,
        start_deg: f64,
        end_deg: f64,
    },
    /// Disk of `radius` minus a disk of `cut_radius` shifted by `cut_offset`
    /// along the first DoF.
    Crescent {
        center: [f64; 2],
        radius: f64,
        cut_radius: f64,
        cut_offset: f64,
    },
}

impl Shape {
    pub fn disk(radius: f64) -> Self {
        Shape::Disk { center: [0.0, 0.0], radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Shape::Ellipse { center: [0.0, 0.0], a, b }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, what: &str| {
            if cond {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("invalid shape parameters: {what}")))
            }
        };
        match *self {
            Shape::Disk { radius, .. } => ok(radius > 0.0, "radius must be positive"),
            Shape::Ellipse { a, b, .. } => ok(a > 0.0 && b > 0.0, "semi-axes must be positive"),
            Shape::AnnulusSector { inner, outer, start_deg, end_deg, .. } => {
                ok(inner >= 0.0 && outer > inner, "need 0 <= inner < outer")?;
                ok(end_deg > start_deg && end_deg - start_deg <= 360.0, "need 0 < end - start <= 360")
            }
            Shape::Crescent { radius, cut_radius, cut_offset, .. } => {
                ok(radius > 0.0 && cut_radius > 0.0 && cut_offset > 0.0, "radii and offset must be positive")?;
                ok(
                    cut_offset > (radius - cut_radius).abs() && cut_offset < radius + cut_radius,
                    "the cut disk must partially overlap the main disk",
                )
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::AnnulusSector { inner, outer, start_deg, end_deg, .. } => {
                0.5 * (end_deg - start_deg).to_radians() * (outer * outer - inner * inner)
            }
            Shape::Crescent { radius, cut_radius, cut_offset, .. } => {
                PI * radius * radius - lens_area(radius, cut_radius, cut_offset)
            }
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let rel = |c: [f64; 2]| [p[0] - c[0], p[1] - c[1]];
        match *self {
            Shape::Disk { center, radius } => {
                let d = rel(center);
                d[0] * d[0] + d[1] * d[1] <= radius * radius
            }
            Shape::Ellipse { center, a, b } => {
                let d = rel(center);
                (d[0] / a).powi(2) + (d[1] / b).powi(2) <= 1.0
            }
            Shape::AnnulusSector { center, inner, outer, start_deg, end_deg } => {
                let d = rel(center);
                let r = d[0].hypot(d[1]);
                if r < inner || r > outer {
                    return false;
                }
                let theta = d[1].atan2(d[0]).to_degrees();
                let turns = ((theta - start_deg) / 360.0).floor();
                theta - 360.0 * turns <= end_deg
            }
            Shape::Crescent { center, radius, cut_radius, cut_offset } => {
                let d = rel(center);
                let inside_main = d[0] * d[0] + d[1] * d[1] <= radius * radius;
                let c = [d[0] - cut_offset, d[1]];
                inside_main && c[0] * c[0] + c[1] * c[1] > cut_radius * cut_radius
            }
        }
    }

    /// Axis-aligned box enclosing the shape.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let around = |c: [f64; 2], hx: f64, hy: f64| ([c[0] - hx, c[1] - hy], [c[0] + hx, c[1] + hy]);
        match *self {
            Shape::Disk { center, radius } => around(center, radius, radius),
            Shape::Ellipse { center, a, b } => around(center, a, b),
            Shape::AnnulusSector { center, outer, .. } => around(center, outer, outer),
            Shape::Crescent { center, radius, .. } => around(center, radius, radius),
        }
    }
}

/// Area of the intersection of two disks with radii `r1`, `r2` at distance `d`.
fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k
}

/// Draws `n` uniform samples from `shape` by rejection and returns them with
/// the shape's closed-form area.
pub fn synth_shape(shape: Shape, n: usize, seed: u64) -> Result<(RomDataset, f64)> {
    shape.validate()?;
    if n < 50 {
        return Err(Error::InvalidInput(format!("synthetic datasets need at least 50 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = shape.bounds();
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let p = [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
        if shape.contains(p) {
            samples.push(JointVector::unwrapped(p.to_vec())?);
        }
    }
    Ok((RomDataset::from_samples(samples, Provenance::Exploration)?, shape.area()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_areas() {
        assert!((Shape::disk(50.0).area() - 7853.98).abs() < 0.01);
        assert!((Shape::ellipse(60.0, 30.0).area() - 5654.87).abs() < 0.01);
        let sector = Shape::AnnulusSector { center: [0.0, 0.0], inner: 10.0, outer: 20.0, start_deg: 0.0, end_deg: 90.0 };
        assert!((sector.area() - 0.25 * PI * 300.0).abs() < 1e-9);
    }

    #[test]
    fn crescent_area_matches_monte_carlo() {
        let shape = Shape::Crescent { center: [0.0, 0.0], radius: 50.0, cut_radius: 40.0, cut_offset: 30.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400_000;
        let hits = (0..n)
            .filter(|_| shape.contains([rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)]))
            .count();
        let mc = hits as f64 / n as f64 * 10_000.0;
        assert!((mc - shape.area()).abs() / shape.area() < 0.01, "mc {mc} vs {}", shape.area());
    }

    #[test]
    fn samples_lie_inside_and_are_reproducible() {
        let shapes = [
            Shape::disk(50.0),
            Shape::ellipse(60.0, 30.0),
            Shape::AnnulusSector { center: [10.0, -5.0], inner: 20.0, outer: 60.0, start_deg: -30.0, end_deg: 200.0 },
            Shape::Crescent { center: [0.0, 0.0], radius: 50.0, cut_radius: 40.0, cut_offset: 30.0 },
        ];
        for shape in shapes {
            let (a, _) = synth_shape(shape, 300, 9).unwrap();
            let (b, _) = synth_shape(shape, 300, 9).unwrap();
            assert_eq!(a, b);
            assert!(a.samples().iter().all(|s| shape.contains([s[0], s[1]])));
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(synth_shape(Shape::disk(-1.0), 100, 0).is_err());
        assert!(synth_shape(Shape::disk(1.0), 10, 0).is_err());
        let disjoint = Shape::Crescent { center: [0.0, 0.0], radius: 10.0, cut_radius: 5.0, cut_offset: 30.0 };
        assert!(disjoint.validate().is_err());
    }
}
