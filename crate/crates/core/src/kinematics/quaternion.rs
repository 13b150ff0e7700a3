use serde::{Deserialize, Serialize};

use super::rotation::RotationMatrix;
use crate::error::{Error, Result};

/// Norm deviation beyond which a quaternion is rejected as non-unit.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Orientation quaternion in `(w, x, y, z)` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Rotation of `angle_deg` degrees about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: [f64; 3], angle_deg: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let half = angle_deg.to_radians() / 2.0;
        let s = half.sin() / n;
        Self::new(half.cos(), axis[0] * s, axis[1] * s, axis[2] * s)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(&self, rhs: &Quaternion) -> Self {
        Self::new(
            self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        )
    }

    /// Rejects quaternions whose norm is not within [`UNIT_TOLERANCE`] of 1.
    pub fn ensure_unit(&self) -> Result<()> {
        let norm = self.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NonUnitQuaternion {
                norm,
                tolerance: UNIT_TOLERANCE,
            });
        }
        Ok(())
    }

    /// Spherical linear interpolation along the shorter arc.
    pub fn slerp(&self, other: &Quaternion, t: f64) -> Self {
        let mut end = *other;
        let mut cos = self.dot(other);
        if cos < 0.0 {
            end = end.negated();
            cos = -cos;
        }
        if cos > 1.0 - 1e-12 {
            let lerp = Self::new(
                self.w + t * (end.w - self.w),
                self.x + t * (end.x - self.x),
                self.y + t * (end.y - self.y),
                self.z + t * (end.z - self.z),
            );
            return lerp.normalized();
        }
        let theta = cos.acos();
        let a = ((1.0 - t) * theta).sin() / theta.sin();
        let b = (t * theta).sin() / theta.sin();
        Self::new(
            a * self.w + b * end.w,
            a * self.x + b * end.x,
            a * self.y + b * end.y,
            a * self.z + b * end.z,
        )
    }

    /// Converts a unit quaternion to its rotation matrix.
    pub fn to_rotation_matrix(&self) -> Result<RotationMatrix> {
        self.ensure_unit()?;
        let q = self.normalized();
        let (w, x, y, z) = (q.w, q.x, q.y, q.z);
        Ok(RotationMatrix::from_rows_unchecked([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]))
    }
}

/// Picks between `q` and `-q` frame by frame so that consecutive
/// quaternions of one bone never point into opposite hemispheres.
///
/// The first element is kept as is; every later element is negated when its
/// dot product with the (already aligned) predecessor is negative.
pub fn hemisphere_align(frames: &[Quaternion]) -> Result<Vec<Quaternion>> {
    let mut out = Vec::with_capacity(frames.len());
    for q in frames {
        q.ensure_unit()?;
        let aligned = match out.last() {
            Some(prev) if q.dot(prev) < 0.0 => q.negated(),
            _ => *q,
        };
        out.push(aligned);
    }
    Ok(out)
}
