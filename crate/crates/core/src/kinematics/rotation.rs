use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum per-entry deviation from orthonormality accepted as a rotation.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// `|cos x|` below this value counts as gimbal lock in ZXY extraction (sin 1°).
pub fn gimbal_threshold() -> f64 {
    1f64.to_radians().sin()
}

/// Proper 3×3 rotation matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationMatrix([[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Builds a matrix, rejecting anything that is not a proper rotation.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        let m = RotationMatrix(rows);
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn from_rows_unchecked(rows: [[f64; 3]; 3]) -> Self {
        RotationMatrix(rows)
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn about_x(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn about_y(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        RotationMatrix([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn about_z(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        RotationMatrix([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// `Rz(z) · Rx(x) · Ry(y)`, angles in degrees.
    pub fn compose_zxy(z: f64, x: f64, y: f64) -> Self {
        Self::about_z(z)
            .mul(&Self::about_x(x))
            .mul(&Self::about_y(y))
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        RotationMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul(&self, rhs: &RotationMatrix) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        RotationMatrix(out)
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|RᵀR − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose().mul(self);
        let mut worst: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((p.0[r][c] - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &RotationMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).abs());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("rotation matrix has non-finite entries".into()));
        }
        let ortho = self.orthonormality_error();
        let det = self.determinant();
        if ortho > ORTHONORMAL_TOLERANCE || (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "not a proper rotation (orthonormality error {ortho:e}, det {det})"
            )));
        }
        Ok(())
    }
}

/// Orientation of the distal frame expressed in the proximal frame,
/// `R_proxᵀ · R_dist`.
pub fn relative_rotation(proximal: &RotationMatrix, distal: &RotationMatrix) -> Result<RotationMatrix> {
    proximal.validate()?;
    distal.validate()?;
    Ok(proximal.transpose().mul(distal))
}

/// ZXY Euler angles in degrees with `x` on the `[-90, 90]` principal branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerZxy {
    pub z: f64,
    pub x: f64,
    pub y: f64,
    /// Set when `|cos x|` fell below the gimbal threshold and `y` was
    /// pinned to the previous value rather than solved for.
    pub gimbal: bool,
}

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Extracts ZXY Euler angles from a proper rotation.
pub fn rotmat_to_euler_zxy(r: &RotationMatrix) -> Result<EulerZxy> {
    rotmat_to_euler_zxy_with_hint(r, None)
}

/// As [`rotmat_to_euler_zxy`], using `previous_y` to resolve gimbal lock.
///
/// Near `x = ±90°` only `z ± y` is observable. The `y` angle is then fixed
/// to `previous_y` (or 0 without history) and `z` is solved from the
/// remaining first-column entries.
pub fn rotmat_to_euler_zxy_with_hint(r: &RotationMatrix, previous_y: Option<f64>) -> Result<EulerZxy> {
    r.validate()?;
    let m = r.rows();
    let sx = m[2][1].clamp(-1.0, 1.0);
    let x = sx.asin();
    let cx = x.cos();
    if cx.abs() >= gimbal_threshold() {
        let z = (-m[0][1]).atan2(m[1][1]);
        let y = (-m[2][0]).atan2(m[2][2]);
        return Ok(EulerZxy {
            z: wrap_degrees(z.to_degrees()),
            x: x.to_degrees(),
            y: wrap_degrees(y.to_degrees()),
            gimbal: false,
        });
    }
    // With cos x = 0: R00 = cos(z + s·y), R10 = sin(z + s·y), s = sign(sin x).
    let y = previous_y.unwrap_or(0.0);
    let combined = m[1][0].atan2(m[0][0]).to_degrees();
    let z = if sx >= 0.0 { combined - y } else { combined + y };
    Ok(EulerZxy {
        z: wrap_degrees(z),
        x: x.to_degrees(),
        y: wrap_degrees(y),
        gimbal: true,
    })
}
