use std::ops::Index;

use serde::{Deserialize, Serialize};

use super::rotation::wrap_degrees;
use crate::error::{Error, Result};

/// Number of arm degrees of freedom extracted from a skeleton frame.
pub const ARM_DOF: usize = 7;

/// Column names of the seven arm DoFs, in `q1..q7` order.
pub const ARM_DOF_NAMES: [&str; ARM_DOF] = [
    "shoulder_abd_add",
    "shoulder_flex_ext",
    "shoulder_rotation",
    "elbow_flex_ext",
    "elbow_sup_pron",
    "wrist_flex_ext",
    "wrist_deviation",
];

/// A joint configuration in degrees.
///
/// Components are finite and wrapped to `(-180, 180]` at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(Vec<f64>);

impl JointVector {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidInput("joint vector must have at least one component".into()));
        }
        if let Some(i) = angles.iter().position(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "joint angle {i} is not finite ({})",
                angles[i]
            )));
        }
        Ok(Self(angles.into_iter().map(wrap_degrees).collect()))
    }

    /// Builds a vector without wrapping, for points that live in the same
    /// coordinate chart as the training data (lattice nodes, offsets past a
    /// joint limit).
    pub fn unwrapped(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("joint vector must be nonempty and finite".into()));
        }
        Ok(Self(angles))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Keeps only the listed components, in the listed order.
    pub fn select(&self, dofs: &[usize]) -> Result<Self> {
        dofs.iter()
            .map(|&d| {
                self.0.get(d).copied().ok_or(Error::DimensionMismatch {
                    expected: d + 1,
                    found: self.0.len(),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn distance_squared(&self, other: &JointVector) -> f64 {
        squared_distance(&self.0, &other.0)
    }
}

impl Index<usize> for JointVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for JointVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_on_construction() {
        let q = JointVector::new(vec![190.0, -180.0, 725.0]).unwrap();
        assert_eq!(q.as_slice(), &[-170.0, 180.0, 5.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(JointVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(JointVector::new(vec![f64::INFINITY]).is_err());
        assert!(JointVector::new(vec![]).is_err());
    }

    #[test]
    fn select_reorders() {
        let q = JointVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(q.select(&[3, 0]).unwrap().as_slice(), &[4.0, 1.0]);
        assert!(q.select(&[4]).is_err());
    }
}
