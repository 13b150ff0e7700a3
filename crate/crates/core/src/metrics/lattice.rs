use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocsvm::OcsvmModel;

/// Regular grid of cells over an axis-aligned box; `Γ` is sampled at cell
/// centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points_per_dim: usize,
}

impl Lattice {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points_per_dim: usize) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("lattice bounds must have equal nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidInput("lattice box must have positive extent in every dimension".into()));
        }
        if points_per_dim < 2 {
            return Err(Error::InvalidInput("lattice needs at least 2 points per dimension".into()));
        }
        Ok(Self { lo, hi, points_per_dim })
    }

    /// Box `[lo − pad, hi + pad]`.
    pub fn padded(lo: &[f64], hi: &[f64], pad: f64, points_per_dim: usize) -> Result<Self> {
        Self::new(
            lo.iter().map(|v| v - pad).collect(),
            hi.iter().map(|v| v + pad).collect(),
            points_per_dim,
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / self.points_per_dim as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Multi-index of a flat index; the last dimension varies fastest.
    pub fn index(&self, mut flat: usize) -> Vec<usize> {
        let n = self.points_per_dim;
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn center_into(&self, flat: usize, out: &mut [f64]) {
        let n = self.points_per_dim;
        let mut rest = flat;
        for k in (0..self.dim()).rev() {
            let i = rest % n;
            rest /= n;
            out[k] = self.lo[k] + (i as f64 + 0.5) * self.spacing(k);
        }
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.center_into(flat, &mut p);
        p
    }

    /// `Γ` at every cell centre, in flat order.
    pub fn evaluate(&self, model: &OcsvmModel) -> Result<Vec<f64>> {
        if model.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), found: self.dim() });
        }
        let rho = model.rho();
        Ok((0..self.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; self.dim()],
                |buf, flat| {
                    self.center_into(flat, buf);
                    model.expansion(buf) - rho
                },
            )
            .collect())
    }

    /// `true` where `Γ > 0`.
    pub fn inside_labels(&self, model: &OcsvmModel) -> Result<Vec<bool>> {
        Ok(self.evaluate(model)?.into_iter().map(|g| g > 0.0).collect())
    }

    /// Whether a flat index lies on the outer layer of the lattice.
    pub fn on_border(&self, flat: usize) -> bool {
        self.index(flat).iter().any(|&i| i == 0 || i + 1 == self.points_per_dim)
    }
}

/// Fraction of lattice cells whose inside/outside labels differ.
pub fn label_disagreement(a: &[bool], b: &[bool]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}
