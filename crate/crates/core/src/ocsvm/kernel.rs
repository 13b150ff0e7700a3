use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{squared_distance, JointVector};

/// RBF kernel `k(a, b) = exp(-‖a − b‖² / (2σ²))` with `σ` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub sigma: f64,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        let k = Self { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidInput(format!("kernel scale sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// `1 / (2σ²)`.
    #[inline]
    pub fn gamma(&self) -> f64 {
        0.5 / (self.sigma * self.sigma)
    }

    #[inline]
    pub(crate) fn eval_slices(&self, a: &[f64], b: &[f64]) -> f64 {
        (-squared_distance(a, b) * self.gamma()).exp()
    }
}

pub fn rbf_kernel(a: &JointVector, b: &JointVector, kernel: &KernelParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    kernel.validate()?;
    Ok(kernel.eval_slices(a.as_slice(), b.as_slice()))
}

/// Symmetric matrix accessed one row at a time by the SMO solver.
pub(crate) trait Gram {
    fn size(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    fn row(&mut self, i: usize) -> &[f64];
}

/// Kernel rows computed on demand and kept in a least-recently-used cache.
pub(crate) struct KernelCache<'a> {
    points: &'a [f64],
    dim: usize,
    kernel: KernelParams,
    rows: Vec<Option<Box<[f64]>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    /// `points` is row-major with `dim` columns; `cache_bytes` bounds the
    /// memory spent on cached rows (at least two rows are always kept).
    pub fn new(points: &'a [f64], dim: usize, kernel: KernelParams, cache_bytes: usize) -> Self {
        let m = points.len() / dim;
        let row_bytes = (m * std::mem::size_of::<f64>()).max(1);
        let capacity = (cache_bytes / row_bytes).clamp(2, m.max(2));
        Self {
            points,
            dim,
            kernel,
            rows: (0..m).map(|_| None).collect(),
            last_used: vec![0; m],
            clock: 0,
            cached: 0,
            capacity,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn compute_row(&self, i: usize) -> Box<[f64]> {
        let p = self.point(i);
        (0..self.rows.len())
            .map(|j| self.kernel.eval_slices(p, self.point(j)))
            .collect()
    }

    fn evict_lru(&mut self) {
        let victim = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_some())
            .min_by_key(|(i, _)| self.last_used[*i])
            .map(|(i, _)| i);
        if let Some(v) = victim {
            self.rows[v] = None;
            self.cached -= 1;
        }
    }
}

impl Gram for KernelCache<'_> {
    fn size(&self) -> usize {
        self.rows.len()
    }

    fn diag(&self, _i: usize) -> f64 {
        1.0
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if self.rows[i].is_none() {
            if self.cached >= self.capacity {
                self.evict_lru();
            }
            self.rows[i] = Some(self.compute_row(i));
            self.cached += 1;
        }
        self.rows[i].as_deref().expect("row was just filled")
    }
}

/// Fully materialized Gram matrix, for small problems.
pub(crate) struct DenseGram {
    n: usize,
    values: Vec<f64>,
}

impl DenseGram {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }
}

impl Gram for DenseGram {
    fn size(&self) -> usize {
        self.n
    }

    fn diag(&self, i: usize) -> f64 {
        self.values[i * self.n + i]
    }

    fn row(&mut self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jv(v: &[f64]) -> JointVector {
        JointVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn self_similarity_is_one() {
        let k = KernelParams::new(7.0).unwrap();
        assert_eq!(rbf_kernel(&jv(&[3.0, -4.0]), &jv(&[3.0, -4.0]), &k).unwrap(), 1.0);
    }

    #[test]
    fn distance_sigma_root_two() {
        let sigma: f64 = 40.0;
        let k = KernelParams::new(sigma).unwrap();
        let v = rbf_kernel(&jv(&[0.0, 0.0]), &jv(&[sigma * 2f64.sqrt(), 0.0]), &k).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        let k = KernelParams { sigma: 1.0 };
        assert!(rbf_kernel(&jv(&[0.0]), &jv(&[0.0, 1.0]), &k).is_err());
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn cache_evicts_but_stays_correct() {
        let pts: Vec<f64> = (0..40).map(|i| i as f64 * 0.7).collect();
        let k = KernelParams::new(3.0).unwrap();
        let mut cache = KernelCache::new(&pts, 1, k, 3 * 40 * 8);
        assert_eq!(cache.capacity, 3);
        for round in 0..3 {
            for i in (0..40).rev() {
                let row = cache.row(i).to_vec();
                for (j, v) in row.iter().enumerate() {
                    assert_eq!(*v, k.eval_slices(&pts[i..i + 1], &pts[j..j + 1]), "round {round}");
                }
                assert!(cache.cached <= 3);
            }
        }
    }
}
