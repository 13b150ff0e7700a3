use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use crate::error::{Error, Result};
use crate::kinematics::{squared_distance, JointVector};

/// Current model file version.
pub const MODEL_VERSION: u32 = 1;

/// Position of a configuration relative to the learned boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Inside,
    Boundary,
    Outside,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Inside => "inside",
            Region::Boundary => "boundary",
            Region::Outside => "outside",
        })
    }
}

/// Value of the boundary function: positive inside, zero on the boundary,
/// negative outside.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GammaValue(pub f64);

impl GammaValue {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Classifies with a symmetric band `[-band, band]` counted as boundary.
    pub fn region(self, band: f64) -> Region {
        if self.0 > band {
            Region::Inside
        } else if self.0 < -band {
            Region::Outside
        } else {
            Region::Boundary
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    /// Training-set size.
    pub m: usize,
    /// Support vectors divided by `m`.
    pub sv_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_kkt_violation: Option<f64>,
}

/// Trained one-class SVM: `Γ(q) = Σ αᵢ k(q, svᵢ) − ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    dim: usize,
    sv_flat: Vec<f64>,
    alphas: Vec<f64>,
    rho: f64,
    kernel: KernelParams,
    nu: f64,
    training: TrainingInfo,
    dofs: Option<Vec<usize>>,
}

/// Tolerance on `Σ α = 1`.
pub const ALPHA_SUM_TOLERANCE: f64 = 1e-8;

impl OcsvmModel {
    /// Assembles a model, checking the normalized-dual invariants:
    /// `0 < αᵢ ≤ 1/(νm)` and `Σ α = 1`.
    pub fn new(
        support_vectors: Vec<JointVector>,
        alphas: Vec<f64>,
        rho: f64,
        kernel: KernelParams,
        nu: f64,
        m: usize,
    ) -> Result<Self> {
        kernel.validate()?;
        validate_nu(nu)?;
        if support_vectors.is_empty() {
            return Err(Error::InvalidInput("a model needs at least one support vector".into()));
        }
        if support_vectors.len() != alphas.len() {
            return Err(Error::InvalidInput(format!(
                "{} support vectors but {} coefficients",
                support_vectors.len(),
                alphas.len()
            )));
        }
        if m < support_vectors.len() {
            return Err(Error::InvalidInput("training size is smaller than the support-vector count".into()));
        }
        if !rho.is_finite() {
            return Err(Error::InvalidInput("rho must be finite".into()));
        }
        let dim = support_vectors[0].dim();
        if let Some(bad) = support_vectors.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        let upper = 1.0 / (nu * m as f64);
        if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= upper * (1.0 + 1e-9))) {
            return Err(Error::InvalidInput(format!("coefficient {a} outside (0, {upper}]")));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > ALPHA_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("coefficients sum to {sum}, expected 1")));
        }
        let n_sv = support_vectors.len();
        Ok(Self {
            dim,
            sv_flat: support_vectors.into_iter().flat_map(JointVector::into_inner).collect(),
            alphas,
            rho,
            kernel,
            nu,
            training: TrainingInfo {
                m,
                sv_fraction: n_sv as f64 / m as f64,
                iterations: None,
                max_kkt_violation: None,
            },
            dofs: None,
        })
    }

    pub(crate) fn with_training_stats(mut self, iterations: u64, max_kkt_violation: f64) -> Self {
        self.training.iterations = Some(iterations);
        self.training.max_kkt_violation = Some(max_kkt_violation);
        self
    }

    /// Records which source DoFs the model's inputs correspond to.
    pub fn with_dofs(mut self, dofs: Vec<usize>) -> Result<Self> {
        if dofs.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: dofs.len() });
        }
        self.dofs = Some(dofs);
        Ok(self)
    }

    /// Same model with a different offset.
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn sigma(&self) -> f64 {
        self.kernel.sigma
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn training(&self) -> &TrainingInfo {
        &self.training
    }

    pub fn dofs(&self) -> Option<&[usize]> {
        self.dofs.as_deref()
    }

    pub fn n_support(&self) -> usize {
        self.alphas.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.sv_flat[i * self.dim..(i + 1) * self.dim]
    }

    pub fn support_vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.sv_flat.chunks_exact(self.dim)
    }

    /// Axis-aligned bounding box of the support vectors.
    pub fn sv_bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for sv in self.support_vectors() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(sv[k]);
                hi[k] = hi[k].max(sv[k]);
            }
        }
        (lo, hi)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found });
        }
        Ok(())
    }

    /// `Σ αᵢ k(q, svᵢ)`, the kernel expansion without the offset.
    pub(crate) fn expansion(&self, q: &[f64]) -> f64 {
        let g = self.kernel.gamma();
        self.support_vectors()
            .zip(&self.alphas)
            .map(|(sv, a)| a * (-squared_distance(q, sv) * g).exp())
            .sum()
    }

    pub fn gamma_at(&self, q: &[f64]) -> Result<GammaValue> {
        self.check_dim(q.len())?;
        Ok(GammaValue(self.expansion(q) - self.rho))
    }

    pub fn gamma(&self, q: &JointVector) -> Result<GammaValue> {
        self.gamma_at(q.as_slice())
    }

    /// Evaluates `Γ` at many points in parallel; output order follows input.
    pub fn gamma_batch(&self, points: &[JointVector]) -> Result<Vec<GammaValue>> {
        if let Some(p) = points.iter().find(|p| p.dim() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, found: p.dim() });
        }
        Ok(points
            .par_iter()
            .map(|p| GammaValue(self.expansion(p.as_slice()) - self.rho))
            .collect())
    }

    pub fn classify(&self, q: &JointVector, band: f64) -> Result<Region> {
        Ok(self.gamma(q)?.region(band))
    }

    /// `∇Γ(q) = Σ αᵢ k(q, svᵢ) (svᵢ − q) / σ²`, per degree.
    pub fn gradient_at(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q.len())?;
        let g = self.kernel.gamma();
        let inv_s2 = 1.0 / (self.kernel.sigma * self.kernel.sigma);
        let mut grad = vec![0.0; self.dim];
        for (sv, a) in self.support_vectors().zip(&self.alphas) {
            let w = a * (-squared_distance(q, sv) * g).exp() * inv_s2;
            for k in 0..self.dim {
                grad[k] += w * (sv[k] - q[k]);
            }
        }
        Ok(grad)
    }

    pub fn gradient(&self, q: &JointVector) -> Result<Vec<f64>> {
        self.gradient_at(q.as_slice())
    }

    /// Serializes to the versioned JSON model schema.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        file.try_into()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(self.to_json()?.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::schema("payload", e.to_string()))?;
        Self::from_json(text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::from(e).in_file(path))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }
}

pub(crate) fn validate_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidInput(format!("nu must lie in (0, 1], got {nu}")));
    }
    Ok(())
}

/// On-disk model layout.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    dimension: usize,
    sigma: f64,
    nu: f64,
    rho: f64,
    support_vectors: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    training: TrainingInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dofs: Option<Vec<usize>>,
}

impl From<&OcsvmModel> for ModelFile {
    fn from(m: &OcsvmModel) -> Self {
        ModelFile {
            version: MODEL_VERSION,
            dimension: m.dim,
            sigma: m.kernel.sigma,
            nu: m.nu,
            rho: m.rho,
            support_vectors: m.support_vectors().map(<[f64]>::to_vec).collect(),
            alphas: m.alphas.clone(),
            training: m.training.clone(),
            dofs: m.dofs.clone(),
        }
    }
}

impl TryFrom<ModelFile> for OcsvmModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.version != MODEL_VERSION {
            return Err(Error::schema(
                "version",
                format!("unsupported model version {} (expected {MODEL_VERSION})", f.version),
            ));
        }
        if let Some(sv) = f.support_vectors.iter().find(|sv| sv.len() != f.dimension) {
            return Err(Error::schema(
                "support_vectors",
                format!("vector of length {} in a {}-dimensional model", sv.len(), f.dimension),
            ));
        }
        let svs = f
            .support_vectors
            .into_iter()
            .map(JointVector::unwrapped)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::schema("support_vectors", e.to_string()))?;
        let kernel = KernelParams { sigma: f.sigma };
        let mut model = OcsvmModel::new(svs, f.alphas, f.rho, kernel, f.nu, f.training.m)
            .map_err(|e| Error::schema("model", e.to_string()))?;
        model.training = f.training;
        if let Some(d) = f.dofs {
            model = model.with_dofs(d).map_err(|e| Error::schema("dofs", e.to_string()))?;
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(center: &[f64], sigma: f64) -> OcsvmModel {
        OcsvmModel::new(
            vec![JointVector::unwrapped(center.to_vec()).unwrap()],
            vec![1.0],
            0.5,
            KernelParams::new(sigma).unwrap(),
            1.0,
            1,
        )
        .unwrap()
    }

    #[test]
    fn gradient_vanishes_at_lone_sv() {
        let m = single(&[10.0, -4.0], 12.0);
        assert_eq!(m.gradient_at(&[10.0, -4.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn one_term_derivative() {
        let sigma = 25.0;
        let m = single(&[0.0, 0.0], sigma);
        let g = m.gradient_at(&[sigma, 0.0]).unwrap();
        let expected = -(-0.5f64).exp() / sigma;
        assert!((g[0] - expected).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn far_field_tends_to_minus_rho() {
        let m = single(&[0.0, 0.0], 10.0);
        let v = m.gamma_at(&[1e4, 1e4]).unwrap().value();
        assert_eq!(v, -0.5);
    }

    #[test]
    fn regions() {
        assert_eq!(GammaValue(0.1).region(0.0), Region::Inside);
        assert_eq!(GammaValue(-0.1).region(0.0), Region::Outside);
        assert_eq!(GammaValue(0.0).region(0.0), Region::Boundary);
        assert_eq!(GammaValue(0.05).region(0.1), Region::Boundary);
    }

    #[test]
    fn dimension_checks() {
        let m = single(&[0.0, 0.0], 10.0);
        assert!(matches!(m.gamma_at(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(m.gradient_at(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn invariants_enforced() {
        let k = KernelParams::new(1.0).unwrap();
        let sv = || vec![JointVector::unwrapped(vec![0.0]).unwrap(), JointVector::unwrapped(vec![1.0]).unwrap()];
        assert!(OcsvmModel::new(sv(), vec![0.5, 0.4], 0.1, k, 1.0, 2).is_err());
        assert!(OcsvmModel::new(sv(), vec![0.9, 0.1], 0.1, k, 1.0, 2).is_err());
        assert!(OcsvmModel::new(sv(), vec![0.5, 0.5], 0.1, k, 0.0, 2).is_err());
        assert!(OcsvmModel::new(vec![], vec![], 0.1, k, 0.5, 2).is_err());
        assert!(OcsvmModel::new(sv(), vec![0.5, 0.5], 0.1, k, 1.0, 2).is_ok());
    }

    #[test]
    fn schema_errors() {
        let m = single(&[1.0, 2.0], 3.0);
        let text = m.to_json().unwrap();
        let bumped = text.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(OcsvmModel::from_json(&bumped), Err(Error::Schema { .. })));
        assert!(matches!(OcsvmModel::from_json("{\"version\": 1}"), Err(Error::Schema { .. })));
        assert!(matches!(OcsvmModel::from_bytes(b"\xff\xfe"), Err(Error::Schema { .. })));
        let wrong_dim = text.replace("\"dimension\": 2", "\"dimension\": 3");
        assert!(matches!(OcsvmModel::from_json(&wrong_dim), Err(Error::Schema { .. })));
    }
}
