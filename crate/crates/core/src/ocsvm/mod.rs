//! ν one-class SVM with an RBF kernel.
//!
//! Training solves the normalized dual
//!
//! ```text
//! min ½ αᵀKα   s.t.  0 ≤ αᵢ ≤ 1/(νm),  Σ αᵢ = 1
//! ```
//!
//! with SMO. The boundary function is `Γ(q) = Σ αᵢ k(q, qⁱ) − ρ`; its zero
//! level set is the learned range-of-motion boundary.

mod kernel;
mod model;
pub(crate) mod solver;

use serde::{Deserialize, Serialize};

use crate::dataset::RomDataset;
use crate::error::{Error, Result};
use crate::kinematics::JointVector;

pub(crate) use kernel::DenseGram;
pub use kernel::{rbf_kernel, KernelParams};
pub use model::{GammaValue, OcsvmModel, Region, TrainingInfo, ALPHA_SUM_TOLERANCE, MODEL_VERSION};

use kernel::KernelCache;

/// Solver settings for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub nu: f64,
    pub kernel: KernelParams,
    /// Stopping tolerance on the KKT gap.
    pub tolerance: f64,
    /// Cap on pair updates.
    pub max_iterations: u64,
    /// Memory for cached kernel rows, in bytes.
    pub cache_bytes: usize,
}

impl TrainConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-6;
    pub const DEFAULT_MAX_ITERATIONS: u64 = 10_000_000;
    pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

    pub fn new(nu: f64, sigma: f64) -> Self {
        Self {
            nu,
            kernel: KernelParams { sigma },
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            cache_bytes: Self::DEFAULT_CACHE_BYTES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        model::validate_nu(self.nu)?;
        self.kernel.validate()?;
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Upper bound `1/(νm)` on each coefficient.
    pub fn upper_bound(&self, m: usize) -> f64 {
        1.0 / (self.nu * m as f64)
    }
}

/// Full result of a training run, including the zero coefficients.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: OcsvmModel,
    /// One coefficient per training sample.
    pub alphas: Vec<f64>,
    pub upper_bound: f64,
    pub iterations: u64,
    pub max_kkt_violation: f64,
}

pub fn train(data: &RomDataset, cfg: &TrainConfig) -> Result<OcsvmModel> {
    train_detailed(data, cfg).map(|o| o.model)
}

pub fn train_detailed(data: &RomDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let m = data.len();
    if m < 2 {
        return Err(Error::InvalidInput(format!("training needs at least 2 samples, got {m}")));
    }
    let first = &data.samples()[0];
    if data.samples().iter().all(|s| s == first) {
        return Err(Error::DegenerateData("all training samples are identical".into()));
    }
    let dim = data.dim();
    let flat = data.to_flat();
    let upper = cfg.upper_bound(m);
    let mut gram = KernelCache::new(&flat, dim, cfg.kernel, cfg.cache_bytes);
    let out = solver::solve(&mut gram, upper, cfg.tolerance, cfg.max_iterations);

    let rho = recover_rho(&out.alpha, &out.grad, upper);
    let violation = kkt_violation(&out.alpha, &out.grad, rho, upper);
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: out.iterations,
            max_violation: violation,
        });
    }

    let (svs, alphas): (Vec<JointVector>, Vec<f64>) = data
        .samples()
        .iter()
        .zip(&out.alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|(s, &a)| (s.clone(), a))
        .unzip();
    let model = OcsvmModel::new(svs, alphas, rho, cfg.kernel, cfg.nu, m)?
        .with_training_stats(out.iterations, violation)
        .with_dofs(data.dofs.clone())?;
    Ok(TrainOutcome {
        model,
        alphas: out.alpha,
        upper_bound: upper,
        iterations: out.iterations,
        max_kkt_violation: violation,
    })
}

/// Mean expansion value over free coefficients; midpoint of the feasible
/// interval when every coefficient sits on a bound.
fn recover_rho(alpha: &[f64], grad: &[f64], upper: f64) -> f64 {
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&a, &g) in alpha.iter().zip(grad) {
        if a >= upper {
            lo = lo.max(g);
        } else if a <= 0.0 {
            hi = hi.min(g);
        } else {
            sum += g;
            free += 1;
        }
    }
    if free > 0 {
        sum / free as f64
    } else if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else {
        hi
    }
}

/// Largest KKT residual given per-sample expansion values `grad`:
/// `Γ ≤ 0` at the bound, `Γ = 0` when free, `Γ ≥ 0` at zero.
pub(crate) fn kkt_violation(alpha: &[f64], grad: &[f64], rho: f64, upper: f64) -> f64 {
    alpha
        .iter()
        .zip(grad)
        .map(|(&a, &g)| {
            let gamma = g - rho;
            if a >= upper {
                gamma.max(0.0)
            } else if a <= 0.0 {
                (-gamma).max(0.0)
            } else {
                gamma.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Recomputes the KKT residual of a finished run directly from the model,
/// independent of the solver's incremental gradient.
pub fn certify_kkt(outcome: &TrainOutcome, data: &RomDataset) -> Result<f64> {
    let rho = outcome.model.rho();
    let grad = data
        .samples()
        .iter()
        .map(|s| outcome.model.gamma(s).map(|g| g.value() + rho))
        .collect::<Result<Vec<_>>>()?;
    Ok(kkt_violation(&outcome.alphas, &grad, rho, outcome.upper_bound))
}
