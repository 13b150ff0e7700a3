//! Edge/interior classification of support vectors.
//!
//! A support vector is on the edge of the data when some hyperplane through
//! it has all its neighbours strictly on one side, i.e. when a direction `w`
//! exists with `wᵀ(xⱼ − sv) > 0` for every neighbour. The hard-margin
//! separation of the offsets from the origin is solved through its dual, the
//! minimum-norm point of their convex hull: the hull misses the origin
//! exactly when such a `w` exists.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RomDataset;
use crate::error::{Error, Result};
use crate::kinematics::squared_distance;
use crate::ocsvm::solver::Smo;
use crate::ocsvm::{DenseGram, OcsvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Edge,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeVerdict {
    pub kind: EdgeKind,
    /// Too few neighbours to judge; reported as an edge.
    pub low_confidence: bool,
    /// Neighbours left on the wrong side of the separating hyperplane.
    pub misclassified: usize,
}

/// Parameters of a single edge test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTestConfig {
    pub max_misclassified: usize,
    pub min_neighbors: usize,
}

impl Default for EdgeTestConfig {
    fn default() -> Self {
        Self {
            max_misclassified: 0,
            min_neighbors: 5,
        }
    }
}

const MIN_NORM_SQ: f64 = 1e-20;
const GAP_TOL: f64 = 1e-13;

/// Whether some direction puts every offset strictly on its positive side.
/// Offsets are unit length. Returns the separating direction when found.
fn separating_direction(units: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = units.len();
    let dim = units[0].len();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut gram = DenseGram::from_fn(n, |i, j| dot(&units[i], &units[j]));
    let mut smo = Smo::new(&mut gram, vec![1.0 / n as f64; n], 1.0);
    let max_steps = 200 * n * n + 10_000;
    let direction = |lambda: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; dim];
        for (l, u) in lambda.iter().zip(units) {
            for k in 0..dim {
                w[k] += l * u[k];
            }
        }
        w
    };
    let certified = |w: &[f64]| units.iter().all(|u| dot(w, u) > 0.0);
    for step in 0..=max_steps {
        if step % 16 == 0 || step == max_steps {
            // Gᵢ = uᵢᵀw, so min G > 0 is a separation certificate
            let g_min = smo.grad().iter().copied().fold(f64::INFINITY, f64::min);
            if g_min > 0.0 {
                let w = direction(smo.alpha());
                if certified(&w) {
                    return Some(w);
                }
            }
            let norm_sq: f64 = smo.alpha().iter().zip(smo.grad()).map(|(a, g)| a * g).sum();
            if norm_sq <= MIN_NORM_SQ {
                return None;
            }
            if smo.gap() <= GAP_TOL {
                let w = direction(smo.alpha());
                return certified(&w).then_some(w);
            }
        }
        if !smo.step() {
            let w = direction(smo.alpha());
            return certified(&w).then_some(w);
        }
    }
    None
}

/// Classifies `sv` against its neighbours.
///
/// With `max_misclassified > 0`, neighbours are dropped greedily (the one
/// lying furthest against the mean offset direction first) until the rest
/// separate or the allowance is used up.
pub fn edge_sv_test(sv: &[f64], neighbors: &[&[f64]], cfg: &EdgeTestConfig) -> Result<EdgeVerdict> {
    if let Some(n) = neighbors.iter().find(|n| n.len() != sv.len()) {
        return Err(Error::DimensionMismatch { expected: sv.len(), found: n.len() });
    }
    let mut units: Vec<Vec<f64>> = neighbors
        .iter()
        .filter_map(|n| {
            let d: Vec<f64> = n.iter().zip(sv).map(|(a, b)| a - b).collect();
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            (len > 0.0).then(|| d.into_iter().map(|v| v / len).collect())
        })
        .collect();
    if units.len() < cfg.min_neighbors.max(1) {
        return Ok(EdgeVerdict {
            kind: EdgeKind::Edge,
            low_confidence: true,
            misclassified: 0,
        });
    }
    let mut removed = 0;
    loop {
        if units.is_empty() || separating_direction(&units).is_some() {
            return Ok(EdgeVerdict {
                kind: EdgeKind::Edge,
                low_confidence: false,
                misclassified: removed,
            });
        }
        if removed >= cfg.max_misclassified {
            return Ok(EdgeVerdict {
                kind: EdgeKind::Interior,
                low_confidence: false,
                misclassified: removed,
            });
        }
        let dim = sv.len();
        let mut mean = vec![0.0; dim];
        for u in &units {
            for k in 0..dim {
                mean[k] += u[k];
            }
        }
        let worst = units
            .iter()
            .enumerate()
            .map(|(i, u)| (i, u.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>()))
            .fold((0, f64::INFINITY), |best, (i, p)| if p < best.1 { (i, p) } else { best });
        units.swap_remove(worst.0);
        removed += 1;
    }
}

/// How many interior support vectors a model may have.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteriorLimit {
    Count(usize),
    /// `ceil(fraction · support-vector count)`.
    Fraction(f64),
}

impl InteriorLimit {
    pub fn resolve(&self, n_support: usize) -> usize {
        match *self {
            InteriorLimit::Count(c) => c,
            InteriorLimit::Fraction(f) => (f * n_support as f64).ceil() as usize,
        }
    }
}

/// Settings of the ball-neighbourhood edge-SV check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MEsvConfig {
    /// Neighbourhood radius in degrees; `None` derives it from the data as
    /// [`MEsvConfig::RADIUS_FACTOR`] × median nearest-neighbour distance.
    pub radius: Option<f64>,
    pub max_misclassified: usize,
    pub max_interior: InteriorLimit,
    pub min_neighbors: usize,
}

impl Default for MEsvConfig {
    fn default() -> Self {
        Self {
            radius: None,
            max_misclassified: 0,
            max_interior: InteriorLimit::Fraction(0.1),
            min_neighbors: 5,
        }
    }
}

impl MEsvConfig {
    pub const RADIUS_FACTOR: f64 = 4.0;

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("M-ESV radius must be positive, got {r}")));
            }
        }
        if let InteriorLimit::Fraction(f) = self.max_interior {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::InvalidInput(format!("interior fraction must be nonnegative, got {f}")));
            }
        }
        Ok(())
    }

    /// Radius to use on `data`.
    pub fn resolve_radius(&self, data: &RomDataset) -> f64 {
        self.radius
            .unwrap_or_else(|| Self::RADIUS_FACTOR * median_nearest_neighbor_distance(data))
    }

    fn edge_config(&self) -> EdgeTestConfig {
        EdgeTestConfig {
            max_misclassified: self.max_misclassified,
            min_neighbors: self.min_neighbors,
        }
    }
}

/// Median over samples of the distance to the closest distinct sample.
pub fn median_nearest_neighbor_distance(data: &RomDataset) -> f64 {
    let pts = data.samples();
    let mut nn: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            pts.iter()
                .map(|q| squared_distance(p.as_slice(), q.as_slice()))
                .filter(|&d| d > 0.0)
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .map(f64::sqrt)
        .collect();
    if nn.is_empty() {
        return 0.0;
    }
    nn.sort_by(f64::total_cmp);
    let k = nn.len();
    if k % 2 == 1 {
        nn[k / 2]
    } else {
        0.5 * (nn[k / 2 - 1] + nn[k / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEsvReport {
    pub pass: bool,
    pub radius: f64,
    pub support_vectors: usize,
    pub interior: usize,
    pub low_confidence: usize,
    pub max_interior: usize,
}

/// Counts interior support vectors using ball neighbourhoods of radius `r`;
/// fails when the count exceeds the configured limit.
pub fn m_esv_check(model: &OcsvmModel, data: &RomDataset, cfg: &MEsvConfig) -> Result<MEsvReport> {
    cfg.validate()?;
    if model.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: data.dim() });
    }
    let radius = cfg.resolve_radius(data);
    m_esv_check_with_radius(model, data, cfg, radius)
}

pub(crate) fn m_esv_check_with_radius(
    model: &OcsvmModel,
    data: &RomDataset,
    cfg: &MEsvConfig,
    radius: f64,
) -> Result<MEsvReport> {
    let edge_cfg = cfg.edge_config();
    let r2 = radius * radius;
    let svs: Vec<&[f64]> = model.support_vectors().collect();
    let verdicts = svs
        .par_iter()
        .map(|sv| {
            let neighbors: Vec<&[f64]> = data
                .samples()
                .iter()
                .map(|p| p.as_slice())
                .filter(|p| {
                    let d = squared_distance(p, sv);
                    d > 0.0 && d <= r2
                })
                .collect();
            edge_sv_test(sv, &neighbors, &edge_cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let interior = verdicts.iter().filter(|v| v.kind == EdgeKind::Interior).count();
    let low_confidence = verdicts.iter().filter(|v| v.low_confidence).count();
    let max_interior = cfg.max_interior.resolve(svs.len());
    Ok(MEsvReport {
        pass: interior <= max_interior,
        radius,
        support_vectors: svs.len(),
        interior,
        low_confidence,
        max_interior,
    })
}
