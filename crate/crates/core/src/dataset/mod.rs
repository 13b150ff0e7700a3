//! RoM datasets: ingestion, assembly, subsampling and synthetic shapes.

mod io;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{squared_distance, JointVector, Side};

pub use io::{
    load_angles, load_frames, load_manifest, read_angles, read_frames, save_angles, save_frames, write_angles,
    write_extracted_angles, write_frames, DatasetManifest, ManifestSource, MANIFEST_VERSION,
};
pub use synth::{synth_shape, Shape};

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Single-joint clinical range assessment.
    Clinical,
    /// Free exploration of the reachable space.
    Exploration,
    /// Held-out captures used to validate a fitted boundary.
    Test,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Clinical => "clinical",
            Provenance::Exploration => "exploration",
            Provenance::Test => "test",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clinical" => Ok(Provenance::Clinical),
            "exploration" => Ok(Provenance::Exploration),
            "test" => Ok(Provenance::Test),
            other => Err(Error::InvalidInput(format!("unknown provenance `{other}`"))),
        }
    }
}

/// Ordered joint-angle samples of uniform dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RomDataset {
    dim: usize,
    samples: Vec<JointVector>,
    provenance: Vec<Provenance>,
    timestamps: Vec<f64>,
    /// Source column indices the components correspond to.
    pub dofs: Vec<usize>,
    /// Column names of the components.
    pub names: Vec<String>,
    pub subject: Option<String>,
    pub arm: Option<Side>,
}

impl RomDataset {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            samples: Vec::new(),
            provenance: Vec::new(),
            timestamps: Vec::new(),
            dofs: (0..dim).collect(),
            names: (0..dim).map(|k| format!("q{}", k + 1)).collect(),
            subject: None,
            arm: None,
        }
    }

    /// Dataset whose samples all share one provenance; timestamps are the
    /// sample indices.
    pub fn from_samples(samples: Vec<JointVector>, provenance: Provenance) -> Result<Self> {
        let dim = samples
            .first()
            .map(JointVector::dim)
            .ok_or_else(|| Error::InvalidInput("dataset needs at least one sample to infer its dimension".into()))?;
        let mut ds = Self::empty(dim);
        for (t, s) in samples.into_iter().enumerate() {
            ds.push(s, provenance, t as f64)?;
        }
        Ok(ds)
    }

    /// Convenience constructor from raw rows.
    pub fn from_rows(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let samples = rows
            .iter()
            .map(|r| JointVector::new(r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(samples, provenance)
    }

    pub fn push(&mut self, sample: JointVector, provenance: Provenance, timestamp: f64) -> Result<()> {
        if sample.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: sample.dim(),
            });
        }
        self.samples.push(sample);
        self.provenance.push(provenance);
        self.timestamps.push(timestamp);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[JointVector] {
        &self.samples
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.provenance.iter().filter(|&&p| p == provenance).count()
    }

    /// Keeps the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
            timestamps: indices.iter().map(|&i| self.timestamps[i]).collect(),
            dofs: self.dofs.clone(),
            names: self.names.clone(),
            subject: self.subject.clone(),
            arm: self.arm,
        }
    }

    /// Projects every sample onto the listed components.
    pub fn select_dofs(&self, dofs: &[usize]) -> Result<Self> {
        if dofs.is_empty() {
            return Err(Error::InvalidInput("at least one DoF must be selected".into()));
        }
        if let Some(&bad) = dofs.iter().find(|&&d| d >= self.dim) {
            return Err(Error::InvalidInput(format!(
                "DoF index {bad} out of range for {}-dimensional data",
                self.dim
            )));
        }
        Ok(Self {
            dim: dofs.len(),
            samples: self
                .samples
                .iter()
                .map(|s| s.select(dofs))
                .collect::<Result<Vec<_>>>()?,
            provenance: self.provenance.clone(),
            timestamps: self.timestamps.clone(),
            dofs: dofs.iter().map(|&d| self.dofs[d]).collect(),
            names: dofs.iter().map(|&d| self.names[d].clone()).collect(),
            subject: self.subject.clone(),
            arm: self.arm,
        })
    }

    /// Re-labels every sample.
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance.iter_mut().for_each(|p| *p = provenance);
        self
    }

    pub(crate) fn set_names(&mut self, names: Vec<String>) {
        debug_assert_eq!(names.len(), self.dim);
        self.names = names;
    }

    /// Flat row-major copy of all samples.
    pub fn to_flat(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|s| s.as_slice().iter().copied()).collect()
    }

    /// Smallest axis-aligned box containing all samples.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let r = dof_ranges(self)?;
        Ok((r.min().to_vec(), r.max().to_vec()))
    }
}

pub fn assemble(clinical: &RomDataset, exploration: &RomDataset) -> Result<RomDataset> {
    if clinical.dim != exploration.dim {
        return Err(Error::DimensionMismatch {
            expected: clinical.dim,
            found: exploration.dim,
        });
    }
    let mut out = if clinical.is_empty() { exploration.clone() } else { clinical.clone() };
    out.samples.clear();
    out.provenance.clear();
    out.timestamps.clear();
    for ds in [clinical, exploration] {
        out.samples.extend_from_slice(&ds.samples);
        out.provenance.extend_from_slice(&ds.provenance);
        out.timestamps.extend_from_slice(&ds.timestamps);
    }
    if out.subject.is_none() {
        out.subject = exploration.subject.clone();
    }
    if out.arm.is_none() {
        out.arm = exploration.arm;
    }
    Ok(out)
}

/// Per-DoF minimum, maximum and mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofRanges {
    min: Vec<f64>,
    max: Vec<f64>,
    mean: Vec<f64>,
}

impl DofRanges {
    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }
}

pub fn dof_ranges(data: &RomDataset) -> Result<DofRanges> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot compute ranges of an empty dataset".into()));
    }
    let n = data.dim;
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    let mut sum = vec![0.0; n];
    for s in &data.samples {
        for (k, &v) in s.as_slice().iter().enumerate() {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
            sum[k] += v;
        }
    }
    let m = data.len() as f64;
    let mean = sum
        .iter()
        .zip(min.iter().zip(&max))
        .map(|(s, (lo, hi))| (s / m).clamp(*lo, *hi))
        .collect();
    Ok(DofRanges { min, max, mean })
}

/// Subsampling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsampleMethod {
    /// Evenly spaced indices.
    Stride,
    /// Greedy farthest-point selection seeded with the first sample.
    FarthestPoint,
}

impl FromStr for SubsampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stride" => Ok(SubsampleMethod::Stride),
            "farthest-point" | "fps" => Ok(SubsampleMethod::FarthestPoint),
            other => Err(Error::InvalidInput(format!("unknown subsample method `{other}`"))),
        }
    }
}

/// Default training-set size after subsampling.
pub const DEFAULT_SUBSAMPLE_TARGET: usize = 4000;

pub fn subsample(data: &RomDataset, target: usize, method: SubsampleMethod) -> Result<RomDataset> {
    if target < 2 {
        return Err(Error::InvalidInput(format!("subsample target must be at least 2, got {target}")));
    }
    let m = data.len();
    if target >= m {
        return Ok(data.clone());
    }
    let indices = match method {
        SubsampleMethod::Stride => (0..target).map(|k| k * m / target).collect::<Vec<_>>(),
        SubsampleMethod::FarthestPoint => farthest_point_indices(data, target),
    };
    Ok(data.subset(&indices))
}

fn farthest_point_indices(data: &RomDataset, target: usize) -> Vec<usize> {
    let pts = data.samples();
    let mut chosen = vec![0usize];
    let mut nearest: Vec<f64> = pts
        .iter()
        .map(|p| squared_distance(p.as_slice(), pts[0].as_slice()))
        .collect();
    while chosen.len() < target {
        let (next, _) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        chosen.push(next);
        let q = pts[next].as_slice();
        for (d, p) in nearest.iter_mut().zip(pts) {
            *d = d.min(squared_distance(p.as_slice(), q));
        }
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> RomDataset {
        RomDataset::from_rows(&(0..n).map(|i| vec![i as f64, 0.0]).collect::<Vec<_>>(), Provenance::Exploration).unwrap()
    }

    #[test]
    fn assemble_sizes_and_labels() {
        let c = line(10).with_provenance(Provenance::Clinical);
        let e = line(20);
        let all = assemble(&c, &e).unwrap();
        assert_eq!(all.len(), 30);
        assert_eq!(all.count(Provenance::Clinical), 10);
        assert!(all.provenance()[..10].iter().all(|&p| p == Provenance::Clinical));
        assert!(all.provenance()[10..].iter().all(|&p| p == Provenance::Exploration));
        assert_eq!(all.samples()[12], e.samples()[2]);

        let only = assemble(&RomDataset::empty(2), &e).unwrap();
        assert_eq!(only, e);

        let three = RomDataset::from_rows(&[vec![0.0, 0.0, 0.0]], Provenance::Clinical).unwrap();
        assert!(matches!(assemble(&three, &e), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn assemble_associative_in_size() {
        let (a, b, c) = (line(3), line(5).with_provenance(Provenance::Clinical), line(7));
        let left = assemble(&assemble(&a, &b).unwrap(), &c).unwrap();
        let right = assemble(&a, &assemble(&b, &c).unwrap()).unwrap();
        assert_eq!(left.len(), right.len());
        assert_eq!(left.provenance(), right.provenance());
    }

    #[test]
    fn ranges_arithmetic() {
        let ds = RomDataset::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0], vec![5.0, 1.0]], Provenance::Clinical).unwrap();
        let r = dof_ranges(&ds).unwrap();
        assert_eq!(r.min(), &[1.0, -2.0]);
        assert_eq!(r.max(), &[5.0, 4.0]);
        assert_eq!(r.mean(), &[3.0, 1.0]);

        let single = RomDataset::from_rows(&[vec![7.0]], Provenance::Test).unwrap();
        let r = dof_ranges(&single).unwrap();
        assert_eq!((r.min()[0], r.max()[0], r.mean()[0]), (7.0, 7.0, 7.0));

        let neg = RomDataset::from_rows(&[vec![-10.0], vec![-20.0]], Provenance::Test).unwrap();
        assert_eq!(dof_ranges(&neg).unwrap().mean(), &[-15.0]);

        assert!(dof_ranges(&RomDataset::empty(2)).is_err());
    }

    #[test]
    fn stride_every_tenth() {
        let ds = line(100);
        let sub = subsample(&ds, 10, SubsampleMethod::Stride).unwrap();
        let xs: Vec<f64> = sub.samples().iter().map(|s| s[0]).collect();
        assert_eq!(xs, (0..10).map(|k| (k * 10) as f64).collect::<Vec<_>>());
    }

    #[test]
    fn subsample_identity_and_bad_target() {
        let ds = line(5);
        assert_eq!(subsample(&ds, 5, SubsampleMethod::FarthestPoint).unwrap(), ds);
        assert_eq!(subsample(&ds, 50, SubsampleMethod::Stride).unwrap(), ds);
        assert!(subsample(&ds, 1, SubsampleMethod::Stride).is_err());
    }

    #[test]
    fn farthest_point_keeps_both_clusters() {
        let mut rows = Vec::new();
        for i in 0..1000 {
            let jitter = (i % 37) as f64 * 0.1;
            if i % 10 == 0 {
                rows.push(vec![100.0 + jitter, -jitter]);
            } else {
                rows.push(vec![jitter, jitter * 0.5]);
            }
        }
        let ds = RomDataset::from_rows(&rows, Provenance::Exploration).unwrap();
        let sub = subsample(&ds, 20, SubsampleMethod::FarthestPoint).unwrap();
        let far = sub.samples().iter().filter(|s| s[0] > 50.0).count();
        assert!(far >= 5 && sub.len() - far >= 5, "far {far} near {}", sub.len() - far);
        assert_eq!(sub.samples()[0], ds.samples()[0]);
    }

    #[test]
    fn select_dofs_tracks_sources() {
        let ds = RomDataset::from_rows(&[vec![1.0, 2.0, 3.0]], Provenance::Clinical).unwrap();
        let sel = ds.select_dofs(&[2, 0]).unwrap();
        assert_eq!(sel.dofs, vec![2, 0]);
        assert_eq!(sel.samples()[0].as_slice(), &[3.0, 1.0]);
        let again = sel.select_dofs(&[1]).unwrap();
        assert_eq!(again.dofs, vec![0]);
        assert!(ds.select_dofs(&[3]).is_err());
    }

    proptest! {
        #[test]
        fn ranges_match_brute_force(rows in proptest::collection::vec(proptest::collection::vec(-179.0f64..179.0, 3), 1..60)) {
            let ds = RomDataset::from_rows(&rows, Provenance::Exploration).unwrap();
            let r = dof_ranges(&ds).unwrap();
            for k in 0..3 {
                let lo = rows.iter().map(|row| row[k]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|row| row[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(r.min()[k], lo);
                prop_assert_eq!(r.max()[k], hi);
                prop_assert!(r.min()[k] <= r.mean()[k] && r.mean()[k] <= r.max()[k]);
            }
        }
    }
}
