use serde::{Deserialize, Serialize};

use crate::dataset::{dof_ranges, RomDataset};
use crate::error::{Error, Result};
use crate::kinematics::JointVector;
use crate::ocsvm::OcsvmModel;

/// Default distance past the observed joint limits for negative samples.
pub const DEFAULT_NEGATIVE_OFFSET: f64 = 5.0;

/// Outcome of a point-set constraint; `offending` indexes the input points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub pass: bool,
    pub offending: Vec<usize>,
}

/// Held-out captures must all score `Γ ≥ 0`.
pub fn constraint_test_inclusion(model: &OcsvmModel, test: &RomDataset) -> Result<ConstraintResult> {
    if test.is_empty() {
        return Err(Error::InvalidInput("test-inclusion check needs at least one test sample".into()));
    }
    let gammas = model.gamma_batch(test.samples())?;
    let offending: Vec<usize> = gammas
        .iter()
        .enumerate()
        .filter(|(_, g)| g.value() < 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(ConstraintResult {
        pass: offending.is_empty(),
        offending,
    })
}

/// Two points per DoF just beyond its observed minimum and maximum, with all
/// other components at the data mean.
pub fn make_negative_samples(data: &RomDataset, offset: f64) -> Result<Vec<JointVector>> {
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::InvalidInput(format!("negative-sample offset must be positive, got {offset}")));
    }
    let ranges = dof_ranges(data)?;
    let mut out = Vec::with_capacity(2 * ranges.dim());
    for i in 0..ranges.dim() {
        for limit in [ranges.min()[i] - offset, ranges.max()[i] + offset] {
            let mut q = ranges.mean().to_vec();
            q[i] = limit;
            out.push(JointVector::unwrapped(q)?);
        }
    }
    Ok(out)
}

/// Known-infeasible points must all score `Γ < 0`.
pub fn constraint_negative_exclusion(model: &OcsvmModel, negatives: &[JointVector]) -> Result<ConstraintResult> {
    if negatives.is_empty() {
        return Err(Error::InvalidInput("negative-exclusion check needs at least one negative sample".into()));
    }
    let gammas = model.gamma_batch(negatives)?;
    let offending: Vec<usize> = gammas
        .iter()
        .enumerate()
        .filter(|(_, g)| g.value() >= 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(ConstraintResult {
        pass: offending.is_empty(),
        offending,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;

    #[test]
    fn negatives_from_ranges() {
        let ds = RomDataset::from_rows(
            &[vec![-10.0, 0.0], vec![150.0, 90.0], vec![70.0, 45.0], vec![70.0, 45.0]],
            Provenance::Exploration,
        )
        .unwrap();
        let neg = make_negative_samples(&ds, 5.0).unwrap();
        let got: Vec<&[f64]> = neg.iter().map(|q| q.as_slice()).collect();
        assert_eq!(got, vec![&[-15.0, 45.0][..], &[155.0, 45.0], &[70.0, -5.0], &[70.0, 95.0]]);
    }

    #[test]
    fn negatives_count_and_constant_column() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, 7.0, -(i as f64)]).collect();
        let ds = RomDataset::from_rows(&rows, Provenance::Exploration).unwrap();
        let neg = make_negative_samples(&ds, 3.0).unwrap();
        assert_eq!(neg.len(), 8);
        assert_eq!(neg[4][2], 4.0);
        assert_eq!(neg[5][2], 10.0);
        assert!(make_negative_samples(&ds, 0.0).is_err());
    }

    #[test]
    fn negatives_wrap_past_180_unchanged() {
        let ds = RomDataset::from_rows(&[vec![170.0], vec![178.0]], Provenance::Exploration).unwrap();
        let neg = make_negative_samples(&ds, 5.0).unwrap();
        assert_eq!(neg[1][0], 183.0);
    }
}
