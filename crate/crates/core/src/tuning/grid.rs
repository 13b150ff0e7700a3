//! Constrained sequential grid search over `(ν, σ)`.
//!
//! Every cell trains a model and is checked against three constraints:
//! held-out samples inside (`Γ ≥ 0`), few interior support vectors
//! (overfitting), negative samples past the joint limits outside
//! (`Γ < 0`, underfitting). The grid is then narrowed to the accepted
//! region at double resolution until the selected boundary stops changing.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constraints::{constraint_negative_exclusion, constraint_test_inclusion, make_negative_samples};
use super::edge::{m_esv_check_with_radius, MEsvConfig};
use crate::dataset::RomDataset;
use crate::error::{Error, Result};
use crate::metrics::{label_disagreement, Lattice};
use crate::ocsvm::{train, OcsvmModel, TrainConfig};

/// Log-spaced axis `lo..=hi` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Self { lo, hi, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.count)
            .map(|k| {
                if k == 0 {
                    self.lo
                } else if k + 1 == self.count {
                    self.hi
                } else {
                    (a + (b - a) * k as f64 / (self.count - 1) as f64).exp()
                }
            })
            .collect()
    }

    /// Sub-range spanning indices `first..=last` of this axis, expanded by
    /// one point each side, at half the step.
    fn refine(&self, first: usize, last: usize, max_points: usize) -> Self {
        let vals = self.values();
        let a = first.saturating_sub(1);
        let b = (last + 1).min(self.count - 1);
        let count = if b > a { (2 * (b - a) + 1).min(max_points.max(2)) } else { 1 };
        Self::new(vals[a], vals[b], count)
    }
}

/// Grid search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nu: AxisRange,
    pub sigma: AxisRange,
    /// Refinement rounds after the initial grid.
    pub rounds: usize,
    /// Stop refining once the selected boundary changes on less than this
    /// fraction of the evaluation lattice.
    pub change_threshold: f64,
    /// Cap on points per axis in refined grids.
    pub max_axis_points: usize,
    /// Solver settings shared by every cell (ν and σ are overwritten).
    pub solver_tolerance: f64,
    pub max_iterations: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nu: AxisRange::new(1e-3, 1.0, 7),
            sigma: AxisRange::new(1e-3, 1e3, 13),
            rounds: 4,
            change_threshold: 0.005,
            max_axis_points: 33,
            solver_tolerance: TrainConfig::DEFAULT_TOLERANCE,
            max_iterations: TrainConfig::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.nu.lo > 0.0 && self.nu.hi <= 1.0 && self.nu.lo <= self.nu.hi) {
            return bad(format!("nu range must lie in (0, 1], got [{}, {}]", self.nu.lo, self.nu.hi));
        }
        if !(self.sigma.lo > 0.0 && self.sigma.lo <= self.sigma.hi && self.sigma.hi.is_finite()) {
            return bad(format!("sigma range must be positive, got [{}, {}]", self.sigma.lo, self.sigma.hi));
        }
        if self.nu.count < 2 || self.sigma.count < 2 {
            // a single-valued axis is only meaningful when lo == hi
            let single_ok = |a: &AxisRange| a.count >= 2 || (a.count == 1 && a.lo == a.hi);
            if !(single_ok(&self.nu) && single_ok(&self.sigma)) {
                return bad("grid axes need at least 2 points".into());
            }
        }
        if !(self.change_threshold >= 0.0) {
            return bad("change threshold must be nonnegative".into());
        }
        Ok(())
    }
}

/// Per-cell diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub round: usize,
    pub nu: f64,
    pub sigma: f64,
    /// Solver failure, if training did not converge.
    pub train_error: Option<String>,
    pub sv_fraction: Option<f64>,
    pub test_inclusion_pass: bool,
    pub excluded_test_points: usize,
    pub m_esv_pass: bool,
    pub interior_svs: usize,
    pub support_vectors: usize,
    pub negative_exclusion_pass: bool,
    pub admitted_negatives: usize,
    /// Enclosed volume on the evaluation lattice (deg^N).
    pub area: Option<f64>,
}

impl CellReport {
    pub fn accepted(&self) -> bool {
        self.train_error.is_none() && self.test_inclusion_pass && self.m_esv_pass && self.negative_exclusion_pass
    }

    /// Bit mask of failures: 1 test inclusion, 2 M-ESV, 4 negative
    /// exclusion, 8 training; 0 when accepted.
    pub fn failure_mask(&self) -> u8 {
        if self.train_error.is_some() {
            return 8;
        }
        (!self.test_inclusion_pass as u8) | ((!self.m_esv_pass as u8) << 1) | ((!self.negative_exclusion_pass as u8) << 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FailureHistogram {
    pub train_failed: usize,
    pub test_inclusion: usize,
    pub m_esv: usize,
    pub negative_exclusion: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedPair {
    pub nu: f64,
    pub sigma: f64,
    pub area: f64,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundAxes {
    pub round: usize,
    pub nu: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub const REPORT_VERSION: u32 = 1;

/// Everything the search evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub version: u32,
    pub rounds: Vec<RoundAxes>,
    pub cells: Vec<CellReport>,
    pub accepted: Vec<(f64, f64)>,
    pub selected: Option<SelectedPair>,
    pub histogram: FailureHistogram,
    /// Boundary change between consecutive selections.
    pub boundary_changes: Vec<f64>,
    pub lattice: Lattice,
    pub m_esv_radius: f64,
    pub negative_offset: f64,
}

impl TuningReport {
    pub fn is_feasible(&self) -> bool {
        self.selected.is_some()
    }

    /// The selected pair, or a `NoFeasible` error summarizing the failures.
    pub fn selected_or_err(&self) -> Result<SelectedPair> {
        self.selected.ok_or_else(|| {
            let h = &self.histogram;
            Error::NoFeasible(format!(
                "{} cells evaluated; failures: test inclusion {}, M-ESV {}, negative exclusion {}, training {}",
                self.cells.len(),
                h.test_inclusion,
                h.m_esv,
                h.negative_exclusion,
                h.train_failed
            ))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Pass/fail matrix of one round: rows σ, columns ν, entries are
    /// [`CellReport::failure_mask`] values.
    pub fn write_matrix_csv<W: Write>(&self, writer: W, round: usize) -> Result<()> {
        let axes = self
            .rounds
            .iter()
            .find(|r| r.round == round)
            .ok_or_else(|| Error::InvalidInput(format!("report has no round {round}")))?;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["sigma\\nu".to_string()];
        header.extend(axes.nu.iter().map(f64::to_string));
        w.write_record(&header)?;
        let cells: Vec<&CellReport> = self.cells.iter().filter(|c| c.round == round).collect();
        for (si, s) in axes.sigma.iter().enumerate() {
            let mut rec = vec![s.to_string()];
            for ni in 0..axes.nu.len() {
                rec.push(cells[ni * axes.sigma.len() + si].failure_mask().to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluation lattice used to compare boundaries: 64 points per dimension
/// over the data box padded by 20°, coarsened above three dimensions so
/// the lattice stays at most 64³ cells.
pub fn evaluation_lattice(data: &RomDataset) -> Result<Lattice> {
    let (lo, hi) = data.bounding_box()?;
    let dim = data.dim();
    let per_dim = if dim <= 3 { 64 } else { ((64f64.powi(3)).powf(1.0 / dim as f64).floor() as usize).max(2) };
    Lattice::padded(&lo, &hi, 20.0, per_dim)
}

struct Evaluated {
    report: CellReport,
    model: Option<OcsvmModel>,
}

struct Context<'a> {
    train: &'a RomDataset,
    test: &'a RomDataset,
    negatives: Vec<crate::JointVector>,
    mesv: &'a MEsvConfig,
    radius: f64,
    lattice: Lattice,
    grid: &'a GridConfig,
}

impl Context<'_> {
    fn evaluate(&self, round: usize, nu: f64, sigma: f64) -> Result<Evaluated> {
        let mut cfg = TrainConfig::new(nu, sigma);
        cfg.tolerance = self.grid.solver_tolerance;
        cfg.max_iterations = self.grid.max_iterations;
        let mut report = CellReport {
            round,
            nu,
            sigma,
            train_error: None,
            sv_fraction: None,
            test_inclusion_pass: false,
            excluded_test_points: 0,
            m_esv_pass: false,
            interior_svs: 0,
            support_vectors: 0,
            negative_exclusion_pass: false,
            admitted_negatives: 0,
            area: None,
        };
        let model = match train(self.train, &cfg) {
            Ok(m) => m,
            Err(e @ Error::NotConverged { .. }) => {
                report.train_error = Some(e.to_string());
                return Ok(Evaluated { report, model: None });
            }
            Err(e) => return Err(e),
        };
        report.sv_fraction = Some(model.training().sv_fraction);
        let c1 = constraint_test_inclusion(&model, self.test)?;
        report.test_inclusion_pass = c1.pass;
        report.excluded_test_points = c1.offending.len();
        let c2 = m_esv_check_with_radius(&model, self.train, self.mesv, self.radius)?;
        report.m_esv_pass = c2.pass;
        report.interior_svs = c2.interior;
        report.support_vectors = c2.support_vectors;
        let c3 = constraint_negative_exclusion(&model, &self.negatives)?;
        report.negative_exclusion_pass = c3.pass;
        report.admitted_negatives = c3.offending.len();
        if report.accepted() {
            let inside = self.lattice.inside_labels(&model)?.iter().filter(|&&b| b).count();
            report.area = Some(inside as f64 * self.lattice.cell_volume());
        }
        let model = report.accepted().then_some(model);
        Ok(Evaluated { report, model })
    }
}

/// Tightest area first; ties go to larger ν, then smaller σ.
fn better(a: &CellReport, b: &CellReport) -> bool {
    let (aa, ba) = (a.area.unwrap_or(f64::INFINITY), b.area.unwrap_or(f64::INFINITY));
    if aa != ba {
        return aa < ba;
    }
    if a.nu != b.nu {
        return a.nu > b.nu;
    }
    a.sigma < b.sigma
}

/// Runs the constrained grid search. An infeasible search is not an error:
/// the report then has no selection and carries the failure histogram.
pub fn grid_search(
    train: &RomDataset,
    test: &RomDataset,
    grid: &GridConfig,
    mesv: &MEsvConfig,
    offset: f64,
) -> Result<TuningReport> {
    grid.validate()?;
    mesv.validate()?;
    if train.len() < 2 {
        return Err(Error::InvalidInput("grid search needs at least 2 training samples".into()));
    }
    if test.is_empty() {
        return Err(Error::InvalidInput("grid search needs a nonempty test set".into()));
    }
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch { expected: train.dim(), found: test.dim() });
    }
    let ctx = Context {
        train,
        test,
        negatives: make_negative_samples(train, offset)?,
        mesv,
        radius: mesv.resolve_radius(train),
        lattice: evaluation_lattice(train)?,
        grid,
    };

    let mut nu_axis = grid.nu;
    let mut sigma_axis = grid.sigma;
    let mut rounds = Vec::new();
    let mut cells: Vec<CellReport> = Vec::new();
    let mut best: Option<(CellReport, Vec<bool>)> = None;
    let mut changes = Vec::new();

    for round in 0..=grid.rounds {
        let nus = nu_axis.values();
        let sigmas = sigma_axis.values();
        let pairs: Vec<(usize, usize)> = (0..nus.len())
            .flat_map(|a| (0..sigmas.len()).map(move |b| (a, b)))
            .collect();
        let evaluated = pairs
            .par_iter()
            .map(|&(a, b)| ctx.evaluate(round, nus[a], sigmas[b]))
            .collect::<Result<Vec<_>>>()?;
        rounds.push(RoundAxes { round, nu: nus.clone(), sigma: sigmas.clone() });

        let accepted_idx: Vec<usize> = (0..evaluated.len()).filter(|&k| evaluated[k].report.accepted()).collect();
        let round_best = accepted_idx
            .iter()
            .copied()
            .reduce(|x, y| if better(&evaluated[y].report, &evaluated[x].report) { y } else { x });

        let mut stop = accepted_idx.is_empty();
        if let Some(k) = round_best {
            let candidate = &evaluated[k];
            let replace = best.as_ref().is_none_or(|(b, _)| better(&candidate.report, b));
            if replace {
                let model = candidate.model.as_ref().expect("accepted cells keep their model");
                let labels = ctx.lattice.inside_labels(model)?;
                if let Some((_, prev)) = &best {
                    let change = label_disagreement(prev, &labels);
                    changes.push(change);
                    if change < grid.change_threshold {
                        stop = true;
                    }
                } else if round > 0 {
                    changes.push(1.0);
                }
                best = Some((candidate.report.clone(), labels));
            } else if round > 0 {
                changes.push(0.0);
                stop = true;
            }
        }
        cells.extend(evaluated.into_iter().map(|e| e.report));
        if stop || round == grid.rounds {
            break;
        }
        let (na, nb) = index_span(accepted_idx.iter().map(|&k| pairs[k].0));
        let (sa, sb) = index_span(accepted_idx.iter().map(|&k| pairs[k].1));
        nu_axis = nu_axis.refine(na, nb, grid.max_axis_points);
        sigma_axis = sigma_axis.refine(sa, sb, grid.max_axis_points);
    }

    let mut histogram = FailureHistogram::default();
    for c in &cells {
        if c.train_error.is_some() {
            histogram.train_failed += 1;
            continue;
        }
        histogram.test_inclusion += !c.test_inclusion_pass as usize;
        histogram.m_esv += !c.m_esv_pass as usize;
        histogram.negative_exclusion += !c.negative_exclusion_pass as usize;
    }
    let accepted = cells.iter().filter(|c| c.accepted()).map(|c| (c.nu, c.sigma)).collect();
    Ok(TuningReport {
        version: REPORT_VERSION,
        rounds,
        accepted,
        selected: best.map(|(c, _)| SelectedPair {
            nu: c.nu,
            sigma: c.sigma,
            area: c.area.unwrap_or(0.0),
            round: c.round,
        }),
        cells,
        histogram,
        boundary_changes: changes,
        lattice: ctx.lattice,
        m_esv_radius: ctx.radius,
        negative_offset: offset,
    })
}

fn index_span(it: impl Iterator<Item = usize>) -> (usize, usize) {
    it.fold((usize::MAX, 0), |(lo, hi), k| (lo.min(k), hi.max(k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_axis() {
        let a = AxisRange::new(1e-3, 1e3, 7);
        let v = a.values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[6], 1e3);
        assert!((v[3] - 1.0).abs() < 1e-12);
        let r = a.refine(2, 3, 100);
        assert!((r.lo - 1e-2).abs() < 1e-12 && (r.hi - 10.0).abs() < 1e-9);
        assert_eq!(r.count, 7);
        let edge = a.refine(0, 0, 100);
        assert_eq!((edge.lo, edge.count), (1e-3, 3));
        assert_eq!(a.refine(0, 6, 5).count, 5);
    }

    #[test]
    fn tie_breaks() {
        let cell = |nu, sigma, area| CellReport {
            round: 0,
            nu,
            sigma,
            train_error: None,
            sv_fraction: None,
            test_inclusion_pass: true,
            excluded_test_points: 0,
            m_esv_pass: true,
            interior_svs: 0,
            support_vectors: 0,
            negative_exclusion_pass: true,
            admitted_negatives: 0,
            area: Some(area),
        };
        assert!(better(&cell(0.1, 10.0, 5.0), &cell(0.5, 1.0, 6.0)));
        assert!(better(&cell(0.5, 10.0, 5.0), &cell(0.1, 1.0, 5.0)));
        assert!(better(&cell(0.5, 1.0, 5.0), &cell(0.5, 10.0, 5.0)));
    }

    #[test]
    fn invalid_grids() {
        let mut g = GridConfig::default();
        g.nu.hi = 1.5;
        assert!(g.validate().is_err());
        let mut g = GridConfig::default();
        g.sigma.count = 1;
        assert!(g.validate().is_err());
        let mut g = GridConfig::default();
        g.sigma = AxisRange::new(1e3, 1e3, 1);
        assert!(g.validate().is_ok());
    }
}
