//! Boundary areas, weighted volume and the Impairment Index.
//!
//! Each DoF pair gets its own 2-D model. The area enclosed by `Γ > 0` is
//! integrated on a lattice, pair areas are combined as
//! `V = Σ_{i<j} C_ij · V_ij`, and the Impairment Index is
//! `II = V_impaired / V_healthy`.

mod lattice;

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocsvm::OcsvmModel;

pub use lattice::{label_disagreement, Lattice};

/// Smallest accepted lattice resolution for pair areas.
pub const MIN_RESOLUTION: usize = 64;
/// Default padding around the support-vector box, in degrees.
pub const DEFAULT_PADDING: f64 = 30.0;
pub const REPORT_VERSION: u32 = 1;

/// Area enclosed by a 2-D boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairArea {
    pub i: usize,
    pub j: usize,
    /// deg²
    pub area: f64,
    /// Discretization uncertainty: cells straddling the boundary times the
    /// cell area.
    pub uncertainty: f64,
    pub resolution: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

/// DoF pair of a 2-D model, `(0, 1)` when the model carries no indices.
pub fn model_pair(model: &OcsvmModel) -> Result<(usize, usize)> {
    if model.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "pair metrics need a 2-D model, got dimension {}",
            model.dim()
        )));
    }
    Ok(match model.dofs() {
        Some(d) => (d[0], d[1]),
        None => (0, 1),
    })
}

/// Lattice over the support-vector box padded by `padding` on every side.
pub fn pair_lattice(model: &OcsvmModel, resolution: usize, padding: f64) -> Result<Lattice> {
    model_pair(model)?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if !(padding > 0.0 && padding.is_finite()) {
        return Err(Error::InvalidInput(format!("padding must be positive, got {padding}")));
    }
    let (lo, hi) = model.sv_bounding_box();
    Lattice::padded(&lo, &hi, padding, resolution)
}

/// Integrates the `Γ > 0` region of a 2-D model.
///
/// If `Γ ≥ 0` anywhere on the lattice border the padding is doubled once;
/// a second failure is an error.
pub fn pair_area(model: &OcsvmModel, resolution: usize, padding: f64) -> Result<PairArea> {
    let (i, j) = model_pair(model)?;
    let mut pad = padding;
    for attempt in 0..2 {
        let lattice = pair_lattice(model, resolution, pad)?;
        let gamma = lattice.evaluate(model)?;
        let open = (0..gamma.len()).any(|k| gamma[k] >= 0.0 && lattice.on_border(k));
        if open {
            if attempt == 0 {
                pad *= 2.0;
                continue;
            }
            return Err(Error::InvalidInput(format!(
                "boundary of pair ({i}, {j}) is not enclosed by the lattice even with {pad} deg padding"
            )));
        }
        let n = resolution;
        let inside: Vec<bool> = gamma.iter().map(|&g| g > 0.0).collect();
        let cell = lattice.cell_volume();
        let count = inside.iter().filter(|&&b| b).count();
        let straddling = (0..inside.len())
            .filter(|&k| {
                let (r, c) = (k / n, k % n);
                let mut nb = Vec::with_capacity(4);
                if r > 0 {
                    nb.push(k - n);
                }
                if r + 1 < n {
                    nb.push(k + n);
                }
                if c > 0 {
                    nb.push(k - 1);
                }
                if c + 1 < n {
                    nb.push(k + 1);
                }
                nb.iter().any(|&m| inside[m] != inside[k])
            })
            .count();
        return Ok(PairArea {
            i,
            j,
            area: count as f64 * cell,
            uncertainty: straddling as f64 * cell,
            resolution,
            lo: [lattice.lo[0], lattice.lo[1]],
            hi: [lattice.hi[0], lattice.hi[1]],
        });
    }
    unreachable!("loop returns on its second pass")
}

/// Monte-Carlo estimate of the N-D volume where `Γ > 0`, sampled uniformly
/// over the padded support-vector box. Returns `(volume, standard error)`.
pub fn monte_carlo_volume(model: &OcsvmModel, samples: usize, padding: f64, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidInput("Monte-Carlo volume needs at least one sample".into()));
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(Error::InvalidInput(format!("padding must be nonnegative, got {padding}")));
    }
    let (lo, hi) = model.sv_bounding_box();
    let lo: Vec<f64> = lo.iter().map(|v| v - padding).collect();
    let hi: Vec<f64> = hi.iter().map(|v| v + padding).collect();
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![0.0; lo.len()];
    let mut hits = 0usize;
    for _ in 0..samples {
        for (k, v) in q.iter_mut().enumerate() {
            *v = if hi[k] > lo[k] { rng.gen_range(lo[k]..hi[k]) } else { lo[k] };
        }
        if model.gamma_at(&q)?.value() > 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    Ok((p * box_volume, se * box_volume))
}

/// Symmetric nonnegative weights over DoF pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct WeightMatrix {
    n: usize,
    c: Vec<f64>,
}

impl WeightMatrix {
    /// Unit weight on every pair of `n` DoFs.
    pub fn ones(n: usize) -> Self {
        let mut c = vec![1.0; n * n];
        for k in 0..n {
            c[k * n + k] = 0.0;
        }
        Self { n, c }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, c: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("weight matrix must be square".into()));
        }
        let c: Vec<f64> = rows.into_iter().flatten().collect();
        for a in 0..n {
            for b in 0..n {
                let v = c[a * n + b];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidInput(format!("weight C[{a}][{b}] = {v} is not a finite nonnegative value")));
                }
                if v != c[b * n + a] {
                    return Err(Error::InvalidInput(format!("weight matrix is not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(Self { n, c })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }

    /// Sets `C_ij = C_ji = w`.
    pub fn set(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidInput(format!("pair ({i}, {j}) out of range for {} DoFs", self.n)));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidInput(format!("weight must be finite and nonnegative, got {w}")));
        }
        self.c[i * self.n + j] = w;
        self.c[j * self.n + i] = w;
        Ok(())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.c.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for WeightMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<WeightMatrix> for Vec<Vec<f64>> {
    fn from(w: WeightMatrix) -> Self {
        w.rows()
    }
}

/// `Σ C_ij · V_ij` over the unordered pairs present in `areas`.
pub fn weighted_volume(areas: &[PairArea], weights: &WeightMatrix) -> Result<f64> {
    let mut seen = BTreeMap::new();
    for a in areas {
        let key = (a.i.min(a.j), a.i.max(a.j));
        if a.i == a.j {
            return Err(Error::InvalidInput(format!("pair ({}, {}) has equal indices", a.i, a.j)));
        }
        if key.1 >= weights.dim() {
            return Err(Error::InvalidInput(format!(
                "pair ({}, {}) is outside the {}-DoF weight matrix",
                a.i,
                a.j,
                weights.dim()
            )));
        }
        if !(a.area >= 0.0 && a.area.is_finite()) {
            return Err(Error::InvalidInput(format!("pair ({}, {}) has invalid area {}", a.i, a.j, a.area)));
        }
        if seen.insert(key, a.area).is_some() {
            return Err(Error::InvalidInput(format!("pair ({}, {}) given more than once", key.0, key.1)));
        }
    }
    let mut v = 0.0;
    for i in 0..weights.dim() {
        for j in i + 1..weights.dim() {
            let c = weights.get(i, j);
            if c == 0.0 {
                continue;
            }
            let area = seen
                .get(&(i, j))
                .ok_or_else(|| Error::InvalidInput(format!("no area for pair ({i}, {j}) which has weight {c}")))?;
            v += c * area;
        }
    }
    Ok(v)
}

/// Impaired and healthy volumes with their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentResult {
    #[serde(rename = "V_impaired")]
    pub v_impaired: f64,
    #[serde(rename = "V_healthy")]
    pub v_healthy: f64,
    #[serde(rename = "II")]
    pub ii: f64,
}

pub fn impairment_index(v_impaired: f64, v_healthy: f64) -> Result<f64> {
    if !(v_healthy > 0.0 && v_healthy.is_finite()) {
        return Err(Error::InvalidInput(format!("healthy volume must be positive, got {v_healthy}")));
    }
    if !(v_impaired >= 0.0 && v_impaired.is_finite()) {
        return Err(Error::InvalidInput(format!("impaired volume must be nonnegative, got {v_impaired}")));
    }
    Ok(v_impaired / v_healthy)
}

impl ImpairmentResult {
    pub fn new(v_impaired: f64, v_healthy: f64) -> Result<Self> {
        Ok(Self {
            v_impaired,
            v_healthy,
            ii: impairment_index(v_impaired, v_healthy)?,
        })
    }
}

/// Metrics output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub version: u32,
    pub pairs: Vec<PairArea>,
    pub weights: WeightMatrix,
    #[serde(rename = "V")]
    pub volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impaired_pairs: Option<Vec<PairArea>>,
    #[serde(default, flatten, skip_serializing_if = "Option::is_none")]
    pub impairment: Option<ImpairmentResult>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes the `(q_i, q_j, Γ)` lattice of a 2-D model as CSV.
pub fn write_isolines<W: Write>(model: &OcsvmModel, resolution: usize, padding: f64, writer: W) -> Result<usize> {
    let (i, j) = model_pair(model)?;
    let lattice = pair_lattice(model, resolution, padding)?;
    let gamma = lattice.evaluate(model)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([format!("q{i}"), format!("q{j}"), "gamma".to_string()])?;
    for (k, g) in gamma.iter().enumerate() {
        let c = lattice.center(k);
        w.write_record([c[0].to_string(), c[1].to_string(), g.to_string()])?;
    }
    w.flush()?;
    Ok(gamma.len())
}
