//! Two-coordinate SMO for `min ½ αᵀKα  s.t.  0 ≤ αᵢ ≤ U, Σ αᵢ = 1`.
//!
//! Working pairs are chosen with the second-order rule: `i` is the most
//! violating index that may grow, `j` the shrinkable index with the largest
//! guaranteed objective decrease. The gradient `G = Kα` is maintained
//! incrementally and rebuilt from scratch before convergence is declared.

use super::kernel::Gram;

const TAU: f64 = 1e-12;

pub(crate) struct Smo<'g, G: Gram> {
    gram: &'g mut G,
    diag: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    upper: f64,
    iterations: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct SmoOutcome {
    pub alpha: Vec<f64>,
    pub grad: Vec<f64>,
    pub iterations: u64,
    pub converged: bool,
}

impl<'g, G: Gram> Smo<'g, G> {
    pub fn new(gram: &'g mut G, alpha: Vec<f64>, upper: f64) -> Self {
        debug_assert_eq!(alpha.len(), gram.size());
        let diag = (0..alpha.len()).map(|i| gram.diag(i)).collect();
        let mut s = Self {
            diag,
            grad: vec![0.0; alpha.len()],
            gram,
            alpha,
            upper,
            iterations: 0,
        };
        s.rebuild_gradient();
        s
    }

    /// Feasible starting point: the first `⌊1/U⌋` coefficients at the bound,
    /// the remainder on the next one.
    pub fn initial_alpha(n: usize, upper: f64) -> Vec<f64> {
        let mut alpha = vec![0.0; n];
        let mut left = 1.0;
        for a in alpha.iter_mut() {
            if left <= 0.0 {
                break;
            }
            let v = upper.min(left);
            *a = v;
            left -= v;
        }
        alpha
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    fn can_grow(&self, t: usize) -> bool {
        self.alpha[t] < self.upper
    }

    fn can_shrink(&self, t: usize) -> bool {
        self.alpha[t] > 0.0
    }

    fn rebuild_gradient(&mut self) {
        let n = self.alpha.len();
        let mut grad = vec![0.0; n];
        for j in 0..n {
            let a = self.alpha[j];
            if a > 0.0 {
                let row = self.gram.row(j);
                for (g, k) in grad.iter_mut().zip(row) {
                    *g += a * k;
                }
            }
        }
        self.grad = grad;
    }

    /// Current KKT gap; `≤ 0` when no violating pair exists.
    pub fn gap(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..self.alpha.len() {
            if self.can_grow(t) {
                lo = lo.min(self.grad[t]);
            }
            if self.can_shrink(t) {
                hi = hi.max(self.grad[t]);
            }
        }
        if lo.is_infinite() || hi.is_infinite() {
            0.0
        } else {
            hi - lo
        }
    }

    fn select(&mut self, tol: f64) -> Option<(usize, usize)> {
        let n = self.alpha.len();
        let mut i = None;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if self.can_grow(t) && self.grad[t] < g_min {
                g_min = self.grad[t];
                i = Some(t);
            }
            if self.can_shrink(t) {
                g_max = g_max.max(self.grad[t]);
            }
        }
        let i = i?;
        if g_max - g_min <= tol {
            return None;
        }
        let k_ii = self.diag[i];
        let row_i = self.gram.row(i);
        let mut best = None;
        let mut best_score = f64::INFINITY;
        for t in 0..n {
            if t == i || !(self.alpha[t] > 0.0) {
                continue;
            }
            let b = self.grad[t] - g_min;
            if b <= 0.0 {
                continue;
            }
            let a = k_ii + self.diag[t] - 2.0 * row_i[t];
            let score = -(b * b) / a.max(TAU);
            if score < best_score {
                best_score = score;
                best = Some(t);
            }
        }
        best.map(|j| (i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let k_ij = self.gram.row(i)[j];
        let a = (self.diag[i] + self.diag[j] - 2.0 * k_ij).max(TAU);
        let b = self.grad[j] - self.grad[i];
        let room_i = self.upper - self.alpha[i];
        let room_j = self.alpha[j];
        let mut step = b / a;
        let (ai, aj);
        if step >= room_i.min(room_j) {
            if room_i <= room_j {
                step = room_i;
                ai = self.upper;
                aj = self.alpha[j] - step;
            } else {
                step = room_j;
                ai = self.alpha[i] + step;
                aj = 0.0;
            }
        } else {
            ai = self.alpha[i] + step;
            aj = self.alpha[j] - step;
        }
        // exact difference actually applied, so Σα stays 1 up to rounding
        let di = ai - self.alpha[i];
        let dj = aj - self.alpha[j];
        self.alpha[i] = ai.clamp(0.0, self.upper);
        self.alpha[j] = aj.clamp(0.0, self.upper);
        {
            let row = self.gram.row(i);
            for (g, k) in self.grad.iter_mut().zip(row) {
                *g += di * k;
            }
        }
        {
            let row = self.gram.row(j);
            for (g, k) in self.grad.iter_mut().zip(row) {
                *g += dj * k;
            }
        }
        self.iterations += 1;
    }

    /// One pair update on the most violating pair; `false` when none is left.
    pub fn step(&mut self) -> bool {
        match self.select(0.0) {
            Some((i, j)) => {
                self.update(i, j);
                true
            }
            None => false,
        }
    }

    /// Runs pair updates until the gap drops to `tol` or `max_iter` updates
    /// have been made.
    pub fn run(&mut self, tol: f64, max_iter: u64) -> bool {
        let mut since_rebuild = 0u64;
        loop {
            match self.select(tol) {
                Some((i, j)) => {
                    if self.iterations >= max_iter {
                        self.rebuild_gradient();
                        return self.gap() <= tol;
                    }
                    self.update(i, j);
                    since_rebuild += 1;
                    if since_rebuild >= 100_000 {
                        self.rebuild_gradient();
                        since_rebuild = 0;
                    }
                }
                None => {
                    if since_rebuild == 0 {
                        return true;
                    }
                    self.rebuild_gradient();
                    since_rebuild = 0;
                    if self.gap() <= tol {
                        return true;
                    }
                }
            }
        }
    }

    pub fn into_outcome(self, converged: bool) -> SmoOutcome {
        SmoOutcome {
            alpha: self.alpha,
            grad: self.grad,
            iterations: self.iterations,
            converged,
        }
    }
}

pub(crate) fn solve<G: Gram>(gram: &mut G, upper: f64, tol: f64, max_iter: u64) -> SmoOutcome {
    let alpha = Smo::<G>::initial_alpha(gram.size(), upper);
    let mut smo = Smo::new(gram, alpha, upper);
    let converged = smo.run(tol, max_iter);
    smo.into_outcome(converged)
}

#[cfg(test)]
mod tests {
    use super::super::kernel::DenseGram;
    use super::*;

    #[test]
    fn two_points_full_box() {
        let mut g = DenseGram::from_fn(2, |i, j| if i == j { 1.0 } else { 0.3 });
        let out = solve(&mut g, 0.5, 1e-9, 1000);
        assert!(out.converged);
        assert_eq!(out.alpha, vec![0.5, 0.5]);
    }

    #[test]
    fn identity_spreads_mass() {
        let n = 10;
        let mut g = DenseGram::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 });
        let out = solve(&mut g, 1.0, 1e-12, 10_000);
        assert!(out.converged);
        for a in &out.alpha {
            assert!((a - 0.1).abs() < 1e-10);
        }
    }

    #[test]
    fn min_norm_point_of_segment() {
        // points (1, 1) and (1, -1): closest hull point to the origin is (1, 0)
        let pts = [[1.0, 1.0], [1.0, -1.0]];
        let mut g = DenseGram::from_fn(2, |i, j| pts[i][0] * pts[j][0] + pts[i][1] * pts[j][1]);
        let out = solve(&mut g, 1.0, 1e-14, 1000);
        assert!((out.alpha[0] - 0.5).abs() < 1e-12);
        assert!(out.converged);
    }

    #[test]
    fn respects_sum_and_box() {
        let n = 50;
        let mut g = DenseGram::from_fn(n, |i, j| (-((i as f64 - j as f64) / 7.0).powi(2)).exp());
        let upper = 1.0 / (0.1 * n as f64);
        let out = solve(&mut g, upper, 1e-10, 1_000_000);
        assert!(out.converged);
        let sum: f64 = out.alpha.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(out.alpha.iter().all(|&a| (0.0..=upper).contains(&a)));
    }
}
