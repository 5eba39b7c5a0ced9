//! Soft-margin kernel SVM trained by sequential minimal optimization.
//!
//! The solver follows Platt's two-loop scheme: sweep all samples, then the
//! non-bound ones, until a full sweep changes nothing. A sample whose KKT
//! condition is violated by more than `tol` is paired first with the
//! non-bound sample maximizing `|Eᵢ − Eⱼ|`, then with every non-bound sample,
//! then with every sample, in index order. The decision function is
//! `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + b` with `yᵢ ∈ {−1, +1}`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use super::kernel::{kernel_unchecked, resolve_gamma, KernelSpec};
use crate::error::{check_dim, Error, Result};

/// Multipliers at or below this are not support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
/// Multipliers within this of a bound are snapped onto it.
const BOUND_SNAP: f64 = 1e-8;
/// Multipliers within this fraction of `C` of a bound count as on it.
const BOUND_EPS: f64 = 1e-12;

fn at_lower(a: f64, c: f64) -> bool {
    a <= BOUND_EPS * c
}

fn at_upper(a: f64, c: f64) -> bool {
    a >= c - BOUND_EPS * c
}
/// Smallest dual-objective gain accepted for a pair update.
const MIN_GAIN: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub tol: f64,
    /// Cap on sweeps over the samples; `None` means `10 · n`.
    pub max_passes: Option<usize>,
}

impl SvmParams {
    pub fn new(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

impl Default for SvmParams {
    fn default() -> Self {
        Self::new(KernelSpec::best_reported())
    }
}

/// Raw SMO output over the training set.
#[derive(Clone, Debug)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub passes: usize,
    pub kkt_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    support_vectors: Array2<f64>,
    /// `αᵢ yᵢ` per support vector.
    dual_coef: Vec<f64>,
    bias: f64,
    gamma: f64,
    kernel: KernelSpec,
}

impl SvmModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: SvmParams) -> Result<Self> {
        let sol = smo_solve(x, y, params, |_| {})?;
        let mut rows = Vec::new();
        let mut dual_coef = Vec::new();
        for (i, &a) in sol.alphas.iter().enumerate() {
            if a > SUPPORT_THRESHOLD {
                rows.push(i);
                dual_coef.push(if y[i] == 1 { a } else { -a });
            }
        }
        Self::from_parts(x.select(Axis(0), &rows), dual_coef, sol.bias, sol.gamma, params.kernel)
    }

    /// Assemble a model, enforcing `0 < |coef| ≤ C` and at least one
    /// support vector.
    pub fn from_parts(support_vectors: Array2<f64>, dual_coef: Vec<f64>, bias: f64, gamma: f64, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        if support_vectors.nrows() == 0 {
            return Err(Error::arg("SVM model without support vectors"));
        }
        check_dim(support_vectors.nrows(), dual_coef.len())?;
        if let Some(bad) = dual_coef.iter().find(|c| c.abs() > kernel.c * (1.0 + 1e-12) || **c == 0.0) {
            return Err(Error::arg(format!("dual coefficient {bad} outside (0, C]")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !bias.is_finite() {
            return Err(Error::arg("gamma must be positive and bias finite"));
        }
        Ok(Self {
            support_vectors,
            dual_coef,
            bias,
            gamma,
            kernel,
        })
    }

    pub fn decision_function(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        check_dim(self.n_features(), x.len())?;
        let spec = &self.kernel;
        Ok(self
            .support_vectors
            .rows()
            .into_iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * kernel_unchecked(spec.kind, spec.degree, self.gamma, sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// `f(x) > 0` → 1, otherwise 0.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<u8> {
        Ok(u8::from(self.decision_function(x)? > 0.0))
    }

    pub fn support_vectors(&self) -> &Array2<f64> {
        &self.support_vectors
    }

    pub fn dual_coef(&self) -> &[f64] {
        &self.dual_coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn n_features(&self) -> usize {
        self.support_vectors.ncols()
    }
}

/// Run SMO on `x`, `y ∈ {0, 1}`. `observe` is called with the multipliers
/// after every accepted pair update.
pub fn smo_solve(x: ArrayView2<'_, f64>, y: &[u8], params: SvmParams, observe: impl FnMut(&[f64])) -> Result<SmoSolution> {
    params.kernel.validate()?;
    let n = y.len();
    check_dim(x.nrows(), n)?;
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::arg("SVM needs samples from both classes"));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(Error::arg("SMO tolerance must be positive"));
    }
    let gamma = resolve_gamma(params.kernel.gamma, x)?;
    let spec = params.kernel;
    let rows: Vec<_> = x.rows().into_iter().collect();
    let mut gram = Array2::<f64>::zeros((n, n));
    gram.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut out)| {
            for j in 0..n {
                out[j] = kernel_unchecked(spec.kind, spec.degree, gamma, rows[i], rows[j]);
            }
        });
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("kernel matrix has non-finite entries".into()));
    }

    let signed: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut smo = Smo {
        gram,
        y: signed,
        c: spec.c,
        tol: params.tol,
        alphas: vec![0.0; n],
        errors: Vec::new(),
        bias: 0.0,
        observe,
    };
    smo.refresh_errors();
    let max_passes = params.max_passes.unwrap_or(10 * n).max(1);
    let passes = smo.run(max_passes)?;

    Ok(SmoSolution {
        kkt_residual: smo.kkt_residual(),
        alphas: smo.alphas,
        bias: smo.bias,
        gamma,
        passes,
    })
}

struct Smo<F> {
    gram: Array2<f64>,
    y: Vec<f64>,
    c: f64,
    tol: f64,
    alphas: Vec<f64>,
    /// `Eᵢ = f(xᵢ) − yᵢ`
    errors: Vec<f64>,
    bias: f64,
    observe: F,
}

impl<F: FnMut(&[f64])> Smo<F> {
    fn run(&mut self, max_passes: usize) -> Result<usize> {
        let n = self.y.len();
        let mut passes = 0;
        loop {
            let mut examine_all = true;
            let mut changed = 0;
            while changed > 0 || examine_all {
                if passes >= max_passes {
                    self.refresh_errors();
                    return Err(Error::Convergence {
                        passes,
                        residual: self.kkt_residual(),
                    });
                }
                passes += 1;
                changed = 0;
                for i in 0..n {
                    if examine_all || self.is_free(i) {
                        changed += usize::from(self.examine(i));
                    }
                }
                if examine_all {
                    examine_all = false;
                } else if changed == 0 {
                    examine_all = true;
                }
            }

            // Accumulated drift in the error cache or a stale bias can leave
            // violations that no pair step repairs; re-derive b and go again.
            self.refresh_errors();
            if self.kkt_residual() <= self.tol {
                return Ok(passes);
            }
            self.reset_bias();
            if self.kkt_residual() <= self.tol {
                return Ok(passes);
            }
        }
    }

    fn is_free(&self, i: usize) -> bool {
        !at_lower(self.alphas[i], self.c) && !at_upper(self.alphas[i], self.c)
    }

    fn violates(&self, i: usize) -> bool {
        let r = self.errors[i] * self.y[i];
        (r < -self.tol && !at_upper(self.alphas[i], self.c)) || (r > self.tol && !at_lower(self.alphas[i], self.c))
    }

    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates(i2) {
            return false;
        }
        let n = self.y.len();
        let e2 = self.errors[i2];

        let mut partner = None;
        let mut best_gap = -1.0;
        for j in (0..n).filter(|&j| self.is_free(j)) {
            let gap = (self.errors[j] - e2).abs();
            if gap > best_gap {
                best_gap = gap;
                partner = Some(j);
            }
        }
        if let Some(j) = partner {
            if self.take_step(j, i2) {
                return true;
            }
        }
        for j in 0..n {
            if self.is_free(j) && Some(j) != partner && self.take_step(j, i2) {
                return true;
            }
        }
        for j in 0..n {
            if !self.is_free(j) && self.take_step(j, i2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alphas[i1], self.alphas[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a2 + a1 - c).max(0.0), (a2 + a1).min(c))
        };
        if hi - lo <= 0.0 {
            return false;
        }

        let k11 = self.gram[[i1, i1]];
        let k12 = self.gram[[i1, i2]];
        let k22 = self.gram[[i2, i2]];
        let eta = k11 + k22 - 2.0 * k12;
        // dual gain along the constraint line for a2 → a2 + t
        let slope = y2 * (e1 - e2);
        let gain = |t: f64| slope * t - 0.5 * eta * t * t;

        let mut new_a2 = if eta > 0.0 {
            (a2 + slope / eta).clamp(lo, hi)
        } else {
            let (g_lo, g_hi) = (gain(lo - a2), gain(hi - a2));
            if g_lo >= g_hi {
                lo
            } else {
                hi
            }
        };
        // snap onto a bound only where the partner stays feasible, so that
        // Σ αᵢyᵢ is preserved to rounding
        let partner = |a2n: f64| a1 + s * (a2 - a2n);
        for bound in [0.0, c] {
            if (new_a2 - bound).abs() < BOUND_SNAP && (0.0..=c).contains(&partner(bound)) {
                new_a2 = bound;
            }
        }
        let mut new_a1 = partner(new_a2);
        for bound in [0.0, c] {
            let shifted = new_a2 + s * (new_a1 - bound);
            if (new_a1 - bound).abs() < BOUND_SNAP && (0.0..=c).contains(&shifted) {
                new_a2 = shifted;
                new_a1 = bound;
            }
        }
        let new_a1 = new_a1.clamp(0.0, c);

        if gain(new_a2 - a2) <= MIN_GAIN || new_a2 == a2 {
            return false;
        }

        let (d1, d2) = (y1 * (new_a1 - a1), y2 * (new_a2 - a2));
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let free = |a: f64| !at_lower(a, c) && !at_upper(a, c);
        let new_bias = if free(new_a1) {
            b1
        } else if free(new_a2) {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_bias - self.bias;

        let col1 = self.gram.column(i1);
        let col2 = self.gram.column(i2);
        for (k, e) in self.errors.iter_mut().enumerate() {
            *e += d1 * col1[k] + d2 * col2[k] + db;
        }
        self.alphas[i1] = new_a1;
        self.alphas[i2] = new_a2;
        self.bias = new_bias;
        (self.observe)(&self.alphas);
        true
    }

    fn decision_without_bias(&self) -> Array1<f64> {
        let coef = Array1::from_iter(self.alphas.iter().zip(&self.y).map(|(a, y)| a * y));
        self.gram.dot(&coef)
    }

    fn refresh_errors(&mut self) {
        let g = self.decision_without_bias();
        self.errors = g
            .iter()
            .zip(&self.y)
            .map(|(gi, yi)| gi + self.bias - yi)
            .collect();
    }

    fn kkt_residual(&self) -> f64 {
        kkt_residual(&self.alphas, &self.y, &self.errors, self.c)
    }

    /// Choose `b` from the KKT conditions: the mean over free multipliers,
    /// or the midpoint of the feasible interval when none are free.
    fn reset_bias(&mut self) {
        let g = self.decision_without_bias();
        let free: Vec<f64> = (0..self.y.len())
            .filter(|&i| self.is_free(i))
            .map(|i| self.y[i] - g[i])
            .collect();
        let bias = if free.is_empty() {
            let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
            for (i, (&a, &y)) in self.alphas.iter().zip(&self.y).enumerate() {
                let edge = y - g[i];
                let lower = (at_lower(a, self.c) && y > 0.0) || (at_upper(a, self.c) && y < 0.0);
                if lower {
                    lb = lb.max(edge);
                } else {
                    ub = ub.min(edge);
                }
            }
            match (lb.is_finite(), ub.is_finite()) {
                (true, true) => 0.5 * (lb + ub),
                (true, false) => lb,
                (false, true) => ub,
                (false, false) => 0.0,
            }
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        };
        self.bias = bias;
        self.refresh_errors();
    }
}

/// Largest KKT violation given multipliers, signed labels and `E = f − y`.
/// Multipliers within 1e-12·C of a bound count as on that bound.
pub fn kkt_residual(alphas: &[f64], y: &[f64], errors: &[f64], c: f64) -> f64 {
    alphas
        .iter()
        .zip(y)
        .zip(errors)
        .map(|((&a, &y), &e)| {
            // y·f − 1 = y·E
            let r = y * e;
            if at_lower(a, c) {
                (-r).max(0.0)
            } else if at_upper(a, c) {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::kernel::{GammaMode, KernelKind};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear(c: f64) -> SvmParams {
        SvmParams::new(KernelSpec::new(KernelKind::Linear, c, GammaMode::Auto, 2).unwrap())
    }

    #[test]
    fn two_point_hand_solution() {
        // dual: max a1 + a2 − ½(a1 + a2)² with a1 = a2 → a = ½, w = 1, b = 0
        let x = array![[-1.0], [1.0]];
        let y = [0u8, 1];
        let sol = smo_solve(x.view(), &y, linear(10.0), |_| {}).unwrap();
        assert!((sol.alphas[0] - 0.5).abs() < 1e-12);
        assert!((sol.alphas[1] - 0.5).abs() < 1e-12);
        assert!(sol.bias.abs() < 1e-6);

        let m = SvmModel::fit(x.view(), &y, linear(10.0)).unwrap();
        assert!(m.decision_function(array![0.0].view()).unwrap().abs() < 1e-6);
        assert_eq!(m.predict(array![-1.0].view()).unwrap(), 0);
        assert_eq!(m.predict(array![1.0].view()).unwrap(), 1);
        // midpoint sits on the boundary; the zero tie goes to 0
        assert_eq!(m.predict(array![0.0].view()).unwrap(), 0);
        assert_eq!(m.support_vectors().nrows(), 2);
    }

    #[test]
    fn box_constraint_and_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u8> = x.rows().into_iter().map(|r| u8::from(r[0] + 0.3 * r[1] + rng.random_range(-0.4..0.4) > 0.0)).collect();
        for c in [0.1, 1.0, 4.0] {
            let params = SvmParams::new(KernelSpec::new(KernelKind::Rbf, c, GammaMode::Scale, 2).unwrap());
            let sol = smo_solve(x.view(), &y, params, |_| {}).unwrap();
            assert!(sol.alphas.iter().all(|&a| (0.0..=c).contains(&a)));
            let balance: f64 = sol.alphas.iter().zip(&y).map(|(a, &l)| if l == 1 { *a } else { -a }).sum();
            assert!(balance.abs() <= 1e-8, "{balance}");
            assert!(sol.kkt_residual <= params.tol);
        }
    }

    #[test]
    fn rejects_single_class_and_bad_model() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(SvmModel::fit(x.view(), &[1, 1], linear(1.0)), Err(Error::InvalidArgument(_))));
        let empty = SvmModel::from_parts(Array2::zeros((0, 1)), vec![], 0.0, 1.0, linear(1.0).kernel);
        assert!(matches!(empty, Err(Error::InvalidArgument(_))));
        let too_big = SvmModel::from_parts(array![[1.0]], vec![2.0], 0.0, 1.0, linear(1.0).kernel);
        assert!(too_big.is_err());
    }

    #[test]
    fn convergence_error_reports_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((30, 2), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let mut params = linear(100.0);
        params.max_passes = Some(1);
        match smo_solve(x.view(), &y, params, |_| {}) {
            Err(Error::Convergence { passes, residual }) => {
                assert_eq!(passes, 1);
                assert!(residual > params.tol);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let x = array![[-1.0, 0.0], [1.0, 0.0]];
        let m = SvmModel::fit(x.view(), &[0, 1], linear(1.0)).unwrap();
        assert!(matches!(m.predict(array![1.0].view()), Err(Error::DimensionMismatch { .. })));
    }
}
