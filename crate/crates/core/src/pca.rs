//! Principal component analysis for wide data (`d ≫ n`).
//!
//! Components come from the `n × n` Gram matrix of centered rows rather
//! than the `d × d` covariance. If `G = Xc Xcᵀ = V Λ Vᵀ`, then the unit
//! covariance eigenvectors are `Xcᵀ vᵢ / √λᵢ` and the explained variances
//! are `λᵢ / (n − 1)`. This is exact for the top `n − 1` components.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{check_dim, Error, Result};
use crate::linalg::symmetric_eigen;

/// Relative eigenvalue below which a Gram eigenvector carries no usable
/// direction; such components are completed with an orthonormal filler.
const RANK_TOL: f64 = 1e-12;

/// Fitted PCA: mean, `k` orthonormal components (rows of `components`)
/// and their explained variances, both in descending variance order.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    components: Array2<f64>,
    explained_variance: Array1<f64>,
}

impl PcaModel {
    /// Fit `k` components on the rows of `x` (`n × d`).
    ///
    /// Requires `n ≥ 2` and `1 ≤ k ≤ min(n − 1, d)`.
    pub fn fit(x: ArrayView2<'_, f64>, k: usize) -> Result<Self> {
        let (n, d) = x.dim();
        if n < 2 {
            return Err(Error::arg(format!("PCA needs at least 2 rows, got {n}")));
        }
        let max_k = (n - 1).min(d);
        if k == 0 || k > max_k {
            return Err(Error::arg(format!(
                "component count {k} outside 1..={max_k} for {n} rows of dimension {d}"
            )));
        }

        let mean = x.mean_axis(Axis(0)).expect("n >= 2");
        let centered = &x - &mean.view().insert_axis(Axis(0));
        let gram = centered.dot(&centered.t());
        let (eigvals, eigvecs) = symmetric_eigen(&gram);

        let top = eigvals[0].max(0.0);
        // row i = Xcᵀ vᵢ / √λᵢ
        let mut components = eigvecs.slice(s![.., ..k]).t().dot(&centered);
        let mut explained_variance = Array1::<f64>::zeros(k);
        for (i, mut row) in components.axis_iter_mut(Axis(0)).enumerate() {
            let lambda = eigvals[i];
            explained_variance[i] = (lambda / (n - 1) as f64).max(0.0);
            if lambda > RANK_TOL * top && lambda > 0.0 {
                row /= lambda.sqrt();
            } else {
                row.fill(0.0);
            }
        }
        orthonormalize(&mut components);
        for mut row in components.axis_iter_mut(Axis(0)) {
            fix_sign(row.as_slice_mut().expect("standard layout"));
        }

        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    /// Build a model from parts, checking shapes.
    pub fn from_parts(mean: Array1<f64>, components: Array2<f64>, explained_variance: Array1<f64>) -> Result<Self> {
        check_dim(mean.len(), components.ncols())?;
        check_dim(components.nrows(), explained_variance.len())?;
        if components.nrows() == 0 {
            return Err(Error::arg("PCA model needs at least one component"));
        }
        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    /// `k × d`; row `i` is the `i`-th component.
    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &Array1<f64> {
        &self.explained_variance
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Project rows of `x` (`m × d`) to `m × k` scores.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_dim(self.dim(), x.ncols())?;
        let centered = &x - &self.mean.view().insert_axis(Axis(0));
        Ok(centered.dot(&self.components.t()))
    }

    /// Project one vector.
    pub fn transform_one(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_dim(self.dim(), x.len())?;
        let centered = &x - &self.mean;
        Ok(self.components.dot(&centered))
    }

    /// `mean + Σ scoreᵢ · componentᵢ`.
    pub fn inverse_transform(&self, scores: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_dim(self.n_components(), scores.len())?;
        Ok(&self.mean + &self.components.t().dot(&scores))
    }

    /// Text form: `mean,` + d fields; k component lines; one line of
    /// variances. `exact` writes shortest round-trip floats, otherwise nine
    /// significant digits.
    pub(crate) fn write_text(&self, out: &mut String, exact: bool) {
        let fmt = |out: &mut String, v: f64| {
            if exact {
                let _ = write!(out, "{v:?}");
            } else {
                let _ = write!(out, "{v:.8e}");
            }
        };
        out.push_str("mean");
        for &v in &self.mean {
            out.push(',');
            fmt(out, v);
        }
        out.push('\n');
        for row in self.components.axis_iter(Axis(0)) {
            for (j, &v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                fmt(out, v);
            }
            out.push('\n');
        }
        for (j, &v) in self.explained_variance.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            fmt(out, v);
        }
        out.push('\n');
    }

    /// Parse the text form from `lines`, which must start at the `mean`
    /// line. `first_line` is the 1-based number of that line, for errors.
    pub(crate) fn read_text<'a>(lines: &mut impl Iterator<Item = &'a str>, first_line: usize) -> Result<(Self, usize)> {
        let mut lineno = first_line;
        let mean_line = lines.next().ok_or_else(|| Error::parse(lineno, "missing mean line"))?;
        let rest = mean_line
            .strip_prefix("mean,")
            .ok_or_else(|| Error::parse(lineno, "expected line starting with \"mean,\""))?;
        let mean = parse_floats(rest, lineno)?;
        let d = mean.len();

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let variances = loop {
            lineno += 1;
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing explained-variance line"))?;
            let vals = parse_floats(line, lineno)?;
            if vals.len() == d && rows.len() < d {
                rows.push(vals);
                continue;
            }
            if vals.len() != rows.len() || rows.is_empty() {
                return Err(Error::parse(
                    lineno,
                    format!("expected {d} component fields or {} variances, found {}", rows.len(), vals.len()),
                ));
            }
            break vals;
        };
        let k = rows.len();
        let components = Array2::from_shape_vec((k, d), rows.into_iter().flatten().collect())
            .expect("row widths checked");
        let model = Self::from_parts(Array1::from(mean), components, Array1::from(variances))
            .map_err(|e| Error::parse(lineno, e.to_string()))?;
        Ok((model, lineno - first_line + 1))
    }
}

fn parse_floats(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.trim()
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("non-numeric field {tok:?}")))
        })
        .collect()
}

/// Modified Gram-Schmidt (two passes) over the rows. Rows that vanish are
/// replaced by the first standard basis vector not yet in the span.
fn orthonormalize(rows: &mut Array2<f64>) {
    let (k, d) = rows.dim();
    let mut next_basis = 0;
    for i in 0..k {
        loop {
            for _ in 0..2 {
                let (done, mut rest) = rows.view_mut().split_at(Axis(0), i);
                let mut row = rest.row_mut(0);
                for prev in done.rows() {
                    let proj = row.dot(&prev);
                    row.scaled_add(-proj, &prev);
                }
            }
            let norm = rows.row(i).dot(&rows.row(i)).sqrt();
            if norm > 1e-6 || next_basis >= d {
                rows.row_mut(i).mapv_inplace(|v| v / norm);
                break;
            }
            let mut row = rows.row_mut(i);
            row.fill(0.0);
            row[next_basis] = 1.0;
            next_basis += 1;
        }
    }
}

/// Flip `v` so its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Save with nine significant digits.
pub fn save_pca(model: &PcaModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    model.write_text(&mut text, false);
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_pca(path: impl AsRef<Path>) -> Result<PcaModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let (model, _) = PcaModel::read_text(&mut lines, 1)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    fn assert_orthonormal(m: &PcaModel, tol: f64) {
        let g = m.components().dot(&m.components().t());
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - want).abs() <= tol, "G[{i},{j}] = {}", g[[i, j]]);
            }
        }
    }

    #[test]
    fn rank_one_line_captures_all_variance() {
        let dir = array![1.0, -2.0, 0.5, 3.0, 1.5];
        let offset = array![0.3, 0.1, -0.7, 2.0, 0.0];
        let x = Array2::from_shape_fn((10, 5), |(i, j)| offset[j] + (i as f64 - 4.5) * 0.37 * dir[j]);
        let total: f64 = x.var_axis(Axis(0), 1.0).sum();
        let m = PcaModel::fit(x.view(), 1).unwrap();
        assert!(m.explained_variance()[0] / total >= 1.0 - 1e-9);
    }

    #[test]
    fn argument_errors() {
        let x = random_matrix(5, 3, 1);
        assert!(matches!(PcaModel::fit(x.view(), 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(PcaModel::fit(x.view(), 4), Err(Error::InvalidArgument(_))));
        assert!(PcaModel::fit(x.view(), 3).is_ok());
        let one = random_matrix(1, 3, 1);
        assert!(matches!(PcaModel::fit(one.view(), 1), Err(Error::InvalidArgument(_))));
        let m = PcaModel::fit(x.view(), 2).unwrap();
        assert!(matches!(
            m.transform_one(array![1.0, 2.0].view()),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn transform_of_mean_and_component() {
        let x = random_matrix(12, 40, 3);
        let m = PcaModel::fit(x.view(), 5).unwrap();
        let z = m.transform_one(m.mean().view()).unwrap();
        assert_eq!(z.len(), 5);
        assert!(z.iter().all(|v| v.abs() <= 1e-10));
        let shifted = m.mean() + &m.components().row(0);
        let z = m.transform_one(shifted.view()).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-10);
        assert!(z.iter().skip(1).all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn sign_convention_and_ordering() {
        let x = random_matrix(15, 30, 9);
        let m = PcaModel::fit(x.view(), 14).unwrap();
        assert_orthonormal(&m, 1e-10);
        for row in m.components().axis_iter(Axis(0)) {
            let max = row.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(max > 0.0);
        }
        let ev = m.explained_variance();
        assert!(ev.windows(2).into_iter().all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_components_stay_orthonormal() {
        // two distinct rows repeated: centered rank 1, ask for 3 components
        let x = Array2::from_shape_fn((6, 4), |(i, j)| if i % 2 == 0 { j as f64 } else { -(j as f64) });
        let m = PcaModel::fit(x.view(), 3).unwrap();
        assert_orthonormal(&m, 1e-10);
        assert!(m.explained_variance()[1].abs() < 1e-10);
    }

    #[test]
    fn text_roundtrip_nine_digits() {
        let x = random_matrix(8, 6, 4);
        let m = PcaModel::fit(x.view(), 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.txt");
        save_pca(&m, &path).unwrap();
        let back = load_pca(&path).unwrap();
        assert_eq!(back.n_components(), 6);
        for (a, b) in m.components().iter().zip(back.components()) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300) + 1e-300 || (a - b).abs() < 1e-9);
        }
        let mut exact = String::new();
        m.write_text(&mut exact, true);
        let (again, used) = PcaModel::read_text(&mut exact.lines(), 1).unwrap();
        assert_eq!(used, 8);
        assert_eq!(again, m);
    }
}
