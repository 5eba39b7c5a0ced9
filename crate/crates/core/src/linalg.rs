//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.

use ndarray::{Array1, Array2};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and matching unit eigenvectors (as columns) of a
/// symmetric matrix. Only the upper triangle of `a` is read.
pub(crate) fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");

    let mut m = a.clone();
    for i in 0..n {
        for j in 0..i {
            m[[i, j]] = m[[j, i]];
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (Array1::zeros(n), v);
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        if off == 0.0 || off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let (app, aqq) = (m[[p, p]], m[[q, q]]);
                let g = 100.0 * apq.abs();
                if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    // below the diagonal's precision
                    m[[p, q]] = 0.0;
                    m[[q, p]] = 0.0;
                    continue;
                }
                // annihilate m[p][q]: t = tan(theta), smaller root for stability
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (arp, arq) = (m[[r, p]], m[[r, q]]);
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    m[[r, p]] = new_rp;
                    m[[p, r]] = new_rp;
                    m[[r, q]] = new_rq;
                    m[[q, r]] = new_rq;
                }
                for r in 0..n {
                    let (vrp, vrq) = (v[[r, p]], v[[r, q]]);
                    v[[r, p]] = vrp - s * (vrq + tau * vrp);
                    v[[r, q]] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix() {
        let a = Array2::from_diag(&Array1::from(vec![1.0, 5.0, 3.0]));
        let (vals, vecs) = symmetric_eigen(&a);
        assert_eq!(vals.to_vec(), vec![5.0, 3.0, 1.0]);
        assert_eq!(vecs[[1, 0]].abs(), 1.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1
        let a = ndarray::array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        assert!((vecs[[0, 0]].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 3, 8, 25] {
            let b = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
            let a = &b + &b.t();
            let (vals, vecs) = symmetric_eigen(&a);
            let rebuilt = vecs.dot(&Array2::from_diag(&vals)).dot(&vecs.t());
            for (x, y) in rebuilt.iter().zip(a.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
            let gram = vecs.t().dot(&vecs);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[[i, j]] - want).abs() < 1e-12);
                }
            }
            assert!(vals.windows(2).into_iter().all(|w| w[0] >= w[1]));
        }
    }
}
