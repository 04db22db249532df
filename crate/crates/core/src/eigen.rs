//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;

/// Eigenpairs sorted by descending eigenvalue; column `i` of `vectors`
/// belongs to `values[i]`.
pub(crate) struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const MAX_SWEEPS: usize = 100;

#[inline]
fn rotate(a: &mut Matrix, s: f64, tau: f64, (i, j): (usize, usize), (k, l): (usize, usize)) {
    let g = a[(i, j)];
    let h = a[(k, l)];
    a[(i, j)] = g - s * (h + g * tau);
    a[(k, l)] = h + s * (g - h * tau);
}

/// Only the upper triangle of `m` is read.
pub(crate) fn symmetric_eigen(m: &Matrix) -> SymmetricEigen {
    let n = m.rows();
    assert_eq!(n, m.cols(), "eigendecomposition needs a square matrix");
    let mut a = m.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v[(i, i)] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].abs()).sum();
        if off == 0.0 {
            break;
        }
        let thresh = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[(p, q)] = 0.0;
                } else if apq.abs() > thresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + libm::sqrt(1.0 + theta * theta));
                        if theta < 0.0 { -t } else { t }
                    };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[(p, q)] = 0.0;
                    for j in 0..p {
                        rotate(&mut a, s, tau, (j, p), (j, q));
                    }
                    for j in p + 1..q {
                        rotate(&mut a, s, tau, (p, j), (j, q));
                    }
                    for j in q + 1..n {
                        rotate(&mut a, s, tau, (p, j), (q, j));
                    }
                    for j in 0..n {
                        rotate(&mut v, s, tau, (j, p), (j, q));
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, src)];
        }
    }
    SymmetricEigen { values, vectors }
}
