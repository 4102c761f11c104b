//! Small dense symmetric-matrix kernels: cyclic Jacobi eigendecomposition,
//! Cholesky with optional diagonal jitter, and the symmetric square root.
//!
//! The matrices handled here are tiny (2x2 and 3x3 representation blocks)
//! or moderate (the d^2 x d^2 entry covariance, 100x100 at d = 10), so a
//! dependency-free Jacobi solver is accurate and fast enough.

use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with `a = V diag(w) V^T`; the
/// eigenvalues are sorted ascending and `V`'s columns follow the same order.
pub fn sym_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);

    let off = |m: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += m[[p, q]] * m[[p, q]];
            }
        }
        s.sqrt()
    };
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);

    for _sweep in 0..64 {
        if off(&m) <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());
    let w = Array1::from_iter(idx.iter().map(|&i| m[[i, i]]));
    let mut vs = Array2::<f64>::zeros((n, n));
    for (new, &old) in idx.iter().enumerate() {
        for k in 0..n {
            vs[[k, new]] = v[[k, old]];
        }
    }
    (w, vs)
}

/// Symmetric square root `a^{1/2} = V diag(sqrt(w)) V^T`.
///
/// Eigenvalues in `[-tol, 0)` are treated as round-off and clamped to zero;
/// anything below `-tol` is rejected.
pub fn sym_sqrt(a: &Array2<f64>, tol: f64) -> Result<Array2<f64>> {
    let (w, v) = sym_eigen(a);
    let n = a.nrows();
    let mut sq = Array2::<f64>::zeros((n, n));
    let mut roots = Vec::with_capacity(n);
    for &wi in w.iter() {
        if wi < -tol {
            return Err(Error::Domain(format!(
                "matrix square root of an indefinite matrix (eigenvalue {wi:.3e})"
            )));
        }
        roots.push(wi.max(0.0).sqrt());
    }
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += v[[i, k]] * roots[k] * v[[j, k]];
            }
            sq[[i, j]] = s;
        }
    }
    Ok(sq)
}

/// Lower-triangular Cholesky factor of a symmetric PSD matrix.
///
/// If the plain factorisation hits a non-positive pivot, a diagonal jitter
/// of at most `max_jitter` is added before giving up.
pub fn cholesky(a: &Array2<f64>, max_jitter: f64) -> Result<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut jitter = 0.0;
    loop {
        match try_cholesky(a, jitter) {
            Some(l) => return Ok(l),
            None => {
                jitter = if jitter == 0.0 { max_jitter * 1e-4 } else { jitter * 10.0 };
                if jitter > max_jitter {
                    return Err(Error::Domain(
                        "covariance is not positive semidefinite (Cholesky failed)".into(),
                    ));
                }
            }
        }
    }
}

fn try_cholesky(a: &Array2<f64>, jitter: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                // exact zero pivots are fine for semidefinite inputs
                if s < 0.0 {
                    return None;
                }
                l[[i, j]] = s.sqrt();
            } else {
                let p = l[[j, j]];
                l[[i, j]] = if p > 0.0 { s / p } else { 0.0 };
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_recovers_known_spectrum() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (w, v) = sym_eigen(&a);
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] - 3.0).abs() < 1e-12);
        // reconstruct
        for i in 0..2 {
            for j in 0..2 {
                let r: f64 = (0..2).map(|k| v[[i, k]] * w[k] * v[[j, k]]).sum();
                assert!((r - a[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_handles_bigger_random_symmetric() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let (w, v) = sym_eigen(&a);
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| v[[i, k]] * w[k] * v[[j, k]]).sum();
                err = err.max((r - a[[i, j]]).abs());
            }
        }
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn sqrt_squares_back() {
        let a = array![[4.0, 2.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]];
        let s = sym_sqrt(&a, 1e-12).unwrap();
        let s2 = s.dot(&s);
        for i in 0..3 {
            for j in 0..3 {
                assert!((s2[[i, j]] - a[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(sym_sqrt(&a, 1e-12).is_err());
    }

    #[test]
    fn cholesky_roundtrip_and_semidefinite() {
        let a = array![[4.0, 2.0], [2.0, 2.0]];
        let l = cholesky(&a, 1e-10).unwrap();
        let r = l.dot(&l.t());
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[[i, j]] - a[[i, j]]).abs() < 1e-12);
            }
        }
        // rank-deficient but semidefinite
        let b = array![[1.0, 1.0], [1.0, 1.0]];
        let l = cholesky(&b, 1e-10).unwrap();
        let r = l.dot(&l.t());
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[[i, j]] - b[[i, j]]).abs() < 1e-9);
            }
        }
    }
}
