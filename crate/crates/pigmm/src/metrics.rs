//! Deviation measures, the normalised change, Pearson correlation, and
//! the block-wise Wasserstein distance between two models.

use crate::linalg;
use crate::model::{psd_check, to_blocks, ModelParams, PSD_TOLERANCE};
use crate::{Error, Result};
use ndarray::Array2;

/// Distance of an observed ensemble average from a reference expectation,
/// in units of the reference standard error.
pub fn deviation_lq(observed: f64, expectation: f64, se: f64) -> Result<f64> {
    if se <= 0.0 {
        return Err(Error::Domain(format!("standard error must be positive, got {se}")));
    }
    Ok((observed - expectation).abs() / se)
}

/// Distance of a model-predicted value from the ensemble average, in units
/// of the ensemble's sample standard deviation (not the standard error).
pub fn deviation_cq(theory: f64, exp_mean: f64, exp_std: f64) -> Result<f64> {
    if exp_std <= 0.0 {
        return Err(Error::Domain(format!("ensemble spread must be positive, got {exp_std}")));
    }
    Ok((theory - exp_mean).abs() / exp_std)
}

/// `(final - start) / (final + start)`, bounded in `[-1, 1]` for
/// nonnegative deviations: -1 means the fit became perfect, +1 that the
/// deviation blew up from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedChange {
    pub value: f64,
    /// Both inputs were zero; the ratio is undefined and reported as 0.
    pub undefined: bool,
}

pub fn normalized_change(d_start: f64, d_final: f64) -> NormalizedChange {
    let sum = d_start + d_final;
    if sum == 0.0 {
        NormalizedChange { value: 0.0, undefined: true }
    } else {
        NormalizedChange { value: (d_final - d_start) / sum, undefined: false }
    }
}

/// Pearson product-moment correlation coefficient.
pub fn pmcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Argument(format!(
            "need two equal-length vectors of at least 2 points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        syy += (yi - my) * (yi - my);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain("correlation undefined for zero-variance input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn block_array2(b: &[[f64; 2]; 2]) -> Array2<f64> {
    Array2::from_shape_fn((2, 2), |(i, j)| b[i][j])
}

fn block_array3(b: &[[f64; 3]; 3]) -> Array2<f64> {
    Array2::from_shape_fn((3, 3), |(i, j)| b[i][j])
}

fn trace(m: &Array2<f64>) -> f64 {
    (0..m.nrows()).map(|i| m[[i, i]]).sum()
}

fn cross_trace_oriented(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let ra = linalg::sym_sqrt(a, PSD_TOLERANCE)?;
    let inner = ra.dot(b).dot(&ra);
    // symmetrise away round-off before the second root
    let n = inner.nrows();
    let sym = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (inner[[i, j]] + inner[[j, i]]));
    // the product of PSD factors may carry slightly larger round-off than
    // the inputs themselves
    let scale = sym.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let root = linalg::sym_sqrt(&sym, 1e-9 * scale)?;
    Ok(trace(&root))
}

/// `Tr (A^{1/2} B A^{1/2})^{1/2}`, symmetric in its arguments; evaluating
/// both orientations and averaging keeps the distance exactly symmetric
/// under argument exchange despite round-off.
fn cross_trace(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    Ok(0.5 * (cross_trace_oriented(a, b)? + cross_trace_oriented(b, a)?))
}

/// Wasserstein-2 distance between two models with the same dimension.
///
/// Both distributions factor over the four irreducible sectors, so the
/// squared distance is the mean-shift term plus sector-wise Bures terms
/// weighted by the sector dimensions:
///
/// ```text
/// d^2 = (mu1-mu1')^2 + (mu2-mu2')^2
///     + Tr S + Tr S' - 2 Tr (S^{1/2} S' S^{1/2})^{1/2}
/// ```
///
/// with the traces expanding as `TrS = sum_a (S_V0)_aa
/// + (d-1) sum_a (S_VH)_aa + d(d-3)/2 s_V2 + (d-1)(d-2)/2 s_V3` and the
/// scalar sectors contributing `sqrt(s s')` to the cross term.
pub fn wasserstein(a: &ModelParams, b: &ModelParams) -> Result<f64> {
    if a.d != b.d {
        return Err(Error::Argument(format!("dimension mismatch: {} vs {}", a.d, b.d)));
    }
    for (tag, p) in [("first", a), ("second", b)] {
        let report = psd_check(p);
        if !report.is_valid {
            return Err(Error::Domain(format!(
                "{tag} model is not positive semidefinite (min eigenvalues V0 {:.3e}, VH {:.3e})",
                report.min_eig_v0, report.min_eig_vh
            )));
        }
    }
    let d = a.d as f64;
    let ba = to_blocks(a);
    let bb = to_blocks(b);

    let mult_vh = d - 1.0;
    let mult_v2 = d * (d - 3.0) / 2.0;
    let mult_v3 = (d - 1.0) * (d - 2.0) / 2.0;

    let a0 = block_array2(&ba.s_v0);
    let b0 = block_array2(&bb.s_v0);
    let ah = block_array3(&ba.s_vh);
    let bh = block_array3(&bb.s_vh);

    let mean_term =
        (ba.mu[0] - bb.mu[0]).powi(2) + (ba.mu[1] - bb.mu[1]).powi(2);
    let trace_term = trace(&a0)
        + trace(&b0)
        + mult_vh * (trace(&ah) + trace(&bh))
        + mult_v2 * (ba.s_v2 + bb.s_v2)
        + mult_v3 * (ba.s_v3 + bb.s_v3);
    let cross = cross_trace(&a0, &b0)?
        + mult_vh * cross_trace(&ah, &bh)?
        + mult_v2 * (ba.s_v2.max(0.0) * bb.s_v2.max(0.0)).sqrt()
        + mult_v3 * (ba.s_v3.max(0.0) * bb.s_v3.max(0.0)).sqrt();

    let mut d2 = mean_term + trace_term - 2.0 * cross;
    if d2 < 0.0 {
        // round-off in the cross terms scales with the trace magnitude,
        // in particular near rank-deficient blocks
        let clamp = 1e-10 * trace_term.max(1.0);
        if d2 < -clamp {
            return Err(Error::Numeric(format!("squared distance came out negative: {d2:.3e}")));
        }
        d2 = 0.0;
    }
    Ok(d2.sqrt())
}

/// Wasserstein-2 distance between two dense Gaussians given by mean
/// vectors and covariance matrices. This is the generic formula the block
/// version is checked against in tests; it is also usable on its own.
pub fn dense_gaussian_wasserstein(
    mean_a: &[f64],
    cov_a: &Array2<f64>,
    mean_b: &[f64],
    cov_b: &Array2<f64>,
) -> Result<f64> {
    if mean_a.len() != mean_b.len() || cov_a.dim() != cov_b.dim() {
        return Err(Error::Argument("dimension mismatch".into()));
    }
    let mean_term: f64 = mean_a.iter().zip(mean_b).map(|(x, y)| (x - y) * (x - y)).sum();
    let scale = cov_a.iter().chain(cov_b.iter()).fold(1.0f64, |acc, x| acc.max(x.abs()));
    let ra = linalg::sym_sqrt(cov_a, 1e-9 * scale)?;
    let inner = ra.dot(cov_b).dot(&ra);
    let n = inner.nrows();
    let sym = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (inner[[i, j]] + inner[[j, i]]));
    let root = linalg::sym_sqrt(&sym, 1e-7 * scale * scale)?;
    let d2 = mean_term + trace(cov_a) + trace(cov_b) - 2.0 * trace(&root);
    Ok(d2.max(0.0).sqrt())
}
