//! The 13-parameter permutation-invariant Gaussian matrix model (PIGMM).
//!
//! A PIGMM over d x d real matrices is the most general Gaussian whose
//! density is invariant under simultaneous row/column permutation. Its 13
//! parameters are, in order,
//!
//! ```text
//! f = (mu~1, mu~2,
//!      (L_V0^-1)_11, (L_V0^-1)_12, (L_V0^-1)_22,
//!      (L_VH^-1)_11, (L_VH^-1)_12, (L_VH^-1)_13,
//!      (L_VH^-1)_22, (L_VH^-1)_23, (L_VH^-1)_33,
//!      L_V2^-1, L_V3^-1)
//! ```
//!
//! i.e. two mean components plus the covariance blocks of the four
//! irreducible sectors V0, VH, V2, V3 (dimensions 1, d-1, d(d-3)/2,
//! (d-1)(d-2)/2 with multiplicities 2, 3, 1, 1).
//!
//! Three coordinate systems are bijective for d >= 4 and all supported
//! here:
//!   * `ModelParams`    -- the 13 parameters above;
//!   * the expectations of the 13 linear/quadratic invariants;
//!   * `PatternMoments` -- entry-level first/second moments per
//!     index-coincidence class, which is what sampling and the Wick
//!     engine consume.

use crate::invariants::INVARIANT_COUNT;
use crate::linalg;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const PARAM_COUNT: usize = 13;
pub const LQ_COUNT: usize = 13;

/// The 13 PIGMM parameters together with the matrix dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub d: usize,
    pub f: [f64; PARAM_COUNT],
}

/// Index-coincidence class of an unordered pair of matrix entries
/// `(W_e1, W_e2)`. Letters in the doc names are pairwise distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    /// (ii, ii)
    DiagSame = 0,
    /// (ii, jj)
    DiagDiag = 1,
    /// (ii, ij): the off-diagonal edge leaves the looped node
    DiagOut = 2,
    /// (ii, ji): the off-diagonal edge enters the looped node
    DiagIn = 3,
    /// (ii, jk)
    DiagFar = 4,
    /// (ij, ij)
    OffSame = 5,
    /// (ij, ji)
    OffTranspose = 6,
    /// (ij, ik)
    OffShareSource = 7,
    /// (ij, kj)
    OffShareTarget = 8,
    /// (ij, jk) -- and its relabelling (ij, ki)
    OffChain = 9,
    /// (ij, kl)
    OffDisjoint = 10,
}

pub const PAIR_CLASS_COUNT: usize = 11;

/// Classify the coincidence pattern of two directed edges.
pub fn classify(e1: (usize, usize), e2: (usize, usize)) -> PairClass {
    let (a1, b1) = e1;
    let (a2, b2) = e2;
    match (a1 == b1, a2 == b2) {
        (true, true) => {
            if a1 == a2 {
                PairClass::DiagSame
            } else {
                PairClass::DiagDiag
            }
        }
        (true, false) => {
            if a1 == a2 {
                PairClass::DiagOut
            } else if a1 == b2 {
                PairClass::DiagIn
            } else {
                PairClass::DiagFar
            }
        }
        (false, true) => classify(e2, e1),
        (false, false) => {
            if a1 == a2 && b1 == b2 {
                PairClass::OffSame
            } else if a1 == b2 && b1 == a2 {
                PairClass::OffTranspose
            } else if a1 == a2 {
                PairClass::OffShareSource
            } else if b1 == b2 {
                PairClass::OffShareTarget
            } else if b1 == a2 || a1 == b2 {
                PairClass::OffChain
            } else {
                PairClass::OffDisjoint
            }
        }
    }
}

/// Entry-level first and second moments of a permutation-invariant matrix
/// distribution: one mean per orbit (diagonal / off-diagonal) and one
/// second moment per [`PairClass`].
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMoments {
    pub d: usize,
    /// `<W_ii>`
    pub mean_diag: f64,
    /// `<W_ij>`, i != j
    pub mean_off: f64,
    /// `<W_e1 W_e2>` per coincidence class, indexed by `PairClass as usize`.
    pub second: [f64; PAIR_CLASS_COUNT],
}

impl PatternMoments {
    pub fn mean_of(&self, edge: (usize, usize)) -> f64 {
        if edge.0 == edge.1 {
            self.mean_diag
        } else {
            self.mean_off
        }
    }

    pub fn second_moment(&self, e1: (usize, usize), e2: (usize, usize)) -> f64 {
        self.second[classify(e1, e2) as usize]
    }

    pub fn covariance(&self, e1: (usize, usize), e2: (usize, usize)) -> f64 {
        self.second_moment(e1, e2) - self.mean_of(e1) * self.mean_of(e2)
    }

    /// Dense mean vector over the d^2 entries, row-major.
    pub fn dense_mean(&self) -> Array1<f64> {
        let d = self.d;
        Array1::from_shape_fn(d * d, |k| self.mean_of((k / d, k % d)))
    }

    /// Dense d^2 x d^2 entry covariance, row-major entry order.
    pub fn dense_covariance(&self) -> Array2<f64> {
        let d = self.d;
        Array2::from_shape_fn((d * d, d * d), |(p, q)| {
            self.covariance((p / d, p % d), (q / d, q % d))
        })
    }
}

/// Representation-block view of the model: the two mean components and the
/// covariance blocks of the four irreducible sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGaussian {
    pub d: usize,
    pub mu: [f64; 2],
    pub s_v0: [[f64; 2]; 2],
    pub s_vh: [[f64; 3]; 3],
    pub s_v2: f64,
    pub s_v3: f64,
}

impl BlockGaussian {
    /// Dimensions of the sectors (V0, VH, V2, V3); they satisfy
    /// `2*1 + 3*(d-1) + d(d-3)/2 + (d-1)(d-2)/2 = d^2` counting multiplicities.
    pub fn sector_dims(d: usize) -> [usize; 4] {
        [1, d - 1, d * (d - 3) / 2, (d - 1) * (d - 2) / 2]
    }
}

fn check_dim(d: usize) -> Result<f64> {
    if d < 4 {
        return Err(Error::Domain(format!(
            "model operations need d >= 4 (V2 sector and the (d-3) fit factors), got {d}"
        )));
    }
    Ok(d as f64)
}

/// Fit the 13 parameters from the ensemble averages of the linear and
/// quadratic invariants, by the closed-form inversion of the moment
/// relations. `lq[k]` holds the average of `I_{k+1}`.
pub fn fit_params(lq: &[f64; LQ_COUNT], d: usize) -> Result<ModelParams> {
    let dd = check_dim(d)?;
    let i = |k: usize| lq[k - 1];
    let s1 = (dd - 1.0).sqrt();
    let s2 = (dd - 2.0).sqrt();

    let f1 = i(2) / dd;
    let f2 = (dd * i(1) - i(2)) / (dd * s1);
    let f3 = -(i(2) * i(2) - i(10)) / (dd * dd);
    let f4 = -(dd * i(1) * i(2) - i(2) * i(2) + i(10) - dd * i(13)) / (dd * dd * s1);
    let f5 = -(dd * dd * i(1) * i(1) - 2.0 * dd * i(1) * i(2) + i(2) * i(2)
        - i(10)
        - dd * dd * i(12)
        + 2.0 * dd * i(13))
        / (dd * dd * (dd - 1.0));
    let f6 = (dd * i(8) - i(10)) / (dd * dd * (dd - 1.0));
    let f7 = (dd * i(9) - i(10)) / (dd * dd * (dd - 1.0));
    let f8 = (dd * dd * i(6) - dd * i(8) - dd * i(9) + 2.0 * i(10) - dd * i(13))
        / (dd * dd * (dd - 1.0) * s2);
    let f9 = (dd * i(7) - i(10)) / (dd * dd * (dd - 1.0));
    let f10 = (dd * dd * i(5) - dd * i(7) - dd * i(9) + 2.0 * i(10) - dd * i(13))
        / (dd * dd * (dd - 1.0) * s2);
    let f11 = -(2.0 * dd * dd * i(5) + 2.0 * dd * dd * i(6)
        - dd * i(7)
        - dd * i(8)
        - 2.0 * dd * i(9)
        + 4.0 * i(10)
        - dd * dd * dd * i(11)
        + dd * dd * i(12)
        - 4.0 * dd * i(13))
        / (dd * dd * (dd - 1.0) * (dd - 2.0));
    let f12 = ((dd - 1.0) * (dd - 2.0) * i(3)
        + (dd - 1.0) * (dd - 2.0) * i(4)
        + 4.0 * (dd - 1.0) * i(5)
        + 4.0 * (dd - 1.0) * i(6)
        - (dd - 1.0) * i(7)
        - (dd - 1.0) * i(8)
        - 2.0 * (dd - 1.0) * i(9)
        + 2.0 * i(10)
        - 2.0 * dd * (dd - 1.0) * i(11)
        + 2.0 * i(12)
        - 4.0 * i(13))
        / (dd * (dd - 1.0) * (dd - 2.0) * (dd - 3.0));
    let f13 = (dd * i(3) - dd * i(4) - i(7) - i(8) + 2.0 * i(9)) / (dd * (dd - 1.0) * (dd - 2.0));

    Ok(ModelParams { d, f: [f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13] })
}

/// Population expectations of the 13 linear/quadratic invariants under the
/// model: the exact inverse of [`fit_params`] in the infinite-ensemble
/// limit, obtained by solving the fit relations triangularly (products of
/// sample means become products of expectations).
pub fn expected_lq_invariants(params: &ModelParams) -> Result<[f64; LQ_COUNT]> {
    let dd = check_dim(params.d)?;
    let f = &params.f;
    let s1 = (dd - 1.0).sqrt();
    let s2 = (dd - 2.0).sqrt();

    let i2 = dd * f[0];
    let i1 = s1 * f[1] + f[0];
    let i10 = dd * dd * f[2] + i2 * i2;
    let i13 = (dd * dd * s1 * f[3] + dd * i1 * i2 - i2 * i2 + i10) / dd;
    let i12 = (dd * dd * (dd - 1.0) * f[4] + dd * dd * i1 * i1 - 2.0 * dd * i1 * i2 + i2 * i2
        - i10
        + 2.0 * dd * i13)
        / (dd * dd);
    let i8 = (dd * dd * (dd - 1.0) * f[5] + i10) / dd;
    let i9 = (dd * dd * (dd - 1.0) * f[6] + i10) / dd;
    let i7 = (dd * dd * (dd - 1.0) * f[8] + i10) / dd;
    let i6 = (dd * dd * (dd - 1.0) * s2 * f[7] + dd * i8 + dd * i9 - 2.0 * i10 + dd * i13)
        / (dd * dd);
    let i5 = (dd * dd * (dd - 1.0) * s2 * f[9] + dd * i7 + dd * i9 - 2.0 * i10 + dd * i13)
        / (dd * dd);
    let i11 = (dd * dd * (dd - 1.0) * (dd - 2.0) * f[10] + 2.0 * dd * dd * i5 + 2.0 * dd * dd * i6
        - dd * i7
        - dd * i8
        - 2.0 * dd * i9
        + 4.0 * i10
        + dd * dd * i12
        - 4.0 * dd * i13)
        / (dd * dd * dd);
    // f12 and f13 jointly determine I3 and I4
    let diff = (dd * (dd - 1.0) * (dd - 2.0) * f[12] + i7 + i8 - 2.0 * i9) / dd;
    let sum = (dd * (dd - 1.0) * (dd - 2.0) * (dd - 3.0) * f[11]
        - 4.0 * (dd - 1.0) * i5
        - 4.0 * (dd - 1.0) * i6
        + (dd - 1.0) * i7
        + (dd - 1.0) * i8
        + 2.0 * (dd - 1.0) * i9
        - 2.0 * i10
        + 2.0 * dd * (dd - 1.0) * i11
        - 2.0 * i12
        + 4.0 * i13)
        / ((dd - 1.0) * (dd - 2.0));
    let i3 = 0.5 * (sum + diff);
    let i4 = 0.5 * (sum - diff);

    Ok([i1, i2, i3, i4, i5, i6, i7, i8, i9, i10, i11, i12, i13])
}

/// Population expectations of `I_1..I_13` by direct counting over the
/// coincidence classes (the forward counting relations).
pub fn lq_expectations_from_pattern(pm: &PatternMoments) -> Result<[f64; LQ_COUNT]> {
    let dd = check_dim(pm.d)?;
    let md = pm.mean_diag;
    let mo = pm.mean_off;
    let m = |c: PairClass| pm.second[c as usize];
    use PairClass::*;
    let a = m(DiagSame);
    let b = m(DiagDiag);
    let c = m(DiagOut);
    let e = m(DiagIn);
    let ff = m(DiagFar);
    let g = m(OffSame);
    let h = m(OffTranspose);
    let j = m(OffShareSource);
    let k = m(OffShareTarget);
    let l = m(OffChain);
    let p = m(OffDisjoint);

    let n1 = dd;
    let n2 = dd * (dd - 1.0);
    let n3 = dd * (dd - 1.0) * (dd - 2.0);
    let n4 = dd * (dd - 1.0) * (dd - 2.0) * (dd - 3.0);

    Ok([
        n1 * md,
        n1 * md + n2 * mo,
        n1 * a + n2 * g,
        n1 * a + n2 * h,
        n1 * a + n2 * c,
        n1 * a + n2 * e,
        n1 * a + n2 * g + 2.0 * n2 * c + n3 * j,
        n1 * a + n2 * g + 2.0 * n2 * e + n3 * k,
        n1 * a + n2 * (c + e + h) + n3 * l,
        n1 * a + n2 * b + 2.0 * n2 * (c + e) + 2.0 * n3 * ff + n2 * (g + h) + n3 * (j + k + 2.0 * l)
            + n4 * p,
        n1 * a,
        n1 * a + n2 * b,
        n1 * a + n2 * b + n2 * (c + e) + n3 * ff,
    ])
}

/// Invert the counting relations: entry-level pattern moments from the 13
/// invariant expectations.
pub fn pattern_from_lq_expectations(lq: &[f64; LQ_COUNT], d: usize) -> Result<PatternMoments> {
    let dd = check_dim(d)?;
    let i = |kk: usize| lq[kk - 1];
    let n1 = dd;
    let n2 = dd * (dd - 1.0);
    let n3 = dd * (dd - 1.0) * (dd - 2.0);
    let n4 = dd * (dd - 1.0) * (dd - 2.0) * (dd - 3.0);

    let md = i(1) / n1;
    let mo = (i(2) - i(1)) / n2;
    let a = i(11) / n1;
    let b = (i(12) - i(11)) / n2;
    let g = (i(3) - i(11)) / n2;
    let h = (i(4) - i(11)) / n2;
    let c = (i(5) - i(11)) / n2;
    let e = (i(6) - i(11)) / n2;
    let j = (i(7) - n1 * a - n2 * g - 2.0 * n2 * c) / n3;
    let k = (i(8) - n1 * a - n2 * g - 2.0 * n2 * e) / n3;
    let l = (i(9) - n1 * a - n2 * (c + e + h)) / n3;
    let ff = (i(13) - n1 * a - n2 * b - n2 * (c + e)) / n3;
    let p = (i(10)
        - n1 * a
        - n2 * b
        - 2.0 * n2 * (c + e)
        - 2.0 * n3 * ff
        - n2 * (g + h)
        - n3 * (j + k + 2.0 * l))
        / n4;

    Ok(PatternMoments { d, mean_diag: md, mean_off: mo, second: [a, b, c, e, ff, g, h, j, k, l, p] })
}

/// Model parameters -> entry pattern moments.
pub fn to_pattern_moments(params: &ModelParams) -> Result<PatternMoments> {
    pattern_from_lq_expectations(&expected_lq_invariants(params)?, params.d)
}

/// Entry pattern moments -> model parameters.
pub fn from_pattern_moments(pm: &PatternMoments) -> Result<ModelParams> {
    fit_params(&lq_expectations_from_pattern(pm)?, pm.d)
}

/// Repackage the parameter vector into the representation blocks.
pub fn to_blocks(params: &ModelParams) -> BlockGaussian {
    let f = &params.f;
    BlockGaussian {
        d: params.d,
        mu: [f[0], f[1]],
        s_v0: [[f[2], f[3]], [f[3], f[4]]],
        s_vh: [[f[5], f[6], f[7]], [f[6], f[8], f[9]], [f[7], f[9], f[10]]],
        s_v2: f[11],
        s_v3: f[12],
    }
}

/// Positivity diagnostics for the covariance blocks.
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub is_valid: bool,
    pub min_eig_v0: f64,
    pub min_eig_vh: f64,
    pub s_v2: f64,
    pub s_v3: f64,
}

pub const PSD_TOLERANCE: f64 = 1e-12;

/// Eigenvalue check of the four covariance blocks; valid when every
/// eigenvalue is at least `-PSD_TOLERANCE`.
pub fn psd_check(params: &ModelParams) -> PsdReport {
    let blocks = to_blocks(params);
    let v0 = Array2::from_shape_fn((2, 2), |(i, j)| blocks.s_v0[i][j]);
    let vh = Array2::from_shape_fn((3, 3), |(i, j)| blocks.s_vh[i][j]);
    let (w0, _) = linalg::sym_eigen(&v0);
    let (wh, _) = linalg::sym_eigen(&vh);
    let min_eig_v0 = w0[0];
    let min_eig_vh = wh[0];
    let is_valid = min_eig_v0 >= -PSD_TOLERANCE
        && min_eig_vh >= -PSD_TOLERANCE
        && blocks.s_v2 >= -PSD_TOLERANCE
        && blocks.s_v3 >= -PSD_TOLERANCE;
    PsdReport { is_valid, min_eig_v0, min_eig_vh, s_v2: blocks.s_v2, s_v3: blocks.s_v3 }
}

/// Draws d x d matrices from a PSD-valid model.
///
/// Sampling happens in the entry basis: the d^2-dimensional Gaussian with
/// the mean vector and covariance implied by the pattern moments, factored
/// once by Cholesky (diagonal jitter at most 1e-10 if round-off demands it).
pub struct MatrixSampler {
    d: usize,
    mean: Array1<f64>,
    chol: Array2<f64>,
}

impl MatrixSampler {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let report = psd_check(params);
        if !report.is_valid {
            return Err(Error::Domain(format!(
                "cannot sample from a non-PSD model (min eigenvalues V0 {:.3e}, VH {:.3e}, V2 {:.3e}, V3 {:.3e})",
                report.min_eig_v0, report.min_eig_vh, report.s_v2, report.s_v3
            )));
        }
        let pm = to_pattern_moments(params)?;
        let mean = pm.dense_mean();
        let cov = pm.dense_covariance();
        let chol = linalg::cholesky(&cov, 1e-10)?;
        Ok(MatrixSampler { d: params.d, mean, chol })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Array2<f64> {
        let n = self.d * self.d;
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let mut out = Array2::<f64>::zeros((self.d, self.d));
        for p in 0..n {
            let mut x = self.mean[p];
            for (q, &zq) in z.iter().enumerate().take(p + 1) {
                x += self.chol[[p, q]] * zq;
            }
            out[[p / self.d, p % self.d]] = x;
        }
        out
    }
}

/// One draw from the model; build a [`MatrixSampler`] instead when drawing
/// many matrices.
pub fn sample_matrix<R: Rng>(params: &ModelParams, rng: &mut R) -> Result<Array2<f64>> {
    Ok(MatrixSampler::new(params)?.sample(rng))
}

/// The special point where all entries are i.i.d. `N(0, sigma_sq)`.
pub fn simple_gaussian_params(sigma_sq: f64, d: usize) -> ModelParams {
    let mut f = [0.0; PARAM_COUNT];
    for k in [2, 4, 5, 8, 10, 11, 12] {
        f[k] = sigma_sq;
    }
    ModelParams { d, f }
}

/// The Gaussian matching the variance of entries i.i.d. uniform on
/// `(-sigma, sigma)`, i.e. the simple Gaussian with variance `sigma^2/3`.
pub fn uniform_equivalent_params(sigma: f64, d: usize) -> ModelParams {
    simple_gaussian_params(sigma * sigma / 3.0, d)
}

/// Reference model a freshly initialised layer of fan-in `d` is compared
/// against.
pub fn reference_params(scheme: crate::Scheme, d: usize) -> ModelParams {
    match scheme {
        crate::Scheme::Gaussian => simple_gaussian_params(1.0 / d as f64, d),
        crate::Scheme::Uniform => uniform_equivalent_params(1.0 / (d as f64).sqrt(), d),
    }
}

/// Expectations of all 52 invariants is provided by [`crate::wick`]; this
/// helper just wires the quadratic block into a full-length vector where
/// the caller wants one array.
pub fn lq_as_full_vector(lq: &[f64; LQ_COUNT]) -> [f64; INVARIANT_COUNT] {
    let mut out = [f64::NAN; INVARIANT_COUNT];
    out[..LQ_COUNT].copy_from_slice(lq);
    out
}
