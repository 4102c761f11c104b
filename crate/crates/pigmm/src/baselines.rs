//! Closed-form initialisation references.
//!
//! For matrices with i.i.d. entries drawn from one of the two
//! initialisation schemes, both the linear/quadratic invariants and the
//! fitted model parameters have exact expectations and spreads as
//! functions of the entry moments `<w^k>`, the dimension `d` and the
//! ensemble size `N`. These are what the trained-ensemble deviation
//! measures are taken against.
//!
//! Parameter variances neglect the covariances between distinct invariant
//! averages (they are empirically negligible next to the retained terms);
//! [`mc_validate_baseline`] quantifies the quality of that approximation
//! by simulation.

use crate::invariants::eval_all;
use crate::model::{fit_params, LQ_COUNT, PARAM_COUNT};
use crate::{Error, Result, Scheme};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// First four moments of a single entry under an initialisation scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// Entry moments for fan-in `d`: Gaussian gives `(0, 1/d, 0, 3/d^2)`,
/// uniform on `(-1/sqrt(d), 1/sqrt(d))` gives `(0, 1/(3d), 0, 1/(5d^2))`.
pub fn weight_moments(scheme: Scheme, d: usize) -> WeightMoments {
    let dd = d as f64;
    match scheme {
        Scheme::Gaussian => WeightMoments { m1: 0.0, m2: 1.0 / dd, m3: 0.0, m4: 3.0 / (dd * dd) },
        Scheme::Uniform => {
            WeightMoments { m1: 0.0, m2: 1.0 / (3.0 * dd), m3: 0.0, m4: 1.0 / (5.0 * dd * dd) }
        }
    }
}

/// Closed-form reference for the 13 invariant averages of an ensemble of
/// `n_runs` freshly initialised matrices.
#[derive(Debug, Clone)]
pub struct InvariantBaseline {
    pub expectation: [f64; LQ_COUNT],
    pub se: [f64; LQ_COUNT],
}

pub fn init_invariant_baseline(scheme: Scheme, d: usize, n_runs: usize) -> InvariantBaseline {
    let w = weight_moments(scheme, d);
    let dd = d as f64;
    let n = n_runs as f64;
    let m2 = w.m2;
    let m4 = w.m4;

    // zero-mean entries: odd expectations vanish
    let e1 = 0.0;
    let e2 = 0.0;
    let e_d = dd * m2; // trace-like graphs: d terms of <w^2>
    let e_d2 = dd * dd * m2; // d^2 coincident terms
    let expectation =
        [e1, e2, e_d2, e_d, e_d, e_d, e_d2, e_d2, e_d, e_d2, e_d, e_d, e_d];

    let var = [
        dd * m2,
        dd * dd * m2,
        dd * dd * (m4 - m2 * m2),
        dd * m4 + dd * (dd - 2.0) * m2 * m2,
        dd * m4 + dd * (dd - 2.0) * m2 * m2,
        dd * m4 + dd * (dd - 2.0) * m2 * m2,
        dd * dd * m4 + dd * dd * (dd - 2.0) * m2 * m2,
        dd * dd * m4 + dd * dd * (dd - 2.0) * m2 * m2,
        dd * m4 + dd * (dd * dd - 2.0) * m2 * m2,
        dd * dd * m4 + dd * dd * (dd * dd - 2.0) * m2 * m2,
        dd * (m4 - m2 * m2),
        dd * m4 + dd * (dd - 2.0) * m2 * m2,
        dd * m4 + dd * (dd * dd - 2.0) * m2 * m2,
    ];
    let mut se = [0.0; LQ_COUNT];
    for k in 0..LQ_COUNT {
        se[k] = (var[k] / n).sqrt();
    }
    InvariantBaseline { expectation, se }
}

/// Closed-form reference for the 13 parameters fitted to such an ensemble.
///
/// The averages feeding the fit are over `N = n_runs` matrices, so the
/// spread of a fitted parameter is a standard deviation, not a standard
/// error: one parameter vector comes out of one ensemble.
#[derive(Debug, Clone)]
pub struct ParamBaseline {
    pub expectation: [f64; PARAM_COUNT],
    pub sd: [f64; PARAM_COUNT],
}

pub fn init_param_baseline(scheme: Scheme, d: usize, n_runs: usize) -> Result<ParamBaseline> {
    if d < 4 {
        return Err(Error::Domain(format!("parameter baseline needs d >= 4, got {d}")));
    }
    let w = weight_moments(scheme, d);
    let dd = d as f64;
    let n = n_runs as f64;
    let m2 = w.m2;
    let m4 = w.m4;
    let m1sq = w.m1 * w.m1;

    let expectation = [
        dd * w.m1,
        0.0,
        (1.0 - 1.0 / n) * m2 - (2.0 - 1.0 / n) * m1sq,
        0.0,
        (1.0 - 1.0 / n) * (m2 - m1sq),
        m2 - dd * m1sq,
        0.0,
        0.0,
        m2 - dd * m1sq,
        0.0,
        m2 - m1sq,
        m2 - m1sq,
        m2 - m1sq,
    ];

    let var = [
        // f1
        m2 / n,
        // f2
        (dd + 1.0) / (n * (dd - 1.0)) * m2,
        // f3
        (1.0 / (dd * dd)) * (1.0 / n + 1.0 / n.powi(3)) * m4
            + (1.0 / n + 1.0 / (n * n) - 2.0 / (n * dd * dd) - 2.0 / (n.powi(3) * dd * dd))
                * m2
                * m2,
        // f4
        (dd + 1.0) / (dd * dd * (dd - 1.0)) * (1.0 / n + 1.0 / n.powi(3)) * m4
            + (dd + 1.0) / (dd * dd * (dd - 1.0))
                * ((dd * dd - 2.0) / n + dd * dd / (n * n) - 2.0 / n.powi(3))
                * m2
                * m2,
        // f5
        (dd.powi(3) + 4.0 * dd + 1.0) / (dd * dd * (dd - 1.0).powi(2))
            * (1.0 / n + 1.0 / n.powi(3))
            * m4
            + (1.0 / (dd * dd * (dd - 1.0).powi(2)))
                * ((dd.powi(4) + 4.0 * dd.powi(3) - dd * dd - 8.0 * dd - 2.0) / n
                    + (dd.powi(4) + 4.0 * dd.powi(3) + dd * dd) / (n * n)
                    - (2.0 * dd.powi(3) + 8.0 * dd + 2.0) / n.powi(3))
                * m2
                * m2,
        // f6
        (dd * dd + 1.0) / (n * dd * dd * (dd - 1.0).powi(2)) * m4
            + (dd.powi(3) - dd * dd - 2.0) / (n * dd * dd * (dd - 1.0).powi(2)) * m2 * m2,
        // f7
        (dd + 1.0) / (n * dd * dd * (dd - 1.0).powi(2)) * m4
            + (dd + 1.0) * (dd * dd - 2.0) / (n * dd * dd * (dd - 1.0).powi(2)) * m2 * m2,
        // f8
        (dd.powi(3) + dd * dd + 2.0 * dd + 4.0)
            / (n * dd * dd * (dd - 1.0).powi(2) * (dd - 2.0))
            * m4
            + (dd.powi(4) + dd.powi(3) + 2.0 * dd * dd - 4.0 * dd - 8.0)
                / (n * dd * dd * (dd - 1.0).powi(2) * (dd - 2.0))
                * m2
                * m2,
        // f9 (same structure as f6)
        (dd * dd + 1.0) / (n * dd * dd * (dd - 1.0).powi(2)) * m4
            + (dd.powi(3) - dd * dd - 2.0) / (n * dd * dd * (dd - 1.0).powi(2)) * m2 * m2,
        // f10 (same structure as f8)
        (dd.powi(3) + dd * dd + 2.0 * dd + 4.0)
            / (n * dd * dd * (dd - 1.0).powi(2) * (dd - 2.0))
            * m4
            + (dd.powi(4) + dd.powi(3) + 2.0 * dd * dd - 4.0 * dd - 8.0)
                / (n * dd * dd * (dd - 1.0).powi(2) * (dd - 2.0))
                * m2
                * m2,
        // f11
        (dd * dd - dd + 4.0) * (dd.powi(3) + dd * dd + 6.0 * dd + 4.0)
            / (n * dd * dd * (dd - 1.0).powi(2) * (dd - 2.0).powi(2))
            * m4
            - (dd.powi(5) - 9.0 * dd.powi(4) - 4.0 * dd.powi(3) - 12.0 * dd * dd + 40.0 * dd
                + 32.0)
                / (n * dd * dd * (dd - 1.0).powi(2) * (dd - 2.0).powi(2))
                * m2
                * m2,
        // f12
        (dd.powi(5) - dd.powi(4) + dd.powi(3) + 37.0 * dd * dd - 74.0 * dd + 60.0)
            / (n * dd * (dd - 1.0).powi(2) * (dd - 2.0).powi(2) * (dd - 3.0).powi(2))
            * m4
            + 8.0 * (5.0 * dd.powi(3) - 17.0 * dd * dd + 24.0 * dd - 15.0)
                / (n * dd * (dd - 1.0).powi(2) * (dd - 2.0).powi(2) * (dd - 3.0).powi(2))
                * m2
                * m2,
        // f13
        (dd.powi(3) + dd * dd + 2.0 * dd + 4.0) / (n * dd * (dd - 1.0).powi(2) * (dd - 2.0).powi(2))
            * m4
            + 4.0 * (dd + 1.0) / (n * dd * (dd - 1.0).powi(2) * (dd - 2.0)) * m2 * m2,
    ];

    let mut sd = [0.0; PARAM_COUNT];
    for k in 0..PARAM_COUNT {
        sd[k] = var[k].sqrt();
    }
    Ok(ParamBaseline { expectation, sd })
}

/// Simulation report: standardised discrepancies between the closed forms
/// and `trials` independent simulated ensembles.
#[derive(Debug, Clone)]
pub struct BaselineValidation {
    /// z-score of the grand invariant mean against the closed form, per id.
    pub invariant_z: [f64; LQ_COUNT],
    /// z-score of the grand parameter mean against the closed form, per id.
    pub param_z: [f64; PARAM_COUNT],
    pub max_abs_invariant_z: f64,
    pub max_abs_param_z: f64,
}

fn sample_init_matrix(scheme: Scheme, d: usize, rng: &mut impl Rng) -> Array2<f64> {
    let dd = d as f64;
    match scheme {
        Scheme::Gaussian => {
            let sd = (1.0 / dd).sqrt();
            Array2::from_shape_fn((d, d), |_| {
                let z: f64 = StandardNormal.sample(rng);
                z * sd
            })
        }
        Scheme::Uniform => {
            let half = 1.0 / dd.sqrt();
            Array2::from_shape_fn((d, d), |_| rng.random_range(-half..half))
        }
    }
}

/// Simulate `trials` ensembles of `n_runs` matrices and standardise the
/// observed invariant averages and fitted parameters against the closed
/// forms. The grand mean over trials has spread `se/sqrt(trials)` resp.
/// `sd/sqrt(trials)`.
pub fn mc_validate_baseline(
    scheme: Scheme,
    d: usize,
    n_runs: usize,
    trials: usize,
    seed: u64,
) -> Result<BaselineValidation> {
    if trials < 100 {
        return Err(Error::Argument(format!("need at least 100 trials, got {trials}")));
    }
    let inv_base = init_invariant_baseline(scheme, d, n_runs);
    let par_base = init_param_baseline(scheme, d, n_runs)?;

    let per_trial: Vec<([f64; LQ_COUNT], [f64; PARAM_COUNT])> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha12Rng::seed_from_u64(crate::splitmix64(seed ^ (t as u64)));
            let mut acc = [0.0; LQ_COUNT];
            for _ in 0..n_runs {
                let w = sample_init_matrix(scheme, d, &mut rng);
                let all = eval_all(&w.view()).expect("square by construction");
                for k in 0..LQ_COUNT {
                    acc[k] += all[k];
                }
            }
            for v in acc.iter_mut() {
                *v /= n_runs as f64;
            }
            let params = fit_params(&acc, d).expect("d checked above");
            (acc, params.f)
        })
        .collect();

    let mut inv_mean = [0.0; LQ_COUNT];
    let mut par_mean = [0.0; PARAM_COUNT];
    for (inv, par) in &per_trial {
        for k in 0..LQ_COUNT {
            inv_mean[k] += inv[k];
        }
        for k in 0..PARAM_COUNT {
            par_mean[k] += par[k];
        }
    }
    for v in inv_mean.iter_mut() {
        *v /= trials as f64;
    }
    for v in par_mean.iter_mut() {
        *v /= trials as f64;
    }

    let root_t = (trials as f64).sqrt();
    let mut invariant_z = [0.0; LQ_COUNT];
    let mut param_z = [0.0; PARAM_COUNT];
    for k in 0..LQ_COUNT {
        invariant_z[k] = (inv_mean[k] - inv_base.expectation[k]) / (inv_base.se[k] / root_t);
    }
    for k in 0..PARAM_COUNT {
        param_z[k] = (par_mean[k] - par_base.expectation[k]) / (par_base.sd[k] / root_t);
    }
    let max_abs_invariant_z = invariant_z.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    let max_abs_param_z = param_z.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    Ok(BaselineValidation { invariant_z, param_z, max_abs_invariant_z, max_abs_param_z })
}
