//! Property tests over the public surface.

use ndarray::Array2;
use pigmm::invariants::{eval_all, INVARIANT_COUNT};
use pigmm::metrics::{deviation_lq, normalized_change, wasserstein};
use pigmm::model::{expected_lq_invariants, fit_params, ModelParams, LQ_COUNT};
use proptest::prelude::*;

fn small_matrix(d: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-2.0f64..2.0, d * d)
        .prop_map(move |v| Array2::from_shape_vec((d, d), v).unwrap())
}

fn psd_params(d: usize) -> impl Strategy<Value = ModelParams> {
    (
        proptest::collection::vec(-1.0f64..1.0, 4),
        proptest::collection::vec(-1.0f64..1.0, 9),
        -0.5f64..0.5,
        -0.5f64..0.5,
        0.05f64..1.0,
        0.05f64..1.0,
    )
        .prop_map(move |(a0, ah, mu1, mu2, v2, v3)| {
            // a diagonal ridge keeps the blocks away from singularity:
            // the Bures cross term loses eigenvalues of order sqrt(eps),
            // so exact-identity properties only hold numerically on
            // well-conditioned covariances
            let ridge = 0.05;
            let s0 = |i: usize, j: usize| {
                (0..2).map(|k| a0[2 * k + i] * a0[2 * k + j]).sum::<f64>()
                    + if i == j { ridge } else { 0.0 }
            };
            let sh = |i: usize, j: usize| {
                (0..3).map(|k| ah[3 * k + i] * ah[3 * k + j]).sum::<f64>()
                    + if i == j { ridge } else { 0.0 }
            };
            ModelParams {
                d,
                f: [
                    mu1,
                    mu2,
                    s0(0, 0),
                    s0(0, 1),
                    s0(1, 1),
                    sh(0, 0),
                    sh(0, 1),
                    sh(0, 2),
                    sh(1, 1),
                    sh(1, 2),
                    sh(2, 2),
                    v2,
                    v3,
                ],
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariants_unchanged_under_conjugation(w in small_matrix(5), perm_seed in 0u64..1000) {
        use rand::prelude::*;
        let d = 5;
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let conj = Array2::from_shape_fn((d, d), |(i, j)| w[[perm[i], perm[j]]]);
        let a = eval_all(&w.view()).unwrap();
        let b = eval_all(&conj.view()).unwrap();
        for id in 1..=INVARIANT_COUNT {
            let scale = a[id - 1].abs().max(1.0);
            prop_assert!((a[id - 1] - b[id - 1]).abs() < 1e-9 * scale, "I_{id}");
        }
    }

    #[test]
    fn fit_inverts_expectations(lq in proptest::collection::vec(-4.0f64..4.0, LQ_COUNT), d in 4usize..12) {
        let mut arr = [0.0; LQ_COUNT];
        arr.copy_from_slice(&lq);
        let params = fit_params(&arr, d).unwrap();
        let back = expected_lq_invariants(&params).unwrap();
        for k in 0..LQ_COUNT {
            prop_assert!((back[k] - arr[k]).abs() < 1e-9 * arr[k].abs().max(1.0));
        }
    }

    #[test]
    fn normalized_change_stays_bounded(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        let v = normalized_change(a, b).value;
        prop_assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn deviation_is_scale_consistent(o in -10.0f64..10.0, e in -10.0f64..10.0, s in 0.01f64..10.0, c in 0.001f64..1000.0) {
        let base = deviation_lq(o, e, s).unwrap();
        let scaled = deviation_lq(c * o, c * e, c * s).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn wasserstein_is_a_premetric(a in psd_params(6), b in psd_params(6)) {
        let ab = wasserstein(&a, &b).unwrap();
        let ba = wasserstein(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
        // the square root amplifies round-off in the squared distance, so
        // the self-distance bound is sqrt-of-epsilon sized for the
        // rank-deficient blocks this strategy can generate
        let aa = wasserstein(&a, &a).unwrap();
        prop_assert!(aa * aa < 1e-9, "self distance {aa}");
    }
}
