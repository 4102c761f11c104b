//! The 52 permutation invariants of a square matrix under simultaneous
//! row/column permutation `W_ij -> W_{s(i)s(j)}`.
//!
//! Every invariant is a directed multigraph: nodes are summed indices,
//! each edge `a -> b` is a factor `W_ab`, and the invariant is the
//! unrestricted sum over all node-index assignments. The catalogue covers
//! both linear, all eleven quadratic, and the low-node (1, 2) plus
//! high-node (2n-1, 2n) cubic and quartic invariants.
//!
//! [`eval_invariant`] uses factorized closed forms built from shared
//! row/column/diagonal aggregates; [`naive_eval`] is the literal nested
//! index sum and serves as the independent oracle.

use crate::{Error, Result};
use ndarray::ArrayView2;

pub const INVARIANT_COUNT: usize = 52;

/// Graph definition of one invariant.
#[derive(Debug, Clone, Copy)]
pub struct InvariantDef {
    /// 1-based index, matching the catalogue order used everywhere.
    pub index: usize,
    /// Polynomial order = number of edges (matrix factors).
    pub order: usize,
    pub node_count: usize,
    /// Directed edges over nodes `0..node_count`; loops and multi-edges allowed.
    pub edges: &'static [(usize, usize)],
}

macro_rules! inv {
    ($idx:expr, $nodes:expr, [$(($a:expr, $b:expr)),+]) => {
        InvariantDef {
            index: $idx,
            order: { const E: &[(usize, usize)] = &[$(($a, $b)),+]; E.len() },
            node_count: $nodes,
            edges: &[$(($a, $b)),+],
        }
    };
}

/// The full catalogue, in index order `I_1 ..= I_52`.
pub static CATALOGUE: [InvariantDef; INVARIANT_COUNT] = [
    // linear
    inv!(1, 1, [(0, 0)]),
    inv!(2, 2, [(0, 1)]),
    // quadratic
    inv!(3, 2, [(0, 1), (0, 1)]),
    inv!(4, 2, [(0, 1), (1, 0)]),
    inv!(5, 2, [(0, 0), (0, 1)]),
    inv!(6, 2, [(0, 0), (1, 0)]),
    inv!(7, 3, [(0, 1), (0, 2)]),
    inv!(8, 3, [(0, 1), (2, 1)]),
    inv!(9, 3, [(0, 1), (1, 2)]),
    inv!(10, 4, [(0, 1), (2, 3)]),
    inv!(11, 1, [(0, 0), (0, 0)]),
    inv!(12, 2, [(0, 0), (1, 1)]),
    inv!(13, 3, [(0, 0), (1, 2)]),
    // cubic, 1 and 2 nodes
    inv!(14, 1, [(0, 0), (0, 0), (0, 0)]),
    inv!(15, 2, [(0, 0), (0, 0), (1, 1)]),
    inv!(16, 2, [(0, 0), (0, 1), (1, 1)]),
    inv!(17, 2, [(0, 0), (0, 0), (0, 1)]),
    inv!(18, 2, [(0, 0), (0, 0), (1, 0)]),
    inv!(19, 2, [(0, 0), (0, 1), (0, 1)]),
    inv!(20, 2, [(0, 0), (0, 1), (1, 0)]),
    inv!(21, 2, [(0, 0), (1, 0), (1, 0)]),
    inv!(22, 2, [(0, 1), (0, 1), (0, 1)]),
    inv!(23, 2, [(0, 1), (0, 1), (1, 0)]),
    // cubic, 5 and 6 nodes
    inv!(24, 5, [(0, 0), (1, 2), (3, 4)]),
    inv!(25, 5, [(0, 1), (1, 2), (3, 4)]),
    inv!(26, 5, [(0, 1), (2, 1), (3, 4)]),
    inv!(27, 5, [(0, 1), (0, 2), (3, 4)]),
    inv!(28, 6, [(0, 1), (2, 3), (4, 5)]),
    // quartic, 1 and 2 nodes
    inv!(29, 1, [(0, 0), (0, 0), (0, 0), (0, 0)]),
    inv!(30, 2, [(0, 0), (0, 0), (0, 0), (1, 1)]),
    inv!(31, 2, [(0, 0), (0, 0), (1, 1), (1, 1)]),
    inv!(32, 2, [(0, 0), (0, 0), (0, 0), (0, 1)]),
    inv!(33, 2, [(0, 0), (0, 0), (0, 0), (1, 0)]),
    inv!(34, 2, [(0, 0), (0, 0), (0, 1), (1, 1)]),
    inv!(35, 2, [(0, 0), (0, 0), (1, 0), (1, 1)]),
    inv!(36, 2, [(0, 0), (0, 0), (0, 1), (0, 1)]),
    inv!(37, 2, [(0, 0), (0, 0), (0, 1), (1, 0)]),
    inv!(38, 2, [(0, 0), (0, 0), (1, 0), (1, 0)]),
    inv!(39, 2, [(0, 0), (0, 1), (0, 1), (1, 1)]),
    inv!(40, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]),
    inv!(41, 2, [(0, 0), (0, 1), (0, 1), (0, 1)]),
    inv!(42, 2, [(0, 0), (0, 1), (0, 1), (1, 0)]),
    inv!(43, 2, [(0, 0), (0, 1), (1, 0), (1, 0)]),
    inv!(44, 2, [(0, 0), (1, 0), (1, 0), (1, 0)]),
    inv!(45, 2, [(0, 1), (0, 1), (0, 1), (0, 1)]),
    inv!(46, 2, [(0, 1), (0, 1), (0, 1), (1, 0)]),
    inv!(47, 2, [(0, 1), (0, 1), (1, 0), (1, 0)]),
    // quartic, 7 and 8 nodes
    inv!(48, 7, [(0, 0), (1, 2), (3, 4), (5, 6)]),
    inv!(49, 7, [(0, 1), (1, 2), (3, 4), (5, 6)]),
    inv!(50, 7, [(0, 1), (2, 1), (3, 4), (5, 6)]),
    inv!(51, 7, [(0, 1), (0, 2), (3, 4), (5, 6)]),
    inv!(52, 8, [(0, 1), (2, 3), (4, 5), (6, 7)]),
];

pub fn definition(index: usize) -> Result<&'static InvariantDef> {
    if (1..=INVARIANT_COUNT).contains(&index) {
        Ok(&CATALOGUE[index - 1])
    } else {
        Err(Error::Argument(format!("invariant index {index} out of range 1..=52")))
    }
}

/// Ids of the 39 cubic/quartic invariants predicted from a fitted model.
pub fn cubic_quartic_ids() -> Vec<usize> {
    (14..=52).collect()
}

fn check_square(w: &ArrayView2<f64>) -> Result<usize> {
    let (r, c) = w.dim();
    if r != c || r == 0 {
        return Err(Error::Argument(format!("expected a nonempty square matrix, got {r}x{c}")));
    }
    Ok(r)
}

/// Shared aggregates reused across the factorized forms.
struct Factors {
    t: f64,           // trace
    s: f64,           // total sum
    row: Vec<f64>,    // r_i = sum_j W_ij
    col: Vec<f64>,    // c_j = sum_i W_ij
    diag: Vec<f64>,   // W_ii
    mix: Vec<f64>,    // h_i = sum_j W_ij W_ji
    row2: Vec<f64>,   // sum_j W_ij^2
    col2: Vec<f64>,   // sum_j W_ji^2
    row3: Vec<f64>,   // sum_j W_ij^3
    col3: Vec<f64>,   // sum_j W_ji^3
    mix21: Vec<f64>,  // sum_j W_ij^2 W_ji
    mix12: Vec<f64>,  // sum_j W_ij W_ji^2
    sum2: f64,        // sum W_ij^2
    sum3: f64,        // sum W_ij^3
    sum4: f64,        // sum W_ij^4
    dwd: f64,         // sum_ij W_ii W_ij W_jj
    d2wd: f64,        // sum_ij W_ii^2 W_ij W_jj
    dwd2: f64,        // sum_ij W_ii W_ij W_jj^2
    dw2d: f64,        // sum_ij W_ii W_ij^2 W_jj
    dwwd: f64,        // sum_ij W_ii W_ij W_ji W_jj
    s22: f64,         // sum_ij W_ij^2 W_ji
    s31: f64,         // sum_ij W_ij^3 W_ji
    s22t: f64,        // sum_ij W_ij^2 W_ji^2
}

impl Factors {
    fn build(w: &ArrayView2<f64>) -> Self {
        let d = w.nrows();
        let mut f = Factors {
            t: 0.0,
            s: 0.0,
            row: vec![0.0; d],
            col: vec![0.0; d],
            diag: vec![0.0; d],
            mix: vec![0.0; d],
            row2: vec![0.0; d],
            col2: vec![0.0; d],
            row3: vec![0.0; d],
            col3: vec![0.0; d],
            mix21: vec![0.0; d],
            mix12: vec![0.0; d],
            sum2: 0.0,
            sum3: 0.0,
            sum4: 0.0,
            dwd: 0.0,
            d2wd: 0.0,
            dwd2: 0.0,
            dw2d: 0.0,
            dwwd: 0.0,
            s22: 0.0,
            s31: 0.0,
            s22t: 0.0,
        };
        for i in 0..d {
            f.diag[i] = w[[i, i]];
            f.t += w[[i, i]];
        }
        for i in 0..d {
            for j in 0..d {
                let x = w[[i, j]];
                let y = w[[j, i]];
                f.s += x;
                f.row[i] += x;
                f.col[j] += x;
                f.mix[i] += x * y;
                f.row2[i] += x * x;
                f.col2[i] += y * y;
                f.row3[i] += x * x * x;
                f.col3[i] += y * y * y;
                f.mix21[i] += x * x * y;
                f.mix12[i] += x * y * y;
                f.sum2 += x * x;
                f.sum3 += x * x * x;
                f.sum4 += x * x * x * x;
                f.dwd += f.diag[i] * x * w[[j, j]];
                f.d2wd += f.diag[i] * f.diag[i] * x * w[[j, j]];
                f.dwd2 += f.diag[i] * x * w[[j, j]] * w[[j, j]];
                f.dw2d += f.diag[i] * x * x * w[[j, j]];
                f.dwwd += f.diag[i] * x * y * w[[j, j]];
                f.s22 += x * x * y;
                f.s31 += x * x * x * y;
                f.s22t += x * x * y * y;
            }
        }
        f
    }

    fn eval(&self, index: usize) -> f64 {
        let t = self.t;
        let s = self.s;
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let dot3 = |a: &[f64], b: &[f64], c: &[f64]| -> f64 {
            a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
        };
        let sq = |a: &[f64]| -> f64 { a.iter().map(|x| x * x).sum() };
        let d2 = &self.diag.iter().map(|x| x * x).collect::<Vec<_>>();
        let d3 = &self.diag.iter().map(|x| x * x * x).collect::<Vec<_>>();
        match index {
            1 => t,
            2 => s,
            3 => self.sum2,
            4 => self.mix.iter().sum(),
            5 => dot(&self.diag, &self.row),
            6 => dot(&self.diag, &self.col),
            7 => sq(&self.row),
            8 => sq(&self.col),
            9 => dot(&self.col, &self.row),
            10 => s * s,
            11 => sq(&self.diag),
            12 => t * t,
            13 => t * s,
            14 => self.diag.iter().map(|x| x * x * x).sum(),
            15 => sq(&self.diag) * t,
            16 => self.dwd,
            17 => dot(d2, &self.row),
            18 => dot(d2, &self.col),
            19 => dot(&self.diag, &self.row2),
            20 => dot(&self.diag, &self.mix),
            21 => dot(&self.diag, &self.col2),
            22 => self.sum3,
            23 => self.s22,
            24 => t * s * s,
            25 => dot(&self.col, &self.row) * s,
            26 => sq(&self.col) * s,
            27 => sq(&self.row) * s,
            28 => s * s * s,
            29 => self.diag.iter().map(|x| x * x * x * x).sum(),
            30 => self.diag.iter().map(|x| x * x * x).sum::<f64>() * t,
            31 => sq(&self.diag) * sq(&self.diag),
            32 => dot(d3, &self.row),
            33 => dot(d3, &self.col),
            34 => self.d2wd,
            35 => self.dwd2,
            36 => dot(d2, &self.row2),
            37 => dot(d2, &self.mix),
            38 => dot(d2, &self.col2),
            39 => self.dw2d,
            40 => self.dwwd,
            41 => dot(&self.diag, &self.row3),
            42 => dot(&self.diag, &self.mix21),
            43 => dot(&self.diag, &self.mix12),
            44 => dot(&self.diag, &self.col3),
            45 => self.sum4,
            46 => self.s31,
            47 => self.s22t,
            48 => t * s * s * s,
            49 => dot(&self.col, &self.row) * s * s,
            50 => sq(&self.col) * s * s,
            51 => sq(&self.row) * s * s,
            52 => s * s * s * s,
            _ => {
                let _ = dot3;
                unreachable!("index validated by caller")
            }
        }
    }
}

/// Factorized evaluation of a single invariant.
pub fn eval_invariant(w: &ArrayView2<f64>, index: usize) -> Result<f64> {
    check_square(w)?;
    definition(index)?;
    Ok(Factors::build(w).eval(index))
}

/// Evaluate all 52 invariants with the shared aggregates computed once.
pub fn eval_all(w: &ArrayView2<f64>) -> Result<[f64; INVARIANT_COUNT]> {
    check_square(w)?;
    let f = Factors::build(w);
    let mut out = [0.0; INVARIANT_COUNT];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f.eval(i + 1);
    }
    Ok(out)
}

/// Literal nested-sum evaluation straight off the graph definition.
///
/// Cost is `d^node_count`, so keep `d` small (<= 8 or so); this exists as
/// the oracle the factorized forms are checked against.
pub fn naive_eval(w: &ArrayView2<f64>, index: usize) -> Result<f64> {
    let d = check_square(w)?;
    let def = definition(index)?;
    let n = def.node_count;
    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut prod = 1.0;
        for &(a, b) in def.edges {
            prod *= w[[assignment[a], assignment[b]]];
        }
        total += prod;
        // odometer over d^n assignments
        let mut k = 0;
        loop {
            if k == n {
                return Ok(total);
            }
            assignment[k] += 1;
            if assignment[k] < d {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}

/// Per-invariant ensemble statistics across the runs of a snapshot cell.
#[derive(Debug, Clone)]
pub struct InvariantStats {
    pub ids: Vec<usize>,
    pub mean: Vec<f64>,
    /// Sample standard deviation over runs (ddof = 1).
    pub std: Vec<f64>,
    /// `std / sqrt(runs)`.
    pub se: Vec<f64>,
    pub runs: usize,
}

/// Mean, sample standard deviation and standard error of each requested
/// invariant over an ensemble of matrices.
pub fn ensemble_stats<'a, M>(matrices: M, ids: &[usize]) -> Result<InvariantStats>
where
    M: IntoIterator<Item = ArrayView2<'a, f64>>,
{
    for &id in ids {
        definition(id)?;
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    let mut runs = 0usize;
    for w in matrices {
        let all = eval_all(&w)?;
        for (slot, &id) in values.iter_mut().zip(ids) {
            slot.push(all[id - 1]);
        }
        runs += 1;
    }
    if runs < 2 {
        return Err(Error::Argument(format!(
            "ensemble statistics need at least 2 runs, got {runs}"
        )));
    }
    let mut mean = Vec::with_capacity(ids.len());
    let mut std = Vec::with_capacity(ids.len());
    let mut se = Vec::with_capacity(ids.len());
    for vals in &values {
        let m = vals.iter().sum::<f64>() / runs as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (runs - 1) as f64;
        let sd = var.sqrt();
        mean.push(m);
        std.push(sd);
        se.push(sd / (runs as f64).sqrt());
    }
    Ok(InvariantStats { ids: ids.to_vec(), mean, std, se, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(d: usize, rng: &mut impl Rng) -> Array2<f64> {
        Array2::from_shape_fn((d, d), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn catalogue_is_well_formed() {
        for (i, def) in CATALOGUE.iter().enumerate() {
            assert_eq!(def.index, i + 1);
            assert_eq!(def.edges.len(), def.order);
            let max_node = def.edges.iter().flat_map(|&(a, b)| [a, b]).max().unwrap();
            assert_eq!(max_node + 1, def.node_count, "I_{}", def.index);
            let expected_order = match def.index {
                1..=2 => 1,
                3..=13 => 2,
                14..=28 => 3,
                _ => 4,
            };
            assert_eq!(def.order, expected_order, "I_{}", def.index);
        }
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let w = Array2::<f64>::zeros((4, 4));
        for id in 1..=INVARIANT_COUNT {
            assert_eq!(eval_invariant(&w.view(), id).unwrap(), 0.0);
        }
    }

    #[test]
    fn all_ones_counts_tuples() {
        // every index tuple contributes 1, so I = d^node_count
        let w = Array2::<f64>::ones((3, 3));
        let checks = [(1, 3.0), (2, 9.0), (3, 9.0), (7, 27.0), (10, 81.0), (28, 729.0), (52, 6561.0)];
        for (id, expect) in checks {
            assert_eq!(eval_invariant(&w.view(), id).unwrap(), expect, "I_{id}");
        }
        for def in &CATALOGUE {
            let v = eval_invariant(&w.view(), def.index).unwrap();
            assert_eq!(v, 3f64.powi(def.node_count as i32), "I_{}", def.index);
        }
    }

    #[test]
    fn identity_matrix_values() {
        let w = Array2::<f64>::eye(3);
        let checks = [
            (1, 3.0),
            (2, 3.0),
            (3, 3.0),
            (4, 3.0),
            (10, 9.0),
            (12, 9.0),
            (14, 3.0),
            (45, 3.0),
        ];
        for (id, expect) in checks {
            assert_eq!(eval_invariant(&w.view(), id).unwrap(), expect, "I_{id}");
        }
    }

    #[test]
    fn naive_identity_and_ones_examples() {
        let eye = Array2::<f64>::eye(3);
        assert_eq!(naive_eval(&eye.view(), 9).unwrap(), 3.0);
        let ones = Array2::<f64>::ones((2, 2));
        assert_eq!(naive_eval(&ones.view(), 45).unwrap(), 4.0);
    }

    #[test]
    fn factorized_matches_naive_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..8 {
            let w = random_matrix(5, &mut rng);
            let entry_sum: f64 = w.iter().map(|x| x.abs()).sum();
            for id in 1..=INVARIANT_COUNT {
                let fast = eval_invariant(&w.view(), id).unwrap();
                let slow = naive_eval(&w.view(), id).unwrap();
                // gross term size bounds the agreement when the value
                // itself cancels toward zero
                let gross = entry_sum.powi(CATALOGUE[id - 1].order as i32);
                let scale = fast.abs().max(slow.abs()).max(1e-3 * gross);
                assert!(
                    ((fast - slow) / scale).abs() < 1e-9,
                    "I_{id}: fast {fast} vs naive {slow}"
                );
            }
        }
    }

    #[test]
    fn permutation_conjugation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 7;
        let w = random_matrix(d, &mut rng);
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(&mut rng);
            let conj = Array2::from_shape_fn((d, d), |(i, j)| w[[perm[i], perm[j]]]);
            let a = eval_all(&w.view()).unwrap();
            let b = eval_all(&conj.view()).unwrap();
            for id in 1..=INVARIANT_COUNT {
                let scale = a[id - 1].abs().max(1.0);
                assert!(
                    (a[id - 1] - b[id - 1]).abs() < 1e-10 * scale,
                    "I_{id} changed under conjugation"
                );
            }
        }
    }

    #[test]
    fn product_identities_hold_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_matrix(6, &mut rng);
        let v = eval_all(&w.view()).unwrap();
        let i = |k: usize| v[k - 1];
        assert_eq!(i(10), i(2) * i(2));
        assert_eq!(i(12), i(1) * i(1));
        assert_eq!(i(13), i(1) * i(2));
        assert_eq!(i(24), i(1) * i(2) * i(2));
        assert_eq!(i(25), i(9) * i(2));
        assert_eq!(i(26), i(8) * i(2));
        assert_eq!(i(27), i(7) * i(2));
        assert_eq!(i(28), i(2) * i(2) * i(2));
        assert_eq!(i(48), i(1) * i(2) * i(2) * i(2));
        assert_eq!(i(49), i(9) * i(2) * i(2));
        assert_eq!(i(50), i(8) * i(2) * i(2));
        assert_eq!(i(51), i(7) * i(2) * i(2));
        assert_eq!(i(52), i(2) * i(2) * i(2) * i(2));
    }

    #[test]
    fn eval_all_consistent_with_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_matrix(6, &mut rng);
        let all = eval_all(&w.view()).unwrap();
        for id in 1..=INVARIANT_COUNT {
            assert_eq!(all[id - 1], eval_invariant(&w.view(), id).unwrap());
        }
    }

    #[test]
    fn non_square_rejected() {
        let w = Array2::<f64>::zeros((2, 3));
        assert!(eval_invariant(&w.view(), 1).is_err());
        assert!(naive_eval(&w.view(), 1).is_err());
    }

    #[test]
    fn stats_of_identical_matrices_have_zero_spread() {
        let w = Array2::<f64>::eye(4);
        let stats = ensemble_stats([w.view(), w.view()], &[1, 3, 45]).unwrap();
        assert_eq!(stats.runs, 2);
        for k in 0..3 {
            assert_eq!(stats.std[k], 0.0);
            assert_eq!(stats.se[k], 0.0);
        }
    }

    #[test]
    fn stats_match_two_pass_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mats: Vec<Array2<f64>> = (0..40).map(|_| random_matrix(5, &mut rng)).collect();
        let ids = [3usize, 9, 22, 45];
        let stats = ensemble_stats(mats.iter().map(|m| m.view()), &ids).unwrap();
        for (k, &id) in ids.iter().enumerate() {
            let vals: Vec<f64> =
                mats.iter().map(|m| eval_invariant(&m.view(), id).unwrap()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
            assert!((stats.mean[k] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            assert!((stats.std[k] - var.sqrt()).abs() <= 1e-12 * var.sqrt().max(1.0));
            assert!((stats.se[k] - var.sqrt() / (vals.len() as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn stats_require_two_runs() {
        let w = Array2::<f64>::eye(4);
        assert!(ensemble_stats([w.view()], &[1]).is_err());
    }

    #[test]
    fn simulated_gaussian_ensemble_mean_i3_near_reference() {
        // 1000 matrices with entries N(0, 1/10): mean I_3 should sit within
        // 4 standard errors of d^2 * 0.1 = 10.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let sd = (0.1f64).sqrt();
        let mats: Vec<Array2<f64>> = (0..1000)
            .map(|_| {
                Array2::from_shape_fn((10, 10), |_| {
                    let n: f64 = rand_distr::StandardNormal.sample(&mut rng);
                    n * sd
                })
            })
            .collect();
        let stats = ensemble_stats(mats.iter().map(|m| m.view()), &[3]).unwrap();
        let dev = (stats.mean[0] - 10.0).abs() / stats.se[0];
        assert!(dev < 4.0, "mean I_3 {} se {} dev {dev}", stats.mean[0], stats.se[0]);
    }
}
