//! Exact expectations of the 52 invariants under a fitted model.
//!
//! For an invariant with node set `V` and edge multiset `E`, the
//! unrestricted index sum splits over set partitions of `V`: a partition
//! with `m` blocks contributes `d(d-1)...(d-m+1)` injective index
//! assignments, and under any of them the edge factors become jointly
//! Gaussian entries whose means and pairwise covariances depend only on
//! the coincidence classes the partition induces. The Gaussian moment of
//! up to four factors is evaluated by Isserlis' theorem with means.
//!
//! `brute_expected_invariant` is the independent oracle: the literal sum
//! over all `d^|V|` index tuples against the dense entry mean/covariance.

use crate::invariants::definition;
use crate::model::{to_pattern_moments, MatrixSampler, ModelParams, PatternMoments};
use crate::{Error, Result};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const MAX_NODES: usize = 8;
pub const MAX_ORDER: usize = 4;

/// `E[x_1 ... x_k]` for jointly Gaussian variables with the given means
/// and covariance matrix, `k <= 4`.
///
/// Computed by the recursion `E[x_a P] = mu_a E[P] + sum_b C_ab E[P / x_b]`,
/// which expands into the sum over partial pairings: covariances on pairs,
/// means on singletons.
pub fn isserlis(means: &[f64], cov: &Array2<f64>) -> Result<f64> {
    let k = means.len();
    if k > MAX_ORDER {
        return Err(Error::Unsupported(format!("Gaussian moments of degree {k} > {MAX_ORDER}")));
    }
    if cov.nrows() != k || cov.ncols() != k {
        return Err(Error::Argument("covariance shape must match the mean vector".into()));
    }
    let all: Vec<usize> = (0..k).collect();
    Ok(moment_rec(means, cov, &all))
}

fn moment_rec(means: &[f64], cov: &Array2<f64>, items: &[usize]) -> f64 {
    match items.split_first() {
        None => 1.0,
        Some((&a, rest)) => {
            let mut total = means[a] * moment_rec(means, cov, rest);
            for (pos, &b) in rest.iter().enumerate() {
                let mut remaining = Vec::with_capacity(rest.len() - 1);
                remaining.extend_from_slice(&rest[..pos]);
                remaining.extend_from_slice(&rest[pos + 1..]);
                total += cov[[a, b]] * moment_rec(means, cov, &remaining);
            }
            total
        }
    }
}

/// All set partitions of `{0..n}` as restricted growth strings:
/// `out[p][node] = block index`, with block indices first-seen-ordered.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(current: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        let n = current.len();
        if pos == n {
            out.push(current.clone());
            return;
        }
        for block in 0..=max_used + 1 {
            current[pos] = block;
            rec(current, pos + 1, max_used.max(block), out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    current[0] = 0;
    rec(&mut current, 1, 0, &mut out);
    out
}

/// `d (d-1) ... (d-m+1)`; zero once `m` exceeds `d`, which silently drops
/// partitions finer than the index range allows.
pub fn falling_factorial(d: usize, m: usize) -> f64 {
    let mut acc = 1.0;
    for t in 0..m {
        if t >= d {
            return 0.0;
        }
        acc *= (d - t) as f64;
    }
    acc
}

/// Exact expectation of invariant `id` under the model's pattern moments.
pub fn expected_invariant_from_moments(pm: &PatternMoments, id: usize) -> Result<f64> {
    let def = definition(id)?;
    if def.node_count > MAX_NODES {
        return Err(Error::Unsupported(format!(
            "invariant with {} nodes exceeds the {MAX_NODES}-node partition engine",
            def.node_count
        )));
    }
    let d = pm.d;
    let mut total = 0.0;
    for assignment in set_partitions(def.node_count) {
        let blocks = assignment.iter().copied().max().map_or(0, |m| m + 1);
        let weight = falling_factorial(d, blocks);
        if weight == 0.0 {
            continue;
        }
        let edges: Vec<(usize, usize)> =
            def.edges.iter().map(|&(a, b)| (assignment[a], assignment[b])).collect();
        let k = edges.len();
        let means: Vec<f64> = edges.iter().map(|&e| pm.mean_of(e)).collect();
        let cov = Array2::from_shape_fn((k, k), |(i, j)| pm.covariance(edges[i], edges[j]));
        total += weight * isserlis(&means, &cov)?;
    }
    Ok(total)
}

/// Exact expectation of invariant `id` under a fitted model.
pub fn expected_invariant(params: &ModelParams, id: usize) -> Result<f64> {
    expected_invariant_from_moments(&to_pattern_moments(params)?, id)
}

/// Expectations of a list of invariants, converting coordinates once.
pub fn expected_invariants(params: &ModelParams, ids: &[usize]) -> Result<Vec<f64>> {
    let pm = to_pattern_moments(params)?;
    ids.iter().map(|&id| expected_invariant_from_moments(&pm, id)).collect()
}

/// Brute-force oracle: literal sum over all `d^nodes` index tuples of the
/// Isserlis moment of the touched entries, using the dense entry mean and
/// covariance. Cost explodes quickly, hence the `d <= 5` guard.
pub fn brute_expected_invariant(params: &ModelParams, id: usize) -> Result<f64> {
    let def = definition(id)?;
    let d = params.d;
    if d > 5 {
        return Err(Error::Unsupported(format!(
            "brute-force expectation refused for d = {d} > 5 (cost d^{})",
            def.node_count
        )));
    }
    let pm = to_pattern_moments(params)?;
    let mean = pm.dense_mean();
    let cov = pm.dense_covariance();
    let n = def.node_count;
    let k = def.edges.len();

    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let entries: Vec<usize> =
            def.edges.iter().map(|&(a, b)| assignment[a] * d + assignment[b]).collect();
        let means: Vec<f64> = entries.iter().map(|&p| mean[p]).collect();
        let sub = Array2::from_shape_fn((k, k), |(i, j)| cov[[entries[i], entries[j]]]);
        total += isserlis(&means, &sub)?;

        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(total);
            }
            assignment[pos] += 1;
            if assignment[pos] < d {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Monte Carlo estimate `(mean, standard error)` of invariant `id` from
/// `n_samples` model draws.
pub fn mc_expected_invariant(
    params: &ModelParams,
    id: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::Argument("need at least 2 samples".into()));
    }
    definition(id)?;
    let sampler = MatrixSampler::new(params)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n_samples {
        let w = sampler.sample(&mut rng);
        let v = crate::invariants::eval_invariant(&w.view(), id)?;
        sum += v;
        sumsq += v * v;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sumsq - n * mean * mean) / (n - 1.0);
    Ok((mean, (var.max(0.0) / n).sqrt()))
}
