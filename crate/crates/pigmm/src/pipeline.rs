//! End-to-end orchestration: generate snapshot stores, analyse them into
//! CSV tables, and bundle a report.
//!
//! Analysis of one store produces, per analysed layer `L{n}` and keyed by
//! (scheme, layer, epoch, id):
//!   * `invariant_stats_L{n}.csv`   mean, std, se of every invariant
//!   * `lq_deviations_L{n}.csv`     observed invariant averages vs the
//!     initialisation reference, in units of its standard error
//!   * `param_deviations_L{n}.csv`  fitted parameters vs the reference
//!   * `cq_predictions_L{n}.csv`    model-predicted cubic/quartic values
//!     vs ensemble averages, in units of the ensemble spread
//!   * `normalized_change_L{n}.csv` start-vs-final change of those
//!
//! plus `accuracy.csv`, `params.csv`, `wasserstein.csv` and (for
//! multi-layer stores) `pmcc_layers.csv`.

use crate::baselines::{init_invariant_baseline, init_param_baseline};
use crate::dataio::{export_table, read_store, write_store, SnapshotStore, TableRow};
use crate::ensemble::{generate_ensemble, NetConfig, PreparedData};
use crate::invariants::{ensemble_stats, InvariantStats, INVARIANT_COUNT};
use crate::metrics::{deviation_cq, deviation_lq, normalized_change, pmcc, wasserstein};
use crate::model::{
    fit_params, psd_check, reference_params, BlockGaussian, ModelParams, LQ_COUNT,
    PARAM_COUNT,
};
use crate::wick::expected_invariants;
use crate::{Error, Result, Scheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Experiment description; a flat JSON document, every field optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mnist_dir: PathBuf,
    pub output_dir: PathBuf,
    pub schemes: Vec<Scheme>,
    pub runs: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub l2_lambda: f64,
    /// Central-layer widths for the `[784, a, a, 10]` variant; empty means
    /// the base `[784, 10, 10, 10, 10]` architecture.
    pub widths: Vec<usize>,
    pub master_seed: u64,
    /// Invariants predicted from the fitted model.
    pub predict_ids: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mnist_dir: PathBuf::from("data/mnist"),
            output_dir: PathBuf::from("out"),
            schemes: vec![Scheme::Gaussian],
            runs: 20,
            epochs: 10,
            batch: 100,
            lr: 0.01,
            l2_lambda: 0.0,
            widths: Vec::new(),
            master_seed: 20_240_601,
            predict_ids: (14..=52).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::Argument("need at least 2 runs".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Argument("no schemes selected".into()));
        }
        for &id in &self.predict_ids {
            if !(1..=INVARIANT_COUNT).contains(&id) {
                return Err(Error::Argument(format!("invariant id {id} out of range")));
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(Scheme, Option<usize>)> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            if self.widths.is_empty() {
                out.push((scheme, None));
            } else {
                for &w in &self.widths {
                    out.push((scheme, Some(w)));
                }
            }
        }
        out
    }

    fn net_config(&self, scheme: Scheme, width: Option<usize>) -> NetConfig {
        let mut cfg = match width {
            None => NetConfig::base(scheme, self.runs, self.epochs, self.master_seed),
            Some(alpha) => {
                let mut c = NetConfig::width_variant(alpha, self.runs, self.epochs, self.master_seed);
                c.scheme = scheme;
                c
            }
        };
        cfg.batch = self.batch;
        cfg.lr = self.lr;
        cfg.l2_lambda = self.l2_lambda;
        cfg
    }

    pub fn store_filename(&self, scheme: Scheme, width: Option<usize>) -> String {
        let mut name = format!("store_{scheme}");
        if self.l2_lambda != 0.0 {
            name.push_str("_l2");
        }
        if let Some(w) = width {
            name.push_str(&format!("_w{w}"));
        }
        name.push_str(".pigw");
        name
    }
}

/// Outcome of `generate`: written store paths and any diverged runs,
/// keyed by store filename.
#[derive(Debug)]
pub struct GenerateOutcome {
    pub stores: Vec<PathBuf>,
    pub diverged: Vec<(String, Vec<usize>)>,
}

/// Train every configured ensemble cell and write one store per cell.
pub fn cmd_generate(config: &ExperimentConfig) -> Result<GenerateOutcome> {
    config.validate()?;
    let data = PreparedData::load_mnist_dir(&config.mnist_dir)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let mut outcome = GenerateOutcome { stores: Vec::new(), diverged: Vec::new() };
    for (scheme, width) in config.cells() {
        let net = config.net_config(scheme, width);
        eprintln!(
            "generating scheme={scheme} arch={:?} runs={} epochs={} l2={}",
            net.layer_sizes, net.runs, net.epochs, net.l2_lambda
        );
        let ens = generate_ensemble(&net, &data)?;
        let name = config.store_filename(scheme, width);
        let path = config.output_dir.join(&name);
        write_store(&ens.store, &path)?;
        let final_acc: Vec<f64> =
            ens.store.accuracies.iter().map(|a| *a.last().unwrap()).collect();
        let mean_acc = final_acc.iter().sum::<f64>() / final_acc.len().max(1) as f64;
        eprintln!(
            "  wrote {} ({} runs, mean final accuracy {:.4})",
            path.display(),
            ens.store.runs,
            mean_acc
        );
        if !ens.diverged.is_empty() {
            outcome.diverged.push((name, ens.diverged));
        }
        outcome.stores.push(path);
    }
    Ok(outcome)
}

/// Everything the per-store analysis derives before table writing.
pub struct StoreAnalysis {
    pub scheme: Scheme,
    pub d: usize,
    pub runs: usize,
    pub epochs: usize,
    pub layer_count: usize,
    /// `[layer][epoch]` statistics over all 52 invariants.
    pub stats: Vec<Vec<InvariantStats>>,
    /// `[layer][epoch]` fitted parameters.
    pub params: Vec<Vec<ModelParams>>,
}

/// Evaluate invariant statistics and fit the model in every
/// (layer, epoch) cell.
pub fn analyze_store(store: &SnapshotStore) -> Result<StoreAnalysis> {
    if store.runs < 2 {
        return Err(Error::Argument(format!(
            "analysis needs at least 2 runs, the store has {}",
            store.runs
        )));
    }
    let all_ids: Vec<usize> = (1..=INVARIANT_COUNT).collect();
    let cells: Vec<(usize, usize)> = (0..store.layer_count)
        .flat_map(|l| (0..store.snapshot_count()).map(move |e| (l, e)))
        .collect();
    let computed: Vec<((usize, usize), (InvariantStats, ModelParams))> = cells
        .into_par_iter()
        .map(|(l, e)| {
            let stats = ensemble_stats(store.cell(l, e), &all_ids)?;
            let mut lq = [0.0; LQ_COUNT];
            lq.copy_from_slice(&stats.mean[..LQ_COUNT]);
            let params = fit_params(&lq, store.d)?;
            Ok(((l, e), (stats, params)))
        })
        .collect::<Result<Vec<_>>>()?;

    let snaps = store.snapshot_count();
    let mut stats: Vec<Vec<Option<InvariantStats>>> = vec![vec![None; snaps]; store.layer_count];
    let mut params: Vec<Vec<Option<ModelParams>>> = vec![vec![None; snaps]; store.layer_count];
    for ((l, e), (s, p)) in computed {
        stats[l][e] = Some(s);
        params[l][e] = Some(p);
    }
    Ok(StoreAnalysis {
        scheme: store.scheme,
        d: store.d,
        runs: store.runs,
        epochs: store.epochs,
        layer_count: store.layer_count,
        stats: stats.into_iter().map(|l| l.into_iter().map(Option::unwrap).collect()).collect(),
        params: params.into_iter().map(|l| l.into_iter().map(Option::unwrap).collect()).collect(),
    })
}

fn layer_label(l: usize) -> String {
    format!("L{}", l + 1)
}

fn scheme_code(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Gaussian => 0.0,
        Scheme::Uniform => 1.0,
    }
}

/// Write the per-epoch invariant statistics tables.
pub fn write_invariant_tables(a: &StoreAnalysis, out: &Path) -> Result<()> {
    let code = scheme_code(a.scheme);
    for l in 0..a.layer_count {
        let mut rows = Vec::new();
        for (e, stats) in a.stats[l].iter().enumerate() {
            for (k, &id) in stats.ids.iter().enumerate() {
                rows.push(TableRow {
                    values: vec![
                        code,
                        (l + 1) as f64,
                        e as f64,
                        id as f64,
                        stats.mean[k],
                        stats.std[k],
                        stats.se[k],
                    ],
                });
            }
        }
        export_table(
            &["scheme", "layer", "epoch", "id", "mean", "std", "se"],
            &rows,
            out.join(format!("invariant_stats_{}.csv", layer_label(l))),
        )?;
    }
    Ok(())
}

/// Write the fitted parameters, keyed by (scheme, layer, epoch).
pub fn write_param_table(a: &StoreAnalysis, out: &Path) -> Result<()> {
    let mut header = vec!["scheme".to_string(), "layer".to_string(), "epoch".to_string()];
    for k in 1..=PARAM_COUNT {
        header.push(format!("f{k}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let code = scheme_code(a.scheme);
    let mut rows = Vec::new();
    for l in 0..a.layer_count {
        for (e, p) in a.params[l].iter().enumerate() {
            let mut values = vec![code, (l + 1) as f64, e as f64];
            values.extend_from_slice(&p.f);
            rows.push(TableRow { values });
        }
    }
    export_table(&header_refs, &rows, out.join("params.csv"))
}

/// Deviations of the observed linear/quadratic averages and fitted
/// parameters from the initialisation reference.
pub fn write_deviation_tables(a: &StoreAnalysis, out: &Path) -> Result<()> {
    let inv_base = init_invariant_baseline(a.scheme, a.d, a.runs);
    let par_base = init_param_baseline(a.scheme, a.d, a.runs)?;
    let code = scheme_code(a.scheme);
    for l in 0..a.layer_count {
        let mut inv_rows = Vec::new();
        let mut par_rows = Vec::new();
        for (e, stats) in a.stats[l].iter().enumerate() {
            for k in 0..LQ_COUNT {
                let dev = deviation_lq(stats.mean[k], inv_base.expectation[k], inv_base.se[k])?;
                inv_rows.push(TableRow {
                    values: vec![
                        code,
                        (l + 1) as f64,
                        e as f64,
                        (k + 1) as f64,
                        stats.mean[k],
                        inv_base.expectation[k],
                        inv_base.se[k],
                        dev,
                    ],
                });
            }
            let p = &a.params[l][e];
            for k in 0..PARAM_COUNT {
                let dev = deviation_lq(p.f[k], par_base.expectation[k], par_base.sd[k])?;
                par_rows.push(TableRow {
                    values: vec![
                        code,
                        (l + 1) as f64,
                        e as f64,
                        (k + 1) as f64,
                        p.f[k],
                        par_base.expectation[k],
                        par_base.sd[k],
                        dev,
                    ],
                });
            }
        }
        export_table(
            &["scheme", "layer", "epoch", "id", "observed", "reference", "se_ref", "deviation"],
            &inv_rows,
            out.join(format!("lq_deviations_{}.csv", layer_label(l))),
        )?;
        export_table(
            &["scheme", "layer", "epoch", "id", "fitted", "reference", "sd_ref", "deviation"],
            &par_rows,
            out.join(format!("param_deviations_{}.csv", layer_label(l))),
        )?;
    }
    Ok(())
}

/// Model-predicted cubic/quartic invariants vs the ensemble averages,
/// plus the start-to-final normalised change of those deviations.
pub fn write_prediction_tables(a: &StoreAnalysis, ids: &[usize], out: &Path) -> Result<()> {
    let code = scheme_code(a.scheme);
    for l in 0..a.layer_count {
        let per_epoch: Vec<Vec<f64>> = a.params[l]
            .par_iter()
            .map(|p| expected_invariants(p, ids))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        let mut devs: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
        for (e, theory) in per_epoch.iter().enumerate() {
            let stats = &a.stats[l][e];
            for (k, &id) in ids.iter().enumerate() {
                let mean = stats.mean[id - 1];
                let std = stats.std[id - 1];
                let dev = deviation_cq(theory[k], mean, std)?;
                devs[k].push(dev);
                rows.push(TableRow {
                    values: vec![
                        code,
                        (l + 1) as f64,
                        e as f64,
                        id as f64,
                        theory[k],
                        mean,
                        std,
                        dev,
                    ],
                });
            }
        }
        export_table(
            &["scheme", "layer", "epoch", "id", "theory", "ensemble_mean", "ensemble_std", "deviation"],
            &rows,
            out.join(format!("cq_predictions_{}.csv", layer_label(l))),
        )?;

        let mut change_rows = Vec::new();
        for (k, &id) in ids.iter().enumerate() {
            let start = devs[k][0];
            let last = *devs[k].last().unwrap();
            let nc = normalized_change(start, last);
            change_rows.push(TableRow {
                values: vec![
                    code,
                    (l + 1) as f64,
                    id as f64,
                    start,
                    last,
                    nc.value,
                    if nc.undefined { 1.0 } else { 0.0 },
                ],
            });
        }
        export_table(
            &[
                "scheme",
                "layer",
                "id",
                "start_deviation",
                "final_deviation",
                "normalized_change",
                "undefined",
            ],
            &change_rows,
            out.join(format!("normalized_change_{}.csv", layer_label(l))),
        )?;
    }
    Ok(())
}

/// Distance of the fitted model from the scheme's reference model, per
/// layer and epoch.
pub fn wasserstein_trajectory(a: &StoreAnalysis) -> Result<Vec<Vec<f64>>> {
    let reference = reference_params(a.scheme, a.d);
    a.params
        .iter()
        .map(|layer| layer.iter().map(|p| wasserstein(p, &reference)).collect())
        .collect()
}

pub fn write_wasserstein_table(a: &StoreAnalysis, out: &Path) -> Result<()> {
    let traj = wasserstein_trajectory(a)?;
    let code = scheme_code(a.scheme);
    let mut rows = Vec::new();
    for (l, series) in traj.iter().enumerate() {
        for (e, &dist) in series.iter().enumerate() {
            rows.push(TableRow { values: vec![code, (l + 1) as f64, e as f64, dist] });
        }
    }
    export_table(&["scheme", "layer", "epoch", "distance"], &rows, out.join("wasserstein.csv"))
}

/// Correlations between the per-layer deviation profiles before and after
/// training (only meaningful with at least two layers).
pub fn write_pmcc_table(a: &StoreAnalysis, out: &Path) -> Result<()> {
    if a.layer_count < 2 {
        return Ok(());
    }
    let inv_base = init_invariant_baseline(a.scheme, a.d, a.runs);
    let par_base = init_param_baseline(a.scheme, a.d, a.runs)?;
    let last = a.epochs;
    let inv_dev = |l: usize, e: usize| -> Result<Vec<f64>> {
        (0..LQ_COUNT)
            .map(|k| deviation_lq(a.stats[l][e].mean[k], inv_base.expectation[k], inv_base.se[k]))
            .collect()
    };
    let par_dev = |l: usize, e: usize| -> Result<Vec<f64>> {
        (0..PARAM_COUNT)
            .map(|k| deviation_lq(a.params[l][e].f[k], par_base.expectation[k], par_base.sd[k]))
            .collect()
    };
    // measure code 0: invariants, 1: parameters
    let mut rows = Vec::new();
    for l1 in 0..a.layer_count {
        for l2 in (l1 + 1)..a.layer_count {
            for (code, dev) in
                [(0.0, &inv_dev as &dyn Fn(usize, usize) -> Result<Vec<f64>>), (1.0, &par_dev)]
            {
                let before = pmcc(&dev(l1, 0)?, &dev(l2, 0)?)?;
                let after = pmcc(&dev(l1, last)?, &dev(l2, last)?)?;
                rows.push(TableRow {
                    values: vec![code, (l1 + 1) as f64, (l2 + 1) as f64, before, after],
                });
            }
        }
    }
    export_table(
        &["measure", "layer_a", "layer_b", "before", "after"],
        &rows,
        out.join("pmcc_layers.csv"),
    )
}

pub fn write_accuracy_table(store: &SnapshotStore, out: &Path) -> Result<()> {
    let snaps = store.snapshot_count();
    let mut rows = Vec::new();
    for e in 0..snaps {
        let vals: Vec<f64> = store.accuracies.iter().map(|a| a[e]).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        rows.push(TableRow { values: vec![e as f64, mean, (var / n).sqrt(), n] });
    }
    export_table(&["epoch", "mean", "se", "runs"], &rows, out.join("accuracy.csv"))
}

/// Full analysis of one store into a directory of CSV tables.
pub fn cmd_analyze(store_path: &Path, out: &Path, predict_ids: &[usize]) -> Result<()> {
    let store = read_store(store_path)?;
    std::fs::create_dir_all(out)?;
    let analysis = analyze_store(&store)?;
    write_accuracy_table(&store, out)?;
    write_invariant_tables(&analysis, out)?;
    write_param_table(&analysis, out)?;
    write_deviation_tables(&analysis, out)?;
    write_prediction_tables(&analysis, predict_ids, out)?;
    write_wasserstein_table(&analysis, out)?;
    write_pmcc_table(&analysis, out)?;
    Ok(())
}

/// Reference tables that depend only on (scheme, d, N): the closed-form
/// initialisation expectations and spreads.
pub fn write_reference_tables(d: usize, runs: usize, out: &Path) -> Result<()> {
    let mut inv_rows = Vec::new();
    let mut par_rows = Vec::new();
    for (code, scheme) in [(0.0, Scheme::Gaussian), (1.0, Scheme::Uniform)] {
        let inv = init_invariant_baseline(scheme, d, runs);
        for k in 0..LQ_COUNT {
            inv_rows.push(TableRow {
                values: vec![code, (k + 1) as f64, inv.expectation[k], inv.se[k]],
            });
        }
        let par = init_param_baseline(scheme, d, runs)?;
        for k in 0..PARAM_COUNT {
            par_rows.push(TableRow {
                values: vec![code, (k + 1) as f64, par.expectation[k], par.sd[k]],
            });
        }
    }
    export_table(
        &["scheme", "id", "expectation", "se"],
        &inv_rows,
        out.join("reference_invariants.csv"),
    )?;
    export_table(
        &["scheme", "id", "expectation", "sd"],
        &par_rows,
        out.join("reference_params.csv"),
    )
}

/// Collect an analysis directory into a `report/` bundle with a summary.
/// Missing inputs are listed by name.
pub fn cmd_report(analysis_dir: &Path, d: usize, runs: usize) -> Result<PathBuf> {
    let mut required = vec![
        "accuracy.csv".to_string(),
        "params.csv".to_string(),
        "wasserstein.csv".to_string(),
    ];
    // layer tables: probe for L1..; at least one must exist
    let mut layers = Vec::new();
    for l in 0.. {
        let name = format!("invariant_stats_{}.csv", layer_label(l));
        if analysis_dir.join(&name).exists() {
            layers.push(l);
        } else {
            break;
        }
    }
    if layers.is_empty() {
        required.push("invariant_stats_L1.csv".to_string());
    }
    for &l in &layers {
        for stem in ["lq_deviations", "param_deviations", "cq_predictions", "normalized_change"] {
            required.push(format!("{stem}_{}.csv", layer_label(l)));
        }
    }
    let missing: Vec<String> =
        required.iter().filter(|n| !analysis_dir.join(n.as_str()).exists()).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::Argument(format!("missing analysis tables: {}", missing.join(", "))));
    }

    let report_dir = analysis_dir.join("report");
    std::fs::create_dir_all(&report_dir)?;
    write_reference_tables(d, runs, &report_dir)?;
    for name in &required {
        std::fs::copy(analysis_dir.join(name), report_dir.join(name))?;
    }
    if analysis_dir.join("pmcc_layers.csv").exists() {
        std::fs::copy(analysis_dir.join("pmcc_layers.csv"), report_dir.join("pmcc_layers.csv"))?;
    }

    // plain-text summary assembled from the copied tables
    let mut summary = String::new();
    summary.push_str("ensemble report\n===============\n");
    let acc = std::fs::read_to_string(analysis_dir.join("accuracy.csv"))?;
    if let Some(last) = acc.lines().last() {
        let fields: Vec<&str> = last.split(',').collect();
        if fields.len() >= 3 {
            summary.push_str(&format!(
                "final accuracy: mean {} (se {}) over {} runs\n",
                trim_real(fields[1]),
                trim_real(fields[2]),
                runs
            ));
        }
    }
    for &l in &layers {
        let text =
            std::fs::read_to_string(analysis_dir.join(format!("lq_deviations_{}.csv", layer_label(l))))?;
        let (mut start_sum, mut start_n, mut final_sum, mut final_n) = (0.0, 0, 0.0, 0);
        let mut max_epoch = 0usize;
        let parsed: Vec<(usize, f64)> = text
            .lines()
            .skip(1)
            .filter_map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                // columns: scheme, layer, epoch, id, observed, reference, se_ref, deviation
                Some((f[2].parse::<f64>().ok()? as usize, f[7].parse::<f64>().ok()?))
            })
            .collect();
        for &(e, _) in &parsed {
            max_epoch = max_epoch.max(e);
        }
        for &(e, dev) in &parsed {
            if e == 0 {
                start_sum += dev;
                start_n += 1;
            }
            if e == max_epoch {
                final_sum += dev;
                final_n += 1;
            }
        }
        summary.push_str(&format!(
            "{}: mean deviation from the initialisation reference {:.3} (epoch 0) -> {:.3} (epoch {})\n",
            layer_label(l),
            start_sum / start_n.max(1) as f64,
            final_sum / final_n.max(1) as f64,
            max_epoch,
        ));
    }
    std::fs::write(report_dir.join("summary.txt"), summary)?;
    Ok(report_dir)
}

fn trim_real(s: &str) -> String {
    s.parse::<f64>().map(|v| format!("{v:.4}")).unwrap_or_else(|_| s.to_string())
}

/// Convenience for tests and the statistical self-checks: an ensemble
/// sampled straight from a model, stored like a trained one.
pub fn sampled_store(
    params: &ModelParams,
    scheme: Scheme,
    runs: usize,
    epochs: usize,
    seed: u64,
) -> Result<SnapshotStore> {
    use rand::SeedableRng;
    let sampler = crate::model::MatrixSampler::new(params)?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let snaps = epochs + 1;
    let matrices: Vec<Vec<Vec<ndarray::Array2<f64>>>> = (0..runs)
        .map(|_| vec![(0..snaps).map(|_| sampler.sample(&mut rng)).collect()])
        .collect();
    Ok(SnapshotStore {
        scheme,
        regularized: false,
        d: params.d,
        layer_count: 1,
        epochs,
        runs,
        matrices,
        accuracies: vec![vec![0.0; snaps]; runs],
        master_seed: seed,
    })
}

/// Block summary used by debugging output.
pub fn describe_blocks(b: &BlockGaussian) -> String {
    format!(
        "mu=({:.4}, {:.4}) trV0={:.4} trVH={:.4} sV2={:.4} sV3={:.4}",
        b.mu[0],
        b.mu[1],
        b.s_v0[0][0] + b.s_v0[1][1],
        b.s_vh[0][0] + b.s_vh[1][1] + b.s_vh[2][2],
        b.s_v2,
        b.s_v3
    )
}

/// Is the fitted model usable for sampling/distances?
pub fn fitted_psd_ok(params: &ModelParams) -> bool {
    psd_check(params).is_valid
}
