//! Ensembles of small bias-free dense ReLU classifiers, trained with Adam
//! on MNIST, with per-epoch snapshots of the analysed square weight
//! matrices.
//!
//! Runs are fully deterministic given `(config, master_seed, data)`: each
//! run owns a counter-based RNG seeded from the master seed and the run
//! index, so runs can execute in parallel and still reassemble into a
//! bit-identical snapshot store.

use crate::dataio::{ImageTensor, LabelVector, SnapshotStore};
use crate::{splitmix64, Error, Result, Scheme};
use ndarray::{Array2, ArrayView2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::path::Path;

/// Architecture and training hyperparameters for one ensemble.
#[derive(Debug, Clone)]
pub struct NetConfig {
    /// Layer widths, input first: `[784, 10, 10, 10, 10]` is the base
    /// architecture, `[784, a, a, 10]` the width variant.
    pub layer_sizes: Vec<usize>,
    pub scheme: Scheme,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub l2_lambda: f64,
    pub runs: usize,
    pub master_seed: u64,
    /// Indices into the weight list of the square matrices to snapshot.
    pub analyzed_layers: Vec<usize>,
}

impl NetConfig {
    /// The base architecture: three square 10x10 hidden weight matrices,
    /// all of them analysed.
    pub fn base(scheme: Scheme, runs: usize, epochs: usize, master_seed: u64) -> Self {
        NetConfig {
            layer_sizes: vec![784, 10, 10, 10, 10],
            scheme,
            lr: 0.01,
            batch: 100,
            epochs,
            l2_lambda: 0.0,
            runs,
            master_seed,
            analyzed_layers: vec![1, 2, 3],
        }
    }

    /// The width variant `[784, alpha, alpha, 10]`; only the central
    /// `alpha x alpha` matrix is analysed.
    pub fn width_variant(alpha: usize, runs: usize, epochs: usize, master_seed: u64) -> Self {
        NetConfig {
            layer_sizes: vec![784, alpha, alpha, 10],
            scheme: Scheme::Gaussian,
            lr: 0.01,
            batch: 100,
            epochs,
            l2_lambda: 0.0,
            runs,
            master_seed,
            analyzed_layers: vec![1],
        }
    }

    pub fn weight_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Shape of weight `l`: `(fan_out, fan_in)`.
    pub fn weight_shape(&self, l: usize) -> (usize, usize) {
        (self.layer_sizes[l + 1], self.layer_sizes[l])
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Argument("need at least one weight matrix".into()));
        }
        if self.lr <= 0.0 || self.lr.is_nan() {
            return Err(Error::Argument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch == 0 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        if self.analyzed_layers.is_empty() {
            return Err(Error::Argument("no layers selected for analysis".into()));
        }
        let mut d = None;
        for &l in &self.analyzed_layers {
            if l >= self.weight_count() {
                return Err(Error::Argument(format!("analyzed layer {l} out of range")));
            }
            let (rows, cols) = self.weight_shape(l);
            if rows != cols {
                return Err(Error::Argument(format!(
                    "analyzed layer {l} is {rows}x{cols}, not square"
                )));
            }
            match d {
                None => d = Some(rows),
                Some(prev) if prev != rows => {
                    return Err(Error::Argument(
                        "analyzed layers must share one dimension".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Dimension of the analysed square matrices.
    pub fn analyzed_dim(&self) -> usize {
        self.weight_shape(self.analyzed_layers[0]).0
    }
}

/// Train/test split ready for the trainer: rows are flattened images.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train_x: Array2<f64>,
    pub train_y: Vec<u8>,
    pub test_x: Array2<f64>,
    pub test_y: Vec<u8>,
}

impl PreparedData {
    pub fn from_tensors(
        train_images: &ImageTensor,
        train_labels: &LabelVector,
        test_images: &ImageTensor,
        test_labels: &LabelVector,
    ) -> Result<Self> {
        if train_images.count != train_labels.count || test_images.count != test_labels.count {
            return Err(Error::Data("image/label counts disagree".into()));
        }
        let to_matrix = |t: &ImageTensor| {
            Array2::from_shape_vec((t.count, t.pixels_per_image()), t.pixels.clone())
                .expect("length checked by parser")
        };
        Ok(PreparedData {
            train_x: to_matrix(train_images),
            train_y: train_labels.labels.clone(),
            test_x: to_matrix(test_images),
            test_y: test_labels.labels.clone(),
        })
    }

    /// Load the four canonical MNIST IDX files from a directory.
    pub fn load_mnist_dir<P: AsRef<Path>>(dir: P) -> Result<Self> {
        let dir = dir.as_ref();
        let train_images = crate::dataio::load_idx_images(dir.join("train-images-idx3-ubyte"))?;
        let train_labels = crate::dataio::load_idx_labels(dir.join("train-labels-idx1-ubyte"))?;
        let test_images = crate::dataio::load_idx_images(dir.join("t10k-images-idx3-ubyte"))?;
        let test_labels = crate::dataio::load_idx_labels(dir.join("t10k-labels-idx1-ubyte"))?;
        Self::from_tensors(&train_images, &train_labels, &test_images, &test_labels)
    }
}

/// The network: a list of `(fan_out, fan_in)` weight matrices, no biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState {
    pub weights: Vec<Array2<f64>>,
}

/// Draw one weight matrix for the given scheme; `fan_in` sets the scale.
pub fn init_weights<R: Rng>(
    scheme: Scheme,
    rows: usize,
    cols: usize,
    fan_in: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if rows == 0 || cols == 0 || fan_in == 0 {
        return Err(Error::Argument("weight dimensions must be positive".into()));
    }
    let f = fan_in as f64;
    Ok(match scheme {
        Scheme::Gaussian => {
            let sd = 1.0 / f.sqrt();
            Array2::from_shape_fn((rows, cols), |_| {
                let z: f64 = StandardNormal.sample(rng);
                z * sd
            })
        }
        Scheme::Uniform => {
            let half = 1.0 / f.sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-half..half))
        }
    })
}

impl NetState {
    pub fn init<R: Rng>(config: &NetConfig, rng: &mut R) -> Result<Self> {
        let mut weights = Vec::with_capacity(config.weight_count());
        for l in 0..config.weight_count() {
            let (rows, cols) = config.weight_shape(l);
            weights.push(init_weights(config.scheme, rows, cols, cols, rng)?);
        }
        Ok(NetState { weights })
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.weights.iter().map(|w| w.iter().map(|x| x * x).sum::<f64>()).sum()
    }
}

/// Logits of a batch: ReLU between layers, linear output.
pub fn forward(net: &NetState, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != net.weights[0].ncols() {
        return Err(Error::Argument(format!(
            "input width {} does not match fan-in {}",
            x.ncols(),
            net.weights[0].ncols()
        )));
    }
    let last = net.weights.len() - 1;
    let mut a = x.dot(&net.weights[0].t());
    for (l, w) in net.weights.iter().enumerate() {
        if l == 0 {
            // already applied
        } else {
            a = a.dot(&w.t());
        }
        if l != last {
            a.mapv_inplace(|v| v.max(0.0));
        }
    }
    Ok(a)
}

/// Forward pass keeping every post-activation, for backpropagation.
fn forward_cached(net: &NetState, x: &ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
    let last = net.weights.len() - 1;
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(last);
    let mut a = x.to_owned();
    for (l, w) in net.weights.iter().enumerate() {
        let z = a.dot(&w.t());
        if l != last {
            let mut act = z;
            act.mapv_inplace(|v| v.max(0.0));
            activations.push(act.clone());
            a = act;
        } else {
            return (activations, z);
        }
    }
    unreachable!("at least one weight layer")
}

/// Row-wise `log(sum(exp))` with max-shift stabilisation.
fn log_sum_exp_rows(logits: &Array2<f64>) -> Vec<f64> {
    logits
        .axis_iter(Axis(0))
        .map(|row| {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = row.iter().map(|&v| (v - m).exp()).sum();
            m + s.ln()
        })
        .collect()
}

/// Mean softmax cross-entropy over the batch, plus `l2_lambda` times the
/// sum of squared weights.
pub fn loss_ce(
    logits: &Array2<f64>,
    labels: &[u8],
    l2_lambda: f64,
    net: &NetState,
) -> Result<f64> {
    if logits.nrows() != labels.len() {
        return Err(Error::Argument(format!(
            "{} logit rows for {} labels",
            logits.nrows(),
            labels.len()
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    let lse = log_sum_exp_rows(logits);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        total += lse[i] - logits[[i, y as usize]];
    }
    let mut loss = total / labels.len() as f64;
    if l2_lambda != 0.0 {
        loss += l2_lambda * net.sum_of_squares();
    }
    Ok(loss)
}

/// Analytic gradient of [`loss_ce`] with respect to every weight matrix.
/// Returns `(loss, gradients)`.
pub fn grad(
    net: &NetState,
    x: &ArrayView2<f64>,
    labels: &[u8],
    l2_lambda: f64,
) -> Result<(f64, Vec<Array2<f64>>)> {
    let (activations, logits) = forward_cached(net, x);
    let loss = loss_ce(&logits, labels, l2_lambda, net)?;

    let batch = labels.len() as f64;
    let lse = log_sum_exp_rows(&logits);
    // delta = (softmax - onehot) / batch
    let mut delta = Array2::from_shape_fn(logits.dim(), |(i, c)| {
        (logits[[i, c]] - lse[i]).exp() / batch
    });
    for (i, &y) in labels.iter().enumerate() {
        delta[[i, y as usize]] -= 1.0 / batch;
    }

    let last = net.weights.len() - 1;
    let mut grads: Vec<Array2<f64>> = vec![Array2::zeros((0, 0)); net.weights.len()];
    for l in (0..=last).rev() {
        let input = if l == 0 { x.view() } else { activations[l - 1].view() };
        let mut g = delta.t().dot(&input);
        if l2_lambda != 0.0 {
            g = g + net.weights[l].mapv(|w| 2.0 * l2_lambda * w);
        }
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        grads[l] = g;
        if l > 0 {
            let mut back = delta.dot(&net.weights[l]);
            // ReLU gate: the cached activation is max(0, z)
            back.zip_mut_with(&activations[l - 1], |b, &a| {
                if a <= 0.0 {
                    *b = 0.0;
                }
            });
            delta = back;
        }
    }
    Ok((loss, grads))
}

/// Adam accumulators; the usual defaults beyond the learning rate.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(net: &NetState) -> Self {
        AdamState {
            m: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    net: &mut NetState,
    grads: &[Array2<f64>],
    opt: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if grads.len() != net.weights.len() {
        return Err(Error::Argument("gradient count mismatch".into()));
    }
    opt.step += 1;
    let t = opt.step as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    for (l, g) in grads.iter().enumerate() {
        if g.dim() != net.weights[l].dim() {
            return Err(Error::Argument(format!("gradient {l} shape mismatch")));
        }
        let m = &mut opt.m[l];
        let v = &mut opt.v[l];
        m.zip_mut_with(g, |mm, &gg| *mm = opt.beta1 * *mm + (1.0 - opt.beta1) * gg);
        v.zip_mut_with(g, |vv, &gg| *vv = opt.beta2 * *vv + (1.0 - opt.beta2) * gg * gg);
        let w = &mut net.weights[l];
        for ((wi, &mi), &vi) in w.iter_mut().zip(m.iter()).zip(v.iter()) {
            let mhat = mi / bc1;
            let vhat = vi / bc2;
            *wi -= lr * mhat / (vhat.sqrt() + opt.eps);
        }
    }
    Ok(())
}

/// Fraction of test rows whose arg-max logit matches the label.
pub fn accuracy(net: &NetState, x: &ArrayView2<f64>, y: &[u8]) -> Result<f64> {
    let n = y.len();
    let mut correct = 0usize;
    let chunk = 1000;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let logits = forward(net, &x.slice(ndarray::s![start..end, ..]))?;
        for (row, &label) in logits.axis_iter(Axis(0)).zip(&y[start..end]) {
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (c, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = c;
                }
            }
            if best == label as usize {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / n as f64)
}

/// Deterministic per-run seed: the master seed and run index mixed through
/// the splitmix finaliser, so any run can be reproduced on its own.
pub fn run_seed(master_seed: u64, run_index: usize) -> u64 {
    splitmix64(master_seed ^ (run_index as u64).wrapping_mul(0x9E3779B97F4A7C15))
}

/// Snapshots and accuracies of a single run.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// `[analyzed layer][epoch 0..=epochs]`
    pub snapshots: Vec<Vec<Array2<f64>>>,
    pub accuracies: Vec<f64>,
}

/// Train one run: snapshot the analysed layers before training and after
/// every epoch, shuffling the training set each epoch from the run's RNG.
pub fn train_run(config: &NetConfig, data: &PreparedData, run_index: usize) -> Result<RunResult> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(run_seed(config.master_seed, run_index));
    let mut net = NetState::init(config, &mut rng)?;
    let mut opt = AdamState::new(&net);

    let n_train = data.train_y.len();
    let mut order: Vec<usize> = (0..n_train).collect();

    let mut snapshots: Vec<Vec<Array2<f64>>> =
        vec![Vec::with_capacity(config.epochs + 1); config.analyzed_layers.len()];
    let mut accuracies = Vec::with_capacity(config.epochs + 1);
    let take_snapshot = |net: &NetState, snapshots: &mut Vec<Vec<Array2<f64>>>| {
        for (slot, &l) in config.analyzed_layers.iter().enumerate() {
            snapshots[slot].push(net.weights[l].clone());
        }
    };

    take_snapshot(&net, &mut snapshots);
    accuracies.push(accuracy(&net, &data.test_x.view(), &data.test_y)?);

    let d_in = data.train_x.ncols();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut start = 0;
        while start < n_train {
            let end = (start + config.batch).min(n_train);
            let idx = &order[start..end];
            let xb = Array2::from_shape_fn((idx.len(), d_in), |(bi, j)| {
                data.train_x[[idx[bi], j]]
            });
            let yb: Vec<u8> = idx.iter().map(|&i| data.train_y[i]).collect();
            let (loss, grads) = grad(&net, &xb.view(), &yb, config.l2_lambda)
                .map_err(|_| Error::Divergence { run: run_index, epoch })?;
            if !loss.is_finite() {
                return Err(Error::Divergence { run: run_index, epoch });
            }
            adam_step(&mut net, &grads, &mut opt, config.lr)?;
            start = end;
        }
        take_snapshot(&net, &mut snapshots);
        accuracies.push(accuracy(&net, &data.test_x.view(), &data.test_y)?);
    }

    Ok(RunResult { snapshots, accuracies })
}

/// A generated ensemble plus the indices of any runs dropped for
/// divergence.
#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    pub store: SnapshotStore,
    pub diverged: Vec<usize>,
}

/// Train all runs (in parallel) and assemble the snapshot store in run
/// order. Diverged runs are excluded from the store and reported.
pub fn generate_ensemble(config: &NetConfig, data: &PreparedData) -> Result<EnsembleOutcome> {
    config.validate()?;
    let results: Vec<(usize, Result<RunResult>)> = (0..config.runs)
        .into_par_iter()
        .map(|r| (r, train_run(config, data, r)))
        .collect();

    let mut matrices = Vec::with_capacity(config.runs);
    let mut accuracies = Vec::with_capacity(config.runs);
    let mut diverged = Vec::new();
    for (r, res) in results {
        match res {
            Ok(run) => {
                matrices.push(run.snapshots);
                accuracies.push(run.accuracies);
            }
            Err(Error::Divergence { .. }) => diverged.push(r),
            Err(e) => return Err(e),
        }
    }
    let store = SnapshotStore {
        scheme: config.scheme,
        regularized: config.l2_lambda != 0.0,
        d: config.analyzed_dim(),
        layer_count: config.analyzed_layers.len(),
        epochs: config.epochs,
        runs: matrices.len(),
        matrices,
        accuracies,
        master_seed: config.master_seed,
    };
    Ok(EnsembleOutcome { store, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn synthetic_data(
        n_train: usize,
        n_test: usize,
        d_in: usize,
        classes: u8,
        seed: u64,
    ) -> PreparedData {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mk_x = |n: usize, rng: &mut ChaCha12Rng| {
            Array2::from_shape_fn((n, d_in), |_| rng.random_range(0.0..1.0))
        };
        let mk_y =
            |n: usize, rng: &mut ChaCha12Rng| (0..n).map(|_| rng.random_range(0..classes)).collect();
        let train_x = mk_x(n_train, &mut rng);
        let train_y = mk_y(n_train, &mut rng);
        let test_x = mk_x(n_test, &mut rng);
        let test_y = mk_y(n_test, &mut rng);
        PreparedData { train_x, train_y, test_x, test_y }
    }

    fn tiny_config(epochs: usize, runs: usize) -> NetConfig {
        NetConfig {
            layer_sizes: vec![12, 6, 6, 4],
            scheme: Scheme::Gaussian,
            lr: 0.01,
            batch: 8,
            epochs,
            l2_lambda: 0.0,
            runs,
            master_seed: 42,
            analyzed_layers: vec![1],
        }
    }

    #[test]
    fn init_scales_match_the_schemes() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let w = init_weights(Scheme::Gaussian, 400, 250, 10, &mut rng).unwrap();
        let n = (400 * 250) as f64;
        let var = w.iter().map(|x| x * x).sum::<f64>() / n;
        // Var(s^2) ~ 2 sigma^4 / n for normal samples
        let se = 0.1 * (2.0 / n).sqrt();
        assert!((var - 0.1).abs() < 3.0 * se, "gaussian sample variance {var}");

        let w = init_weights(Scheme::Uniform, 400, 250, 10, &mut rng).unwrap();
        let bound = 1.0 / 10f64.sqrt();
        assert!(w.iter().all(|&x| (-bound..bound).contains(&x)));
        let var = w.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var - 1.0 / 30.0).abs() < 3.0 * (1.0 / 30.0) * (2.0 / n).sqrt());

        let a = init_weights(Scheme::Gaussian, 5, 5, 5, &mut ChaCha12Rng::seed_from_u64(7)).unwrap();
        let b = init_weights(Scheme::Gaussian, 5, 5, 5, &mut ChaCha12Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);

        assert!(init_weights(Scheme::Gaussian, 0, 5, 5, &mut rng).is_err());
    }

    #[test]
    fn forward_zero_weights_and_identity_layer() {
        let net = NetState { weights: vec![Array2::zeros((4, 3))] };
        let x = array![[1.0, 2.0, 3.0]];
        assert!(forward(&net, &x.view()).unwrap().iter().all(|&v| v == 0.0));

        // single linear layer: identity weights pass nonnegative input through
        let net = NetState { weights: vec![Array2::eye(3)] };
        let y = forward(&net, &x.view()).unwrap();
        assert_eq!(y, x);

        // shape mismatch
        let bad = array![[1.0, 2.0]];
        assert!(forward(&net, &bad.view()).is_err());
    }

    #[test]
    fn forward_matches_per_neuron_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let config = tiny_config(0, 1);
        let net = NetState::init(&config, &mut rng).unwrap();
        let x = Array2::from_shape_fn((5, 12), |_| rng.random_range(-1.0..1.0));
        let fast = forward(&net, &x.view()).unwrap();

        for b in 0..5 {
            let mut a: Vec<f64> = x.row(b).to_vec();
            for (l, w) in net.weights.iter().enumerate() {
                let mut next = vec![0.0; w.nrows()];
                for (o, slot) in next.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (i, &ai) in a.iter().enumerate() {
                        acc += w[[o, i]] * ai;
                    }
                    *slot = if l + 1 < net.weights.len() { acc.max(0.0) } else { acc };
                }
                a = next;
            }
            for (c, &v) in a.iter().enumerate() {
                assert!((fast[[b, c]] - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loss_reference_points() {
        let net = NetState { weights: vec![Array2::zeros((10, 4))] };
        let logits = Array2::<f64>::zeros((3, 10));
        let labels = [0u8, 5, 9];
        let l = loss_ce(&logits, &labels, 0.0, &net).unwrap();
        assert!((l - 10.0f64.ln()).abs() < 1e-12);

        // favouring the right class lowers the loss
        let mut better = logits.clone();
        for (i, &y) in labels.iter().enumerate() {
            better[[i, y as usize]] = 2.0;
        }
        assert!(loss_ce(&better, &labels, 0.0, &net).unwrap() < 10.0f64.ln());

        // direct evaluation without the max-shift at moderate magnitude
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let z = Array2::from_shape_fn((4, 10), |_| rng.random_range(-2.0..2.0));
        let labels = [1u8, 2, 3, 4];
        let got = loss_ce(&z, &labels, 0.0, &net).unwrap();
        let mut direct = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let denom: f64 = (0..10).map(|c| z[[i, c]].exp()).sum();
            direct -= (z[[i, y as usize]].exp() / denom).ln();
        }
        direct /= 4.0;
        assert!((got - direct).abs() < 1e-12);

        let nan = Array2::from_elem((1, 10), f64::NAN);
        assert!(loss_ce(&nan, &[0], 0.0, &net).is_err());
    }

    #[test]
    fn adam_reference_behaviour() {
        // zero gradients leave weights alone
        let mut net = NetState { weights: vec![array![[1.0, 2.0], [3.0, 4.0]]] };
        let mut opt = AdamState::new(&net);
        let zero = vec![Array2::zeros((2, 2))];
        adam_step(&mut net, &zero, &mut opt, 0.01).unwrap();
        assert_eq!(net.weights[0], array![[1.0, 2.0], [3.0, 4.0]]);

        // one step against the hand-evaluated update rule
        let mut net = NetState { weights: vec![array![[1.0, -2.0], [0.5, 3.0]]] };
        let mut opt = AdamState::new(&net);
        let g = array![[0.3, -0.1], [0.0, 2.0]];
        adam_step(&mut net, std::slice::from_ref(&g), &mut opt, 0.01).unwrap();
        let expect = |w0: f64, gv: f64| {
            let m = 0.1 * gv / (1.0 - 0.9f64);
            let v = 0.001 * gv * gv / (1.0 - 0.999f64);
            w0 - 0.01 * m / (v.sqrt() + 1e-8)
        };
        assert!((net.weights[0][[0, 0]] - expect(1.0, 0.3)).abs() < 1e-15);
        assert!((net.weights[0][[0, 1]] - expect(-2.0, -0.1)).abs() < 1e-15);
        assert!((net.weights[0][[1, 0]] - 0.5).abs() < 1e-15);
        assert!((net.weights[0][[1, 1]] - expect(3.0, 2.0)).abs() < 1e-15);

        // constant gradient: per-step move approaches lr * sign(g)
        let mut net = NetState { weights: vec![array![[0.0]]] };
        let mut opt = AdamState::new(&net);
        let g = vec![array![[0.7]]];
        let mut prev = 0.0;
        let mut step = 0.0;
        for _ in 0..500 {
            adam_step(&mut net, &g, &mut opt, 0.01).unwrap();
            step = prev - net.weights[0][[0, 0]];
            prev = net.weights[0][[0, 0]];
        }
        assert!((step - 0.01).abs() < 1e-6, "asymptotic step {step}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let config = tiny_config(0, 1);
        let mut net = NetState::init(&config, &mut rng).unwrap();
        let data = synthetic_data(16, 4, 12, 4, 9);
        let x = data.train_x.view();
        let y = &data.train_y;

        let (_, grads) = grad(&net, &x, y, 0.01).unwrap();
        let h = 1e-6;
        #[allow(clippy::needless_range_loop)]
        for l in 0..net.weights.len() {
            for _ in 0..30 {
                let i = rng.random_range(0..net.weights[l].nrows());
                let j = rng.random_range(0..net.weights[l].ncols());
                let orig = net.weights[l][[i, j]];
                net.weights[l][[i, j]] = orig + h;
                let up = loss_ce(&forward(&net, &x).unwrap(), y, 0.01, &net).unwrap();
                net.weights[l][[i, j]] = orig - h;
                let down = loss_ce(&forward(&net, &x).unwrap(), y, 0.01, &net).unwrap();
                net.weights[l][[i, j]] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[l][[i, j]];
                let rel = (numeric - analytic).abs()
                    / numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(rel < 1e-5, "layer {l} ({i},{j}): {analytic} vs {numeric} rel {rel}");
            }
        }
    }

    #[test]
    fn gradient_mean_reduction_and_l2_term() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let config = tiny_config(0, 1);
        let net = NetState::init(&config, &mut rng).unwrap();
        let data = synthetic_data(6, 2, 12, 4, 10);

        // duplicating the batch leaves the mean gradient unchanged
        let (_, g1) = grad(&net, &data.train_x.view(), &data.train_y, 0.0).unwrap();
        let mut xx = Array2::zeros((12, 12));
        let mut yy = Vec::new();
        for rep in 0..2 {
            for i in 0..6 {
                for j in 0..12 {
                    xx[[rep * 6 + i, j]] = data.train_x[[i, j]];
                }
            }
            yy.extend_from_slice(&data.train_y);
            let _ = rep;
        }
        let (_, g2) = grad(&net, &xx.view(), &yy, 0.0).unwrap();
        for (a_mat, b_mat) in g1.iter().zip(&g2) {
            for (a, b) in a_mat.iter().zip(b_mat.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }

        // the penalty contributes exactly 2 lambda W
        let lambda = 0.05;
        let (_, gr) = grad(&net, &data.train_x.view(), &data.train_y, lambda).unwrap();
        for ((with_mat, without_mat), w_mat) in gr.iter().zip(&g1).zip(&net.weights) {
            for ((with, without), w) in with_mat.iter().zip(without_mat.iter()).zip(w_mat.iter()) {
                assert!((with - without - 2.0 * lambda * w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn untrained_run_snapshots_and_chance_accuracy() {
        let config = tiny_config(0, 1);
        let data = synthetic_data(64, 2000, 12, 4, 11);
        let run = train_run(&config, &data, 0).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert_eq!(run.snapshots[0].len(), 1);
        assert_eq!(run.accuracies.len(), 1);
        // 4 balanced random classes: chance level 0.25
        assert!((run.accuracies[0] - 0.25).abs() < 0.08, "acc {}", run.accuracies[0]);
    }

    #[test]
    fn runs_are_deterministic_and_composable() {
        let config = tiny_config(2, 2);
        let data = synthetic_data(50, 20, 12, 4, 12);
        let a = train_run(&config, &data, 1).unwrap();
        let b = train_run(&config, &data, 1).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.accuracies, b.accuracies);

        let ens = generate_ensemble(&config, &data).unwrap();
        assert!(ens.diverged.is_empty());
        assert_eq!(ens.store.runs, 2);
        for r in 0..2 {
            let single = train_run(&config, &data, r).unwrap();
            for (slot, _l) in config.analyzed_layers.iter().enumerate() {
                assert_eq!(ens.store.matrices[r][slot], single.snapshots[slot]);
            }
            assert_eq!(ens.store.accuracies[r], single.accuracies);
        }
    }

    #[test]
    fn epoch_zero_snapshots_follow_the_scheme() {
        // ensemble variance of initial entries within 3 SE of 1/fan_in
        // (gaussian) or 1/(3 fan_in) (uniform)
        for (scheme, expect, kurt) in [
            (Scheme::Gaussian, 1.0 / 10.0, 2.0),
            (Scheme::Uniform, 1.0 / 30.0, 4.0 / 5.0),
        ] {
            let mut config = tiny_config(0, 60);
            config.scheme = scheme;
            config.layer_sizes = vec![12, 10, 10, 4];
            config.analyzed_layers = vec![1];
            let data = synthetic_data(8, 8, 12, 4, 13);
            let ens = generate_ensemble(&config, &data).unwrap();
            let mut vals = Vec::new();
            for r in 0..ens.store.runs {
                vals.extend(ens.store.matrices[r][0][0].iter().copied());
            }
            let n = vals.len() as f64;
            let var = vals.iter().map(|x| x * x).sum::<f64>() / n;
            // Var(sample variance) ~ (kurtosis excess + 2) sigma^4 / n
            let se = expect * (kurt / n).sqrt();
            assert!((var - expect).abs() < 3.0 * se, "{scheme}: init variance {var} vs {expect}");
        }
    }

    #[test]
    fn divergent_runs_are_reported_and_excluded() {
        let mut config = tiny_config(1, 2);
        config.lr = 1e155; // drives the logits to overflow within an epoch
        let data = synthetic_data(40, 8, 12, 4, 14);
        let out = generate_ensemble(&config, &data).unwrap();
        assert_eq!(out.diverged, vec![0, 1]);
        assert_eq!(out.store.runs, 0);
    }

    #[test]
    fn config_validation_catches_non_square_analysis() {
        let mut config = tiny_config(1, 1);
        config.analyzed_layers = vec![0]; // 6 x 12
        assert!(config.validate().is_err());
        config.analyzed_layers = vec![9];
        assert!(config.validate().is_err());
        config.analyzed_layers = vec![1];
        assert!(config.validate().is_ok());
        assert_eq!(config.analyzed_dim(), 6);
    }
}
