//! File formats: MNIST IDX input, the "PIGW" snapshot-store container,
//! and CSV table export.
//!
//! All parsers are byte-slice based (`parse_*`) with thin path wrappers
//! (`load_*` / `read_*`), so untrusted input can be fed to them directly;
//! the fuzz targets exercise exactly these entry points.

use crate::{Error, Result, Scheme};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const IDX_IMAGE_MAGIC: u32 = 2051;
pub const IDX_LABEL_MAGIC: u32 = 2049;
pub const STORE_MAGIC: &[u8; 4] = b"PIGW";
pub const STORE_VERSION: u32 = 1;

/// A stack of greyscale images with pixels normalised to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` values, image-major.
    pub pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let n = self.pixels_per_image();
        &self.pixels[i * n..(i + 1) * n]
    }
}

/// Class labels paired with an [`ImageTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub count: usize,
    pub labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset.checked_add(4).ok_or_else(|| Error::Format("header offset overflow".into()))?;
    let slice = bytes
        .get(offset..end)
        .ok_or_else(|| Error::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "truncated header")))?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Parse an IDX3 image file: big-endian magic 2051, count, rows, cols,
/// then raw bytes. Pixels are normalised as `byte / 255`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageTensor> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic: expected {IDX_IMAGE_MAGIC}, got {magic}"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let payload = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let data = bytes.get(16..16 + payload).ok_or_else(|| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!("image payload truncated: need {payload} bytes"),
        ))
    })?;
    let pixels = data.iter().map(|&b| b as f64 / 255.0).collect();
    Ok(ImageTensor { count, rows, cols, pixels })
}

/// Parse an IDX1 label file: big-endian magic 2049, count, then one byte
/// per label. Labels must be digits 0..=9.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<LabelVector> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic: expected {IDX_LABEL_MAGIC}, got {magic}"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let data = bytes.get(8..8 + count).ok_or_else(|| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!("label payload truncated: need {count} bytes"),
        ))
    })?;
    if let Some(bad) = data.iter().find(|&&b| b > 9) {
        return Err(Error::Data(format!("label byte {bad} out of range 0..=9")));
    }
    Ok(LabelVector { count, labels: data.to_vec() })
}

pub fn load_idx_images<P: AsRef<Path>>(path: P) -> Result<ImageTensor> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn load_idx_labels<P: AsRef<Path>>(path: P) -> Result<LabelVector> {
    parse_idx_labels(&std::fs::read(path)?)
}

/// Per-(scheme, width, regularisation) collection of square weight-matrix
/// snapshots across runs, layers and epochs.
///
/// `matrices[run][layer][epoch]` holds the analysed d x d matrices, where
/// the epoch axis has `epochs + 1` entries and index 0 is the state before
/// any update. `accuracies[run][epoch]` follows the same epoch axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStore {
    pub scheme: Scheme,
    pub regularized: bool,
    pub d: usize,
    pub layer_count: usize,
    /// Number of training epochs; snapshots exist at `0..=epochs`.
    pub epochs: usize,
    pub runs: usize,
    pub matrices: Vec<Vec<Vec<Array2<f64>>>>,
    pub accuracies: Vec<Vec<f64>>,
    pub master_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    scheme: Scheme,
    regularized: bool,
    d: usize,
    layer_count: usize,
    epochs: usize,
    runs: usize,
    master_seed: u64,
}

impl SnapshotStore {
    pub fn snapshot_count(&self) -> usize {
        self.epochs + 1
    }

    /// Matrices of one (layer, epoch) cell across all runs.
    pub fn cell(&self, layer: usize, epoch: usize) -> Vec<ndarray::ArrayView2<'_, f64>> {
        self.matrices.iter().map(|run| run[layer][epoch].view()).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.matrices.len() != self.runs || self.accuracies.len() != self.runs {
            return Err(Error::Data("run count disagrees with payload".into()));
        }
        for (r, run) in self.matrices.iter().enumerate() {
            if run.len() != self.layer_count {
                return Err(Error::Data(format!("run {r} has {} layers", run.len())));
            }
            for (l, layer) in run.iter().enumerate() {
                if layer.len() != self.snapshot_count() {
                    return Err(Error::Data(format!(
                        "run {r} layer {l} has {} snapshots, expected {}",
                        layer.len(),
                        self.snapshot_count()
                    )));
                }
                for m in layer {
                    if m.dim() != (self.d, self.d) {
                        return Err(Error::Data(format!(
                            "run {r} layer {l}: matrix shape {:?} != ({}, {})",
                            m.dim(),
                            self.d,
                            self.d
                        )));
                    }
                }
            }
        }
        for (r, acc) in self.accuracies.iter().enumerate() {
            if acc.len() != self.snapshot_count() {
                return Err(Error::Data(format!("run {r} has {} accuracy entries", acc.len())));
            }
        }
        Ok(())
    }
}

/// Serialise a store: magic "PIGW", version, JSON metadata block with a
/// declared byte length, then the row-major little-endian f64 payload
/// (all matrices run/layer/epoch-major, then all accuracies).
pub fn store_to_bytes(store: &SnapshotStore) -> Result<Vec<u8>> {
    store.validate()?;
    let meta = StoreMeta {
        scheme: store.scheme,
        regularized: store.regularized,
        d: store.d,
        layer_count: store.layer_count,
        epochs: store.epochs,
        runs: store.runs,
        master_seed: store.master_seed,
    };
    let meta_json = serde_json::to_vec(&meta).expect("metadata serialises");
    let n_mat = store.runs * store.layer_count * store.snapshot_count() * store.d * store.d;
    let n_acc = store.runs * store.snapshot_count();
    let mut out = Vec::with_capacity(16 + meta_json.len() + 8 * (n_mat + n_acc));
    out.extend_from_slice(STORE_MAGIC);
    out.extend_from_slice(&STORE_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta_json);
    for run in &store.matrices {
        for layer in run {
            for m in layer {
                for i in 0..store.d {
                    for j in 0..store.d {
                        out.extend_from_slice(&m[[i, j]].to_le_bytes());
                    }
                }
            }
        }
    }
    for acc in &store.accuracies {
        for &a in acc {
            out.extend_from_slice(&a.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn store_from_bytes(bytes: &[u8]) -> Result<SnapshotStore> {
    if bytes.len() < 16 {
        return Err(Error::Format("store header truncated".into()));
    }
    if &bytes[0..4] != STORE_MAGIC {
        return Err(Error::Format(format!(
            "bad store magic {:?}, expected {:?}",
            &bytes[0..4],
            STORE_MAGIC
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != STORE_VERSION {
        return Err(Error::Format(format!("unsupported store version {version}")));
    }
    let meta_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let meta_end = 16usize
        .checked_add(meta_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Format("metadata block overruns the file".into()))?;
    let meta: StoreMeta = serde_json::from_slice(&bytes[16..meta_end])
        .map_err(|e| Error::Format(format!("metadata: {e}")))?;

    let snaps = meta
        .epochs
        .checked_add(1)
        .ok_or_else(|| Error::Data("epoch count overflow".into()))?;
    let per_matrix = meta.d.checked_mul(meta.d).ok_or_else(|| Error::Data("d overflow".into()))?;
    let n_mat = meta
        .runs
        .checked_mul(meta.layer_count)
        .and_then(|v| v.checked_mul(snaps))
        .and_then(|v| v.checked_mul(per_matrix))
        .ok_or_else(|| Error::Data("payload size overflow".into()))?;
    let n_acc = meta.runs.checked_mul(snaps).ok_or_else(|| Error::Data("payload size overflow".into()))?;
    let need = n_mat
        .checked_add(n_acc)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(meta_end))
        .ok_or_else(|| Error::Data("payload size overflow".into()))?;
    if bytes.len() != need {
        return Err(Error::Data(format!(
            "payload length {} disagrees with header (expected {})",
            bytes.len(),
            need
        )));
    }

    let mut offset = meta_end;
    let mut next = || {
        let v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
        offset += 8;
        v
    };
    let mut matrices = Vec::with_capacity(meta.runs);
    for _ in 0..meta.runs {
        let mut layers = Vec::with_capacity(meta.layer_count);
        for _ in 0..meta.layer_count {
            let mut snapshots = Vec::with_capacity(snaps);
            for _ in 0..snaps {
                let mut m = Array2::<f64>::zeros((meta.d, meta.d));
                for i in 0..meta.d {
                    for j in 0..meta.d {
                        m[[i, j]] = next();
                    }
                }
                snapshots.push(m);
            }
            layers.push(snapshots);
        }
        matrices.push(layers);
    }
    let mut accuracies = Vec::with_capacity(meta.runs);
    for _ in 0..meta.runs {
        accuracies.push((0..snaps).map(|_| next()).collect());
    }

    let store = SnapshotStore {
        scheme: meta.scheme,
        regularized: meta.regularized,
        d: meta.d,
        layer_count: meta.layer_count,
        epochs: meta.epochs,
        runs: meta.runs,
        matrices,
        accuracies,
        master_seed: meta.master_seed,
    };
    store.validate()?;
    Ok(store)
}

pub fn write_store<P: AsRef<Path>>(store: &SnapshotStore, path: P) -> Result<()> {
    std::fs::write(path, store_to_bytes(store)?)?;
    Ok(())
}

pub fn read_store<P: AsRef<Path>>(path: P) -> Result<SnapshotStore> {
    store_from_bytes(&std::fs::read(path)?)
}

/// One labelled row of a numeric table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub values: Vec<f64>,
}

/// Write a rectangular numeric table as CSV: one header line, then each
/// row with reals rendered to 16 significant digits so a parse-back
/// reproduces the values to full precision.
pub fn export_table<P: AsRef<Path>>(header: &[&str], rows: &[TableRow], path: P) -> Result<()> {
    for (k, row) in rows.iter().enumerate() {
        if row.values.len() != header.len() {
            return Err(Error::Argument(format!(
                "row {k} has {} values but the header names {} columns",
                row.values.len(),
                header.len()
            )));
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let mut first = true;
        for v in &row.values {
            if !first {
                write!(out, ",")?;
            }
            write!(out, "{}", format_real(*v))?;
            first = false;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Render a real with 16 significant digits, trimming the exponent form
/// for integers so tables stay scannable.
pub fn format_real(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.15e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn idx_image_bytes(count: usize, rows: usize, cols: usize, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&IDX_IMAGE_MAGIC.to_be_bytes());
        out.extend_from_slice(&(count as u32).to_be_bytes());
        out.extend_from_slice(&(rows as u32).to_be_bytes());
        out.extend_from_slice(&(cols as u32).to_be_bytes());
        out.extend_from_slice(data);
        out
    }

    pub(crate) fn idx_label_bytes(labels: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
        out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        out.extend_from_slice(labels);
        out
    }

    pub(crate) fn random_store(runs: usize, layers: usize, epochs: usize, d: usize, seed: u64) -> SnapshotStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snaps = epochs + 1;
        SnapshotStore {
            scheme: Scheme::Gaussian,
            regularized: false,
            d,
            layer_count: layers,
            epochs,
            runs,
            matrices: (0..runs)
                .map(|_| {
                    (0..layers)
                        .map(|_| {
                            (0..snaps)
                                .map(|_| {
                                    Array2::from_shape_fn((d, d), |_| rng.random_range(-2.0..2.0))
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            accuracies: (0..runs)
                .map(|_| (0..snaps).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            master_seed: seed,
        }
    }

    #[test]
    fn saturated_image_parses_to_unit_pixels() {
        let bytes = idx_image_bytes(2, 28, 28, &vec![255u8; 2 * 28 * 28]);
        let t = parse_idx_images(&bytes).unwrap();
        assert_eq!((t.count, t.rows, t.cols), (2, 28, 28));
        assert!(t.pixels.iter().all(|&p| p == 1.0));

        let zeros = idx_image_bytes(1, 28, 28, &vec![0u8; 28 * 28]);
        let t = parse_idx_images(&zeros).unwrap();
        assert!(t.pixels.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn image_magic_and_truncation_checks() {
        let mut bytes = idx_image_bytes(1, 2, 2, &[1, 2, 3, 4]);
        bytes[0..4].copy_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Format(_))));

        let full = idx_image_bytes(2, 3, 3, &[7u8; 18]);
        assert!(matches!(parse_idx_images(&full[..20]), Err(Error::Io(_))));
    }

    #[test]
    fn image_bytes_roundtrip_at_byte_granularity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data: Vec<u8> = (0..3 * 4 * 4).map(|_| rng.random()).collect();
        let t = parse_idx_images(&idx_image_bytes(3, 4, 4, &data)).unwrap();
        for (byte, pixel) in data.iter().zip(&t.pixels) {
            assert_eq!(*pixel, *byte as f64 / 255.0);
            assert_eq!((pixel * 255.0).round() as u8, *byte);
        }
    }

    #[test]
    fn labels_parse_and_reject() {
        let t = parse_idx_labels(&idx_label_bytes(&[3, 1, 4])).unwrap();
        assert_eq!(t.labels, vec![3, 1, 4]);

        let imagey = idx_image_bytes(0, 0, 0, &[]);
        assert!(matches!(parse_idx_labels(&imagey), Err(Error::Format(_))));

        let bad = idx_label_bytes(&[3, 10, 4]);
        assert!(matches!(parse_idx_labels(&bad), Err(Error::Data(_))));

        let many: Vec<u8> = (0..10_000).map(|k| (k % 10) as u8).collect();
        assert_eq!(parse_idx_labels(&idx_label_bytes(&many)).unwrap().count, 10_000);
    }

    #[test]
    fn real_mnist_files_load() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
        if !dir.exists() {
            eprintln!("mnist data not present, skipping");
            return;
        }
        let images = load_idx_images(dir.join("train-images-idx3-ubyte")).unwrap();
        let labels = load_idx_labels(dir.join("train-labels-idx1-ubyte")).unwrap();
        assert_eq!(images.count, 60_000);
        assert_eq!((images.rows, images.cols), (28, 28));
        assert_eq!(labels.count, 60_000);
    }

    #[test]
    fn store_roundtrip_bit_exact() {
        let store = random_store(2, 3, 1, 4, 997);
        let bytes = store_to_bytes(&store).unwrap();
        let back = store_from_bytes(&bytes).unwrap();
        assert_eq!(store, back);
        // and byte-stable
        assert_eq!(bytes, store_to_bytes(&back).unwrap());
    }

    #[test]
    fn empty_store_roundtrips() {
        let store = random_store(0, 0, 0, 4, 1);
        let back = store_from_bytes(&store_to_bytes(&store).unwrap()).unwrap();
        assert_eq!(back.runs, 0);
        assert_eq!(back, store);
    }

    #[test]
    fn store_rejects_corruption() {
        let store = random_store(1, 1, 0, 3, 5);
        let mut bytes = store_to_bytes(&store).unwrap();
        bytes[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(store_from_bytes(&bytes), Err(Error::Format(_))));

        let mut bytes = store_to_bytes(&store).unwrap();
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(store_from_bytes(&bytes), Err(Error::Format(_))));

        let bytes = store_to_bytes(&store).unwrap();
        assert!(store_from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn csv_export_and_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        export_table(
            &["epoch", "I_3"],
            &[TableRow { values: vec![0.0, 10.0] }],
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("epoch,I_3\n"));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<TableRow> = (0..20)
            .map(|_| TableRow {
                values: vec![rng.random_range(-1e6..1e6), rng.random_range(-1.0..1.0)],
            })
            .collect();
        let path = dir.path().join("v.csv");
        export_table(&["a", "b"], &rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for (line, row) in text.lines().skip(1).zip(&rows) {
            for (field, expect) in line.split(',').zip(&row.values) {
                let got: f64 = field.parse().unwrap();
                assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            }
        }

        // header-only file for zero rows
        let path = dir.path().join("empty.csv");
        export_table(&["x"], &[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x\n");

        // ragged rows refused
        assert!(export_table(&["a", "b"], &[TableRow { values: vec![1.0] }], dir.path().join("r.csv")).is_err());
    }

    proptest! {
        #[test]
        fn store_roundtrip_property(runs in 0usize..3, layers in 1usize..3, epochs in 0usize..3, seed in 0u64..1000) {
            let store = random_store(runs, layers, epochs, 4, seed);
            let back = store_from_bytes(&store_to_bytes(&store).unwrap()).unwrap();
            prop_assert_eq!(store, back);
        }

        #[test]
        fn idx_parsers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = parse_idx_images(&bytes);
            let _ = parse_idx_labels(&bytes);
            let _ = store_from_bytes(&bytes);
        }
    }
}
