//! Dataset plumbing: the synthetic hypercube-blob generator, CSV ingestion
//! and emission, feature standardization, and stratified splitting.
//!
//! The generator places each class mean on a distinct vertex of the hypercube
//! `{0, class_sep}^P` (first C vertices in Gray-code order, assignment
//! shuffled by the seed so class adjacency varies across repetitions) and
//! draws samples from a spherical Gaussian around it. Per-class counts follow
//! largest-remainder rounding of `N * class_weights`, so stated imbalance
//! ratios are hit exactly.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::core::Dataset;
use crate::error::Error;
use crate::Result;

/// Recipe for one synthetic dataset.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GeneratorSpec {
    pub classes: usize,
    pub features: usize,
    pub samples: usize,
    /// Nonnegative class proportions; must sum to 1 within 1e-9.
    pub class_weights: Vec<f64>,
    /// Hypercube edge length separating class means.
    #[serde(default = "default_class_sep")]
    pub class_sep: f64,
    /// Variance of the spherical Gaussian around each vertex.
    #[serde(default = "default_variance")]
    pub variance: f64,
    pub seed: u64,
}

fn default_class_sep() -> f64 {
    3.0
}

fn default_variance() -> f64 {
    1.0
}

impl GeneratorSpec {
    /// Uniform class weights, default separation and variance.
    pub fn balanced(classes: usize, features: usize, samples: usize, seed: u64) -> Self {
        Self {
            classes,
            features,
            samples,
            class_weights: vec![1.0 / classes.max(1) as f64; classes],
            class_sep: default_class_sep(),
            variance: default_variance(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.features == 0 || self.samples == 0 {
            return Err(Error::InvalidInput(
                "features and samples must be positive".into(),
            ));
        }
        if self.class_weights.len() != self.classes {
            return Err(Error::Dimension(format!(
                "{} class weights for {} classes",
                self.class_weights.len(),
                self.classes
            )));
        }
        if self.class_weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "class weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = self.class_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "class weights sum to {sum}, expected 1 within 1e-9"
            )));
        }
        if !(self.class_sep > 0.0) || !(self.variance > 0.0) {
            return Err(Error::InvalidInput(
                "class_sep and variance must be positive".into(),
            ));
        }
        if self.features < 63 && self.classes > (1usize << self.features) {
            return Err(Error::Capacity(format!(
                "{} classes exceed the {} vertices of a {}-cube",
                self.classes,
                1usize << self.features,
                self.features
            )));
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `total` into parts proportional to
/// `weights`. Ties in the fractional parts resolve to the lower index.
pub fn largest_remainder_counts(total: usize, weights: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::with_capacity(weights.len());
    let mut order: Vec<(usize, f64)> = Vec::with_capacity(weights.len());
    let mut assigned = 0usize;
    for (c, &w) in weights.iter().enumerate() {
        let exact = total as f64 * w;
        let floor = exact.floor();
        counts.push(floor as usize);
        assigned += floor as usize;
        order.push((c, exact - floor));
    }
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(c, _) in order.iter().take(total - assigned) {
        counts[c] += 1;
    }
    counts
}

/// Vertex `i` of the hypercube walk in Gray-code order, scaled by `sep`.
fn gray_vertex(i: usize, p: usize, sep: f64) -> Vec<f64> {
    let g = i ^ (i >> 1);
    (0..p)
        .map(|bit| if bit < 63 && (g >> bit) & 1 == 1 { sep } else { 0.0 })
        .collect()
}

/// Draws the dataset described by `spec`: Gaussian blobs at shuffled
/// Gray-code hypercube vertices with exact largest-remainder class counts.
pub fn generate_hypercube(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut vertex_of_class: Vec<usize> = (0..spec.classes).collect();
    vertex_of_class.shuffle(&mut rng);

    let counts = largest_remainder_counts(spec.samples, &spec.class_weights);
    let normal = Normal::new(0.0, spec.variance.sqrt())
        .map_err(|e| Error::InvalidInput(format!("bad variance: {e}")))?;

    let mut features = Array2::zeros((spec.samples, spec.features));
    let mut labels = Array2::zeros((spec.samples, spec.classes));
    let mut row = 0usize;
    for (class, &count) in counts.iter().enumerate() {
        let vertex = gray_vertex(vertex_of_class[class], spec.features, spec.class_sep);
        for _ in 0..count {
            for (p, &v) in vertex.iter().enumerate() {
                features[[row, p]] = v + normal.sample(&mut rng);
            }
            labels[[row, class]] = 1.0;
            row += 1;
        }
    }
    debug_assert_eq!(row, spec.samples);
    Dataset::new(features, labels)
}

/// A parsed CSV: the dataset plus the label-name mapping (class index =
/// position in `label_names`, first-appearance order) and how many rows were
/// dropped for missing/non-finite values.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub label_names: Vec<String>,
    pub dropped_rows: usize,
}

/// Reads a header-rowed CSV whose `label_column` holds categorical labels;
/// every other column must parse as a real feature. Rows with empty or
/// non-finite cells are dropped (count reported); a cell that fails to parse
/// as a number is a hard error naming the 1-based file line.
pub fn load_csv(path: &Path, label_column: &str) -> Result<LoadedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad header: {e}"),
        })?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::InvalidInput(format!(
            "label column {label_column:?} not found in header {:?}",
            headers.iter().collect::<Vec<_>>()
        )))?;
    let p = headers.len() - 1;
    if p == 0 {
        return Err(Error::InvalidInput(
            "CSV needs at least one feature column besides the label".into(),
        ));
    }

    let mut label_names: Vec<String> = Vec::new();
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut dropped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| Error::Parse {
            line,
            msg: format!("malformed row: {e}"),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                msg: format!("{} cells, expected {}", record.len(), headers.len()),
            });
        }
        let mut feats = Vec::with_capacity(p);
        let mut drop_row = false;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            if cell.is_empty() {
                drop_row = true;
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("feature column {:?} has non-numeric value {cell:?}", &headers[j]),
            })?;
            if !v.is_finite() {
                drop_row = true;
            }
            feats.push(v);
        }
        let label = record.get(label_idx).unwrap_or("");
        if label.is_empty() {
            drop_row = true;
        }
        if drop_row {
            dropped += 1;
            continue;
        }
        let class = match label_names.iter().position(|n| n == label) {
            Some(c) => c,
            None => {
                label_names.push(label.to_string());
                label_names.len() - 1
            }
        };
        rows.push((feats, class));
    }
    if dropped > 0 {
        log::warn!("{dropped} rows dropped from {} for missing values", path.display());
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no usable rows in {}",
            path.display()
        )));
    }

    let c = label_names.len();
    let mut features = Array2::zeros((rows.len(), p));
    let mut labels = Array2::zeros((rows.len(), c));
    for (n, (feats, class)) in rows.iter().enumerate() {
        for (j, &v) in feats.iter().enumerate() {
            features[[n, j]] = v;
        }
        labels[[n, *class]] = 1.0;
    }
    Ok(LoadedCsv {
        dataset: Dataset::new(features, labels)?,
        label_names,
        dropped_rows: dropped,
    })
}

/// Writes the dataset as a CSV with header `f0..f{P-1},label`. Labels are the
/// given names, or `c{index}` when names are absent. Features use the f64
/// shortest round-trip rendering, so a reload is bit-exact.
pub fn save_csv(dataset: &Dataset, path: &Path, label_names: Option<&[String]>) -> Result<()> {
    if let Some(names) = label_names {
        if names.len() != dataset.class_count() {
            return Err(Error::Dimension(format!(
                "{} label names for {} classes",
                names.len(),
                dataset.class_count()
            )));
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dataset.feature_count()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    writer.write_record(&header)?;
    let mut cell = String::new();
    for n in 0..dataset.sample_count() {
        let mut record: Vec<String> = Vec::with_capacity(dataset.feature_count() + 1);
        for &v in dataset.feature_row(n) {
            cell.clear();
            write!(cell, "{v}").expect("formatting f64 cannot fail");
            record.push(cell.clone());
        }
        let class = dataset.label_class(n);
        record.push(match label_names {
            Some(names) => names[class].clone(),
            None => format!("c{class}"),
        });
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-feature location/scale fitted on a training set.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FeatureStats {
    /// Subtracted location; 0 for passthrough features.
    pub mean: Array1<f64>,
    /// Dividing scale (sample standard deviation); 1 for passthrough features.
    pub scale: Array1<f64>,
}

/// Fits per-feature mean and sample standard deviation (ddof = 1). Features
/// with zero variance are passed through unscaled (and uncentered) with a
/// warning, so constant columns survive the transform unchanged.
pub fn standardize_fit(train: &Dataset) -> Result<FeatureStats> {
    let n = train.sample_count();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "standardization needs at least 2 samples, got {n}"
        )));
    }
    let p = train.feature_count();
    let mut mean = Array1::zeros(p);
    let mut scale = Array1::ones(p);
    for j in 0..p {
        let col = train.features().column(j);
        let mu = col.sum() / n as f64;
        let var = col.iter().map(|&v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        if sd > 1e-12 {
            mean[j] = mu;
            scale[j] = sd;
        } else {
            log::warn!("feature {j} has zero variance; passed through unscaled");
        }
    }
    Ok(FeatureStats { mean, scale })
}

/// Applies fitted stats: x -> (x - mean) / scale per feature.
pub fn standardize_apply(stats: &FeatureStats, dataset: &Dataset) -> Result<Dataset> {
    if stats.mean.len() != dataset.feature_count() {
        return Err(Error::Dimension(format!(
            "stats for {} features applied to {}-feature data",
            stats.mean.len(),
            dataset.feature_count()
        )));
    }
    let mut features = dataset.features().clone();
    for (j, mut col) in features.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| (v - stats.mean[j]) / stats.scale[j]);
    }
    Dataset::new(features, dataset.labels().clone())
}

/// How to size a stratified split.
#[derive(Debug, Clone)]
pub enum SplitSpec {
    /// Per-class train count = round(fraction * class size); the test side
    /// takes every remaining sample.
    Fraction(f64),
    /// Exact per-class train counts, and optionally exact per-class test
    /// counts (`None` puts every remaining sample in the test side).
    Counts {
        train: Vec<usize>,
        test: Option<Vec<usize>>,
    },
}

/// Splits the dataset class by class: membership is a seeded shuffle of each
/// class's row indices, so counts are exact and deterministic under the seed.
pub fn stratified_split(
    dataset: &Dataset,
    spec: &SplitSpec,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let c = dataset.class_count();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for n in 0..dataset.sample_count() {
        by_class[dataset.label_class(n)].push(n);
    }

    let (train_counts, test_counts): (Vec<usize>, Option<Vec<usize>>) = match spec {
        SplitSpec::Fraction(f) => {
            if !(0.0..=1.0).contains(f) {
                return Err(Error::InvalidInput(format!(
                    "train fraction must lie in [0, 1], got {f}"
                )));
            }
            (
                by_class
                    .iter()
                    .map(|rows| (*f * rows.len() as f64).round() as usize)
                    .collect(),
                None,
            )
        }
        SplitSpec::Counts { train, test } => {
            for (name, counts) in [("train", Some(train)), ("test", test.as_ref())] {
                if let Some(counts) = counts {
                    if counts.len() != c {
                        return Err(Error::Dimension(format!(
                            "{name} counts for {} classes, dataset has {c}",
                            counts.len()
                        )));
                    }
                }
            }
            (train.clone(), test.clone())
        }
    };
    for class in 0..c {
        let need = train_counts[class] + test_counts.as_ref().map_or(0, |t| t[class]);
        if need > by_class[class].len() {
            return Err(Error::Capacity(format!(
                "class {class} has {} samples, split requests {need}",
                by_class[class].len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (class, rows) in by_class.iter_mut().enumerate() {
        rows.shuffle(&mut rng);
        let k = train_counts[class];
        train_rows.extend_from_slice(&rows[..k]);
        match &test_counts {
            Some(t) => test_rows.extend_from_slice(&rows[k..k + t[class]]),
            None => test_rows.extend_from_slice(&rows[k..]),
        }
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok((dataset.subset(&train_rows)?, dataset.subset(&test_rows)?))
}
