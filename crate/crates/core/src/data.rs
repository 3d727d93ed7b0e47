//! Labeled datasets: validation, CSV and JSON I/O, synthetic generators and
//! seeded train/test splits.
//!
//! CSV rows are `label,feat_1,...,feat_d` with the label written as `-1`,
//! `1` or `+1`. A header line is recognised only when its first cell is the
//! literal `label`. Numbers are written with Rust's shortest round-trip
//! formatting, so `load_csv(save_csv(data)) == data` bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `m` labeled samples in `d` dimensions, labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    m: usize,
    d: usize,
    labels: Vec<f64>,
    features: Vec<Vec<f64>>,
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;
    fn try_from(r: DatasetRepr) -> Result<Self> {
        if r.m != r.labels.len() || r.m != r.features.len() {
            return Err(Error::param(
                "m",
                format!(
                    "declares {} samples but has {} labels and {} feature rows",
                    r.m,
                    r.labels.len(),
                    r.features.len()
                ),
            ));
        }
        let ds = Dataset::from_rows(r.features, r.labels)?;
        if ds.d != r.d {
            return Err(Error::DimensionMismatch {
                expected: r.d,
                got: ds.d,
            });
        }
        Ok(ds)
    }
}

impl From<Dataset> for DatasetRepr {
    fn from(ds: Dataset) -> Self {
        DatasetRepr {
            m: ds.len(),
            d: ds.d,
            features: ds.features.chunks(ds.d).map(<[f64]>::to_vec).collect(),
            labels: ds.labels,
        }
    }
}

impl Dataset {
    /// Builds a dataset from row-major features.
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if d == 0 {
            return Err(Error::param("d", "feature dimension must be at least 1"));
        }
        if features.len() != d * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: d * labels.len(),
                got: features.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Parse {
                row: i + 1,
                reason: format!("label must be -1 or +1, got {}", labels[i]),
            });
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: i / d + 1,
                reason: "non-finite feature value".into(),
            });
        }
        Ok(Dataset { d, features, labels })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::Parse {
                row: i + 1,
                reason: format!("expected {d} features, found {}", r.len()),
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        Self::new(d, rows.concat(), labels)
    }

    /// Number of samples `m`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Row-major feature matrix.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks(self.d).zip(self.labels.iter().copied())
    }

    /// `Σ_j y_j x_j`.
    pub fn signed_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.d];
        for (x, y) in self.rows() {
            for (acc, v) in s.iter_mut().zip(x) {
                *acc += y * v;
            }
        }
        s
    }

    /// A copy with every label negated.
    pub fn flipped(&self) -> Dataset {
        Dataset {
            d: self.d,
            features: self.features.clone(),
            labels: self.labels.iter().map(|y| -y).collect(),
        }
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(idx.len() * self.d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(self.x(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            d: self.d,
            features,
            labels,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

/// Parses CSV content. Row numbers in errors are 1-based line numbers.
pub fn read_csv(reader: impl std::io::Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut d: Option<usize> = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record.position().map_or(idx + 1, |p| p.line() as usize);
        if idx == 0 && record.get(0) == Some("label") {
            continue;
        }
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let label = match record.get(0) {
            Some("1") | Some("+1") => 1.0,
            Some("-1") => -1.0,
            other => {
                return Err(Error::Parse {
                    row,
                    reason: format!("label must be -1 or +1, got `{}`", other.unwrap_or("")),
                })
            }
        };
        let feats = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(col, tok)| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        reason: format!("feature {} is not a finite number: `{tok}`", col + 1),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        match d {
            None if feats.is_empty() => {
                return Err(Error::Parse {
                    row,
                    reason: "row has no features".into(),
                })
            }
            None => d = Some(feats.len()),
            Some(d) if d != feats.len() => {
                return Err(Error::Parse {
                    row,
                    reason: format!("expected {d} features, found {}", feats.len()),
                })
            }
            Some(_) => {}
        }
        rows.push(feats);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::from_rows(rows, labels)
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    write_csv(data, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn write_csv(data: &Dataset, w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "label")?;
    for k in 1..=data.dim() {
        write!(w, ",f{k}")?;
    }
    writeln!(w)?;
    for (x, y) in data.rows() {
        write!(w, "{}", if y > 0.0 { "1" } else { "-1" })?;
        for v in x {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    TwoGaussians,
    SparseBlobs,
}

/// Synthetic class-conditional Gaussian generator.
///
/// Labels are uniform on `{-1, +1}`; features are `y·μ + σ·ξ` with standard
/// normal `ξ` (ziggurat sampler from `rand_distr`, fed by ChaCha8). The mean
/// `μ = (separation / 2) · 1/√k` on the `k` informative coordinates, so the
/// class means sit `separation` apart. `SparseBlobs` leaves the trailing
/// `irrelevant_dims` coordinates as pure noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub d: usize,
    pub mean_separation: f64,
    pub noise_sigma: f64,
    #[serde(default)]
    pub irrelevant_dims: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn two_gaussians(d: usize, mean_separation: f64, noise_sigma: f64, seed: u64) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::TwoGaussians,
            d,
            mean_separation,
            noise_sigma,
            irrelevant_dims: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("d", "must be at least 1"));
        }
        if !(self.noise_sigma > 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::param("noise_sigma", "must be positive and finite"));
        }
        if !self.mean_separation.is_finite() {
            return Err(Error::param("mean_separation", "must be finite"));
        }
        if self.kind == GeneratorKind::SparseBlobs && self.irrelevant_dims >= self.d {
            return Err(Error::param("irrelevant_dims", "must be smaller than d"));
        }
        Ok(())
    }

    fn informative_dims(&self) -> usize {
        match self.kind {
            GeneratorKind::TwoGaussians => self.d,
            GeneratorKind::SparseBlobs => self.d - self.irrelevant_dims,
        }
    }
}

/// Draws `m` samples; stream 0 of the spec's seed.
pub fn generate(spec: &GeneratorSpec, m: usize) -> Result<Dataset> {
    generate_stream(spec, m, 0)
}

/// Draws `m` samples from substream `stream`, so training and holdout sets
/// from one spec are independent.
pub fn generate_stream(spec: &GeneratorSpec, m: usize, stream: u64) -> Result<Dataset> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = stream_rng(spec.seed, stream);
    let k = spec.informative_dims();
    let mu = 0.5 * spec.mean_separation / (k as f64).sqrt();
    let mut features = Vec::with_capacity(m * spec.d);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for l in 0..spec.d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let mean = if l < k { y * mu } else { 0.0 };
            features.push(mean + spec.noise_sigma * noise);
        }
        labels.push(y);
    }
    Dataset::new(spec.d, features, labels)
}

/// Seeded shuffle split into `⌈f·m⌉` training rows and the remainder.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param("train_fraction", "must lie strictly between 0 and 1"));
    }
    let m = data.len();
    let n_train = (train_fraction * m as f64).ceil() as usize;
    if n_train == 0 || n_train >= m {
        return Err(Error::param(
            "train_fraction",
            format!("split of {m} rows leaves an empty part"),
        ));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut stream_rng(seed, 0));
    Ok((data.subset(&idx[..n_train]), data.subset(&idx[n_train..])))
}
