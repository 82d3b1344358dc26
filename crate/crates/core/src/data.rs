//! Datasets: CSV ingestion, bipolar target encoding, splits and generators.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{PscnnError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let dim = features.first().ok_or(PscnnError::EmptyDataset)?.len();
        if dim == 0 {
            return Err(PscnnError::InvalidParameters("samples need at least one feature".into()));
        }
        if let Some((row, f)) = features.iter().enumerate().find(|(_, f)| f.len() != dim) {
            return Err(PscnnError::RaggedRow {
                row: row + 1,
                expected: dim,
                actual: f.len(),
            });
        }
        if labels.len() != features.len() {
            return Err(PscnnError::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(PscnnError::InvalidParameters(format!(
                "label {bad} is outside {class_count} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_count,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(PscnnError::DimensionMismatch {
                expected: self.dim(),
                actual: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    /// Samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Which column of a CSV row holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    /// `None` sniffs: a first row that does not parse as numbers is a header.
    pub has_header: Option<bool>,
}

fn looks_like_header(record: &csv::StringRecord) -> bool {
    record.iter().any(|f| f.trim().parse::<f64>().is_err())
}

/// Reads comma-separated numeric rows with an integer label column.
pub fn load_csv(path: impl AsRef<Path>, options: CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| PscnnError::io(path, e))?;
    parse_csv(&text, options)
}

pub fn parse_csv(text: &str, options: CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| PscnnError::Parse {
            row: i + 1,
            column: 0,
            message: e.to_string(),
        })?;
        // tolerate blank lines
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((i + 1, rec));
    }

    let mut header = None;
    if let Some((_, first)) = records.first() {
        let is_header = options.has_header.unwrap_or_else(|| looks_like_header(first));
        if is_header {
            header = Some(records.remove(0).1);
        }
    }
    let (_, first) = records.first().ok_or(PscnnError::EmptyDataset)?;
    let width = first.len();
    if width < 2 {
        return Err(PscnnError::Parse {
            row: 1,
            column: 1,
            message: "need at least one feature column and a label column".into(),
        });
    }
    let label_col = match options.label_column {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(c) if c < width => c,
        LabelColumn::Index(c) => {
            return Err(PscnnError::InvalidParameters(format!(
                "label column {c} does not exist in {width}-column rows"
            )))
        }
    };

    let mut features = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (row, rec) in &records {
        if rec.len() != width {
            return Err(PscnnError::RaggedRow {
                row: *row,
                expected: width,
                actual: rec.len(),
            });
        }
        let mut x = Vec::with_capacity(width - 1);
        for (col, field) in rec.iter().enumerate() {
            if col == label_col {
                let label = field.parse::<usize>().map_err(|e| PscnnError::Parse {
                    row: *row,
                    column: col + 1,
                    message: format!("label `{field}`: {e}"),
                })?;
                labels.push(label);
            } else {
                let v = field.parse::<f64>().map_err(|e| PscnnError::Parse {
                    row: *row,
                    column: col + 1,
                    message: format!("`{field}`: {e}"),
                })?;
                x.push(v);
            }
        }
        features.push(x);
    }

    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    let ds = Dataset::new(features, labels, class_count)?;
    match header {
        Some(h) => {
            let names = h
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != label_col)
                .map(|(_, name)| name.to_string())
                .collect();
            ds.with_feature_names(names)
        }
        None => Ok(ds),
    }
}

/// Writes features then the label, one sample per line. Floats use Rust's
/// shortest round-trip formatting, so reloading is exact.
pub fn write_csv_to<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let err = |e: csv::Error| PscnnError::InvalidParameters(format!("csv write failed: {e}"));
    if let Some(names) = ds.feature_names() {
        let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
        header.push("label");
        writer.write_record(&header).map_err(err)?;
    }
    for (x, l) in ds.features.iter().zip(&ds.labels) {
        let mut fields: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        fields.push(l.to_string());
        writer.write_record(&fields).map_err(err)?;
    }
    writer.flush().map_err(|e| PscnnError::InvalidParameters(format!("csv write failed: {e}")))?;
    Ok(())
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv_to(ds, &mut buf)?;
    crate::persist::write_atomically(path, &buf)
}

/// One-hot over the classes, `+1` for the true class and `-1` elsewhere.
pub fn bipolar_targets(ds: &Dataset) -> Vec<Vec<f64>> {
    ds.labels
        .iter()
        .map(|&l| bipolar_target(l, ds.class_count))
        .collect()
}

pub fn bipolar_target(label: usize, class_count: usize) -> Vec<f64> {
    (0..class_count)
        .map(|c| if c == label { 1.0 } else { -1.0 })
        .collect()
}

/// The four XOR points `(0,0) (0,1) (1,0) (1,1)` labelled `0 1 1 0`.
pub fn xor_dataset() -> Dataset {
    let features = vec![
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
    ];
    Dataset::new(features, vec![0, 1, 1, 0], 2).expect("xor table is well formed")
}

/// Isotropic Gaussian blobs, one per class, with centres drawn uniformly
/// from `[-1, 1]^dim`. Samples are emitted class by class.
pub fn gaussian_clusters(
    classes: usize,
    dim: usize,
    n_per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 || dim == 0 || n_per_class == 0 {
        return Err(PscnnError::InvalidParameters(format!(
            "clusters need classes >= 2, dim >= 1, n >= 1 (got {classes}, {dim}, {n_per_class})"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(PscnnError::InvalidParameters(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(classes * n_per_class);
    let mut labels = Vec::with_capacity(classes * n_per_class);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            features.push(
                center
                    .iter()
                    .map(|&m| m + spread * noise.sample(&mut rng))
                    .collect(),
            );
            labels.push(c);
        }
    }
    Dataset::new(features, labels, classes)
}

/// Seeded shuffle, then the first `round(n * train_fraction)` samples train.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PscnnError::InvalidParameters(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(PscnnError::InvalidParameters(format!(
            "a {train_fraction} split of {n} samples leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((ds.subset(&order[..n_train]), ds.subset(&order[n_train..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_xor_table() {
        let ds = parse_csv("0,0,0\n0,1,1\n1,0,1\n1,1,0", CsvOptions::default()).unwrap();
        assert_eq!(ds, xor_dataset());
        assert_eq!((ds.dim(), ds.class_count()), (2, 2));
    }

    #[test]
    fn empty_and_ragged() {
        assert!(matches!(parse_csv("", CsvOptions::default()), Err(PscnnError::EmptyDataset)));
        assert!(matches!(
            parse_csv("a,b,label\n", CsvOptions::default()),
            Err(PscnnError::EmptyDataset)
        ));
        let err = parse_csv("1,2,3,0\n4,5,6,1\n7,8,1\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, PscnnError::RaggedRow { row: 3, expected: 4, actual: 3 }));
    }

    #[test]
    fn parse_errors_locate_the_field() {
        let err = parse_csv("1,2,0\n1,x,1\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, PscnnError::Parse { row: 2, column: 2, .. }));
        let err = parse_csv("1,2,0\n1,2,-1\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, PscnnError::Parse { row: 2, column: 3, .. }));
    }

    #[test]
    fn header_sniffing_and_label_column() {
        let ds = parse_csv("x,y,class\n0.5,1,1\n2,3,0\n", CsvOptions::default()).unwrap();
        assert_eq!(ds.feature_names().unwrap(), ["x", "y"]);
        assert_eq!(ds.labels(), [1, 0]);

        let opts = CsvOptions {
            label_column: LabelColumn::Index(0),
            has_header: Some(false),
        };
        let ds = parse_csv("1,0.5,2\n0,3,4\n", opts).unwrap();
        assert_eq!(ds.features(), [vec![0.5, 2.0], vec![3.0, 4.0]]);
        assert_eq!(ds.labels(), [1, 0]);
    }

    #[test]
    fn bipolar_examples() {
        assert_eq!(bipolar_target(0, 2), vec![1.0, -1.0]);
        assert_eq!(bipolar_target(3, 4), vec![-1.0, -1.0, -1.0, 1.0]);
        let single = Dataset::new(vec![vec![1.0], vec![2.0]], vec![0, 0], 1).unwrap();
        assert_eq!(bipolar_targets(&single), vec![vec![1.0], vec![1.0]]);
        for row in bipolar_targets(&gaussian_clusters(4, 3, 5, 0.1, 1).unwrap()) {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
        }
    }

    #[test]
    fn xor_points() {
        let ds = xor_dataset();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.labels(), [0, 1, 1, 0]);
    }

    #[test]
    fn clusters() {
        let ds = gaussian_clusters(4, 64, 3, 0.0, 9).unwrap();
        assert_eq!((ds.len(), ds.dim(), ds.class_count()), (12, 64, 4));
        for c in 0..4 {
            let rows = &ds.features()[c * 3..c * 3 + 3];
            assert!(rows.iter().all(|r| r == &rows[0]));
        }
        assert_eq!(gaussian_clusters(3, 5, 10, 0.4, 2).unwrap(), gaussian_clusters(3, 5, 10, 0.4, 2).unwrap());
        assert_ne!(gaussian_clusters(3, 5, 10, 0.4, 2).unwrap(), gaussian_clusters(3, 5, 10, 0.4, 3).unwrap());
        assert!(gaussian_clusters(1, 5, 10, 0.4, 2).is_err());
    }

    #[test]
    fn split_partitions() {
        let ds = xor_dataset();
        let (a, b) = split(&ds, 0.5, 4).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
        assert_eq!(split(&ds, 0.5, 4).unwrap(), (a.clone(), b.clone()));
        let mut all: Vec<(Vec<u64>, usize)> = a
            .features()
            .iter()
            .chain(b.features())
            .zip(a.labels().iter().chain(b.labels()))
            .map(|(f, &l)| (f.iter().map(|v| v.to_bits()).collect(), l))
            .collect();
        all.sort();
        let mut orig: Vec<(Vec<u64>, usize)> = ds
            .features()
            .iter()
            .zip(ds.labels())
            .map(|(f, &l)| (f.iter().map(|v| v.to_bits()).collect(), l))
            .collect();
        orig.sort();
        assert_eq!(all, orig);
        assert!(split(&ds, 1.0, 0).is_err());
        assert!(split(&ds, 0.01, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = gaussian_clusters(3, 4, 5, 0.7, 11).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap(), CsvOptions::default()).unwrap();
        assert_eq!(back, ds);
    }
}
