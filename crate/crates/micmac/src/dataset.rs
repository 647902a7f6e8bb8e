//! In-memory dataset model, CSV ingestion, per-fold standardization and the
//! cosine redundancy primitive.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A dense sample-by-feature matrix with per-sample subject id, time-point
/// index and binary label. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>, // row-major, n_samples x n_features
    n_features: usize,
    subject_ids: Vec<String>,
    time_points: Vec<u32>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    // subjects in first-appearance order, with their row indices
    subjects: Vec<String>,
    subject_rows: HashMap<String, Vec<usize>>,
}

impl Dataset {
    pub fn new(
        values: Vec<f64>,
        subject_ids: Vec<String>,
        time_points: Vec<u32>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_samples = subject_ids.len();
        let n_features = feature_names.len();
        if n_features == 0 {
            return Err(Error::NoFeatures);
        }
        if values.len() != n_samples * n_features
            || time_points.len() != n_samples
            || labels.len() != n_samples
        {
            return Err(Error::InvalidConfig("inconsistent field lengths".into()));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for name in &feature_names {
                if !seen.insert(name) {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate feature name {name}"
                    )));
                }
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i / n_features,
                    col: i % n_features,
                });
            }
        }

        let mut subjects = Vec::new();
        let mut subject_rows: HashMap<String, Vec<usize>> = HashMap::new();
        let mut subject_label: HashMap<&str, u8> = HashMap::new();
        for (row, sid) in subject_ids.iter().enumerate() {
            if !subject_rows.contains_key(sid) {
                subjects.push(sid.clone());
            }
            subject_rows.entry(sid.clone()).or_default().push(row);
            match subject_label.get(sid.as_str()) {
                None => {
                    subject_label.insert(sid, labels[row]);
                }
                Some(&l) if l != labels[row] => {
                    return Err(Error::InconsistentLabel {
                        subject: sid.clone(),
                    });
                }
                _ => {}
            }
        }
        let counts: Vec<usize> = subjects.iter().map(|s| subject_rows[s].len()).collect();
        if let Some(&first) = counts.first() {
            if counts.iter().any(|&c| c != first) {
                return Err(Error::InvalidConfig(
                    "subjects have unequal sample counts".into(),
                ));
            }
        }

        Ok(Dataset {
            values,
            n_features,
            subject_ids,
            time_points,
            labels,
            feature_names,
            subjects,
            subject_rows,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_features + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_features..(row + 1) * self.n_features]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn time_points(&self) -> &[u32] {
        &self.time_points
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Subjects in first-appearance order.
    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn subject_label(&self, subject: &str) -> Option<u8> {
        self.subject_rows
            .get(subject)
            .map(|rows| self.labels[rows[0]])
    }

    /// Row indices of all samples belonging to `subjects`, in dataset order.
    pub fn rows_of_subjects(&self, subjects: &[String]) -> Vec<usize> {
        let wanted: std::collections::HashSet<&str> =
            subjects.iter().map(|s| s.as_str()).collect();
        (0..self.n_samples())
            .filter(|&r| wanted.contains(self.subject_ids[r].as_str()))
            .collect()
    }

    /// Extracts a dense row-major submatrix together with the row labels.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> (Vec<f64>, Vec<u8>) {
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            for &c in cols {
                out.push(self.value(r, c));
            }
            labels.push(self.labels[r]);
        }
        (out, labels)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|r| self.value(r, col)).collect()
    }

    pub fn column_over_rows(&self, col: usize, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&r| self.value(r, col)).collect()
    }

    /// Replaces the value matrix, keeping all metadata. Internal to scaling.
    fn with_values(&self, values: Vec<f64>) -> Dataset {
        Dataset {
            values,
            ..self.clone()
        }
    }
}

/// Per-feature standardization parameters, recorded together with the exact
/// feature set they were fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    feature_names: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Scaler {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }
}

/// Fits per-feature mean and population standard deviation over `sample_ids`.
pub fn fit_scaler(d: &Dataset, sample_ids: &[usize]) -> Result<Scaler> {
    if sample_ids.is_empty() {
        return Err(Error::EmptyInput("fit_scaler sample set".into()));
    }
    let n = sample_ids.len() as f64;
    let p = d.n_features();
    let mut means = vec![0.0; p];
    let mut stds = vec![0.0; p];
    for &r in sample_ids {
        let row = d.row(r);
        for c in 0..p {
            means[c] += row[c];
        }
    }
    for m in means.iter_mut() {
        *m /= n;
    }
    for &r in sample_ids {
        let row = d.row(r);
        for c in 0..p {
            let dev = row[c] - means[c];
            stds[c] += dev * dev;
        }
    }
    for s in stds.iter_mut() {
        *s = (*s / n).sqrt();
    }
    Ok(Scaler {
        feature_names: d.feature_names().to_vec(),
        means,
        stds,
    })
}

/// Applies a fitted scaler; constant columns map to all-zeros.
pub fn apply_scaler(s: &Scaler, d: &Dataset) -> Result<Dataset> {
    if s.feature_names != d.feature_names {
        return Err(Error::FeatureMismatch);
    }
    let p = d.n_features();
    let mut values = Vec::with_capacity(d.n_samples() * p);
    for r in 0..d.n_samples() {
        let row = d.row(r);
        for c in 0..p {
            if s.stds[c] > 0.0 {
                values.push((row[c] - s.means[c]) / s.stds[c]);
            } else {
                values.push(0.0);
            }
        }
    }
    Ok(d.with_values(values))
}

/// Absolute cosine similarity; 0 when either vector has zero norm.
pub fn cosine_redundancy(x_i: &[f64], x_k: &[f64]) -> Result<f64> {
    if x_i.len() != x_k.len() {
        return Err(Error::LengthMismatch {
            left: x_i.len(),
            right: x_k.len(),
        });
    }
    if x_i.is_empty() {
        return Err(Error::EmptyInput("cosine_redundancy vectors".into()));
    }
    let mut dot = 0.0;
    let mut ni = 0.0;
    let mut nk = 0.0;
    for (a, b) in x_i.iter().zip(x_k) {
        dot += a * b;
        ni += a * a;
        nk += b * b;
    }
    if ni == 0.0 || nk == 0.0 {
        return Ok(0.0);
    }
    Ok((dot.abs() / (ni.sqrt() * nk.sqrt())).min(1.0))
}

/// Loads a dataset from a CSV file with header
/// `subject_id,time_point,label,<feature columns...>`.
pub fn load_dataset<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("csv file".into()))??;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 3 || cols[0] != "subject_id" || cols[1] != "time_point" || cols[2] != "label" {
        return Err(Error::CsvFormat {
            row: 0,
            col: 0,
            msg: "header must start with subject_id,time_point,label".into(),
        });
    }
    if cols.len() == 3 {
        return Err(Error::NoFeatures);
    }
    let feature_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let p = feature_names.len();

    let mut values = Vec::new();
    let mut subject_ids = Vec::new();
    let mut time_points = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != p + 3 {
            return Err(Error::CsvFormat {
                row,
                col: fields.len(),
                msg: format!("expected {} fields, got {}", p + 3, fields.len()),
            });
        }
        subject_ids.push(fields[0].to_string());
        time_points.push(fields[1].parse::<u32>().map_err(|_| Error::CsvFormat {
            row,
            col: 1,
            msg: format!("non-integer time_point {:?}", fields[1]),
        })?);
        let label = fields[2].parse::<u8>().map_err(|_| Error::CsvFormat {
            row,
            col: 2,
            msg: format!("non-binary label {:?}", fields[2]),
        })?;
        if label > 1 {
            return Err(Error::CsvFormat {
                row,
                col: 2,
                msg: format!("label must be 0 or 1, got {label}"),
            });
        }
        labels.push(label);
        for (j, f) in fields[3..].iter().enumerate() {
            let v = f.parse::<f64>().map_err(|_| Error::CsvFormat {
                row,
                col: j + 3,
                msg: format!("non-numeric cell {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col: j });
            }
            values.push(v);
        }
    }
    Dataset::new(values, subject_ids, time_points, labels, feature_names)
}

/// Writes a dataset back out in the ingestion format. Floats use Rust's
/// shortest round-trip representation, which preserves the exact value.
pub fn save_dataset<P: AsRef<Path>>(d: &Dataset, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(w, "subject_id,time_point,label")?;
    for name in d.feature_names() {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for r in 0..d.n_samples() {
        write!(
            w,
            "{},{},{}",
            d.subject_ids()[r],
            d.time_points()[r],
            d.labels()[r]
        )?;
        for v in d.row(r) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Dataset {
        Dataset::new(
            vec![2.0, 1.0, 4.0, 2.0, 6.0, 3.0],
            vec!["s1".into(), "s1".into(), "s1".into()],
            vec![1, 2, 3],
            vec![0, 0, 0],
            vec!["f1".into(), "f2".into()],
        )
        .unwrap()
    }

    #[test]
    fn scaler_zscore() {
        let d = toy();
        let s = fit_scaler(&d, &[0, 1, 2]).unwrap();
        let t = apply_scaler(&s, &d).unwrap();
        let col: Vec<f64> = t.column(0);
        assert!((col[0] + 1.224744871391589).abs() < 1e-12);
        assert!(col[1].abs() < 1e-12);
        assert!((col[2] - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn scaler_constant_column() {
        let d = Dataset::new(
            vec![5.0, 5.0, 5.0],
            vec!["s1".into(), "s1".into(), "s1".into()],
            vec![1, 2, 3],
            vec![0, 0, 0],
            vec!["f1".into()],
        )
        .unwrap();
        let s = fit_scaler(&d, &[0, 1, 2]).unwrap();
        let t = apply_scaler(&s, &d).unwrap();
        assert_eq!(t.column(0), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn scaler_feature_mismatch() {
        let d = toy();
        let s = fit_scaler(&d, &[0, 1, 2]).unwrap();
        let other = Dataset::new(
            vec![1.0, 1.0],
            vec!["s1".into(), "s1".into()],
            vec![1, 2],
            vec![0, 0],
            vec!["a".into()],
        )
        .unwrap();
        assert!(matches!(
            apply_scaler(&s, &other),
            Err(Error::FeatureMismatch)
        ));
    }

    #[test]
    fn scaler_refit_idempotent() {
        let d = toy();
        let s = fit_scaler(&d, &[0, 1, 2]).unwrap();
        let t = apply_scaler(&s, &d).unwrap();
        let s2 = fit_scaler(&t, &[0, 1, 2]).unwrap();
        for c in 0..2 {
            assert!(s2.means()[c].abs() < 1e-9);
            assert!((s2.stds()[c] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine_redundancy(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_redundancy(&[1.0, 1.0], &[3.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        let c = cosine_redundancy(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(cosine_redundancy(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(cosine_redundancy(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn inconsistent_label_rejected() {
        let err = Dataset::new(
            vec![1.0, 2.0],
            vec!["s1".into(), "s1".into()],
            vec![1, 2],
            vec![0, 1],
            vec!["f1".into()],
        );
        assert!(matches!(err, Err(Error::InconsistentLabel { .. })));
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "subject_id,time_point,label\ns1,1,0\n").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::NoFeatures)));

        std::fs::write(&p, "subject_id,time_point,label,f1\ns1,1,0,abc\n").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::CsvFormat { row: 1, col: 3, .. })));

        std::fs::write(&p, "subject_id,time_point,label,f1\ns1,1,0,1.0\ns1,2,1,2.0\n").unwrap();
        assert!(matches!(
            load_dataset(&p),
            Err(Error::InconsistentLabel { .. })
        ));

        std::fs::write(&p, "subject_id,time_point,label,f1\ns1,1,0,NaN\n").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn save_load_roundtrip() {
        let d = Dataset::new(
            vec![0.123456789012345, -7.5e-11, 3.0, 4.0],
            vec!["a".into(), "b".into()],
            vec![1, 1],
            vec![0, 1],
            vec!["f1".into(), "f2".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_dataset(&d, &p).unwrap();
        let d2 = load_dataset(&p).unwrap();
        assert_eq!(d, d2);
    }

    proptest! {
        #[test]
        fn cosine_properties(
            v in proptest::collection::vec(-1e3f64..1e3, 2..16),
            w in proptest::collection::vec(-1e3f64..1e3, 2..16),
            c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
        ) {
            let n = v.len().min(w.len());
            let (v, w) = (&v[..n], &w[..n]);
            let ab = cosine_redundancy(v, w).unwrap();
            let ba = cosine_redundancy(w, v).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            if v.iter().any(|&x| x != 0.0) {
                let self_sim = cosine_redundancy(v, &scaled).unwrap();
                prop_assert!((self_sim - 1.0).abs() < 1e-9);
            }
        }
    }
}
