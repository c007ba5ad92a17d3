// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observed series, rescaled-time grids and per-feature prefix sums.
//!
//! Row `t` of a sample (1-based) sits at rescaled time `t/T`. Every
//! statistic in the crate is evaluated on grids of the form `{j/n}` and
//! carries the integer `j` around, so `floor(u * T)` is never computed in
//! floating point.

use std::io::Read;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureFamily;

/// Where a sample came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Origin {
    pub source: Option<PathBuf>,
    pub columns: Vec<String>,
}

/// A (possibly multivariate) series of `T` rows and `d` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSample {
    values: Vec<f64>,
    len: usize,
    dim: usize,
    origin: Option<Origin>,
}

impl SeriesSample {
    /// Builds a sample from row-major values.
    pub fn from_rows(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::Width {
                row: values.len() / dim + 1,
                expected: dim,
                found: values.len() % dim,
            });
        }
        let len = values.len() / dim;
        if len < 2 {
            return Err(Error::TooShort(len));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim + 1,
                column: pos % dim + 1,
            });
        }
        Ok(Self {
            values,
            len,
            dim,
            origin: None,
        })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_rows(values, 1)
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = Some(origin);
        self
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Option<&Origin> {
        self.origin.as_ref()
    }

    /// Row `t` (0-based).
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + DoubleEndedIterator + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same observations in reverse time order.
    pub fn reversed(&self) -> Self {
        let values = self.rows().rev().flatten().copied().collect();
        Self {
            values,
            len: self.len,
            dim: self.dim,
            origin: self.origin.clone(),
        }
    }

    /// Applies `g` to every entry. Fails if the result is not finite.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| g(v)).collect();
        let mut out = Self::from_rows(values, self.dim)?;
        out.origin = self.origin.clone();
        Ok(out)
    }
}

/// Header handling for CSV input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum HeaderMode {
    /// Treat the first row as a header if any cell is non-numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy)]
pub struct CsvFormat {
    pub delimiter: u8,
    pub header: HeaderMode,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: HeaderMode::Auto,
        }
    }
}

/// Reads a numeric CSV stream, one column per dimension, rows in time order.
pub fn load_series<R: Read>(source: R, format: CsvFormat) -> Result<SeriesSample> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let mut values = Vec::new();
    let mut columns = Vec::new();
    let mut width: Option<usize> = None;
    let mut first = true;

    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = line + 1;
        if first {
            first = false;
            let numeric = record.iter().all(|c| c.parse::<f64>().is_ok());
            let is_header = match format.header {
                HeaderMode::Auto => !numeric,
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
            };
            if is_header {
                columns = record.iter().map(str::to_owned).collect();
                width = Some(columns.len());
                continue;
            }
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Width {
                row,
                expected,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("non-numeric cell `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, column: c + 1 });
            }
            values.push(v);
        }
    }

    let dim = width.unwrap_or(1).max(1);
    if values.len() / dim < 2 {
        return Err(Error::TooShort(values.len() / dim));
    }
    let sample = SeriesSample::from_rows(values, dim)?;
    Ok(sample.with_origin(Origin {
        source: None,
        columns,
    }))
}

/// Convenience wrapper around [`load_series`] for files on disk.
pub fn load_series_file(path: impl Into<PathBuf>, format: CsvFormat) -> Result<SeriesSample> {
    let path = path.into();
    let file = std::fs::File::open(&path)?;
    let sample = load_series(std::io::BufReader::new(file), format)?;
    let mut origin = sample.origin().cloned().unwrap_or_default();
    origin.source = Some(path);
    Ok(sample.with_origin(origin))
}

/// Strictly increasing points `j/n` with `j` in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RescaledGrid {
    denominator: usize,
    indices: Vec<usize>,
}

impl RescaledGrid {
    /// The grid `{1/n, 2/n, ..., 1}`.
    pub fn natural(n: usize) -> Self {
        Self {
            denominator: n,
            indices: (1..=n).collect(),
        }
    }

    pub fn from_indices(denominator: usize, indices: Vec<usize>) -> Result<Self> {
        if denominator == 0 || indices.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "indices must be strictly increasing and positive".into(),
            ));
        }
        if *indices.last().unwrap() > denominator {
            return Err(Error::InvalidGrid(format!(
                "index exceeds denominator {denominator}"
            )));
        }
        Ok(Self {
            denominator,
            indices,
        })
    }

    pub fn denominator(&self) -> usize {
        self.denominator
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn point(&self, k: usize) -> f64 {
        self.indices[k] as f64 / self.denominator as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    pub fn ends_at_one(&self) -> bool {
        self.indices.last() == Some(&self.denominator)
    }
}

/// `S_f(t) = sum_{s <= t} f(X_s)` for `t = 0..=T`, one sequence per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    len: usize,
    labels: Vec<String>,
    sums: Vec<Vec<f64>>,
}

impl PrefixSums {
    /// Sample length `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_features(&self) -> usize {
        self.sums.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The `T + 1` partial sums of feature `f`.
    pub fn feature(&self, f: usize) -> &[f64] {
        &self.sums[f]
    }

    /// Prefix sums of an arbitrary sequence, one feature labelled `label`.
    pub fn from_sequence(label: &str, xs: &[f64]) -> Self {
        Self {
            len: xs.len(),
            labels: vec![label.to_owned()],
            sums: vec![compensated_prefix(xs.iter().copied())],
        }
    }
}

/// Neumaier-compensated running sums, starting at 0.
pub(crate) fn compensated_prefix(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let (lo, _) = xs.size_hint();
    let mut out = Vec::with_capacity(lo + 1);
    out.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Prefix sums of every moment function in `family` over `sample`.
pub fn build_prefix_sums(sample: &SeriesSample, family: &FeatureFamily) -> Result<PrefixSums> {
    family.check_dimension(sample.dim())?;
    let sums = family
        .functions()
        .iter()
        .map(|f| compensated_prefix(sample.rows().map(|r| f.eval(r))))
        .collect();
    Ok(PrefixSums {
        len: sample.len(),
        labels: family.labels(),
        sums,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureFamily, FeatureKind};

    fn load(text: &str) -> Result<SeriesSample> {
        load_series(text.as_bytes(), CsvFormat::default())
    }

    #[test]
    fn loads_single_column() {
        let s = load("0\n0\n1\n1\n").unwrap();
        assert_eq!((s.len(), s.dim()), (4, 1));
        assert_eq!(s.values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_stream_is_too_short() {
        assert!(matches!(load(""), Err(Error::TooShort(0))));
        assert!(matches!(load("1.0\n"), Err(Error::TooShort(1))));
    }

    #[test]
    fn loads_two_columns_with_header() {
        let s = load("a,b\n1,2\n3,4.5\n-1e-3,7\n").unwrap();
        assert_eq!((s.len(), s.dim()), (3, 2));
        assert_eq!(s.row(1), &[3.0, 4.5]);
        assert_eq!(s.origin().unwrap().columns, vec!["a", "b"]);
    }

    #[test]
    fn reports_bad_cells() {
        match load("1,2\n3,x\n") {
            Err(Error::Parse { row: 2, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load("1,2\n3\n"), Err(Error::Width { row: 2, .. })));
        assert!(matches!(
            load("1\nNaN\n2\n"),
            Err(Error::NonFinite { row: 2, column: 1 })
        ));
        assert!(matches!(load("1\ninf\n"), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn prefix_sums_match_examples() {
        let mean = FeatureFamily::new(FeatureKind::Mean, 1).unwrap();
        let var = FeatureFamily::new(FeatureKind::Variance, 1).unwrap();

        let s = SeriesSample::univariate(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let p = build_prefix_sums(&s, &mean).unwrap();
        assert_eq!(p.feature(0), &[0.0, 0.0, 0.0, 1.0, 2.0]);

        let s = SeriesSample::univariate(vec![1.0, 2.0]).unwrap();
        let p = build_prefix_sums(&s, &var).unwrap();
        assert_eq!(p.feature(0), &[0.0, 1.0, 5.0]);

        let s = SeriesSample::univariate(vec![2.5; 7]).unwrap();
        let p = build_prefix_sums(&s, &mean).unwrap();
        for (t, v) in p.feature(0).iter().enumerate() {
            assert_eq!(*v, 2.5 * t as f64);
        }
    }

    #[test]
    fn prefix_sums_reject_wrong_dimension() {
        let s = SeriesSample::from_rows(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let mean = FeatureFamily::new(FeatureKind::Mean, 1).unwrap();
        assert!(matches!(
            build_prefix_sums(&s, &mean),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grid_indices_are_exact() {
        let g = RescaledGrid::natural(1968);
        for (k, &j) in g.indices().iter().enumerate() {
            assert_eq!(j, k + 1);
        }
        assert!(g.ends_at_one());
        assert!(RescaledGrid::from_indices(10, vec![2, 2]).is_err());
        assert!(RescaledGrid::from_indices(10, vec![0, 2]).is_err());
        assert!(RescaledGrid::from_indices(10, vec![3, 11]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn prefix_differences_recover_values(xs in proptest::collection::vec(-1e6f64..1e6, 2..300)) {
            let p = PrefixSums::from_sequence("x", &xs);
            let s = p.feature(0);
            let scale = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            for t in 1..=xs.len() {
                let d = s[t] - s[t - 1];
                proptest::prop_assert!((d - xs[t - 1]).abs() <= 1e-12 * scale);
            }
        }
    }
}
