//! Tabular data, seeded splits and response transforms.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense row-major feature matrix plus response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    response: Vec<f64>,
    n_features: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, response: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::invalid("feature rows have differing lengths"));
        }
        Self::from_flat(rows.into_iter().flatten().collect(), response, n_features)
    }

    pub fn from_flat(features: Vec<f64>, response: Vec<f64>, n_features: usize) -> Result<Self> {
        if response.is_empty() || n_features == 0 {
            return Err(Error::invalid("dataset needs at least one row and one feature"));
        }
        if features.len() != response.len() * n_features {
            return Err(Error::invalid(format!(
                "{} feature cells do not match {} rows of {} features",
                features.len(),
                response.len(),
                n_features
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature at row {}, column {}", i / n_features, i % n_features)));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response at row {i}")));
        }
        Ok(Self { features, response, n_features })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn p(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(idx.len() * self.n_features);
        let mut response = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(self.row(i));
            response.push(self.response[i]);
        }
        Dataset { features, response, n_features: self.n_features }
    }

    /// Same features, new responses.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Dataset> {
        Dataset::from_flat(self.features.clone(), response, self.n_features)
    }
}

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        Ok(if s.eq_ignore_ascii_case("last") {
            ResponseColumn::Last
        } else if let Ok(i) = s.parse::<usize>() {
            ResponseColumn::Index(i)
        } else {
            ResponseColumn::Name(s.to_string())
        })
    }
}

impl fmt::Display for ResponseColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseColumn::Last => f.write_str("last"),
            ResponseColumn::Index(i) => write!(f, "{i}"),
            ResponseColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Loads a numeric CSV. A first row that does not parse entirely as numbers is a header.
///
/// Row and column numbers in errors are 1-based and count the header row.
pub fn load_csv(path: impl AsRef<Path>, response: &ResponseColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let table_err = |message: String| Error::Table { path: path.to_path_buf(), message };
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| table_err(e.to_string()))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        records.push(rec);
    }
    let Some(first) = records.first() else {
        return Err(table_err("empty table".into()));
    };
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let header: Option<Vec<String>> = has_header.then(|| first.iter().map(str::to_string).collect());
    let width = first.len();
    let body_start = usize::from(has_header);
    if records.len() == body_start {
        return Err(table_err("empty table".into()));
    }
    if width < 2 {
        return Err(table_err("need a response column and at least one feature column".into()));
    }

    let resp_col = match response {
        ResponseColumn::Last => width - 1,
        ResponseColumn::Index(i) if *i < width => *i,
        ResponseColumn::Index(i) => {
            return Err(table_err(format!("response column index {i} out of range for {width} columns")))
        }
        ResponseColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| table_err(format!("response column `{name}` not found in header")))?,
    };

    let n = records.len() - body_start;
    let mut features = Vec::with_capacity(n * (width - 1));
    let mut ys = Vec::with_capacity(n);
    for (r, rec) in records.iter().enumerate().skip(body_start) {
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: r + 1,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), row: r + 1, column: c + 1, message };
            let v: f64 = cell.parse().map_err(|_| parse_err(format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("`{cell}` is not finite")));
            }
            if c == resp_col {
                ys.push(v);
            } else {
                features.push(v);
            }
        }
    }
    Dataset::from_flat(features, ys, width - 1)
}

/// Train / calibration / test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub cal: f64,
    pub test: f64,
}

impl SplitFractions {
    pub const fn new(train: f64, cal: f64, test: f64) -> Self {
        Self { train, cal, test }
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self::new(0.4, 0.4, 0.2)
    }
}

/// Disjoint index blocks into a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub cal: Vec<usize>,
    pub test: Vec<usize>,
}

// Guards against 0.4 * 10 landing a hair under 4.
fn floor_count(n: usize, f: f64) -> usize {
    (n as f64 * f + 1e-9).floor() as usize
}

/// Seeded shuffle-and-cut split.
///
/// Calibration and test blocks get `floor(n * f)` rows; train gets the rest of the
/// subsample (all of `n` when the fractions sum to one).
pub fn split_dataset(n: usize, fractions: SplitFractions, seed: u64) -> Result<DataSplit> {
    let SplitFractions { train, cal, test } = fractions;
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 rows to split, got {n}")));
    }
    if !(train > 0.0 && cal > 0.0 && test > 0.0) {
        return Err(Error::invalid("split fractions must be positive"));
    }
    let total = train + cal + test;
    if total > 1.0 + 1e-9 {
        return Err(Error::invalid(format!("split fractions sum to {total} > 1")));
    }
    let used = if total >= 1.0 - 1e-9 { n } else { floor_count(n, total) };
    let n_cal = floor_count(n, cal);
    let n_test = floor_count(n, test);
    let n_train = used.saturating_sub(n_cal + n_test);
    if n_cal == 0 {
        return Err(Error::EmptySplit("cal"));
    }
    if n_test == 0 {
        return Err(Error::EmptySplit("test"));
    }
    if n_train == 0 {
        return Err(Error::EmptySplit("train"));
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cal_idx = perm[..n_cal].to_vec();
    let test_idx = perm[n_cal..n_cal + n_test].to_vec();
    let train_idx = perm[n_cal + n_test..n_cal + n_test + n_train].to_vec();
    Ok(DataSplit { train: train_idx, cal: cal_idx, test: test_idx })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransformKind {
    #[default]
    None,
    MeanAbsNormalize,
    Log1p,
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(TransformKind::None),
            "mean-abs" | "mean_abs_normalize" | "normalize" => Ok(TransformKind::MeanAbsNormalize),
            "log1p" => Ok(TransformKind::Log1p),
            other => Err(Error::invalid(format!("unknown transform `{other}`"))),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::None => "none",
            TransformKind::MeanAbsNormalize => "mean-abs",
            TransformKind::Log1p => "log1p",
        })
    }
}

/// A fitted response transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub kind: TransformKind,
    /// Set only for [`TransformKind::MeanAbsNormalize`].
    pub fitted_scale: Option<f64>,
}

impl TransformSpec {
    pub fn apply(&self, y: f64) -> f64 {
        match self.kind {
            TransformKind::None => y,
            TransformKind::MeanAbsNormalize => y / self.fitted_scale.expect("fitted scale"),
            TransformKind::Log1p => y.ln_1p(),
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        match self.kind {
            TransformKind::None => y,
            TransformKind::MeanAbsNormalize => y * self.fitted_scale.expect("fitted scale"),
            TransformKind::Log1p => y.exp_m1(),
        }
    }
}

/// Fits the transform on the training block and applies it to every response.
pub fn fit_apply_transform(ds: &Dataset, split: &DataSplit, kind: TransformKind) -> Result<(Dataset, TransformSpec)> {
    let spec = match kind {
        TransformKind::None => return Ok((ds.clone(), TransformSpec { kind, fitted_scale: None })),
        TransformKind::MeanAbsNormalize => {
            if split.train.is_empty() {
                return Err(Error::EmptySplit("train"));
            }
            let scale = split.train.iter().map(|&i| ds.response[i].abs()).sum::<f64>() / split.train.len() as f64;
            if scale <= 0.0 {
                return Err(Error::invalid("mean absolute training response is zero"));
            }
            TransformSpec { kind, fitted_scale: Some(scale) }
        }
        TransformKind::Log1p => {
            if let Some(i) = ds.response.iter().position(|&y| y <= -1.0) {
                return Err(Error::invalid(format!("log1p needs responses > -1, row {i} has {}", ds.response[i])));
            }
            TransformSpec { kind, fitted_scale: None }
        }
    };
    let ys = ds.response.iter().map(|&y| spec.apply(y)).collect();
    Ok((ds.with_response(ys)?, spec))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_headerless_table() {
        let f = write_csv("1,2,3\n4,5,6\n7,8,9\n");
        let ds = load_csv(f.path(), &ResponseColumn::Last).unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 2));
        assert_eq!(ds.response(), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.row(1), &[4.0, 5.0]);
    }

    #[test]
    fn skips_header_and_selects_by_name() {
        let f = write_csv("a,b,y\n1,2,3\n4,5,6\n");
        let ds = load_csv(f.path(), &ResponseColumn::Name("y".into())).unwrap();
        assert_eq!((ds.n(), ds.p()), (2, 2));
        let ds = load_csv(f.path(), &ResponseColumn::Name("a".into())).unwrap();
        assert_eq!(ds.response(), &[1.0, 4.0]);
        assert_eq!(ds.row(0), &[2.0, 3.0]);
    }

    #[test]
    fn rejects_nan_with_location() {
        let f = write_csv("1,2,3\n4,NaN,6\n");
        let err = load_csv(f.path(), &ResponseColumn::Last).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_ragged_and_bad_cells() {
        let f = write_csv("1,2,3\n4,5\n");
        assert!(matches!(load_csv(f.path(), &ResponseColumn::Last), Err(Error::Parse { row: 2, .. })));
        let f = write_csv("1,2,3\n4,x,6\n");
        let msg = load_csv(f.path(), &ResponseColumn::Last).unwrap_err().to_string();
        assert!(msg.contains("row 2, column 2"), "{msg}");
        let f = write_csv("");
        assert!(matches!(load_csv(f.path(), &ResponseColumn::Last), Err(Error::Table { .. })));
        assert!(matches!(load_csv("/nonexistent/file.csv", &ResponseColumn::Last), Err(Error::Io { .. })));
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let s = split_dataset(10, SplitFractions::new(0.4, 0.4, 0.2), 3).unwrap();
        assert_eq!((s.train.len(), s.cal.len(), s.test.len()), (4, 4, 2));
        let mut all: Vec<usize> = s.train.iter().chain(&s.cal).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(s, split_dataset(10, SplitFractions::new(0.4, 0.4, 0.2), 3).unwrap());
    }

    #[test]
    fn split_remainder_goes_to_train() {
        let s = split_dataset(11, SplitFractions::new(0.4, 0.4, 0.2), 1).unwrap();
        assert_eq!((s.train.len(), s.cal.len(), s.test.len()), (5, 4, 2));
    }

    #[test]
    fn split_subsamples_when_fractions_sum_below_one() {
        let s = split_dataset(100, SplitFractions::new(0.1, 0.1, 0.05), 1).unwrap();
        assert_eq!((s.train.len(), s.cal.len(), s.test.len()), (10, 10, 5));
    }

    #[test]
    fn split_empty_block_errors() {
        let err = split_dataset(10, SplitFractions::new(0.1, 0.1, 0.05), 1).unwrap_err();
        assert!(matches!(err, Error::EmptySplit("test")));
    }

    #[test]
    fn mean_abs_transform_uses_train_scale() {
        let ds = Dataset::new(vec![vec![0.0]; 3], vec![-2.0, 4.0, 9.0]).unwrap();
        let split = DataSplit { train: vec![0, 1], cal: vec![2], test: vec![] };
        let (out, spec) = fit_apply_transform(&ds, &split, TransformKind::MeanAbsNormalize).unwrap();
        assert_eq!(spec.fitted_scale, Some(3.0));
        assert_eq!(out.response()[0], -2.0 / 3.0);
        assert_eq!(out.response()[2], 3.0);
    }

    #[test]
    fn identity_and_log1p() {
        let ds = Dataset::new(vec![vec![1.0]; 2], vec![0.0, 3.0]).unwrap();
        let split = DataSplit { train: vec![0], cal: vec![1], test: vec![] };
        let (out, spec) = fit_apply_transform(&ds, &split, TransformKind::None).unwrap();
        assert_eq!(out, ds);
        assert_eq!(spec.fitted_scale, None);
        let (out, _) = fit_apply_transform(&ds, &split, TransformKind::Log1p).unwrap();
        assert_eq!(out.response()[0], 0.0);
        assert_eq!(out.row(0), ds.row(0));
    }

    #[test]
    fn transform_errors() {
        let ds = Dataset::new(vec![vec![1.0]; 2], vec![0.0, -1.0]).unwrap();
        let split = DataSplit { train: vec![0], cal: vec![1], test: vec![] };
        assert!(fit_apply_transform(&ds, &split, TransformKind::MeanAbsNormalize).is_err());
        assert!(fit_apply_transform(&ds, &split, TransformKind::Log1p).is_err());
    }
}
