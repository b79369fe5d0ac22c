//! B-member quantile ensembles: aggregation, dispersion and order statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quantile::WeightedDistribution;

/// The preset lower and upper quantile levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetQuantiles {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

impl TargetQuantiles {
    pub fn new(alpha_lo: f64, alpha_hi: f64) -> Result<Self> {
        if !(0.0 < alpha_lo && alpha_lo < alpha_hi && alpha_hi < 1.0) {
            return Err(Error::invalid(format!("need 0 < alpha_lo < alpha_hi < 1, got ({alpha_lo}, {alpha_hi})")));
        }
        Ok(Self { alpha_lo, alpha_hi })
    }

    /// `(alpha / 2, 1 - alpha / 2)`.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha / 2.0, 1.0 - alpha / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum DispersionKind {
    #[default]
    StdDev,
    Iqr,
}

impl FromStr for DispersionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stddev" | "std" => Ok(DispersionKind::StdDev),
            "iqr" => Ok(DispersionKind::Iqr),
            other => Err(Error::invalid(format!("unknown dispersion `{other}`"))),
        }
    }
}

impl fmt::Display for DispersionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DispersionKind::StdDev => "stddev",
            DispersionKind::Iqr => "iqr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lo,
    Hi,
}

/// Lower and upper quantile estimates from each of B ensemble members at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleQuantiles {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl EnsembleQuantiles {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid(format!("ensemble sides must be nonempty and equal length ({} vs {})", lo.len(), hi.len())));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ensemble member".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::Lo => &self.lo,
            Side::Hi => &self.hi,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.lo.iter().map(|&v| f(v)).collect(), self.hi.iter().map(|&v| f(v)).collect())
    }

    /// Copy with both sides sorted ascending, for repeated order-statistic lookups.
    pub fn sorted(&self) -> SortedEnsemble {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo.sort_by(f64::total_cmp);
        hi.sort_by(f64::total_cmp);
        SortedEnsemble { lo, hi }
    }
}

/// Ensemble with each side sorted; order statistics are O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct SortedEnsemble {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SortedEnsemble {
    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// `b`-th smallest member (1-based), with `-inf` at `b = 0` and `+inf` at `b = B + 1`.
    pub fn order_statistic(&self, side: Side, b: usize) -> f64 {
        let v = match side {
            Side::Lo => &self.lo,
            Side::Hi => &self.hi,
        };
        match b {
            0 => f64::NEG_INFINITY,
            b if b > v.len() => f64::INFINITY,
            b => v[b - 1],
        }
    }
}

pub fn aggregate_mean(e: &EnsembleQuantiles) -> (f64, f64) {
    let b = e.len() as f64;
    (e.lo.iter().sum::<f64>() / b, e.hi.iter().sum::<f64>() / b)
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

fn iqr(v: &[f64]) -> f64 {
    let d = WeightedDistribution::empirical(v);
    d.quantile(0.75) - d.quantile(0.25)
}

/// Spread of each side across members: `(g_lo, g_hi)`.
///
/// Standard deviation uses the `1/B` normalisation.
pub fn dispersion(e: &EnsembleQuantiles, kind: DispersionKind) -> (f64, f64) {
    let f = match kind {
        DispersionKind::StdDev => population_std,
        DispersionKind::Iqr => iqr,
    };
    (f(&e.lo), f(&e.hi))
}

/// `b`-th order statistic of one side, `b` in `0..=B+1`.
pub fn order_statistic(e: &EnsembleQuantiles, side: Side, b: usize) -> Result<f64> {
    if b > e.len() + 1 {
        return Err(Error::invalid(format!("order statistic {b} out of range 0..={}", e.len() + 1)));
    }
    let mut v = e.side(side).to_vec();
    v.sort_by(f64::total_cmp);
    Ok(match b {
        0 => f64::NEG_INFINITY,
        b if b == v.len() + 1 => f64::INFINITY,
        b => v[b - 1],
    })
}

/// Replaces a crossed pair by its midpoint.
pub fn isotonize(q_lo: f64, q_hi: f64) -> (f64, f64) {
    if q_lo > q_hi {
        let m = (q_lo + q_hi) / 2.0;
        (m, m)
    } else {
        (q_lo, q_hi)
    }
}

/// Loads a long-format ensemble table with columns `point_id,member_id,side,value`.
///
/// Every point must carry the same member ids, each with exactly one `lo` and one
/// `hi` row. Members are ordered by `member_id` (numerically when all ids are
/// integers). A header row is optional.
pub fn load_external_ensemble(path: impl AsRef<Path>) -> Result<BTreeMap<String, EnsembleQuantiles>> {
    let path = path.as_ref();
    let table_err = |message: String| Error::Table { path: path.to_path_buf(), message };
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    type Cell = [Option<f64>; 2];
    let mut grid: BTreeMap<String, BTreeMap<String, Cell>> = BTreeMap::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| table_err(e.to_string()))?;
        let row = r + 1;
        if rec.len() != 4 {
            return Err(table_err(format!("row {row}: expected 4 columns, found {}", rec.len())));
        }
        if row == 1 && rec[3].parse::<f64>().is_err() && rec[2].eq_ignore_ascii_case("side") {
            continue;
        }
        let parse_err = |column, message: String| Error::Parse { path: path.to_path_buf(), row, column, message };
        let side = match &rec[2] {
            "lo" => 0,
            "hi" => 1,
            other => return Err(parse_err(3, format!("side must be `lo` or `hi`, found `{other}`"))),
        };
        let value: f64 = rec[3].parse().map_err(|_| parse_err(4, format!("`{}` is not a number", &rec[3])))?;
        if !value.is_finite() {
            return Err(parse_err(4, format!("`{}` is not finite", &rec[3])));
        }
        let cell = grid.entry(rec[0].to_string()).or_default().entry(rec[1].to_string()).or_default();
        if cell[side].replace(value).is_some() {
            return Err(parse_err(1, format!("duplicate entry for point `{}`, member `{}`, side {}", &rec[0], &rec[1], &rec[2])));
        }
    }
    if grid.is_empty() {
        return Err(table_err("empty table".into()));
    }

    let mut out = BTreeMap::new();
    let mut expected: Option<Vec<String>> = None;
    for (point, members) in grid {
        let mut ids: Vec<String> = members.keys().cloned().collect();
        if ids.iter().all(|m| m.parse::<i64>().is_ok()) {
            ids.sort_by_key(|m| m.parse::<i64>().unwrap());
        }
        match &expected {
            None => expected = Some(ids.clone()),
            Some(e) if e.len() != ids.len() => {
                return Err(table_err(format!(
                    "inconsistent ensemble size: point `{point}` has {} members, expected {}",
                    ids.len(),
                    e.len()
                )))
            }
            Some(e) => {
                if let Some(missing) = e.iter().find(|m| !members.contains_key(*m)) {
                    return Err(table_err(format!("point `{point}` is missing member `{missing}`")));
                }
            }
        }
        let mut lo = Vec::with_capacity(ids.len());
        let mut hi = Vec::with_capacity(ids.len());
        for id in &ids {
            match members[id] {
                [Some(l), Some(h)] => {
                    lo.push(l);
                    hi.push(h);
                }
                [None, _] => return Err(table_err(format!("point `{point}`, member `{id}` is missing side lo"))),
                [_, None] => return Err(table_err(format!("point `{point}`, member `{id}` is missing side hi"))),
            }
        }
        out.insert(point, EnsembleQuantiles::new(lo, hi)?);
    }
    Ok(out)
}
