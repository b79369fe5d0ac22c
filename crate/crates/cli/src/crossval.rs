//! Per-method choice of `min_samples_leaf` by minimum interval score loss.

use rayon::prelude::*;
use uacqr::data::{self, DataSplit, SplitFractions};
use uacqr::pipeline::{self, BaseCenter, ConformalOptions};
use uacqr::{metrics, Dataset, ForestModel, ForestParams, Method, TargetQuantiles};

use crate::derive_seed;
use crate::error::{CliError, Result};

const SPLIT_STREAM: u64 = 10;
const FOREST_STREAM: u64 = 11;
const CUTOFF_STREAM: u64 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CvSettings {
    pub alpha: f64,
    pub randomized: bool,
    pub center: BaseCenter,
    /// `min_samples_leaf` and `seed` are replaced per grid point.
    pub forest: ForestParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub chosen: usize,
    /// Mean sub-test loss per distinct grid value, ascending by leaf size.
    pub scores: Vec<(usize, f64)>,
}

pub fn crossval_min_samples_leaf(
    ds: &Dataset,
    split: &DataSplit,
    grid: &[usize],
    method: Method,
    settings: &CvSettings,
) -> Result<CvOutcome> {
    crossval_with_access(|idx| ds.subset(idx), split, grid, method, settings)
}

/// Same as [`crossval_min_samples_leaf`], reading rows only through `fetch`, which
/// receives indices of the outer dataset.
///
/// The training block is sub-split 40/40/20; a band that is infinite makes the mean
/// loss `+inf`. Ties go to the smaller leaf size.
pub fn crossval_with_access<F>(
    fetch: F,
    split: &DataSplit,
    grid: &[usize],
    method: Method,
    settings: &CvSettings,
) -> Result<CvOutcome>
where
    F: Fn(&[usize]) -> Dataset,
{
    if grid.is_empty() {
        return Err(CliError::Config("cv_grid is empty".into()));
    }
    let inner = data::split_dataset(split.train.len(), SplitFractions::default(), derive_seed(settings.seed, SPLIT_STREAM))
        .map_err(|e| {
            CliError::Config(format!("training block of {} rows is too small to sub-split: {e}", split.train.len()))
        })?;
    let outer = |idx: &[usize]| idx.iter().map(|&i| split.train[i]).collect::<Vec<_>>();
    let train = fetch(&outer(&inner.train));
    let cal = fetch(&outer(&inner.cal));
    let test = fetch(&outer(&inner.test));

    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let scores: Vec<(usize, f64)> = grid
        .par_iter()
        .map(|&msl| sub_test_loss(&train, &cal, &test, method, msl, settings).map(|l| (msl, l)))
        .collect::<Result<_>>()?;
    let mut chosen = scores[0];
    for &s in &scores[1..] {
        if s.1.total_cmp(&chosen.1).is_lt() {
            chosen = s;
        }
    }
    Ok(CvOutcome { chosen: chosen.0, scores })
}

fn sub_test_loss(
    train: &Dataset,
    cal: &Dataset,
    test: &Dataset,
    method: Method,
    msl: usize,
    s: &CvSettings,
) -> Result<f64> {
    let params = ForestParams { min_samples_leaf: msl, seed: derive_seed(s.seed, FOREST_STREAM), ..s.forest.clone() };
    let forest = ForestModel::fit(train, &params)?;
    let targets = TargetQuantiles::symmetric(s.alpha)?;
    let all = |d: &Dataset| (0..d.n()).collect::<Vec<_>>();
    let cal_s = pipeline::summarize_rows(&forest, cal, &all(cal), targets);
    let test_s = pipeline::summarize_rows(&forest, test, &all(test), targets);
    let opts = ConformalOptions {
        alpha: s.alpha,
        randomized: s.randomized,
        center: s.center,
        seed: derive_seed(s.seed, CUTOFF_STREAM),
    };
    let out = pipeline::conformalize_method(method, &cal_s, cal.response(), &test_s, &opts)?;
    let mut total = 0.0;
    for (band, &y) in out.bands.iter().zip(test.response()) {
        if !band.is_finite() {
            return Ok(f64::INFINITY);
        }
        total += metrics::interval_score_loss(band, y, s.alpha)?;
    }
    Ok(total / test.n() as f64)
}
