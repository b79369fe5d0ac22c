//! From a fitted forest (or an external ensemble) to calibrated prediction bands.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conformal::{self, CalibratedModel, IntervalBand, Method, ScoreIngredients};
use crate::data::Dataset;
use crate::ensemble::{self, DispersionKind, EnsembleQuantiles, TargetQuantiles};
use crate::error::{Error, Result};
use crate::qrf::ForestModel;
use crate::quantile::WeightedDistribution;

/// Baseline quantile pair used by UACQR-S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaseCenter {
    /// Quantiles of the whole forest.
    #[default]
    FullForest,
    /// Mean of the member quantiles.
    EnsembleMean,
    /// The last member (e.g. the fully trained network of an epoch ensemble).
    LastMember,
}

impl FromStr for BaseCenter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "forest" | "full-forest" => Ok(BaseCenter::FullForest),
            "mean" => Ok(BaseCenter::EnsembleMean),
            "last" => Ok(BaseCenter::LastMember),
            other => Err(Error::invalid(format!("unknown base center `{other}`"))),
        }
    }
}

impl fmt::Display for BaseCenter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseCenter::FullForest => "forest",
            BaseCenter::EnsembleMean => "mean",
            BaseCenter::LastMember => "last",
        })
    }
}

/// What the base learner says about one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_med: Option<f64>,
    pub mean: Option<f64>,
    pub ensemble: EnsembleQuantiles,
    pub distribution: Option<WeightedDistribution>,
}

impl PointSummary {
    pub fn from_forest(forest: &ForestModel, x: &[f64], targets: TargetQuantiles) -> Self {
        let w = forest.weights(x);
        let distribution = forest.distribution_from_weights(&w);
        let mut per_tree = forest.per_tree_quantiles_at(x, &[targets.alpha_lo, targets.alpha_hi]);
        let hi = per_tree.pop().unwrap();
        let lo = per_tree.pop().unwrap();
        Self {
            q_lo: distribution.quantile(targets.alpha_lo),
            q_hi: distribution.quantile(targets.alpha_hi),
            q_med: Some(distribution.quantile(0.5)),
            mean: Some(forest.mean_from_weights(&w)),
            ensemble: EnsembleQuantiles::new(lo, hi).expect("forest quantiles are finite"),
            distribution: Some(distribution),
        }
    }

    /// Summary for an externally produced ensemble; the baseline pair is aggregated
    /// per `center` and isotonized.
    pub fn from_ensemble(ensemble: EnsembleQuantiles, center: BaseCenter) -> Self {
        let (lo, hi) = match center {
            BaseCenter::LastMember => (*ensemble.lo().last().unwrap(), *ensemble.hi().last().unwrap()),
            BaseCenter::FullForest | BaseCenter::EnsembleMean => ensemble::aggregate_mean(&ensemble),
        };
        let (q_lo, q_hi) = ensemble::isotonize(lo, hi);
        Self { q_lo, q_hi, q_med: None, mean: None, ensemble, distribution: None }
    }

    fn base_pair(&self, center: BaseCenter) -> (f64, f64) {
        match center {
            BaseCenter::FullForest => (self.q_lo, self.q_hi),
            BaseCenter::EnsembleMean => ensemble::aggregate_mean(&self.ensemble),
            BaseCenter::LastMember => (*self.ensemble.lo().last().unwrap(), *self.ensemble.hi().last().unwrap()),
        }
    }

    pub fn ingredients(&self, method: Method, center: BaseCenter) -> ScoreIngredients {
        match method {
            Method::MeanAbs => ScoreIngredients { mu: self.mean, ..Default::default() },
            Method::Cqr | Method::CqrR => ScoreIngredients::quantile_pair(self.q_lo, self.q_hi),
            Method::CqrM => ScoreIngredients { q_med: self.q_med, ..ScoreIngredients::quantile_pair(self.q_lo, self.q_hi) },
            Method::UacqrS(kind) => {
                let (lo, hi) = self.base_pair(center);
                let (g_lo, g_hi) = ensemble::dispersion(&self.ensemble, kind);
                ScoreIngredients::uacqr_s(lo, hi, g_lo, g_hi)
            }
            Method::UacqrP => ScoreIngredients::uacqr_p(self.ensemble.sorted()),
            Method::Dcp => ScoreIngredients { distribution: self.distribution.clone(), ..Default::default() },
        }
    }
}

/// Summaries for the rows `idx` of `ds`, computed in parallel.
pub fn summarize_rows(forest: &ForestModel, ds: &Dataset, idx: &[usize], targets: TargetQuantiles) -> Vec<PointSummary> {
    idx.par_iter().map(|&i| PointSummary::from_forest(forest, ds.row(i), targets)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalOptions {
    pub alpha: f64,
    pub randomized: bool,
    pub center: BaseCenter,
    /// Seed for the randomized cutoffs; each method draws from its own stream.
    pub seed: u64,
}

impl ConformalOptions {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, randomized: true, center: BaseCenter::FullForest, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub calibration: CalibratedModel,
    pub bands: Vec<IntervalBand>,
    /// Calibration plus test points whose scale factor hit the floor.
    pub n_floored: usize,
}

fn method_stream(method: Method) -> u64 {
    match method {
        Method::MeanAbs => 0,
        Method::Cqr => 1,
        Method::CqrR => 2,
        Method::CqrM => 3,
        Method::Dcp => 4,
        Method::UacqrS(DispersionKind::StdDev) => 5,
        Method::UacqrP => 6,
        Method::UacqrS(DispersionKind::Iqr) => 7,
    }
}

/// Calibrates one method on `(cal, cal_y)` and builds its bands on `test`.
pub fn conformalize_method(
    method: Method,
    cal: &[PointSummary],
    cal_y: &[f64],
    test: &[PointSummary],
    opts: &ConformalOptions,
) -> Result<MethodOutcome> {
    if cal.len() != cal_y.len() {
        return Err(Error::invalid("calibration summaries and responses differ in length"));
    }
    let mut n_floored = 0;
    let mut scores = Vec::with_capacity(cal.len());
    for (s, &y) in cal.iter().zip(cal_y) {
        let ing = s.ingredients(method, opts.center);
        n_floored += usize::from(conformal::uses_scale_floor(method, &ing)?);
        scores.push(conformal::score(method, &ing, y)?);
    }
    let calibration = if opts.randomized {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(method_stream(method));
        CalibratedModel::randomized(method, &scores, opts.alpha, &mut rng)?
    } else {
        CalibratedModel::deterministic(method, &scores, opts.alpha)?
    };
    let ensemble_size = cal.first().or(test.first()).map_or(0, |s| s.ensemble.len());
    let calibration = calibration.with_rank_cap(ensemble_size);
    let mut bands = Vec::with_capacity(test.len());
    for s in test {
        let ing = s.ingredients(method, opts.center);
        n_floored += usize::from(conformal::uses_scale_floor(method, &ing)?);
        bands.push(conformal::predict_interval(method, &ing, &calibration)?);
    }
    Ok(MethodOutcome { method, calibration, bands, n_floored })
}

pub fn conformalize(
    methods: &[Method],
    cal: &[PointSummary],
    cal_y: &[f64],
    test: &[PointSummary],
    opts: &ConformalOptions,
) -> Result<Vec<MethodOutcome>> {
    methods.iter().map(|&m| conformalize_method(m, cal, cal_y, test, opts)).collect()
}
