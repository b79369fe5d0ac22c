//! Synthetic benchmark with a sharply oscillating mean near zero.
//!
//! `X ~ Beta(1.2, 0.8)` and `Y | X ~ N(sin(X^-3), X^4)`: the conditional mean is
//! nearly impossible to learn close to `x = 0` (high epistemic uncertainty) while
//! the noise there is small (low aleatoric uncertainty).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::conformal::{IntervalBand, Method};
use crate::data::Dataset;
use crate::ensemble::TargetQuantiles;
use crate::error::{Error, Result};
use crate::metrics::{BinStats, EvaluationReport};
use crate::normal;
use crate::pipeline::{self, BaseCenter, ConformalOptions};
use crate::qrf::{ForestModel, ForestParams};

pub const BETA_A: f64 = 1.2;
pub const BETA_B: f64 = 0.8;

pub fn conditional_mean(x: f64) -> f64 {
    x.powi(-3).sin()
}

pub fn conditional_sd(x: f64) -> f64 {
    x * x
}

/// Draws `X` by the Gamma ratio construction, redrawing exact zeros.
pub fn sample_x<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let ga = Gamma::new(BETA_A, 1.0).expect("valid shape");
    let gb = Gamma::new(BETA_B, 1.0).expect("valid shape");
    loop {
        let a: f64 = ga.sample(rng);
        let b: f64 = gb.sample(rng);
        let x = a / (a + b);
        if x > 0.0 && x.is_finite() {
            return x;
        }
    }
}

/// `n` draws from the benchmark as a one-feature dataset.
pub fn sample_sim<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Dataset> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sample_x(rng);
        let z: f64 = StandardNormal.sample(rng);
        xs.push(x);
        ys.push(conditional_mean(x) + conditional_sd(x) * z);
    }
    Dataset::from_flat(xs, ys, 1)
}

/// The true central `1 - alpha` interval of `Y | X = x`.
pub fn oracle_interval(x: f64, alpha: f64) -> Result<IntervalBand> {
    if !(x > 0.0) {
        return Err(Error::invalid(format!("oracle interval needs x > 0, got {x}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let half = conditional_sd(x) * normal::inverse_cdf(1.0 - alpha / 2.0);
    let m = conditional_mean(x);
    Ok(IntervalBand::closed(m - half, m + half))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_train: usize,
    pub n_cal: usize,
    pub n_test: usize,
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    pub forest: ForestParams,
    pub methods: Vec<Method>,
    pub randomized: bool,
    pub center: BaseCenter,
    pub n_bins: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_train: 100,
            n_cal: 100,
            n_test: 200,
            trials: 150,
            alpha: 0.1,
            seed: 0,
            forest: ForestParams::default(),
            methods: Method::ALL.to_vec(),
            randomized: true,
            center: BaseCenter::FullForest,
            n_bins: 20,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_cal == 0 || self.n_test == 0 || self.trials == 0 {
            return Err(Error::invalid("simulation counts must all be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("need at least one bin"));
        }
        Ok(())
    }
}

/// One method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    pub t_hat: f64,
    /// Threshold actually used (differs from `t_hat` under randomization).
    pub threshold: f64,
    pub strict: bool,
    pub hits: usize,
    pub n_floored: usize,
    pub report: EvaluationReport,
}

/// Trial-averaged conditional coverage in one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSummary {
    pub lo: f64,
    pub hi: f64,
    /// Mean over trials with at least one point in the bin.
    pub coverage: Option<f64>,
    pub mean_width: Option<f64>,
    /// Test points in the bin across all trials.
    pub count: usize,
    pub pooled_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub trials: usize,
    pub mean_coverage: f64,
    pub se_coverage: f64,
    pub pooled_coverage: f64,
    pub pooled_n: usize,
    pub mean_width: f64,
    pub se_width: f64,
    pub mean_isl: f64,
    pub frac_infinite_width: f64,
    pub bins: Vec<BinSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<MethodSummary>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Runs one trial: fresh train/cal/test draws, forest fit, every method evaluated.
pub fn run_trial(config: &SimConfig, trial: usize) -> Result<Vec<TrialRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let train = sample_sim(config.n_train, &mut rng)?;
    let cal = sample_sim(config.n_cal, &mut rng)?;
    let test = sample_sim(config.n_test, &mut rng)?;
    let forest_seed: u64 = rng.random();
    let cutoff_seed: u64 = rng.random();

    let forest = ForestModel::fit(&train, &ForestParams { seed: forest_seed, ..config.forest.clone() })?;
    let targets = TargetQuantiles::symmetric(config.alpha)?;
    let cal_idx: Vec<usize> = (0..cal.n()).collect();
    let test_idx: Vec<usize> = (0..test.n()).collect();
    let cal_s = pipeline::summarize_rows(&forest, &cal, &cal_idx, targets);
    let test_s = pipeline::summarize_rows(&forest, &test, &test_idx, targets);
    let opts = ConformalOptions { alpha: config.alpha, randomized: config.randomized, center: config.center, seed: cutoff_seed };
    let xs = test.features();

    config
        .methods
        .iter()
        .map(|&method| {
            let out = pipeline::conformalize_method(method, &cal_s, cal.response(), &test_s, &opts)?;
            let report = EvaluationReport::evaluate(
                &out.bands,
                test.response(),
                config.alpha,
                Some((xs, config.n_bins, Some((0.0, 1.0)))),
            )?;
            let hits = out.bands.iter().zip(test.response()).filter(|(b, &y)| b.contains(y)).count();
            let (threshold, strict) = out.calibration.effective_threshold();
            Ok(TrialRecord {
                trial,
                method,
                t_hat: out.calibration.t_hat,
                threshold,
                strict,
                hits,
                n_floored: out.n_floored,
                report,
            })
        })
        .collect()
}

/// Runs all trials (in parallel, each with its own seeded stream) and aggregates.
pub fn run_trials(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let per_trial: Vec<Vec<TrialRecord>> =
        (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summaries = config.methods.iter().map(|&m| summarize(m, &records, config.n_test)).collect();
    Ok(SimReport { records, summaries })
}

fn summarize(method: Method, records: &[TrialRecord], n_test: usize) -> MethodSummary {
    let recs: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
    let cov: Vec<f64> = recs.iter().map(|r| r.report.coverage).collect();
    let width: Vec<f64> = recs.iter().map(|r| r.report.avg_width).collect();
    let isl: Vec<f64> = recs.iter().map(|r| r.report.mean_isl).collect();
    let (mean_coverage, se_coverage) = mean_se(&cov);
    let (mean_width, se_width) = mean_se(&width);
    let hits: usize = recs.iter().map(|r| r.hits).sum();
    let pooled_n = recs.len() * n_test;
    let frac_inf = recs.iter().map(|r| r.report.frac_infinite_width).sum::<f64>() / recs.len() as f64;
    let n_bins = recs.first().map_or(0, |r| r.report.per_bin.len());
    let bins = (0..n_bins)
        .map(|j| {
            let cells: Vec<&BinStats> = recs.iter().map(|r| &r.report.per_bin[j]).collect();
            let covs: Vec<f64> = cells.iter().filter_map(|c| c.coverage).collect();
            let widths: Vec<f64> = cells.iter().filter_map(|c| c.mean_width).collect();
            let count: usize = cells.iter().map(|c| c.count).sum();
            let bin_hits: f64 = cells.iter().filter_map(|c| c.coverage.map(|v| v * c.count as f64)).sum();
            let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            BinSummary {
                lo: cells[0].lo,
                hi: cells[0].hi,
                coverage: avg(&covs),
                mean_width: avg(&widths),
                count,
                pooled_coverage: (count > 0).then(|| bin_hits.round() / count as f64),
            }
        })
        .collect();
    MethodSummary {
        method,
        trials: recs.len(),
        mean_coverage,
        se_coverage,
        pooled_coverage: hits as f64 / pooled_n as f64,
        pooled_n,
        mean_width,
        se_width,
        mean_isl: mean_se(&isl).0,
        frac_infinite_width: frac_inf,
        bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_lie_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = sample_sim(2000, &mut rng).unwrap();
        assert!(ds.features().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_sim(50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_sim(50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_at_one() {
        let band = oracle_interval(1.0, 0.1).unwrap();
        assert!((band.lower - -0.803_383).abs() < 1e-5, "{}", band.lower);
        assert!((band.upper - 2.486_325).abs() < 1e-5, "{}", band.upper);
        let half = oracle_interval(0.5, 0.1).unwrap();
        assert!((half.width() * 4.0 - band.width()).abs() < 1e-12);
        assert!(oracle_interval(0.0, 0.1).is_err());
    }

    #[test]
    fn single_trial_single_point() {
        let cfg = SimConfig {
            n_train: 30,
            n_cal: 20,
            n_test: 1,
            trials: 1,
            forest: ForestParams { n_trees: 5, ..Default::default() },
            ..SimConfig::default()
        };
        let r = run_trials(&cfg).unwrap();
        assert_eq!(r.records.len(), Method::ALL.len());
        for rec in &r.records {
            assert_eq!(rec.report.n, 1);
            assert!(rec.hits <= 1);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_trials(&SimConfig { trials: 0, ..SimConfig::default() }).is_err());
        assert!(run_trials(&SimConfig { alpha: 1.0, ..SimConfig::default() }).is_err());
    }
}
