//! Mode dispatch and result files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use uacqr::metrics::BinStats;
use uacqr::pipeline::{self, ConformalOptions};
use uacqr::sim::{self, SimConfig};
use uacqr::{data, Dataset, DataSplit, EvaluationReport, ForestModel, ForestParams, Method, TargetQuantiles};

use crate::config::{Mode, RunConfig};
use crate::crossval::{self, CvOutcome, CvSettings};
use crate::derive_seed;
use crate::error::{CliError, Result};

const SPLIT_STREAM: u64 = 0;
const FOREST_STREAM: u64 = 1;
const CUTOFF_STREAM: u64 = 2;
const CV_STREAM: u64 = 3;

pub const RESULTS_FILE: &str = "results.csv";
pub const BINS_FILE: &str = "bins.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CV_FILE: &str = "cv.csv";
pub const RESOLVED_FILE: &str = "resolved.conf";

/// One method on one trial (or on the single split of a dataset run).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub trial: usize,
    pub n_train: usize,
    pub n_cal: usize,
    pub n_test: usize,
    pub min_samples_leaf: usize,
    pub t_hat: f64,
    pub threshold: f64,
    pub strict: bool,
    pub n_floored: usize,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub method: Method,
    pub bin: BinStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub results: Vec<ResultRow>,
    pub bins: Vec<BinRow>,
    pub cv: Vec<(Method, CvOutcome)>,
    /// Rendered simulation summary, when the mode produces one.
    pub summary: Option<Vec<Vec<String>>>,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let out = match cfg.mode {
        Mode::Simulate => simulate(cfg)?,
        Mode::Evaluate | Mode::Crossval => evaluate(cfg)?,
    };
    write_outputs(cfg, &out)?;
    Ok(out)
}

fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    let sc = SimConfig {
        n_train: cfg.n_train,
        n_cal: cfg.n_cal,
        n_test: cfg.n_test,
        trials: cfg.trials,
        alpha: cfg.alpha,
        seed: cfg.seed,
        forest: cfg.forest.clone(),
        methods: cfg.methods.clone(),
        randomized: cfg.randomized,
        center: cfg.center,
        n_bins: cfg.bins,
    };
    let report = sim::run_trials(&sc)?;
    let results = report
        .records
        .into_iter()
        .map(|r| ResultRow {
            method: r.method,
            trial: r.trial,
            n_train: cfg.n_train,
            n_cal: cfg.n_cal,
            n_test: cfg.n_test,
            min_samples_leaf: cfg.forest.min_samples_leaf,
            t_hat: r.t_hat,
            threshold: r.threshold,
            strict: r.strict,
            n_floored: r.n_floored,
            report: r.report,
        })
        .collect();
    let mut bins = Vec::new();
    let mut summary = Vec::new();
    for s in &report.summaries {
        for b in &s.bins {
            bins.push(BinRow {
                method: s.method,
                bin: BinStats { lo: b.lo, hi: b.hi, coverage: b.coverage, mean_width: b.mean_width, count: b.count },
            });
        }
        summary.push(vec![
            s.method.to_string(),
            s.trials.to_string(),
            s.mean_coverage.to_string(),
            s.se_coverage.to_string(),
            s.pooled_coverage.to_string(),
            s.mean_width.to_string(),
            s.se_width.to_string(),
            s.mean_isl.to_string(),
            s.frac_infinite_width.to_string(),
        ]);
    }
    Ok(RunOutput { results, bins, cv: Vec::new(), summary: Some(summary) })
}

fn evaluate(cfg: &RunConfig) -> Result<RunOutput> {
    let path = cfg.data.as_ref().expect("validated");
    let raw = data::load_csv(path, &cfg.response_col)?;
    let split = data::split_dataset(raw.n(), cfg.fractions, derive_seed(cfg.seed, SPLIT_STREAM))?;
    let (ds, _) = data::fit_apply_transform(&raw, &split, cfg.transform)?;

    let (plan, cv): (Vec<(Method, usize)>, _) = if cfg.mode == Mode::Crossval {
        let settings = CvSettings {
            alpha: cfg.alpha,
            randomized: cfg.randomized,
            center: cfg.center,
            forest: cfg.forest.clone(),
            seed: derive_seed(cfg.seed, CV_STREAM),
        };
        let cv: Vec<(Method, CvOutcome)> = cfg
            .methods
            .par_iter()
            .map(|&m| crossval::crossval_min_samples_leaf(&ds, &split, &cfg.cv_grid, m, &settings).map(|o| (m, o)))
            .collect::<Result<_>>()?;
        (cv.iter().map(|(m, o)| (*m, o.chosen)).collect(), cv)
    } else {
        (cfg.methods.iter().map(|&m| (m, cfg.forest.min_samples_leaf)).collect(), Vec::new())
    };
    let (results, bins) = evaluate_split(cfg, &ds, &split, &plan)?;
    Ok(RunOutput { results, bins, cv, summary: None })
}

/// Fits one forest per distinct leaf size on the training block and evaluates each
/// method on the test block.
fn evaluate_split(
    cfg: &RunConfig,
    ds: &Dataset,
    split: &DataSplit,
    plan: &[(Method, usize)],
) -> Result<(Vec<ResultRow>, Vec<BinRow>)> {
    let train = ds.subset(&split.train);
    let cal = ds.subset(&split.cal);
    let test = ds.subset(&split.test);
    let targets = TargetQuantiles::symmetric(cfg.alpha)?;
    let opts = ConformalOptions {
        alpha: cfg.alpha,
        randomized: cfg.randomized,
        center: cfg.center,
        seed: derive_seed(cfg.seed, CUTOFF_STREAM),
    };
    let all = |d: &Dataset| (0..d.n()).collect::<Vec<_>>();
    let bin_spec = (test.p() == 1).then_some((test.features(), cfg.bins, None));

    let mut leaf_sizes: Vec<usize> = plan.iter().map(|p| p.1).collect();
    leaf_sizes.sort_unstable();
    leaf_sizes.dedup();
    let mut results = Vec::new();
    let mut bins = Vec::new();
    for msl in leaf_sizes {
        let params = ForestParams { min_samples_leaf: msl, seed: derive_seed(cfg.seed, FOREST_STREAM), ..cfg.forest.clone() };
        let forest = ForestModel::fit(&train, &params)?;
        let cal_s = pipeline::summarize_rows(&forest, &cal, &all(&cal), targets);
        let test_s = pipeline::summarize_rows(&forest, &test, &all(&test), targets);
        for &(method, _) in plan.iter().filter(|p| p.1 == msl) {
            let out = pipeline::conformalize_method(method, &cal_s, cal.response(), &test_s, &opts)?;
            let report = EvaluationReport::evaluate(&out.bands, test.response(), cfg.alpha, bin_spec)?;
            let (threshold, strict) = out.calibration.effective_threshold();
            bins.extend(report.per_bin.iter().map(|b| BinRow { method, bin: b.clone() }));
            results.push(ResultRow {
                method,
                trial: 0,
                n_train: train.n(),
                n_cal: cal.n(),
                n_test: test.n(),
                min_samples_leaf: msl,
                t_hat: out.calibration.t_hat,
                threshold,
                strict,
                n_floored: out.n_floored,
                report,
            });
        }
    }
    // report in the configured method order
    let order = |m: &Method| plan.iter().position(|p| p.0 == *m);
    results.sort_by_key(|r| order(&r.method));
    bins.sort_by_key(|b| order(&b.method));
    Ok((results, bins))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| CliError::Output { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Output { path: path.to_path_buf(), source: e })
}

pub fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(|e| CliError::Output { path: dir.clone(), source: e })?;
    let file = |name: &str| -> PathBuf { dir.join(name) };

    let resolved = file(RESOLVED_FILE);
    fs::write(&resolved, cfg.render()).map_err(|e| CliError::Output { path: resolved, source: e })?;

    write_csv(
        &file(RESULTS_FILE),
        &[
            "mode", "method", "trial", "seed", "n_train", "n_cal", "n_test", "min_samples_leaf", "alpha", "randomized",
            "t_hat", "threshold", "strict", "coverage", "avg_width", "frac_infinite_width", "mean_isl",
            "cw_correlation", "n_floored",
        ],
        out.results.iter().map(|r| {
            vec![
                cfg.mode.to_string(),
                r.method.to_string(),
                r.trial.to_string(),
                cfg.seed.to_string(),
                r.n_train.to_string(),
                r.n_cal.to_string(),
                r.n_test.to_string(),
                r.min_samples_leaf.to_string(),
                cfg.alpha.to_string(),
                cfg.randomized.to_string(),
                r.t_hat.to_string(),
                r.threshold.to_string(),
                r.strict.to_string(),
                r.report.coverage.to_string(),
                r.report.avg_width.to_string(),
                r.report.frac_infinite_width.to_string(),
                r.report.mean_isl.to_string(),
                r.report.cw_correlation.to_string(),
                r.n_floored.to_string(),
            ]
        }),
    )?;
    write_csv(
        &file(BINS_FILE),
        &["method", "bin_lo", "bin_hi", "coverage", "mean_width", "count"],
        out.bins.iter().map(|b| {
            vec![
                b.method.to_string(),
                b.bin.lo.to_string(),
                b.bin.hi.to_string(),
                opt(b.bin.coverage),
                opt(b.bin.mean_width),
                b.bin.count.to_string(),
            ]
        }),
    )?;
    if let Some(summary) = &out.summary {
        write_csv(
            &file(SUMMARY_FILE),
            &[
                "method", "trials", "mean_coverage", "se_coverage", "pooled_coverage", "mean_width", "se_width",
                "mean_isl", "frac_infinite_width",
            ],
            summary.iter().cloned(),
        )?;
    }
    if !out.cv.is_empty() {
        write_csv(
            &file(CV_FILE),
            &["method", "min_samples_leaf", "mean_isl", "chosen"],
            out.cv.iter().flat_map(|(m, o)| {
                o.scores.iter().map(move |&(msl, loss)| {
                    vec![m.to_string(), msl.to_string(), loss.to_string(), (msl == o.chosen).to_string()]
                })
            }),
        )?;
    }
    Ok(())
}
