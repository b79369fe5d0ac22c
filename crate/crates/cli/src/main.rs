use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use uacqr_cli::config::{self, Setting, OUT_DIR_ENV};
use uacqr_cli::{run, RunConfig};

/// Conformal prediction intervals with quantile regression forests.
///
/// Settings come from an optional `key = value` file; flags override it.
#[derive(Debug, Parser)]
#[command(name = "uacqr", version)]
struct Args {
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// simulate, evaluate or crossval
    #[arg(long)]
    mode: Option<String>,
    /// CSV table for evaluate and crossval
    #[arg(long)]
    data: Option<String>,
    /// Response column: `last`, a 0-based index or a header name
    #[arg(long)]
    response_col: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated, or `all`
    #[arg(long)]
    methods: Option<String>,
    /// stddev or iqr, for uacqr-s
    #[arg(long)]
    dispersion: Option<String>,
    /// on or off
    #[arg(long)]
    randomized: Option<String>,
    /// none, mean-abs or log1p
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    trees: Option<String>,
    #[arg(long)]
    min_samples_leaf: Option<String>,
    /// Comma-separated leaf sizes for crossval
    #[arg(long)]
    cv_grid: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Extra `key=value` settings, applied after the named flags
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Args {
    fn settings(&self) -> anyhow::Result<Vec<Setting>> {
        let mut s = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => Vec::new(),
        };
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            s.push(Setting::new("out", dir, OUT_DIR_ENV));
        }
        let named = [
            ("mode", &self.mode),
            ("data", &self.data),
            ("response_col", &self.response_col),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("methods", &self.methods),
            ("dispersion", &self.dispersion),
            ("randomized", &self.randomized),
            ("transform", &self.transform),
            ("trees", &self.trees),
            ("min_samples_leaf", &self.min_samples_leaf),
            ("cv_grid", &self.cv_grid),
            ("out", &self.out),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                s.push(Setting::new(key, v.as_str(), format!("--{}", key.replace('_', "-"))));
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            s.push(Setting::new(k, v, "--set"));
        }
        Ok(s)
    }
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let cfg = RunConfig::resolve(&args.settings()?)?;
    let out = run::run(&cfg)?;
    println!("{:<12} {:>5} {:>9} {:>10} {:>10}", "method", "rows", "coverage", "width", "isl");
    for &m in &cfg.methods {
        let rows: Vec<_> = out.results.iter().filter(|r| r.method == m).collect();
        let mean = |f: &dyn Fn(&run::ResultRow) -> f64| {
            let v: Vec<f64> = rows.iter().map(|r| f(r)).filter(|x| x.is_finite()).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        println!(
            "{:<12} {:>5} {:>9.4} {:>10.4} {:>10.4}",
            m.to_string(),
            rows.len(),
            mean(&|r| r.report.coverage),
            mean(&|r| r.report.avg_width),
            mean(&|r| r.report.mean_isl)
        );
    }
    println!("results written to {}", cfg.out.display());
    Ok(())
}
