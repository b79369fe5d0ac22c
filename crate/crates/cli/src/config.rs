//! Flat `key = value` run configuration.
//!
//! Sources are layered: built-in defaults, then an optional file, then the
//! output-directory environment override, then command-line flags. Every layer
//! goes through the same string parser, so a flag and a file line mean exactly
//! the same thing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use uacqr::data::ResponseColumn;
use uacqr::pipeline::BaseCenter;
use uacqr::{DispersionKind, ForestParams, Method, SplitFractions, TransformKind};

use crate::error::{CliError, Result};

/// Environment variable that replaces the configured output directory.
pub const OUT_DIR_ENV: &str = "UACQR_OUT_DIR";

pub const KEYS: &[&str] = &[
    "mode",
    "data",
    "response_col",
    "alpha",
    "seed",
    "methods",
    "dispersion",
    "randomized",
    "transform",
    "center",
    "trees",
    "min_samples_leaf",
    "max_depth",
    "mtry",
    "bootstrap",
    "cv_grid",
    "fractions",
    "trials",
    "n_train",
    "n_cal",
    "n_test",
    "bins",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Evaluate,
    Crossval,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "evaluate" => Ok(Mode::Evaluate),
            "crossval" => Ok(Mode::Crossval),
            _ => Err("expected simulate, evaluate or crossval".into()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Evaluate => "evaluate",
            Mode::Crossval => "crossval",
        })
    }
}

/// One raw setting and where it came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub origin: String,
}

impl Setting {
    pub fn new(key: &str, value: impl Into<String>, origin: impl Into<String>) -> Self {
        Self { key: key.trim().replace('-', "_"), value: value.into().trim().to_string(), origin: origin.into() }
    }
}

/// Parses config text. Blank lines and lines starting with `#` are skipped.
pub fn parse_config_text(text: &str, source: &Path) -> Result<Vec<Setting>> {
    let mut out: Vec<Setting> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let origin = format!("{}:{}", source.display(), i + 1);
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Syntax { origin, line: line.to_string() });
        };
        let setting = Setting::new(k, v, origin);
        if out.iter().any(|s| s.key == setting.key) {
            return Err(CliError::Duplicate { key: setting.key, origin: setting.origin });
        }
        out.push(setting);
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<Setting>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub data: Option<PathBuf>,
    pub response_col: ResponseColumn,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub randomized: bool,
    pub transform: TransformKind,
    pub center: BaseCenter,
    /// Forest settings; the seed field is ignored (seeds derive from `seed`).
    pub forest: ForestParams,
    pub cv_grid: Vec<usize>,
    pub fractions: SplitFractions,
    pub trials: usize,
    pub n_train: usize,
    pub n_cal: usize,
    pub n_test: usize,
    pub bins: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            data: None,
            response_col: ResponseColumn::Last,
            alpha: 0.1,
            seed: 0,
            methods: Method::ALL.to_vec(),
            randomized: true,
            transform: TransformKind::None,
            center: BaseCenter::FullForest,
            forest: ForestParams::default(),
            cv_grid: vec![1, 5, 10, 20],
            fractions: SplitFractions::default(),
            trials: 150,
            n_train: 100,
            n_cal: 100,
            n_test: 200,
            bins: 20,
            out: PathBuf::from("uacqr-out"),
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err("expected on or off".into()),
    }
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',').map(|s| s.trim().parse::<T>().map_err(|e| e.to_string())).collect()
}

fn parse_optional(v: &str) -> std::result::Result<Option<usize>, String> {
    if v == "none" {
        Ok(None)
    } else {
        v.parse().map(Some).map_err(|e: std::num::ParseIntError| e.to_string())
    }
}

fn parse_methods(v: &str, dispersion: DispersionKind) -> std::result::Result<Vec<Method>, String> {
    if v == "all" {
        return Ok(Method::ALL
            .iter()
            .map(|&m| if let Method::UacqrS(_) = m { Method::UacqrS(dispersion) } else { m })
            .collect());
    }
    v.split(',')
        .map(|tok| {
            let tok = tok.trim();
            // a bare `uacqr-s` takes the configured dispersion
            if tok.eq_ignore_ascii_case("uacqr-s") || tok.eq_ignore_ascii_case("uacqr_s") {
                Ok(Method::UacqrS(dispersion))
            } else {
                tok.parse::<Method>().map_err(|e| e.to_string())
            }
        })
        .collect()
}

fn fmt_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_optional(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

impl RunConfig {
    /// Resolves layered settings; later entries override earlier ones with the same key.
    pub fn resolve(settings: &[Setting]) -> Result<Self> {
        let mut latest: BTreeMap<&str, &Setting> = BTreeMap::new();
        for s in settings {
            if !KEYS.contains(&s.key.as_str()) {
                return Err(CliError::UnknownKey { key: s.key.clone(), origin: s.origin.clone() });
            }
            latest.insert(s.key.as_str(), s);
        }
        let mut cfg = RunConfig::default();

        fn get<T>(
            latest: &BTreeMap<&str, &Setting>,
            key: &str,
            parse: impl FnOnce(&str) -> std::result::Result<T, String>,
        ) -> Result<Option<T>> {
            let Some(s) = latest.get(key) else {
                return Ok(None);
            };
            parse(&s.value).map(Some).map_err(|reason| CliError::InvalidValue {
                key: key.to_string(),
                value: s.value.clone(),
                origin: s.origin.clone(),
                reason,
            })
        }
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        fn core<T: FromStr<Err = uacqr::Error>>(v: &str) -> std::result::Result<T, String> {
            v.parse::<T>().map_err(|e| e.to_string())
        }

        if let Some(v) = get(&latest, "mode", Mode::from_str)? {
            cfg.mode = v;
        }
        cfg.data = get(&latest, "data", |v| Ok(PathBuf::from(v)))?;
        if let Some(v) = get(&latest, "response_col", |v| Ok(v.parse::<ResponseColumn>().unwrap()))? {
            cfg.response_col = v;
        }
        if let Some(v) = get(&latest, "alpha", num::<f64>)? {
            cfg.alpha = v;
        }
        if let Some(v) = get(&latest, "seed", num::<u64>)? {
            cfg.seed = v;
        }
        let dispersion = get(&latest, "dispersion", core::<DispersionKind>)?.unwrap_or(DispersionKind::StdDev);
        if let Some(v) = get(&latest, "methods", |v| parse_methods(v, dispersion))? {
            cfg.methods = v;
        } else if latest.contains_key("dispersion") {
            cfg.methods = parse_methods("all", dispersion).unwrap();
        }
        if let Some(v) = get(&latest, "randomized", parse_bool)? {
            cfg.randomized = v;
        }
        if let Some(v) = get(&latest, "transform", core::<TransformKind>)? {
            cfg.transform = v;
        }
        if let Some(v) = get(&latest, "center", core::<BaseCenter>)? {
            cfg.center = v;
        }
        if let Some(v) = get(&latest, "trees", num::<usize>)? {
            cfg.forest.n_trees = v;
        }
        if let Some(v) = get(&latest, "min_samples_leaf", num::<usize>)? {
            cfg.forest.min_samples_leaf = v;
        }
        if let Some(v) = get(&latest, "max_depth", parse_optional)? {
            cfg.forest.max_depth = v;
        }
        if let Some(v) = get(&latest, "mtry", parse_optional)? {
            cfg.forest.mtry = v;
        }
        if let Some(v) = get(&latest, "bootstrap", parse_bool)? {
            cfg.forest.bootstrap = v;
        }
        if let Some(v) = get(&latest, "cv_grid", parse_list::<usize>)? {
            cfg.cv_grid = v;
        }
        if let Some(v) = get(&latest, "fractions", |v| match parse_list::<f64>(v)?.as_slice() {
            &[a, b, c] => Ok(SplitFractions::new(a, b, c)),
            _ => Err("expected three comma-separated fractions".into()),
        })? {
            cfg.fractions = v;
        }
        if let Some(v) = get(&latest, "trials", num::<usize>)? {
            cfg.trials = v;
        }
        if let Some(v) = get(&latest, "n_train", num::<usize>)? {
            cfg.n_train = v;
        }
        if let Some(v) = get(&latest, "n_cal", num::<usize>)? {
            cfg.n_cal = v;
        }
        if let Some(v) = get(&latest, "n_test", num::<usize>)? {
            cfg.n_test = v;
        }
        if let Some(v) = get(&latest, "bins", num::<usize>)? {
            cfg.bins = v;
        }
        if let Some(v) = get(&latest, "out", |v| Ok(PathBuf::from(v)))? {
            cfg.out = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match (self.mode, &self.data) {
            (Mode::Simulate, Some(p)) => {
                return bad(format!("`data = {}` conflicts with mode simulate, which draws its own data", p.display()))
            }
            (Mode::Evaluate | Mode::Crossval, None) => return bad(format!("mode {} needs `data`", self.mode)),
            _ => {}
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.forest.n_trees == 0 || self.forest.min_samples_leaf == 0 {
            return bad("trees and min_samples_leaf must be at least 1".into());
        }
        if self.mode == Mode::Crossval && (self.cv_grid.is_empty() || self.cv_grid.contains(&0)) {
            return bad("cv_grid must be a nonempty list of positive leaf sizes".into());
        }
        if self.bins == 0 {
            return bad("bins must be at least 1".into());
        }
        Ok(())
    }

    /// Every setting, one `key = value` per line, in a form [`RunConfig::resolve`] reads back
    /// to an equal config.
    pub fn render(&self) -> String {
        let mut lines = vec![format!("mode = {}", self.mode)];
        if let Some(d) = &self.data {
            lines.push(format!("data = {}", d.display()));
        }
        let f = &self.fractions;
        lines.extend([
            format!("response_col = {}", self.response_col),
            format!("alpha = {}", self.alpha),
            format!("seed = {}", self.seed),
            format!("methods = {}", fmt_list(&self.methods)),
            format!("randomized = {}", on_off(self.randomized)),
            format!("transform = {}", self.transform),
            format!("center = {}", self.center),
            format!("trees = {}", self.forest.n_trees),
            format!("min_samples_leaf = {}", self.forest.min_samples_leaf),
            format!("max_depth = {}", fmt_optional(self.forest.max_depth)),
            format!("mtry = {}", fmt_optional(self.forest.mtry)),
            format!("bootstrap = {}", on_off(self.forest.bootstrap)),
            format!("cv_grid = {}", fmt_list(&self.cv_grid)),
            format!("fractions = {},{},{}", f.train, f.cal, f.test),
            format!("trials = {}", self.trials),
            format!("n_train = {}", self.n_train),
            format!("n_cal = {}", self.n_cal),
            format!("n_test = {}", self.n_test),
            format!("bins = {}", self.bins),
            format!("out = {}", self.out.display()),
        ]);
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}
