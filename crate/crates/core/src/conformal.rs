//! Nested split-conformal prediction.
//!
//! Every method is a family of nested bands `C_t(x)` indexed by a real `t`
//! (an integer rank for UACQR-P). The score of a labelled point is the smallest
//! `t` whose closed band contains the response; calibration takes the
//! `ceil((1 - alpha)(n1 + 1))`-th smallest calibration score. Affine scores are
//! the exact real thresholds rounded up to a double and band membership is
//! decided in exact arithmetic, so membership and `score <= t` never disagree
//! through rounding.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::ensemble::{DispersionKind, Side, SortedEnsemble};
use crate::error::{Error, Result};
use crate::quantile::WeightedDistribution;

/// Replacement for non-positive scale factors.
pub const SCALE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Constant-width band around the forest mean.
    MeanAbs,
    Cqr,
    CqrR,
    CqrM,
    Dcp,
    UacqrS(DispersionKind),
    UacqrP,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::MeanAbs,
        Method::Cqr,
        Method::CqrR,
        Method::CqrM,
        Method::Dcp,
        Method::UacqrS(DispersionKind::StdDev),
        Method::UacqrP,
    ];

    /// Rank-indexed methods use integer thresholds.
    pub fn is_rank_based(self) -> bool {
        matches!(self, Method::UacqrP)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MeanAbs => "mean-abs",
            Method::Cqr => "cqr",
            Method::CqrR => "cqr-r",
            Method::CqrM => "cqr-m",
            Method::Dcp => "dcp",
            Method::UacqrS(DispersionKind::StdDev) => "uacqr-s",
            Method::UacqrS(DispersionKind::Iqr) => "uacqr-s-iqr",
            Method::UacqrP => "uacqr-p",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "mean-abs" => Method::MeanAbs,
            "cqr" => Method::Cqr,
            "cqr-r" => Method::CqrR,
            "cqr-m" => Method::CqrM,
            "dcp" => Method::Dcp,
            "uacqr-s" | "uacqr-s-stddev" => Method::UacqrS(DispersionKind::StdDev),
            "uacqr-s-iqr" => Method::UacqrS(DispersionKind::Iqr),
            "uacqr-p" => Method::UacqrP,
            other => return Err(Error::invalid(format!("unknown method `{other}`"))),
        })
    }
}

/// Per-point inputs to a method's band family.
///
/// Only the fields the active method reads need to be set; the constructors
/// below fill exactly those.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreIngredients {
    pub q_lo: Option<f64>,
    pub q_hi: Option<f64>,
    pub q_med: Option<f64>,
    pub mu: Option<f64>,
    pub g_lo: Option<f64>,
    pub g_hi: Option<f64>,
    pub ensemble: Option<SortedEnsemble>,
    pub distribution: Option<WeightedDistribution>,
}

impl ScoreIngredients {
    pub fn mean_abs(mu: f64) -> Self {
        Self { mu: Some(mu), ..Self::default() }
    }

    /// For CQR and CQR-r.
    pub fn quantile_pair(q_lo: f64, q_hi: f64) -> Self {
        Self { q_lo: Some(q_lo), q_hi: Some(q_hi), ..Self::default() }
    }

    pub fn cqr_m(q_lo: f64, q_med: f64, q_hi: f64) -> Self {
        Self { q_med: Some(q_med), ..Self::quantile_pair(q_lo, q_hi) }
    }

    pub fn uacqr_s(q_lo: f64, q_hi: f64, g_lo: f64, g_hi: f64) -> Self {
        Self { g_lo: Some(g_lo), g_hi: Some(g_hi), ..Self::quantile_pair(q_lo, q_hi) }
    }

    pub fn uacqr_p(ensemble: SortedEnsemble) -> Self {
        Self { ensemble: Some(ensemble), ..Self::default() }
    }

    pub fn dcp(distribution: WeightedDistribution) -> Self {
        Self { distribution: Some(distribution), ..Self::default() }
    }
}

/// A prediction interval with per-endpoint open/closed flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBand {
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl IntervalBand {
    pub const EMPTY: IntervalBand =
        IntervalBand { lower: f64::INFINITY, upper: f64::NEG_INFINITY, lower_open: true, upper_open: true };

    pub const REAL_LINE: IntervalBand =
        IntervalBand { lower: f64::NEG_INFINITY, upper: f64::INFINITY, lower_open: true, upper_open: true };

    pub fn closed(lower: f64, upper: f64) -> Self {
        Self { lower, upper, lower_open: false, upper_open: false }
    }

    pub fn open(lower: f64, upper: f64) -> Self {
        Self { lower, upper, lower_open: true, upper_open: true }
    }

    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
            || (self.lower == self.upper && (self.lower_open || self.upper_open || self.lower.is_infinite()))
    }

    pub fn contains(&self, y: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        let above = if self.lower_open { y > self.lower } else { y >= self.lower };
        let below = if self.upper_open { y < self.upper } else { y <= self.upper };
        above && below
    }

    /// Zero for an empty band, `+inf` for a band with an infinite endpoint.
    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    pub fn is_finite(&self) -> bool {
        self.is_empty() || (self.lower.is_finite() && self.upper.is_finite())
    }

    /// `self ⊆ other` as subsets of the real line.
    pub fn is_subset_of(&self, other: &IntervalBand) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        let lower_ok = self.lower > other.lower
            || (self.lower == other.lower && (self.lower_open || !other.lower_open || self.lower.is_infinite()));
        let upper_ok = self.upper < other.upper
            || (self.upper == other.upper && (self.upper_open || !other.upper_open || self.upper.is_infinite()));
        lower_ok && upper_ok
    }
}

/// The band family a method resolves to at one point.
enum Family<'a> {
    /// `[base_lo - t s_lo, base_hi + t s_hi]`.
    Affine { base_lo: f64, base_hi: f64, s_lo: f64, s_hi: f64 },
    /// `[Q((1 - t)/2), Q+((1 + t)/2)]` of a discrete conditional distribution.
    Dcp(&'a WeightedDistribution),
    /// `[lo_(B+1-t), hi_(t)]` over sorted ensemble members.
    Ranks(&'a SortedEnsemble),
}

fn need(method: Method, v: Option<f64>, name: &'static str) -> Result<f64> {
    let v = v.ok_or_else(|| Error::MissingIngredient { method: method.to_string(), ingredient: name })?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{name} for {method}")));
    }
    Ok(v)
}

fn floor_scale(s: f64, floored: &mut bool) -> f64 {
    if s > 0.0 && s.is_finite() {
        s
    } else {
        *floored = true;
        SCALE_FLOOR
    }
}

fn resolve(method: Method, ing: &ScoreIngredients) -> Result<(Family<'_>, bool)> {
    let mut floored = false;
    let family = match method {
        Method::MeanAbs => {
            let mu = need(method, ing.mu, "mu")?;
            Family::Affine { base_lo: mu, base_hi: mu, s_lo: 1.0, s_hi: 1.0 }
        }
        Method::Cqr => Family::Affine {
            base_lo: need(method, ing.q_lo, "q_lo")?,
            base_hi: need(method, ing.q_hi, "q_hi")?,
            s_lo: 1.0,
            s_hi: 1.0,
        },
        Method::CqrR => {
            let (lo, hi) = (need(method, ing.q_lo, "q_lo")?, need(method, ing.q_hi, "q_hi")?);
            let w = floor_scale(hi - lo, &mut floored);
            Family::Affine { base_lo: lo, base_hi: hi, s_lo: w, s_hi: w }
        }
        Method::CqrM => {
            let (lo, hi) = (need(method, ing.q_lo, "q_lo")?, need(method, ing.q_hi, "q_hi")?);
            let med = need(method, ing.q_med, "q_med")?;
            Family::Affine {
                base_lo: lo,
                base_hi: hi,
                s_lo: floor_scale(med - lo, &mut floored),
                s_hi: floor_scale(hi - med, &mut floored),
            }
        }
        Method::UacqrS(_) => Family::Affine {
            base_lo: need(method, ing.q_lo, "q_lo")?,
            base_hi: need(method, ing.q_hi, "q_hi")?,
            s_lo: floor_scale(need(method, ing.g_lo, "g_lo")?, &mut floored),
            s_hi: floor_scale(need(method, ing.g_hi, "g_hi")?, &mut floored),
        },
        Method::Dcp => Family::Dcp(
            ing.distribution
                .as_ref()
                .ok_or(Error::MissingIngredient { method: method.to_string(), ingredient: "distribution" })?,
        ),
        Method::UacqrP => Family::Ranks(
            ing.ensemble
                .as_ref()
                .ok_or(Error::MissingIngredient { method: method.to_string(), ingredient: "ensemble" })?,
        ),
    };
    Ok((family, floored))
}

/// Whether any scale factor at this point had to be replaced by [`SCALE_FLOOR`].
pub fn uses_scale_floor(method: Method, ing: &ScoreIngredients) -> Result<bool> {
    resolve(method, ing).map(|(_, f)| f)
}

impl Family<'_> {
    fn band(&self, t: f64, strict: bool) -> IntervalBand {
        let within = |v: f64| if strict { v < t } else { v <= t };
        match *self {
            Family::Affine { base_lo, base_hi, s_lo, s_hi } => {
                // {y : score(y) < t} is the closed band at the previous double
                let t = if strict { t.next_down() } else { t };
                let below_hi = |y: f64| affine_sign(t, s_hi, base_hi, y) >= 0.0;
                let beyond_lo = |y: f64| affine_sign(t, s_lo, y, base_lo) < 0.0;
                let Some(u) = last_true(base_hi + t * s_hi, below_hi) else {
                    return IntervalBand::EMPTY;
                };
                let l = match last_true(base_lo - t * s_lo, beyond_lo) {
                    None => f64::NEG_INFINITY,
                    Some(k) if k == KEY_MAX => return IntervalBand::EMPTY,
                    Some(k) => from_order_key(k + 1),
                };
                let u = if u == KEY_MAX { f64::INFINITY } else { from_order_key(u) };
                if l > u {
                    IntervalBand::EMPTY
                } else if strict {
                    IntervalBand::open(l.next_down(), u.next_up())
                } else {
                    IntervalBand::closed(l, u)
                }
            }
            Family::Dcp(d) => {
                // F(y) >= c_j exactly from the j-th atom on; F(y-) <= c_j up to atom j + 1
                let (values, cum) = (d.support(), d.cumulative());
                let lower_ok = |c: f64| within(1.0 - 2.0 * c);
                let upper_ok = |c: f64| within(2.0 * c - 1.0);
                let l = if lower_ok(0.0) {
                    f64::NEG_INFINITY
                } else {
                    match cum.partition_point(|&c| !lower_ok(c)) {
                        j if j == cum.len() => return IntervalBand::EMPTY,
                        j => values[j],
                    }
                };
                let u = if upper_ok(1.0) {
                    f64::INFINITY
                } else if !upper_ok(0.0) {
                    return IntervalBand::EMPTY;
                } else {
                    values[cum.partition_point(|&c| upper_ok(c)).min(values.len() - 1)]
                };
                if l > u {
                    IntervalBand::EMPTY
                } else {
                    IntervalBand::closed(l, u)
                }
            }
            Family::Ranks(e) => {
                let b = if strict { t.ceil() - 1.0 } else { t.floor() };
                if b < 0.0 {
                    return IntervalBand::EMPTY;
                }
                let cap = e.len() + 1;
                let b = if b >= cap as f64 { cap } else { b as usize };
                IntervalBand::closed(e.order_statistic(Side::Lo, cap - b), e.order_statistic(Side::Hi, b))
            }
        }
    }
}

/// Closed (`strict = false`) or strict (`strict = true`) band at threshold `t`.
///
/// The closed band is exactly `{y : score(y) <= t}` and the strict band
/// `{y : score(y) < t}`. Affine bands are the real-arithmetic bands with their
/// endpoints rounded inward to doubles; their strict band is reported as an
/// open interval. UACQR-P and DCP strict sets are closed.
pub fn band_at(method: Method, ing: &ScoreIngredients, t: f64, strict: bool) -> Result<IntervalBand> {
    if t.is_nan() {
        return Err(Error::NonFinite("threshold".into()));
    }
    Ok(resolve(method, ing)?.0.band(t, strict))
}

/// Maps doubles to integers preserving order (`-0.0` sits just below `0.0`).
fn order_key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

fn from_order_key(k: i64) -> f64 {
    let b = if k < 0 { k ^ i64::MAX } else { k };
    f64::from_bits(b as u64)
}

const KEY_MIN: i64 = -0x7FEF_FFFF_FFFF_FFFF - 1; // order_key(-f64::MAX)
const KEY_MAX: i64 = 0x7FEF_FFFF_FFFF_FFFF; // order_key(f64::MAX)

/// Key of the largest finite double where `pred` holds, for `pred` true then
/// false in increasing order; `None` when it already fails at `-f64::MAX`.
/// Starts the search at `seed`.
fn last_true(seed: f64, pred: impl Fn(f64) -> bool) -> Option<i64> {
    let at = |k: i64| pred(from_order_key(k));
    if !at(KEY_MIN) {
        return None;
    }
    if at(KEY_MAX) {
        return Some(KEY_MAX);
    }
    let s = if seed.is_nan() { 0 } else { order_key(seed).clamp(KEY_MIN, KEY_MAX) };
    let (mut yes, mut no);
    let mut step: i64 = 1;
    if at(s) {
        yes = s;
        loop {
            let c = yes.saturating_add(step).min(KEY_MAX);
            if !at(c) {
                no = c;
                break;
            }
            yes = c;
            step = step.saturating_mul(2);
        }
    } else {
        no = s;
        loop {
            let c = no.saturating_sub(step).max(KEY_MIN);
            if at(c) {
                yes = c;
                break;
            }
            no = c;
            step = step.saturating_mul(2);
        }
    }
    while no - yes > 1 {
        let mid = yes + (no - yes) / 2;
        if at(mid) {
            yes = mid;
        } else {
            no = mid;
        }
    }
    Some(yes)
}

/// Smallest double `t` where `covers` holds (monotone in `t`), `+inf` if none.
fn smallest_threshold(seed: f64, covers: impl Fn(f64) -> bool) -> f64 {
    match last_true(seed, |t| !covers(t)) {
        None => f64::NEG_INFINITY.next_up(),
        Some(k) if k == KEY_MAX => f64::INFINITY,
        Some(k) => from_order_key(k + 1),
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Sign of the exact real `t * s + a - b` (returned as -1, 0 or 1).
fn affine_sign(t: f64, s: f64, a: f64, b: f64) -> f64 {
    if t.is_infinite() {
        return t.signum();
    }
    for scale in [1.0, 0.25] {
        let (t, a, b) = (t * scale, a * scale, b * scale);
        let p = t * s;
        if !p.is_finite() {
            continue;
        }
        // error-free product, then a non-overlapping expansion of the four terms;
        // its sign is the sign of the most significant nonzero component
        let e = t.mul_add(s, -p);
        let mut expansion: Vec<f64> = Vec::with_capacity(4);
        let mut finite = true;
        for x in [p, e, a, -b] {
            let mut q = x;
            for h in expansion.iter_mut() {
                let (sum, err) = two_sum(q, *h);
                *h = err;
                q = sum;
            }
            finite &= q.is_finite();
            expansion.push(q);
        }
        if finite && expansion.iter().all(|v| v.is_finite()) {
            return expansion.iter().rev().find(|&&v| v != 0.0).map_or(0.0, |v| v.signum());
        }
    }
    // |t s| dwarfs |a - b| even after scaling
    t.signum() * s.signum()
}

/// Nonconformity score: the smallest threshold whose closed band contains `y`.
pub fn score(method: Method, ing: &ScoreIngredients, y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::NonFinite("response".into()));
    }
    let (family, _) = resolve(method, ing)?;
    Ok(match family {
        Family::Affine { base_lo, base_hi, s_lo, s_hi } => {
            let lo_side = smallest_threshold((base_lo - y) / s_lo, |t| affine_sign(t, s_lo, y, base_lo) >= 0.0);
            let hi_side = smallest_threshold((y - base_hi) / s_hi, |t| affine_sign(t, s_hi, base_hi, y) >= 0.0);
            lo_side.max(hi_side)
        }
        Family::Dcp(d) => (1.0 - 2.0 * d.cdf(y)).max(2.0 * d.cdf_left(y) - 1.0),
        Family::Ranks(e) => {
            let cap = e.len() + 1;
            (0..=cap).find(|&b| family.band(b as f64, false).contains(y)).unwrap_or(cap) as f64
        }
    })
}

/// `k = ceil((1 - alpha)(n1 + 1))` and the rounding gap `delta = k - (1 - alpha)(n1 + 1)`.
///
/// Products within 1e-9 of an integer are snapped to it.
pub fn rank_and_gap(n_cal: usize, alpha: f64) -> (usize, f64) {
    let x = (1.0 - alpha) * (n_cal as f64 + 1.0);
    let r = x.round();
    let x = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x };
    let k = x.ceil();
    ((k as usize).max(1), k - x)
}

fn check_inputs(scores: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::invalid("calibration needs at least one score"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("calibration score".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Deterministic threshold: the k-th smallest score, or `+inf` when `k > n1`.
pub fn calibrate(scores: &[f64], alpha: f64) -> Result<f64> {
    let sorted = check_inputs(scores, alpha)?;
    let (k, _) = rank_and_gap(sorted.len(), alpha);
    Ok(sorted.get(k - 1).copied().unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffBranch {
    OpenAtPrevious,
    ClosedAtPrevious,
    OpenAtK,
    ClosedAtK,
}

impl CutoffBranch {
    pub const ALL: [CutoffBranch; 4] =
        [CutoffBranch::OpenAtPrevious, CutoffBranch::ClosedAtPrevious, CutoffBranch::OpenAtK, CutoffBranch::ClosedAtK];

    pub fn is_open(self) -> bool {
        matches!(self, CutoffBranch::OpenAtPrevious | CutoffBranch::OpenAtK)
    }
}

/// Outcome of the randomized exact-coverage cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedCutoff {
    pub k: usize,
    pub delta: f64,
    /// Ties with the (k-1)-th order statistic among ranks `1..k-1`.
    pub t0: usize,
    /// Ties with the k-th order statistic among ranks `k..n1+1`.
    pub t1: usize,
    /// `t_(k-1)`, or `-inf` when `k = 1`.
    pub t_previous: f64,
    /// `t_(k)`, or `+inf` when `k = n1 + 1`.
    pub t_k: f64,
    /// Probabilities of [`CutoffBranch::ALL`], in that order.
    pub probabilities: [f64; 4],
    pub branch: CutoffBranch,
    pub chosen_t: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

/// Randomized cutoff over `t_(k-1)` / `t_(k)` with open or closed bands,
/// giving coverage of exactly `1 - alpha` under exchangeability.
pub fn calibrate_randomized<R: Rng + ?Sized>(scores: &[f64], alpha: f64, rng: &mut R) -> Result<RandomizedCutoff> {
    let sorted = check_inputs(scores, alpha)?;
    let n1 = sorted.len();
    let (k, delta) = rank_and_gap(n1, alpha);
    let k = k.min(n1 + 1);
    // 1-based order statistic with sentinels at 0 and n1 + 1
    let t = |i: usize| match i {
        0 => f64::NEG_INFINITY,
        i if i > n1 => f64::INFINITY,
        i => sorted[i - 1],
    };
    let t_previous = t(k - 1);
    let t_k = t(k);
    let t0 = if k >= 2 { (1..k).filter(|&i| t(i) == t_previous).count() } else { 0 };
    let t1 = (k..=n1 + 1).filter(|&i| t(i) == t_k).count();
    let (f0, f1) = (t0 as f64, t1 as f64);
    let probabilities = if t_previous < t_k {
        [delta / (f0 + 1.0), delta * f0 / (f0 + 1.0), (1.0 - delta) * f1 / (f1 + 1.0), (1.0 - delta) / (f1 + 1.0)]
    } else {
        [0.0, 0.0, (f1 + delta) / (f0 + f1 + 1.0), (f0 + 1.0 - delta) / (f0 + f1 + 1.0)]
    };

    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut branch = CutoffBranch::ClosedAtK;
    for (b, p) in CutoffBranch::ALL.into_iter().zip(probabilities) {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        branch = b;
        if u < acc {
            break;
        }
    }
    let chosen_t = match branch {
        CutoffBranch::OpenAtPrevious | CutoffBranch::ClosedAtPrevious => t_previous,
        CutoffBranch::OpenAtK | CutoffBranch::ClosedAtK => t_k,
    };
    let open = branch.is_open();
    Ok(RandomizedCutoff {
        k,
        delta,
        t0,
        t1,
        t_previous,
        t_k,
        probabilities,
        branch,
        chosen_t,
        lower_open: open,
        upper_open: open,
    })
}

/// A method with its calibrated threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedModel {
    pub method: Method,
    /// Deterministic threshold (also recorded when a randomized cutoff is in use).
    pub t_hat: f64,
    pub randomized: Option<RandomizedCutoff>,
}

impl CalibratedModel {
    pub fn deterministic(method: Method, scores: &[f64], alpha: f64) -> Result<Self> {
        Ok(Self { method, t_hat: calibrate(scores, alpha)?, randomized: None })
    }

    pub fn randomized<R: Rng + ?Sized>(method: Method, scores: &[f64], alpha: f64, rng: &mut R) -> Result<Self> {
        Ok(Self {
            method,
            t_hat: calibrate(scores, alpha)?,
            randomized: Some(calibrate_randomized(scores, alpha, rng)?),
        })
    }

    /// Maps infinite rank thresholds to `B + 1` for rank-based methods.
    pub fn with_rank_cap(mut self, ensemble_size: usize) -> Self {
        if self.method.is_rank_based() {
            let cap = (ensemble_size + 1) as f64;
            self.t_hat = self.t_hat.min(cap);
            if let Some(r) = &mut self.randomized {
                r.chosen_t = r.chosen_t.min(cap);
                r.t_k = r.t_k.min(cap);
            }
        }
        self
    }

    /// The threshold in force and whether the band is strict.
    pub fn effective_threshold(&self) -> (f64, bool) {
        match &self.randomized {
            Some(r) => (r.chosen_t, r.lower_open),
            None => (self.t_hat, false),
        }
    }
}

/// The calibrated band at a new point.
pub fn predict_interval(method: Method, ing: &ScoreIngredients, cal: &CalibratedModel) -> Result<IntervalBand> {
    if method != cal.method {
        return Err(Error::invalid(format!("model calibrated for {} used with {method}", cal.method)));
    }
    let (t, strict) = cal.effective_threshold();
    band_at(method, ing, t, strict)
}

pub fn contains(band: &IntervalBand, y: f64) -> bool {
    band.contains(y)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ensemble::EnsembleQuantiles;

    fn ranks() -> ScoreIngredients {
        ScoreIngredients::uacqr_p(EnsembleQuantiles::new(vec![3.0, 1.0, 2.0], vec![6.0, 4.0, 5.0]).unwrap().sorted())
    }

    #[test]
    fn key_bounds_are_the_finite_extremes() {
        assert_eq!(KEY_MIN, order_key(-f64::MAX));
        assert_eq!(KEY_MAX, order_key(f64::MAX));
        assert_eq!(order_key(0.0) - order_key(-0.0), 1);
        assert_eq!(from_order_key(order_key(1.5) + 1), 1.5f64.next_up());
    }

    #[test]
    fn rounding_cannot_split_score_and_band() {
        // 5 + (1 - ulp) rounds to 6, so the naive band at the previous double covers 6
        let ing = ScoreIngredients::quantile_pair(2.0, 5.0);
        let s = score(Method::Cqr, &ing, 6.0).unwrap();
        assert_eq!(s, 1.0);
        assert!(band_at(Method::Cqr, &ing, 1.0, false).unwrap().contains(6.0));
        assert!(!band_at(Method::Cqr, &ing, 1.0f64.next_down(), false).unwrap().contains(6.0));
        assert!(!band_at(Method::Cqr, &ing, 1.0, true).unwrap().contains(6.0));
    }

    #[test]
    fn cqr_scores() {
        let ing = ScoreIngredients::quantile_pair(2.0, 5.0);
        assert_eq!(score(Method::Cqr, &ing, 1.0).unwrap(), 1.0);
        assert_eq!(score(Method::Cqr, &ing, 6.0).unwrap(), 1.0);
        assert_eq!(score(Method::Cqr, &ing, 3.0).unwrap(), -1.0);
        assert!(score(Method::Cqr, &ing, f64::NAN).is_err());
    }

    #[test]
    fn scaled_scores() {
        let ing = ScoreIngredients::quantile_pair(2.0, 4.0);
        assert_eq!(score(Method::CqrR, &ing, 8.0).unwrap(), 2.0);
        let ing = ScoreIngredients::cqr_m(2.0, 3.0, 7.0);
        assert_eq!(score(Method::CqrM, &ing, 0.0).unwrap(), 2.0);
        assert_eq!(score(Method::CqrM, &ing, 9.0).unwrap(), 0.5);
        let ing = ScoreIngredients::uacqr_s(0.0, 1.0, 0.5, 2.0);
        assert_eq!(score(Method::UacqrS(DispersionKind::StdDev), &ing, -1.0).unwrap(), 2.0);
        assert_eq!(score(Method::MeanAbs, &ScoreIngredients::mean_abs(1.0), -2.0).unwrap(), 3.0);
    }

    #[test]
    fn uacqr_p_scores_scan_ranks() {
        let ing = ranks();
        assert_eq!(score(Method::UacqrP, &ing, 3.5).unwrap(), 1.0);
        assert_eq!(score(Method::UacqrP, &ing, 4.5).unwrap(), 2.0);
        assert_eq!(score(Method::UacqrP, &ing, 10.0).unwrap(), 4.0);
    }

    #[test]
    fn dcp_center_scores_zero() {
        let d = WeightedDistribution::empirical(&[1.0, 3.0]);
        assert_eq!(d.cdf(2.0), 0.5);
        assert_eq!(score(Method::Dcp, &ScoreIngredients::dcp(d), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn missing_ingredients_error() {
        let err = score(Method::CqrM, &ScoreIngredients::quantile_pair(0.0, 1.0), 0.5).unwrap_err();
        assert!(matches!(err, Error::MissingIngredient { ingredient: "q_med", .. }));
        assert!(score(Method::Dcp, &ScoreIngredients::default(), 0.0).is_err());
    }

    #[test]
    fn degenerate_width_is_floored() {
        let ing = ScoreIngredients::quantile_pair(1.0, 1.0);
        assert!(uses_scale_floor(Method::CqrR, &ing).unwrap());
        assert!(!uses_scale_floor(Method::Cqr, &ing).unwrap());
        let s = score(Method::CqrR, &ing, 1.5).unwrap();
        assert!((s - 0.5 / SCALE_FLOOR).abs() / s < 1e-12);
    }

    #[test]
    fn calibrate_examples() {
        let scores: Vec<f64> = (1..=9).map(|i| i as f64 * 0.5).collect();
        assert_eq!(calibrate(&scores, 0.1).unwrap(), 4.5);
        assert_eq!(calibrate(&[1.0, 2.0, 3.0, 4.0], 0.1).unwrap(), f64::INFINITY);
        assert_eq!(calibrate(&[2.0; 20], 0.1).unwrap(), 2.0);
        assert!(calibrate(&[], 0.1).is_err());
        assert!(calibrate(&[1.0], 1.5).is_err());
    }

    #[test]
    fn rank_and_gap_snaps_integers() {
        assert_eq!(rank_and_gap(9, 0.1), (9, 0.0));
        let (k, d) = rank_and_gap(4, 0.1);
        assert_eq!(k, 5);
        assert!((d - 0.5).abs() < 1e-12);
        assert_eq!(rank_and_gap(99, 0.1).0, 90);
    }

    #[test]
    fn randomized_first_case_with_sentinel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = calibrate_randomized(&[0.1, 0.4, 0.2, 0.3], 0.1, &mut rng).unwrap();
        assert_eq!((r.k, r.t0, r.t1), (5, 1, 1));
        assert!((r.delta - 0.5).abs() < 1e-12);
        assert_eq!(r.t_previous, 0.4);
        assert_eq!(r.t_k, f64::INFINITY);
        for p in r.probabilities {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_zero_gap_kills_previous_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let scores: Vec<f64> = (1..=9).map(f64::from).collect();
        let r = calibrate_randomized(&scores, 0.1, &mut rng).unwrap();
        assert_eq!((r.k, r.delta), (9, 0.0));
        assert_eq!(r.probabilities, [0.0, 0.0, 0.5, 0.5]);
        assert_eq!(r.chosen_t, 9.0);
    }

    #[test]
    fn randomized_tie_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = calibrate_randomized(&[2.0; 9], 0.1, &mut rng).unwrap();
        assert_eq!((r.k, r.t0, r.t1), (9, 8, 1));
        assert_eq!(r.chosen_t, 2.0);
        let expect_open = (1.0 + 0.0) / (8.0 + 1.0 + 1.0);
        assert_eq!(r.probabilities[2], expect_open);
        assert!((r.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predict_examples() {
        let cal = CalibratedModel { method: Method::Cqr, t_hat: 1.0, randomized: None };
        let band = predict_interval(Method::Cqr, &ScoreIngredients::quantile_pair(2.0, 5.0), &cal).unwrap();
        assert_eq!(band, IntervalBand::closed(1.0, 6.0));

        let cal = CalibratedModel { method: Method::UacqrP, t_hat: 2.0, randomized: None };
        assert_eq!(predict_interval(Method::UacqrP, &ranks(), &cal).unwrap(), IntervalBand::closed(2.0, 5.0));
        let cal = CalibratedModel { method: Method::UacqrP, t_hat: 4.0, randomized: None };
        let band = predict_interval(Method::UacqrP, &ranks(), &cal).unwrap();
        assert_eq!((band.lower, band.upper), (f64::NEG_INFINITY, f64::INFINITY));

        assert!(predict_interval(Method::Cqr, &ranks(), &cal).is_err());
    }

    #[test]
    fn contains_respects_flags() {
        assert!(contains(&IntervalBand::closed(1.0, 2.0), 2.0));
        let half_open = IntervalBand { upper_open: true, ..IntervalBand::closed(1.0, 2.0) };
        assert!(!contains(&half_open, 2.0));
        assert!(contains(&IntervalBand::REAL_LINE, -1e300));
        assert!(!contains(&IntervalBand::EMPTY, 0.0));
        assert!(!contains(&IntervalBand::closed(3.0, 1.0), 2.0));
    }

    #[test]
    fn strict_rank_band_is_previous_rank() {
        let ing = ranks();
        assert_eq!(band_at(Method::UacqrP, &ing, 2.0, true).unwrap(), band_at(Method::UacqrP, &ing, 1.0, false).unwrap());
        assert!(band_at(Method::UacqrP, &ing, 0.0, true).unwrap().is_empty());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL.into_iter().chain([Method::UacqrS(DispersionKind::Iqr)]) {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
