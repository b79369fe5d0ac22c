//! Evaluation of prediction bands on labelled test points.

use crate::conformal::IntervalBand;
use crate::error::{Error, Result};

pub fn coverage(bands: &[IntervalBand], ys: &[f64]) -> Result<f64> {
    check_lengths(bands.len(), ys.len())?;
    if bands.is_empty() {
        return Err(Error::invalid("coverage of zero points"));
    }
    let hits = bands.iter().zip(ys).filter(|(b, &y)| b.contains(y)).count();
    Ok(hits as f64 / ys.len() as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("{a} bands but {b} responses")));
    }
    Ok(())
}

/// Width plus `2/alpha` times the distance by which `y` misses the band.
///
/// Bands with an infinite endpoint have no finite loss and are rejected. An
/// empty band with finite crossed endpoints is scored as the point interval at
/// their midpoint.
pub fn interval_score_loss(band: &IntervalBand, y: f64, alpha: f64) -> Result<f64> {
    if !(band.lower.is_finite() && band.upper.is_finite()) {
        return Err(Error::NonFinite("interval endpoint".into()));
    }
    let (l, u) = if band.lower > band.upper {
        let m = (band.lower + band.upper) / 2.0;
        (m, m)
    } else {
        (band.lower, band.upper)
    };
    let k = 2.0 / alpha;
    let mut loss = u - l;
    if y < l {
        loss += k * l - k * y;
    }
    if y > u {
        loss += k * y - k * u;
    }
    Ok(loss)
}

/// Absolute Pearson correlation between coverage indicators and widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    /// Set when either variable has zero variance (value is then 0).
    pub degenerate: bool,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Correlation {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if a.len() < 2 || saa == 0.0 || sbb == 0.0 {
        return Correlation { value: 0.0, degenerate: true };
    }
    Correlation { value: sab / (saa.sqrt() * sbb.sqrt()), degenerate: false }
}

/// Computed over the bands with finite width.
pub fn coverage_width_correlation(bands: &[IntervalBand], ys: &[f64]) -> Result<Correlation> {
    check_lengths(bands.len(), ys.len())?;
    let (ind, widths): (Vec<f64>, Vec<f64>) = bands
        .iter()
        .zip(ys)
        .filter(|(b, _)| b.width().is_finite())
        .map(|(b, &y)| (f64::from(u8::from(b.contains(y))), b.width()))
        .unzip();
    let c = pearson(&ind, &widths);
    Ok(Correlation { value: c.value.abs(), ..c })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    /// `None` for an empty bin.
    pub coverage: Option<f64>,
    /// Mean over finite-width bands in the bin.
    pub mean_width: Option<f64>,
    pub count: usize,
}

/// Equal-width bins over `range` (default `[min x, max x]`); points outside an
/// explicit range are ignored.
pub fn binned_conditional_coverage(
    xs: &[f64],
    bands: &[IntervalBand],
    ys: &[f64],
    n_bins: usize,
    range: Option<(f64, f64)>,
) -> Result<Vec<BinStats>> {
    check_lengths(bands.len(), ys.len())?;
    check_lengths(xs.len(), ys.len())?;
    if n_bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None if xs.is_empty() => (0.0, 1.0),
        None => xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x))),
    };
    let span = hi - lo;
    let mut hits = vec![0usize; n_bins];
    let mut counts = vec![0usize; n_bins];
    let mut wsum = vec![0.0; n_bins];
    let mut wcount = vec![0usize; n_bins];
    for ((&x, band), &y) in xs.iter().zip(bands).zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        let j = if span > 0.0 { (((x - lo) / span) * n_bins as f64) as usize } else { 0 };
        let j = j.min(n_bins - 1);
        counts[j] += 1;
        hits[j] += usize::from(band.contains(y));
        let w = band.width();
        if w.is_finite() {
            wsum[j] += w;
            wcount[j] += 1;
        }
    }
    Ok((0..n_bins)
        .map(|j| BinStats {
            lo: lo + span * j as f64 / n_bins as f64,
            hi: if j + 1 == n_bins { hi } else { lo + span * (j + 1) as f64 / n_bins as f64 },
            coverage: (counts[j] > 0).then(|| hits[j] as f64 / counts[j] as f64),
            mean_width: (wcount[j] > 0).then(|| wsum[j] / wcount[j] as f64),
            count: counts[j],
        })
        .collect())
}

/// Welch's two-sample t statistic.
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, var / n)
    };
    let ((ma, va), (mb, vb)) = (stats(a), stats(b));
    (ma - mb) / (va + vb).sqrt()
}

/// Summary statistics of one method on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub n: usize,
    pub coverage: f64,
    /// Mean width over finite bands; NaN when every band is infinite.
    pub avg_width: f64,
    pub frac_infinite_width: f64,
    /// Mean interval score loss over finite bands; NaN when none.
    pub mean_isl: f64,
    pub cw_correlation: f64,
    pub cw_degenerate: bool,
    pub per_bin: Vec<BinStats>,
}

impl EvaluationReport {
    /// `bins` is `(xs, n_bins, range)` for a one-dimensional covariate.
    pub fn evaluate(
        bands: &[IntervalBand],
        ys: &[f64],
        alpha: f64,
        bins: Option<(&[f64], usize, Option<(f64, f64)>)>,
    ) -> Result<Self> {
        let coverage = coverage(bands, ys)?;
        let n = ys.len();
        let finite: Vec<(&IntervalBand, f64)> = bands.iter().zip(ys.iter().copied()).filter(|(b, _)| b.is_finite()).collect();
        let n_inf = n - finite.len();
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
            if c == 0 {
                f64::NAN
            } else {
                s / c as f64
            }
        };
        let avg_width = mean(&mut finite.iter().map(|(b, _)| b.width()));
        let isl: Vec<f64> = finite
            .iter()
            .filter_map(|(b, y)| interval_score_loss(b, *y, alpha).ok())
            .collect();
        let mean_isl = mean(&mut isl.iter().copied());
        let cw = coverage_width_correlation(bands, ys)?;
        let per_bin = match bins {
            Some((xs, n_bins, range)) => binned_conditional_coverage(xs, bands, ys, n_bins, range)?,
            None => Vec::new(),
        };
        Ok(Self {
            n,
            coverage,
            avg_width,
            frac_infinite_width: n_inf as f64 / n as f64,
            mean_isl,
            cw_correlation: cw.value,
            cw_degenerate: cw.degenerate,
            per_bin,
        })
    }
}
