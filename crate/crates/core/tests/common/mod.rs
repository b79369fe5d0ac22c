//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use uacqr::conformal::{self, IntervalBand, Method, ScoreIngredients};
use uacqr::ensemble::EnsembleQuantiles;
use uacqr::quantile::WeightedDistribution;
use uacqr::{Dataset, ForestModel};

pub type TestRng = ChaCha8Rng;

/// A real drawn either from a small grid (to provoke ties) or uniformly.
pub fn value(rng: &mut TestRng) -> f64 {
    const GRID: [f64; 6] = [-1.0, 0.0, 0.5, 1.0, 2.0, 3.25];
    if rng.random_bool(0.3) {
        *GRID.choose(rng).unwrap()
    } else {
        rng.random_range(-3.0..3.0)
    }
}

fn sorted3(rng: &mut TestRng) -> (f64, f64, f64) {
    let mut v = [value(rng), value(rng), value(rng)];
    v.sort_by(f64::total_cmp);
    (v[0], v[1], v[2])
}

fn scale(rng: &mut TestRng) -> f64 {
    match rng.random_range(0..5) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.01..2.0),
    }
}

pub fn random_ensemble(rng: &mut TestRng) -> EnsembleQuantiles {
    let b = rng.random_range(1..=12);
    let mut lo = Vec::with_capacity(b);
    let mut hi = Vec::with_capacity(b);
    for _ in 0..b {
        let (l, h) = (value(rng), value(rng));
        lo.push(l.min(h));
        hi.push(l.max(h));
    }
    EnsembleQuantiles::new(lo, hi).unwrap()
}

pub fn random_distribution(rng: &mut TestRng) -> WeightedDistribution {
    let m = rng.random_range(1..=10);
    let mut pairs: Vec<(f64, f64)> =
        (0..m).map(|_| (value(rng), f64::from(rng.random_range(1..=4u8)))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    WeightedDistribution::from_sorted_pairs(pairs.into_iter().map(|(v, w)| (v, w / total)))
}

pub fn random_ingredients(method: Method, rng: &mut TestRng) -> ScoreIngredients {
    match method {
        Method::MeanAbs => ScoreIngredients::mean_abs(value(rng)),
        Method::Cqr | Method::CqrR => {
            let (a, b) = (value(rng), value(rng));
            ScoreIngredients::quantile_pair(a.min(b), a.max(b))
        }
        Method::CqrM => {
            let (lo, med, hi) = sorted3(rng);
            ScoreIngredients::cqr_m(lo, med, hi)
        }
        Method::UacqrS(_) => {
            let (a, b) = (value(rng), value(rng));
            ScoreIngredients::uacqr_s(a.min(b), a.max(b), scale(rng), scale(rng))
        }
        Method::UacqrP => ScoreIngredients::uacqr_p(random_ensemble(rng).sorted()),
        Method::Dcp => ScoreIngredients::dcp(random_distribution(rng)),
    }
}

/// Values at which membership is most fragile for these ingredients.
fn landmarks(ing: &ScoreIngredients) -> Vec<f64> {
    let mut v: Vec<f64> = [ing.q_lo, ing.q_hi, ing.q_med, ing.mu].into_iter().flatten().collect();
    if let Some(e) = &ing.ensemble {
        for b in 1..=e.len() {
            v.push(e.order_statistic(uacqr::ensemble::Side::Lo, b));
            v.push(e.order_statistic(uacqr::ensemble::Side::Hi, b));
        }
    }
    if let Some(d) = &ing.distribution {
        v.extend_from_slice(d.support());
    }
    v
}

/// A response: often on a landmark, otherwise uniform around them.
pub fn random_response(ing: &ScoreIngredients, rng: &mut TestRng) -> f64 {
    let marks = landmarks(ing);
    match rng.random_range(0..4) {
        0 if !marks.is_empty() => *marks.choose(rng).unwrap(),
        1 if !marks.is_empty() => {
            let m = *marks.choose(rng).unwrap();
            if rng.random_bool(0.5) {
                m.next_up()
            } else {
                m.next_down()
            }
        }
        _ => rng.random_range(-6.0..6.0),
    }
}

/// Thresholds to probe around a score: the score itself, its neighbouring
/// doubles, and a spread covering the method's natural range.
pub fn threshold_grid(method: Method, ing: &ScoreIngredients, s: f64, rng: &mut TestRng, len: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(len);
    if method.is_rank_based() {
        let cap = ing.ensemble.as_ref().unwrap().len() + 1;
        grid.extend((0..=cap).map(|b| b as f64));
        while grid.len() < len {
            grid.push(rng.random_range(-1.0..(cap as f64 + 1.0)));
        }
    } else {
        grid.push(s);
        grid.push(s.next_up());
        grid.push(s.next_down());
        let (lo, hi) = if method == Method::Dcp { (-1.2, 1.2) } else { (s - 4.0, s + 4.0) };
        while grid.len() < len {
            grid.push(rng.random_range(lo..hi));
        }
    }
    grid.truncate(len);
    grid
}

pub fn closed_band(method: Method, ing: &ScoreIngredients, t: f64) -> IntervalBand {
    conformal::band_at(method, ing, t, false).unwrap()
}

/// `ceil((1 - alpha)(n + 1))` by exact rational arithmetic for `alpha = num / den`.
pub fn conformal_rank(n: usize, num: u64, den: u64) -> usize {
    let x = (den - num) * (n as u64 + 1);
    x.div_ceil(den) as usize
}

// ---- forest oracle ----

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Weighted `a`-quantile of the forest at `x`, with `a = a_num / 2^20`, computed in
/// exact rational arithmetic straight from leaf memberships.
pub fn oracle_forest_quantile(forest: &ForestModel, x: &[f64], a_num: u64) -> f64 {
    let leaves: Vec<&[(u32, u32)]> = forest.trees().iter().map(|t| t.leaf_of(x)).collect();
    let sizes: Vec<u128> = leaves.iter().map(|l| l.iter().map(|e| u128::from(e.1)).sum()).collect();
    let l = sizes.iter().fold(1u128, |acc, &s| acc / gcd(acc, s) * s);
    let n = forest.train_responses().len();
    // weight of i, scaled by B * l
    let mut num = vec![0u128; n];
    for (leaf, &size) in leaves.iter().zip(&sizes) {
        for &(i, m) in leaf.iter() {
            num[i as usize] += u128::from(m) * (l / size);
        }
    }
    let total = l * forest.n_trees() as u128;
    let y = forest.train_responses();
    let mut candidates: Vec<f64> = (0..n).filter(|&i| num[i] > 0).map(|i| y[i]).collect();
    candidates.sort_by(f64::total_cmp);
    for &c in &candidates {
        let below: u128 = (0..n).filter(|&i| y[i] <= c).map(|i| num[i]).sum();
        // below / total >= a_num / 2^20
        if below << 20 >= u128::from(a_num) * total {
            return c;
        }
    }
    unreachable!("cumulative weight reaches 1")
}

pub fn random_dataset(rng: &mut TestRng, n: usize, p: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| if rng.random_bool(0.2) { rng.random_range(0..3) as f64 } else { rng.random() }).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { rng.random_range(0..4) as f64 } else { value(rng) }).collect();
    Dataset::new(rows, y).unwrap()
}
