//! Discrete weighted distributions and the left-continuous quantile convention.
//!
//! Every quantile in the crate (forest, per-tree, ensemble IQR) goes through
//! [`WeightedDistribution`], so the cumulative weights used to answer a quantile
//! query are bit-identical to the ones used to answer the matching CDF query.

/// A finite distribution over sorted distinct support points.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDistribution {
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl WeightedDistribution {
    /// Builds the distribution from `(value, weight)` pairs already sorted by value.
    ///
    /// Equal values are merged by adding their weights in iteration order and
    /// zero weights are dropped. The last cumulative weight is pinned to exactly 1.
    ///
    /// Panics if the total weight is not positive.
    pub fn from_sorted_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut values = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for (v, w) in pairs {
            if w == 0.0 {
                continue;
            }
            debug_assert!(w > 0.0, "negative weight");
            acc += w;
            match values.last() {
                Some(&last) if last == v => *cum.last_mut().unwrap() = acc,
                Some(&last) => {
                    debug_assert!(last < v, "pairs must be sorted by value");
                    values.push(v);
                    cum.push(acc);
                }
                None => {
                    values.push(v);
                    cum.push(acc);
                }
            }
        }
        assert!(!values.is_empty() && acc > 0.0, "distribution needs positive total weight");
        *cum.last_mut().unwrap() = 1.0;
        Self { values, cum }
    }

    /// Empirical distribution of `samples`, each carrying mass `1/len`.
    pub fn empirical(samples: &[f64]) -> Self {
        assert!(!samples.is_empty(), "empirical distribution of an empty sample");
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut values: Vec<f64> = Vec::new();
        let mut cum: Vec<f64> = Vec::new();
        for (i, v) in sorted.into_iter().enumerate() {
            let c = (i + 1) as f64 / n;
            if values.last() == Some(&v) {
                *cum.last_mut().unwrap() = c;
            } else {
                values.push(v);
                cum.push(c);
            }
        }
        Self { values, cum }
    }

    pub fn support(&self) -> &[f64] {
        &self.values
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// `inf { y : F(y) >= a }`. Levels `<= 0` give `-inf`, levels `> 1` give `+inf`.
    pub fn quantile(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if a > 1.0 {
            return f64::INFINITY;
        }
        let j = self.cum.partition_point(|&c| c < a);
        self.values[j.min(self.values.len() - 1)]
    }

    /// `inf { y : F(y) > a }`, the right-continuous counterpart of [`Self::quantile`].
    pub fn upper_quantile(&self, a: f64) -> f64 {
        if a < 0.0 {
            return f64::NEG_INFINITY;
        }
        if a >= 1.0 {
            return f64::INFINITY;
        }
        let j = self.cum.partition_point(|&c| c <= a);
        self.values[j.min(self.values.len() - 1)]
    }

    /// `F(y) = P(Y <= y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        match self.values.partition_point(|&v| v <= y) {
            0 => 0.0,
            j => self.cum[j - 1],
        }
    }

    /// `F(y-) = P(Y < y)`.
    pub fn cdf_left(&self, y: f64) -> f64 {
        match self.values.partition_point(|&v| v < y) {
            0 => 0.0,
            j => self.cum[j - 1],
        }
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        let mut m = 0.0;
        for (v, c) in self.values.iter().zip(&self.cum) {
            m += v * (c - prev);
            prev = *c;
        }
        m
    }
}

/// Left-continuous empirical `a`-quantile of an unweighted sample.
pub fn empirical_quantile(samples: &[f64], a: f64) -> f64 {
    WeightedDistribution::empirical(samples).quantile(a)
}
