//! Quantile regression forest.
//!
//! Trees are grown greedily on bootstrap resamples by variance reduction. Each
//! leaf keeps the training indices that reached it (with bootstrap multiplicity),
//! which is all that is needed for forest weights, weighted quantiles, per-tree
//! quantiles, the conditional CDF and the mean prediction.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::quantile::WeightedDistribution;

const DUMP_MAGIC: &str = "uacqr-forest";
const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    /// `None` grows until the other stopping rules fire.
    pub max_depth: Option<usize>,
    /// Candidate features per split; `None` means all of them.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, min_samples_leaf: 5, max_depth: None, mtry: None, bootstrap: true, seed: 0 }
    }
}

impl ForestParams {
    fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > p {
                return Err(Error::invalid(format!("mtry must lie in 1..={p}, got {m}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf(usize),
}

/// Training indices in one leaf, as `(index, multiplicity)` sorted by (response, index).
#[derive(Debug, Clone, PartialEq)]
struct Leaf {
    entries: Vec<(u32, u32)>,
    size: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

impl Tree {
    fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                Node::Split { feature, threshold, left, right } => {
                    node = if x[feature] <= threshold { left } else { right };
                }
                Node::Leaf(id) => return &self.leaves[id],
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Every leaf as a list of `(training index, multiplicity)`.
    pub fn leaf_contents(&self) -> impl Iterator<Item = &[(u32, u32)]> {
        self.leaves.iter().map(|l| l.entries.as_slice())
    }

    /// Training indices (with multiplicity) of the leaf `x` falls into.
    pub fn leaf_of(&self, x: &[f64]) -> &[(u32, u32)] {
        &self.leaf_for(x).entries
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    params: ForestParams,
    n_features: usize,
    trees: Vec<Tree>,
    responses: Vec<f64>,
    order: Vec<u32>,
}

fn by_response<'a>(y: &'a [f64]) -> impl Fn(&u32, &u32) -> Ordering + 'a {
    move |a, b| y[*a as usize].total_cmp(&y[*b as usize]).then(a.cmp(b))
}

fn response_order(y: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..y.len() as u32).collect();
    order.sort_by(by_response(y));
    order
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a ForestParams,
    mtry: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    cost: f64,
}

impl Grower<'_> {
    fn grow(&self, samples: Vec<u32>, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree { nodes: Vec::new(), leaves: Vec::new() };
        // (node slot, samples, depth)
        let mut stack = vec![(0usize, samples, 0usize)];
        tree.nodes.push(Node::Leaf(usize::MAX));
        while let Some((slot, samples, depth)) = stack.pop() {
            match self.best_split(&samples, depth, rng) {
                Some(split) => {
                    let col = &self.columns[split.feature];
                    let (l, r): (Vec<u32>, Vec<u32>) =
                        samples.into_iter().partition(|&i| col[i as usize] <= split.threshold);
                    let left = tree.nodes.len();
                    tree.nodes.push(Node::Leaf(usize::MAX));
                    tree.nodes.push(Node::Leaf(usize::MAX));
                    tree.nodes[slot] =
                        Node::Split { feature: split.feature, threshold: split.threshold, left, right: left + 1 };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
                None => {
                    tree.nodes[slot] = Node::Leaf(tree.leaves.len());
                    tree.leaves.push(make_leaf(samples, self.y));
                }
            }
        }
        tree
    }

    fn best_split(&self, samples: &[u32], depth: usize, rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let m = samples.len();
        let msl = self.params.min_samples_leaf;
        if m < 2 * msl || self.params.max_depth.is_some_and(|d| depth >= d) {
            return None;
        }
        let y0 = self.y[samples[0] as usize];
        if samples.iter().all(|&i| self.y[i as usize] == y0) {
            return None;
        }
        let mean = samples.iter().map(|&i| self.y[i as usize]).sum::<f64>() / m as f64;

        let p = self.columns.len();
        let features: Vec<usize> = if self.mtry >= p {
            (0..p).collect()
        } else {
            let mut f = rand::seq::index::sample(rng, p, self.mtry).into_vec();
            f.sort_unstable();
            f
        };

        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
        for feature in features {
            let col = &self.columns[feature];
            pairs.clear();
            pairs.extend(samples.iter().map(|&i| (col[i as usize], self.y[i as usize] - mean)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[m - 1].0 {
                continue;
            }
            let (tot_s, tot_q) = pairs.iter().fold((0.0, 0.0), |(s, q), &(_, d)| (s + d, q + d * d));
            let (mut s_l, mut q_l) = (0.0, 0.0);
            for i in 1..m {
                let d = pairs[i - 1].1;
                s_l += d;
                q_l += d * d;
                if i < msl || m - i < msl || pairs[i - 1].0 == pairs[i].0 {
                    continue;
                }
                let (nl, nr) = (i as f64, (m - i) as f64);
                let (s_r, q_r) = (tot_s - s_l, tot_q - q_l);
                let cost = (q_l - s_l * s_l / nl) + (q_r - s_r * s_r / nr);
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    let (a, b) = (pairs[i - 1].0, pairs[i].0);
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(BestSplit { feature, threshold, cost });
                }
            }
        }
        best
    }
}

fn make_leaf(mut samples: Vec<u32>, y: &[f64]) -> Leaf {
    let size = samples.len() as u32;
    samples.sort_unstable();
    let mut entries: Vec<(u32, u32)> = Vec::new();
    for i in samples {
        match entries.last_mut() {
            Some((j, m)) if *j == i => *m += 1,
            _ => entries.push((i, 1)),
        }
    }
    let cmp = by_response(y);
    entries.sort_by(|a, b| cmp(&a.0, &b.0));
    Leaf { entries, size }
}

impl ForestModel {
    /// Grows `params.n_trees` trees. Trees are fitted in parallel with one
    /// seeded stream per tree, so the result does not depend on scheduling.
    pub fn fit(ds: &Dataset, params: &ForestParams) -> Result<Self> {
        let p = ds.p();
        params.validate(p)?;
        let n = ds.n();
        if n == 0 {
            return Err(Error::invalid("cannot fit a forest on an empty dataset"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("too many training rows"));
        }
        let columns: Vec<Vec<f64>> = (0..p).map(|f| ds.rows().map(|r| r[f]).collect()).collect();
        let y = ds.response();
        let grower = Grower { columns: &columns, y, params, mtry: params.mtry.unwrap_or(p) };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(b as u64);
                let samples: Vec<u32> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n as u32)).collect()
                } else {
                    (0..n as u32).collect()
                };
                grower.grow(samples, &mut rng)
            })
            .collect();
        Ok(Self { params: params.clone(), n_features: p, trees, responses: y.to_vec(), order: response_order(y) })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn train_responses(&self) -> &[f64] {
        &self.responses
    }

    /// `w_i(x) = (1/B) sum_b m_{b,i}(x) / |leaf_b(x)|`.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_features);
        let mut w = vec![0.0; self.responses.len()];
        for tree in &self.trees {
            let leaf = tree.leaf_for(x);
            let size = f64::from(leaf.size);
            for &(i, m) in &leaf.entries {
                w[i as usize] += f64::from(m) / size;
            }
        }
        let b = self.trees.len() as f64;
        w.iter_mut().for_each(|v| *v /= b);
        w
    }

    /// The weighted distribution of training responses at `x`.
    pub fn distribution(&self, x: &[f64]) -> WeightedDistribution {
        self.distribution_from_weights(&self.weights(x))
    }

    /// Distribution for a weight vector already returned by [`Self::weights`].
    pub fn distribution_from_weights(&self, w: &[f64]) -> WeightedDistribution {
        WeightedDistribution::from_sorted_pairs(self.order.iter().map(|&i| (self.responses[i as usize], w[i as usize])))
    }

    /// `sum_i w_i Y_i` for a weight vector from [`Self::weights`].
    pub fn mean_from_weights(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.responses).map(|(w, y)| w * y).sum()
    }

    pub fn predict_quantile(&self, x: &[f64], a: f64) -> f64 {
        self.distribution(x).quantile(a)
    }

    pub fn conditional_cdf(&self, x: &[f64], y: f64) -> f64 {
        self.distribution(x).cdf(y)
    }

    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.mean_from_weights(&self.weights(x))
    }

    fn leaf_distribution(&self, leaf: &Leaf) -> WeightedDistribution {
        let size = f64::from(leaf.size);
        WeightedDistribution::from_sorted_pairs(
            leaf.entries.iter().map(|&(i, m)| (self.responses[i as usize], f64::from(m) / size)),
        )
    }

    /// The `a`-quantile of each tree's leaf at `x`.
    pub fn per_tree_quantiles(&self, x: &[f64], a: f64) -> Vec<f64> {
        self.trees.iter().map(|t| self.leaf_distribution(t.leaf_for(x)).quantile(a)).collect()
    }

    /// Per-tree quantiles at several levels at once; `out[level][tree]`.
    pub fn per_tree_quantiles_at(&self, x: &[f64], levels: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(self.trees.len()); levels.len()];
        for t in &self.trees {
            let d = self.leaf_distribution(t.leaf_for(x));
            for (o, &a) in out.iter_mut().zip(levels) {
                o.push(d.quantile(a));
            }
        }
        out
    }

    /// A one-tree forest made of tree `b`, sharing the training responses.
    pub fn single_tree(&self, b: usize) -> ForestModel {
        ForestModel {
            params: ForestParams { n_trees: 1, ..self.params.clone() },
            n_features: self.n_features,
            trees: vec![self.trees[b].clone()],
            responses: self.responses.clone(),
            order: self.order.clone(),
        }
    }

    /// Keeps every partition and leaf membership but swaps the stored responses.
    pub fn with_responses(&self, responses: Vec<f64>) -> Result<ForestModel> {
        if responses.len() != self.responses.len() {
            return Err(Error::invalid("replacement responses have the wrong length"));
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("replacement response".into()));
        }
        let trees = {
            let cmp = by_response(&responses);
            self.trees
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    for leaf in &mut t.leaves {
                        leaf.entries.sort_by(|a, b| cmp(&a.0, &b.0));
                    }
                    t
                })
                .collect()
        };
        let order = response_order(&responses);
        Ok(ForestModel { params: self.params.clone(), n_features: self.n_features, trees, responses, order })
    }

    /// Writes the line-oriented text dump described in the README.
    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = &self.params;
        let opt = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        writeln!(w, "{DUMP_MAGIC} {DUMP_VERSION}")?;
        writeln!(
            w,
            "params {} {} {} {} {} {}",
            p.n_trees,
            p.min_samples_leaf,
            opt(p.max_depth),
            opt(p.mtry),
            p.bootstrap,
            p.seed
        )?;
        writeln!(w, "features {}", self.n_features)?;
        let mut line = format!("responses {}", self.responses.len());
        for y in &self.responses {
            write!(line, " {y:?}").unwrap();
        }
        writeln!(w, "{line}")?;
        for tree in &self.trees {
            writeln!(w, "tree {} {}", tree.nodes.len(), tree.leaves.len())?;
            for node in &tree.nodes {
                match node {
                    Node::Split { feature, threshold, left, right } => {
                        writeln!(w, "S {feature} {threshold:?} {left} {right}")?
                    }
                    Node::Leaf(id) => writeln!(w, "L {id}")?,
                }
            }
            for leaf in &tree.leaves {
                let mut line = format!("E {}", leaf.entries.len());
                for (i, m) in &leaf.entries {
                    write!(line, " {i}:{m}").unwrap();
                }
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<ForestModel> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            match lines.next() {
                Some((no, Ok(l))) => Ok((no, l.split_whitespace().map(str::to_string).collect())),
                Some((no, Err(e))) => Err(Error::ModelFormat { line: no, message: e.to_string() }),
                None => Err(Error::ModelFormat { line: 0, message: format!("unexpected end of input, expected {what}") }),
            }
        };
        fn bad(line: usize, message: impl Into<String>) -> Error {
            Error::ModelFormat { line, message: message.into() }
        }
        fn num<T: std::str::FromStr>(line: usize, s: Option<&String>) -> Result<T> {
            s.and_then(|s| s.parse().ok()).ok_or_else(|| bad(line, format!("bad number {s:?}")))
        }
        fn opt(line: usize, s: Option<&String>) -> Result<Option<usize>> {
            match s.map(String::as_str) {
                Some("none") => Ok(None),
                _ => num(line, s).map(Some),
            }
        }

        let (no, head) = next("header")?;
        if head.first().map(String::as_str) != Some(DUMP_MAGIC) {
            return Err(bad(no, "not a forest dump"));
        }
        let version: u32 = num(no, head.get(1))?;
        if version != DUMP_VERSION {
            return Err(bad(no, format!("unsupported dump version {version}")));
        }
        let (no, p) = next("params")?;
        if p.first().map(String::as_str) != Some("params") || p.len() != 7 {
            return Err(bad(no, "expected params line"));
        }
        let params = ForestParams {
            n_trees: num(no, p.get(1))?,
            min_samples_leaf: num(no, p.get(2))?,
            max_depth: opt(no, p.get(3))?,
            mtry: opt(no, p.get(4))?,
            bootstrap: num(no, p.get(5))?,
            seed: num(no, p.get(6))?,
        };
        let (no, f) = next("features")?;
        let n_features: usize = num(no, f.get(1))?;
        let (no, r) = next("responses")?;
        let n: usize = num(no, r.get(1))?;
        if r.len() != n + 2 {
            return Err(bad(no, "response count mismatch"));
        }
        let responses: Vec<f64> = r[2..].iter().map(|s| num(no, Some(s))).collect::<Result<_>>()?;

        let mut trees = Vec::with_capacity(params.n_trees);
        for _ in 0..params.n_trees {
            let (no, t) = next("tree")?;
            if t.first().map(String::as_str) != Some("tree") {
                return Err(bad(no, "expected tree line"));
            }
            let (n_nodes, n_leaves): (usize, usize) = (num(no, t.get(1))?, num(no, t.get(2))?);
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let (no, l) = next("node")?;
                let node = match l.first().map(String::as_str) {
                    Some("S") => Node::Split {
                        feature: num(no, l.get(1))?,
                        threshold: num(no, l.get(2))?,
                        left: num(no, l.get(3))?,
                        right: num(no, l.get(4))?,
                    },
                    Some("L") => Node::Leaf(num(no, l.get(1))?),
                    _ => return Err(bad(no, "expected node")),
                };
                match node {
                    Node::Split { feature, left, right, .. }
                        if feature >= n_features || left >= n_nodes || right >= n_nodes =>
                    {
                        return Err(bad(no, "split references out of range"))
                    }
                    Node::Leaf(id) if id >= n_leaves => return Err(bad(no, "leaf id out of range")),
                    _ => {}
                }
                nodes.push(node);
            }
            let mut leaves = Vec::with_capacity(n_leaves);
            for _ in 0..n_leaves {
                let (no, l) = next("leaf")?;
                let count: usize = num(no, l.get(1))?;
                if l.first().map(String::as_str) != Some("E") || l.len() != count + 2 {
                    return Err(bad(no, "malformed leaf"));
                }
                let mut entries = Vec::with_capacity(count);
                let mut size = 0u32;
                for e in &l[2..] {
                    let (i, m) = e.split_once(':').ok_or_else(|| bad(no, "leaf entry needs index:count"))?;
                    let i: u32 = i.parse().map_err(|_| bad(no, "bad leaf index"))?;
                    let m: u32 = m.parse().map_err(|_| bad(no, "bad multiplicity"))?;
                    if i as usize >= n || m == 0 {
                        return Err(bad(no, "leaf entry out of range"));
                    }
                    size += m;
                    entries.push((i, m));
                }
                if entries.is_empty() {
                    return Err(bad(no, "empty leaf"));
                }
                leaves.push(Leaf { entries, size });
            }
            trees.push(Tree { nodes, leaves });
        }
        let order = response_order(&responses);
        Ok(ForestModel { params, n_features, trees, responses, order })
    }

    /// Renders the dump as a string.
    pub fn to_dump(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let y = rows.iter().map(|r| (6.0 * r[0]).sin() + r[1] + 0.3 * rng.random::<f64>()).collect();
        Dataset::new(rows, y).unwrap()
    }

    fn params(n_trees: usize, msl: usize) -> ForestParams {
        ForestParams { n_trees, min_samples_leaf: msl, seed: 11, ..ForestParams::default() }
    }

    #[test]
    fn large_leaf_size_gives_stumps() {
        let ds = toy(4, 1);
        let f = ForestModel::fit(&ds, &params(5, 4)).unwrap();
        for t in f.trees() {
            assert_eq!(t.n_nodes(), 1);
            let total: u32 = t.leaf_contents().next().unwrap().iter().map(|e| e.1).sum();
            assert_eq!(total, 4);
        }
    }

    #[test]
    fn constant_response_gives_single_leaves() {
        let ds = Dataset::new((0..20).map(|i| vec![i as f64]).collect(), vec![2.5; 20]).unwrap();
        let f = ForestModel::fit(&ds, &params(4, 1)).unwrap();
        assert!(f.trees().iter().all(|t| t.n_nodes() == 1));
        for a in [0.01, 0.5, 0.99] {
            assert_eq!(f.predict_quantile(&[3.0], a), 2.5);
        }
        assert_eq!(f.predict_mean(&[3.0]), 2.5);
    }

    #[test]
    fn fitting_is_deterministic() {
        let ds = toy(60, 2);
        let p = ForestParams { mtry: Some(1), ..params(8, 2) };
        assert_eq!(ForestModel::fit(&ds, &p).unwrap(), ForestModel::fit(&ds, &p).unwrap());
    }

    #[test]
    fn leaves_respect_min_samples_leaf() {
        let ds = toy(80, 3);
        let f = ForestModel::fit(&ds, &params(10, 3)).unwrap();
        for t in f.trees() {
            for leaf in t.leaf_contents() {
                assert!(leaf.iter().map(|e| e.1).sum::<u32>() >= 3);
            }
        }
    }

    #[test]
    fn max_depth_limits_nodes() {
        let ds = toy(80, 3);
        let f = ForestModel::fit(&ds, &ForestParams { max_depth: Some(2), ..params(5, 1) }).unwrap();
        assert!(f.trees().iter().all(|t| t.n_leaves() <= 4));
    }

    #[test]
    fn weights_sum_to_one() {
        let ds = toy(50, 4);
        let f = ForestModel::fit(&ds, &params(20, 2)).unwrap();
        for x in ds.rows().take(10) {
            let s: f64 = f.weights(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let ds = toy(10, 5);
        assert!(ForestModel::fit(&ds, &params(0, 1)).is_err());
        assert!(ForestModel::fit(&ds, &params(1, 0)).is_err());
        assert!(ForestModel::fit(&ds, &ForestParams { mtry: Some(3), ..params(1, 1) }).is_err());
    }

    #[test]
    fn dump_round_trip_is_lossless() {
        let ds = toy(40, 6);
        let f = ForestModel::fit(&ds, &ForestParams { max_depth: Some(5), ..params(3, 2) }).unwrap();
        let text = f.to_dump();
        let g = ForestModel::load(text.as_bytes()).unwrap();
        assert_eq!(f, g);
        assert_eq!(g.to_dump(), text);
    }

    #[test]
    fn malformed_dump_rejected() {
        assert!(ForestModel::load("nonsense".as_bytes()).is_err());
        let ds = toy(10, 7);
        let text = ForestModel::fit(&ds, &params(1, 1)).unwrap().to_dump();
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(ForestModel::load(truncated.as_bytes()).is_err());
        let wrong = text.replacen("uacqr-forest 1", "uacqr-forest 9", 1);
        assert!(ForestModel::load(wrong.as_bytes()).is_err());
    }

    #[test]
    fn threshold_routes_lower_value_left() {
        let ds = Dataset::new(vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]], vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        let f = ForestModel::fit(&ds, &ForestParams { bootstrap: false, ..params(1, 1) }).unwrap();
        match f.trees()[0].nodes[0] {
            Node::Split { feature: 0, threshold, .. } => assert_eq!(threshold, 0.5),
            ref other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(f.predict_mean(&[0.5]), 0.0);
        assert_eq!(f.predict_mean(&[0.51]), 5.0);
    }
}
