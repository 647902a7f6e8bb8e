use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::parallel;

#[derive(Debug, Clone)]
enum Node {
    Leaf { label: u8 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// unnormalized impurity-decrease importance, one entry per feature
    importance: Vec<f64>,
    depth: usize,
}

/// Bagged Gini decision trees with midpoint numeric splits.
#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_features: usize,
    importance: Vec<f64>,
    max_depth: usize,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    mtry: usize,
    max_depth: usize,
    n_total: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    depth_reached: usize,
}

impl<'a> TreeBuilder<'a> {
    fn leaf(&mut self, counts: [usize; 2]) -> usize {
        let label = if counts[1] > counts[0] { 1 } else { 0 };
        self.nodes.push(Node::Leaf { label });
        self.nodes.len() - 1
    }

    fn build(&mut self, indices: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        self.depth_reached = self.depth_reached.max(depth);
        let mut counts = [0usize; 2];
        for &i in indices {
            counts[self.y[i] as usize] += 1;
        }
        let node_gini = gini(counts);
        if node_gini == 0.0 || depth >= self.max_depth || indices.len() < 2 {
            return self.leaf(counts);
        }

        let p = self.x.n_cols();
        let feats = sample(rng, p, self.mtry.min(p));
        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(indices.len());
        for feat in feats.iter() {
            sorted.clear();
            sorted.extend(
                indices
                    .iter()
                    .map(|&i| (self.x.get(i, feat), self.y[i])),
            );
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let n = sorted.len() as f64;
            let mut left = [0usize; 2];
            let mut right = counts;
            for w in 0..sorted.len() - 1 {
                left[sorted[w].1 as usize] += 1;
                right[sorted[w].1 as usize] -= 1;
                if sorted[w].0 == sorted[w + 1].0 {
                    continue;
                }
                let nl = (w + 1) as f64;
                let nr = n - nl;
                let child = (nl * gini(left) + nr * gini(right)) / n;
                let gain = node_gini - child;
                if best.map_or(true, |(g, _, _)| gain > g) {
                    let threshold = (sorted[w].0 + sorted[w + 1].0) / 2.0;
                    best = Some((gain, feat, threshold));
                }
            }
        }

        let Some((gain, feature, threshold)) = best else {
            return self.leaf(counts);
        };
        if gain <= 0.0 {
            return self.leaf(counts);
        }
        self.importance[feature] += indices.len() as f64 / self.n_total as f64 * gain;

        let (li, ri): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x.get(i, feature) <= threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { label: 0 }); // placeholder
        let left = self.build(&li, depth + 1, rng);
        let right = self.build(&ri, depth + 1, rng);
        self.nodes[slot] = Node::Split { feature, threshold, left, right };
        slot
    }
}

fn fit_tree(x: &Matrix, y: &[u8], mtry: usize, max_depth: usize, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.n_rows();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut builder = TreeBuilder {
        x,
        y,
        mtry,
        max_depth,
        n_total: n,
        nodes: Vec::new(),
        importance: vec![0.0; x.n_cols()],
        depth_reached: 0,
    };
    let root = builder.build(&bootstrap, 0, &mut rng);
    debug_assert_eq!(root, 0);
    Tree {
        nodes: builder.nodes,
        importance: builder.importance,
        depth: builder.depth_reached,
    }
}

impl ForestModel {
    pub(super) fn fit(cfg: &super::LearnerConfig, x: &Matrix, y: &[u8]) -> Self {
        let p = x.n_cols();
        let mtry = cfg
            .rf_features_per_split
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
            .max(1);
        let trees: Vec<Tree> = parallel::map_indexed(cfg.rf_trees, |t| {
            fit_tree(
                x,
                y,
                mtry,
                cfg.rf_max_depth,
                crate::derive_seed(cfg.seed, &[0x7265_6573, t as u64]),
            )
        });
        let mut importance = vec![0.0; p];
        for tree in &trees {
            for (acc, v) in importance.iter_mut().zip(&tree.importance) {
                *acc += v;
            }
        }
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            for v in importance.iter_mut() {
                *v /= total;
            }
        }
        ForestModel {
            trees,
            n_features: p,
            importance,
            max_depth: cfg.rf_max_depth,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(|t| t.depth).max().unwrap_or(0)
    }

    pub fn depth_limit(&self) -> usize {
        self.max_depth
    }

    fn predict_one(&self, row: &[f64]) -> u8 {
        let mut votes = 0usize;
        for tree in &self.trees {
            let mut node = 0usize;
            loop {
                match &tree.nodes[node] {
                    Node::Leaf { label } => {
                        votes += *label as usize;
                        break;
                    }
                    Node::Split { feature, threshold, left, right } => {
                        node = if row[*feature] <= *threshold { *left } else { *right };
                    }
                }
            }
        }
        // even tree counts can tie; ties go to label 1
        if 2 * votes >= self.trees.len() {
            1
        } else {
            0
        }
    }

    pub fn predict(&self, queries: &Matrix) -> Vec<u8> {
        parallel::map_indexed(queries.n_rows(), |q| self.predict_one(queries.row(q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{rf_importance, train, LearnerConfig, TrainedModel};
    use rand::Rng;

    #[test]
    fn depth_respected_and_importance_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 80;
        let data: Vec<f64> = (0..n * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Matrix::new(data, n, 4);
        let y: Vec<u8> = (0..n).map(|i| (x.get(i, 1) > 0.0) as u8).collect();
        let mut cfg = LearnerConfig::rf();
        cfg.rf_trees = 20;
        cfg.rf_max_depth = 3;
        let m = match train(&cfg, &x, &y).unwrap() {
            TrainedModel::Rf(m) => m,
            _ => unreachable!(),
        };
        assert!(m.max_tree_depth() <= 3);
        let imp: f64 = m.importance().iter().sum();
        assert!((imp - 1.0).abs() < 1e-9);
        assert!(m.importance().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn constant_feature_gets_zero_importance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 60;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.push(5.0); // constant
            data.push(rng.gen_range(-1.0..1.0));
            data.push(rng.gen_range(-1.0..1.0));
        }
        let x = Matrix::new(data, n, 3);
        let y: Vec<u8> = (0..n).map(|i| (x.get(i, 1) > 0.0) as u8).collect();
        let mut cfg = LearnerConfig::rf();
        cfg.rf_trees = 30;
        let m = train(&cfg, &x, &y).unwrap();
        assert_eq!(rf_importance(&m).unwrap()[0], 0.0);
    }

    #[test]
    fn separating_feature_dominates_importance() {
        // one perfectly separating feature among noise, over 10 seeds
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = 60;
            let p = 6;
            let mut data = Vec::with_capacity(n * p);
            let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            for i in 0..n {
                for j in 0..p {
                    if j == 2 {
                        data.push(y[i] as f64 * 2.0 + rng.gen_range(-0.4..0.4));
                    } else {
                        data.push(rng.gen_range(-1.0..1.0));
                    }
                }
            }
            let x = Matrix::new(data, n, p);
            let mut cfg = LearnerConfig::rf();
            cfg.rf_trees = 30;
            cfg.seed = seed;
            let m = train(&cfg, &x, &y).unwrap();
            let imp = rf_importance(&m).unwrap();
            let argmax = imp
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, 2, "seed {seed}: importances {imp:?}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let data: Vec<f64> = (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Matrix::new(data, n, 3);
        let y: Vec<u8> = (0..n).map(|i| (x.get(i, 0) + x.get(i, 2) > 0.0) as u8).collect();
        let cfg = LearnerConfig::rf();
        let a = match train(&cfg, &x, &y).unwrap() {
            TrainedModel::Rf(m) => m,
            _ => unreachable!(),
        };
        let b = match train(&cfg, &x, &y).unwrap() {
            TrainedModel::Rf(m) => m,
            _ => unreachable!(),
        };
        assert_eq!(a.importance(), b.importance());
        assert_eq!(a.predict(&x), b.predict(&x));
    }
}
