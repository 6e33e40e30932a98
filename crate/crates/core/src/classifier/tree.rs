use serde::{Deserialize, Serialize};

use super::{argmax, Classifier, TrainingSet, FEATURE_COUNT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_leaf: usize,
    pub max_depth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: 5,
            max_depth: 20,
        }
    }
}

/// Arena node. Leaves have no split feature; `x[feature] <= threshold` goes left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub class_counts: Vec<u32>,
}

impl TreeNode {
    fn leaf(class_counts: Vec<u32>) -> Self {
        TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            class_counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature.is_none()
    }

    fn total(&self) -> u64 {
        self.class_counts.iter().map(|&c| c as u64).sum()
    }

    /// Training samples misclassified if this node predicted its majority.
    fn errors(&self) -> u64 {
        self.total() - self.class_counts.iter().copied().max().unwrap_or(0) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_classes: usize,
    pub params: TreeParams,
    /// Number of weakest-link pruning steps applied.
    pub pruning_level: usize,
    /// Root at index 0.
    pub nodes: Vec<TreeNode>,
}

fn gini_mass(counts: &[u32], n: usize) -> f64 {
    // n * gini = n - sum(c^2) / n
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    n as f64 - sq / n as f64
}

struct Builder<'a> {
    data: &'a TrainingSet,
    params: TreeParams,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.data.n_classes];
        for &i in idx {
            c[self.data.labels[i]] += 1;
        }
        c
    }

    /// Best split as (feature, threshold, left indices, right indices).
    fn best_split(
        &self,
        idx: &[usize],
        parent: &[u32],
    ) -> Option<(usize, f64, Vec<usize>, Vec<usize>)> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let mut best: Option<(f64, usize, usize, Vec<usize>)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..FEATURE_COUNT {
            let x = |i: usize| self.data.features[i][f];
            sorted.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
            let mut left = vec![0u32; self.data.n_classes];
            let mut right = parent.to_vec();
            for pos in 0..n - 1 {
                let l = self.data.labels[sorted[pos]];
                left[l] += 1;
                right[l] -= 1;
                if x(sorted[pos]) == x(sorted[pos + 1]) {
                    continue;
                }
                let nl = pos + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let score = gini_mass(&left, nl) + gini_mass(&right, n - nl);
                if best.as_ref().is_none_or(|b| score < b.0 - 1e-12) {
                    best = Some((score, f, pos, sorted.clone()));
                }
            }
        }
        let (score, f, pos, order) = best?;
        if score >= gini_mass(parent, n) - 1e-12 {
            return None;
        }
        // threshold at the last left value keeps splits invariant under
        // increasing transforms of a feature
        let threshold = self.data.features[order[pos]][f];
        let mut left: Vec<usize> = order[..=pos].to_vec();
        let mut right: Vec<usize> = order[pos + 1..].to_vec();
        left.sort_unstable();
        right.sort_unstable();
        Some((f, threshold, left, right))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::leaf(counts.clone()));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth {
            return id;
        }
        if let Some((f, threshold, left, right)) = self.best_split(&idx, &counts) {
            drop(idx);
            let l = self.grow(left, depth + 1);
            let r = self.grow(right, depth + 1);
            let node = &mut self.nodes[id];
            node.feature = Some(f);
            node.threshold = threshold;
            node.left = l;
            node.right = r;
        }
        id
    }
}

impl TreeModel {
    /// CART growth on Gini impurity. Split candidates are scanned in feature
    /// order, then ascending threshold; the first strictly best one wins.
    pub fn train(data: &TrainingSet, params: TreeParams) -> Result<TreeModel> {
        if data.is_empty() {
            return Err(Error::InsufficientData("empty training set".into()));
        }
        let mut b = Builder {
            data,
            params,
            nodes: Vec::new(),
        };
        b.grow((0..data.len()).collect(), 0);
        Ok(TreeModel {
            n_classes: data.n_classes,
            params,
            pruning_level: 0,
            nodes: b.nodes,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &TreeModel, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + walk(t, n.left).max(walk(t, n.right))
            }
        }
        walk(self, 0)
    }

    fn leaf_for(&self, x: &[f64; FEATURE_COUNT]) -> &TreeNode {
        let mut n = &self.nodes[0];
        while let Some(f) = n.feature {
            n = &self.nodes[if x[f] <= n.threshold { n.left } else { n.right }];
        }
        n
    }

    /// Subtree leaf errors and leaf count for every node.
    fn subtree_stats(&self) -> Vec<(u64, u64)> {
        let mut stats = vec![(0, 0); self.nodes.len()];
        fn fill(t: &TreeModel, i: usize, s: &mut [(u64, u64)]) -> (u64, u64) {
            let n = &t.nodes[i];
            let v = if n.is_leaf() {
                (n.errors(), 1)
            } else {
                let (el, ll) = fill(t, n.left, s);
                let (er, lr) = fill(t, n.right, s);
                (el + er, ll + lr)
            };
            s[i] = v;
            v
        }
        fill(self, 0, &mut stats);
        stats
    }

    /// One weakest-link step: every internal node whose
    /// `g = (R(t) - R(T_t)) / (|leaves(T_t)| - 1)` equals the minimum becomes a leaf.
    fn prune_step(&self) -> Option<TreeModel> {
        if self.nodes[0].is_leaf() {
            return None;
        }
        let stats = self.subtree_stats();
        let g = |i: usize| (self.nodes[i].errors() - stats[i].0, stats[i].1 - 1);
        let internal: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| !self.nodes[i].is_leaf())
            .collect();
        let (bn, bd) = internal
            .iter()
            .map(|&i| g(i))
            .min_by(|a, b| (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128)))
            .expect("root is internal");
        let collapse: Vec<bool> = (0..self.nodes.len())
            .map(|i| {
                !self.nodes[i].is_leaf() && {
                    let (n, d) = g(i);
                    n as u128 * bd as u128 == bn as u128 * d as u128
                }
            })
            .collect();

        let mut nodes = Vec::with_capacity(self.nodes.len());
        fn copy(t: &TreeModel, i: usize, collapse: &[bool], out: &mut Vec<TreeNode>) -> usize {
            let src = &t.nodes[i];
            let id = out.len();
            out.push(TreeNode::leaf(src.class_counts.clone()));
            if !src.is_leaf() && !collapse[i] {
                let l = copy(t, src.left, collapse, out);
                let r = copy(t, src.right, collapse, out);
                out[id].feature = src.feature;
                out[id].threshold = src.threshold;
                out[id].left = l;
                out[id].right = r;
            }
            id
        }
        copy(self, 0, &collapse, &mut nodes);
        Some(TreeModel {
            n_classes: self.n_classes,
            params: self.params,
            pruning_level: self.pruning_level + 1,
            nodes,
        })
    }

    /// Applies `level` steps of the cost-complexity sequence. Levels past the
    /// end of the sequence give the root alone.
    pub fn prune(&self, level: usize) -> TreeModel {
        let mut t = self.clone();
        for _ in 0..level {
            match t.prune_step() {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Number of steps until the tree is a single leaf.
    pub fn pruning_sequence_len(&self) -> usize {
        let mut t = self.clone();
        let mut k = 0;
        while let Some(next) = t.prune_step() {
            t = next;
            k += 1;
        }
        k
    }
}

impl Classifier for TreeModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        let leaf = self.leaf_for(x);
        let total = leaf.total().max(1) as f64;
        leaf.class_counts
            .iter()
            .map(|&c| c as f64 / total)
            .collect()
    }

    fn predict(&self, x: &[f64; FEATURE_COUNT]) -> (usize, f64) {
        argmax(&self.predict_proba(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(corr: f64, other: f64) -> [f64; FEATURE_COUNT] {
        let mut r = [0.0; FEATURE_COUNT];
        r[10] = corr;
        r[11] = other;
        r[15] = 1.0;
        r
    }

    fn noisy_set(seed: u64, n: usize) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Vec::new();
        let mut l = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            let label = usize::from(a + 0.3 * b + rng.random_range(-0.2..0.2) > 0.6);
            f.push(row(a, b));
            l.push(label);
        }
        TrainingSet::new(f, l, 2).unwrap()
    }

    #[test]
    fn separable_by_correlation_is_one_split() {
        let mut f = Vec::new();
        let mut l = Vec::new();
        for i in 0..20 {
            f.push(row(0.1 + 0.01 * i as f64, (i % 7) as f64));
            l.push(0);
            f.push(row(0.7 + 0.01 * i as f64, (i % 5) as f64));
            l.push(1);
        }
        let data = TrainingSet::new(f, l, 2).unwrap();
        let t = TreeModel::train(&data, TreeParams::default()).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.nodes[0].feature, Some(10));
        assert!((0.29..0.7).contains(&t.nodes[0].threshold));
        for (x, &y) in data.features.iter().zip(&data.labels) {
            assert_eq!(t.predict(x).0, y);
        }
    }

    #[test]
    fn single_class_and_contradictions() {
        let data = TrainingSet::new(vec![row(0.5, 1.0); 12], vec![1; 12], 2).unwrap();
        let t = TreeModel::train(&data, TreeParams::default()).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.predict(&row(0.0, 0.0)), (1, 1.0));

        let labels = (0..20).map(|i| i % 2).collect();
        let data = TrainingSet::new(vec![row(0.5, 1.0); 20], labels, 2).unwrap();
        let t = TreeModel::train(&data, TreeParams::default()).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.predict_proba(&row(0.5, 1.0)), vec![0.5, 0.5]);
        assert_eq!(t.predict(&row(0.5, 1.0)).0, 0);
    }

    #[test]
    fn hand_built_stump() {
        let mut t = TreeModel {
            n_classes: 2,
            params: TreeParams::default(),
            pruning_level: 0,
            nodes: vec![
                TreeNode::leaf(vec![5, 5]),
                TreeNode::leaf(vec![5, 0]),
                TreeNode::leaf(vec![0, 5]),
            ],
        };
        t.nodes[0].feature = Some(10);
        t.nodes[0].threshold = 0.5;
        t.nodes[0].left = 1;
        t.nodes[0].right = 2;
        assert_eq!(t.predict(&row(0.9, 0.0)), (1, 1.0));
        assert_eq!(t.predict(&row(0.5, 0.0)), (0, 1.0));
    }

    #[test]
    fn respects_min_leaf_and_depth() {
        let data = noisy_set(3, 400);
        let t = TreeModel::train(&data, TreeParams::default()).unwrap();
        assert!(t.nodes.iter().all(|n| n.total() >= 5));
        assert!(t.depth() <= 20);
        let shallow = TreeModel::train(
            &data,
            TreeParams {
                min_leaf: 5,
                max_depth: 2,
            },
        )
        .unwrap();
        assert!(shallow.depth() <= 2);
    }

    /// Pruned nodes keep their original split or turn into leaves.
    fn is_subtree(p: &TreeModel, pi: usize, o: &TreeModel, oi: usize) -> bool {
        let (a, b) = (&p.nodes[pi], &o.nodes[oi]);
        if a.class_counts != b.class_counts {
            return false;
        }
        match a.feature {
            None => true,
            Some(f) => {
                b.feature == Some(f)
                    && a.threshold == b.threshold
                    && is_subtree(p, a.left, o, b.left)
                    && is_subtree(p, a.right, o, b.right)
            }
        }
    }

    #[test]
    fn pruning_sequence() {
        let data = noisy_set(5, 500);
        let t = TreeModel::train(&data, TreeParams::default()).unwrap();
        assert!(t.node_count() > 3);
        assert_eq!(t.prune(0), t);
        let len = t.pruning_sequence_len();
        let mut last = t.node_count();
        for level in 1..=len {
            let p = t.prune(level);
            assert!(p.node_count() < last, "level {level}");
            assert!(is_subtree(&p, 0, &t, 0));
            last = p.node_count();
        }
        let root = t.prune(len + 10);
        assert_eq!(root.node_count(), 1);
        let counts = data.class_counts();
        let majority = usize::from(counts[1] > counts[0]);
        assert_eq!(root.predict(&row(0.3, 0.3)).0, majority);
    }

    #[test]
    fn deterministic() {
        let data = noisy_set(9, 300);
        let a = TreeModel::train(&data, TreeParams::default()).unwrap();
        let b = TreeModel::train(&data, TreeParams::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn increasing_transform_leaves_predictions_unchanged(seed in 0u64..1000) {
            let data = noisy_set(seed, 120);
            let warp = |v: f64| v * v * v + 2.0 * v;
            let mut warped = data.clone();
            for r in &mut warped.features {
                r[10] = warp(r[10]);
            }
            let a = TreeModel::train(&data, TreeParams::default()).unwrap();
            let b = TreeModel::train(&warped, TreeParams::default()).unwrap();
            let probe = noisy_set(seed + 1, 60);
            for x in &probe.features {
                let mut wx = *x;
                wx[10] = warp(x[10]);
                prop_assert_eq!(a.predict(x), b.predict(&wx));
            }
        }
    }
}
