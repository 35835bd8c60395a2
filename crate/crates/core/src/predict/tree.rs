//! CART classification trees with weighted Gini splits.
//!
//! Training keeps, for every feature, the node's samples sorted by that
//! feature. A split stably partitions each of those orders, so no node ever
//! re-sorts.

use rand::seq::SliceRandom;
use rand::Rng;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    /// Weighted share of positives among the node's training samples.
    prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// One split found at an internal node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitInfo {
    pub feature: usize,
    pub threshold: f64,
}

pub(crate) struct TreeParams {
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl DecisionTree {
    /// Grows a tree on samples given column-wise: `columns[f][s]` is feature
    /// `f` of sample `s`, `weights[s]` its multiplicity.
    pub(crate) fn grow<R: Rng>(
        columns: &[Vec<f64>],
        labels: &[bool],
        weights: &[f64],
        params: &TreeParams,
        rng: &mut R,
    ) -> DecisionTree {
        let d = columns.len();
        let n = labels.len();
        let mut orders: Vec<Vec<u32>> = columns
            .iter()
            .map(|col| {
                let mut o: Vec<u32> = (0..n as u32).collect();
                o.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                o
            })
            .collect();
        let mut goes_left = vec![false; n];
        let mut scratch: Vec<u32> = Vec::with_capacity(n);
        let mut feature_order: Vec<usize> = (0..d).collect();

        let mut nodes = vec![Node { feature: LEAF, threshold: 0.0, left: LEAF, right: LEAF, prob: 0.0 }];
        // (node id, segment start, segment end, depth)
        let mut stack = vec![(0usize, 0usize, n, 0usize)];
        while let Some((id, start, end, depth)) = stack.pop() {
            let seg = &orders[0][start..end];
            let (w, p) = seg.iter().fold((0.0, 0.0), |(w, p), &s| {
                let ws = weights[s as usize];
                (w + ws, if labels[s as usize] { p + ws } else { p })
            });
            nodes[id].prob = if w > 0.0 { p / w } else { 0.0 };

            let pure = p == 0.0 || p == w;
            let too_small = end - start < params.min_samples_split.max(2);
            let too_deep = params.max_depth.is_some_and(|m| depth >= m);
            if pure || too_small || too_deep {
                continue;
            }

            feature_order.shuffle(rng);
            let mut best: Option<(f64, usize, f64, usize)> = None; // (score, feature, threshold, left count)
            let mut tried = 0;
            for &f in &feature_order {
                if tried >= params.max_features {
                    break;
                }
                let ord = &orders[f][start..end];
                let col = &columns[f];
                if col[ord[0] as usize] == col[ord[ord.len() - 1] as usize] {
                    continue;
                }
                tried += 1;
                let (mut wl, mut pl) = (0.0, 0.0);
                for k in 0..ord.len() - 1 {
                    let s = ord[k] as usize;
                    let ws = weights[s];
                    wl += ws;
                    if labels[s] {
                        pl += ws;
                    }
                    let (a, b) = (col[s], col[ord[k + 1] as usize]);
                    if a == b {
                        continue;
                    }
                    let (wr, pr) = (w - wl, p - pl);
                    // proportional to the weighted sum of child Gini impurities
                    let score = pl * (wl - pl) / wl + pr * (wr - pr) / wr;
                    if best.is_none_or(|(bs, ..)| score < bs) {
                        let mut t = 0.5 * (a + b);
                        if t >= b {
                            t = a;
                        }
                        best = Some((score, f, t, k + 1));
                    }
                }
            }
            let Some((_, feature, threshold, n_left)) = best else {
                continue;
            };

            for &s in &orders[feature][start..end] {
                goes_left[s as usize] = columns[feature][s as usize] <= threshold;
            }
            for order in orders.iter_mut() {
                let seg = &mut order[start..end];
                scratch.clear();
                scratch.extend(seg.iter().copied().filter(|&s| !goes_left[s as usize]));
                let mut li = 0;
                for k in 0..seg.len() {
                    let s = seg[k];
                    if goes_left[s as usize] {
                        seg[li] = s;
                        li += 1;
                    }
                }
                seg[li..].copy_from_slice(&scratch);
            }

            let left = nodes.len();
            let blank = Node { feature: LEAF, threshold: 0.0, left: LEAF, right: LEAF, prob: 0.0 };
            nodes.push(blank.clone());
            nodes.push(blank);
            let node = &mut nodes[id];
            node.feature = feature as u32;
            node.threshold = threshold;
            node.left = left as u32;
            node.right = (left + 1) as u32;
            stack.push((left + 1, start + n_left, end, depth + 1));
            stack.push((left, start, start + n_left, depth + 1));
        }
        DecisionTree { nodes }
    }

    /// Share of positive training samples in the leaf reached by `row`.
    pub fn leaf_probability(&self, row: &[f64]) -> f64 {
        let mut node = &self.nodes[0];
        while node.feature != LEAF {
            let next = if row[node.feature as usize] <= node.threshold { node.left } else { node.right };
            node = &self.nodes[next as usize];
        }
        node.prob
    }

    /// Majority vote of the reached leaf; an even split votes positive.
    pub fn vote(&self, row: &[f64]) -> bool {
        self.leaf_probability(row) >= 0.5
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    /// Internal splits in node order (root first).
    pub fn splits(&self) -> Vec<SplitInfo> {
        self.nodes
            .iter()
            .filter(|n| n.feature != LEAF)
            .map(|n| SplitInfo { feature: n.feature as usize, threshold: n.threshold })
            .collect()
    }

    /// Whether any split uses `feature`.
    pub fn uses_feature(&self, feature: usize) -> bool {
        self.nodes.iter().any(|n| n.feature as usize == feature && n.feature != LEAF)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn params(max_features: usize) -> TreeParams {
        TreeParams { max_features, max_depth: None, min_samples_split: 2 }
    }

    #[test]
    fn separable_single_feature() {
        let x = vec![vec![0.1, 0.2, 0.3, 0.7, 0.8, 0.9]];
        let y = [false, false, false, true, true, true];
        let t = DecisionTree::grow(&x, &y, &[1.0; 6], &params(1), &mut rng::rng_from(0));
        let splits = t.splits();
        assert_eq!(splits.len(), 1);
        assert!((splits[0].threshold - 0.5).abs() < 1e-12);
        for (i, &v) in x[0].iter().enumerate() {
            assert_eq!(t.vote(&[v]), y[i]);
        }
    }

    #[test]
    fn grows_to_purity() {
        // XOR needs two levels
        let x = vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]];
        let y = [false, true, true, false];
        let t = DecisionTree::grow(&x, &y, &[1.0; 4], &params(2), &mut rng::rng_from(0));
        for i in 0..4 {
            assert_eq!(t.vote(&[x[0][i], x[1][i]]), y[i]);
        }
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn weights_shift_leaf_probability() {
        let x = vec![vec![1.0, 1.0, 1.0]];
        let y = [true, false, false];
        let t = DecisionTree::grow(&x, &y, &[2.0, 1.0, 1.0], &params(1), &mut rng::rng_from(0));
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.leaf_probability(&[1.0]), 0.5);
        assert!(t.vote(&[1.0]));
    }

    #[test]
    fn depth_limit() {
        let x = vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]];
        let y = [false, true, true, false];
        let p = TreeParams { max_features: 2, max_depth: Some(1), min_samples_split: 2 };
        let t = DecisionTree::grow(&x, &y, &[1.0; 4], &p, &mut rng::rng_from(0));
        assert!(t.depth() <= 1);
    }
}
