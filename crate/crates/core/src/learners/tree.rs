use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Matrix};
use crate::util::mix_seed;

#[derive(Debug, Clone)]
enum Node<L> {
    Leaf(L),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree<L> {
    nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    fn leaf(&self, x: &[f64]) -> &L {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Split statistics accumulated while sweeping a sorted feature.
trait Criterion {
    type Leaf;
    fn new_stats(&self) -> Self::Stats;
    type Stats: Clone;
    fn add(&self, stats: &mut Self::Stats, i: usize);
    fn sub(&self, stats: &mut Self::Stats, i: usize);
    /// Larger is purer; the sum over children never falls below the parent.
    fn purity(&self, stats: &Self::Stats, n: usize) -> f64;
    fn make_leaf(&self, stats: &Self::Stats, n: usize) -> Self::Leaf;
}

struct Gini<'a> {
    labels: &'a [usize],
    n_classes: usize,
}

impl Criterion for Gini<'_> {
    type Leaf = Vec<f64>;
    type Stats = Vec<f64>;

    fn new_stats(&self) -> Vec<f64> {
        vec![0.0; self.n_classes]
    }

    fn add(&self, s: &mut Vec<f64>, i: usize) {
        s[self.labels[i]] += 1.0;
    }

    fn sub(&self, s: &mut Vec<f64>, i: usize) {
        s[self.labels[i]] -= 1.0;
    }

    fn purity(&self, s: &Vec<f64>, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        s.iter().map(|c| c * c).sum::<f64>() / n as f64
    }

    fn make_leaf(&self, s: &Vec<f64>, n: usize) -> Vec<f64> {
        s.iter().map(|c| c / n as f64).collect()
    }
}

struct Variance<'a> {
    values: &'a [f64],
}

impl Criterion for Variance<'_> {
    type Leaf = f64;
    type Stats = f64;

    fn new_stats(&self) -> f64 {
        0.0
    }

    fn add(&self, s: &mut f64, i: usize) {
        *s += self.values[i];
    }

    fn sub(&self, s: &mut f64, i: usize) {
        *s -= self.values[i];
    }

    fn purity(&self, s: &f64, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        s * s / n as f64
    }

    fn make_leaf(&self, s: &f64, n: usize) -> f64 {
        s / n as f64
    }
}

struct Grower<'a, C: Criterion> {
    x: &'a Matrix,
    criterion: C,
    max_depth: usize,
    min_leaf: usize,
    /// Features tried per split; `None` means all of them.
    features_per_split: Option<usize>,
}

impl<C: Criterion> Grower<'_, C> {
    fn grow(&self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree<C::Leaf> {
        let mut nodes = Vec::new();
        self.grow_node(rows, 0, &mut nodes, rng);
        Tree { nodes }
    }

    fn grow_node(
        &self,
        rows: Vec<usize>,
        depth: usize,
        nodes: &mut Vec<Node<C::Leaf>>,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = nodes.len();
        let mut stats = self.criterion.new_stats();
        for &i in &rows {
            self.criterion.add(&mut stats, i);
        }
        let n = rows.len();
        let split = if depth < self.max_depth && n >= 2 * self.min_leaf.max(1) {
            self.best_split(&rows, &stats, rng)
        } else {
            None
        };
        match split {
            None => {
                nodes.push(Node::Leaf(self.criterion.make_leaf(&stats, n)));
                id
            }
            Some((feature, threshold)) => {
                nodes.push(Node::Split {
                    feature,
                    threshold,
                    left: 0,
                    right: 0,
                });
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&i| self.x.get(i, feature) <= threshold);
                let left = self.grow_node(l, depth + 1, nodes, rng);
                let right = self.grow_node(r, depth + 1, nodes, rng);
                if let Node::Split {
                    left: lslot,
                    right: rslot,
                    ..
                } = &mut nodes[id]
                {
                    *lslot = left;
                    *rslot = right;
                }
                id
            }
        }
    }

    /// Best (feature, threshold) by purity gain. Ties keep the lower feature
    /// index, then the lower threshold.
    fn best_split(
        &self,
        rows: &[usize],
        total: &C::Stats,
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let d = self.x.cols();
        let features: Vec<usize> = match self.features_per_split {
            Some(m) if m < d => {
                let mut f = index::sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let n = rows.len();
        let parent = self.criterion.purity(total, n);
        let mut best: Option<(usize, f64, f64)> = None;
        let min_leaf = self.min_leaf.max(1);
        let mut sorted = rows.to_vec();
        for &j in &features {
            sorted.sort_by(|&a, &b| {
                self.x
                    .get(a, j)
                    .total_cmp(&self.x.get(b, j))
                    .then(a.cmp(&b))
            });
            let mut left = self.criterion.new_stats();
            let mut right = total.clone();
            for pos in 0..n - 1 {
                let i = sorted[pos];
                self.criterion.add(&mut left, i);
                self.criterion.sub(&mut right, i);
                let (nl, nr) = (pos + 1, n - pos - 1);
                let (here, next) = (self.x.get(i, j), self.x.get(sorted[pos + 1], j));
                if here == next || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let score = self.criterion.purity(&left, nl) + self.criterion.purity(&right, nr);
                if score > parent + 1e-12 && best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((j, here + (next - here) / 2.0, score));
                }
            }
        }
        best.map(|(j, t, _)| (j, t))
    }
}

/// Bagged Gini trees; one resource unit is one tree.
#[derive(Debug, Clone)]
pub(crate) struct RandomForest {
    trees: Vec<Tree<Vec<f64>>>,
    n_classes: usize,
}

impl RandomForest {
    pub(crate) fn fit(
        data: &Dataset,
        n_trees: usize,
        max_depth: usize,
        feature_fraction: f64,
        seed: u64,
    ) -> Self {
        let labels = data.labels().expect("classification data");
        let n_classes = data.n_classes();
        let d = data.n_features();
        let per_split = ((feature_fraction * d as f64).round() as usize).clamp(1, d);
        let grower = Grower {
            x: &data.features,
            criterion: Gini { labels, n_classes },
            max_depth,
            min_leaf: 1,
            features_per_split: Some(per_split),
        };
        let n = data.len();
        // Each tree draws from its own stream, so a forest of r trees is a
        // prefix of a forest of r + 1 trees.
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, t as u64));
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                grower.grow(rows, &mut rng)
            })
            .collect();
        Self { trees, n_classes }
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.leaf(x)) {
                *o += p;
            }
        }
        let m = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= m);
        out
    }
}

/// A single variance-reduction tree.
#[derive(Debug, Clone)]
pub(crate) struct RegressionTree {
    tree: Tree<f64>,
}

impl RegressionTree {
    pub(crate) fn fit(data: &Dataset, max_depth: usize, min_samples_leaf: usize) -> Self {
        let values = data.values().expect("regression data");
        let grower = Grower {
            x: &data.features,
            criterion: Variance { values },
            max_depth,
            min_leaf: min_samples_leaf,
            features_per_split: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Self {
            tree: grower.grow((0..data.len()).collect(), &mut rng),
        }
    }

    pub(crate) fn predict_one(&self, x: &[f64]) -> f64 {
        *self.tree.leaf(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_tree_fits_step() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 5.0 }).collect();
        let data = Dataset::regression(&rows, y).unwrap();
        let t = RegressionTree::fit(&data, 3, 1);
        assert_eq!(t.predict_one(&[3.0]), 1.0);
        assert_eq!(t.predict_one(&[15.0]), 5.0);
        // One split suffices; the threshold is the midpoint.
        match &t.tree.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 9.5),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn split_ties_prefer_lower_feature() {
        // Features 0 and 1 are identical, so both offer the same split.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let labels = (0..10).map(|i| usize::from(i >= 5)).collect();
        let data = Dataset::classification(&rows, labels).unwrap();
        let grower = Grower {
            x: &data.features,
            criterion: Gini {
                labels: data.labels().unwrap(),
                n_classes: 2,
            },
            max_depth: 1,
            min_leaf: 1,
            features_per_split: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = grower.grow((0..10).collect(), &mut rng);
        match &tree.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => assert_eq!((*feature, *threshold), (0, 4.5)),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn forest_prefix_property() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 30) as f64, i as f64]).collect();
        let labels = (0..30).map(|i| usize::from(i % 3 == 0)).collect();
        let data = Dataset::classification(&rows, labels).unwrap();
        let small = RandomForest::fit(&data, 3, 4, 0.5, 9);
        let big = RandomForest::fit(&data, 4, 4, 0.5, 9);
        let x = [4.0, 11.0];
        assert_eq!(small.trees[2].leaf(&x), big.trees[2].leaf(&x));
    }
}
