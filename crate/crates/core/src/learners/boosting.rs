use super::linear::softmax;
use super::{Dataset, Matrix};

/// Depth-one regression tree.
#[derive(Debug, Clone, PartialEq)]
struct Stump {
    feature: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

impl Stump {
    fn eval(&self, x: &[f64]) -> f64 {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// Row orders sorted by each feature, computed once and reused every round.
struct SortedColumns {
    orders: Vec<Vec<usize>>,
}

impl SortedColumns {
    fn new(x: &Matrix) -> Self {
        let orders = (0..x.cols())
            .map(|j| {
                let mut o: Vec<usize> = (0..x.rows()).collect();
                o.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then(a.cmp(&b)));
                o
            })
            .collect();
        Self { orders }
    }

    /// Least-squares stump on `residual`, leaves scaled by `shrink`.
    /// Ties keep the lower feature index, then the lower threshold.
    fn fit_stump(&self, x: &Matrix, residual: &[f64], shrink: f64) -> Stump {
        let n = residual.len();
        let total: f64 = residual.iter().sum();
        let mut best: Option<(f64, Stump)> = None;
        for (j, order) in self.orders.iter().enumerate() {
            let mut sum_left = 0.0;
            for pos in 0..n - 1 {
                let i = order[pos];
                sum_left += residual[i];
                let (here, next) = (x.get(i, j), x.get(order[pos + 1], j));
                if here == next {
                    continue;
                }
                let (nl, nr) = ((pos + 1) as f64, (n - pos - 1) as f64);
                let sum_right = total - sum_left;
                let score = sum_left * sum_left / nl + sum_right * sum_right / nr;
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((
                        score,
                        Stump {
                            feature: j,
                            threshold: here + (next - here) / 2.0,
                            left: shrink * sum_left / nl,
                            right: shrink * sum_right / nr,
                        },
                    ));
                }
            }
        }
        best.map(|(_, s)| s).unwrap_or_else(|| {
            let mean = shrink * total / n as f64;
            Stump {
                feature: 0,
                threshold: f64::INFINITY,
                left: mean,
                right: mean,
            }
        })
    }
}

/// Gradient-boosted stumps under log loss; one resource unit is one round
/// (one stump per class score, a single score for binary tasks).
#[derive(Debug, Clone)]
pub(crate) struct BoostedStumps {
    n_classes: usize,
    init: Vec<f64>,
    /// `rounds` rows of one stump per score.
    stumps: Vec<Vec<Stump>>,
}

impl BoostedStumps {
    pub(crate) fn fit(data: &Dataset, rounds: usize, learning_rate: f64) -> Self {
        let x = &data.features;
        let labels = data.labels().expect("classification data");
        let n = labels.len();
        let k = data.n_classes();
        let cols = SortedColumns::new(x);
        let mut counts = vec![0.0; k];
        for &l in labels {
            counts[l] += 1.0;
        }
        let outputs = if k == 2 { 1 } else { k };
        let init: Vec<f64> = if k == 2 {
            let p = (counts[1] / n as f64).clamp(1e-6, 1.0 - 1e-6);
            vec![(p / (1.0 - p)).ln()]
        } else {
            counts
                .iter()
                .map(|c| if *c > 0.0 { (c / n as f64).ln() } else { -30.0 })
                .collect()
        };
        let mut f: Vec<Vec<f64>> = vec![init.clone(); n];
        let mut stumps = Vec::with_capacity(rounds);
        let mut residual = vec![0.0; n];
        for _ in 0..rounds {
            let probs: Vec<Vec<f64>> = f.iter().map(|fi| score_proba(fi, k)).collect();
            let mut round = Vec::with_capacity(outputs);
            for out in 0..outputs {
                let class = if k == 2 { 1 } else { out };
                for i in 0..n {
                    residual[i] = f64::from(u8::from(labels[i] == class)) - probs[i][class];
                }
                round.push(cols.fit_stump(x, &residual, learning_rate));
            }
            for (i, fi) in f.iter_mut().enumerate() {
                for (v, s) in fi.iter_mut().zip(&round) {
                    *v += s.eval(x.row(i));
                }
            }
            stumps.push(round);
        }
        Self {
            n_classes: k,
            init,
            stumps,
        }
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.init.clone();
        for round in &self.stumps {
            for (v, s) in f.iter_mut().zip(round) {
                *v += s.eval(x);
            }
        }
        score_proba(&f, self.n_classes)
    }
}

fn score_proba(f: &[f64], k: usize) -> Vec<f64> {
    if k == 2 {
        let p = 1.0 / (1.0 + (-f[0]).exp());
        vec![1.0 - p, p]
    } else {
        softmax(f)
    }
}

/// Gradient-boosted stumps under squared loss; one resource unit is one round.
#[derive(Debug, Clone)]
pub(crate) struct BoostedRegressor {
    init: f64,
    stumps: Vec<Stump>,
}

impl BoostedRegressor {
    pub(crate) fn fit(data: &Dataset, rounds: usize, learning_rate: f64) -> Self {
        let x = &data.features;
        let y = data.values().expect("regression data");
        let n = y.len();
        let cols = SortedColumns::new(x);
        let init = y.iter().sum::<f64>() / n as f64;
        let mut f = vec![init; n];
        let mut residual = vec![0.0; n];
        let mut stumps = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            for i in 0..n {
                residual[i] = y[i] - f[i];
            }
            let s = cols.fit_stump(x, &residual, learning_rate);
            for (i, fi) in f.iter_mut().enumerate() {
                *fi += s.eval(x.row(i));
            }
            stumps.push(s);
        }
        Self { init, stumps }
    }

    pub(crate) fn predict_one(&self, x: &[f64]) -> f64 {
        self.init + self.stumps.iter().map(|s| s.eval(x)).sum::<f64>()
    }
}
