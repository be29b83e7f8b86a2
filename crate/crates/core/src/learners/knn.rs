use super::{Dataset, Matrix, Standardizer};

/// k-nearest-neighbour vote under a Minkowski distance on standardized
/// features. Distance ties go to the lower training row.
#[derive(Debug, Clone)]
pub(crate) struct Knn {
    scaler: Standardizer,
    points: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
    power: f64,
}

impl Knn {
    pub(crate) fn fit(data: &Dataset, k: usize, power: f64) -> Self {
        let scaler = Standardizer::fit(&data.features);
        let points = scaler.apply_matrix(&data.features);
        Self {
            scaler,
            points,
            labels: data.labels().expect("classification data").to_vec(),
            n_classes: data.n_classes(),
            k: k.clamp(1, data.len()),
            power,
        }
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let p = self.power;
        if p == 2.0 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
        } else if p == 1.0 {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        } else {
            a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum()
        }
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.apply(x);
        let mut dist: Vec<(f64, usize)> = (0..self.points.rows())
            .map(|i| (self.distance(&z, self.points.row(i)), i))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by);
        }
        let mut votes = vec![0.0; self.n_classes];
        for &(_, i) in &dist[..self.k] {
            votes[self.labels[i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= self.k as f64);
        votes
    }
}
