use super::linear::softmax;
use super::Dataset;

/// Gaussian naive Bayes. Classes absent from the training rows get zero
/// probability.
#[derive(Debug, Clone)]
pub(crate) struct GaussianNb {
    log_prior: Vec<Option<f64>>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub(crate) fn fit(data: &Dataset, var_smoothing: f64) -> Self {
        let x = &data.features;
        let d = x.cols();
        let groups = data.indices_by_class();
        let n = data.len() as f64;
        let mut mean = vec![vec![0.0; d]; groups.len()];
        let mut var = vec![vec![0.0; d]; groups.len()];
        let mut log_prior = vec![None; groups.len()];
        for (c, rows) in groups.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let m = rows.len() as f64;
            log_prior[c] = Some((m / n).ln());
            for &i in rows {
                for (mu, v) in mean[c].iter_mut().zip(x.row(i)) {
                    *mu += v / m;
                }
            }
            for &i in rows {
                for ((s, v), mu) in var[c].iter_mut().zip(x.row(i)).zip(&mean[c]) {
                    *s += (v - mu) * (v - mu) / m;
                }
            }
        }
        // Smoothing is relative to the largest overall feature variance.
        let mut largest: f64 = 0.0;
        for j in 0..d {
            let mu = (0..x.rows()).map(|i| x.get(i, j)).sum::<f64>() / n;
            let v = (0..x.rows()).map(|i| (x.get(i, j) - mu).powi(2)).sum::<f64>() / n;
            largest = largest.max(v);
        }
        let eps = var_smoothing * largest + 1e-12;
        var.iter_mut().flatten().for_each(|v| *v += eps);
        Self {
            log_prior,
            mean,
            var,
        }
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        let present: Vec<(usize, f64)> = self
            .log_prior
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|lp| (c, lp)))
            .map(|(c, lp)| {
                let ll: f64 = x
                    .iter()
                    .zip(&self.mean[c])
                    .zip(&self.var[c])
                    .map(|((v, mu), s)| {
                        -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - mu).powi(2) / s)
                    })
                    .sum();
                (c, lp + ll)
            })
            .collect();
        let logits: Vec<f64> = present.iter().map(|(_, l)| *l).collect();
        let p = softmax(&logits);
        let mut out = vec![0.0; self.log_prior.len()];
        for ((c, _), pc) in present.iter().zip(p) {
            out[*c] = pc;
        }
        out
    }
}
