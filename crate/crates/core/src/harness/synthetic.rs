//! Seeded synthetic datasets with known structure.
//!
//! | generator        | task       | structure                                              |
//! |------------------|------------|--------------------------------------------------------|
//! | `two-gaussians`  | binary     | unit-variance blobs at `±(2, 2)`; linearly separable   |
//! | `ring-vs-blob`   | binary     | blob of radius ~0.5 inside a ring of radius 3          |
//! | `three-gaussians`| multiclass | unit-variance blobs at radius 3, 120° apart            |
//! | `noisy-linear`   | regression | `y = w·x + N(0, 0.5²)` over 5 standard-normal features |
//! | `friedman-style` | regression | Friedman #1 on `U[0,1]^5` plus unit noise              |
//!
//! `noise_features` appends standard-normal columns carrying no signal and
//! `label_noise` reassigns that fraction of class labels uniformly to a
//! different class.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{DataError, Dataset, Task};

pub const GENERATORS: [&str; 5] = [
    "two-gaussians",
    "ring-vs-blob",
    "three-gaussians",
    "noisy-linear",
    "friedman-style",
];

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("unknown generator {0:?}; expected one of {GENERATORS:?}")]
    Unknown(String),
    #[error("generator needs at least {min} rows, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("label_noise must lie in [0, 1), got {0}")]
    LabelNoise(f64),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_features: usize,
    #[serde(default)]
    pub label_noise: f64,
}

impl GeneratorSpec {
    pub fn new(name: &str, n: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            n,
            seed,
            noise_features: 0,
            label_noise: 0.0,
        }
    }

    pub fn task(&self) -> Result<Task, GeneratorError> {
        match self.name.as_str() {
            "two-gaussians" | "ring-vs-blob" => Ok(Task::Binary),
            "three-gaussians" => Ok(Task::Multiclass),
            "noisy-linear" | "friedman-style" => Ok(Task::Regression),
            other => Err(GeneratorError::Unknown(other.to_string())),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<Dataset, GeneratorError> {
    let task = spec.task()?;
    if !(0.0..1.0).contains(&spec.label_noise) {
        return Err(GeneratorError::LabelNoise(spec.label_noise));
    }
    let classes = match task {
        Task::Binary => 2,
        Task::Multiclass => 3,
        Task::Regression => 0,
    };
    let min = classes.max(2) * 3;
    if spec.n < min {
        return Err(GeneratorError::TooSmall { n: spec.n, min });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let weights = [1.0, -2.0, 0.5, 0.0, 3.0];
    let eps = Normal::new(0.0, 0.5).expect("valid normal");
    for i in 0..spec.n {
        let row = match spec.name.as_str() {
            "two-gaussians" => {
                let c = i % 2;
                let m = if c == 0 { -2.0 } else { 2.0 };
                labels.push(c);
                vec![m + normal(&mut rng), m + normal(&mut rng)]
            }
            "ring-vs-blob" => {
                let c = i % 2;
                labels.push(c);
                if c == 0 {
                    vec![0.5 * normal(&mut rng), 0.5 * normal(&mut rng)]
                } else {
                    let theta = rng.random_range(0.0..2.0 * PI);
                    let radius = 3.0 + 0.3 * normal(&mut rng);
                    vec![radius * theta.cos(), radius * theta.sin()]
                }
            }
            "three-gaussians" => {
                let c = i % 3;
                labels.push(c);
                let angle = 2.0 * PI * c as f64 / 3.0;
                vec![
                    3.0 * angle.cos() + normal(&mut rng),
                    3.0 * angle.sin() + normal(&mut rng),
                ]
            }
            "noisy-linear" => {
                let x: Vec<f64> = (0..5).map(|_| normal(&mut rng)).collect();
                let y = x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() + eps.sample(&mut rng);
                values.push(y);
                x
            }
            _ => {
                let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
                let y = 10.0 * (PI * x[0] * x[1]).sin()
                    + 20.0 * (x[2] - 0.5).powi(2)
                    + 10.0 * x[3]
                    + 5.0 * x[4]
                    + normal(&mut rng);
                values.push(y);
                x
            }
        };
        rows.push(row);
    }
    for row in &mut rows {
        row.extend((0..spec.noise_features).map(|_| normal(&mut rng)));
    }
    if task == Task::Regression {
        return Ok(Dataset::regression(&rows, values)?);
    }
    if spec.label_noise > 0.0 {
        for l in labels.iter_mut() {
            if rng.random::<f64>() < spec.label_noise {
                let shift = rng.random_range(1..classes);
                *l = (*l + shift) % classes;
            }
        }
    }
    Ok(Dataset::classification(&rows, labels)?)
}
