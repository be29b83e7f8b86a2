//! Meta-performance matrices and greedy portfolio construction.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizers::RunResult;
use crate::search_space::{sample_configuration, validate_configuration, Configuration, SearchSpace, Violation};

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("portfolio size must be at least 1")]
    ZeroSize,
    #[error("meta matrix has no datasets")]
    NoDatasets,
    #[error("meta matrix has no configurations")]
    NoConfigurations,
    #[error("dataset {id:?} (row {row}) has no present scores")]
    EmptyRow { row: usize, id: String },
    #[error("meta matrix row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("configuration at catalog index {index} appears twice")]
    DuplicateConfiguration { index: usize },
    #[error("portfolio entry {index} is invalid: {violation}")]
    InvalidEntry { index: usize, violation: Violation },
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PortfolioError + '_ {
    move |source| PortfolioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn config_key(c: &Configuration) -> String {
    serde_json::to_string(c).expect("serializable")
}

/// Scores of catalog configurations across datasets. `None` marks a cell
/// that was never observed; it counts as `worst` in objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaMatrix {
    pub id: String,
    pub dataset_ids: Vec<String>,
    pub catalog: Vec<Configuration>,
    pub scores: Vec<Vec<Option<f64>>>,
    pub worst: f64,
}

impl MetaMatrix {
    pub fn new(
        id: impl Into<String>,
        dataset_ids: Vec<String>,
        catalog: Vec<Configuration>,
        scores: Vec<Vec<Option<f64>>>,
        worst: f64,
    ) -> Result<Self, PortfolioError> {
        if scores.len() != dataset_ids.len() {
            return Err(PortfolioError::Malformed(format!(
                "{} dataset ids for {} rows",
                dataset_ids.len(),
                scores.len()
            )));
        }
        for (row, r) in scores.iter().enumerate() {
            if r.len() != catalog.len() {
                return Err(PortfolioError::Ragged {
                    row,
                    found: r.len(),
                    expected: catalog.len(),
                });
            }
        }
        let mut seen = HashMap::new();
        for (index, c) in catalog.iter().enumerate() {
            if seen.insert(config_key(c), index).is_some() {
                return Err(PortfolioError::DuplicateConfiguration { index });
            }
        }
        Ok(Self {
            id: id.into(),
            dataset_ids,
            catalog,
            scores,
            worst,
        })
    }

    pub fn n_datasets(&self) -> usize {
        self.dataset_ids.len()
    }

    pub fn n_configs(&self) -> usize {
        self.catalog.len()
    }

    pub fn score(&self, dataset: usize, config: usize) -> f64 {
        self.scores[dataset][config].unwrap_or(self.worst)
    }

    /// Coverage objective: mean over datasets of the best score in `set`.
    pub fn objective(&self, set: &[usize]) -> f64 {
        let total: f64 = (0..self.n_datasets())
            .map(|d| set.iter().map(|&c| self.score(d, c)).fold(self.worst, f64::max))
            .sum();
        total / self.n_datasets() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    #[serde(flatten)]
    pub config: Configuration,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub meta_id: String,
    /// Objective of each prefix of the entries.
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub entries: Vec<PortfolioEntry>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Portfolio {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn configurations(&self) -> Vec<Configuration> {
        self.entries.iter().map(|e| e.config.clone()).collect()
    }

    pub fn validate(&self, space: &SearchSpace) -> Result<(), PortfolioError> {
        for (index, e) in self.entries.iter().enumerate() {
            validate_configuration(space, &e.config)
                .map_err(|violation| PortfolioError::InvalidEntry { index, violation })?;
        }
        Ok(())
    }
}

/// Catalog indices chosen greedily for the coverage objective. Each step
/// adds the configuration with the largest objective, preferring the lower
/// index on ties, and stops at `k` entries or when nothing improves.
pub fn greedy_selection(meta: &MetaMatrix, k: usize) -> Result<(Vec<usize>, Vec<f64>), PortfolioError> {
    if k == 0 {
        return Err(PortfolioError::ZeroSize);
    }
    if meta.n_datasets() == 0 {
        return Err(PortfolioError::NoDatasets);
    }
    if meta.n_configs() == 0 {
        return Err(PortfolioError::NoConfigurations);
    }
    if let Some(row) = meta.scores.iter().position(|r| r.iter().all(Option::is_none)) {
        return Err(PortfolioError::EmptyRow {
            row,
            id: meta.dataset_ids[row].clone(),
        });
    }
    let n = meta.n_datasets();
    let mut covered = vec![meta.worst; n];
    let mut chosen: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut current = f64::NEG_INFINITY;
    while chosen.len() < k.min(meta.n_configs()) {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..meta.n_configs()).filter(|c| !chosen.contains(c)) {
            let f = (0..n).map(|d| covered[d].max(meta.score(d, c))).sum::<f64>() / n as f64;
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((c, f));
            }
        }
        let Some((c, f)) = best else { break };
        if !chosen.is_empty() && f <= current {
            break;
        }
        for (d, cov) in covered.iter_mut().enumerate() {
            *cov = cov.max(meta.score(d, c));
        }
        chosen.push(c);
        trace.push(f);
        current = f;
    }
    Ok((chosen, trace))
}

pub fn build_portfolio_greedy(meta: &MetaMatrix, k: usize) -> Result<Portfolio, PortfolioError> {
    let (chosen, trace) = greedy_selection(meta, k)?;
    let entries = chosen
        .iter()
        .zip(&trace)
        .map(|(&c, f)| PortfolioEntry {
            config: meta.catalog[c].clone(),
            note: format!("catalog c{c}; objective {f}"),
        })
        .collect();
    Ok(Portfolio {
        entries,
        provenance: Provenance {
            meta_id: meta.id.clone(),
            objective_trace: trace,
        },
    })
}

/// Best full-budget validation score of each catalog configuration on each
/// dataset. Datasets appear in order of first mention; trials whose
/// configuration is not in the catalog are ignored.
pub fn collect_meta(
    id: &str,
    runs: &[(&str, &RunResult)],
    catalog: &[Configuration],
    worst: f64,
) -> Result<MetaMatrix, PortfolioError> {
    let index: HashMap<String, usize> = catalog
        .iter()
        .enumerate()
        .map(|(i, c)| (config_key(c), i))
        .collect();
    let mut dataset_ids: Vec<String> = Vec::new();
    let mut scores: Vec<Vec<Option<f64>>> = Vec::new();
    for (dataset, run) in runs {
        let row = match dataset_ids.iter().position(|d| d == dataset) {
            Some(r) => r,
            None => {
                dataset_ids.push(dataset.to_string());
                scores.push(vec![None; catalog.len()]);
                scores.len() - 1
            }
        };
        for t in run.trials.iter().filter(|t| t.is_full_budget()) {
            if let Some(&c) = index.get(&config_key(&t.config)) {
                let cell = &mut scores[row][c];
                *cell = Some(cell.map_or(t.validation_score, |v| v.max(t.validation_score)));
            }
        }
    }
    MetaMatrix::new(id, dataset_ids, catalog.to_vec(), scores, worst)
}

/// Each algorithm's default configuration followed by distinct random
/// samples, `size` in total.
pub fn sample_catalog(space: &SearchSpace, size: usize, seed: u64) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(size);
    let defaults = space.algorithms().iter().map(|a| a.default_configuration());
    for c in defaults {
        if out.len() < size && seen.insert(config_key(&c)) {
            out.push(c);
        }
    }
    let mut attempts = 0;
    while out.len() < size && attempts < size * 100 {
        attempts += 1;
        let c = sample_configuration(space, &mut rng);
        if seen.insert(config_key(&c)) {
            out.push(c);
        }
    }
    out
}

pub fn save_portfolio(p: &Portfolio, path: &Path) -> Result<(), PortfolioError> {
    let text = serde_json::to_string_pretty(p).expect("serializable");
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn parse_portfolio(text: &str, space: &SearchSpace) -> Result<Portfolio, PortfolioError> {
    if text.trim().is_empty() {
        return Ok(Portfolio::default());
    }
    let p: Portfolio =
        serde_json::from_str(text).map_err(|e| PortfolioError::Malformed(e.to_string()))?;
    p.validate(space)?;
    Ok(p)
}

/// Loads and validates a portfolio. An empty file is an empty portfolio.
pub fn load_portfolio(path: &Path, space: &SearchSpace) -> Result<Portfolio, PortfolioError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_portfolio(&text, space)
}

#[derive(Serialize, Deserialize)]
struct CatalogEntry {
    id: String,
    #[serde(flatten)]
    config: Configuration,
}

#[derive(Serialize, Deserialize)]
struct CatalogDocument {
    meta_id: String,
    worst: f64,
    configurations: Vec<CatalogEntry>,
}

/// Path of the catalog sidecar written next to a meta-matrix file.
pub fn catalog_path(matrix_path: &Path) -> PathBuf {
    let mut name = matrix_path.as_os_str().to_owned();
    name.push(".catalog.json");
    PathBuf::from(name)
}

/// Writes the score table: first column `dataset`, then one column per
/// catalog id, `NA` for missing cells.
pub fn write_meta_matrix<W: Write>(meta: &MetaMatrix, w: W) -> Result<(), PortfolioError> {
    let mut wr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| PortfolioError::Malformed(e.to_string());
    let mut header = vec!["dataset".to_string()];
    header.extend((0..meta.n_configs()).map(|c| format!("c{c}")));
    wr.write_record(&header).map_err(err)?;
    for (id, row) in meta.dataset_ids.iter().zip(&meta.scores) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| v.map_or("NA".to_string(), |x| x.to_string())));
        wr.write_record(&rec).map_err(err)?;
    }
    wr.flush().map_err(|e| PortfolioError::Malformed(e.to_string()))
}

pub fn read_meta_matrix<R: Read>(
    r: R,
    id: &str,
    catalog: Vec<Configuration>,
    worst: f64,
) -> Result<MetaMatrix, PortfolioError> {
    let mut rd = csv::Reader::from_reader(r);
    let err = |e: csv::Error| PortfolioError::Malformed(e.to_string());
    let header = rd.headers().map_err(err)?.clone();
    if header.len() != catalog.len() + 1 {
        return Err(PortfolioError::Malformed(format!(
            "{} score columns for {} catalog entries",
            header.len().saturating_sub(1),
            catalog.len()
        )));
    }
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(err)?;
        let mut it = rec.iter();
        ids.push(it.next().unwrap_or_default().to_string());
        let cells = it
            .map(|cell| match cell.trim() {
                "NA" => Ok(None),
                v => v.parse::<f64>().map(Some).map_err(|_| {
                    PortfolioError::Malformed(format!("row {}: bad score {v:?}", row + 1))
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        scores.push(cells);
    }
    MetaMatrix::new(id, ids, catalog, scores, worst)
}

/// Writes the matrix to `path` and its catalog to the sidecar.
pub fn save_meta(meta: &MetaMatrix, path: &Path) -> Result<(), PortfolioError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_meta_matrix(meta, std::io::BufWriter::new(file))?;
    let doc = CatalogDocument {
        meta_id: meta.id.clone(),
        worst: meta.worst,
        configurations: meta
            .catalog
            .iter()
            .enumerate()
            .map(|(i, c)| CatalogEntry {
                id: format!("c{i}"),
                config: c.clone(),
            })
            .collect(),
    };
    let side = catalog_path(path);
    fs::write(&side, serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
        .map_err(io_err(&side))
}

/// Reads a matrix and its sidecar, checking catalog entries against `space`.
pub fn load_meta(path: &Path, space: &SearchSpace) -> Result<MetaMatrix, PortfolioError> {
    let side = catalog_path(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let doc: CatalogDocument =
        serde_json::from_str(&text).map_err(|e| PortfolioError::Malformed(e.to_string()))?;
    let catalog: Vec<Configuration> = doc.configurations.into_iter().map(|e| e.config).collect();
    for (index, c) in catalog.iter().enumerate() {
        validate_configuration(space, c)
            .map_err(|violation| PortfolioError::InvalidEntry { index, violation })?;
    }
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_meta_matrix(file, &doc.meta_id, catalog, doc.worst)
}
