use std::fs;
use std::path::Path;
use std::time::Instant;

use super::config::ExperimentConfig;
use super::experiment::{prepare_corpus, train_and_evaluate};
use super::HarnessError;
use crate::dataset::{scan_dataset, split};

/// Cartesian grid over beta, frame distance and window size.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub betas: Vec<f64>,
    pub distances: Vec<usize>,
    pub windows: Vec<usize>,
    pub base: ExperimentConfig,
}

impl SweepGrid {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        SweepGrid {
            betas: cfg.sweep.betas.clone(),
            distances: cfg.sweep.distances.clone(),
            windows: cfg.sweep.windows.clone(),
            base: cfg.clone(),
        }
    }

    /// `(beta, d, w)` in row order: beta outermost, window innermost.
    pub fn cells(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::new();
        for &b in &self.betas {
            for &d in &self.distances {
                for &w in &self.windows {
                    out.push((b, d, w));
                }
            }
        }
        out
    }

    pub fn cell_config(&self, beta: f64, d: usize, w: usize) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        cfg.pipeline.beta = beta;
        cfg.pipeline.flow_frame_distance = d;
        cfg.pipeline.flow_window = w;
        cfg
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.betas.is_empty() || self.distances.is_empty() || self.windows.is_empty() {
            return Err(HarnessError::Config("sweep grid is empty".into()));
        }
        self.base.validate()?;
        for (b, d, w) in self.cells() {
            self.cell_config(b, d, w)
                .pipeline
                .validate()
                .map_err(|e| HarnessError::Config(format!("cell beta={b} d={d} w={w}: {e}")))?;
        }
        Ok(())
    }
}

/// One grid cell's outcome. Metrics are `None` when the cell failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub d: usize,
    pub w: usize,
    pub accuracy: Option<f64>,
    pub precision_macro: Option<f64>,
    pub recall_macro: Option<f64>,
    pub f1_macro: Option<f64>,
    pub train_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Report `train_seconds` as 0 so that output bytes depend only on seeds.
    pub reproducible: bool,
}

/// Runs every grid cell on the dataset under `dataset_root`. The split is
/// drawn once; each cell rebuilds representations, trains a fresh model and
/// scores it. A failing cell is recorded and the sweep moves on.
pub fn run_sweep(
    grid: &SweepGrid,
    dataset_root: impl AsRef<Path>,
    opts: SweepOptions,
) -> Result<Vec<SweepRow>, HarnessError> {
    grid.validate()?;
    let index = scan_dataset(dataset_root)?;
    let sets = split(&index.entries, &grid.base.dataset.split)?;
    let mut rows = Vec::new();
    for (beta, d, w) in grid.cells() {
        let cfg = grid.cell_config(beta, d, w);
        log::info!("sweep cell beta={beta} d={d} w={w}");
        let start = Instant::now();
        let result = prepare_corpus(&index, &sets, &cfg).and_then(|corpus| train_and_evaluate(&corpus, &cfg));
        let seconds = if opts.reproducible {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        };
        let row = match result {
            Ok((_, m)) => SweepRow {
                beta,
                d,
                w,
                accuracy: Some(m.accuracy),
                precision_macro: Some(m.precision_macro),
                recall_macro: Some(m.recall_macro),
                f1_macro: Some(m.f1_macro),
                train_seconds: seconds,
                error: None,
            },
            Err(e) => {
                log::error!("sweep cell beta={beta} d={d} w={w} failed: {e}");
                SweepRow {
                    beta,
                    d,
                    w,
                    accuracy: None,
                    precision_macro: None,
                    recall_macro: None,
                    f1_macro: None,
                    train_seconds: seconds,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "beta,d,w,accuracy,precision_macro,recall_macro,f1_macro,train_seconds";

/// CSV text with the fixed header; failed cells leave metric fields empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.beta,
            r.d,
            r.w,
            opt(r.accuracy),
            opt(r.precision_macro),
            opt(r.recall_macro),
            opt(r.f1_macro),
            r.train_seconds
        ));
    }
    out
}

pub fn write_sweep_csv(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let path = path.as_ref();
    fs::write(path, sweep_csv(rows)).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>, HarnessError> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.join(",") != SWEEP_HEADER {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            reason: format!("expected header {SWEEP_HEADER}"),
        });
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let bad = |field: &str| HarnessError::Csv {
            path: path.to_path_buf(),
            reason: format!("row {}: bad {field}", line + 1),
        };
        let num = |i: usize, field: &str| -> Result<f64, HarnessError> { record[i].parse().map_err(|_| bad(field)) };
        let opt = |i: usize, field: &str| -> Result<Option<f64>, HarnessError> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                num(i, field).map(Some)
            }
        };
        let accuracy = opt(3, "accuracy")?;
        rows.push(SweepRow {
            beta: num(0, "beta")?,
            d: record[1].parse().map_err(|_| bad("d"))?,
            w: record[2].parse().map_err(|_| bad("w"))?,
            accuracy,
            precision_macro: opt(4, "precision_macro")?,
            recall_macro: opt(5, "recall_macro")?,
            f1_macro: opt(6, "f1_macro")?,
            train_seconds: num(7, "train_seconds")?,
            error: accuracy.is_none().then(|| "failed".to_string()),
        });
    }
    Ok(rows)
}
