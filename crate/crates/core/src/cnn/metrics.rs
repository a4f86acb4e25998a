use serde::Serialize;

use super::CnnError;

/// Confusion matrix (rows = truth, columns = prediction) and derived scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Result<Self, CnnError> {
        let c = confusion.len();
        if c == 0 || confusion.iter().any(|row| row.len() != c) {
            return Err(CnnError::Shape(format!("confusion matrix must be square and non-empty, got {c} rows")));
        }
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(CnnError::EmptyInput("no examples to score".into()));
        }
        let trace: usize = (0..c).map(|i| confusion[i][i]).sum();
        let mut precision = Vec::with_capacity(c);
        let mut recall = Vec::with_capacity(c);
        let mut f1 = Vec::with_capacity(c);
        for k in 0..c {
            let column: usize = confusion.iter().map(|row| row[k]).sum();
            let row: usize = confusion[k].iter().sum();
            let p = ratio(confusion[k][k], column);
            let r = ratio(confusion[k][k], row);
            precision.push(p);
            recall.push(r);
            f1.push(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / c as f64;
        Ok(Metrics {
            accuracy: ratio(trace, total),
            precision_macro: mean(&precision),
            recall_macro: mean(&recall),
            f1_macro: mean(&f1),
            precision,
            recall,
            f1,
            confusion,
        })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self, CnnError> {
        if truth.len() != predicted.len() {
            return Err(CnnError::Shape(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes || p >= classes {
                return Err(CnnError::Label {
                    label: t.max(p),
                    classes,
                });
            }
            confusion[t][p] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn classes(&self) -> usize {
        self.confusion.len()
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}
