use crate::error::{Error, Result};

/// Support-weighted classification metrics.
///
/// `weighted_accuracy` is the support-weighted mean of per-class recall,
/// which equals plain accuracy. `balanced_accuracy` is the unweighted mean
/// recall over classes that have support.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub weighted_accuracy: f64,
    pub weighted_f1: f64,
    pub balanced_accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// `key=value` lines, one per metric plus the confusion counts.
    pub fn report(&self, prefix: &str) -> String {
        let mut out = format!(
            "{prefix}weighted_accuracy={:.6}\n{prefix}weighted_f1={:.6}\n{prefix}balanced_accuracy={:.6}\n{prefix}samples={}\n",
            self.weighted_accuracy,
            self.weighted_f1,
            self.balanced_accuracy,
            self.total()
        );
        for (t, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            out.push_str(&format!("{prefix}confusion_{t}={}\n", cells.join(",")));
        }
        out
    }
}

pub fn confusion_matrix(predicted: &[usize], actual: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            context: "predictions vs labels",
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let mut cm = vec![vec![0usize; classes]; classes];
    for (&p, &a) in predicted.iter().zip(actual) {
        if p >= classes || a >= classes {
            return Err(Error::InvalidConfig(format!("class index {} ≥ {classes}", p.max(a))));
        }
        cm[a][p] += 1;
    }
    Ok(cm)
}

pub fn metrics_from_confusion(confusion: Vec<Vec<usize>>) -> Result<Metrics> {
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    let k = confusion.len();
    let mut w_recall = 0.0;
    let mut w_f1 = 0.0;
    let mut recall_sum = 0.0;
    let mut present = 0usize;
    for c in 0..k {
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..k).map(|t| confusion[t][c]).sum();
        let tp = confusion[c][c];
        if support == 0 {
            continue;
        }
        let recall = tp as f64 / support as f64;
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let weight = support as f64 / total as f64;
        w_recall += weight * recall;
        w_f1 += weight * f1;
        recall_sum += recall;
        present += 1;
    }
    Ok(Metrics {
        weighted_accuracy: w_recall,
        weighted_f1: w_f1,
        balanced_accuracy: recall_sum / present as f64,
        confusion,
    })
}

/// Weighted accuracy, weighted F1 and confusion for class predictions.
pub fn evaluate_predictions(predicted: &[usize], actual: &[usize], classes: usize) -> Result<Metrics> {
    if actual.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    metrics_from_confusion(confusion_matrix(predicted, actual, classes)?)
}
