use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Undefined when only one class is present.
    pub auc: Option<f64>,
}

/// Metrics of probability scores against labels, classifying `p >= 0.5` as
/// positive. Precision (recall) is 0 when nothing is predicted (present)
/// positive.
pub fn binary_metrics(probs: &[f64], labels: &[bool]) -> BinaryMetrics {
    assert_eq!(probs.len(), labels.len());
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= 0.5, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    BinaryMetrics {
        accuracy: ratio(tp + tn, probs.len()),
        precision,
        recall,
        f1,
        auc: roc_auc(probs, labels),
    }
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, with
/// midranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * midrank;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_counts() {
        let m = binary_metrics(&[0.9, 0.6, 0.4, 0.1], &[true, false, true, false]);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f1, 0.5);
        assert_eq!(m.auc, Some(0.75));
    }

    #[test]
    fn tie_at_half_is_positive() {
        let m = binary_metrics(&[0.5], &[true]);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.auc, None);
    }

    #[test]
    fn auc_midranks() {
        assert_eq!(roc_auc(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]), Some(0.5));
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]), Some(1.0));
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[false, false, true, true]), Some(0.0));
        // brute-force pair count: P(score_pos > score_neg) + 0.5 P(tie)
        let s = [0.3, 0.3, 0.7, 0.1, 0.7];
        let y = [true, false, true, false, false];
        let mut num = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if y[i] && !y[j] {
                    num += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        assert!((roc_auc(&s, &y).unwrap() - num / 6.0).abs() < 1e-15);
    }
}
