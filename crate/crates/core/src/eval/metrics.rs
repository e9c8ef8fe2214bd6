use crate::error::{Error, Result};

/// ROC AUC for scores where lower means more anomalous: the probability that
/// a random anomaly (label 1) scores below a random normal point, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("scores contain NaN".into()));
    }
    let n_anom = labels.iter().filter(|l| **l == 1).count();
    let n_norm = labels.len() - n_anom;
    if n_anom == 0 || n_norm == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
    let mut normals_below = 0usize;
    let mut wins = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group_anom = order[i..j].iter().filter(|k| labels[**k] == 1).count();
        let group_norm = (j - i) - group_anom;
        let above = n_norm - normals_below - group_norm;
        wins += group_anom as f64 * (above as f64 + 0.5 * group_norm as f64);
        normals_below += group_norm;
        i = j;
    }
    Ok(wins / (n_anom as f64 * n_norm as f64))
}
