//! Classification metrics for win-rate predictors.

use crate::error::{Error, Result};

/// Fraction of predictions on the right side of 0.5 (`p >= 0.5` means a
/// predicted Radiant win).
pub fn accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(scores.len(), labels.len());
    if scores.is_empty() {
        return 0.0;
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= 0.5) == y)
        .count();
    correct as f64 / scores.len() as f64
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, with tied
/// scores receiving their mid-rank (each tied positive/negative pair counts
/// one half).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|&&y| y).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps mid-ranks integral.
    let mut doubled_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share the mid-rank (i + j + 2) / 2.
        let doubled_mid = (i + j + 2) as u128;
        let tied_positives = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        doubled_rank_sum += doubled_mid * tied_positives;
        i = j + 1;
    }
    let p = positives as u128;
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / 2.0 / (positives as f64 * negatives as f64))
}
