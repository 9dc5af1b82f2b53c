//! Ranking metrics and the two-sample Kolmogorov D-statistic.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("scores and labels have different lengths ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("need at least one example")]
    Empty,
    #[error("ranking metrics need both a positive and a negative example")]
    SingleClass,
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
}

/// Parallel score/label lists for one evaluation set.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredExamples {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredExamples {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, MetricError> {
        if scores.len() != labels.len() {
            return Err(MetricError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if scores.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(MetricError::NonFiniteScore(bad));
        }
        Ok(Self { scores, labels })
    }

    /// Positive scores followed by negative scores.
    pub fn from_parts(positives: &[f64], negatives: &[f64]) -> Result<Self, MetricError> {
        let scores = positives.iter().chain(negatives).copied().collect();
        let labels = std::iter::repeat(true)
            .take(positives.len())
            .chain(std::iter::repeat(false).take(negatives.len()))
            .collect();
        Self::new(scores, labels)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// True when two examples share a score, which makes the AP
    /// ranking depend on input order.
    pub fn has_ties(&self) -> bool {
        let mut sorted = self.scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).any(|w| w[0] == w[1])
    }

    fn check_both_classes(&self) -> Result<(usize, usize), MetricError> {
        let pos = self.num_positive();
        let neg = self.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(MetricError::SingleClass);
        }
        Ok((pos, neg))
    }
}

/// Probability that a random positive outscores a random negative,
/// ties counting one half. Computed by the tie-corrected rank-sum
/// method: with R the sum of average ranks of the positives,
/// AUROC = (R - p(p+1)/2) / (p n).
pub fn auroc(s: &ScoredExamples) -> Result<f64, MetricError> {
    let (pos, neg) = s.check_both_classes()?;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[a].total_cmp(&s.scores[b]));

    // Average 1-based rank within each tied block.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && s.scores[order[j]] == s.scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if s.labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let p = pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Mean, over the positives in descending-score order, of the
/// precision at each positive's rank. Ties keep input order (stable
/// sort); call [`ScoredExamples::has_ties`] to flag that case.
pub fn average_precision(s: &ScoredExamples) -> Result<f64, MetricError> {
    s.check_both_classes()?;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[b].total_cmp(&s.scores[a]));

    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank0, &idx) in order.iter().enumerate() {
        if s.labels[idx] {
            hits += 1;
            precision_sum += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(precision_sum / hits as f64)
}

/// Two-sample Kolmogorov D-statistic: the largest gap between the two
/// empirical CDFs, found by merging the sorted samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(&bad) = a.iter().chain(b).find(|v| !v.is_finite()) {
        return Err(MetricError::NonFiniteScore(bad));
    }

    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);

    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let t = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d.max(1.0 - (i as f64 / na).min(j as f64 / nb)).min(1.0))
}
