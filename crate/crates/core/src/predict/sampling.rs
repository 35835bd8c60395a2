use rand::seq::{index, SliceRandom};

use super::PredictError;
use crate::rng;

/// Balances classes by sampling the majority class without replacement down
/// to the minority count. `labels` is indexed by row id. Returns sorted row ids.
pub fn undersample(rows: &[usize], labels: &[bool], seed: u64) -> Result<Vec<usize>, PredictError> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| labels[r]);
    if pos.is_empty() || neg.is_empty() {
        return Err(PredictError::SingleClass);
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut r = rng::rng_from(seed);
    let mut out = minority;
    out.extend(index::sample(&mut r, majority.len(), out.len()).into_iter().map(|i| majority[i]));
    out.sort_unstable();
    Ok(out)
}

/// Shuffles `rows` and splits them into `k` folds whose sizes differ by at
/// most one.
pub fn kfold_partition(rows: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, PredictError> {
    if k < 2 {
        return Err(PredictError::InvalidConfig("k must be >= 2".into()));
    }
    if rows.len() < k {
        return Err(PredictError::TooFewRows { n: rows.len(), k });
    }
    let mut shuffled = rows.to_vec();
    shuffled.shuffle(&mut rng::rng_from(seed));
    let (base, extra) = (rows.len() / k, rows.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(shuffled[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}
