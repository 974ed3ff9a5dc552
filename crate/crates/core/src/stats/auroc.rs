use std::cmp::Ordering;

use crate::scalar::Real;

/// Mann–Whitney AUROC: probability that a positive outscores a negative,
/// ties counted half. `None` unless both groups are nonempty.
///
/// Counts are accumulated as doubled integers so the result equals the
/// exhaustive pairwise count divided by `n_pos * n_neg` exactly.
pub fn auroc2<T: Real>(positives: &[T], negatives: &[T]) -> Option<T> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut all: Vec<(T, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut doubled_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let (mut pos_g, mut neg_g) = (0u128, 0u128);
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                pos_g += 1;
            } else {
                neg_g += 1;
            }
            j += 1;
        }
        doubled_wins += pos_g * (2 * neg_below + neg_g);
        neg_below += neg_g;
        i = j;
    }
    let pairs = positives.len() as f64 * negatives.len() as f64;
    Some(T::of(doubled_wins as f64 / 2.0) / T::of(pairs))
}

/// [`auroc2`] over a labelled score vector.
pub fn auroc2_labeled<T: Real>(scores: &[T], positive: &[bool]) -> Option<T> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (&s, &p) in scores.iter().zip(positive) {
        if p {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    auroc2(&pos, &neg)
}
