use std::collections::HashMap;
use std::hash::Hash;

use super::LossError;

/// Shannon entropy (natural log) of a label distribution.
pub fn entropy<L: Eq + Hash>(labels: &[L]) -> f64 {
    let n = labels.len() as f64;
    let mut counts: HashMap<&L, usize> = HashMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    -counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// `h = 1 − H(G|C) / H(G)` for class labels `G` and cluster assignment `C`.
/// A single class gives `H(G) = 0` and is defined as perfectly homogeneous.
pub fn homogeneity<L: Eq + Hash>(class_labels: &[L], cluster_ids: &[usize]) -> Result<f64, LossError> {
    if class_labels.len() != cluster_ids.len() {
        return Err(LossError::LengthMismatch(class_labels.len(), cluster_ids.len()));
    }
    if class_labels.is_empty() {
        return Err(LossError::Empty("homogeneity needs at least one item"));
    }
    let h_g = entropy(class_labels);
    if h_g <= 0.0 {
        return Ok(1.0);
    }
    let n = class_labels.len() as f64;
    let mut joint: HashMap<(&L, usize), usize> = HashMap::new();
    let mut per_cluster: HashMap<usize, usize> = HashMap::new();
    for (g, &c) in class_labels.iter().zip(cluster_ids) {
        *joint.entry((g, c)).or_default() += 1;
        *per_cluster.entry(c).or_default() += 1;
    }
    let h_g_given_c = -joint
        .iter()
        .map(|(&(_, c), &n_gc)| {
            let n_gc = n_gc as f64;
            (n_gc / n) * (n_gc / per_cluster[&c] as f64).ln()
        })
        .sum::<f64>();
    Ok((1.0 - h_g_given_c / h_g).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pure_clusters_are_fully_homogeneous() {
        assert_eq!(homogeneity(&["A", "A", "B", "B"], &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn one_mixed_cluster_has_zero_homogeneity() {
        let h = homogeneity(&["A", "A", "B", "B"], &[0, 0, 0, 0]).unwrap();
        assert!(h.abs() < 1e-12, "{h}");
    }

    #[test]
    fn single_class_is_homogeneous_by_convention() {
        assert_eq!(homogeneity(&["A", "A", "A"], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(homogeneity(&["A", "A", "A"], &[0, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert_eq!(homogeneity(&["A"], &[0, 1]), Err(LossError::LengthMismatch(1, 2)));
    }

    proptest! {
        #[test]
        fn bounded_and_invariant_to_relabeling(
            items in prop::collection::vec((0u8..3, 0usize..3), 1..10),
            shift in 1usize..5,
        ) {
            let labels: Vec<u8> = items.iter().map(|p| p.0).collect();
            let clusters: Vec<usize> = items.iter().map(|p| p.1).collect();
            let h = homogeneity(&labels, &clusters).unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            let renamed_clusters: Vec<usize> = clusters.iter().map(|c| (c + shift) % 7 + 10).collect();
            let renamed_labels: Vec<u8> = labels.iter().map(|l| 2 - l).collect();
            prop_assert!((homogeneity(&labels, &renamed_clusters).unwrap() - h).abs() < 1e-12);
            prop_assert!((homogeneity(&renamed_labels, &clusters).unwrap() - h).abs() < 1e-12);
        }
    }
}
