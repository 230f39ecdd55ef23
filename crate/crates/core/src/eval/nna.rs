use super::{EvalError, FeatureMatrix, Result};

/// Leave-one-out 1-nearest-neighbor accuracy over the pooled sets.
///
/// Each point takes the set label of its nearest other point under L2, the
/// lower pooled index winning ties (real rows come first). 0.5 means the sets
/// are indistinguishable; 1.0 means they are fully separated; values near 0
/// mean each generated point sits on top of a real one.
pub fn one_nna(real: &FeatureMatrix, generated: &FeatureMatrix) -> Result<f64> {
    if real.dim() != generated.dim() {
        return Err(EvalError::DimensionMismatch(real.dim(), generated.dim()));
    }
    for m in [real, generated] {
        if m.rows() < 2 {
            return Err(EvalError::TooFewSamples(m.rows()));
        }
    }
    let pooled: Vec<(Vec<f64>, bool)> = (0..real.rows())
        .map(|i| (real.row(i), true))
        .chain((0..generated.rows()).map(|i| (generated.row(i), false)))
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let correct = pooled
        .iter()
        .enumerate()
        .filter(|(i, (p, label))| {
            let nearest = pooled
                .iter()
                .enumerate()
                .filter(|(j, _)| j != i)
                .fold(None::<(f64, bool)>, |best, (_, (q, l))| {
                    let d = dist(p, q);
                    match best {
                        Some((bd, _)) if bd <= d => best,
                        _ => Some((d, *l)),
                    }
                });
            nearest.is_some_and(|(_, l)| l == *label)
        })
        .count();
    Ok(correct as f64 / pooled.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Source;

    fn fm(rows: &[f64], source: Source) -> FeatureMatrix {
        FeatureMatrix::from_rows(&rows.iter().map(|&v| vec![v]).collect::<Vec<_>>(), source).unwrap()
    }

    #[test]
    fn separated_clusters_are_fully_recognized() {
        let a = fm(&[0.0, 0.1, 0.2], Source::Real);
        let b = fm(&[10.0, 10.1, 10.2], Source::Generated);
        assert_eq!(one_nna(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn duplicates_are_always_misclassified() {
        let a = fm(&[0.0, 1.0, 5.0], Source::Real);
        let b = fm(&[0.0, 1.0, 5.0], Source::Generated);
        assert_eq!(one_nna(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn too_few_samples() {
        let a = fm(&[0.0], Source::Real);
        let b = fm(&[1.0, 2.0], Source::Generated);
        assert!(matches!(one_nna(&a, &b), Err(EvalError::TooFewSamples(1))));
    }
}
