use super::LossError;

/// Levenshtein distance: unit insertion/deletion, substitution free on equal symbols.
pub fn med<T: PartialEq>(s: &[T], t: &[T]) -> usize {
    if s.is_empty() {
        return t.len();
    }
    let mut prev: Vec<usize> = (0..=t.len()).collect();
    let mut cur = vec![0; t.len() + 1];
    for (i, a) in s.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in t.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[t.len()]
}

/// Smallest length-normalized edit distance from `generated` to any real structure.
pub fn structure_loss<T: PartialEq, R: AsRef<[T]>>(generated: &[T], real_batch: &[R]) -> Result<f64, LossError> {
    if real_batch.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let loss = real_batch
        .iter()
        .map(|r| {
            let r = r.as_ref();
            let denom = generated.len().max(r.len());
            if denom == 0 {
                0.0
            } else {
                med(generated, r) as f64 / denom as f64
            }
        })
        .fold(f64::INFINITY, f64::min);
    Ok(loss)
}
