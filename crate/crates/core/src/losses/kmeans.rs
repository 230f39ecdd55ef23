use super::LossError;

pub const KMEANS_MAX_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
    /// All points were identical; everything sits in cluster 0.
    pub degenerate: bool,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter().enumerate() {
        let d = dist2(point, c);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Lloyd's k-means with L2 distance. Seeding is deterministic farthest-point:
/// the first center is the first point, each next center is the point
/// farthest from all chosen centers (lowest index on ties). Empty clusters
/// keep their previous center.
pub fn kmeans(points: &[Vec<f64>], k: usize) -> Result<KMeansResult, LossError> {
    if points.is_empty() {
        return Err(LossError::Empty("k-means needs at least one point"));
    }
    if k == 0 {
        return Err(LossError::Empty("k-means needs k >= 1"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(LossError::LengthMismatch(dim, 0));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Ok(KMeansResult {
            assignments: vec![0; points.len()],
            centers: vec![points[0].clone()],
            iterations: 0,
            degenerate: true,
        });
    }

    let k = k.min(points.len());
    let mut centers = vec![points[0].clone()];
    let mut min_d: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let (idx, &far) = min_d
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if far <= 0.0 {
            break;
        }
        centers.push(points[idx].clone());
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[idx]));
        }
    }

    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERS {
        iterations += 1;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            for (d, v) in center.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(KMeansResult {
        assignments,
        centers,
        iterations,
        degenerate: false,
    })
}

/// Clusters embeddings into as many groups as there are distinct labels.
pub fn cluster_for_homogeneity<L: PartialEq>(
    embeddings: &[Vec<f64>],
    labels: &[L],
) -> Result<Vec<usize>, LossError> {
    if embeddings.len() != labels.len() {
        return Err(LossError::LengthMismatch(labels.len(), embeddings.len()));
    }
    let mut distinct: Vec<&L> = Vec::new();
    for l in labels {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }
    Ok(kmeans(embeddings, distinct.len())?.assignments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::homogeneity;

    #[test]
    fn separated_groups_are_recovered() {
        let pts = vec![
            vec![0.0, 0.1],
            vec![10.0, 10.0],
            vec![0.2, 0.0],
            vec![10.1, 9.9],
            vec![0.1, 0.1],
        ];
        let labels = ["a", "b", "a", "b", "a"];
        let clusters = cluster_for_homogeneity(&pts, &labels).unwrap();
        assert_eq!(homogeneity(&labels, &clusters).unwrap(), 1.0);
    }

    #[test]
    fn identical_points_collapse_to_one_cluster() {
        let pts = vec![vec![1.0, 2.0]; 4];
        let r = kmeans(&pts, 2).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.assignments, [0, 0, 0, 0]);
        let h = homogeneity(&["a", "a", "b", "b"], &r.assignments).unwrap();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 1.7).sin(), (i as f64).cos()]).collect();
        assert_eq!(kmeans(&pts, 3).unwrap(), kmeans(&pts, 3).unwrap());
    }

    #[test]
    fn farthest_point_seeding_starts_from_first_point() {
        let pts = vec![vec![0.0], vec![1.0], vec![5.0], vec![4.5]];
        let r = kmeans(&pts, 2).unwrap();
        assert_eq!(r.assignments, [0, 0, 1, 1]);
    }
}
