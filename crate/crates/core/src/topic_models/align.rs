use crate::matrix::Matrix;

/// Half the L1 distance between two probability vectors.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Matching of estimated topics to reference topics.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `order[i]` is the estimated topic matched to reference topic `i`.
    pub order: Vec<usize>,
    /// Total variation between each reference topic and its match.
    pub distances: Vec<f64>,
}

impl Alignment {
    pub fn mean_distance(&self) -> f64 {
        self.distances.iter().sum::<f64>() / self.distances.len().max(1) as f64
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// Greedy one-to-one matching of `estimate` rows to `reference` rows: the closest
/// remaining pair (by total variation) is matched first. `estimate` must have
/// at least as many rows as `reference`.
pub fn align_topics(estimate: &Matrix, reference: &Matrix) -> Alignment {
    assert!(
        estimate.rows() >= reference.rows(),
        "fewer estimated topics than reference topics"
    );
    assert_eq!(estimate.cols(), reference.cols(), "topic vectors differ in length");
    let mut pairs = Vec::with_capacity(estimate.rows() * reference.rows());
    for i in 0..reference.rows() {
        for j in 0..estimate.rows() {
            pairs.push((total_variation(reference.row(i), estimate.row(j)), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut order = vec![usize::MAX; reference.rows()];
    let mut distances = vec![0.0; reference.rows()];
    let mut used = vec![false; estimate.rows()];
    for (dist, i, j) in pairs {
        if order[i] == usize::MAX && !used[j] {
            order[i] = j;
            distances[i] = dist;
            used[j] = true;
        }
    }
    Alignment { order, distances }
}
