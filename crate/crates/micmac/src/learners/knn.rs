use crate::matrix::{sq_dist, Matrix};
use crate::parallel;

/// K-nearest-neighbor classifier; stores its training set.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    x: Matrix,
    y: Vec<u8>,
}

impl KnnModel {
    pub(super) fn fit(cfg: &super::LearnerConfig, x: &Matrix, y: &[u8]) -> Self {
        KnnModel {
            k: cfg.knn_k,
            x: x.clone(),
            y: y.to_vec(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn predict(&self, queries: &Matrix) -> Vec<u8> {
        parallel::map_indexed(queries.n_rows(), |q| {
            let dists: Vec<f64> = (0..self.x.n_rows())
                .map(|i| sq_dist(queries.row(q), self.x.row(i)))
                .collect();
            knn_vote(&dists, &self.y, self.k)
        })
    }
}

/// Majority vote among the `k` nearest training rows by squared distance.
/// Equidistant rows order by original index; a vote tie (impossible for odd
/// `k` on binary labels) falls back to the single nearest neighbor's label.
pub fn knn_vote(sq_dists: &[f64], labels: &[u8], k: usize) -> u8 {
    debug_assert_eq!(sq_dists.len(), labels.len());
    let k = k.min(sq_dists.len());
    // (distance, original index) of the current k best, sorted ascending
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (i, &d) in sq_dists.iter().enumerate() {
        if best.len() < k || (d, i) < *best.last().unwrap() {
            let pos = best.partition_point(|&(bd, bi)| (bd, bi) < (d, i));
            best.insert(pos, (d, i));
            if best.len() > k {
                best.pop();
            }
        }
    }
    let votes_1 = best.iter().filter(|&&(_, i)| labels[i] == 1).count();
    let votes_0 = best.len() - votes_1;
    if votes_1 > votes_0 {
        1
    } else if votes_0 > votes_1 {
        0
    } else {
        labels[best[0].1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_picks_majority() {
        assert_eq!(knn_vote(&[0.1, 0.2, 0.3, 9.0], &[1, 1, 0, 0], 3), 1);
        assert_eq!(knn_vote(&[0.1, 0.2, 0.3, 9.0], &[0, 0, 1, 1], 3), 0);
    }

    #[test]
    fn vote_tie_falls_back_to_nearest() {
        assert_eq!(knn_vote(&[0.1, 0.2], &[1, 0], 2), 1);
        assert_eq!(knn_vote(&[0.2, 0.1], &[1, 0], 2), 0);
    }

    #[test]
    fn equidistant_orders_by_index() {
        assert_eq!(knn_vote(&[1.0, 1.0, 1.0, 1.0], &[1, 0, 0, 1], 1), 1);
    }
}
