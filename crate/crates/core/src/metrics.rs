//! Embedding quality measures.
//!
//! Trustworthiness of an embedding with `m` samples is
//!
//! ```text
//! T(k) = 1 − 2/(m·k·(2m − 3k − 1)) · Σᵢ Σ_{j ∈ Nᵢᵏ} max(0, r(i,j) − k)
//! ```
//!
//! where `Nᵢᵏ` are the `k` nearest neighbours of `i` in the embedding and
//! `r(i,j)` is the rank of `j` among the neighbours of `i` in the original
//! space. (This is often written with `n` for the sample count; here `n` is
//! reserved for the folded data width.) Distances are Euclidean and ties are
//! broken by ascending sample index.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric m×m Euclidean distance matrix with zero diagonal.
pub fn pairwise_distances(x: &Matrix) -> Result<Matrix> {
    let m = x.rows();
    if m < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 samples, got {m}"
        )));
    }
    let mut d = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = euclidean(x.row(i), x.row(j));
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    Ok(d)
}

/// Neighbour ranks: `get(i, j)` is the 1-based rank of sample `j` among the
/// neighbours of `i`. The diagonal is unused and stored as 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    size: usize,
    ranks: Vec<usize>,
}

impl RankTable {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.ranks[i * self.size + j]
    }

    /// Neighbours of `i` ordered nearest first.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let mut order = vec![0; self.size - 1];
        for j in (0..self.size).filter(|&j| j != i) {
            order[self.get(i, j) - 1] = j;
        }
        order
    }
}

/// Indices `j ≠ i` sorted by `(distance, j)`.
fn sorted_neighbours(row: &[f64], i: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).filter(|&j| j != i).collect();
    idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    idx
}

pub fn rank_matrix(d: &Matrix) -> Result<RankTable> {
    let m = d.rows();
    if d.cols() != m {
        return Err(Error::Shape(format!(
            "distance matrix must be square, got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let mut ranks = vec![0; m * m];
    for i in 0..m {
        for (pos, j) in sorted_neighbours(d.row(i), i).into_iter().enumerate() {
            ranks[i * m + j] = pos + 1;
        }
    }
    Ok(RankTable { size: m, ranks })
}

pub fn trustworthiness(x_orig: &Matrix, x_emb: &Matrix, k: usize) -> Result<f64> {
    let m = x_orig.rows();
    if x_emb.rows() != m {
        return Err(Error::Shape(format!(
            "original has {m} samples, embedding has {}",
            x_emb.rows()
        )));
    }
    if k == 0 || 2 * k >= m {
        return Err(Error::Parameter(format!(
            "trustworthiness needs 1 <= k < m/2, got k={k} with m={m}"
        )));
    }
    let orig_ranks = rank_matrix(&pairwise_distances(x_orig)?)?;
    let emb_dist = pairwise_distances(x_emb)?;
    let mut penalty = 0usize;
    for i in 0..m {
        for &j in sorted_neighbours(emb_dist.row(i), i).iter().take(k) {
            penalty += orig_ranks.get(i, j).saturating_sub(k);
        }
    }
    let (mf, kf) = (m as f64, k as f64);
    let norm = 2.0 / (mf * kf * (2.0 * mf - 3.0 * kf - 1.0));
    Ok(1.0 - norm * penalty as f64)
}

/// `‖X − X̂‖_F / ‖X‖_F`.
pub fn relative_reconstruction_error(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Domain("reference matrix has zero norm".into()));
    }
    Ok(x.frobenius_distance(x_hat)? / norm)
}

/// Fraction of test rows whose k-nearest-neighbour majority label (among
/// training rows) matches the true label. Neighbour ties go to the lower
/// training index; vote ties go to the smallest label.
pub fn knn_accuracy<L: Ord + Clone>(
    train_emb: &Matrix,
    train_labels: &[L],
    test_emb: &Matrix,
    test_labels: &[L],
    k: usize,
) -> Result<f64> {
    if train_labels.len() != train_emb.rows() || test_labels.len() != test_emb.rows() {
        return Err(Error::Shape("label count does not match row count".into()));
    }
    if train_emb.cols() != test_emb.cols() {
        return Err(Error::Shape(format!(
            "train has {} columns, test has {}",
            train_emb.cols(),
            test_emb.cols()
        )));
    }
    if test_labels.is_empty() {
        return Err(Error::Parameter("test set is empty".into()));
    }
    if k == 0 || k > train_labels.len() {
        return Err(Error::Parameter(format!(
            "k must lie in [1, {}], got {k}",
            train_labels.len()
        )));
    }
    let mut correct = 0usize;
    for (row, truth) in test_emb.iter_rows().zip(test_labels) {
        let dist: Vec<f64> = train_emb.iter_rows().map(|t| euclidean(row, t)).collect();
        let mut idx: Vec<usize> = (0..dist.len()).collect();
        idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let mut votes: BTreeMap<&L, usize> = BTreeMap::new();
        for &j in &idx[..k] {
            *votes.entry(&train_labels[j]).or_default() += 1;
        }
        let best = votes.values().copied().max().unwrap_or(0);
        // BTreeMap iterates labels in ascending order
        let predicted = votes
            .iter()
            .find(|(_, &c)| c == best)
            .map(|(l, _)| *l)
            .expect("k >= 1 guarantees a vote");
        if predicted == truth {
            correct += 1;
        }
    }
    Ok(correct as f64 / test_labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn distance_cases() {
        let d = pairwise_distances(&Matrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap()).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        let d = pairwise_distances(&Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        assert!(pairwise_distances(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn distances_symmetric_and_triangular() {
        let x = random(12, 4, 9);
        let d = pairwise_distances(&x).unwrap();
        for i in 0..12 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..12 {
                assert_eq!(d.get(i, j), d.get(j, i));
                for l in 0..12 {
                    assert!(d.get(i, l) <= d.get(i, j) + d.get(j, l) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ranks_on_a_line() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let r = rank_matrix(&pairwise_distances(&x).unwrap()).unwrap();
        assert_eq!((r.get(0, 1), r.get(0, 2)), (1, 2));
        assert_eq!(r.neighbours(0), vec![1, 2]);
    }

    #[test]
    fn ranks_tie_break_by_index() {
        let mut d = Matrix::ones(4, 4);
        for i in 0..4 {
            d.set(i, i, 0.0);
        }
        let r = rank_matrix(&d).unwrap();
        assert_eq!(r.neighbours(2), vec![0, 1, 3]);
        assert_eq!(r.neighbours(0), vec![1, 2, 3]);
    }

    #[test]
    fn ranks_match_exhaustive_sort() {
        let x = random(10, 3, 1);
        let d = pairwise_distances(&x).unwrap();
        let r = rank_matrix(&d).unwrap();
        for i in 0..10 {
            for j in (0..10).filter(|&j| j != i) {
                // rank = 1 + number of samples strictly ahead of j
                let ahead = (0..10)
                    .filter(|&l| l != i && l != j)
                    .filter(|&l| d.get(i, l) < d.get(i, j) || (d.get(i, l) == d.get(i, j) && l < j))
                    .count();
                assert_eq!(r.get(i, j), ahead + 1);
            }
        }
    }

    #[test]
    fn trustworthiness_hand_enumeration() {
        // Original points on a line at 0, 1, 2, 10. Embedding moves them to
        // 0, 10, 1, 2. With k = 1 the embedded nearest neighbours are
        // 0→2, 1→3, 2→0 (tie with 3, lower index wins), 3→2, whose original
        // ranks are 2, 3, 2, 1. Penalties 1 + 2 + 1 + 0 = 4, normalizer
        // 2/(4·1·(8−3−1)) = 1/8, so T = 1 − 4/8.
        let orig = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0]]).unwrap();
        let emb = Matrix::from_rows(&[[0.0], [10.0], [1.0], [2.0]]).unwrap();
        assert_eq!(trustworthiness(&orig, &emb, 1).unwrap(), 0.5);
    }

    #[test]
    fn trustworthiness_identity_and_range_errors() {
        let x = random(20, 5, 3);
        for k in [1, 3, 5, 9] {
            assert_eq!(trustworthiness(&x, &x, k).unwrap(), 1.0);
        }
        assert!(matches!(
            trustworthiness(&x, &x, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            trustworthiness(&x, &x, 10),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            trustworthiness(&x, &Matrix::zeros(19, 2), 2),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn reconstruction_error_cases() {
        let x = Matrix::from_rows(&[[3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert_eq!(relative_reconstruction_error(&x, &x).unwrap(), 0.0);
        assert_eq!(
            relative_reconstruction_error(&x, &Matrix::zeros(2, 2)).unwrap(),
            1.0
        );
        let y = Matrix::from_rows(&[[3.0, 1.0], [0.0, 4.0]]).unwrap();
        assert_eq!(relative_reconstruction_error(&x, &y).unwrap(), 0.2);
        assert!(matches!(
            relative_reconstruction_error(&Matrix::zeros(2, 2), &x),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn knn_cases() {
        let train = Matrix::from_rows(&[[0.0, 0.0], [5.0, 5.0], [5.0, 6.0]]).unwrap();
        let labels = [0u32, 1, 1];
        let test = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(knn_accuracy(&train, &labels, &test, &[0], 1).unwrap(), 1.0);
        // three neighbours: votes 1,1 vs 0 → label 1
        assert_eq!(knn_accuracy(&train, &labels, &test, &[1], 3).unwrap(), 1.0);
        // two neighbours (0 and 1): tie → smallest label 0
        assert_eq!(knn_accuracy(&train, &labels, &test, &[0], 2).unwrap(), 1.0);
        assert!(matches!(
            knn_accuracy(&train, &labels, &test, &[0], 4),
            Err(Error::Parameter(_))
        ));
        let empty: [u32; 0] = [];
        assert!(knn_accuracy(&train, &labels, &test, &empty, 1).is_err());
    }

    #[test]
    fn knn_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let mut blob =
            |centre: f64, n: usize| Matrix::from_fn(n, 2, |_, _| centre + rng.sample(normal));
        let train = Matrix::from_rows(
            &blob(0.0, 15)
                .iter_rows()
                .chain(blob(10.0, 15).iter_rows())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let test = Matrix::from_rows(
            &blob(0.0, 10)
                .iter_rows()
                .chain(blob(10.0, 10).iter_rows())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let train_l: Vec<_> = (0..30).map(|i| if i < 15 { "a" } else { "b" }).collect();
        let test_l: Vec<_> = (0..20).map(|i| if i < 10 { "a" } else { "b" }).collect();
        assert_eq!(
            knn_accuracy(&train, &train_l, &test, &test_l, 5).unwrap(),
            1.0
        );
    }

    proptest! {
        #[test]
        fn trustworthiness_row_permutation_invariant(seed: u64, k in 1usize..6) {
            let x = random(14, 4, seed);
            let e = random(14, 2, seed.wrapping_add(1));
            let t = trustworthiness(&x, &e, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
            let mut perm: Vec<usize> = (0..14).collect();
            perm.reverse();
            perm.swap(0, 5);
            let tp = trustworthiness(&x.select_rows(&perm).unwrap(), &e.select_rows(&perm).unwrap(), k).unwrap();
            // reindexing can flip exact ties only; random data has none
            prop_assert!((t - tp).abs() < 1e-12);
        }

        #[test]
        fn ranks_invariant_under_monotone_transform(seed: u64) {
            let d = pairwise_distances(&random(9, 3, seed)).unwrap();
            let r = rank_matrix(&d).unwrap();
            let transformed = d.map(|v| (3.0 * v).exp() + v * v);
            prop_assert_eq!(rank_matrix(&transformed).unwrap(), r);
        }
    }
}
