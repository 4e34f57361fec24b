use rayon::prelude::*;

use super::features::check_labels;
use super::{FeatureMatrix, LearnerError};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub train: FeatureMatrix,
    pub labels: Vec<u8>,
}

impl KnnModel {
    pub fn fit(train: &FeatureMatrix, labels: &[u8], k: usize) -> Result<Self, LearnerError> {
        check_labels(train, labels)?;
        if train.rows() == 0 {
            return Err(LearnerError::EmptyTrainingSet);
        }
        if k == 0 || k > train.rows() {
            return Err(LearnerError::InvalidParameter(format!(
                "k must lie in 1..={}, got {k}",
                train.rows()
            )));
        }
        Ok(Self {
            k,
            train: train.clone(),
            labels: labels.to_vec(),
        })
    }

    fn predict_one(&self, q: &[f64]) -> u8 {
        let mut near: Vec<(f64, u8)> = (0..self.train.rows())
            .map(|i| {
                let d2: f64 = self
                    .train
                    .row(i)
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, self.labels[i])
            })
            .collect();
        let by_distance = |a: &(f64, u8), b: &(f64, u8)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < near.len() {
            near.select_nth_unstable_by(self.k - 1, by_distance);
            near.truncate(self.k);
        }
        // A fixed order keeps the distance sums independent of row order.
        near.sort_unstable_by(by_distance);
        let mut votes = [(0usize, 0.0f64); 256];
        for &(d2, label) in &near {
            votes[label as usize].0 += 1;
            votes[label as usize].1 += d2.sqrt();
        }
        // Most votes, then smaller summed distance, then smaller label.
        let mut best = near[0].1;
        for &(_, label) in &near {
            let (v, s) = votes[label as usize];
            let (bv, bs) = votes[best as usize];
            if v > bv || (v == bv && (s < bs || (s == bs && label < best))) {
                best = label;
            }
        }
        best
    }

    pub fn predict(&self, query: &FeatureMatrix) -> Result<Vec<u8>, LearnerError> {
        if query.cols() != self.train.cols() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.train.cols(),
                found: query.cols(),
            });
        }
        Ok((0..query.rows())
            .into_par_iter()
            .map(|i| self.predict_one(query.row(i)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(p: &[(f64, f64)]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&p.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn trivial_cases() {
        let m = KnnModel::fit(&points(&[(1.0, 1.0)]), &[7], 1).unwrap();
        assert_eq!(
            m.predict(&points(&[(-5.0, 3.0), (100.0, 0.0)])).unwrap(),
            vec![7, 7]
        );
        let train = points(&[(0.0, 0.0), (5.0, 5.0), (9.0, 1.0)]);
        let m = KnnModel::fit(&train, &[1, 2, 3], 1).unwrap();
        assert_eq!(m.predict(&train).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn parameter_errors() {
        let empty = FeatureMatrix::new(0, 2, vec![]).unwrap();
        assert!(matches!(
            KnnModel::fit(&empty, &[], 1),
            Err(LearnerError::EmptyTrainingSet)
        ));
        let one = points(&[(0.0, 0.0)]);
        assert!(KnnModel::fit(&one, &[0], 2).is_err());
        assert!(KnnModel::fit(&one, &[0], 0).is_err());
        let m = KnnModel::fit(&one, &[0], 1).unwrap();
        assert!(m
            .predict(&FeatureMatrix::new(1, 3, vec![0.0; 3]).unwrap())
            .is_err());
    }

    /// Six hand-placed points, k = 3, checked against pairwise distances
    /// worked out by hand.
    #[test]
    fn six_point_fixture() {
        let train = points(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (4.0, 4.0),
            (5.0, 4.0),
            (4.0, 6.0),
        ]);
        let labels = [0, 0, 1, 1, 2, 2];
        let m = KnnModel::fit(&train, &labels, 3).unwrap();
        // (0.2,0.2): nearest (0,0) 0.28, (1,0) 0.82, (0,1) 0.82 -> votes 0,0,1.
        // (4.5,4.5): (4,4) 0.71, (5,4) 0.71, (4,6) 1.58 -> votes 1,2,2.
        // (4,3): (4,4) 1, (5,4) 1.41, (4,6) 3 -> votes 1,2,2.
        // (2,2): (1,0) 2.24, (0,1) 2.24, then (0,0) and (4,4) tie at 2.83 and
        // the smaller label is taken -> votes 0,1,0.
        let q = points(&[(0.2, 0.2), (4.5, 4.5), (4.0, 3.0), (2.0, 2.0)]);
        assert_eq!(m.predict(&q).unwrap(), vec![0, 2, 2, 0]);
    }

    #[test]
    fn vote_ties_use_summed_distance_then_label() {
        // k = 2, one vote each: the closer neighbour's label wins.
        let train = points(&[(1.0, 0.0), (-2.0, 0.0)]);
        let m = KnnModel::fit(&train, &[5, 3], 2).unwrap();
        assert_eq!(m.predict(&points(&[(0.0, 0.0)])).unwrap(), vec![5]);
        // Equal distances: smaller label.
        let train = points(&[(1.0, 0.0), (-1.0, 0.0)]);
        let m = KnnModel::fit(&train, &[5, 3], 2).unwrap();
        assert_eq!(m.predict(&points(&[(0.0, 0.0)])).unwrap(), vec![3]);
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            pts in proptest::collection::vec((0i32..6, 0i32..6, 0u8..3), 5..20),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let rows: Vec<Vec<f64>> = pts.iter().map(|&(x, y, _)| vec![x as f64, y as f64]).collect();
            let labels: Vec<u8> = pts.iter().map(|p| p.2).collect();
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = KnnModel::fit(&FeatureMatrix::from_rows(&rows).unwrap(), &labels, k).unwrap();
            let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
            let shuffled_labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
            let b = KnnModel::fit(&FeatureMatrix::from_rows(&shuffled).unwrap(), &shuffled_labels, k).unwrap();
            let grid: Vec<Vec<f64>> = (0..36).map(|i| vec![(i % 6) as f64 + 0.5, (i / 6) as f64]).collect();
            let q = FeatureMatrix::from_rows(&grid).unwrap();
            prop_assert_eq!(a.predict(&q).unwrap(), b.predict(&q).unwrap());
        }
    }
}
