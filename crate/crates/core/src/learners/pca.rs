use nalgebra::{DMatrix, SymmetricEigen};

use super::{FeatureMatrix, LearnerError};

/// Principal axes of a centred sample, largest variance first.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Unit-length, mutually orthogonal rows of length `mean.len()`.
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    /// Set when fewer positive-variance directions existed than were asked for.
    pub truncated: bool,
}

impl PcaModel {
    /// Eigendecomposition of the sample covariance (denominator n - 1).
    pub fn fit(x: &FeatureMatrix, d: usize) -> Result<Self, LearnerError> {
        let (n, p) = (x.rows(), x.cols());
        if n == 0 {
            return Err(LearnerError::EmptyTrainingSet);
        }
        if d == 0 || d > n.min(p) {
            return Err(LearnerError::InvalidParameter(format!(
                "component count must lie in 1..={}, got {d}",
                n.min(p)
            )));
        }
        let mut mean = vec![0.0; p];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let centred = DMatrix::from_fn(n, p, |i, j| x.row(i)[j] - mean[j]);
        let denom = (n.max(2) - 1) as f64;
        let cov = (centred.transpose() * &centred) / denom;
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let top = eig.eigenvalues[order[0]].max(0.0);
        let positive = order
            .iter()
            .take_while(|&&i| eig.eigenvalues[i] > top * 1e-12 && eig.eigenvalues[i] > 0.0)
            .count();
        let keep = d.min(positive);

        let mut components = Vec::with_capacity(keep);
        let mut variances = Vec::with_capacity(keep);
        for &i in &order[..keep] {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // Sign convention: largest-magnitude entry positive.
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            if pivot < 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
            components.push(v);
            variances.push(eig.eigenvalues[i]);
        }
        Ok(Self {
            mean,
            components,
            variances,
            truncated: keep < d,
        })
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, LearnerError> {
        if x.cols() != self.mean.len() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.mean.len(),
                found: x.cols(),
            });
        }
        let d = self.components.len();
        let mut out = Vec::with_capacity(x.rows() * d);
        let mut centred = vec![0.0; self.mean.len()];
        for i in 0..x.rows() {
            for ((c, v), m) in centred.iter_mut().zip(x.row(i)).zip(&self.mean) {
                *c = v - m;
            }
            out.extend(
                self.components
                    .iter()
                    .map(|comp| comp.iter().zip(&centred).map(|(a, b)| a * b).sum::<f64>()),
            );
        }
        FeatureMatrix::new(x.rows(), d, out)
    }

    /// Maps projected rows back to the original feature space.
    pub fn reconstruct(&self, z: &FeatureMatrix) -> Result<FeatureMatrix, LearnerError> {
        if z.cols() != self.components.len() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.components.len(),
                found: z.cols(),
            });
        }
        let mut out = Vec::with_capacity(z.rows() * self.mean.len());
        for i in 0..z.rows() {
            let mut row = self.mean.clone();
            for (coef, comp) in z.row(i).iter().zip(&self.components) {
                for (r, c) in row.iter_mut().zip(comp) {
                    *r += coef * c;
                }
            }
            out.extend(row);
        }
        FeatureMatrix::new(z.rows(), self.mean.len(), out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::new(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn covariance(x: &FeatureMatrix) -> Vec<Vec<f64>> {
        let (n, p) = (x.rows(), x.cols());
        let mean: Vec<f64> = (0..p)
            .map(|j| (0..n).map(|i| x.row(i)[j]).sum::<f64>() / n as f64)
            .collect();
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        (0..n)
                            .map(|i| (x.row(i)[a] - mean[a]) * (x.row(i)[b] - mean[b]))
                            .sum::<f64>()
                            / (n - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Number of eigenvalues below `sigma`: negative pivots of the LDLᵀ
    /// factorisation of A - σI (Sylvester's law of inertia).
    fn count_below(a: &[Vec<f64>], sigma: f64) -> usize {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= sigma;
        }
        let mut negative = 0;
        for k in 0..n {
            let pivot = m[k][k];
            if pivot < 0.0 {
                negative += 1;
            }
            for i in k + 1..n {
                let f = m[i][k] / pivot;
                let (upper, lower) = m.split_at_mut(i);
                for (a, b) in lower[0][k..].iter_mut().zip(&upper[k][k..]) {
                    *a -= f * b;
                }
            }
        }
        negative
    }

    /// Eigenvalues, descending, located by bisection on the inertia count.
    fn eigen_oracle(a: &[Vec<f64>]) -> Vec<f64> {
        let n = a.len();
        // Gershgorin bound.
        let r = a
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        (0..n)
            .map(|k| {
                // Find the (k+1)-th largest: count_below(σ) crosses n-1-k.
                let target = n - k;
                let (mut lo, mut hi) = (-r - 1.0, r + 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if count_below(a, mid) >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    fn assert_orthonormal(m: &PcaModel, tol: f64) {
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < tol, "<{i},{j}> = {dot}");
            }
        }
    }

    #[test]
    fn matches_inertia_oracle_on_5d_data() {
        let x = random_matrix(40, 5, 17);
        let model = PcaModel::fit(&x, 5).unwrap();
        let oracle = eigen_oracle(&covariance(&x));
        for (got, want) in model.variances.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert_orthonormal(&model, 1e-8);
    }

    #[test]
    fn eigen_residual_is_small() {
        let x = random_matrix(30, 6, 5);
        let cov = covariance(&x);
        let model = PcaModel::fit(&x, 6).unwrap();
        for (v, lambda) in model.components.iter().zip(&model.variances) {
            for (row, vi) in cov.iter().zip(v) {
                let av: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                assert!((av - lambda * vi).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn collinear_points_give_the_line_direction() {
        // Points on the line through (1, 2) with direction (3, 4)/5.
        let rows: Vec<Vec<f64>> = (-3..=3)
            .map(|t| vec![1.0 + 3.0 * t as f64, 2.0 + 4.0 * t as f64])
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let model = PcaModel::fit(&x, 2).unwrap();
        assert!(model.truncated);
        assert_eq!(model.components.len(), 1);
        let c = &model.components[0];
        assert!((c[0] - 0.6).abs() < 1e-12 && (c[1] - 0.8).abs() < 1e-12);
        // Variance along the line: 25 * var(t) with var(-3..=3) = 28/6.
        assert!((model.variances[0] - 25.0 * 28.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn full_basis_reconstructs() {
        let x = random_matrix(12, 4, 2);
        let model = PcaModel::fit(&x, 4).unwrap();
        let back = model.reconstruct(&model.transform(&x).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_projects_to_zero_and_variances_descend() {
        let x = random_matrix(25, 8, 9);
        let model = PcaModel::fit(&x, 5).unwrap();
        let mean = FeatureMatrix::new(1, 8, model.mean.clone()).unwrap();
        assert!(model
            .transform(&mean)
            .unwrap()
            .data()
            .iter()
            .all(|v| v.abs() < 1e-12));
        assert!(model.variances.windows(2).all(|w| w[0] >= w[1]));
        assert!(model.variances.iter().all(|&v| v >= 0.0));
        assert_orthonormal(&model, 1e-8);
    }

    #[test]
    fn deterministic_and_validated() {
        let x = random_matrix(10, 3, 1);
        assert_eq!(PcaModel::fit(&x, 2).unwrap(), PcaModel::fit(&x, 2).unwrap());
        assert!(PcaModel::fit(&x, 0).is_err());
        assert!(PcaModel::fit(&x, 4).is_err());
        let empty = FeatureMatrix::new(0, 3, vec![]).unwrap();
        assert!(matches!(
            PcaModel::fit(&empty, 1),
            Err(LearnerError::EmptyTrainingSet)
        ));
    }
}
