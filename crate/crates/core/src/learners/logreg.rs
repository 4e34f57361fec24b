use super::features::check_labels;
use super::{FeatureMatrix, LearnerError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogregParams {
    pub epochs: usize,
    /// Largest step tried each epoch; halved until the loss does not rise.
    pub lr: f64,
    pub l2: f64,
}

impl Default for LogregParams {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.5,
            l2: 1e-4,
        }
    }
}

/// Multinomial softmax classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LogregModel {
    /// Sorted distinct training labels; row `c` of `weights` scores `classes[c]`.
    pub classes: Vec<u8>,
    pub n_features: usize,
    /// `classes.len() × n_features`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Full-batch objective before the first update and after every epoch.
    pub loss_history: Vec<f64>,
}

/// Mean cross-entropy plus `l2/2·‖W‖²` (bias unpenalised) and its gradient
/// with respect to `(weights, bias)`. `targets` index into the class rows.
pub fn objective(
    x: &FeatureMatrix,
    targets: &[usize],
    n_classes: usize,
    weights: &[f64],
    bias: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let (n, p) = (x.rows(), x.cols());
    let mut grad_w = vec![0.0; n_classes * p];
    let mut grad_b = vec![0.0; n_classes];
    let mut loss = 0.0;
    let mut z = vec![0.0; n_classes];
    for (i, &t) in targets.iter().enumerate() {
        let row = x.row(i);
        for (c, zc) in z.iter_mut().enumerate() {
            *zc = bias[c]
                + weights[c * p..(c + 1) * p]
                    .iter()
                    .zip(row)
                    .map(|(w, v)| w * v)
                    .sum::<f64>();
        }
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = z.iter().map(|v| (v - top).exp()).sum();
        let log_norm = top + norm.ln();
        loss -= z[t] - log_norm;
        for c in 0..n_classes {
            let residual = (z[c] - log_norm).exp() - if c == t { 1.0 } else { 0.0 };
            grad_b[c] += residual;
            for (g, v) in grad_w[c * p..(c + 1) * p].iter_mut().zip(row) {
                *g += residual * v;
            }
        }
    }
    let scale = 1.0 / n as f64;
    loss *= scale;
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g * scale + l2 * w;
    }
    grad_b.iter_mut().for_each(|g| *g *= scale);
    (loss, grad_w, grad_b)
}

impl LogregModel {
    pub fn fit(
        x: &FeatureMatrix,
        labels: &[u8],
        params: &LogregParams,
    ) -> Result<Self, LearnerError> {
        check_labels(x, labels)?;
        if x.rows() == 0 {
            return Err(LearnerError::EmptyTrainingSet);
        }
        if !(params.lr > 0.0 && params.l2 >= 0.0) {
            return Err(LearnerError::InvalidParameter(
                "lr must be positive and l2 non-negative".into(),
            ));
        }
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(LearnerError::SingleClass);
        }
        let targets: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label collected above"))
            .collect();
        let (k, p) = (classes.len(), x.cols());
        let mut weights = vec![0.0; k * p];
        let mut bias = vec![0.0; k];
        let (mut loss, mut gw, mut gb) = objective(x, &targets, k, &weights, &bias, params.l2);
        let mut loss_history = vec![loss];
        let mut step = params.lr;
        for _ in 0..params.epochs {
            let mut accepted = false;
            for _ in 0..60 {
                let cand_w: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
                let cand_b: Vec<f64> = bias.iter().zip(&gb).map(|(b, g)| b - step * g).collect();
                let (cand_loss, cw, cb) = objective(x, &targets, k, &cand_w, &cand_b, params.l2);
                if cand_loss <= loss {
                    (weights, bias, loss, gw, gb) = (cand_w, cand_b, cand_loss, cw, cb);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // No descent step is representable: at a minimum for practical purposes.
                break;
            }
            loss_history.push(loss);
            step = (step * 2.0).min(params.lr);
        }
        Ok(Self {
            classes,
            n_features: p,
            weights,
            bias,
            loss_history,
        })
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let p = self.n_features;
        (0..self.classes.len())
            .map(|c| {
                self.bias[c]
                    + self.weights[c * p..(c + 1) * p]
                        .iter()
                        .zip(row)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>, LearnerError> {
        if x.cols() != self.n_features {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        Ok((0..x.rows())
            .map(|i| {
                let s = self.scores(x.row(i));
                // Softmax is monotone, so argmax of the scores; first (smallest label) wins ties.
                let mut best = 0;
                for c in 1..s.len() {
                    if s[c] > s[best] {
                        best = c;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_class_is_rejected() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            LogregModel::fit(&x, &[4, 4], &LogregParams::default()),
            Err(LearnerError::SingleClass)
        ));
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 / 20.0;
                if i % 2 == 0 {
                    vec![t, 1.0 - t * 0.5]
                } else {
                    vec![t, -0.2 - t * 0.5]
                }
            })
            .collect();
        let labels: Vec<u8> = (0..20).map(|i| if i % 2 == 0 { 3 } else { 8 }).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let model = LogregModel::fit(&x, &labels, &LogregParams::default()).unwrap();
        assert_eq!(model.predict(&x).unwrap(), labels);
        assert_eq!(model.classes, vec![3, 8]);
    }

    fn random_instance(seed: u64) -> (FeatureMatrix, Vec<usize>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x =
            FeatureMatrix::new(4, 3, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let targets = vec![0, 1, 2, 1];
        let w: Vec<f64> = (0..9).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
        (x, targets, w, b)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-5;
        for seed in 0..5 {
            let (x, t, w, b) = random_instance(seed);
            let l2 = 0.1;
            let (_, gw, gb) = objective(&x, &t, 3, &w, &b, l2);
            let mut worst: f64 = 0.0;
            let mut check = |analytic: f64, plus: f64, minus: f64| {
                let numeric = (plus - minus) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            };
            for j in 0..w.len() {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[j] += h;
                wm[j] -= h;
                check(
                    gw[j],
                    objective(&x, &t, 3, &wp, &b, l2).0,
                    objective(&x, &t, 3, &wm, &b, l2).0,
                );
            }
            for j in 0..b.len() {
                let (mut bp, mut bm) = (b.clone(), b.clone());
                bp[j] += h;
                bm[j] -= h;
                check(
                    gb[j],
                    objective(&x, &t, 3, &w, &bp, l2).0,
                    objective(&x, &t, 3, &w, &bm, l2).0,
                );
            }
            assert!(worst <= 1e-4, "seed {seed}: relative error {worst}");
        }
    }

    #[test]
    fn loss_never_rises_and_fit_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = FeatureMatrix::new(60, 30, (0..1800).map(|_| rng.gen_range(0.0..1.0)).collect())
            .unwrap();
        let labels: Vec<u8> = (0..60).map(|i| (i % 4) as u8).collect();
        let params = LogregParams {
            epochs: 50,
            ..LogregParams::default()
        };
        let a = LogregModel::fit(&x, &labels, &params).unwrap();
        assert!(a.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(a.loss_history.last() < a.loss_history.first());
        assert_eq!(a, LogregModel::fit(&x, &labels, &params).unwrap());
    }

    #[test]
    fn score_ties_go_to_the_smaller_label() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let mut model = LogregModel::fit(&x, &[2, 6], &LogregParams::default()).unwrap();
        model.weights = vec![0.0, 0.0];
        model.bias = vec![0.0, 0.0];
        assert_eq!(model.predict(&x).unwrap(), vec![2, 2]);
    }
}
