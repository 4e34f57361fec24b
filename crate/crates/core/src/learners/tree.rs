use super::features::check_labels;
use super::{FeatureMatrix, LearnerError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or `min_leaf` forbids a split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: Some(12),
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        label: u8,
    },
    /// Rows with `x[feature] < threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier with Gini impurity. `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

fn majority(labels: &[u8], idx: &[usize]) -> u8 {
    let mut counts = [0usize; 256];
    for &i in idx {
        counts[labels[i] as usize] += 1;
    }
    // max_by_key keeps the last maximum; scan in reverse so the smallest label wins.
    (0..256).rev().max_by_key(|&l| counts[l]).unwrap_or(0) as u8
}

/// Σ over both sides of `n - Σ count²/n`, i.e. `n ×` weighted Gini.
fn weighted_gini(
    left: &[usize; 256],
    n_left: usize,
    right: &[usize; 256],
    n_right: usize,
    present: &[u8],
) -> f64 {
    let side = |counts: &[usize; 256], n: usize| {
        let sq: usize = present
            .iter()
            .map(|&l| counts[l as usize] * counts[l as usize])
            .sum();
        n as f64 - sq as f64 / n as f64
    };
    side(left, n_left) + side(right, n_right)
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn best_split(x: &FeatureMatrix, labels: &[u8], idx: &[usize], min_leaf: usize) -> Option<Best> {
    let mut present: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
    present.sort_unstable();
    present.dedup();
    let mut total = [0usize; 256];
    for &i in idx {
        total[labels[i] as usize] += 1;
    }

    let mut best: Option<Best> = None;
    let mut column: Vec<(f64, u8)> = Vec::with_capacity(idx.len());
    for feature in 0..x.cols() {
        column.clear();
        column.extend(idx.iter().map(|&i| (x.row(i)[feature], labels[i])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        if column[0].0 == column[column.len() - 1].0 {
            continue;
        }
        let mut left = [0usize; 256];
        let mut right = total;
        for cut in 1..column.len() {
            let (v, l) = column[cut - 1];
            left[l as usize] += 1;
            right[l as usize] -= 1;
            let next = column[cut].0;
            if v == next || cut < min_leaf || column.len() - cut < min_leaf {
                continue;
            }
            let score = weighted_gini(&left, cut, &right, column.len() - cut, &present);
            // Features and thresholds are visited in ascending order, so only a
            // strict improvement replaces the incumbent.
            if best.as_ref().is_none_or(|b| score < b.score - 1e-9) {
                best = Some(Best {
                    feature,
                    threshold: 0.5 * (v + next),
                    score,
                });
            }
        }
    }
    best
}

impl TreeModel {
    pub fn fit(
        x: &FeatureMatrix,
        labels: &[u8],
        params: &TreeParams,
    ) -> Result<Self, LearnerError> {
        check_labels(x, labels)?;
        if x.rows() == 0 {
            return Err(LearnerError::EmptyTrainingSet);
        }
        if params.min_leaf == 0 {
            return Err(LearnerError::InvalidParameter(
                "min_leaf must be at least 1".into(),
            ));
        }
        let mut nodes = vec![Node::Leaf { label: 0 }];
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, (0..x.rows()).collect::<Vec<_>>(), 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let pure = idx.iter().all(|&i| labels[i] == labels[idx[0]]);
            let depth_left = params.max_depth.is_none_or(|d| depth < d);
            let split = if !pure && depth_left && idx.len() >= 2 * params.min_leaf {
                best_split(x, labels, &idx, params.min_leaf)
            } else {
                None
            };
            match split {
                None => {
                    nodes[slot] = Node::Leaf {
                        label: majority(labels, &idx),
                    }
                }
                Some(b) => {
                    let (lo, hi): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| x.row(i)[b.feature] < b.threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { label: 0 });
                    nodes.push(Node::Leaf { label: 0 });
                    nodes[slot] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right,
                    };
                    stack.push((right, hi, depth + 1));
                    stack.push((left, lo, depth + 1));
                }
            }
        }
        Ok(Self {
            n_features: x.cols(),
            nodes,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] < threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>, LearnerError> {
        if x.cols() != self.n_features {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}
