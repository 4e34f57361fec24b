//! Binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "NPML"  u16 version  model
//! model := u8 tag, payload
//!   tag 1 knn:     u32 k, matrix, labels
//!   tag 2 logreg:  labels (classes), u32 n_features, f64s weights, f64s bias
//!   tag 3 tree:    u32 n_features, u32 n_nodes, node*
//!   tag 4 pca:     f64s mean, u32 d, f64s* d components, f64s variances, u8 truncated, model
//! matrix := u32 rows, u32 cols, f64 * rows*cols
//! labels := u32 n, u8 * n
//! f64s   := u32 n, f64 * n
//! node   := u8 0, u8 label | u8 1, u32 feature, f64 threshold, u32 left, u32 right
//! ```

use super::{FeatureMatrix, KnnModel, LearnerError, LogregModel, Model, Node, PcaModel, TreeModel};

pub const MAGIC: &[u8; 4] = b"NPML";
pub const VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("model dimension fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u32(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }
    fn labels(&mut self, v: &[u8]) {
        self.u32(v.len());
        self.0.extend_from_slice(v);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], LearnerError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LearnerError::Format("truncated model file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, LearnerError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize, LearnerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    fn f64(&mut self) -> Result<f64, LearnerError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    /// Length prefix, checked against the bytes left before allocating.
    fn len(&mut self, elem: usize) -> Result<usize, LearnerError> {
        let n = self.u32()?;
        if n.saturating_mul(elem) > self.bytes.len() - self.pos {
            return Err(LearnerError::Format("truncated model file".into()));
        }
        Ok(n)
    }
    fn f64s(&mut self) -> Result<Vec<f64>, LearnerError> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn labels(&mut self) -> Result<Vec<u8>, LearnerError> {
        let n = self.len(1)?;
        Ok(self.take(n)?.to_vec())
    }
}

fn write_model(w: &mut Writer, model: &Model) {
    match model {
        Model::Knn(m) => {
            w.u8(1);
            w.u32(m.k);
            w.u32(m.train.rows());
            w.u32(m.train.cols());
            m.train.data().iter().for_each(|&x| w.f64(x));
            w.labels(&m.labels);
        }
        Model::Logreg(m) => {
            w.u8(2);
            w.labels(&m.classes);
            w.u32(m.n_features);
            w.f64s(&m.weights);
            w.f64s(&m.bias);
        }
        Model::Tree(m) => {
            w.u8(3);
            w.u32(m.n_features);
            w.u32(m.nodes.len());
            for node in &m.nodes {
                match *node {
                    Node::Leaf { label } => {
                        w.u8(0);
                        w.u8(label);
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        w.u8(1);
                        w.u32(feature);
                        w.f64(threshold);
                        w.u32(left);
                        w.u32(right);
                    }
                }
            }
        }
        Model::Pca(pca, inner) => {
            w.u8(4);
            w.f64s(&pca.mean);
            w.u32(pca.components.len());
            pca.components.iter().for_each(|c| w.f64s(c));
            w.f64s(&pca.variances);
            w.u8(u8::from(pca.truncated));
            write_model(w, inner);
        }
    }
}

fn bad(msg: &str) -> LearnerError {
    LearnerError::Format(msg.to_string())
}

fn read_model(r: &mut Reader, depth: usize) -> Result<Model, LearnerError> {
    match r.u8()? {
        1 => {
            let k = r.u32()?;
            let rows = r.u32()?;
            let cols = r.u32()?;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| bad("matrix too large"))?;
            if n.saturating_mul(8) > r.bytes.len() - r.pos {
                return Err(bad("truncated model file"));
            }
            let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            let labels = r.labels()?;
            let train = FeatureMatrix::new(rows, cols, data)?;
            Ok(Model::Knn(KnnModel::fit(&train, &labels, k)?))
        }
        2 => {
            let classes = r.labels()?;
            let n_features = r.u32()?;
            let weights = r.f64s()?;
            let bias = r.f64s()?;
            if weights.len() != classes.len() * n_features
                || bias.len() != classes.len()
                || classes.len() < 2
            {
                return Err(bad("inconsistent logistic-regression shapes"));
            }
            Ok(Model::Logreg(LogregModel {
                classes,
                n_features,
                weights,
                bias,
                loss_history: Vec::new(),
            }))
        }
        3 => {
            let n_features = r.u32()?;
            let n = r.len(2)?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                nodes.push(match r.u8()? {
                    0 => Node::Leaf { label: r.u8()? },
                    1 => Node::Split {
                        feature: r.u32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    _ => return Err(bad("unknown node kind")),
                });
            }
            // Children must point forward, which also rules out cycles.
            let valid = !nodes.is_empty()
                && nodes.iter().enumerate().all(|(i, node)| match *node {
                    Node::Leaf { .. } => true,
                    Node::Split {
                        feature,
                        left,
                        right,
                        ..
                    } => feature < n_features && left > i && right > i && left < n && right < n,
                });
            if !valid {
                return Err(bad("malformed tree"));
            }
            Ok(Model::Tree(TreeModel { n_features, nodes }))
        }
        4 if depth == 0 => {
            let mean = r.f64s()?;
            let d = r.len(4)?;
            let components = (0..d).map(|_| r.f64s()).collect::<Result<Vec<_>, _>>()?;
            let variances = r.f64s()?;
            let truncated = r.u8()? != 0;
            if components.iter().any(|c| c.len() != mean.len()) || variances.len() != d {
                return Err(bad("inconsistent projection shapes"));
            }
            let inner = read_model(r, depth + 1)?;
            Ok(Model::Pca(
                Box::new(PcaModel {
                    mean,
                    components,
                    variances,
                    truncated,
                }),
                Box::new(inner),
            ))
        }
        tag => Err(LearnerError::Format(format!("unknown model tag {tag}"))),
    }
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let mut w = Writer(MAGIC.to_vec());
    w.0.extend_from_slice(&VERSION.to_le_bytes());
    write_model(&mut w, model);
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<Model, LearnerError> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(bad("not a model file"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(LearnerError::UnsupportedVersion(version));
    }
    let mut r = Reader { bytes, pos: 6 };
    let model = read_model(&mut r, 0)?;
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after model"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LogregParams, TreeParams};

    fn data() -> (FeatureMatrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64 / 12.0, ((i * 7) % 5) as f64 / 5.0, 0.5])
            .collect();
        let labels = (0..12).map(|i| (i % 3) as u8).collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    fn round_trip(m: &Model) {
        let bytes = encode_model(m);
        let back = decode_model(&bytes).unwrap();
        let (x, _) = data();
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn every_kind_round_trips() {
        let (x, y) = data();
        round_trip(&Model::Knn(KnnModel::fit(&x, &y, 3).unwrap()));
        let lr = LogregParams {
            epochs: 20,
            ..LogregParams::default()
        };
        round_trip(&Model::Logreg(LogregModel::fit(&x, &y, &lr).unwrap()));
        round_trip(&Model::Tree(
            TreeModel::fit(&x, &y, &TreeParams::default()).unwrap(),
        ));
        let pca = PcaModel::fit(&x, 2).unwrap();
        let z = pca.transform(&x).unwrap();
        let inner = Model::Knn(KnnModel::fit(&z, &y, 1).unwrap());
        round_trip(&Model::Pca(Box::new(pca), Box::new(inner)));
    }

    #[test]
    fn header_is_magic_then_version() {
        let (x, y) = data();
        let bytes = encode_model(&Model::Knn(KnnModel::fit(&x, &y, 1).unwrap()));
        assert_eq!(&bytes[..6], b"NPML\x01\x00");
        assert_eq!(bytes[6], 1);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let (x, y) = data();
        let bytes = encode_model(&Model::Tree(
            TreeModel::fit(&x, &y, &TreeParams::default()).unwrap(),
        ));
        for cut in [0, 3, 6, 7, bytes.len() - 1] {
            assert!(
                matches!(decode_model(&bytes[..cut]), Err(LearnerError::Format(_))),
                "cut {cut}"
            );
        }
        let mut future = bytes.clone();
        future[4] = 2;
        assert!(matches!(
            decode_model(&future),
            Err(LearnerError::UnsupportedVersion(2))
        ));
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_model(&extra).is_err());
    }
}
