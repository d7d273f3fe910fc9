//! MIQUBO: mutual information (diagonal) and symmetrized conditional mutual
//! information (off-diagonal) between binarized features and labels.
//!
//! All estimates are plug-in, in nats; empty contingency cells contribute 0.

use super::{CoefficientMatrix, QuboError};
use crate::dataset::{ItemFeatureMatrix, LabeledSample};
use crate::par::Execution;

/// Sample-indexed bitset.
#[derive(Debug, Clone)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn new(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn set(&mut self, t: usize) {
        self.words[t / 64] |= 1 << (t % 64);
    }

    fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

fn entropy_term(joint: u64, num: f64, den: f64, n: f64) -> f64 {
    if joint == 0 {
        return 0.0;
    }
    let j = joint as f64;
    j / n * (j * num / den).ln()
}

/// `I(X; Y)` from a 2x2 count table indexed `[x][y]`.
fn mi_from_counts(c: [[u64; 2]; 2]) -> f64 {
    let n = (c[0][0] + c[0][1] + c[1][0] + c[1][1]) as f64;
    let px = [c[0][0] + c[0][1], c[1][0] + c[1][1]];
    let py = [c[0][0] + c[1][0], c[0][1] + c[1][1]];
    let mut acc = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            acc += entropy_term(c[x][y], n, (px[x] * py[y]) as f64, n);
        }
    }
    acc
}

/// `I(X; Y | Z)` from a 2x2x2 count table indexed `[x][y][z]`.
fn cmi_from_counts(c: [[[u64; 2]; 2]; 2]) -> f64 {
    let n: u64 = c.iter().flatten().flatten().sum();
    let n = n as f64;
    let mut acc = 0.0;
    for z in 0..2 {
        let cz: u64 = (0..2)
            .flat_map(|x| (0..2).map(move |y| (x, y)))
            .map(|(x, y)| c[x][y][z])
            .sum();
        for x in 0..2 {
            let cxz = c[x][0][z] + c[x][1][z];
            for y in 0..2 {
                let cyz = c[0][y][z] + c[1][y][z];
                acc += entropy_term(c[x][y][z], cz as f64, (cxz * cyz) as f64, n);
            }
        }
    }
    acc
}

/// Plug-in `I(X; Y)` for binary sequences.
pub fn mutual_information(x: &[u8], y: &[u8]) -> f64 {
    let mut c = [[0u64; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        c[a as usize][b as usize] += 1;
    }
    mi_from_counts(c)
}

/// Plug-in `I(X; Y | Z)` for binary sequences.
pub fn conditional_mutual_information(x: &[u8], y: &[u8], z: &[u8]) -> f64 {
    let mut c = [[[0u64; 2]; 2]; 2];
    for ((&a, &b), &d) in x.iter().zip(y).zip(z) {
        c[a as usize][b as usize][d as usize] += 1;
    }
    cmi_from_counts(c)
}

/// 2x2x2 table `[x][y][z]` from bitsets, via popcounts over complements.
fn joint_counts(x: &Bits, y: &Bits, z: &Bits, valid: &Bits) -> [[[u64; 2]; 2]; 2] {
    let mut c = [[[0u64; 2]; 2]; 2];
    for w in 0..valid.words.len() {
        let m = valid.words[w];
        let xs = [!x.words[w] & m, x.words[w]];
        let ys = [!y.words[w] & m, y.words[w]];
        let zs = [!z.words[w] & m, z.words[w]];
        for a in 0..2 {
            for b in 0..2 {
                let ab = xs[a] & ys[b];
                for d in 0..2 {
                    c[a][b][d] += (ab & zs[d]).count_ones() as u64;
                }
            }
        }
    }
    c
}

/// Binarized feature columns (nonzero -> 1) and label bits per sample.
fn binarize(features: &ItemFeatureMatrix, samples: &[LabeledSample]) -> (Vec<Bits>, Bits, Bits) {
    let n = samples.len();
    let mut cols = vec![Bits::new(n); features.num_features()];
    let mut labels = Bits::new(n);
    let mut valid = Bits::new(n);
    for (t, s) in samples.iter().enumerate() {
        valid.set(t);
        if s.label == 1 {
            labels.set(t);
        }
        for &(f, _) in features.row(s.item) {
            cols[f].set(t);
        }
    }
    (cols, labels, valid)
}

pub fn build_miqubo(
    features: &ItemFeatureMatrix,
    samples: &[LabeledSample],
    exec: Execution,
) -> Result<CoefficientMatrix, QuboError> {
    if samples.is_empty() {
        return Err(QuboError::TooFewSamples { needed: 1, got: 0 });
    }
    let (cols, labels, valid) = binarize(features, samples);
    let positives = labels.count();
    if positives == 0 {
        return Err(QuboError::UninformativeLabels(0));
    }
    if positives == samples.len() as u64 {
        return Err(QuboError::UninformativeLabels(1));
    }
    let n = features.num_features();
    let rows = exec.map_range(n, |i| {
        let mut row = vec![0.0; n];
        for (j, slot) in row.iter_mut().enumerate().skip(i) {
            let c = joint_counts(&cols[i], &labels, &cols[j], &valid);
            *slot = if i == j {
                let mut xy = [[0u64; 2]; 2];
                for x in 0..2 {
                    for y in 0..2 {
                        xy[x][y] = c[x][y][0] + c[x][y][1];
                    }
                }
                -mi_from_counts(xy)
            } else {
                // I(f_i; y | f_j) and I(f_j; y | f_i) share one table.
                let mut swapped = [[[0u64; 2]; 2]; 2];
                for x in 0..2 {
                    for y in 0..2 {
                        for z in 0..2 {
                            swapped[z][y][x] = c[x][y][z];
                        }
                    }
                }
                -(cmi_from_counts(c) + cmi_from_counts(swapped)) / 2.0
            };
        }
        row
    });
    let mut q = CoefficientMatrix::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        for j in i..n {
            q.set(i, j, row[j]);
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(items: &[usize], labels: &[u8]) -> Vec<LabeledSample> {
        items
            .iter()
            .zip(labels)
            .map(|(&item, &label)| LabeledSample { user: 0, item, label })
            .collect()
    }

    #[test]
    fn constant_feature_has_zero_relevance() {
        // feature 0 on every item, feature 1 on item 0 only
        let f = ItemFeatureMatrix::from_triplets(2, 2, [(0, 0, 1.0), (1, 0, 3.0), (0, 1, 1.0)]).unwrap();
        let q = build_miqubo(&f, &samples(&[0, 1, 0, 1], &[1, 0, 0, 1]), Execution::Sequential).unwrap();
        assert_eq!(q.get(0, 0), 0.0);
    }

    #[test]
    fn feature_equal_to_label_gives_minus_entropy() {
        let f = ItemFeatureMatrix::from_triplets(2, 1, [(0, 0, 2.0)]).unwrap();
        let q = build_miqubo(&f, &samples(&[0, 1, 0, 1], &[1, 0, 1, 0]), Execution::Sequential).unwrap();
        assert!((q.get(0, 0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_labels_rejected() {
        let f = ItemFeatureMatrix::from_triplets(2, 1, [(0, 0, 2.0)]).unwrap();
        let err = build_miqubo(&f, &samples(&[0, 1], &[1, 1]), Execution::Sequential).unwrap_err();
        assert!(err.to_string().contains("uninformative labels"));
        assert!(build_miqubo(&f, &[], Execution::Sequential).is_err());
    }

    #[test]
    fn independent_sequences_have_zero_mi() {
        let x = [0, 0, 1, 1];
        let y = [0, 1, 0, 1];
        assert!(mutual_information(&x, &y).abs() < 1e-15);
        assert!((mutual_information(&x, &x) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(conditional_mutual_information(&x, &x, &x).abs() < 1e-15);
    }
}
