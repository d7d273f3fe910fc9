//! CoQUBO: Pearson relevance to the label on the diagonal, feature-feature
//! redundancy off the diagonal.

use super::{CoefficientMatrix, QuboError};
use crate::dataset::{ItemFeatureMatrix, LabeledSample};
use crate::par::Execution;

/// Mean-centered column and its sum of squares.
fn centered(values: Vec<f64>) -> (Vec<f64>, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let c: Vec<f64> = values.into_iter().map(|v| v - mean).collect();
    let ss = c.iter().map(|v| v * v).sum();
    (c, ss)
}

/// Pearson correlation of two centered columns; 0 if either is constant.
fn pearson(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> f64 {
    if a.1 == 0.0 || b.1 == 0.0 {
        return 0.0;
    }
    let cov: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    (cov / (a.1 * b.1).sqrt()).clamp(-1.0, 1.0)
}

pub fn build_coqubo(
    features: &ItemFeatureMatrix,
    samples: &[LabeledSample],
    exec: Execution,
) -> Result<CoefficientMatrix, QuboError> {
    if samples.len() < 2 {
        return Err(QuboError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = features.num_features();
    let mut raw = vec![vec![0.0; samples.len()]; n];
    for (t, s) in samples.iter().enumerate() {
        for &(f, v) in features.row(s.item) {
            raw[f][t] = v;
        }
    }
    let cols: Vec<(Vec<f64>, f64)> = raw.into_iter().map(centered).collect();
    let label = centered(samples.iter().map(|s| s.label as f64).collect());

    let rows = exec.map_range(n, |i| {
        let mut row = vec![0.0; n];
        row[i] = -pearson(&cols[i], &label).abs();
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            *slot = pearson(&cols[i], &cols[j]).abs();
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
