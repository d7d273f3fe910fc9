//! QUBO problems: coefficient matrices, the cardinality-penalized energy and
//! the matrix builders.

mod boosting;
mod correlation;
mod io;
mod mutual_info;

pub use boosting::{build_boosting, single_feature_predictions, WeakPredictions};
pub use correlation::build_coqubo;
pub use io::{parse_triplets, write_triplets, QMatrixFile};
pub use mutual_info::{build_miqubo, conditional_mutual_information, mutual_information};

use crate::counterfactual::{CounterfactualProfile, PairMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum QuboError {
    #[error("dimension mismatch: problem has {expected} variables, solution has {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("non-finite coefficient at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("asymmetric coefficients at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("cardinality target {k} exceeds problem size {size}")]
    Cardinality { k: usize, size: usize },
    #[error("uninformative labels: every sample has label {0}")]
    UninformativeLabels(u8),
    #[error("need at least {needed} labeled samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid penalty weight {0}")]
    Penalty(f64),
    #[error("format error: {0}")]
    Format(String),
}

/// Dense symmetric coefficient matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatrix {
    size: usize,
    values: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            values: vec![0.0; size * size],
        }
    }

    /// Wraps a row-major `size x size` buffer. Symmetry is checked by
    /// [`validate`], not here.
    pub fn from_row_major(size: usize, values: Vec<f64>) -> Result<Self, QuboError> {
        if values.len() != size * size {
            return Err(QuboError::Format(format!(
                "{} values for a {size}x{size} matrix",
                values.len()
            )));
        }
        Ok(Self { size, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, QuboError> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(QuboError::Format("matrix rows must all have length n".into()));
        }
        Ok(Self {
            size,
            values: rows.concat(),
        })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.size + j] = v;
        self.values[j * self.size + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            size: self.size,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// How an off-diagonal entry enters `x^T Q x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairConvention {
    /// Full quadratic form: a selected pair contributes `Q_ij + Q_ji`.
    #[default]
    Symmetric,
    /// Upper triangle only: a selected pair contributes `Q_ij` once.
    UpperTriangular,
}

/// Coefficient matrix plus an optional cardinality target.
///
/// `penalty_weight = +inf` makes the cardinality a hard constraint: any
/// solution with the wrong count has infinite energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboProblem {
    pub q: CoefficientMatrix,
    pub k: Option<usize>,
    pub penalty_weight: f64,
    #[serde(default)]
    pub convention: PairConvention,
}

impl QuboProblem {
    pub fn new(q: CoefficientMatrix, k: Option<usize>) -> Result<Self, QuboError> {
        if let Some(k) = k {
            if k > q.size() {
                return Err(QuboError::Cardinality { k, size: q.size() });
            }
        }
        Ok(Self {
            q,
            k,
            penalty_weight: 1.0,
            convention: PairConvention::Symmetric,
        })
    }

    pub fn with_penalty(mut self, weight: f64) -> Result<Self, QuboError> {
        if weight.is_nan() || weight < 0.0 {
            return Err(QuboError::Penalty(weight));
        }
        self.penalty_weight = weight;
        Ok(self)
    }

    /// Penalty weight `max(1, max|Q| * size)`, large enough to dominate the
    /// quadratic form.
    pub fn with_auto_penalty(mut self) -> Self {
        self.penalty_weight = auto_penalty_weight(&self.q);
        log::debug!("auto-scaled penalty weight to {}", self.penalty_weight);
        self
    }

    pub fn with_convention(mut self, convention: PairConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn size(&self) -> usize {
        self.q.size()
    }

    pub fn is_hard(&self) -> bool {
        self.k.is_some() && self.penalty_weight.is_infinite()
    }

    /// Linear coefficients and symmetric pair couplings such that
    /// `energy = sum a_i x_i + sum_{i<j} J_ij x_i x_j + penalty`.
    pub(crate) fn couplings(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.size();
        let linear = (0..n).map(|i| self.q.get(i, i)).collect();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = match self.convention {
                    PairConvention::Symmetric => self.q.get(i, j) + self.q.get(j, i),
                    PairConvention::UpperTriangular => self.q.get(i, j),
                };
                pair[i * n + j] = c;
                pair[j * n + i] = c;
            }
        }
        (linear, pair)
    }
}

pub fn auto_penalty_weight(q: &CoefficientMatrix) -> f64 {
    (q.max_abs() * q.size() as f64).max(1.0)
}

/// Binary selection vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinarySolution {
    bits: Vec<u8>,
}

impl BinarySolution {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn from_bits(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits }
    }

    pub fn from_indices(n: usize, selected: &[usize]) -> Self {
        let mut bits = vec![0; n];
        for &i in selected {
            bits[i] = 1;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i] == 1).collect()
    }
}

impl std::fmt::Display for BinarySolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, b) in self.bits.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Penalized energy `x^T Q x + w (sum x - k)^2`; the penalty is omitted when
/// `k` is absent.
pub fn energy(problem: &QuboProblem, x: &BinarySolution) -> Result<f64, QuboError> {
    let n = problem.size();
    if x.len() != n {
        return Err(QuboError::Dimension {
            expected: n,
            actual: x.len(),
        });
    }
    let ones: Vec<usize> = x.selected();
    let mut acc = 0.0;
    match problem.convention {
        PairConvention::Symmetric => {
            for &i in &ones {
                let row = problem.q.row(i);
                for &j in &ones {
                    acc += row[j];
                }
            }
        }
        PairConvention::UpperTriangular => {
            for (a, &i) in ones.iter().enumerate() {
                let row = problem.q.row(i);
                acc += row[i];
                for &j in &ones[a + 1..] {
                    acc += row[j];
                }
            }
        }
    }
    Ok(acc + penalty(problem, ones.len()))
}

/// Penalty term for a solution with `ones` selected variables.
pub(crate) fn penalty(problem: &QuboProblem, ones: usize) -> f64 {
    match problem.k {
        None => 0.0,
        Some(k) => {
            let gap = ones as f64 - k as f64;
            if problem.penalty_weight.is_infinite() {
                if gap == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                problem.penalty_weight * gap * gap
            }
        }
    }
}

/// PDQUBO coefficients: `Q_ii = -E_i`, `Q_ij = -E_ij`. Indiv profiles carry
/// zero pair deltas and so yield a diagonal matrix.
pub fn build_pdqubo(profile: &CounterfactualProfile) -> CoefficientMatrix {
    let n = profile.num_features();
    let mut q = CoefficientMatrix::zeros(n);
    for i in 0..n {
        q.set(i, i, -profile.singles[i]);
        if profile.mode == PairMode::Comb {
            for j in i + 1..n {
                q.set(i, j, -profile.pair(i, j));
            }
        }
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub size: usize,
    pub min: f64,
    pub max: f64,
    pub diagonal_min: f64,
    pub diagonal_max: f64,
    /// Share of rows with `|Q_ii| >= sum_{j != i} |Q_ij|`.
    pub diagonally_dominant_rows: f64,
    pub mean_abs_diagonal: f64,
    pub mean_abs_off_diagonal: f64,
}

/// Checks finiteness and symmetry (to 1e-12) and summarizes the value range.
pub fn validate(q: &CoefficientMatrix) -> Result<ValidationReport, QuboError> {
    let n = q.size();
    for i in 0..n {
        for j in 0..n {
            if !q.get(i, j).is_finite() {
                return Err(QuboError::NonFinite(i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (q.get(i, j), q.get(j, i));
            if (a - b).abs() > 1e-12 {
                return Err(QuboError::Asymmetric { i, j, a, b });
            }
        }
    }
    let mut report = ValidationReport {
        size: n,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        diagonal_min: f64::INFINITY,
        diagonal_max: f64::NEG_INFINITY,
        diagonally_dominant_rows: 0.0,
        mean_abs_diagonal: 0.0,
        mean_abs_off_diagonal: 0.0,
    };
    if n == 0 {
        report.min = 0.0;
        report.max = 0.0;
        report.diagonal_min = 0.0;
        report.diagonal_max = 0.0;
        return Ok(report);
    }
    let mut dominant = 0;
    let mut off_sum = 0.0;
    for i in 0..n {
        let d = q.get(i, i);
        report.diagonal_min = report.diagonal_min.min(d);
        report.diagonal_max = report.diagonal_max.max(d);
        report.mean_abs_diagonal += d.abs();
        let mut row_off = 0.0;
        for j in 0..n {
            let v = q.get(i, j);
            report.min = report.min.min(v);
            report.max = report.max.max(v);
            if j != i {
                row_off += v.abs();
            }
        }
        off_sum += row_off;
        if d.abs() >= row_off {
            dominant += 1;
        }
    }
    report.diagonally_dominant_rows = dominant as f64 / n as f64;
    report.mean_abs_diagonal /= n as f64;
    if n > 1 {
        report.mean_abs_off_diagonal = off_sum / (n * (n - 1)) as f64;
    }
    Ok(report)
}
