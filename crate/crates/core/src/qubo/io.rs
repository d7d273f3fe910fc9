//! Q-matrix JSON files and the `i j value` triplet wire format.

use super::{CoefficientMatrix, QuboError, QuboProblem};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write;
use std::path::Path;

/// `{size, format: "dense-sym", values}` with `values` the lower triangle,
/// diagonal included, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMatrixFile {
    pub size: usize,
    pub format: String,
    pub values: Vec<f64>,
}

const DENSE_SYM: &str = "dense-sym";

impl From<&CoefficientMatrix> for QMatrixFile {
    fn from(q: &CoefficientMatrix) -> Self {
        let n = q.size();
        let values = (0..n)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .map(|(i, j)| q.get(i, j))
            .collect();
        Self {
            size: n,
            format: DENSE_SYM.into(),
            values,
        }
    }
}

impl QMatrixFile {
    pub fn into_matrix(self) -> Result<CoefficientMatrix, QuboError> {
        if self.format != DENSE_SYM {
            return Err(QuboError::Format(format!("unsupported format {:?}", self.format)));
        }
        let n = self.size;
        if self.values.len() != n * (n + 1) / 2 {
            return Err(QuboError::Format(format!(
                "{} values for a lower triangle of size {n}",
                self.values.len()
            )));
        }
        let mut q = CoefficientMatrix::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in 0..=i {
                q.set(i, j, self.values[k]);
                k += 1;
            }
        }
        Ok(q)
    }

    pub fn save(&self, path: &Path) -> Result<(), QuboError> {
        let text = serde_json::to_string(self).map_err(|e| QuboError::Format(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| QuboError::Format(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, QuboError> {
        let text = std::fs::read_to_string(path).map_err(|e| QuboError::Format(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| QuboError::Format(format!("{}: {e}", path.display())))
    }
}

/// Serializes a problem as `qubo n=<size> k=<k|*> w=<weight>` followed by
/// one `i j value` line per nonzero energy coefficient (`i <= j`). Values
/// are coefficients of `x_i x_j` in the energy, so a symmetric-convention
/// pair is written as `Q_ij + Q_ji`.
pub fn write_triplets(problem: &QuboProblem) -> String {
    let n = problem.size();
    let k = problem.k.map_or_else(|| "*".to_string(), |k| k.to_string());
    let mut out = format!("qubo n={n} k={k} w={:?}\n", problem.penalty_weight);
    let (linear, pair) = problem.couplings();
    for i in 0..n {
        if linear[i] != 0.0 {
            writeln!(out, "{i} {i} {:?}", linear[i]).unwrap();
        }
        for j in i + 1..n {
            let c = pair[i * n + j];
            if c != 0.0 {
                writeln!(out, "{i} {j} {c:?}").unwrap();
            }
        }
    }
    out
}

fn header_field<'a>(token: Option<&'a str>, key: &str) -> Result<&'a str, QuboError> {
    token
        .and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| QuboError::Format(format!("header is missing `{key}=`")))
}

/// Parses the triplet format back into a symmetric-convention problem.
pub fn parse_triplets(text: &str) -> Result<QuboProblem, QuboError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| QuboError::Format("empty triplet stream".into()))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("qubo") {
        return Err(QuboError::Format(format!("bad header {header:?}")));
    }
    let n: usize = header_field(tokens.next(), "n")?
        .parse()
        .map_err(|_| QuboError::Format("bad n".into()))?;
    let k = match header_field(tokens.next(), "k")? {
        "*" => None,
        s => Some(s.parse().map_err(|_| QuboError::Format("bad k".into()))?),
    };
    let w: f64 = header_field(tokens.next(), "w")?
        .parse()
        .map_err(|_| QuboError::Format("bad w".into()))?;

    let mut q = CoefficientMatrix::zeros(n);
    let mut seen = HashSet::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || QuboError::Format(format!("bad triplet line {line:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let i: usize = parts[0].parse().map_err(|_| bad())?;
        let j: usize = parts[1].parse().map_err(|_| bad())?;
        let v: f64 = parts[2].parse().map_err(|_| bad())?;
        if i > j || j >= n || !v.is_finite() || !seen.insert((i, j)) {
            return Err(bad());
        }
        q.set(i, j, if i == j { v } else { v / 2.0 });
    }
    QuboProblem::new(q, k)?.with_penalty(w)
}
