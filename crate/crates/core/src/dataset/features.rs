use super::interactions::{csv_error, IdMap};
use super::DatasetError;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Sparse item x feature matrix of real values. Zeros are implicit.
///
/// Rows are stored per item, sorted by feature index; the triplet view is
/// therefore ordered by `(item, feature)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFeatureMatrix {
    num_items: usize,
    num_features: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ItemFeatureMatrix {
    pub fn zeros(num_items: usize, num_features: usize) -> Self {
        Self {
            num_items,
            num_features,
            rows: vec![Vec::new(); num_items],
        }
    }

    /// Builds the matrix from `(item, feature, value)` triplets. Explicit
    /// zeros are dropped; duplicates and non-finite values are rejected.
    pub fn from_triplets<I>(num_items: usize, num_features: usize, triplets: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows = vec![Vec::new(); num_items];
        for (item, feature, value) in triplets {
            if item >= num_items || feature >= num_features {
                return Err(DatasetError::OutOfBounds {
                    row: item,
                    col: feature,
                    rows: num_items,
                    cols: num_features,
                });
            }
            if !value.is_finite() {
                return Err(DatasetError::NonFinite { item, feature });
            }
            rows[item].push((feature, value));
        }
        for (item, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(f, _)| f);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(DatasetError::DuplicateCell { item, feature: w[0].0 });
            }
            row.retain(|&(_, v)| v != 0.0);
        }
        Ok(Self {
            num_items,
            num_features,
            rows,
        })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Nonzero `(feature, value)` cells of `item`, ascending by feature.
    pub fn row(&self, item: usize) -> &[(usize, f64)] {
        &self.rows[item]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn sparsity(&self) -> f64 {
        let cells = self.num_items * self.num_features;
        if cells == 0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / cells as f64
    }

    pub fn get(&self, item: usize, feature: usize) -> f64 {
        let row = &self.rows[item];
        row.binary_search_by_key(&feature, |&(f, _)| f)
            .map_or(0.0, |k| row[k].1)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(f, v)| (i, f, v)))
    }

    /// Column view: for each feature, the `(item, value)` cells ascending by item.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.num_features];
        for (i, f, v) in self.triplets() {
            cols[f].push((i, v));
        }
        cols
    }

    pub fn is_zero_column(&self, feature: usize) -> bool {
        self.rows
            .iter()
            .all(|row| row.binary_search_by_key(&feature, |&(f, _)| f).is_err())
    }

    /// Copy with every masked column set to zero.
    pub fn masked(&self, mask: &FeatureMask) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().copied().filter(|&(f, _)| !mask.contains(f)).collect())
            .collect();
        Self {
            num_items: self.num_items,
            num_features: self.num_features,
            rows,
        }
    }

    /// Copy where a `fraction` share of the stored values, chosen uniformly
    /// at random, are set to zero.
    pub fn drop_values<R: rand::Rng>(&self, fraction: f64, rng: &mut R) -> Self {
        let cells: Vec<(usize, usize, f64)> = self.triplets().collect();
        let drop = ((cells.len() as f64) * fraction).round() as usize;
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.shuffle(rng);
        let mut keep = vec![true; cells.len()];
        for &k in &order[..drop.min(cells.len())] {
            keep[k] = false;
        }
        let mut out = Self::zeros(self.num_items, self.num_features);
        for (k, &(i, f, v)) in cells.iter().enumerate() {
            if keep[k] {
                out.rows[i].push((f, v));
            }
        }
        out
    }
}

/// Set of feature indices whose values are zeroed for every item.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    masked: Vec<usize>,
}

impl FeatureMask {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and deduplicates `features`.
    pub fn new(features: impl IntoIterator<Item = usize>) -> Self {
        let mut masked: Vec<usize> = features.into_iter().collect();
        masked.sort_unstable();
        masked.dedup();
        Self { masked }
    }

    pub fn single(feature: usize) -> Self {
        Self { masked: vec![feature] }
    }

    pub fn pair(a: usize, b: usize) -> Self {
        Self::new([a, b])
    }

    /// Mask that keeps only `selected` out of `num_features`.
    pub fn complement_of(selected: &[usize], num_features: usize) -> Self {
        let mut keep = vec![false; num_features];
        for &s in selected {
            keep[s] = true;
        }
        Self {
            masked: (0..num_features).filter(|&f| !keep[f]).collect(),
        }
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.masked.binary_search(&feature).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.masked
    }

    pub fn len(&self) -> usize {
        self.masked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masked.is_empty()
    }

    pub fn validate(&self, num_features: usize) -> Result<(), DatasetError> {
        match self.masked.last() {
            Some(&f) if f >= num_features => Err(DatasetError::OutOfBounds {
                row: 0,
                col: f,
                rows: 1,
                cols: num_features,
            }),
            _ => Ok(()),
        }
    }
}

/// Parses a feature id: a nonnegative integer, optionally after a
/// non-numeric prefix (`"17"` and `"f17"` both map to 17).
fn parse_feature_id(raw: &str) -> Option<usize> {
    raw.trim_start_matches(|c: char| !c.is_ascii_digit()).parse().ok()
}

/// Reads an `item_id,feature_id,value` CSV file. Item ids are resolved
/// through `items`; the feature count is the larger of `num_features` and
/// one past the highest id seen.
pub fn load_features(
    path: impl AsRef<Path>,
    items: &IdMap,
    num_features: Option<usize>,
) -> Result<ItemFeatureMatrix, DatasetError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut triplets = Vec::new();
    let mut width = num_features.unwrap_or(0);
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| DatasetError::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        if record.len() != 3 {
            return Err(parse_err(format!(
                "expected `item_id,feature_id,value`, got {} fields",
                record.len()
            )));
        }
        let item = items
            .get(&record[0])
            .ok_or_else(|| DatasetError::UnknownItem(record[0].to_owned()))?;
        let feature =
            parse_feature_id(&record[1]).ok_or_else(|| parse_err(format!("bad feature id {:?}", &record[1])))?;
        let value: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(format!("bad value {:?}", &record[2])))?;
        if !value.is_finite() {
            return Err(parse_err(format!("non-finite value {:?}", &record[2])));
        }
        width = width.max(feature + 1);
        triplets.push((item, feature, value));
    }
    ItemFeatureMatrix::from_triplets(items.len(), width, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn items(n: usize) -> IdMap {
        let mut m = IdMap::new();
        for i in 1..=n {
            m.intern(&format!("i{i}"));
        }
        m
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn sparsity_of_two_cells() {
        let f = write("item_id,feature_id,value\ni1,f0,1.0\ni1,f2,0.5\n");
        let m = load_features(f.path(), &items(2), None).unwrap();
        assert_eq!(m.num_features(), 3);
        assert!((m.sparsity() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.get(0, 2), 0.5);
        assert!(m.row(1).is_empty());
    }

    #[test]
    fn nan_is_a_parse_error() {
        let f = write("item_id,feature_id,value\ni1,0,NaN\n");
        let err = load_features(f.path(), &items(1), None).unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_file_gives_zero_rows() {
        let f = write("item_id,feature_id,value\n");
        let m = load_features(f.path(), &items(5), Some(4)).unwrap();
        assert_eq!(m.num_items(), 5);
        assert_eq!(m.sparsity(), 1.0);
    }

    #[test]
    fn unknown_item_is_named() {
        let f = write("item_id,feature_id,value\ni9,0,1\n");
        let err = load_features(f.path(), &items(2), None).unwrap_err();
        assert!(err.to_string().contains("i9"));
    }

    #[test]
    fn triplets_sorted_and_zeros_dropped() {
        let m = ItemFeatureMatrix::from_triplets(2, 3, [(1, 2, 1.0), (0, 1, 0.0), (1, 0, 2.0)]).unwrap();
        let t: Vec<_> = m.triplets().collect();
        assert_eq!(t, vec![(1, 0, 2.0), (1, 2, 1.0)]);
        assert!(m.is_zero_column(1));
        assert!(ItemFeatureMatrix::from_triplets(1, 1, [(0, 0, 1.0), (0, 0, 2.0)]).is_err());
    }

    #[test]
    fn masking_and_complement() {
        let m = ItemFeatureMatrix::from_triplets(1, 3, [(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let mask = FeatureMask::complement_of(&[1], 3);
        assert_eq!(mask.indices(), &[0, 2]);
        assert_eq!(m.masked(&mask).row(0), &[(1, 1.0)]);
        assert!(FeatureMask::single(3).validate(3).is_err());
    }
}
