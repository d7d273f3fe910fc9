use super::DatasetError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Bidirectional mapping between external string ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `id`, assigning the next free one if unseen.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> Option<&str> {
        self.ids.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl From<Vec<String>> for IdMap {
    fn from(ids: Vec<String>) -> Self {
        let index = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { ids, index }
    }
}

impl From<IdMap> for Vec<String> {
    fn from(map: IdMap) -> Self {
        map.ids
    }
}

/// Sparse binary user x item matrix of observed interactions.
///
/// Each user's profile is kept sorted by item index and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    num_users: usize,
    num_items: usize,
    profiles: Vec<Vec<usize>>,
}

impl InteractionMatrix {
    pub fn empty(num_users: usize, num_items: usize) -> Self {
        Self {
            num_users,
            num_items,
            profiles: vec![Vec::new(); num_users],
        }
    }

    /// Builds a matrix from `(user, item)` pairs. Returns the matrix and the
    /// number of duplicate pairs that were dropped.
    pub fn from_pairs<I>(num_users: usize, num_items: usize, pairs: I) -> Result<(Self, usize), DatasetError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut profiles = vec![Vec::new(); num_users];
        for (u, i) in pairs {
            if u >= num_users || i >= num_items {
                return Err(DatasetError::OutOfBounds {
                    row: u,
                    col: i,
                    rows: num_users,
                    cols: num_items,
                });
            }
            profiles[u].push(i);
        }
        let mut duplicates = 0;
        for p in &mut profiles {
            p.sort_unstable();
            let before = p.len();
            p.dedup();
            duplicates += before - p.len();
        }
        Ok((
            Self {
                num_users,
                num_items,
                profiles,
            },
            duplicates,
        ))
    }

    pub(crate) fn from_profiles(num_items: usize, profiles: Vec<Vec<usize>>) -> Self {
        debug_assert!(profiles
            .iter()
            .all(|p| p.windows(2).all(|w| w[0] < w[1]) && p.iter().all(|&i| i < num_items)));
        Self {
            num_users: profiles.len(),
            num_items,
            profiles,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Number of stored interactions.
    pub fn nnz(&self) -> usize {
        self.profiles.iter().map(Vec::len).sum()
    }

    pub fn profile(&self, user: usize) -> &[usize] {
        &self.profiles[user]
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.profiles.get(user).is_some_and(|p| p.binary_search(&item).is_ok())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.profiles
            .iter()
            .enumerate()
            .flat_map(|(u, p)| p.iter().map(move |&i| (u, i)))
    }

    /// Element-wise union with another matrix of the same shape.
    pub fn union(&self, other: &InteractionMatrix) -> InteractionMatrix {
        assert_eq!(self.num_users, other.num_users);
        assert_eq!(self.num_items, other.num_items);
        let profiles = self
            .profiles
            .iter()
            .zip(&other.profiles)
            .map(|(a, b)| {
                let mut p: Vec<usize> = a.iter().chain(b).copied().collect();
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect();
        InteractionMatrix::from_profiles(self.num_items, profiles)
    }
}

/// Output of [`load_interactions`]: the matrix plus its id maps.
#[derive(Debug, Clone)]
pub struct LoadedInteractions {
    pub matrix: InteractionMatrix,
    pub users: IdMap,
    pub items: IdMap,
    pub duplicates: usize,
}

/// Reads a `user_id,item_id` CSV file with a header line.
pub fn load_interactions(path: impl AsRef<Path>) -> Result<LoadedInteractions, DatasetError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 || record[0].is_empty() || record[1].is_empty() {
            return Err(DatasetError::Parse {
                path: path.to_owned(),
                line,
                message: format!("expected `user_id,item_id`, got {} fields", record.len()),
            });
        }
        pairs.push((users.intern(&record[0]), items.intern(&record[1])));
    }
    if pairs.is_empty() {
        return Err(DatasetError::Empty(path.to_owned()));
    }
    let (matrix, duplicates) = InteractionMatrix::from_pairs(users.len(), items.len(), pairs)?;
    if duplicates > 0 {
        log::info!("{}: dropped {duplicates} duplicate interactions", path.display());
    }
    Ok(LoadedInteractions {
        matrix,
        users,
        items,
        duplicates,
    })
}

pub(super) fn csv_error(path: &Path, err: csv::Error) -> DatasetError {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.to_owned(),
            source,
        },
        kind => DatasetError::Parse {
            path: path.to_owned(),
            line,
            message: format!("{kind:?}"),
        },
    }
}
