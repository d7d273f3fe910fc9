//! Brute-force reference implementations. Dense, allocation-heavy and slow
//! on purpose: they share no code with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use pdqubo::dataset::{InteractionMatrix, ItemFeatureMatrix, LabeledSample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

pub type Dense = Vec<Vec<f64>>;

pub fn dense_features(f: &ItemFeatureMatrix) -> Dense {
    (0..f.num_items())
        .map(|i| (0..f.num_features()).map(|d| f.get(i, d)).collect())
        .collect()
}

pub fn zero_columns(f: &Dense, masked: &[usize]) -> Dense {
    f.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(d, &v)| if masked.contains(&d) { 0.0 } else { v })
                .collect()
        })
        .collect()
}

/// Cosine for item pairs sharing a nonzero feature, `None` otherwise.
/// Sums run over features in ascending order.
pub fn cosine_matrix(f: &Dense) -> Vec<Vec<Option<f64>>> {
    let n = f.len();
    let norm = |i: usize| f[i].iter().map(|v| v * v).sum::<f64>().sqrt();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let shared = f[a].iter().zip(&f[b]).any(|(x, y)| *x != 0.0 && *y != 0.0);
                    if a == b || !shared {
                        return None;
                    }
                    let dot: f64 = f[a].iter().zip(&f[b]).map(|(x, y)| x * y).sum();
                    Some((dot / (norm(a) * norm(b))).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect()
}

/// Top-`k` neighbors per item after a full sort by (similarity desc, index asc).
pub fn knn(f: &Dense, k: usize) -> Vec<Vec<(usize, f64)>> {
    cosine_matrix(f)
        .into_iter()
        .map(|row| {
            let mut cands: Vec<(usize, f64)> = row
                .into_iter()
                .enumerate()
                .filter_map(|(j, s)| s.map(|s| (j, s)))
                .collect();
            cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            cands.truncate(k);
            cands
        })
        .collect()
}

pub fn ndcg(ranked: &[usize], heldout: &[usize], cutoff: usize) -> f64 {
    let mut dcg = 0.0;
    for (r, j) in ranked.iter().take(cutoff).enumerate() {
        if heldout.contains(j) {
            dcg += 1.0 / ((r + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for r in 0..heldout.len().min(cutoff) {
        idcg += 1.0 / ((r + 2) as f64).log2();
    }
    dcg / idcg
}

/// Mean nDCG over users with held-out items. Candidates are unseen items
/// reachable through some profile item's neighbor list.
pub fn mean_ndcg(f: &Dense, train: &[Vec<usize>], heldout: &[Vec<usize>], k: usize, cutoff: usize) -> f64 {
    let nbrs = knn(f, k);
    let items = f.len();
    let mut values = Vec::new();
    for (profile, held) in train.iter().zip(heldout) {
        if held.is_empty() {
            continue;
        }
        let mut score = vec![0.0; items];
        let mut reachable = vec![false; items];
        let mut sorted = profile.clone();
        sorted.sort();
        for &i in &sorted {
            for &(j, s) in &nbrs[i] {
                score[j] += s;
                reachable[j] = true;
            }
        }
        let mut ranked: Vec<usize> = (0..items).filter(|&j| reachable[j] && !profile.contains(&j)).collect();
        ranked.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap().then(a.cmp(&b)));
        values.push(ndcg(&ranked, held, cutoff));
    }
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub struct OracleProfile {
    pub baseline: f64,
    pub singles: Vec<f64>,
    pub pairs: Dense,
}

/// Every delta by retraining from scratch on the column-zeroed matrix.
pub fn profile(f: &Dense, train: &[Vec<usize>], heldout: &[Vec<usize>], k: usize, cutoff: usize) -> OracleProfile {
    let d = f.first().map_or(0, Vec::len);
    let metric = |masked: &[usize]| mean_ndcg(&zero_columns(f, masked), train, heldout, k, cutoff);
    let baseline = metric(&[]);
    let singles = (0..d).map(|i| baseline - metric(&[i])).collect();
    let mut pairs = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let e = baseline - metric(&[i, j]);
            pairs[i][j] = e;
            pairs[j][i] = e;
        }
    }
    OracleProfile {
        baseline,
        singles,
        pairs,
    }
}

pub fn profiles(m: &InteractionMatrix) -> Vec<Vec<usize>> {
    (0..m.num_users()).map(|u| m.profile(u).to_vec()).collect()
}

/// Small random corpus: dense features with about half the cells zero, and
/// a random train / held-out partition of each user's items.
pub struct TinyCorpus {
    pub features: ItemFeatureMatrix,
    pub train: InteractionMatrix,
    pub heldout: InteractionMatrix,
}

pub fn tiny_corpus(rng: &mut ChaCha8Rng, max_items: usize, max_features: usize) -> TinyCorpus {
    let items = rng.gen_range(3..=max_items);
    let feats = rng.gen_range(2..=max_features);
    let users = rng.gen_range(3..=7);
    let mut triplets = Vec::new();
    for i in 0..items {
        for d in 0..feats {
            if rng.gen_bool(0.5) {
                triplets.push((i, d, rng.gen_range(0.1..2.0)));
            }
        }
    }
    let features = ItemFeatureMatrix::from_triplets(items, feats, triplets).unwrap();
    let mut train = Vec::new();
    let mut held = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if rng.gen_bool(0.45) {
                if rng.gen_bool(0.35) {
                    held.push((u, i));
                } else {
                    train.push((u, i));
                }
            }
        }
    }
    TinyCorpus {
        features,
        train: InteractionMatrix::from_pairs(users, items, train).unwrap().0,
        heldout: InteractionMatrix::from_pairs(users, items, held).unwrap().0,
    }
}

/// `sum_i sum_j Q_ij x_i x_j + w (sum x - k)^2` by direct expansion.
pub fn naive_energy(q: &Dense, x: &[u8], k: Option<usize>, w: f64) -> f64 {
    let n = x.len();
    let mut y = 0.0;
    for i in 0..n {
        for j in 0..n {
            y += q[i][j] * x[i] as f64 * x[j] as f64;
        }
    }
    if let Some(k) = k {
        let s: f64 = x.iter().map(|&b| b as f64).sum();
        y += w * (s - k as f64) * (s - k as f64);
    }
    y
}

/// Minimum of [`naive_energy`] over all `2^n` vectors.
pub fn brute_force_min(q: &Dense, k: Option<usize>, w: f64) -> f64 {
    let n = q.len();
    (0u32..1 << n)
        .map(|m| {
            let x: Vec<u8> = (0..n).map(|i| ((m >> i) & 1) as u8).collect();
            naive_energy(q, &x, k, w)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..1.0);
            q[i][j] = v;
            q[j][i] = v;
        }
    }
    q
}

fn plogp_ratio(p_xy: f64, p_x: f64, p_y: f64) -> f64 {
    if p_xy == 0.0 {
        0.0
    } else {
        p_xy * (p_xy / (p_x * p_y)).ln()
    }
}

/// Plug-in mutual information in nats from raw sample pairs.
pub fn mi(x: &[u8], y: &[u8]) -> f64 {
    let n = x.len() as f64;
    let mut joint: HashMap<(u8, u8), f64> = HashMap::new();
    let mut px: HashMap<u8, f64> = HashMap::new();
    let mut py: HashMap<u8, f64> = HashMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1.0 / n;
        *px.entry(a).or_default() += 1.0 / n;
        *py.entry(b).or_default() += 1.0 / n;
    }
    joint.iter().map(|(&(a, b), &p)| plogp_ratio(p, px[&a], py[&b])).sum()
}

/// `I(x; y | z) = sum_z p(z) I(x; y | z = z)`.
pub fn cmi(x: &[u8], y: &[u8], z: &[u8]) -> f64 {
    let n = x.len() as f64;
    let mut total = 0.0;
    for v in [0u8, 1] {
        let idx: Vec<usize> = (0..x.len()).filter(|&t| z[t] == v).collect();
        if idx.is_empty() {
            continue;
        }
        let xs: Vec<u8> = idx.iter().map(|&t| x[t]).collect();
        let ys: Vec<u8> = idx.iter().map(|&t| y[t]).collect();
        total += idx.len() as f64 / n * mi(&xs, &ys);
    }
    total
}

/// Binary presence column of `feature` over the samples, and the labels.
pub fn sample_columns(f: &ItemFeatureMatrix, samples: &[LabeledSample]) -> (Vec<Vec<u8>>, Vec<u8>) {
    let cols = (0..f.num_features())
        .map(|d| samples.iter().map(|s| u8::from(f.get(s.item, d) != 0.0)).collect())
        .collect();
    (cols, samples.iter().map(|s| s.label).collect())
}
