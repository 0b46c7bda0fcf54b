use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use rand::Rng;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

fn row_bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Rows to keep so that no two kept rows are bitwise identical. The first
/// occurrence of each duplicate group survives; order is preserved.
pub fn dedup_indices(cloud: &PointCloud) -> Vec<usize> {
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::with_capacity(cloud.n_points());
    let mut keep = Vec::with_capacity(cloud.n_points());
    for (i, row) in cloud.rows().enumerate() {
        let mut h = DefaultHasher::new();
        for v in row {
            v.to_bits().hash(&mut h);
        }
        let bucket = buckets.entry(h.finish()).or_default();
        if bucket.iter().any(|&j| row_bits_equal(cloud.row(j), row)) {
            continue;
        }
        bucket.push(i);
        keep.push(i);
    }
    keep
}

pub fn deduplicate(cloud: &PointCloud) -> PointCloud {
    let keep = dedup_indices(cloud);
    if keep.len() == cloud.n_points() {
        return cloud.clone();
    }
    log::debug!(
        "de-duplication removed {} of {} rows",
        cloud.n_points() - keep.len(),
        cloud.n_points()
    );
    cloud.select(&keep)
}

/// Seeded shuffle-then-truncate over `0..len`, done as a partial
/// Fisher-Yates shuffle. The result for `n` is a prefix of the result for
/// any larger `n` under the same seed. When `n >= len` the identity order is
/// returned.
pub fn token_subsample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Argument(
            "token subsample size must be at least 1".into(),
        ));
    }
    if n >= len {
        return Ok((0..len).collect());
    }
    Ok(shuffled_prefix(
        len,
        n,
        &mut rng::stream(seed, Stream::Tokens),
    ))
}

/// First `n` entries of a partial Fisher-Yates shuffle of `0..len`.
pub(crate) fn shuffled_prefix(len: usize, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = n.min(len);
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let j = rng.random_range(i..len);
        idx.swap(i, j);
    }
    idx.truncate(n);
    idx
}

/// Draws `n` rows uniformly without replacement. Saturates to the unchanged
/// cloud when `n >= n_points`.
pub fn subsample_tokens(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    let idx = token_subsample_indices(cloud.n_points(), n, seed)?;
    if idx.len() == cloud.n_points() {
        return Ok(cloud.clone());
    }
    Ok(cloud.select(&idx))
}

/// Rows belonging to a seeded sample of `m` source sequences. Distinct
/// `seq_id`s are shuffled and truncated like tokens; kept rows stay in their
/// original order.
pub fn sequence_subsample_indices(cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::Argument(
            "sequence subsample size must be at least 1".into(),
        ));
    }
    let meta = cloud.meta().ok_or_else(|| {
        Error::Metadata("sequence subsampling needs the metadata sidecar (seq_id)".into())
    })?;
    let seqs: Vec<u64> = meta
        .iter()
        .map(|t| t.seq_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if m >= seqs.len() {
        return Ok((0..cloud.n_points()).collect());
    }
    let chosen: HashSet<u64> =
        shuffled_prefix(seqs.len(), m, &mut rng::stream(seed, Stream::Sequences))
            .into_iter()
            .map(|i| seqs[i])
            .collect();
    Ok(meta
        .iter()
        .enumerate()
        .filter(|(_, t)| chosen.contains(&t.seq_id))
        .map(|(i, _)| i)
        .collect())
}

pub fn subsample_sequences(cloud: &PointCloud, m: usize, seed: u64) -> Result<PointCloud> {
    let idx = sequence_subsample_indices(cloud, m, seed)?;
    if idx.len() == cloud.n_points() {
        return Ok(cloud.clone());
    }
    Ok(cloud.select(&idx))
}
