//! Exact Euclidean k-nearest-neighbor search.
//!
//! A blocked brute-force scan: queries are processed in blocks (in parallel
//! over blocks), each block walks the reference set tile by tile, and every
//! query keeps a bounded max-heap of its current best `k`. Candidates are
//! ordered by `(distance, row)`, so ties go to the lower row index and the
//! result does not depend on the number of worker threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

const QUERY_BLOCK: usize = 32;
const REFERENCE_TILE: usize = 256;

/// Euclidean distance with a fixed accumulation order in `f64`.
///
/// Four interleaved partial sums are combined pairwise, so `d(a, b)` and
/// `d(b, a)` agree bit for bit.
#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail).sqrt()
}

pub fn pairwise_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(euclidean(a, b))
}

/// For each query row, its `k` nearest reference rows in ascending distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_queries(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn indices(&self, q: usize) -> &[usize] {
        &self.indices[q * self.k..(q + 1) * self.k]
    }

    pub fn distances(&self, q: usize) -> &[f64] {
        &self.distances[q * self.k..(q + 1) * self.k]
    }

    /// Debug dump with header `query,rank,neighbor,distance`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "query,rank,neighbor,distance").map_err(io)?;
        for q in 0..self.n_queries() {
            for (rank, (n, d)) in self.indices(q).iter().zip(self.distances(q)).enumerate() {
                writeln!(w, "{q},{rank},{n},{d:e}").map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    dist: f64,
    row: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.row.cmp(&other.row))
    }
}

struct BoundedHeap {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl BoundedHeap {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(mut top) = self.heap.peek_mut() {
            if c < *top {
                *top = c;
            }
        }
    }

    fn into_sorted(self) -> Vec<Candidate> {
        self.heap.into_sorted_vec()
    }
}

fn search(
    queries: &PointCloud,
    reference: &PointCloud,
    k: usize,
    exclude_same_row: bool,
) -> NeighborGraph {
    let nq = queries.n_points();
    let nr = reference.n_points();
    let mut indices = vec![0usize; nq * k];
    let mut distances = vec![0.0f64; nq * k];

    indices
        .par_chunks_mut(QUERY_BLOCK * k)
        .zip(distances.par_chunks_mut(QUERY_BLOCK * k))
        .enumerate()
        .for_each(|(block, (idx_out, dist_out))| {
            let q0 = block * QUERY_BLOCK;
            let q1 = (q0 + QUERY_BLOCK).min(nq);
            let mut heaps: Vec<BoundedHeap> = (q0..q1).map(|_| BoundedHeap::new(k)).collect();
            for t0 in (0..nr).step_by(REFERENCE_TILE) {
                let t1 = (t0 + REFERENCE_TILE).min(nr);
                for (h, q) in heaps.iter_mut().zip(q0..q1) {
                    let qrow = queries.row(q);
                    for r in t0..t1 {
                        if exclude_same_row && r == q {
                            continue;
                        }
                        h.offer(Candidate {
                            dist: euclidean(qrow, reference.row(r)),
                            row: r,
                        });
                    }
                }
            }
            for (i, h) in heaps.into_iter().enumerate() {
                for (j, c) in h.into_sorted().into_iter().enumerate() {
                    idx_out[i * k + j] = c.row;
                    dist_out[i * k + j] = c.dist;
                }
            }
        });

    NeighborGraph {
        k,
        indices,
        distances,
    }
}

/// The `k` nearest neighbors of every row of `cloud` within `cloud`.
///
/// With `include_self` the row itself is a candidate (at distance 0);
/// otherwise it is skipped. Requires `k >= 2` and enough candidate rows.
pub fn knn_exact(cloud: &PointCloud, k: usize, include_self: bool) -> Result<NeighborGraph> {
    let n = cloud.n_points();
    let available = if include_self { n } else { n.saturating_sub(1) };
    if k < 2 {
        return Err(Error::Argument(format!(
            "neighborhood size must be >= 2, got {k}"
        )));
    }
    if k > available {
        return Err(Error::Argument(format!(
            "neighborhood size {k} exceeds the {available} available candidates among {n} points"
        )));
    }
    Ok(search(cloud, cloud, k, !include_self))
}

/// The `k` nearest `reference` rows of every `queries` row.
pub fn knn_between(
    queries: &PointCloud,
    reference: &PointCloud,
    k: usize,
) -> Result<NeighborGraph> {
    if queries.dim() != reference.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            queries.dim(),
            reference.dim()
        )));
    }
    if k == 0 || k > reference.n_points() {
        return Err(Error::Argument(format!(
            "k = {k} out of range for {} reference points",
            reference.n_points()
        )));
    }
    Ok(search(queries, reference, k, false))
}
