//! Embedding point clouds, their on-disk format, and the sampling steps that
//! run before any neighborhood search (sequence subsample, de-duplication,
//! token subsample).

mod format;
mod sampling;

pub use format::{
    load_point_cloud, load_point_cloud_with, meta_sidecar_path, save_point_cloud, LoadOptions,
    FORMAT_VERSION, HEADER_LEN, MAGIC,
};
pub(crate) use sampling::shuffled_prefix;
pub use sampling::{
    dedup_indices, deduplicate, sequence_subsample_indices, subsample_sequences, subsample_tokens,
    token_subsample_indices,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a token was embedded as-is or through a mask placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    Regular,
    Masked,
}

/// Provenance of one embedded token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeta {
    pub seq_id: u64,
    pub pos: u64,
    pub token_text: String,
    /// Layer index; negative values count from the last layer.
    pub layer: i64,
    pub mode: EmbeddingMode,
}

/// Payload precision used when the cloud is written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// An `n_points x dim` matrix of finite embedding coordinates, row-major.
///
/// Values are held as `f64` regardless of the storage precision. A cloud with
/// [`Precision::F32`] only ever holds values exactly representable in `f32`,
/// so saving and reloading it is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    precision: Precision,
    meta: Option<Vec<TokenMeta>>,
}

impl PointCloud {
    /// Builds a cloud from row-major `data`. With [`Precision::F32`] every
    /// value is rounded to the nearest `f32`.
    pub fn new(dim: usize, mut data: Vec<f64>, precision: Precision) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Argument(format!(
                "data length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if precision == Precision::F32 {
            for v in &mut data {
                *v = *v as f32 as f64;
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            dim,
            data,
            precision,
            meta: None,
        })
    }

    /// Builds a cloud from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], precision: Precision) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::Argument("cannot infer dimension from zero rows".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Argument(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data, precision)
    }

    /// Attaches per-point metadata; its length must equal `n_points`.
    pub fn with_meta(mut self, meta: Vec<TokenMeta>) -> Result<Self> {
        if meta.len() != self.n_points() {
            return Err(Error::Metadata(format!(
                "{} metadata rows for {} points",
                meta.len(),
                self.n_points()
            )));
        }
        self.meta = Some(meta);
        Ok(self)
    }

    pub fn without_meta(mut self) -> Self {
        self.meta = None;
        self
    }

    pub fn n_points(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn meta(&self) -> Option<&[TokenMeta]> {
        self.meta.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// New cloud made of the given rows in the given order; metadata follows.
    pub fn select(&self, rows: &[usize]) -> PointCloud {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        let meta = self
            .meta
            .as_ref()
            .map(|m| rows.iter().map(|&r| m[r].clone()).collect());
        PointCloud {
            dim: self.dim,
            data,
            precision: self.precision,
            meta,
        }
    }

    /// Applies `f` to every coordinate, re-validating the result.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<PointCloud> {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i, v))
            .collect();
        let mut out = PointCloud::new(self.dim, data, self.precision)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Same values, different storage precision.
    pub fn with_precision(&self, precision: Precision) -> PointCloud {
        let mut out = PointCloud::new(self.dim, self.data.clone(), precision)
            .expect("values of a valid cloud stay finite");
        out.meta = self.meta.clone();
        out
    }
}

/// Sampling parameters of one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Sequence subsample size M. `None` keeps every sequence in the dump.
    pub m_sequences: Option<usize>,
    /// Token subsample size N.
    pub n_tokens: usize,
    /// Neighborhood size L.
    pub n_neighbors: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            m_sequences: None,
            n_tokens: 60_000,
            n_neighbors: 128,
            seed: 42,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_sequences == Some(0) {
            return Err(Error::Argument("M must be at least 1".into()));
        }
        if self.n_tokens == 0 {
            return Err(Error::Argument("N must be at least 1".into()));
        }
        if self.n_neighbors < 3 {
            return Err(Error::Argument(format!(
                "L must be at least 3, got {}",
                self.n_neighbors
            )));
        }
        Ok(())
    }
}
