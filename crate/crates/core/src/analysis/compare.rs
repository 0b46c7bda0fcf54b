use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::TokenMeta;
use crate::summary::{mean, sample_std, summarize, EstimateSummary};
use crate::twonn::LocalEstimates;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub summary_a: EstimateSummary,
    pub summary_b: EstimateSummary,
    /// `mean_a - mean_b`
    pub delta_mean: f64,
    /// Standardized mean difference (pooled-std Cohen's d).
    pub smd: f64,
}

/// `(mean_a - mean_b) / s_pooled` with
/// `s_pooled = sqrt(((n_a - 1) s_a^2 + (n_b - 1) s_b^2) / (n_a + n_b - 2))`.
pub fn standardized_mean_difference(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("both cohorts must be non-empty".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (sample_std(a, ma), sample_std(b, mb));
    let dof = na + nb - 2.0;
    let pooled = if dof > 0.0 {
        (((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / dof).sqrt()
    } else {
        0.0
    };
    if ma == mb {
        return Ok(0.0);
    }
    if pooled == 0.0 {
        return Err(Error::Degenerate(
            "pooled standard deviation is 0 but the means differ".into(),
        ));
    }
    Ok((ma - mb) / pooled)
}

pub fn compare_cohorts(a: &LocalEstimates, b: &LocalEstimates) -> Result<ComparisonReport> {
    if a.params != b.params {
        log::warn!("comparing cohorts computed with different sampling parameters");
    }
    let summary_a = summarize(&a.values)?;
    let summary_b = summarize(&b.values)?;
    Ok(ComparisonReport {
        delta_mean: summary_a.mean - summary_b.mean,
        smd: standardized_mean_difference(&a.values, &b.values)?,
        summary_a,
        summary_b,
    })
}

/// Per-token difference between two models on the same token sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDelta {
    pub row: usize,
    /// `a - b`
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<TokenMeta>,
}

/// Elementwise `a - b` over estimates produced from the identical subsample
/// under two models sharing architecture and tokenizer. `meta`, when given,
/// must be aligned with the estimates.
pub fn paired_token_compare(
    a: &LocalEstimates,
    b: &LocalEstimates,
    meta: Option<&[TokenMeta]>,
) -> Result<Vec<TokenDelta>> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "cohort lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.rows != b.rows {
        return Err(Error::Alignment(
            "cohorts were drawn from different token rows".into(),
        ));
    }
    if let Some(m) = meta {
        if m.len() != a.len() {
            return Err(Error::Alignment(format!(
                "{} metadata rows for {} estimates",
                m.len(),
                a.len()
            )));
        }
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .map(|(i, (x, y))| TokenDelta {
            row: a.rows[i],
            delta: x - y,
            meta: meta.map(|m| m[i].clone()),
        })
        .collect())
}
