//! SC: sparse saliency by local contrast.

use super::{dim_err, MediaSample, Scalar, SparseMap, StageError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScConfig {
    /// Fraction of entries kept per modality, in `(0, 1]`.
    pub sparsity: f64,
    /// Odd side length of the local-mean window.
    pub window: usize,
}

impl Default for ScConfig {
    fn default() -> Self {
        Self {
            sparsity: 0.25,
            window: 3,
        }
    }
}

impl ScConfig {
    fn validate(&self) -> Result<(), StageError> {
        let bad = |message: &str| StageError::InvalidConfig {
            stage: "SC",
            message: message.to_owned(),
        };
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(bad("sparsity must lie in (0, 1]"));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(bad("window must be odd"));
        }
        Ok(())
    }

    /// `ceil(sparsity * size)`, at least one.
    pub fn keep(&self, size: usize) -> usize {
        let k = (self.sparsity * size as f64 - 1e-9).ceil().max(1.0) as usize;
        k.min(size)
    }
}

/// Saliency of one sample: temporal (`Sa`, `1 x T`) and spatial (`Sv`, `H x W`).
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyPair<T> {
    pub temporal: SparseMap<T>,
    pub spatial: SparseMap<T>,
    /// Fraction of entries the maps were allowed to keep.
    pub sparsity: f64,
    /// Some modality had no positive contrast at all.
    pub degenerate: bool,
}

/// `|v - local mean|` at every cell of a `rows x cols` grid. The window is
/// clipped at the borders and the mean taken over the cells inside it.
pub fn local_contrast<T: Scalar>(values: &[T], rows: usize, cols: usize, window: usize) -> Vec<T> {
    debug_assert_eq!(values.len(), rows * cols);
    let half = window / 2;
    let mut out = Vec::with_capacity(values.len());
    for r in 0..rows {
        for c in 0..cols {
            let (r0, r1) = (r.saturating_sub(half), (r + half).min(rows - 1));
            let (c0, c1) = (c.saturating_sub(half), (c + half).min(cols - 1));
            let mut sum = T::zero();
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    sum = sum + values[rr * cols + cc];
                }
            }
            let n = T::from_usize((r1 - r0 + 1) * (c1 - c0 + 1)).unwrap();
            out.push((values[r * cols + c] - sum / n).abs());
        }
    }
    out
}

/// Largest `k` strictly positive scores, ties to the lower index, returned in
/// index order.
fn top_k<T: Scalar>(scores: &[T], k: usize) -> Vec<(usize, T)> {
    let mut cand: Vec<(usize, T)> = scores
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > T::zero())
        .map(|(i, v)| (i, *v))
        .collect();
    cand.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    cand.truncate(k);
    cand.sort_by_key(|e| e.0);
    cand
}

/// Saliency maps of one sample.
///
/// `attention` is the `Mn` bias over the flattened frame followed by the
/// signal (empty means no bias); `es` scales every contrast by `1 + es`.
pub fn stage_sc<T: Scalar>(
    sample: &MediaSample<T>,
    attention: &[T],
    es: T,
    cfg: &ScConfig,
) -> Result<SaliencyPair<T>, StageError> {
    cfg.validate()?;
    let (h, w) = sample.spatial.shape();
    let t = sample.temporal.len();
    if h * w == 0 || t == 0 {
        return Err(dim_err("SC", "non-empty frame and signal", format!("{h}x{w}, {t}")));
    }
    if !attention.is_empty() && attention.len() != h * w + t {
        return Err(dim_err("SC", h * w + t, attention.len()));
    }
    if !(es.is_finite() && es >= T::zero()) {
        return Err(StageError::InvalidConfig {
            stage: "SC",
            message: "Es must be finite and non-negative".into(),
        });
    }
    let gain = T::one() + es;
    let score = |contrast: Vec<T>, offset: usize| -> Vec<T> {
        contrast
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let bias = attention.get(offset + i).copied().unwrap_or_else(T::zero);
                (v + bias).max(T::zero()) * gain
            })
            .collect()
    };
    let spatial = score(local_contrast(sample.spatial.as_slice(), h, w, cfg.window), 0);
    let temporal = score(local_contrast(&sample.temporal, 1, t, cfg.window), h * w);
    let spatial = top_k(&spatial, cfg.keep(h * w));
    let temporal = top_k(&temporal, cfg.keep(t));
    Ok(SaliencyPair {
        degenerate: spatial.is_empty() || temporal.is_empty(),
        sparsity: cfg.sparsity,
        temporal: SparseMap {
            rows: 1,
            cols: t,
            entries: temporal,
        },
        spatial: SparseMap {
            rows: h,
            cols: w,
            entries: spatial,
        },
    })
}
