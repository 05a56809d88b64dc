//! CC: perception features by prior-weighted combination of sense features.

use super::{dim_err, Matrix, Scalar, StageError};

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptFeatures<T> {
    /// `Ct`: posterior over classes from the temporal sense features.
    pub temporal: Vec<T>,
    /// `Cs`: posterior over classes from the spatial sense features.
    pub spatial: Vec<T>,
    /// The evidence vanished in some modality and the prior was returned.
    pub degenerate: bool,
}

/// Normalized `prior * max(evidence + topic, 0)`; falls back to the prior
/// (flagged) when that product is zero everywhere.
pub fn posterior<T: Scalar>(evidence: &[T], topic: &[T], prior: &[T]) -> (Vec<T>, bool) {
    let un: Vec<T> = evidence
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let t = topic.get(j).copied().unwrap_or_else(T::zero);
            prior[j] * (*e + t).max(T::zero())
        })
        .collect();
    let sum = un.iter().copied().fold(T::zero(), |a, b| a + b);
    if !(sum > T::zero()) || !sum.is_finite() {
        return (prior.to_vec(), true);
    }
    (un.into_iter().map(|v| v / sum).collect(), false)
}

fn check_prior<T: Scalar>(prior: &[T]) -> Result<(), StageError> {
    let sum = prior.iter().copied().fold(T::zero(), |a, b| a + b);
    let ok = !prior.is_empty()
        && prior.iter().all(|p| p.is_finite() && *p >= T::zero())
        && (sum - T::one()).abs() <= T::lit(1e-6);
    if ok {
        Ok(())
    } else {
        Err(StageError::InvalidPrior)
    }
}

/// Posterior class distributions from the mean rows of `Fa` and `Fv`, each
/// shifted by its topic vector (`Mt`, `Ms`; empty means zero).
pub fn stage_cc<T: Scalar>(
    fa: &Matrix<T>,
    mt: &[T],
    fv: &Matrix<T>,
    ms: &[T],
    prior: &[T],
) -> Result<PerceptFeatures<T>, StageError> {
    check_prior(prior)?;
    let c = prior.len();
    for (m, name) in [(fa, "Fa"), (fv, "Fv")] {
        if m.rows() == 0 || m.cols() != c {
            return Err(dim_err("CC", format!("{name} with {c} columns"), format!("{:?}", m.shape())));
        }
    }
    for (v, name) in [(mt, "Mt"), (ms, "Ms")] {
        if !v.is_empty() && v.len() != c {
            return Err(dim_err("CC", format!("{name} of length {c}"), v.len()));
        }
    }
    let (temporal, dt) = posterior(&fa.mean_row(), mt, prior);
    let (spatial, ds) = posterior(&fv.mean_row(), ms, prior);
    Ok(PerceptFeatures {
        temporal,
        spatial,
        degenerate: dt || ds,
    })
}
