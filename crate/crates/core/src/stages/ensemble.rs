//! EL: weighted vote of four experts into one semantic decision.

use super::{argmax, dim_err, Matrix, Scalar, StageError};

/// Expert order used by votes and weights.
pub const EXPERTS: [&str; 4] = ["temporal-percept", "spatial-percept", "temporal-sense", "spatial-sense"];

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticDecision<T> {
    pub label: usize,
    /// Share of the total weight that voted for `label`.
    pub score: T,
    /// Weight share per class; sums to one.
    pub class_mass: Vec<T>,
}

/// `½ ln((1 - ε) / ε)` with `ε` clamped to `[1e-6, 1 - 1e-6]`, floored at 0.
pub fn adaboost_alpha<T: Scalar>(error: T) -> T {
    let lo = T::lit(1e-6);
    let e = error.max(lo).min(T::one() - lo);
    (T::lit(0.5) * ((T::one() - e) / e).ln()).max(T::zero())
}

/// Expert weights from their error rates; uniform when no expert beats chance.
pub fn expert_weights<T: Scalar>(errors: &[T; 4]) -> [T; 4] {
    let w = errors.map(adaboost_alpha);
    if w.iter().all(|v| v.is_zero()) {
        [T::one(); 4]
    } else {
        w
    }
}

/// Label each expert votes for: argmax of `Ct`, `Cs` and the mean rows of
/// `Fa` and `Fv`.
pub fn expert_votes<T: Scalar>(ct: &[T], cs: &[T], fa: &Matrix<T>, fv: &Matrix<T>) -> [usize; 4] {
    [argmax(ct), argmax(cs), argmax(&fa.mean_row()), argmax(&fv.mean_row())]
}

pub fn stage_el<T: Scalar>(
    ct: &[T],
    cs: &[T],
    fa: &Matrix<T>,
    fv: &Matrix<T>,
    weights: &[T; 4],
) -> Result<SemanticDecision<T>, StageError> {
    let c = ct.len();
    if c == 0 || cs.len() != c || fa.cols() != c || fv.cols() != c || fa.rows() == 0 || fv.rows() == 0 {
        return Err(dim_err(
            "EL",
            format!("{c} classes everywhere"),
            format!("Cs {}, Fa {:?}, Fv {:?}", cs.len(), fa.shape(), fv.shape()),
        ));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(StageError::NegativeWeight);
    }
    let total = weights.iter().copied().fold(T::zero(), |a, b| a + b);
    if total.is_zero() {
        return Err(StageError::NoExperts);
    }
    let votes = expert_votes(ct, cs, fa, fv);
    let mut mass = vec![T::zero(); c];
    for (v, w) in votes.iter().zip(weights) {
        mass[*v] = mass[*v] + *w;
    }
    mass.iter_mut().for_each(|m| *m = *m / total);
    let label = argmax(&mass);
    Ok(SemanticDecision {
        label,
        score: mass[label],
        class_mass: mass,
    })
}
