//! RL: error of a decision against what was expected, turned into the
//! control parameters `Es` and `Ei`.

use super::{Scalar, SemanticDecision, StageError};

#[derive(Debug, Clone, PartialEq)]
pub enum Expectation<T> {
    Label(usize),
    Distribution(Vec<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlConfig {
    pub lambda_s: f64,
    pub lambda_i: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            lambda_s: 0.5,
            lambda_i: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlFeedback<T> {
    /// Total-variation distance between the decision's class mass and the
    /// expectation, in `[0, 1]`.
    pub error: T,
    pub ei: T,
    pub es: T,
}

pub fn stage_rl<T: Scalar>(
    decision: &SemanticDecision<T>,
    expected: &Expectation<T>,
    cfg: &RlConfig,
) -> Result<RlFeedback<T>, StageError> {
    let c = decision.class_mass.len();
    let target: Vec<T> = match expected {
        Expectation::Label(l) if *l < c => (0..c).map(|j| if j == *l { T::one() } else { T::zero() }).collect(),
        Expectation::Distribution(d) if d.len() == c && d.iter().all(|v| *v >= T::zero()) => d.clone(),
        _ => return Err(StageError::InvalidExpectation),
    };
    let half = T::lit(0.5);
    let error = decision
        .class_mass
        .iter()
        .zip(&target)
        .fold(T::zero(), |a, (m, t)| a + (*m - *t).abs())
        * half;
    let error = error.min(T::one());
    Ok(RlFeedback {
        error,
        ei: T::lit(cfg.lambda_i) * error,
        es: T::lit(cfg.lambda_s) * error,
    })
}
