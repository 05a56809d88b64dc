//! IL: incremental learning of the feedback increments that close the loop.

use super::{dim_err, Matrix, Scalar, SemanticDecision, StageError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlConfig {
    /// Learning rate; the effective step is `eta * Ei`, clamped to `[0, 1]`.
    pub eta: f64,
}

impl Default for IlConfig {
    fn default() -> Self {
        Self { eta: 1.0 }
    }
}

/// Running summaries the increments are derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryHistory<T> {
    /// Per-class hidden prototypes, `classes x hidden`.
    pub hidden_temporal: Matrix<T>,
    pub hidden_spatial: Matrix<T>,
    /// Per-class residual of the percept posteriors.
    pub topic_temporal: Vec<T>,
    pub topic_spatial: Vec<T>,
    /// Mean saliency over the flattened frame followed by the signal.
    pub attention: Vec<T>,
    /// Label frequencies of past decisions.
    pub memory: Vec<T>,
}

impl<T: Scalar> MemoryHistory<T> {
    pub fn zeros(classes: usize, hidden: usize, attention_len: usize) -> Self {
        Self {
            hidden_temporal: Matrix::zeros(classes, hidden),
            hidden_spatial: Matrix::zeros(classes, hidden),
            topic_temporal: vec![T::zero(); classes],
            topic_spatial: vec![T::zero(); classes],
            attention: vec![T::zero(); attention_len],
            memory: vec![T::zero(); classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.memory.len()
    }
}

/// What the current iteration saw, in the shapes of [`MemoryHistory`].
#[derive(Debug, Clone, PartialEq)]
pub struct IlObservation<T> {
    pub hidden_temporal: Matrix<T>,
    pub hidden_spatial: Matrix<T>,
    pub topic_temporal: Vec<T>,
    pub topic_spatial: Vec<T>,
    pub attention: Vec<T>,
}

/// Feedback carried into the next iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackBundle<T> {
    pub ei: T,
    pub es: T,
    pub mp: Vec<T>,
    pub ma: Matrix<T>,
    pub mv: Matrix<T>,
    pub mt: Vec<T>,
    pub ms: Vec<T>,
    pub mn: Vec<T>,
}

impl<T: Scalar> FeedbackBundle<T> {
    /// All-zero increments shaped like `history`.
    pub fn zeros(ei: T, es: T, history: &MemoryHistory<T>) -> Self {
        let (c, d) = history.hidden_temporal.shape();
        Self {
            ei,
            es,
            mp: vec![T::zero(); c],
            ma: Matrix::zeros(c, d),
            mv: Matrix::zeros(c, d),
            mt: vec![T::zero(); c],
            ms: vec![T::zero(); c],
            mn: vec![T::zero(); history.attention.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlOutcome<T> {
    pub increments: FeedbackBundle<T>,
    /// Increment groups zeroed because they would have raised the error.
    pub rejected: Vec<&'static str>,
}

/// Groups dropped in this order until the probe no longer reports a higher
/// error than the last measured one.
const GROUPS: [&str; 3] = ["attention", "topic", "readout"];

fn step<T: Scalar>(old: &[T], obs: &[T], rate: T) -> Vec<T> {
    old.iter().zip(obs).map(|(o, x)| rate * (*x - *o)).collect()
}

fn step_matrix<T: Scalar>(old: &Matrix<T>, obs: &Matrix<T>, rate: T) -> Matrix<T> {
    let data = step(old.as_slice(), obs.as_slice(), rate);
    Matrix::from_vec(old.rows(), old.cols(), data).expect("same shape")
}

fn apply<T: Scalar>(v: &mut [T], inc: &[T]) {
    v.iter_mut().zip(inc).for_each(|(a, b)| *a = *a + *b);
}

fn apply_matrix<T: Scalar>(m: &mut Matrix<T>, inc: &Matrix<T>) {
    for r in 0..m.rows() {
        apply(m.row_mut(r), inc.row(r));
    }
}

/// Moves every summary in `history` towards `obs` by `eta * Ei` and returns
/// the moves as increments (`Ma`, `Mv` from the hidden prototypes, `Mt`,
/// `Ms` from the topics, `Mn` from attention, `Mp` from decision
/// frequencies).
///
/// With `last_error` set, `probe` scores a candidate bundle by the error the
/// next forward pass would measure; groups that raise it are zeroed and
/// their part of `history` is left untouched.
#[allow(clippy::too_many_arguments)]
pub fn stage_il<T: Scalar>(
    ei: T,
    es: T,
    decisions: &[SemanticDecision<T>],
    obs: &IlObservation<T>,
    history: &mut MemoryHistory<T>,
    cfg: &IlConfig,
    last_error: Option<T>,
    mut probe: impl FnMut(&FeedbackBundle<T>) -> T,
) -> Result<IlOutcome<T>, StageError> {
    let c = history.classes();
    let shape = history.hidden_temporal.shape();
    if obs.hidden_temporal.shape() != shape || obs.hidden_spatial.shape() != history.hidden_spatial.shape() {
        return Err(dim_err("IL", format!("{shape:?}"), format!("{:?}", obs.hidden_temporal.shape())));
    }
    if obs.topic_temporal.len() != c || obs.topic_spatial.len() != c {
        return Err(dim_err("IL", c, obs.topic_temporal.len()));
    }
    if obs.attention.len() != history.attention.len() {
        return Err(dim_err("IL", history.attention.len(), obs.attention.len()));
    }
    if let Some(d) = decisions.iter().find(|d| d.class_mass.len() != c || d.label >= c) {
        return Err(dim_err("IL", c, d.class_mass.len()));
    }
    if !(cfg.eta.is_finite() && cfg.eta >= 0.0) {
        return Err(StageError::InvalidConfig {
            stage: "IL",
            message: "eta must be finite and non-negative".into(),
        });
    }

    let rate = (T::lit(cfg.eta) * ei).max(T::zero()).min(T::one());
    let mut memory_obs = history.memory.clone();
    if !decisions.is_empty() {
        memory_obs = vec![T::zero(); c];
        for d in decisions {
            memory_obs[d.label] = memory_obs[d.label] + T::one();
        }
        let n = T::from_usize(decisions.len()).unwrap();
        memory_obs.iter_mut().for_each(|m| *m = *m / n);
    }

    let full = FeedbackBundle {
        ei,
        es,
        mp: step(&history.memory, &memory_obs, rate),
        ma: step_matrix(&history.hidden_temporal, &obs.hidden_temporal, rate),
        mv: step_matrix(&history.hidden_spatial, &obs.hidden_spatial, rate),
        mt: step(&history.topic_temporal, &obs.topic_temporal, rate),
        ms: step(&history.topic_spatial, &obs.topic_spatial, rate),
        mn: step(&history.attention, &obs.attention, rate),
    };

    let mut candidate = full;
    let mut rejected = Vec::new();
    if let Some(last) = last_error {
        let zero = FeedbackBundle::zeros(ei, es, history);
        for group in GROUPS {
            if !(probe(&candidate) > last) {
                break;
            }
            match group {
                "attention" => candidate.mn = zero.mn.clone(),
                "topic" => {
                    candidate.mt = zero.mt.clone();
                    candidate.ms = zero.ms.clone();
                }
                _ => {
                    candidate.ma = zero.ma.clone();
                    candidate.mv = zero.mv.clone();
                }
            }
            rejected.push(group);
        }
    }

    apply(&mut history.memory, &candidate.mp);
    apply_matrix(&mut history.hidden_temporal, &candidate.ma);
    apply_matrix(&mut history.hidden_spatial, &candidate.mv);
    apply(&mut history.topic_temporal, &candidate.mt);
    apply(&mut history.topic_spatial, &candidate.ms);
    apply(&mut history.attention, &candidate.mn);
    Ok(IlOutcome {
        increments: candidate,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: f64) -> IlObservation<f64> {
        IlObservation {
            hidden_temporal: Matrix::from_fn(1, 2, |_, _| v),
            hidden_spatial: Matrix::from_fn(1, 2, |_, _| v),
            topic_temporal: vec![v],
            topic_spatial: vec![v],
            attention: vec![v; 3],
        }
    }

    fn decision() -> SemanticDecision<f64> {
        SemanticDecision {
            label: 0,
            score: 1.0,
            class_mass: vec![1.0],
        }
    }

    #[test]
    fn single_class_step_is_tenth_of_gap() {
        let mut hist = MemoryHistory::zeros(1, 2, 3);
        hist.hidden_temporal.set(0, 0, 1.0);
        let cfg = IlConfig { eta: 0.1 };
        let out = stage_il(1.0, 0.0, &[decision()], &obs(3.0), &mut hist, &cfg, None, |_| 0.0).unwrap();
        assert!((out.increments.ma.get(0, 0) - 0.2).abs() < 1e-12);
        assert!((out.increments.ma.get(0, 1) - 0.3).abs() < 1e-12);
        assert!((out.increments.mp[0] - 0.1).abs() < 1e-12);
        assert!((hist.hidden_temporal.get(0, 0) - 1.2).abs() < 1e-12);
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn zero_ei_gives_zero_increments() {
        let mut hist = MemoryHistory::zeros(1, 2, 3);
        let before = hist.clone();
        let out = stage_il(0.0, 0.0, &[decision()], &obs(3.0), &mut hist, &IlConfig::default(), None, |_| 0.0)
            .unwrap();
        assert_eq!(out.increments, FeedbackBundle::zeros(0.0, 0.0, &before));
        assert_eq!(hist, before);
    }

    #[test]
    fn harmful_increments_are_zeroed_and_reverted() {
        let mut hist = MemoryHistory::zeros(1, 2, 3);
        let before = hist.clone();
        // Any nonzero readout step raises the error from 0.3 to 0.5.
        let probe = |b: &FeedbackBundle<f64>| if b.ma.get(0, 0) != 0.0 { 0.5 } else { 0.3 };
        let out = stage_il(1.0, 0.0, &[decision()], &obs(3.0), &mut hist, &IlConfig::default(), Some(0.3), probe)
            .unwrap();
        assert_eq!(out.rejected, vec!["attention", "topic", "readout"]);
        assert_eq!(out.increments.ma, Matrix::zeros(1, 2));
        assert_eq!(hist.hidden_temporal, before.hidden_temporal);
        assert_eq!(hist.attention, before.attention);
    }

    #[test]
    fn only_attention_dropped_when_that_suffices() {
        let mut hist = MemoryHistory::zeros(1, 2, 3);
        let probe = |b: &FeedbackBundle<f64>| if b.mn[0] != 0.0 { 0.9 } else { 0.1 };
        let out = stage_il(1.0, 0.0, &[decision()], &obs(1.0), &mut hist, &IlConfig::default(), Some(0.2), probe)
            .unwrap();
        assert_eq!(out.rejected, vec!["attention"]);
        assert_eq!(out.increments.ma.get(0, 0), 1.0);
        assert_eq!(hist.attention, vec![0.0; 3]);
    }

    #[test]
    fn shape_mismatch() {
        let mut hist = MemoryHistory::zeros(2, 2, 3);
        let err = stage_il(1.0, 0.0, &[], &obs(1.0), &mut hist, &IlConfig::default(), None, |_| 0.0);
        assert!(matches!(err, Err(StageError::DimensionMismatch { stage: "IL", .. })));
    }
}
