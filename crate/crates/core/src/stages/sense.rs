//! DL: sense features from saliency through a seeded two-layer network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dim_err, Matrix, Scalar, SparseMap, StageError};

/// Fixed random projection per modality followed by a linear readout.
///
/// The readouts are what `Ma`/`Mv` adjust.
#[derive(Debug, Clone, PartialEq)]
pub struct DlModel<T> {
    pub proj_temporal: Matrix<T>,
    pub proj_spatial: Matrix<T>,
    pub readout_temporal: Matrix<T>,
    pub readout_spatial: Matrix<T>,
    pub bias_temporal: Vec<T>,
    pub bias_spatial: Vec<T>,
}

impl<T: Scalar> DlModel<T> {
    /// Projections are standard normal; readouts are normal with standard
    /// deviation `readout_scale`; biases start at zero.
    pub fn seeded(
        seed: u64,
        temporal_len: usize,
        spatial_len: usize,
        classes: usize,
        hidden: usize,
        readout_scale: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize, scale: f64| {
            Matrix::from_fn(rows, cols, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::lit(z * scale)
            })
        };
        let proj_temporal = draw(hidden, temporal_len, 1.0);
        let proj_spatial = draw(hidden, spatial_len, 1.0);
        let readout_temporal = draw(classes, hidden, readout_scale);
        let readout_spatial = draw(classes, hidden, readout_scale);
        Self {
            proj_temporal,
            proj_spatial,
            readout_temporal,
            readout_spatial,
            bias_temporal: vec![T::zero(); classes],
            bias_spatial: vec![T::zero(); classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.readout_temporal.rows()
    }

    pub fn hidden(&self) -> usize {
        self.proj_temporal.rows()
    }

    /// Neutral `Ma`/`Mv`: a zero `classes x hidden` matrix.
    pub fn zero_adjustment(&self) -> Matrix<T> {
        Matrix::zeros(self.classes(), self.hidden())
    }
}

/// Hidden activations and class probabilities per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseFeatures<T> {
    /// `Fa`: `n x classes`.
    pub temporal: Matrix<T>,
    /// `Fv`: `n x classes`.
    pub spatial: Matrix<T>,
    pub hidden_temporal: Matrix<T>,
    pub hidden_spatial: Matrix<T>,
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = logits.iter().map(|v| (*v - max).exp()).collect();
    let sum = exp.iter().copied().fold(T::zero(), |a, b| a + b);
    exp.into_iter().map(|v| v / sum).collect()
}

/// `relu(P x / |x|)`; a zero map gives a zero vector.
fn hidden<T: Scalar>(proj: &Matrix<T>, map: &SparseMap<T>) -> Vec<T> {
    let dense = map.to_dense();
    let norm = dense.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
    if norm.is_zero() {
        return vec![T::zero(); proj.rows()];
    }
    let unit: Vec<T> = dense.into_iter().map(|v| v / norm).collect();
    proj.mul_vec(&unit).into_iter().map(|v| v.max(T::zero())).collect()
}

fn modality<T: Scalar>(
    maps: &[SparseMap<T>],
    proj: &Matrix<T>,
    readout: &Matrix<T>,
    adjust: &Matrix<T>,
    bias: &[T],
    name: &'static str,
) -> Result<(Matrix<T>, Matrix<T>), StageError> {
    if adjust.shape() != readout.shape() {
        return Err(dim_err(
            "DL",
            format!("{name} adjustment {:?}", readout.shape()),
            format!("{:?}", adjust.shape()),
        ));
    }
    let weights = readout.add(adjust)?;
    let mut hid = Vec::with_capacity(maps.len());
    let mut probs = Vec::with_capacity(maps.len());
    for m in maps {
        if m.size() != proj.cols() {
            return Err(dim_err("DL", format!("{name} map of {}", proj.cols()), m.size()));
        }
        let h = hidden(proj, m);
        let logits: Vec<T> = weights.mul_vec(&h).iter().zip(bias).map(|(a, b)| *a + *b).collect();
        probs.push(softmax(&logits));
        hid.push(h);
    }
    let empty = |cols: usize| Matrix::zeros(0, cols);
    let hid = if hid.is_empty() { empty(proj.rows()) } else { Matrix::from_rows(&hid)? };
    let probs = if probs.is_empty() { empty(readout.rows()) } else { Matrix::from_rows(&probs)? };
    Ok((hid, probs))
}

/// Class probabilities for every sample from its temporal (`Sa`) and
/// spatial (`Sv`) saliency, with readouts adjusted by `Ma` and `Mv`.
pub fn stage_dl<T: Scalar>(
    sa: &[SparseMap<T>],
    ma: &Matrix<T>,
    sv: &[SparseMap<T>],
    mv: &Matrix<T>,
    model: &DlModel<T>,
) -> Result<SenseFeatures<T>, StageError> {
    if sa.len() != sv.len() {
        return Err(dim_err("DL", format!("{} spatial maps", sa.len()), sv.len()));
    }
    let (hidden_temporal, temporal) = modality(
        sa,
        &model.proj_temporal,
        &model.readout_temporal,
        ma,
        &model.bias_temporal,
        "temporal",
    )?;
    let (hidden_spatial, spatial) = modality(
        sv,
        &model.proj_spatial,
        &model.readout_spatial,
        mv,
        &model.bias_spatial,
        "spatial",
    )?;
    Ok(SenseFeatures {
        temporal,
        spatial,
        hidden_temporal,
        hidden_spatial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> DlModel<f64> {
        DlModel::seeded(11, 4, 9, 3, 8, 0.5)
    }

    fn map(rows: usize, cols: usize, entries: Vec<(usize, f64)>) -> SparseMap<f64> {
        SparseMap { rows, cols, entries }
    }

    #[test]
    fn rows_are_distributions() {
        let m = model();
        let sa = vec![map(1, 4, vec![(1, 0.3), (2, 0.9)])];
        let sv = vec![map(3, 3, vec![(4, 1.0)])];
        let out = stage_dl(&sa, &m.zero_adjustment(), &sv, &m.zero_adjustment(), &m).unwrap();
        for probs in [&out.temporal, &out.spatial] {
            assert_eq!(probs.shape(), (1, 3));
            let s: f64 = probs.row(0).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(probs.row(0).iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn zero_saliency_gives_softmax_of_bias() {
        let mut m = model();
        m.bias_temporal = vec![0.0, 1.0, 2.0];
        let sa = vec![map(1, 4, vec![])];
        let sv = vec![map(3, 3, vec![])];
        let out = stage_dl(&sa, &m.zero_adjustment(), &sv, &m.zero_adjustment(), &m).unwrap();
        let z: f64 = 1.0 + 1f64.exp() + 2f64.exp();
        let expected = [1.0 / z, 1f64.exp() / z, 2f64.exp() / z];
        for (a, b) in out.temporal.row(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(out.spatial.row(0).iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn scaling_the_map_does_not_change_output() {
        let m = model();
        let sa = vec![map(1, 4, vec![(0, 0.5), (3, 0.25)])];
        let sa2 = vec![map(1, 4, vec![(0, 1.5), (3, 0.75)])];
        let sv = vec![map(3, 3, vec![(2, 1.0)])];
        let z = m.zero_adjustment();
        let a = stage_dl(&sa, &z, &sv, &z, &m).unwrap();
        let b = stage_dl(&sa2, &z, &sv, &z, &m).unwrap();
        for (x, y) in a.temporal.as_slice().iter().zip(b.temporal.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn adjustment_shifts_logits() {
        let m = model();
        let sa = vec![map(1, 4, vec![(0, 1.0)])];
        let sv = vec![map(3, 3, vec![(0, 1.0)])];
        let z = m.zero_adjustment();
        let base = stage_dl(&sa, &z, &sv, &z, &m).unwrap();
        let h = base.hidden_temporal.row(0).to_vec();
        let mut ma = z.clone();
        ma.row_mut(2).copy_from_slice(&h);
        let out = stage_dl(&sa, &ma, &sv, &z, &m).unwrap();
        let logits = m.readout_temporal.mul_vec(&h);
        let hh: f64 = h.iter().map(|v| v * v).sum();
        let expected = softmax(&[logits[0], logits[1], logits[2] + hh]);
        for (a, b) in out.temporal.row(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = model();
        let sa = vec![map(1, 5, vec![])];
        let sv = vec![map(3, 3, vec![])];
        let z = m.zero_adjustment();
        assert!(matches!(
            stage_dl(&sa, &z, &sv, &z, &m),
            Err(StageError::DimensionMismatch { stage: "DL", .. })
        ));
        assert!(stage_dl(&sa[..0], &Matrix::zeros(1, 1), &sv[..0], &z, &m).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        assert_eq!(model(), DlModel::seeded(11, 4, 9, 3, 8, 0.5));
        assert_ne!(model(), DlModel::seeded(12, 4, 9, 3, 8, 0.5));
    }
}
