//! Synthetic audio-visual samples and their on-disk layout.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Matrix, Scalar, StageError};

pub const SPATIAL_SIDE: usize = 8;
pub const TEMPORAL_LEN: usize = 32;

const MAGIC: &[u8; 4] = b"CNCS";
const FORMAT_VERSION: u32 = 1;

/// One multimedia sample: an `H x W` frame and a length-`T` signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaSample<T> {
    pub spatial: Matrix<T>,
    pub temporal: Vec<T>,
    pub label: Option<usize>,
}

impl<T: Scalar> MediaSample<T> {
    /// Number of entries of the flattened frame followed by the signal.
    pub fn flat_len(&self) -> usize {
        self.spatial.rows() * self.spatial.cols() + self.temporal.len()
    }
}

/// Class template frame: a 2x2 block on an 8x8 grid.
///
/// Classes 0..16 take distinct block positions; beyond that the position
/// repeats with a larger amplitude.
pub fn spatial_template(class: usize) -> Matrix<f64> {
    let pos = class % 16;
    let (r0, c0) = (2 * (pos / 4), 2 * (pos % 4));
    let amplitude = 1.0 + (class / 16) as f64;
    Matrix::from_fn(SPATIAL_SIDE, SPATIAL_SIDE, |r, c| {
        if (r0..r0 + 2).contains(&r) && (c0..c0 + 2).contains(&c) {
            amplitude
        } else {
            0.0
        }
    })
}

/// Class template signal: a tone of frequency `4 + class % 12` cycles per
/// window, phase shifted by an eighth turn for every further 12 classes.
pub fn temporal_template(class: usize) -> Vec<f64> {
    let freq = 4 + class % 12;
    let phase = (class / 12) as f64 * PI / 4.0;
    (0..TEMPORAL_LEN)
        .map(|t| (2.0 * PI * freq as f64 * t as f64 / TEMPORAL_LEN as f64 + phase).sin())
        .collect()
}

/// Labelled samples drawn around per-class templates with Gaussian noise of
/// standard deviation `noise`. Sample `i` has label `i mod n_classes`.
pub fn gen_synthetic_dataset<T: Scalar>(
    seed: u64,
    n_samples: usize,
    n_classes: usize,
    noise: f64,
) -> Result<Vec<MediaSample<T>>, StageError> {
    let bad = |message: &str| StageError::InvalidConfig {
        stage: "dataset",
        message: message.to_owned(),
    };
    if n_classes < 2 {
        return Err(bad("at least two classes are required"));
    }
    if n_samples < n_classes {
        return Err(bad("fewer samples than classes"));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(bad("noise must be a finite non-negative number"));
    }
    let normal = Normal::new(0.0, noise).map_err(|e| bad(&e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spatial: Vec<_> = (0..n_classes).map(spatial_template).collect();
    let temporal: Vec<_> = (0..n_classes).map(temporal_template).collect();

    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let label = i % n_classes;
        let frame = Matrix::from_fn(SPATIAL_SIDE, SPATIAL_SIDE, |r, c| {
            T::lit(spatial[label].get(r, c) + normal.sample(&mut rng))
        });
        let signal = temporal[label]
            .iter()
            .map(|v| T::lit(v + normal.sample(&mut rng)))
            .collect();
        out.push(MediaSample {
            spatial: frame,
            temporal: signal,
            label: Some(label),
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    samples: Vec<String>,
}

fn io_err(e: impl std::fmt::Display) -> StageError {
    StageError::Io(e.to_string())
}

/// Writes one `sample_NNNNN.bin` per sample plus `manifest.json`.
///
/// Binary layout, little endian: magic `CNCS`, `u32` version, `u64` H, W, T,
/// `i64` label (`-1` when absent), then `H*W` row-major frame values and `T`
/// signal values as `f64`.
pub fn export_dataset<T: Scalar>(dir: &Path, samples: &[MediaSample<T>]) -> Result<(), StageError> {
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut names = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let name = format!("sample_{i:05}.bin");
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for n in [s.spatial.rows(), s.spatial.cols(), s.temporal.len()] {
            buf.extend_from_slice(&(n as u64).to_le_bytes());
        }
        let label = s.label.map_or(-1i64, |l| l as i64);
        buf.extend_from_slice(&label.to_le_bytes());
        for v in s.spatial.as_slice().iter().chain(&s.temporal) {
            buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        fs::File::create(dir.join(&name))
            .and_then(|mut f| f.write_all(&buf))
            .map_err(io_err)?;
        names.push(name);
    }
    let manifest = Manifest {
        format: "cncc-sample".into(),
        version: FORMAT_VERSION,
        samples: names,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(io_err)?;
    fs::write(dir.join("manifest.json"), json + "\n").map_err(io_err)
}

/// Reads a directory written by [`export_dataset`].
pub fn import_dataset<T: Scalar>(dir: &Path) -> Result<Vec<MediaSample<T>>, StageError> {
    let text = fs::read_to_string(dir.join("manifest.json")).map_err(io_err)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(io_err)?;
    let mut out = Vec::with_capacity(manifest.samples.len());
    for name in &manifest.samples {
        let mut bytes = Vec::new();
        fs::File::open(dir.join(name))
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(io_err)?;
        out.push(decode_sample(&bytes).map_err(|m| StageError::Io(format!("{name}: {m}")))?);
    }
    Ok(out)
}

fn decode_sample<T: Scalar>(bytes: &[u8]) -> Result<MediaSample<T>, String> {
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8], String> {
        let chunk = bytes.get(pos..pos + n).ok_or("truncated file")?;
        pos += n;
        Ok(chunk)
    };
    if take(4)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    }
    let label = i64::from_le_bytes(take(8)?.try_into().unwrap());
    let [h, w, t] = dims;
    let mut values = Vec::with_capacity(h * w + t);
    for _ in 0..h * w + t {
        values.push(T::lit(f64::from_le_bytes(take(8)?.try_into().unwrap())));
    }
    let temporal = values.split_off(h * w);
    Ok(MediaSample {
        spatial: Matrix::from_vec(h, w, values).map_err(|e| e.to_string())?,
        temporal,
        label: usize::try_from(label).ok(),
    })
}
