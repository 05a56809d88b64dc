use std::path::PathBuf;

use cncc_core::stages::pipeline::{run_pipeline, PipelineConfig, PipelineMetrics};
use cncc_core::stages::{export_dataset, gen_synthetic_dataset, import_dataset, MediaSample};
use cncc_core::StageError;

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pipeline_default.json")
}

fn default_run(seed: u64) -> PipelineMetrics {
    let cfg = PipelineConfig::default();
    let data = gen_synthetic_dataset::<f64>(seed, cfg.samples, cfg.classes, cfg.noise).unwrap();
    run_pipeline(&data, &cfg, seed).unwrap()
}

/// Set `CNCC_UPDATE_GOLDEN=1` to rewrite the golden file from the current run.
#[test]
fn default_config_matches_golden() {
    let m = default_run(0);
    let json = m.to_json() + "\n";
    if std::env::var_os("CNCC_UPDATE_GOLDEN").is_some() {
        std::fs::write(golden(), &json).unwrap();
    }
    let expected: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(golden()).unwrap()).unwrap();
    let actual: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(actual["trace"], expected["trace"]);
    assert_eq!(actual["config"], expected["config"]);
    let close = |a: &serde_json::Value, b: &serde_json::Value| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-12;
    for key in ["ensemble", "temporal", "spatial"] {
        assert!(close(&actual["accuracy"][key], &expected["accuracy"][key]), "{key}");
    }
    let (a, e) = (actual["iterations"].as_array().unwrap(), expected["iterations"].as_array().unwrap());
    assert_eq!(a.len(), e.len());
    for (x, y) in a.iter().zip(e) {
        assert!(close(&x["error"], &y["error"]));
    }
}

#[test]
fn default_config_learns() {
    for seed in [0, 1, 2, 3] {
        let m = default_run(seed);
        let e = m.errors();
        assert_eq!(e.len(), 5);
        assert!(e.windows(2).all(|w| w[1] <= w[0]), "{seed}: {e:?}");
        assert!(e[4] < e[0], "{seed}: {e:?}");
        let acc = &m.accuracy;
        assert!(acc.ensemble >= acc.temporal.max(acc.spatial) - 0.02, "{seed}: {acc:?}");
        for seq in &m.trace.learning {
            assert_eq!(seq, &["TS_SC", "TS_DL", "TS_CC", "TS_EL", "TS_RL", "TS_IL"]);
        }
    }
}

#[test]
fn zero_ei_freezes_the_error() {
    let cfg = PipelineConfig {
        force_zero_ei: true,
        ..PipelineConfig::default()
    };
    let data = gen_synthetic_dataset::<f64>(4, cfg.samples, cfg.classes, cfg.noise).unwrap();
    let m = run_pipeline(&data, &cfg, 4).unwrap();
    let e = m.errors();
    assert!(e.iter().all(|x| *x == e[0]), "{e:?}");
}

#[test]
fn identical_inputs_serialize_identically() {
    assert_eq!(default_run(7).to_json(), default_run(7).to_json());
    assert_ne!(default_run(7).to_json(), default_run(8).to_json());
}

#[test]
fn exported_dataset_gives_same_metrics() {
    let cfg = PipelineConfig {
        iterations: 2,
        ..PipelineConfig::default()
    };
    let data = gen_synthetic_dataset::<f64>(5, 80, 2, 0.1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_dataset(dir.path(), &data).unwrap();
    let back: Vec<MediaSample<f64>> = import_dataset(dir.path()).unwrap();
    assert_eq!(run_pipeline(&data, &cfg, 5).unwrap(), run_pipeline(&back, &cfg, 5).unwrap());
}

#[test]
fn single_precision_pipeline_runs() {
    let cfg = PipelineConfig {
        iterations: 3,
        classes: 3,
        ..PipelineConfig::default()
    };
    let data = gen_synthetic_dataset::<f32>(1, 120, 3, 0.1).unwrap();
    let m = run_pipeline(&data, &cfg, 1).unwrap();
    let e = m.errors();
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
    assert!(e.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn stage_errors_carry_the_iteration() {
    let cfg = PipelineConfig {
        sparsity: 0.5,
        window: 4,
        ..PipelineConfig::default()
    };
    let data = gen_synthetic_dataset::<f64>(1, 40, 2, 0.1).unwrap();
    match run_pipeline(&data, &cfg, 1) {
        Err(StageError::AtIteration { iteration: 1, source }) => {
            assert!(matches!(*source, StageError::InvalidConfig { stage: "SC", .. }));
        }
        other => panic!("{other:?}"),
    }
}
