//! End-to-end runner tests over on-disk fixtures: real frame files,
//! manifests, and configs, exercised through the public run entry
//! points.

mod common;

use std::collections::BTreeMap;
use std::fs;

use fda_cli::config::RunConfig;
use fda_cli::manifest::DatasetManifest;
use fda_cli::pnm;
use fda_cli::runner::{
    build_backend, evaluate_split, export_masks, run_eval, tau_sweep, HarnessError,
};
use fda_cli::store::{frame_record_id, text_record_id, EmbeddingStore};

fn basis(dim: usize, axis: usize) -> Vec<f32> {
    let mut v = vec![0.0f32; dim];
    v[axis] = 1.0;
    v
}

#[test]
fn planted_run_is_perfect_and_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 4, 2);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "planted", "dim": 8}"#,
        r#", "n_frames_test": 4, "seed": 11"#,
    );
    let config = RunConfig::load(&config_path).unwrap();

    let (report, path) = run_eval(&config).unwrap();
    assert_eq!(report.t2v.r_at_1, 100.0);
    assert_eq!(report.v2t.r_at_1, 100.0);
    assert_eq!(report.t2v.mean_rank, 1.0);
    assert_eq!(report.v2t.mean_rank, 1.0);
    assert_eq!(report.meta_sum, 600.0);

    let first = fs::read(&path).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&first).unwrap();
    for direction in ["t2v", "v2t"] {
        for field in ["r_at_1", "r_at_5", "r_at_10", "median_rank", "mean_rank"] {
            assert!(
                json[direction][field].is_number(),
                "missing {direction}.{field}"
            );
        }
    }
    assert_eq!(json["meta_sum"], 600.0);

    let (rerun, _) = run_eval(&config).unwrap();
    assert_eq!(rerun, report);
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn mock_null_model_recall_matches_chance() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset_with(dir.path(), 20, 1, common::tiny_clip);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "mock", "dim": 16}"#,
        r#", "n_frames_test": 2"#,
    );
    let base = RunConfig::load(&config_path).unwrap();
    let manifest = DatasetManifest::load(&base.manifest_path).unwrap();

    // With content-hash embeddings the correct video is a uniform draw
    // out of 20, so R@1 averages 5% over many seeds.
    let seeds = 100;
    let mut t2v_sum = 0.0;
    let mut v2t_sum = 0.0;
    for seed in 0..seeds {
        let mut config = base.clone();
        config.seed = seed;
        let mut backend = build_backend(&config, &manifest).unwrap();
        let outcome = evaluate_split(&manifest, &config, backend.as_mut()).unwrap();
        t2v_sum += outcome.report.t2v.r_at_1;
        v2t_sum += outcome.report.v2t.r_at_1;
    }
    let t2v_mean = t2v_sum / seeds as f64;
    let v2t_mean = v2t_sum / seeds as f64;
    assert!(
        (t2v_mean - 5.0).abs() <= 3.0,
        "t2v mean R@1 {t2v_mean} strays from the 5% null expectation"
    );
    assert!(
        (v2t_mean - 5.0).abs() <= 3.0,
        "v2t mean R@1 {v2t_mean} strays from the 5% null expectation"
    );
}

#[test]
fn store_backend_runs_from_precomputed_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 4, 2);
    let mut store = EmbeddingStore::new(8).unwrap();
    for v in 0..4 {
        let id = format!("v{v:02}");
        for k in 0..4 {
            store.insert(frame_record_id(&id, k), basis(8, v)).unwrap();
        }
        for j in 0..2 {
            store.insert(text_record_id(&id, j), basis(8, v)).unwrap();
        }
    }
    store.save(&dir.path().join("emb.fdae")).unwrap();

    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "store", "path": "emb.fdae"}"#,
        r#", "n_frames_test": 4"#,
    );
    let config = RunConfig::load(&config_path).unwrap();
    let (report, _) = run_eval(&config).unwrap();
    assert_eq!(report.meta_sum, 600.0);
    assert_eq!(report.t2v.mean_rank, 1.0);
}

#[test]
fn store_without_a_requested_record_is_a_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 2, 1);
    let mut store = EmbeddingStore::new(4).unwrap();
    // Frames for both videos, texts only for the first.
    for v in 0..2 {
        let id = format!("v{v:02}");
        for k in 0..3 {
            store.insert(frame_record_id(&id, k), basis(4, v)).unwrap();
        }
    }
    store.insert(text_record_id("v00", 0), basis(4, 0)).unwrap();
    store.save(&dir.path().join("emb.fdae")).unwrap();

    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "store", "path": "emb.fdae"}"#,
        r#", "n_frames_test": 3"#,
    );
    let config = RunConfig::load(&config_path).unwrap();
    let err = run_eval(&config).unwrap_err();
    assert!(matches!(err, HarnessError::Encode(_)));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn external_backend_runs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 2, 1);
    let script = dir.path().join("encoder.sh");
    fs::write(
        &script,
        "while read -r line; do\n  case \"$line\" in\n    *'\"text\"'*) echo '[0.5, 1.0]';;\n    *) echo '[1.0, 0.25]';;\n  esac\ndone\n",
    )
    .unwrap();
    let backend = format!(
        r#"{{"kind": "external", "command": "sh", "args": [{:?}], "dim": 2}}"#,
        script.to_str().unwrap()
    );
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        &backend,
        r#", "n_frames_test": 2"#,
    );
    let config = RunConfig::load(&config_path).unwrap();
    let (_, path) = run_eval(&config).unwrap();
    let first = fs::read(&path).unwrap();
    run_eval(&config).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn missing_external_command_is_a_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 1, 1);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "external", "command": "no-such-encoder-binary", "dim": 2}"#,
        "",
    );
    let config = RunConfig::load(&config_path).unwrap();
    let err = run_eval(&config).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn sweep_outputs_are_structured_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 2, 1);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "planted", "dim": 2}"#,
        r#", "n_frames_test": 4"#,
    );
    let config = RunConfig::load(&config_path).unwrap();

    let (rows, path) = tau_sweep(&config, &[0, 25, 255]).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].white_fraction, 1.0);
    assert_eq!(rows[2].white_fraction, 0.0);
    assert!(rows[0].white_fraction >= rows[1].white_fraction);
    assert!(rows[1].white_fraction >= rows[2].white_fraction);

    let first = fs::read(&path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("tau,t2v_r_at_1,v2t_r_at_1,white_fraction\n"));

    tau_sweep(&config, &[0, 25, 255]).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn mask_export_writes_decodable_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 1, 1);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "mock", "dim": 4}"#,
        r#", "n_frames_test": 4"#,
    );
    let config = RunConfig::load(&config_path).unwrap();

    let paths = export_masks(&config, "v00").unwrap();
    assert_eq!(paths.len(), 4);
    for (i, path) in paths.iter().enumerate() {
        assert_eq!(
            path.file_name().unwrap().to_str().unwrap(),
            format!("v00_{i}.pgm")
        );
        let gray = pnm::decode_graymap(&fs::read(path).unwrap()).unwrap();
        assert_eq!((gray.width(), gray.height()), (32, 32));
    }

    let snapshot: Vec<Vec<u8>> = paths.iter().map(|p| fs::read(p).unwrap()).collect();
    export_masks(&config, "v00").unwrap();
    for (path, bytes) in paths.iter().zip(&snapshot) {
        assert_eq!(&fs::read(path).unwrap(), bytes);
    }

    let err = export_masks(&config, "nope").unwrap_err();
    assert!(matches!(err, HarnessError::UnknownVideo { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn zero_threshold_masks_are_fully_white() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 1, 1);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "mock", "dim": 4}"#,
        r#", "n_frames_test": 4, "mask": {"tau": 0}"#,
    );
    let config = RunConfig::load(&config_path).unwrap();
    for path in export_masks(&config, "v00").unwrap() {
        let gray = pnm::decode_graymap(&fs::read(&path).unwrap()).unwrap();
        assert!(gray.pixels().iter().all(|&v| v == 255));
    }
}

#[test]
fn train_only_manifest_cannot_be_evaluated() {
    let dir = tempfile::tempdir().unwrap();
    common::write_clip(&dir.path().join("frames/t0"), &common::small_clip(1));
    let manifest = serde_json::json!({
        "entries": [{
            "video_id": "t0",
            "frame_dir": "frames/t0",
            "captions": ["only trains"],
            "split": "train",
        }]
    });
    fs::write(
        dir.path().join("manifest.json"),
        serde_json::to_vec(&manifest).unwrap(),
    )
    .unwrap();
    let config_path = common::write_config(dir.path(), "run.json", r#"{"kind": "mock"}"#, "");
    let config = RunConfig::load(&config_path).unwrap();
    let err = run_eval(&config).unwrap_err();
    assert!(matches!(err, HarnessError::NoTestVideos));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn train_split_export_samples_the_training_count() {
    let dir = tempfile::tempdir().unwrap();
    common::write_clip(&dir.path().join("frames/t0"), &common::small_clip(1));
    let manifest = serde_json::json!({
        "entries": [{
            "video_id": "t0",
            "frame_dir": "frames/t0",
            "captions": ["a train clip"],
            "split": "train",
        }]
    });
    fs::write(
        dir.path().join("manifest.json"),
        serde_json::to_vec(&manifest).unwrap(),
    )
    .unwrap();
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "mock"}"#,
        r#", "n_frames_train": 3, "n_frames_test": 6"#,
    );
    let config = RunConfig::load(&config_path).unwrap();
    assert_eq!(export_masks(&config, "t0").unwrap().len(), 3);
}

#[test]
fn planted_backend_with_too_few_dimensions_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 5, 1);
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "planted", "dim": 3}"#,
        "",
    );
    let config = RunConfig::load(&config_path).unwrap();
    let manifest = DatasetManifest::load(&config.manifest_path).unwrap();
    let err = match build_backend(&config, &manifest) {
        Err(e) => e,
        Ok(_) => panic!("five anchors cannot fit in three dimensions"),
    };
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn store_embeddings_of_mixed_dimension_surface_as_errors() {
    let dir = tempfile::tempdir().unwrap();
    common::write_dataset(dir.path(), 2, 1);
    let mut records: BTreeMap<String, Vec<f32>> = BTreeMap::new();
    for v in 0..2 {
        let id = format!("v{v:02}");
        for k in 0..2 {
            records.insert(frame_record_id(&id, k), basis(4, v));
        }
        records.insert(text_record_id(&id, 0), basis(4, v));
    }
    let mut store = EmbeddingStore::new(4).unwrap();
    for (id, values) in records {
        store.insert(id, values).unwrap();
    }
    store.save(&dir.path().join("emb.fdae")).unwrap();

    // The run itself works; sabotaging the store path instead exercises
    // the data-error path.
    let config_path = common::write_config(
        dir.path(),
        "run.json",
        r#"{"kind": "store", "path": "missing.fdae"}"#,
        r#", "n_frames_test": 2"#,
    );
    let config = RunConfig::load(&config_path).unwrap();
    let err = run_eval(&config).unwrap_err();
    assert!(matches!(err, HarnessError::Store(_)));
    assert_eq!(err.exit_code(), 2);
}
