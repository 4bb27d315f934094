// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::fs;

use nalgebra::DMatrix;
use spectral_unlearn::editor::{sd_v14_manifest, WeightBundle, WeightEntry};
use spectral_unlearn::io::{
    load_job, read_bundle, read_matrix, read_tensor, write_bundle, write_matrix, write_tensor, Dtype, Manifest,
};
use spectral_unlearn::oracle::synthetic_bundle;

use common::fixture;

const GOOD: [&str; 6] = [
    "embedding_768x6.npy",
    "small_f4.npy",
    "small_f8.npy",
    "vector_f8.npy",
    "scalar_like_f8.npy",
    "sigma_4_3.npy",
];

#[test]
fn fixtures_rewrite_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in GOOD {
        let t = read_tensor(fixture(name)).unwrap();
        let out = dir.path().join(name);
        write_tensor(&out, &t, t.dtype).unwrap();
        assert_eq!(fs::read(&out).unwrap(), fs::read(fixture(name)).unwrap(), "{name}");
    }
}

#[test]
fn fixture_values() {
    let m = read_matrix(fixture("small_f8.npy")).unwrap();
    assert_eq!(m.shape(), (2, 3));
    // row-major on disk: [[0, 1, 2], [3, 4, 5]] / 7
    assert_eq!(m[(0, 2)], 2.0 / 7.0);
    assert_eq!(m[(1, 0)], 3.0 / 7.0);

    let v = read_tensor(fixture("vector_f8.npy")).unwrap();
    assert_eq!(v.shape, vec![5]);
    assert_eq!(v.data, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    assert_eq!(v.to_matrix().shape(), (5, 1));

    let f4 = read_tensor(fixture("small_f4.npy")).unwrap();
    assert_eq!(f4.dtype, Dtype::F32);
    assert!(f4.data.iter().all(|x| (*x as f32) as f64 == *x), "f4 widened exactly");

    assert_eq!(read_matrix(fixture("sigma_4_3.npy")).unwrap(), DMatrix::from_row_slice(3, 2, &[4.0, 0.0, 0.0, 3.0, 0.0, 0.0]));
}

#[test]
fn malformed_fixtures_are_named() {
    for (name, expected) in [
        ("malformed_magic.npy", "BadMagic"),
        ("malformed_version.npy", "UnsupportedVersion"),
        ("malformed_truncated.npy", "TruncatedPayload"),
        ("malformed_big_endian.npy", "UnsupportedDtype"),
        ("malformed_int.npy", "UnsupportedDtype"),
        ("malformed_fortran.npy", "UnsupportedLayout"),
        ("malformed_rank3.npy", "UnsupportedLayout"),
    ] {
        let err = read_tensor(fixture(name)).unwrap_err();
        assert_eq!(err.name(), expected, "{name}: {err}");
        assert_eq!(err.exit_code(), 1);
    }
    let err = read_tensor(fixture("does_not_exist.npy")).unwrap_err();
    assert_eq!(err.name(), "IoError");
}

#[test]
fn f64_narrowed_to_f4_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let m = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 1.0 / 3.0]);
    let path = dir.path().join("m.npy");
    write_matrix(&path, &m, Dtype::F32).unwrap();
    let back = read_tensor(&path).unwrap();
    assert_eq!(back.dtype, Dtype::F32);
    assert_eq!(back.data[3], (1.0f32 / 3.0) as f64);
}

#[test]
fn sd14_manifest_fixture() {
    let m = sd_v14_manifest();
    assert_eq!(m.entries.len(), 32);
    assert_eq!(m.editable_params(), 19_169_280);
    assert_eq!(m.total_params, Some(859_520_964));
    let widths: Vec<usize> = m.entries.iter().step_by(2).map(|e| e.shape.unwrap().0).collect();
    assert_eq!(widths, [320, 320, 640, 640, 1280, 1280, 1280, 1280, 1280, 1280, 640, 640, 640, 320, 320, 320]);
    assert!(m.entries.iter().all(|e| e.shape.unwrap().1 == 768));
    let reparsed = Manifest::parse(&m.render(), "rendered").unwrap();
    assert_eq!(reparsed, m);
}

#[test]
fn manifest_errors_carry_location() {
    let err = Manifest::parse("a.to_k 4 8\nb.to_v four 8\n", "m.txt").unwrap_err();
    assert_eq!(err.name(), "SchemaError");
    assert!(err.to_string().contains("m.txt:2"), "{err}");
}

fn small_bundle() -> WeightBundle {
    let entries = vec![
        WeightEntry { name: "blk.to_k".into(), matrix: DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64) },
        WeightEntry { name: "blk.to_v".into(), matrix: DMatrix::from_fn(2, 4, |i, j| (i + j) as f64 * 0.5) },
        WeightEntry { name: "blk.to_q".into(), matrix: DMatrix::from_fn(3, 4, |i, j| (i as f64) - (j as f64)) },
    ];
    WeightBundle::new(entries, vec!["blk.to_k".into(), "blk.to_v".into()], Some(1000)).unwrap()
}

#[test]
fn bundle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let b = small_bundle();
    write_bundle(dir.path(), &b, Dtype::F64).unwrap();
    let back = read_bundle(dir.path(), None).unwrap();
    assert_eq!(back.editable_names(), b.editable_names());
    assert_eq!(back.total_param_count(), 1000);
    for name in ["blk.to_k", "blk.to_v", "blk.to_q"] {
        assert_eq!(back.get(name), b.get(name));
    }
    // an explicit manifest overrides the bundle's own
    let only_k = Manifest::parse("blk.to_k 3 4\n", "inline").unwrap();
    let narrowed = read_bundle(dir.path(), Some(&only_k)).unwrap();
    assert_eq!(narrowed.editable_names(), ["blk.to_k"]);
}

#[test]
fn bundle_shape_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), &small_bundle(), Dtype::F64).unwrap();
    let wrong = Manifest::parse("blk.to_k 3 5\n", "inline").unwrap();
    assert_eq!(read_bundle(dir.path(), Some(&wrong)).unwrap_err().name(), "InvalidBundle");
    let missing = Manifest::parse("blk.to_out\n", "inline").unwrap();
    assert_eq!(read_bundle(dir.path(), Some(&missing)).unwrap_err().name(), "InvalidBundle");
}

#[test]
fn synthetic_sd14_bundle_counts() {
    let b = synthetic_bundle(&sd_v14_manifest(), 1).unwrap();
    assert_eq!(b.editable_param_count(), 19_169_280);
    assert_eq!(b.total_param_count(), 859_520_964);
    assert_eq!(b.embedding_dim().unwrap(), 768);
}

#[test]
fn job_config_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::copy(fixture("embedding_768x6.npy"), root.join("cat.npy")).unwrap();
    write_bundle(&root.join("w"), &small_bundle(), Dtype::F64).unwrap();
    fs::write(
        root.join("job.json"),
        r#"{"forget": ["cat.npy"], "alpha": "inf", "weights_in": "w", "weights_out": "out"}"#,
    )
    .unwrap();
    let cfg = load_job(root.join("job.json")).unwrap();
    assert_eq!(cfg.forget[0].path(), root.join("cat.npy"));
    assert_eq!(cfg.report_out, root.join("out").join("report.json"));

    fs::write(
        root.join("typo.json"),
        r#"{"forget": ["cat.npy"], "alhpa": 2, "weights_in": "w", "weights_out": "out"}"#,
    )
    .unwrap();
    let err = load_job(root.join("typo.json")).unwrap_err();
    assert_eq!(err.name(), "SchemaError");
    assert!(err.to_string().contains("alhpa"));

    fs::write(root.join("broken.json"), "{\"forget\": [").unwrap();
    assert_eq!(load_job(root.join("broken.json")).unwrap_err().name(), "SchemaError");
}
