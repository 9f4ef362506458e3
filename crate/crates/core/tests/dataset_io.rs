mod common;

use std::fs;
use std::path::Path;

use ccc_core::crowddata::{load_dataset, save_dataset, FeaturesFormat, LabeledSplit};
use ccc_core::models::{read_classifier, write_classifier};
use ccc_core::{Classifier, ClassifierKind, Error, Matrix, RngStream};
use common::{blobs_crowd, random_dataset};

fn saved(dir: &Path) {
    let mut rng = RngStream::new(1);
    let ds = random_dataset(20, 3, 4, 5, &mut rng);
    save_dataset(&ds, dir, FeaturesFormat::Csv).unwrap();
}

fn rewrite(path: &Path, from: &str, to: &str) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from:?} not in {}", path.display());
    fs::write(path, text.replacen(from, to, 1)).unwrap();
}

#[test]
fn roundtrip_is_identity_in_both_formats() {
    let mut ds = blobs_crowd(200, "COR-II", 2, 2, 8);
    ds.preset = Some("COR-II".into());
    let mut rng = RngStream::new(4);
    let test_x = Matrix::from_vec(7, 16, (0..7 * 16).map(|_| rng.normal() / 3.0).collect()).unwrap();
    let ds = ds
        .with_test(LabeledSplit {
            features: test_x,
            labels: vec![0, 1, 2, 3, 4, 5, 6],
        })
        .unwrap();
    for format in [FeaturesFormat::Csv, FeaturesFormat::Bin] {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path(), format).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back, ds, "{format:?}");
    }
}

#[test]
fn saving_twice_gives_identical_bytes() {
    let mut rng = RngStream::new(2);
    let ds = random_dataset(15, 2, 3, 4, &mut rng);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    save_dataset(&ds, a.path(), FeaturesFormat::Csv).unwrap();
    save_dataset(&load_dataset(a.path()).unwrap(), b.path(), FeaturesFormat::Csv).unwrap();
    for f in ["meta.json", "features.csv", "annotations.csv", "truth.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn rejects_out_of_range_label_with_line() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    let path = dir.path().join("annotations.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let f: Vec<&str> = lines[3].split(',').collect();
    lines[3] = format!("{},{},9", f[0], f[1]);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    match load_dataset(dir.path()) {
        Err(Error::Range { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rejects_duplicate_pair() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    let path = dir.path().join("annotations.csv");
    let text = fs::read_to_string(&path).unwrap();
    let second = text.lines().nth(1).unwrap().to_string();
    fs::write(&path, format!("{text}{second}\n")).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Duplicate { .. })));
}

#[test]
fn rejects_bad_header_and_garbage() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    rewrite(&dir.path().join("annotations.csv"), "instance,annotator,label", "instance,worker,label");
    assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));

    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    rewrite(&dir.path().join("features.csv"), "\n0,", "\n0,abc");
    assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));
}

#[test]
fn rejects_unlabeled_instance() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    let path = dir.path().join("annotations.csv");
    let text = fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("0,")).collect();
    fs::write(&path, kept.join("\n") + "\n").unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    fs::remove_file(dir.path().join("features.csv")).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn truncated_binary_features_rejected() {
    let mut rng = RngStream::new(3);
    let ds = random_dataset(10, 3, 3, 3, &mut rng);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path(), FeaturesFormat::Bin).unwrap();
    let path = dir.path().join("features.bin");
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_dataset(dir.path()).is_err());
}

#[test]
fn classifier_file_roundtrip() {
    let mut rng = RngStream::new(5);
    for (kind, hidden) in [(ClassifierKind::Linear, 0), (ClassifierKind::Mlp, 4)] {
        let clf = Classifier::new(kind, 6, hidden, 3, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_classifier(&clf, &mut buf).unwrap();
        let back = read_classifier(buf.as_slice()).unwrap();
        assert_eq!(back.params(), clf.params());
        assert_eq!(back.kind(), kind);
    }
}

#[test]
fn labeled_csv_roundtrip() {
    let mut rng = RngStream::new(6);
    let x = Matrix::from_vec(5, 3, (0..15).map(|_| rng.normal()).collect()).unwrap();
    let y = vec![0, 2, 1, 1, 0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.csv");
    ccc_core::crowddata::write_labeled_csv(&x, &y, &path).unwrap();
    let (bx, by) = ccc_core::crowddata::read_labeled_csv(&path).unwrap();
    assert_eq!(bx, x);
    assert_eq!(by, y);
    fs::write(&path, "id,f0,lab\n0,1.0,0\n").unwrap();
    assert!(matches!(ccc_core::crowddata::read_labeled_csv(&path), Err(Error::Format { .. })));
}
