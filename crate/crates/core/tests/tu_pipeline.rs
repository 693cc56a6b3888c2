use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use spin_core::data::{
    build_features, default_scheme, load_tu_dataset, precompute_dataset, read_bank_cache, write_bank_cache,
    write_tu_dataset, FeatureScheme,
};
use spin_core::graph::OperatorKind;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/TOY")
}

#[test]
fn fixture_loads_with_remapped_labels() {
    let ds = load_tu_dataset(&fixture_dir(), "TOY").unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.class_values, vec![-1, 1]);
    assert_eq!(ds.labels(), vec![1, 0]);
    assert_eq!(ds.graphs[0].node_count(), 3);
    assert_eq!(ds.graphs[0].edge_count(), 3);
    assert_eq!(ds.graphs[1].edges(), &[(0, 1)]);
    assert_eq!(ds.node_labels, Some(vec![vec![0, 1, 0], vec![2, 2]]));
    assert_eq!(default_scheme(&ds), FeatureScheme::OneHotNodeLabel);
}

#[test]
fn features_and_bank_cache_survive_disk() {
    let ds = load_tu_dataset(&fixture_dir(), "TOY").unwrap();
    let ds = build_features(ds, FeatureScheme::OneHotNodeLabel).unwrap();
    assert_eq!(ds.feature_dim(), 3);
    assert_eq!(ds.graphs[1].features().row(0), &[0.0, 0.0, 1.0]);
    let banks = precompute_dataset(&ds, OperatorKind::NormalizedAdjacency, 2).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("toy.bank");
    write_bank_cache(BufWriter::new(File::create(&path).unwrap()), &banks).unwrap();
    let back = read_bank_cache(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back, banks);
    // triangle: the normalized operator is doubly stochastic, so row sums stay put
    let r2 = back[0].bank.branch(2);
    let total: f64 = r2.as_slice().iter().sum();
    assert!((total - 3.0).abs() < 1e-12);
}

#[test]
fn tu_round_trip_preserves_graphs_and_labels() {
    let ds = load_tu_dataset(&fixture_dir(), "TOY").unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_tu_dataset(tmp.path(), &ds).unwrap();
    let again = load_tu_dataset(tmp.path(), "TOY").unwrap();
    assert_eq!(again.graphs, ds.graphs);
    assert_eq!(again.class_values, ds.class_values);
    assert_eq!(again.node_labels, ds.node_labels);
}
