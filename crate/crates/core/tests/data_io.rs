use krpool::data::{
    load_descriptor, load_sequence, preprocess, save_descriptor, save_sequence, synth_order_benchmark, synth_smooth,
    DESCRIPTOR_EXTENSION, SEQUENCE_EXTENSION,
};
use krpool::{pool, DatasetManifest, FeatureSequence, ManifestEntry, PoolerConfig, Scheme};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sequence_files_round_trip(n in 2usize..30, d in 1usize..6, seed in any::<u64>(), csv in any::<bool>()) {
        let x = synth_smooth(n, d, seed, 0.7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ext = if csv { "csv" } else { SEQUENCE_EXTENSION };
        let path = dir.path().join(format!("x.{ext}"));
        save_sequence(&x, &path).unwrap();
        let back = load_sequence(&path).unwrap();
        if csv {
            prop_assert!((back.data() - x.data()).amax() <= 1e-15 * x.data().amax().max(1.0));
        } else {
            prop_assert_eq!(back.data(), x.data());
        }
    }
}

#[test]
fn descriptor_files_round_trip_for_every_scheme() {
    let x = synth_smooth(14, 3, 21, 0.3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for scheme in Scheme::ALL {
        let cfg = PoolerConfig { p: 2, ..PoolerConfig::new(scheme) };
        let d = pool(&x, &cfg).unwrap().descriptor;
        let path = dir.path().join(format!("{scheme}.{DESCRIPTOR_EXTENSION}"));
        save_descriptor(&d, &path).unwrap();
        assert_eq!(load_descriptor(&path).unwrap(), d, "{scheme}");
    }
}

#[test]
fn truncated_files_are_rejected() {
    let x = synth_smooth(5, 2, 1, 0.3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(format!("x.{SEQUENCE_EXTENSION}"));
    save_sequence(&x, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_sequence(&path).is_err());
}

#[test]
fn order_benchmark_files_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_order_benchmark(3, 10, 2, 5, a.path()).unwrap();
    synth_order_benchmark(3, 10, 2, 5, b.path()).unwrap();
    let manifest = DatasetManifest::read(a.path().join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.entries.len(), 6);
    assert!(manifest.splits().len() >= 2);
    for e in &manifest.entries {
        assert_eq!(std::fs::read(a.path().join(&e.path)).unwrap(), std::fs::read(b.path().join(&e.path)).unwrap());
    }
    assert_eq!(
        std::fs::read(a.path().join("manifest.jsonl")).unwrap(),
        std::fs::read(b.path().join("manifest.jsonl")).unwrap()
    );
}

#[test]
fn manifest_round_trip_and_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let entries = vec![
        ManifestEntry { path: "a.seq".into(), label: "forward".into(), split: 1 },
        ManifestEntry { path: "b.seq".into(), label: "reverse".into(), split: 2 },
    ];
    let m = DatasetManifest::new(entries, dir.path()).unwrap();
    let path = dir.path().join("manifest.jsonl");
    m.write(&path).unwrap();
    let back = DatasetManifest::read(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.resolve(&back.entries[0]), dir.path().join("a.seq"));
    assert_eq!(back.classes(), vec!["forward".to_string(), "reverse".to_string()]);
}

#[test]
fn preprocessing_oracle() {
    let x = FeatureSequence::new(DMatrix::from_row_slice(4, 1, &[4.0, -9.0, 16.0, 1.0])).unwrap();
    // Signed square root [2, -3, 4, 1], then a causal moving average of width 2.
    let got = preprocess(&x, 2, true).unwrap();
    let want: [f64; 4] = [2.0, -0.5, 0.5, 2.5];
    for (i, w) in want.iter().enumerate() {
        assert!((got.data()[(i, 0)] - w).abs() < 1e-15);
    }
    assert_eq!(preprocess(&x, 1, false).unwrap(), x);
}
