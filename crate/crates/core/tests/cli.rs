use std::fs;
use std::path::Path;
use std::process::Command;

use ppir_core::bench::{parse_raw, write_raw, RepeatRecord};
use proptest::prelude::*;

fn ppir(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ppir")).args(args).output().unwrap()
}

fn write_config(dir: &Path, session: &str, extra: &str) -> String {
    let text = format!(
        "[images]\nfixture = blob2d\nfixture_seed = 3\n\
         [registration]\nmodel = affine\ncost = ssd\nlevels = 2:1, 1:0\n\
         [session]\n{session}\n[run]\nout = out\n{extra}"
    );
    let path = dir.join("run.ini");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn synth_writes_pair_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pair");
    let o = ppir(&[
        "synth",
        "--kind",
        "warped-pair",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["moving.pgm", "target.pgm", "truth.txt", "truth_displacement.raw"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn register_then_report_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "backend = mpc", "");
    let o = ppir(&["register", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["raw.tsv", "metrics.csv", "report.md", "ledger.tsv", "theta.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let again = dir.path().join("again");
    let o = ppir(&[
        "report",
        "--raw",
        out.join("raw.tsv").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--title",
        "register",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["metrics.csv", "report.md"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    let records = parse_raw(&fs::read_to_string(out.join("raw.tsv")).unwrap()).unwrap();
    assert!(records
        .iter()
        .any(|r| r.label.starts_with("mpc") && r.rmse_vs_clear.unwrap() < 0.05));
}

#[test]
fn bench_covers_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "backend = clear",
        "[bench]\nbackends = clear, mpc\nsamplings = full, urs(10%)\n",
    );
    let o = ppir(&["bench", "--config", &cfg, "--repeats", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.ini");
    assert_eq!(
        ppir(&["register", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, "[images]\nfixture = blob2d\ncolour = red\n").unwrap();
    let o = ppir(&["register", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let raw = dir.path().join("raw.tsv");
    fs::write(&raw, "not a header\n").unwrap();
    let o = ppir(&[
        "report",
        "--raw",
        raw.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO
}

prop_compose! {
    fn record()(
        label in "[a-z0-9/()%-]{1,12}",
        repeat in 0usize..100,
        intensity_error in finite(),
        iterations in 0usize..1000,
        rmse_vs_clear in prop::option::of(finite()),
        rmse_vs_truth in prop::option::of(finite()),
        secs in (0.0f64..1e4, 0.0f64..1e4),
        bytes in (any::<u64>(), any::<u64>()),
        rotations in any::<u64>(),
        he_mults in any::<u64>(),
        error in prop::option::of("[ -~\t\n]{0,20}"),
    ) -> RepeatRecord {
        RepeatRecord {
            label, repeat, intensity_error, iterations, rmse_vs_clear, rmse_vs_truth,
            party1_seconds: secs.0, party2_seconds: secs.1,
            party1_bytes: bytes.0, party2_bytes: bytes.1,
            rotations, he_mults, error,
        }
    }
}

proptest! {
    #[test]
    fn raw_records_round_trip(records in prop::collection::vec(record(), 0..8)) {
        let parsed = parse_raw(&write_raw(&records)).unwrap();
        prop_assert_eq!(parsed.len(), records.len());
        for (a, b) in parsed.iter().zip(&records) {
            let mut b = b.clone();
            b.error = b.error.map(|e| if e.is_empty() { "unspecified error".into() } else { e.replace(['\t', '\n', '\r'], " ") });
            prop_assert_eq!(a, &b);
        }
    }
}
