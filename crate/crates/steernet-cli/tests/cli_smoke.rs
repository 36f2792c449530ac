//! Smoke tests against the actual binary: artifact layout, determinism of
//! seeded outputs, and the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_steernet")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("steernet_smoke_{name}_{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_filters_ghaar_produces_grid_and_blob() {
    let dir = tmp("ghaar");
    let out = dir.join("f");
    ok(&[
        "gen-filters",
        "--method",
        "ghaar",
        "--shape",
        "3x3",
        "--count",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    let blob = std::fs::read(out.join("filters.nfw")).unwrap();
    assert_eq!(blob.len(), 4 * 9 * 4);
    let svg = std::fs::read_to_string(out.join("filters.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.matches("<rect").count() > 4 * 9);
    assert!(out.join("config.resolved").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn gen_filters_ones_blob_is_all_ones() {
    let dir = tmp("ones");
    let out = dir.join("f");
    ok(&[
        "gen-filters",
        "--method",
        "ones",
        "--shape",
        "3x3",
        "--count",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let blob = std::fs::read(out.join("filters.nfw")).unwrap();
    for ch in blob.chunks_exact(4) {
        assert_eq!(f32::from_le_bytes(ch.try_into().unwrap()), 1.0);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn same_seed_gives_identical_blobs() {
    let dir = tmp("seeded");
    for sub in ["a", "b"] {
        ok(&[
            "gen-filters",
            "--method",
            "psine",
            "--shape",
            "5x5",
            "--count",
            "8",
            "--seed",
            "99",
            "--out",
            dir.join(sub).to_str().unwrap(),
        ]);
    }
    let a = std::fs::read(dir.join("a/filters.nfw")).unwrap();
    let b = std::fs::read(dir.join("b/filters.nfw")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn gen_data_is_deterministic_and_handles_empty() {
    let dir = tmp("data");
    for sub in ["a", "b"] {
        ok(&[
            "gen-data",
            "--kind",
            "blobs-cls5",
            "--count",
            "12",
            "--seed",
            "5",
            "--out",
            dir.join(sub).to_str().unwrap(),
        ]);
    }
    let a = std::fs::read(dir.join("a/data.nfds")).unwrap();
    let b = std::fs::read(dir.join("b/data.nfds")).unwrap();
    assert_eq!(a, b);
    ok(&[
        "gen-data",
        "--kind",
        "shapes-seg",
        "--count",
        "0",
        "--out",
        dir.join("empty").to_str().unwrap(),
    ]);
    let ds = steernet_cli::data::load(&dir.join("empty/data.nfds")).unwrap();
    assert!(ds.is_empty());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_match_error_classes() {
    let dir = tmp("codes");
    // unknown method -> config error, code 2
    let out = run(&[
        "gen-filters",
        "--method",
        "wavelettron",
        "--out",
        dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    // missing net file -> io error, code 3
    let out = run(&[
        "eval",
        "--net",
        dir.join("missing").to_str().unwrap(),
        "--data",
        dir.join("missing.nfds").to_str().unwrap(),
        "--out",
        dir.join("y").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn prune_fraction_zero_keeps_weights_byte_identical() {
    let dir = tmp("prune0");
    let net_dir = dir.join("net");
    ok(&[
        "init",
        "--arch",
        "tinyresnet",
        "--method",
        "ghaar",
        "--seed",
        "3",
        "--out",
        net_dir.to_str().unwrap(),
    ]);
    let pruned = dir.join("pruned");
    ok(&[
        "prune",
        "--net",
        net_dir.to_str().unwrap(),
        "--fraction",
        "0",
        "--out",
        pruned.to_str().unwrap(),
    ]);
    let before = std::fs::read(net_dir.join("net.nfw")).unwrap();
    let after = std::fs::read(pruned.join("net.nfw")).unwrap();
    assert_eq!(before, after);
    assert!(pruned.join("prune_report.txt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn explain_without_data_uses_uniform_weights() {
    let dir = tmp("explain");
    let net_dir = dir.join("net");
    ok(&[
        "init",
        "--arch",
        "tinydensenet",
        "--method",
        "dct2",
        "--out",
        net_dir.to_str().unwrap(),
    ]);
    let ex = dir.join("ex");
    ok(&[
        "explain",
        "--net",
        net_dir.to_str().unwrap(),
        "--out",
        ex.to_str().unwrap(),
    ]);
    assert!(ex.join("heatmap.svg").exists());
    assert!(ex.join("spectra.csv").exists());
    assert!(ex.join("e0.csv").exists());
    assert!(ex.join("e1.csv").exists());
    let cfg = std::fs::read_to_string(ex.join("config.resolved")).unwrap();
    assert!(cfg.contains("weights = uniform"));
    std::fs::remove_dir_all(&dir).ok();
}

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[test]
fn reported_checksum_matches_blob() {
    let dir = tmp("checksum");
    let out = dir.join("f");
    ok(&[
        "gen-filters",
        "--method",
        "dct2",
        "--shape",
        "3x3",
        "--count",
        "16",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let blob = std::fs::read(out.join("filters.nfw")).unwrap();
    let cfg = std::fs::read_to_string(out.join("config.resolved")).unwrap();
    let line = cfg
        .lines()
        .find(|l| l.starts_with("blob_fnv1a64"))
        .expect("checksum recorded");
    assert!(line.ends_with(&format!("{:016x}", fnv(&blob))));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_seed() {
    let dir = tmp("cfgfile");
    std::fs::write(dir.join("run.cfg"), "seed = 31\n").unwrap();
    for (sub, args) in [("a", vec!["--seed", "31"]), ("b", vec!["--config"])] {
        let mut cmd = vec![
            "gen-filters".to_string(),
            "--method".into(),
            "ghaar".into(),
            "--count".into(),
            "4".into(),
            "--out".into(),
            dir.join(sub).to_str().unwrap().to_string(),
        ];
        if args[0] == "--config" {
            cmd.push("--config".into());
            cmd.push(dir.join("run.cfg").to_str().unwrap().to_string());
        } else {
            cmd.extend(args.iter().map(|s| s.to_string()));
        }
        let out = Command::new(bin()).args(&cmd).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(dir.join("a/filters.nfw")).unwrap(),
        std::fs::read(dir.join("b/filters.nfw")).unwrap()
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn guide_methods_require_guide() {
    let dir = tmp("guide");
    let out = run(&[
        "init",
        "--arch",
        "tinyresnet",
        "--method",
        "guidedsteer",
        "--out",
        dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let _ = Path::new("");
    std::fs::remove_dir_all(&dir).ok();
}
