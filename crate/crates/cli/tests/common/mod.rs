#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn ccc(args: &[&str]) -> Output {
    ccc_env(args, &[])
}

pub fn ccc_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ccc"));
    cmd.args(args).env_remove("CCC_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn ccc")
}

/// Runs and panics with stderr on failure.
pub fn ok(args: &[&str]) -> String {
    let out = ccc(args);
    assert!(
        out.status.success(),
        "ccc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

/// Column `name` of a CSV file as strings.
pub fn column(p: &Path, name: &str) -> Vec<String> {
    let text = read(p);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}
