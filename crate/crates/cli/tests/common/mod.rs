//! Helpers for driving the `nmrqc` binary from integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn nmrqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmrqc")).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

/// Runs `command` with `config` (JSON text) into `dir/out` and returns the
/// exit code, stderr and output directory.
pub fn run_with(dir: &Path, command: &[&str], config: Option<&str>, extra: &[&str]) -> (i32, String, PathBuf) {
    let out_dir = dir.join("out");
    let mut args: Vec<String> = command.iter().map(|s| s.to_string()).collect();
    if let Some(c) = config {
        args.push("--config".into());
        args.push(write_config(dir, c).display().to_string());
    }
    args.extend(["--out".to_string(), out_dir.display().to_string(), "--no-meta".to_string()]);
    args.extend(extra.iter().map(|s| s.to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = nmrqc(&argv);
    (code(&out), stderr(&out), out_dir)
}

/// Every file in `dir` keyed by name; empty when the directory is absent.
pub fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries {
            let e = e.unwrap();
            map.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
        }
    }
    map
}

/// Value column of a `key,value` summary CSV.
pub fn summary(dir: &Path, command: &str) -> BTreeMap<String, String> {
    let text = fs::read_to_string(dir.join(format!("{command}_summary.csv"))).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k.to_string(), v.trim_matches('"').to_string()))
        .collect()
}

pub fn summary_f64(dir: &Path, command: &str, key: &str) -> f64 {
    let s = summary(dir, command);
    s.get(key).unwrap_or_else(|| panic!("{key} missing from {command} summary")).parse().unwrap()
}
