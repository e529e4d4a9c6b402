#![allow(dead_code)]

use std::path::{Path, PathBuf};

use provex::datalog::io::{load_inputs, Inputs};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load(name: &str) -> Inputs {
    let dir = fixtures_dir().join(name);
    let domains = dir.join("domains.txt");
    let domains = domains.exists().then_some(domains);
    load_inputs(&dir.join("program.dl"), &dir, domains.as_deref()).expect("fixture loads")
}

pub fn golden(name: &str, file: &str) -> Vec<String> {
    let text = std::fs::read_to_string(fixtures_dir().join(name).join(file)).expect("golden file");
    text.lines().map(str::to_string).collect()
}

pub mod gen;
