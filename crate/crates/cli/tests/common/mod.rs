#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn harqbeck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harqbeck"))
        .args(args)
        .output()
        .expect("spawn harqbeck")
}

pub fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

/// Runs a sweep command and returns stdout, panicking on a nonzero exit.
pub fn sweep(command: &str, config: &Path, extra: &[&str]) -> String {
    let mut args = vec![command, "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = harqbeck(&args);
    assert!(
        out.status.success(),
        "{command} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// CSV text as header plus rows of (column → cell) lookups.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Self {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().unwrap().iter().map(str::to_owned).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
            .collect();
        Self { header, rows }
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn get(&self, row: usize, name: &str) -> &str {
        &self.rows[row][self.col(name)]
    }

    pub fn num(&self, row: usize, name: &str) -> f64 {
        self.get(row, name).parse().unwrap_or_else(|_| panic!("{name} = {:?}", self.get(row, name)))
    }
}

/// Unit-variance Rayleigh, one round.
pub fn rayleigh_k1(rate: f64, snr_db: f64) -> Value {
    json!({
        "channel": {"kind": "exponential", "K": 1, "rho": 0.0, "mean": [[0.0, 0.0]]},
        "harq": {"rates": [rate], "snr_db": snr_db}
    })
}

/// Exponential model with the diagonal LOS mean `(1+i)/√2`.
pub fn exponential(k: usize, rho: f64, rates: &[f64], snr_db: Value) -> Value {
    let m = std::f64::consts::FRAC_1_SQRT_2;
    json!({
        "channel": {"kind": "exponential", "K": k, "rho": rho, "mean": vec![[m, m]; k]},
        "harq": {"rates": rates, "snr_db": snr_db}
    })
}
