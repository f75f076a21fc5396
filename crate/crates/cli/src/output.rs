//! Deterministic output bundles: CSV/JSON artifacts plus a manifest of
//! content hashes. All floating-point values are printed with 17
//! significant digits so bundles are byte-reproducible and round-trip
//! exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use dualist_core::ensemble::EnsembleResult;
use dualist_core::spectral::SpectralSystem;
use sha2::{Digest, Sha256};

/// Formats a float with 17 significant digits (round-trip exact for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Collects output files in memory, then writes them plus `manifest.json`
/// (relative path -> sha256) in one pass.
pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Self {
        OutputWriter { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, rel_path: &str, bytes: Vec<u8>) {
        self.files.push((rel_path.to_string(), bytes));
    }

    pub fn add_json(&mut self, rel_path: &str, value: &serde_json::Value) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("json serialization");
        bytes.push(b'\n');
        self.add(rel_path, bytes);
    }

    /// Writes every collected file and the manifest; returns the manifest
    /// map of relative path to sha256 hex digest.
    pub fn finish(self) -> io::Result<BTreeMap<String, String>> {
        fs::create_dir_all(&self.dir)?;
        let mut manifest = BTreeMap::new();
        for (rel, bytes) in &self.files {
            let path = self.dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
            manifest.insert(rel.clone(), hex::encode(Sha256::digest(bytes)));
        }
        let manifest_json = serde_json::json!({ "files": manifest });
        let mut bytes = serde_json::to_vec_pretty(&manifest_json).expect("json serialization");
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(manifest)
    }
}

/// Renders `trajectories.csv`: one row per recorded checkpoint per member.
pub fn trajectories_csv(sys: &SpectralSystem, result: &EnsembleResult) -> Vec<u8> {
    let d = sys.dim();
    let k = sys.k();
    let mut header: Vec<String> = vec!["member_id".into(), "t".into()];
    header.extend((0..d).map(|i| format!("q{i}")));
    header.extend((1..=k).map(|i| format!("theta{i}")));
    let mut out = header.join(",") + "\n";
    for (id, rec) in result.records.iter().enumerate() {
        for (idx, &t) in rec.times.iter().enumerate() {
            let mut row: Vec<String> = vec![id.to_string(), fmt_f64(t)];
            row.extend(rec.positions[idx].iter().map(|v| fmt_f64(*v)));
            row.extend(rec.thetas[idx].0.iter().map(|v| fmt_f64(*v)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out.into_bytes()
}

/// Renders `events.csv`: one row per transition event per member.
pub fn events_csv(sys: &SpectralSystem, result: &EnsembleResult) -> Vec<u8> {
    let d = sys.dim();
    let k = sys.k();
    let mut header: Vec<String> = vec!["member_id".into(), "t".into()];
    header.extend((0..d).map(|i| format!("q{i}")));
    header.extend((1..=k).map(|i| format!("theta{i}_before")));
    header.extend((1..=k).map(|i| format!("theta{i}_after")));
    let mut out = header.join(",") + "\n";
    for (id, rec) in result.records.iter().enumerate() {
        for e in &rec.events {
            let mut row: Vec<String> = vec![id.to_string(), fmt_f64(e.time)];
            row.extend(e.position.iter().map(|v| fmt_f64(*v)));
            row.extend(e.theta_before.0.iter().map(|v| fmt_f64(*v)));
            row.extend(e.theta_after.0.iter().map(|v| fmt_f64(*v)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out.into_bytes()
}

/// Renders a plot-ready CSV from named columns of equal length.
pub fn columns_csv(columns: &[(&str, &[f64])]) -> Vec<u8> {
    let mut out = columns.iter().map(|(n, _)| n.to_string()).collect::<Vec<_>>().join(",") + "\n";
    let rows = columns.first().map_or(0, |(_, c)| c.len());
    for (_, col) in columns {
        assert_eq!(col.len(), rows, "ragged plot columns");
    }
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|(_, c)| fmt_f64(c[r])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Normalized histogram of samples over [lo, hi]; returns (centers, density).
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let w = (hi - lo) / bins as f64;
    let centers: Vec<f64> = (0..bins).map(|b| lo + (b as f64 + 0.5) * w).collect();
    let mut counts = vec![0.0f64; bins];
    for &x in samples {
        if x >= lo && x <= hi {
            let b = (((x - lo) / w) as usize).min(bins - 1);
            counts[b] += 1.0;
        }
    }
    let norm = (samples.len().max(1) as f64) * w;
    let density = counts.iter().map(|c| c / norm).collect();
    (centers, density)
}
