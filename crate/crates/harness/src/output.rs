//! Persistence: every output directory ends up with a `manifest.json` that
//! records the config hash, code version, seeds and a digest of every file.

use std::fs;
use std::path::{Path, PathBuf};

use burgerlab_core::io::{save_field, save_noise_path, write_csv};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::suites::{Check, SuiteOutcome};
use crate::HarnessError;

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub suite: String,
    pub status: String,
    pub error: Option<String>,
    pub pass: Option<bool>,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    fn new(suite: &str, cfg: &ExperimentConfig) -> Self {
        let canonical = cfg.canonical_json();
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            suite: suite.into(),
            status: "running".into(),
            error: None,
            pass: None,
            config_sha256: sha256_hex(canonical.as_bytes()),
            config: serde_json::from_str(&canonical).expect("canonical json"),
            seeds: vec![cfg.noise.seed],
            files: vec![],
        }
    }

    fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }
}

fn entries(dir: &Path) -> Result<Vec<FileEntry>, HarnessError> {
    let mut out = vec![];
    for e in fs::read_dir(dir)? {
        let e = e?;
        let name = e.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || !e.file_type()?.is_file() {
            continue;
        }
        let bytes = fs::read(e.path())?;
        out.push(FileEntry { name, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

fn persist(outcome: &SuiteOutcome, dir: &Path) -> Result<(), HarnessError> {
    for t in &outcome.tables {
        write_csv(&dir.join(&t.file), &t.header, &t.rows)?;
    }
    for (name, f) in &outcome.fields {
        save_field(f, &dir.join(name))?;
    }
    if let Some((name, p)) = &outcome.noise {
        save_noise_path(p, &dir.join(name))?;
    }
    let report = json!({
        "suite": outcome.suite,
        "pass": outcome.pass(),
        "checks": outcome.checks,
        "report": outcome.report,
    });
    fs::write(dir.join(REPORT), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    Ok(())
}

/// Runs `f` with `dir` as its only output location. A manifest marked
/// `running` is written first and replaced with the final one, so a crash
/// never leaves files without a manifest.
pub fn run_in_dir(
    suite: &str,
    cfg: &ExperimentConfig,
    dir: &Path,
    f: impl FnOnce() -> Result<SuiteOutcome, HarnessError>,
) -> Result<(SuiteOutcome, Manifest), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new(suite, cfg);
    manifest.write(dir)?;
    let result = f().and_then(|outcome| persist(&outcome, dir).map(|_| outcome));
    manifest.files = entries(dir)?;
    match result {
        Ok(outcome) => {
            manifest.status = "complete".into();
            manifest.pass = Some(outcome.pass());
            manifest.seeds = outcome.seeds.clone();
            manifest.write(dir)?;
            Ok((outcome, manifest))
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            manifest.write(dir)?;
            Err(e)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct StoredReport {
    suite: String,
    pass: bool,
    checks: Vec<Check>,
}

/// Collects every `report.json` in `dir` and its immediate subdirectories
/// into `summary.csv` and `summary.txt`.
pub fn aggregate(dir: &Path) -> Result<(bool, String), HarnessError> {
    let mut paths: Vec<PathBuf> = vec![];
    if dir.join(REPORT).is_file() {
        paths.push(dir.join(REPORT));
    }
    for e in fs::read_dir(dir)? {
        let p = e?.path().join(REPORT);
        if p.is_file() {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!("no {REPORT} found under {}", dir.display())));
    }
    let mut reports = vec![];
    for p in &paths {
        let text = fs::read_to_string(p)?;
        let r: StoredReport = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
        reports.push(r);
    }
    let mut csv = String::from("suite,check,pass,value,threshold,se\n");
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!("{:<12} {}\n", r.suite, if r.pass { "PASS" } else { "FAIL" }));
        for c in &r.checks {
            csv.push_str(&format!("{},{},{},{:?},{:?},{:?}\n", r.suite, c.name, c.pass, c.value, c.threshold, c.se));
            text.push_str(&format!(
                "  {} {:<44} value {:>12.5e}  threshold {:>12.5e}\n",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            ));
        }
    }
    fs::write(dir.join("summary.csv"), csv)?;
    fs::write(dir.join("summary.txt"), &text)?;
    let files = ["summary.csv", "summary.txt"]
        .iter()
        .map(|n| {
            let bytes = fs::read(dir.join(n))?;
            Ok(FileEntry { name: n.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "suite": "report",
        "sources": paths.iter().map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string()).collect::<Vec<_>>(),
        "files": files,
    });
    fs::write(dir.join("summary.manifest.json"), serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
    Ok((reports.iter().all(|r| r.pass), text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_matches_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
