//! CSV tables, newline-delimited JSON verdicts and the shared provenance
//! header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// 17 significant digits, `.` decimal separator, independent of locale.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

pub fn provenance(cfg: &RunConfig) -> String {
    format!(
        "renorm-lab {VERSION} command={} config-sha256={} seed={}",
        cfg.command.name(),
        cfg.hash(),
        cfg.seed
    )
}

pub fn render_csv(cfg: &RunConfig, columns: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = format!("# {}\n{}\n", provenance(cfg), columns.join(","));
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_csv(cfg: &RunConfig, name: &str, columns: &[&str], rows: &[Vec<Cell>]) -> std::io::Result<PathBuf> {
    let path = cfg.output_dir.join(name);
    std::fs::write(&path, render_csv(cfg, columns, rows))?;
    Ok(path)
}

/// One pass/fail judgement: `holds ⇔ lhs ≤ rhs·(1 + slack)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub suite: String,
    pub case_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
    pub runtime_ms: u64,
    pub seed: u64,
    pub config_sha256: String,
}

pub struct Verdicts<'a> {
    cfg: &'a RunConfig,
    suite: String,
    hash: String,
    records: Vec<VerdictRecord>,
    clock: Instant,
}

impl<'a> Verdicts<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Verdicts {
            cfg,
            suite: cfg.command.name().to_string(),
            hash: cfg.hash(),
            records: Vec::new(),
            clock: Instant::now(),
        }
    }

    /// Records `lhs ≤ rhs` with the configured slack; the runtime is the
    /// time since the previous record.
    pub fn check(&mut self, case_id: impl Into<String>, lhs: f64, rhs: f64) -> bool {
        let holds = lhs <= rhs * (1.0 + self.cfg.tol("slack"));
        let ratio = if rhs != 0.0 { lhs / rhs } else { f64::INFINITY };
        let runtime_ms = self.clock.elapsed().as_millis() as u64;
        self.clock = Instant::now();
        self.records.push(VerdictRecord {
            suite: self.suite.clone(),
            case_id: case_id.into(),
            lhs,
            rhs,
            ratio,
            holds,
            runtime_ms,
            seed: self.cfg.seed,
            config_sha256: self.hash.clone(),
        });
        holds
    }

    pub fn records(&self) -> &[VerdictRecord] {
        &self.records
    }

    pub fn all_hold(&self) -> bool {
        self.records.iter().all(|r| r.holds)
    }

    pub fn write(&self) -> std::io::Result<PathBuf> {
        let path = self.cfg.output_dir.join(format!("{}.verdicts.ndjson", self.suite));
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&serde_json::to_string(r).expect("verdict serializes"));
            text.push('\n');
        }
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn read_verdicts(path: &Path) -> std::io::Result<Vec<VerdictRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
        assert_eq!(format_f64(f64::NAN), "nan");
    }

    #[test]
    fn csv_has_provenance_header() {
        let cfg = RunConfig::defaults(Command::Clt);
        let text = render_csv(&cfg, &["K", "label"], &[vec![4usize.into(), "a,b".into()]]);
        let mut lines = text.lines();
        let head = lines.next().unwrap();
        assert!(head.starts_with("# renorm-lab ") && head.contains(&cfg.hash()) && head.contains("seed=20240611"));
        assert_eq!(lines.next(), Some("K,label"));
        assert_eq!(lines.next(), Some("4,\"a,b\""));
    }

    #[test]
    fn verdict_slack() {
        let cfg = RunConfig::defaults(Command::Bl);
        let mut v = Verdicts::new(&cfg);
        assert!(v.check("a", 1.0 + 1e-10, 1.0));
        assert!(!v.check("b", 1.0 + 1e-6, 1.0));
        assert!(!v.all_hold());
        assert_eq!(v.records()[1].ratio, 1.0 + 1e-6);
    }
}
