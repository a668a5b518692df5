//! Deterministic check reports.
//!
//! A [`Report`] collects per-check records, fitted constants, and free-form
//! metadata under an environment stamp derived purely from the run
//! configuration (package, version, suite, seed, grid shape) — never from
//! wall-clock time or the host — so a fixed configuration always renders to
//! identical bytes.
//!
//! Two output formats are provided: `structured-text` is JSON and round-trips
//! losslessly through [`parse_report`]; `comma-separated` is a flat table of
//! the check records only, one row per check, with the header
//! `id,digest,lhs,rhs,constant,pass`.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Order-sensitive 64-bit FNV-1a accumulator used to fingerprint check
/// inputs. Not cryptographic; collisions only cost diagnostic clarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Digest(u64);

impl Digest {
    pub fn new() -> Digest {
        Digest(0xcbf2_9ce4_8422_2325)
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Digest {
        for &b in data {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self
    }

    pub fn text(&mut self, s: &str) -> &mut Digest {
        self.bytes(s.as_bytes())
    }

    pub fn real(&mut self, v: f64) -> &mut Digest {
        self.bytes(&v.to_bits().to_le_bytes())
    }

    pub fn integer(&mut self, v: u64) -> &mut Digest {
        self.bytes(&v.to_le_bytes())
    }

    /// Fold in a function's values and its grid geometry.
    pub fn grid_function(&mut self, f: &GridFunction) -> &mut Digest {
        let g = f.grid();
        self.integer(g.dim() as u64);
        self.integer(g.cell_count() as u64);
        self.real(g.spacing());
        for &o in g.origin().iter().take(g.dim()) {
            self.real(o);
        }
        for &v in f.values() {
            self.real(v);
        }
        self
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

impl Default for Digest {
    fn default() -> Digest {
        Digest::new()
    }
}

/// One verified inequality or equality: `lhs ≤ constant · rhs` (or whatever
/// relation the suite documents for the id), with the verdict in `pass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub digest: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub pass: bool,
}

/// A constant fitted from a sequence of ratios: `value` is the max and
/// `stability` the max-over-median spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    pub stability: f64,
    pub samples: usize,
}

/// Configuration stamp tying a report to the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub suite: String,
    pub seed: u64,
    pub dim: usize,
    pub resolution: usize,
}

impl Environment {
    pub fn new(suite: impl Into<String>, seed: u64, dim: usize, resolution: usize) -> Environment {
        Environment {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            suite: suite.into(),
            seed,
            dim,
            resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub fitted: Vec<FittedConstant>,
    pub metadata: Vec<(String, String)>,
}

impl Report {
    pub fn new(environment: Environment) -> Report {
        Report { environment, checks: Vec::new(), fitted: Vec::new(), metadata: Vec::new() }
    }

    /// Record one check. All numeric fields must be finite so every format
    /// can represent them.
    pub fn check(&mut self, id: impl Into<String>, digest: &Digest, lhs: f64, rhs: f64, constant: f64, pass: bool) -> Result<()> {
        for v in [lhs, rhs, constant] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("check field {v}")));
            }
        }
        self.checks.push(CheckRecord { id: id.into(), digest: digest.hex(), lhs, rhs, constant, pass });
        Ok(())
    }

    /// Fit a constant from ratios and record it; returns `(value, stability)`.
    pub fn fit(&mut self, name: impl Into<String>, ratios: &[f64]) -> Result<(f64, f64)> {
        let (value, stability) = fit_constant(ratios)?;
        self.fitted.push(FittedConstant { name: name.into(), value, stability, samples: ratios.len() });
        Ok((value, stability))
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    /// Sort all sections, making emission order independent of insertion
    /// order.
    pub fn finalize(&mut self) {
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
        self.fitted.sort_by(|a, b| a.name.cmp(&b.name));
        self.metadata.sort();
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Fit the constant for a family of observed ratios: the maximum, paired
/// with its stability (max divided by median). Ratios must be positive and
/// finite.
pub fn fit_constant(ratios: &[f64]) -> Result<(f64, f64)> {
    if ratios.is_empty() {
        return Err(Error::EmptyFamily("constant fitting needs at least one ratio".into()));
    }
    if let Some(&bad) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidParameter(format!("ratios must be positive and finite, got {bad}")));
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = *sorted.last().unwrap();
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
    Ok((max, max / median))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// JSON; parses back to an equal [`Report`].
    StructuredText,
    /// Check records only, one CSV row per check.
    CommaSeparated,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::StructuredText => "structured-text",
            ReportFormat::CommaSeparated => "comma-separated",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "structured-text" | "text" | "json" => Ok(ReportFormat::StructuredText),
            "comma-separated" | "csv" => Ok(ReportFormat::CommaSeparated),
            other => Err(Error::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Render a report. Rust's shortest round-trip float formatting keeps both
/// formats lossless for finite values.
pub fn emit_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::StructuredText => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::CommaSeparated => {
            let mut out = String::from("id,digest,lhs,rhs,constant,pass\n");
            for c in &report.checks {
                out.push_str(&format!("{},{},{},{},{},{}\n", c.id, c.digest, c.lhs, c.rhs, c.constant, c.pass));
            }
            Ok(out)
        }
    }
}

/// Parse a structured-text rendering back into a report.
pub fn parse_report(s: &str) -> Result<Report> {
    Ok(serde_json::from_str(s)?)
}

/// Render and write to a file.
pub fn write_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, emit_report(report, format)?)?;
    Ok(())
}
