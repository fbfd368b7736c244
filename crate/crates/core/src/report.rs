//! Run artifacts: the JSON report, per-estimator CSV tables, and the
//! line-delimited orbit cache.

use crate::config::Scenario;
use crate::equilibrium::{HypothesesReport, IntegralEstimate, MeasureLyapunov};
use crate::error::Result;
use crate::orbits::Enumeration;
use crate::pressure::{PressureEstimate, PressureRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub value: f64,
    /// Expected common value when the system has one in closed form.
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Max absolute pairwise difference between the estimators.
    pub max_gap: f64,
}

impl Comparison {
    pub fn new(rows: Vec<ComparisonRow>) -> Self {
        let mut max_gap = 0.0f64;
        for a in &rows {
            for b in &rows {
                max_gap = max_gap.max((a.value - b.value).abs());
            }
        }
        Comparison { rows, max_gap }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub potential: String,
    pub depth: usize,
    pub free_energy: f64,
    pub entropy: f64,
    pub integral: IntegralEstimate,
    pub lyapunov: Option<MeasureLyapunov>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnumerationSummary {
    pub n: usize,
    pub fixed_points: usize,
    pub orbits: usize,
    pub saddles: usize,
    pub max_residual: f64,
    pub rejections: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    /// RFC 3339; the only field excluded from determinism comparisons.
    pub timestamp: String,
    pub label: String,
    pub config: Scenario,
    pub config_digest: String,
    pub seed: u64,
    #[serde(default)]
    pub enumerations: Vec<EnumerationSummary>,
    #[serde(default)]
    pub pressures: BTreeMap<String, PressureEstimate>,
    #[serde(default)]
    pub comparison: Option<Comparison>,
    #[serde(default)]
    pub measures: Vec<MeasureSummary>,
    #[serde(default)]
    pub hypotheses: Option<HypothesesReport>,
    #[serde(default)]
    pub invariants: Vec<InvariantResult>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(config: &Scenario) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            timestamp: chrono::Utc::now().to_rfc3339(),
            label: config.label(),
            config: config.clone(),
            config_digest: digest(&serde_json::to_string(config).unwrap_or_default()),
            seed: config.seed,
            enumerations: Vec::new(),
            pressures: BTreeMap::new(),
            comparison: None,
            measures: Vec::new(),
            hypotheses: None,
            invariants: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// FNV-1a, hex; stable across runs and platforms for identical config text.
pub fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

/// Byte-for-byte report equality modulo the timestamp field.
pub fn reports_match(a: &Path, b: &Path) -> Result<bool> {
    let mut va: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a)?)?;
    let mut vb: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(b)?)?;
    for v in [&mut va, &mut vb] {
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timestamp");
        }
    }
    Ok(va == vb)
}

/// One CSV per estimate, header `n,count,value`.
pub fn write_table(path: &Path, records: &[PressureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "count", "value"])?;
    for r in records {
        w.write_record([r.n.to_string(), r.count.to_string(), format!("{:.17e}", r.value)])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// orbit cache

/// One cached orbit: enough to rebuild the enumeration table without rerunning
/// the root finder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CachedOrbit {
    pub key: String,
    pub n: usize,
    pub period: usize,
    pub base_point: Vec<f64>,
    pub residual: f64,
    #[serde(default)]
    pub word: Option<Vec<u16>>,
}

/// Append one enumeration to a line-delimited cache file.
pub fn cache_enumeration(path: &Path, key: &str, e: &Enumeration) -> Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for o in &e.orbits {
        let rec = CachedOrbit {
            key: key.to_string(),
            n: e.n,
            period: o.period,
            base_point: o.base_point.coords().to_vec(),
            residual: o.residual,
            word: o.word.clone(),
        };
        serde_json::to_writer(&mut f, &rec)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Cached orbits for (key, n), or None when the cache has no such entries.
pub fn cached_orbits(path: &Path, key: &str, n: usize) -> Result<Option<Vec<CachedOrbit>>> {
    if !path.exists() {
        return Ok(None);
    }
    let f = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CachedOrbit = serde_json::from_str(&line)?;
        if rec.key == key && rec.n == n {
            out.push(rec);
        }
    }
    Ok(if out.is_empty() { None } else { Some(out) })
}
