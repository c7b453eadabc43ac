//! CSV and JSON emission with a stable, versioned schema. CSV carries full
//! double precision (17 significant digits) so goldens are byte-stable; the
//! JSON mirror holds the same values as native numbers.

use serde::Serialize;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Number of argmax slots in the CSV schema (the largest settings vector).
pub const ARGMAX_SLOTS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    pub family: String,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_m: Option<f64>,
    pub bell: f64,
    pub argmax: Vec<f64>,
    pub restarts: usize,
    pub converged: bool,
    pub dropout: bool,
}

#[derive(Debug, Serialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub records: Vec<ScanRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourRecord {
    pub t_cavity_s: f64,
    pub alpha: f64,
    pub bell: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_atom_s: Option<f64>,
    /// Smallest storage time with a Bell violation, refined by bisection
    /// between grid rows; absent when no grid row violates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_tc_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_at_threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ContourReport {
    pub schema_version: u32,
    pub summary: ContourSummary,
    pub records: Vec<ContourRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalityReport {
    pub schema_version: u32,
    pub t4_s: f64,
    pub t5_s: f64,
    /// Separation from the spatially-resolved inequalities as stated.
    pub l_m: f64,
    /// Separation when the detector dwell time is dropped from both
    /// inequalities (the published figure corresponds to this variant).
    pub l_no_detection_m: f64,
    pub t4_no_detection_s: f64,
    pub t5_no_detection_s: f64,
    pub waveguide_diameter_m: f64,
    pub constraint_residuals_m: [f64; 2],
    pub single_location_min_m: f64,
    pub constraints_satisfied: bool,
}

/// 17 significant digits, enough to reproduce the f64 bit pattern.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# scan schema {SCHEMA_VERSION}\n"));
    out.push_str("family,alpha,eta,separation_m,bell");
    for i in 0..ARGMAX_SLOTS {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",restarts,converged,dropout\n");
    for r in records {
        out.push_str(&r.family);
        out.push(',');
        out.push_str(&fmt_full(r.alpha));
        out.push(',');
        if let Some(eta) = r.eta {
            out.push_str(&fmt_full(eta));
        }
        out.push(',');
        if let Some(l) = r.separation_m {
            out.push_str(&fmt_full(l));
        }
        out.push(',');
        out.push_str(&fmt_full(r.bell));
        for i in 0..ARGMAX_SLOTS {
            out.push(',');
            if let Some(x) = r.argmax.get(i) {
                out.push_str(&fmt_full(*x));
            }
        }
        out.push_str(&format!(",{},{},{}\n", r.restarts, r.converged, r.dropout));
    }
    out
}

pub fn contour_csv(records: &[ContourRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# contour schema {SCHEMA_VERSION}\n"));
    out.push_str("t_cavity_s,alpha,bell\n");
    for r in records {
        out.push_str(&fmt_full(r.t_cavity_s));
        out.push(',');
        out.push_str(&fmt_full(r.alpha));
        out.push(',');
        out.push_str(&fmt_full(r.bell));
        out.push('\n');
    }
    out
}

pub fn write_pair(
    dir: &Path,
    stem: &str,
    csv: &str,
    json: &impl Serialize,
) -> std::io::Result<(std::path::PathBuf, std::path::PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, csv)?;
    let mut payload = serde_json::to_string_pretty(json).expect("report serializes");
    payload.push('\n');
    std::fs::write(&json_path, payload)?;
    Ok((csv_path, json_path))
}
