//! Report files and their canonical serialization.
//!
//! Reports must be byte-for-byte reproducible for a given (scenario, seed,
//! version), so the writer below fixes key order, sorts checks by name and
//! prints every float with 17 significant digits in the C locale. Wall-clock
//! timings are optional and excluded from the canonical form.

use crate::dynamics::CheckOutcome;
use serde::Deserialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub pass: bool,
    pub constants: BTreeMap<String, f64>,
    pub worst_margin: f64,
    pub samples: u64,
    #[serde(default)]
    pub note: Option<String>,
    /// Milliseconds; populated only when timings are requested and never
    /// part of the canonical bytes.
    #[serde(default)]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Report {
    pub version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(scenario_hash: String, seed: u64, outcomes: Vec<CheckOutcome>) -> Report {
        let mut checks: Vec<CheckRecord> = outcomes
            .into_iter()
            .map(|o| CheckRecord {
                check: o.name.to_string(),
                pass: o.pass,
                constants: o.constants,
                worst_margin: clamp_finite(o.worst_margin),
                samples: o.samples,
                note: o.note,
                runtime_ms: None,
            })
            .collect();
        checks.sort_by(|a, b| a.check.cmp(&b.check));
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_hash,
            seed,
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Canonical JSON: fixed key order, sorted checks, 17-significant-digit
    /// floats, no timing data, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        self.render(false)
    }

    /// Same as canonical plus per-check `runtime_ms` entries.
    pub fn to_json_with_timings(&self) -> String {
        self.render(true)
    }

    fn render(&self, timings: bool) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        s.push_str(&format!("  \"version\": {},\n", json_str(&self.version)));
        s.push_str(&format!(
            "  \"scenario_hash\": {},\n",
            json_str(&self.scenario_hash)
        ));
        s.push_str(&format!("  \"seed\": {},\n", self.seed));
        s.push_str("  \"checks\": [\n");
        for (i, c) in self.checks.iter().enumerate() {
            s.push_str("    {\n");
            s.push_str(&format!("      \"check\": {},\n", json_str(&c.check)));
            s.push_str(&format!("      \"pass\": {},\n", c.pass));
            s.push_str("      \"constants\": {");
            let mut first = true;
            for (k, v) in &c.constants {
                if !first {
                    s.push(',');
                }
                first = false;
                s.push_str(&format!("\n        {}: {}", json_str(k), fmt_f64(*v)));
            }
            if !c.constants.is_empty() {
                s.push_str("\n      ");
            }
            s.push_str("},\n");
            s.push_str(&format!(
                "      \"worst_margin\": {},\n",
                fmt_f64(clamp_finite(c.worst_margin))
            ));
            s.push_str(&format!("      \"samples\": {}", c.samples));
            if let Some(n) = &c.note {
                s.push_str(&format!(",\n      \"note\": {}", json_str(n)));
            }
            if timings {
                if let Some(ms) = c.runtime_ms {
                    s.push_str(&format!(",\n      \"runtime_ms\": {}", fmt_f64(ms)));
                }
            }
            s.push_str("\n    }");
            if i + 1 < self.checks.len() {
                s.push(',');
            }
            s.push('\n');
        }
        s.push_str("  ]\n}\n");
        s
    }
}

fn clamp_finite(v: f64) -> f64 {
    if v.is_nan() {
        return 0.0;
    }
    v.clamp(-1e300, 1e300)
}

/// 17 significant digits, C locale, lowercase scientific.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", clamp_finite(v))
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Fixed CSV header for sampled-map exports.
pub const CSV_MAP_HEADER: &str = "x_in,y_in,z_in,x_out,y_out,z_out";
/// Fixed CSV header for curve exports.
pub const CSV_CURVE_HEADER: &str = "x,y,z";

pub fn csv_map_row(inp: &crate::heis::HPoint, out: &crate::heis::HPoint) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_f64(inp.x),
        fmt_f64(inp.y),
        fmt_f64(inp.z),
        fmt_f64(out.x),
        fmt_f64(out.y),
        fmt_f64(out.z)
    )
}

pub fn csv_curve_row(p: &crate::heis::HPoint) -> String {
    format!("{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z))
}
