//! Result persistence: solution CSVs, JSON sidecars, failure reports, and
//! the run manifest. CSV bytes are a pure function of the inputs so reruns
//! are byte-identical; wall-clock timestamps live only in the manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::checker::{CheckReport, ConditionKind};
use crate::grid::GridFunction;
use crate::homotopy::{SolutionRecord, SolveFailure};

/// 17 significant decimal digits — enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_solution_csv(
    path: &Path,
    x: &GridFunction,
    xd: &GridFunction,
) -> std::io::Result<()> {
    let mut out = String::from("t,x,x_delta\n");
    let mesh = x.mesh();
    for (i, &t) in mesh.nodes().iter().enumerate() {
        out.push_str(&fmt_f64(t));
        out.push(',');
        out.push_str(&fmt_f64(x.value(i)));
        out.push(',');
        out.push_str(&fmt_f64(xd.value(i)));
        out.push('\n');
    }
    std::fs::write(path, out)
}

pub fn solution_meta(rec: &SolutionRecord) -> serde_json::Value {
    json!({
        "window": rec.window,
        "window_bounds": [rec.window_bounds.0, rec.window_bounds.1],
        "x0": rec.x.value(0),
        "residual_eq": rec.residual_eq,
        "residual_fp": rec.residual_fp,
        "qnf": rec.qnf,
        "iterations": rec.iterations,
        "lambda_steps_taken": rec.lambda_steps_taken,
        "sup_x_delta": rec.x_delta.norm_inf(),
    })
}

pub fn failure_report(f: &SolveFailure) -> serde_json::Value {
    let last = f.last.as_ref().map(|s| {
        json!({
            "lambda": s.lambda,
            "defect": s.defect,
            "qnf": s.qnf,
            "x0": s.x.value(0),
            "sup_x_delta": s.x_delta.norm_inf(),
        })
    });
    json!({
        "window": f.window,
        "reason": f.reason.to_string(),
        "last_state": last,
    })
}

pub fn check_report_json(report: &CheckReport) -> serde_json::Value {
    let certs: Vec<_> = report
        .certificates
        .iter()
        .map(|c| {
            let condition = match c.condition {
                ConditionKind::MonotoneH => json!({"kind": "monotone-h"}),
                ConditionKind::NearConstantH { gamma } => {
                    json!({"kind": "near-constant-h", "gamma": gamma})
                }
                ConditionKind::UserAsserted => json!({"kind": "user-asserted"}),
            };
            json!({
                "j": c.j,
                "alpha": c.alpha,
                "strip": [c.strip.0, c.strip.1],
                "condition": condition,
                "g_sign": c.g_sign,
                "degree_sign": c.degree_sign,
                "reversed": c.reversed,
                "samples": c.samples,
                "min_margin": c.min_margin,
                "pass": c.pass,
                "witness": c.witness,
            })
        })
        .collect();
    json!({
        "pass": report.pass,
        "orientation": match report.orientation {
            crate::checker::Orientation::Standard => "standard",
            crate::checker::Orientation::Reversed => "reversed",
        },
        "a": report.a,
        "period": report.period,
        "spacing": {
            "pass": report.spacing.pass,
            "slack": report.spacing.slack,
        },
        "certificates": certs,
        "note": "sampled inequality check at the stated density; not an interval-arithmetic proof",
    })
}

/// Human-oriented one-strip-per-line summary of a check report.
pub fn check_report_table(report: &CheckReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>3} {:>14} {:>12} {:>6} {:>14} {:>6}\n",
        "j", "alpha", "condition", "sign", "min_margin", "pass"
    ));
    for c in &report.certificates {
        let cond = match c.condition {
            ConditionKind::MonotoneH => "monotone".to_string(),
            ConditionKind::NearConstantH { gamma } => format!("near-c({gamma:.3})"),
            ConditionKind::UserAsserted => "asserted".to_string(),
        };
        out.push_str(&format!(
            "{:>3} {:>14.6} {:>12} {:>6} {:>14.3e} {:>6}\n",
            c.j,
            c.alpha,
            cond,
            if c.g_sign > 0.0 { "+" } else { "-" },
            c.min_margin,
            if c.pass { "pass" } else { "FAIL" }
        ));
    }
    let worst = report.spacing.slack.iter().copied().fold(f64::INFINITY, f64::min);
    out.push_str(&format!(
        "spacing: {} (min slack {:.3e})\noverall: {}\n",
        if report.spacing.pass { "pass" } else { "FAIL" },
        worst,
        if report.pass { "PASS" } else { "FAIL" }
    ));
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub struct RunManifest {
    pub scenario_path: PathBuf,
    pub scenario_sha256: String,
    pub seed: u64,
    pub outcomes: Vec<serde_json::Value>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let doc = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "created_unix": created_unix,
            "scenario": self.scenario_path.display().to_string(),
            "scenario_sha256": self.scenario_sha256,
            "seed": self.seed,
            "outcomes": self.outcomes,
            "files": self.files,
        });
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{}", serde_json::to_string_pretty(&doc)?)
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(value)?)
}
