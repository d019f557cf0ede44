//! Result rows, CSV emission, plot scripts, and the process error type.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::config::Diagnostic;

pub const FORMAT_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "command,scheme,n,eta,theta_rad,j_hz,t_omega_s,qfi,\
delta_phi_rad,delta_theta_rad,delta_omega_rad_s,fidelity,extra";

/// Errors mapped onto process exit codes: parse 2, validation 3, numeric 4.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Validation(Vec<Diagnostic>),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation(vec![Diagnostic {
            field: field.into(),
            message: message.into(),
        }])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "parse error: {msg}"),
            CliError::Validation(diags) => {
                let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
                write!(f, "{}", lines.join("\n"))
            }
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ringsim::Error> for CliError {
    fn from(err: ringsim::Error) -> Self {
        CliError::invariant("(library)", err.to_string())
    }
}

/// One CSV row. `None` encodes as the empty string; present values must be
/// finite or the run aborts with a numeric error.
#[derive(Debug, Clone, Default)]
pub struct ResultRecord {
    pub command: &'static str,
    pub scheme: Option<u8>,
    pub n: Option<f64>,
    pub eta: Option<f64>,
    pub theta_rad: Option<f64>,
    pub j_hz: Option<f64>,
    pub t_omega_s: Option<f64>,
    pub qfi: Option<f64>,
    pub delta_phi_rad: Option<f64>,
    pub delta_theta_rad: Option<f64>,
    pub delta_omega_rad_s: Option<f64>,
    pub fidelity: Option<f64>,
    pub extra: String,
}

impl ResultRecord {
    fn numeric_fields(&self) -> [(&'static str, Option<f64>); 10] {
        [
            ("n", self.n),
            ("eta", self.eta),
            ("theta_rad", self.theta_rad),
            ("j_hz", self.j_hz),
            ("t_omega_s", self.t_omega_s),
            ("qfi", self.qfi),
            ("delta_phi_rad", self.delta_phi_rad),
            ("delta_theta_rad", self.delta_theta_rad),
            ("delta_omega_rad_s", self.delta_omega_rad_s),
            ("fidelity", self.fidelity),
        ]
    }

    fn to_line(&self) -> String {
        let cells: Vec<String> = [
            self.n,
            self.eta,
            self.theta_rad,
            self.j_hz,
            self.t_omega_s,
            self.qfi,
            self.delta_phi_rad,
            self.delta_theta_rad,
            self.delta_omega_rad_s,
            self.fidelity,
        ]
        .iter()
        .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
        .collect();
        let scheme = self.scheme.map(|s| s.to_string()).unwrap_or_default();
        format!("{},{},{},{}", self.command, scheme, cells.join(","), self.extra)
    }
}

/// Render the full CSV: a format-version comment, the header, one line per
/// record, then any trailing comment lines. Rows arrive already in grid
/// order, so identical inputs produce identical bytes.
pub fn render_csv(records: &[ResultRecord], trailing: &[String]) -> Result<String, CliError> {
    for (i, record) in records.iter().enumerate() {
        for (field, value) in record.numeric_fields() {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(CliError::Numeric(format!(
                        "row {i} ({}): {field} is not finite",
                        record.command
                    )));
                }
            }
        }
    }
    let mut out = String::new();
    out.push_str(&format!("# format_version={FORMAT_VERSION}\n"));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.to_line());
        out.push('\n');
    }
    for line in trailing {
        out.push_str(&format!("# {line}\n"));
    }
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::invariant(path.display().to_string(), e.to_string()))
}

/// Python source for the sweep plots; `csv_name` is baked in as the default
/// input and the image name derives from it.
pub fn plot_script(command: &str, csv_name: &str) -> Option<String> {
    let body = match command {
        "loss-sweep" => PLOT_LOSS_SWEEP_BODY,
        "fidelity-sweep" => PLOT_FIDELITY_SWEEP_BODY,
        "fluctuation-study" => PLOT_FLUCTUATION_BODY,
        _ => return None,
    };
    Some(format!("{PLOT_PRELUDE}{body}").replace("{csv}", csv_name))
}

const PLOT_PRELUDE: &str = r##"#!/usr/bin/env python3
import csv
import os
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
stem = os.path.splitext(path)[0]
"##;

const PLOT_LOSS_SWEEP_BODY: &str = r#"
for scheme in sorted({row["scheme"] for row in rows}):
    pts = sorted(
        (float(row["eta"]), float(row["delta_phi_rad"]))
        for row in rows
        if row["scheme"] == scheme
    )
    plt.plot([x for x, _ in pts], [y for _, y in pts], marker="o", label=f"scheme {scheme}")
plt.xlabel("eta")
plt.ylabel("delta_phi_rad")
plt.yscale("log")
plt.legend()
plt.tight_layout()
plt.savefig(stem + ".png", dpi=160)
print("wrote", stem + ".png")
"#;

const PLOT_FIDELITY_SWEEP_BODY: &str = r#"
pts = sorted((float(row["n"]), float(row["fidelity"])) for row in rows)
plt.plot([x for x, _ in pts], [y for _, y in pts], marker="o")
plt.axhline(0.99, linestyle="--", color="gray")
threshold = [float(row["n"]) for row in rows if "threshold=true" in row["extra"]]
if threshold:
    plt.axvline(threshold[0], linestyle=":", color="red", label=f"threshold N={threshold[0]:.0f}")
    plt.legend()
plt.xlabel("n")
plt.ylabel("fidelity")
plt.tight_layout()
plt.savefig(stem + ".png", dpi=160)
print("wrote", stem + ".png")
"#;

const PLOT_FLUCTUATION_BODY: &str = r##"
exponent = None
with open(path) as fh:
    for line in fh:
        if line.startswith("# fit_exponent="):
            exponent = float(line.split("=", 1)[1])
pts = sorted((float(row["n"]), float(row["delta_phi_rad"])) for row in rows)
plt.loglog([x for x, _ in pts], [y for _, y in pts], marker="o")
if exponent is not None:
    plt.title(f"fit exponent {exponent:.3f}")
plt.xlabel("n (mean)")
plt.ylabel("delta_phi_rad")
plt.tight_layout()
plt.savefig(stem + ".png", dpi=160)
print("wrote", stem + ".png")
"##;
