//! Certificate JSON and sweep CSV rows.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use ternlab_core::{LedgerEntry, PremiseReport, RunOutcome, RunStatus, StabilityCertificate};

use crate::error::CliError;

pub const CERTIFICATE_FORMAT: &str = "ternlab-certificate/1";
pub const CSV_VERSION_LINE: &str = "# ternlab-sweep/1";

/// The first sixteen columns are a fixed contract; `k`, `seed` and `status`
/// follow.
pub const CSV_COLUMNS: [&str; 19] = [
    "p",
    "theta_prime",
    "theta",
    "mode",
    "L",
    "n_star",
    "d_f_Jf",
    "d_f_D",
    "paper_constant",
    "derived_constant",
    "sound_constant",
    "paper_holds",
    "derived_holds",
    "sound_holds",
    "max_residual",
    "converged",
    "k",
    "seed",
    "status",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format: String,
    pub status: RunStatus,
    pub premise: PremiseReport,
    pub certificate: Option<StabilityCertificate>,
    /// Generalized distance from the limit to the unperturbed derivation.
    pub limit_gap: Option<f64>,
    pub ledger: LedgerEntry,
}

impl CertificateFile {
    pub fn from_outcome(out: &RunOutcome) -> Self {
        CertificateFile {
            format: CERTIFICATE_FORMAT.to_owned(),
            status: out.status,
            premise: out.premise.clone(),
            certificate: out.certificate.clone(),
            limit_gap: out.limit_gap,
            ledger: out.ledger.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One sweep row. Every cell is already rendered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvRow(pub Vec<String>);

/// Shortest round-trip decimal: Rust's positional or exponent form,
/// whichever is shorter.
pub fn num(v: f64) -> String {
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

impl CsvRow {
    pub fn from_outcome(out: &RunOutcome) -> Self {
        let l = &out.ledger;
        let cert = out.certificate.as_ref();
        CsvRow(vec![
            num(l.p),
            num(l.theta_prime),
            num(l.theta),
            l.mode.name().to_owned(),
            num(l.contraction_constant),
            cert.map(|c| c.n_star.to_string()).unwrap_or_default(),
            opt_num(cert.map(|c| c.d_f_jf)),
            opt_num(cert.map(|c| c.d_f_d)),
            opt_num(l.paper_constant),
            num(l.derived_constant),
            opt_num(l.sound_constant),
            opt_bool(l.paper_holds),
            opt_bool(l.derived_holds),
            opt_bool(l.sound_holds),
            opt_num(cert.and_then(|c| c.residuals).map(|r| r.max_normalized())),
            opt_bool(cert.map(|c| c.converged)),
            l.k.to_string(),
            l.derivation_seed.to_string(),
            out.status.code().to_owned(),
        ])
    }

    /// Row for a grid point that failed before producing an outcome.
    pub fn failed(p: f64, theta_prime: f64, k: usize, seed: u64, code: &str) -> Self {
        let mut cells = vec![String::new(); CSV_COLUMNS.len()];
        cells[0] = num(p);
        cells[1] = num(theta_prime);
        cells[16] = k.to_string();
        cells[17] = seed.to_string();
        cells[18] = format!("ERROR_{code}");
        CsvRow(cells)
    }

    pub fn status(&self) -> &str {
        &self.0[18]
    }

    pub fn get(&self, column: &str) -> Option<&str> {
        let i = CSV_COLUMNS.iter().position(|c| *c == column)?;
        Some(&self.0[i])
    }
}

/// Version line, header, then the rows in the given order.
pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        // No cell ever contains a comma, quote or newline.
        let _ = writeln!(out, "{}", row.0.join(","));
    }
    out
}

/// Inverse of [`render_csv`]; skips the version line.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h == CSV_COLUMNS.join(",") => {}
        other => return Err(CliError::Parse(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .map(|l| {
            let cells: Vec<String> = l.split(',').map(str::to_owned).collect();
            if cells.len() == CSV_COLUMNS.len() {
                Ok(CsvRow(cells))
            } else {
                Err(CliError::Parse(format!(
                    "row has {} cells: {l}",
                    cells.len()
                )))
            }
        })
        .collect()
}
