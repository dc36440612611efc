//! Append-only discrepancy ledger in CSV form. A header is written when the
//! file is new or empty; existing rows are never rewritten.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use ternlab_core::verifier::Coverage;
use ternlab_core::LedgerEntry;

use crate::error::CliError;
use crate::report::num;

pub const LEDGER_COLUMNS: [&str; 28] = [
    "family",
    "coverage",
    "status",
    "k",
    "derivation_seed",
    "direction_seed",
    "probe_seed",
    "probe_count",
    "r_min",
    "r_max",
    "mu_count",
    "max_iterations",
    "tolerance",
    "theta_prime",
    "theta",
    "p",
    "mode",
    "L",
    "measured_ratio",
    "theorem_constant",
    "paper_constant",
    "derived_constant",
    "sound_constant",
    "paper_holds",
    "derived_holds",
    "sound_holds",
    "derived_tighter_than_paper",
    "coverage_note",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn ledger_row(e: &LedgerEntry) -> Vec<String> {
    let (coverage, note) = match e.coverage {
        Coverage::InRange => ("IN_RANGE", ""),
        Coverage::Extra => (
            "EXTRA",
            "outside the stated exponent range; no stated constant",
        ),
    };
    vec![
        e.family.name().to_owned(),
        coverage.to_owned(),
        e.status.code().to_owned(),
        e.k.to_string(),
        e.derivation_seed.to_string(),
        e.direction_seed.to_string(),
        e.probe_seed.to_string(),
        e.probe_count.to_string(),
        num(e.r_min),
        num(e.r_max),
        e.mu_count.to_string(),
        e.max_iterations.to_string(),
        num(e.tolerance),
        num(e.theta_prime),
        num(e.theta),
        num(e.p),
        e.mode.name().to_owned(),
        num(e.contraction_constant),
        opt_num(e.measured_ratio),
        num(e.theorem_constant),
        opt_num(e.paper_constant),
        num(e.derived_constant),
        opt_num(e.sound_constant),
        opt(e.paper_holds),
        opt(e.derived_holds),
        opt(e.sound_holds),
        opt(e.derived_tighter_than_paper),
        note.to_owned(),
    ]
}

/// Appends rows in order under an exclusive handle.
pub fn append(path: &Path, rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    let empty = file.metadata().map_err(|e| CliError::io(path, e))?.len() == 0;
    let mut buf = String::new();
    if empty {
        buf.push_str(&LEDGER_COLUMNS.join(","));
        buf.push('\n');
    }
    for row in rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    file.write_all(buf.as_bytes())
        .map_err(|e| CliError::io(path, e))
}
