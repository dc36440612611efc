//! Grid execution. Rows run in parallel and are collected in grid order.

use rayon::prelude::*;
use ternlab_core::{run_experiment, RunOutcome};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::CsvRow;

#[derive(Debug)]
pub struct SweepPoint {
    pub config: ExperimentConfig,
    pub result: Result<RunOutcome, CliError>,
}

impl SweepPoint {
    pub fn row(&self) -> CsvRow {
        match &self.result {
            Ok(out) => CsvRow::from_outcome(out),
            Err(e) => {
                let c = &self.config;
                let code = match e {
                    CliError::Core(inner) => inner.code(),
                    _ => "INVALID_PARAMETER",
                };
                CsvRow::failed(
                    c.perturbation.p,
                    c.perturbation.theta_prime,
                    c.algebra.k,
                    c.derivation.seed,
                    code,
                )
            }
        }
    }
}

pub fn run_point(config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    Ok(run_experiment(&config.experiment()?)?)
}

/// Runs every grid point of `template`. A failing point yields an error
/// row; it never aborts the sweep. `jobs = None` uses rayon's default pool.
pub fn run_sweep(
    template: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<Vec<SweepPoint>, CliError> {
    let points = template.grid_points();
    let work = || {
        points
            .into_par_iter()
            .map(|config| {
                let result = run_point(&config);
                SweepPoint { config, result }
            })
            .collect::<Vec<_>>()
    };
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::field("jobs", e.to_string()))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}
