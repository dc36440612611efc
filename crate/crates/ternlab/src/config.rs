//! Experiment configuration files.
//!
//! The format is TOML restricted to one level of sections:
//!
//! ```toml
//! [algebra]
//! k = 3
//!
//! [perturbation]
//! theta_prime = 0.01
//! p = 0.5
//!
//! [stabilizer]
//! mode = "auto"
//! ```
//!
//! Every key is optional; omitted keys take the defaults below. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ternlab_core::{
    algebra::DEFAULT_NORM_TOLERANCE, maps::DEFAULT_RATIO_CAP, Arity, DilationMode,
    Error as CoreError, Experiment, ProbeSpec, StabilizerConfig,
};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algebra: AlgebraSection,
    pub derivation: DerivationSection,
    pub perturbation: PerturbationSection,
    pub control: ControlSection,
    pub stabilizer: StabilizerSection,
    pub probes: ProbesSection,
    pub outputs: OutputsSection,
    pub grid: GridSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraSection {
    pub k: usize,
    pub norm_tolerance: f64,
}

impl Default for AlgebraSection {
    fn default() -> Self {
        AlgebraSection {
            k: 2,
            norm_tolerance: DEFAULT_NORM_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivationSection {
    /// Seed for the generator `m` of `x -> m x - x m`.
    pub seed: u64,
    /// Operator norm of `m`; zero selects the zero derivation.
    pub norm: f64,
}

impl Default for DerivationSection {
    fn default() -> Self {
        DerivationSection { seed: 1, norm: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    pub theta_prime: f64,
    pub p: f64,
    pub direction_seed: u64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            theta_prime: 0.01,
            p: 0.5,
            direction_seed: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    /// Absolute `theta`. When absent, `theta = theta_ratio * theta_prime`,
    /// or 1 if `theta_prime` is zero.
    pub theta: Option<f64>,
    pub theta_ratio: f64,
    /// 6 for the bracket premise on triples, 4 for the diagonal one.
    pub arity: usize,
}

impl Default for ControlSection {
    fn default() -> Self {
        ControlSection {
            theta: None,
            theta_ratio: 4.0,
            arity: 6,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    Expand,
    Contract,
    /// `expand` for `p < 1`, `contract` for `p > 1`.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilizerSection {
    pub mode: ModeChoice,
    pub max_iterations: u32,
    pub tolerance: f64,
    pub ratio_cap: f64,
}

impl Default for StabilizerSection {
    fn default() -> Self {
        let base = StabilizerConfig::new(DilationMode::Expand);
        StabilizerSection {
            mode: ModeChoice::Auto,
            max_iterations: base.max_iterations,
            tolerance: base.convergence_tolerance,
            ratio_cap: DEFAULT_RATIO_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbesSection {
    pub seed: u64,
    pub element_count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub mu_count: usize,
}

impl Default for ProbesSection {
    fn default() -> Self {
        let p = ProbeSpec {
            seed: 3,
            ..ProbeSpec::default()
        };
        ProbesSection {
            seed: p.seed,
            element_count: p.element_count,
            r_min: p.r_min,
            r_max: p.r_max,
            mu_count: p.mu_count,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    /// `run` defaults to JSON; `sweep` always writes CSV.
    pub format: Option<OutputFormat>,
    pub path: Option<PathBuf>,
    /// Discrepancy ledger, appended to on every run.
    pub ledger: Option<PathBuf>,
}

/// Axes of a sweep. An empty axis keeps the template value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub p: Vec<f64>,
    pub theta_prime: Vec<f64>,
    pub k: Vec<usize>,
    /// Base seeds; each sets derivation, direction and probe seeds to
    /// `s`, `s + 1`, `s + 2`.
    pub seed: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    /// Applies a base seed to all three seeded draws.
    pub fn set_seed(&mut self, seed: u64) {
        self.derivation.seed = seed;
        self.perturbation.direction_seed = seed.wrapping_add(1);
        self.probes.seed = seed.wrapping_add(2);
    }

    pub fn mode(&self) -> Result<DilationMode, CliError> {
        let p = self.perturbation.p;
        match self.stabilizer.mode {
            ModeChoice::Expand => Ok(DilationMode::Expand),
            ModeChoice::Contract => Ok(DilationMode::Contract),
            ModeChoice::Auto if p < 1.0 => Ok(DilationMode::Expand),
            ModeChoice::Auto if p > 1.0 => Ok(DilationMode::Contract),
            ModeChoice::Auto => Err(CliError::field(
                "perturbation.p",
                format!("no dilation mode contracts at p = {p}"),
            )),
        }
    }

    fn check_finite(&self) -> Result<(), CliError> {
        let fields = [
            ("algebra.norm_tolerance", self.algebra.norm_tolerance),
            ("derivation.norm", self.derivation.norm),
            ("perturbation.theta_prime", self.perturbation.theta_prime),
            ("perturbation.p", self.perturbation.p),
            ("control.theta", self.control.theta.unwrap_or(1.0)),
            ("control.theta_ratio", self.control.theta_ratio),
            ("stabilizer.tolerance", self.stabilizer.tolerance),
            ("stabilizer.ratio_cap", self.stabilizer.ratio_cap),
            ("probes.r_min", self.probes.r_min),
            ("probes.r_max", self.probes.r_max),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(CliError::field(name, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Resolves the configuration into a validated experiment.
    pub fn experiment(&self) -> Result<Experiment, CliError> {
        self.check_finite()?;
        let mode = self.mode()?;
        let theta_prime = self.perturbation.theta_prime;
        let theta = match self.control.theta {
            Some(t) => t,
            None if theta_prime > 0.0 => self.control.theta_ratio * theta_prime,
            None => 1.0,
        };
        let arity = Arity::from_count(self.control.arity)
            .map_err(|e| CliError::field("control.arity", e.to_string()))?;
        let exp = Experiment {
            matrix_size: self.algebra.k,
            norm_tolerance: self.algebra.norm_tolerance,
            derivation_seed: self.derivation.seed,
            derivation_norm: self.derivation.norm,
            theta_prime,
            exponent: self.perturbation.p,
            direction_seed: self.perturbation.direction_seed,
            theta,
            arity,
            stabilizer: StabilizerConfig {
                mode,
                max_iterations: self.stabilizer.max_iterations,
                convergence_tolerance: self.stabilizer.tolerance,
                ratio_cap: self.stabilizer.ratio_cap,
            },
            probes: ProbeSpec {
                seed: self.probes.seed,
                element_count: self.probes.element_count,
                r_min: self.probes.r_min,
                r_max: self.probes.r_max,
                mu_count: self.probes.mu_count,
            },
        };
        exp.validate().map_err(|e| self.name_field(e))?;
        Ok(exp)
    }

    fn name_field(&self, e: CoreError) -> CliError {
        match e {
            CoreError::InvalidParameter { name, reason } => {
                let field = match name {
                    "k" | "matrix_size" => "algebra.k",
                    "norm_tolerance" => "algebra.norm_tolerance",
                    "derivation_norm" => "derivation.norm",
                    "theta_prime" => "perturbation.theta_prime",
                    "p" | "exponent" => "perturbation.p",
                    "theta" => "control.theta",
                    "mode" => "stabilizer.mode",
                    "max_iterations" => "stabilizer.max_iterations",
                    "convergence_tolerance" | "tolerance" => "stabilizer.tolerance",
                    "ratio_cap" => "stabilizer.ratio_cap",
                    "probes" => "probes.r_min/probes.r_max",
                    other => other,
                };
                CliError::field(field, reason)
            }
            CoreError::EmptyProbeSet => {
                CliError::field("probes.element_count", "must be positive".into())
            }
            other => CliError::Core(other),
        }
    }

    /// Grid points in iteration order: `p` outermost, then `theta_prime`,
    /// `k`, `seed`.
    pub fn grid_points(&self) -> Vec<ExperimentConfig> {
        fn axis<T: Copy>(values: &[T], fallback: Option<T>) -> Vec<Option<T>> {
            if values.is_empty() {
                vec![fallback]
            } else {
                values.iter().copied().map(Some).collect()
            }
        }
        let mut points = Vec::new();
        for p in axis(&self.grid.p, Some(self.perturbation.p)) {
            for tp in axis(&self.grid.theta_prime, Some(self.perturbation.theta_prime)) {
                for k in axis(&self.grid.k, Some(self.algebra.k)) {
                    for seed in axis(&self.grid.seed, None) {
                        let mut c = self.clone();
                        c.grid = GridSection::default();
                        c.perturbation.p = p.unwrap_or(c.perturbation.p);
                        c.perturbation.theta_prime = tp.unwrap_or(c.perturbation.theta_prime);
                        c.algebra.k = k.unwrap_or(c.algebra.k);
                        if let Some(s) = seed {
                            c.set_seed(s);
                        }
                        points.push(c);
                    }
                }
            }
        }
        points
    }
}
