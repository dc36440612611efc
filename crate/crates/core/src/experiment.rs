//! End-to-end pipeline for one parameter point: build the algebra and the
//! exact derivation, perturb it, check the premises, stabilize, compute
//! residuals of the limit and compare the constants.

use alloc::format;

use crate::algebra::{AlgebraDescriptor, Element, DEFAULT_NORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::maps::{
    generalized_distance, Arity, ControlFunction, DilationMode, EvaluableMap, ProbeSet,
};
use crate::perturbation::{
    make_inner_derivation, make_perturbed_map, verify_premise, PerturbationSpec, PremiseReport,
};
use crate::stabilizer::{stabilize, StabilityCertificate, StabilizerConfig};
use crate::verifier::{
    constants, residual_report, Coverage, LedgerEntry, LedgerFamily, BOUND_TOLERANCE,
};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeSpec {
    pub seed: u64,
    pub element_count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub mu_count: usize,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            seed: 1,
            element_count: 12,
            r_min: 0.25,
            r_max: 4.0,
            mu_count: 8,
        }
    }
}

impl ProbeSpec {
    pub fn build(&self, k: usize) -> Result<ProbeSet> {
        ProbeSet::new(
            k,
            self.seed,
            self.element_count,
            self.r_min,
            self.r_max,
            self.mu_count,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum RunStatus {
    /// Converged and the a-posteriori bound holds.
    Certified,
    PremiseFail,
    NotConverged,
    /// Converged but `d(f, D) > d(f, Jf) / (1 - L)`; never expected.
    SoundBoundViolated,
}

impl RunStatus {
    pub fn code(self) -> &'static str {
        match self {
            RunStatus::Certified => "CERTIFIED",
            RunStatus::PremiseFail => "PREMISE_FAIL",
            RunStatus::NotConverged => "NOT_CONVERGED",
            RunStatus::SoundBoundViolated => "SOUND_BOUND_VIOLATED",
        }
    }
}

/// Fully specified parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Experiment {
    pub matrix_size: usize,
    pub norm_tolerance: f64,
    pub derivation_seed: u64,
    /// Operator norm of the derivation generator `m`; zero gives the zero map.
    pub derivation_norm: f64,
    pub theta_prime: f64,
    pub exponent: f64,
    pub direction_seed: u64,
    pub theta: f64,
    pub arity: Arity,
    pub stabilizer: StabilizerConfig,
    pub probes: ProbeSpec,
}

impl Experiment {
    /// Canonical family `D0 + theta' |x|^p u` with `theta = 4 theta'`
    /// (`theta = 1` when `theta' = 0`). Seeds for `m`, `u` and the probes
    /// are `seed`, `seed + 1` and `seed + 2`.
    pub fn canonical(
        k: usize,
        theta_prime: f64,
        p: f64,
        mode: DilationMode,
        arity: Arity,
        seed: u64,
    ) -> Self {
        Experiment {
            matrix_size: k,
            norm_tolerance: DEFAULT_NORM_TOLERANCE,
            derivation_seed: seed,
            derivation_norm: 1.0,
            theta_prime,
            exponent: p,
            direction_seed: seed.wrapping_add(1),
            theta: if theta_prime > 0.0 {
                4.0 * theta_prime
            } else {
                1.0
            },
            arity,
            stabilizer: StabilizerConfig::new(mode),
            probes: ProbeSpec {
                seed: seed.wrapping_add(2),
                ..ProbeSpec::default()
            },
        }
    }

    pub fn mode(&self) -> DilationMode {
        self.stabilizer.mode
    }

    pub fn validate(&self) -> Result<()> {
        AlgebraDescriptor::new(self.matrix_size, self.norm_tolerance)?;
        if !(self.derivation_norm.is_finite() && self.derivation_norm >= 0.0) {
            return Err(Error::invalid(
                "derivation_norm",
                "must be finite and nonnegative",
            ));
        }
        if !(self.theta_prime.is_finite() && self.theta_prime >= 0.0) {
            return Err(Error::invalid(
                "theta_prime",
                "must be finite and nonnegative",
            ));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::invalid("theta", "must be positive and finite"));
        }
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::invalid("p", "must be positive and finite"));
        }
        match self.mode() {
            DilationMode::Expand if self.exponent >= 1.0 => {
                return Err(Error::invalid(
                    "mode",
                    format!("EXPAND requires p < 1, got p = {}", self.exponent),
                ))
            }
            DilationMode::Contract if self.exponent <= 1.0 => {
                return Err(Error::invalid(
                    "mode",
                    format!("CONTRACT requires p > 1, got p = {}", self.exponent),
                ))
            }
            _ => {}
        }
        self.stabilizer.validate()?;
        let p = &self.probes;
        if p.element_count == 0 {
            return Err(Error::EmptyProbeSet);
        }
        if !(p.r_min.is_finite() && p.r_max.is_finite() && p.r_min > 0.0 && p.r_max >= p.r_min) {
            return Err(Error::invalid("probes", "need 0 < r_min <= r_max, finite"));
        }
        Ok(())
    }

    pub fn control(&self) -> Result<ControlFunction> {
        ControlFunction::new(self.theta, self.exponent, self.arity, self.mode())
    }

    pub fn coverage(&self) -> Coverage {
        if constants::in_stated_range(self.mode(), self.exponent) {
            Coverage::InRange
        } else {
            Coverage::Extra
        }
    }

    pub fn algebra(&self) -> Result<AlgebraDescriptor> {
        AlgebraDescriptor::new(self.matrix_size, self.norm_tolerance)
    }

    /// The exact derivation `x -> m x - x m`.
    pub fn reference_derivation(&self) -> Result<EvaluableMap> {
        let alg = self.algebra()?;
        let m = if self.derivation_norm == 0.0 {
            Element::zeros(self.matrix_size)
        } else {
            alg.random_element(self.derivation_seed, self.derivation_norm)?
        };
        Ok(make_inner_derivation(m))
    }

    pub fn perturbed_map(&self) -> Result<EvaluableMap> {
        let spec = PerturbationSpec::power(self.theta_prime, self.exponent, self.direction_seed);
        make_perturbed_map(self.reference_derivation()?, &spec, &self.algebra()?)
    }

    fn ledger_skeleton(&self, status: RunStatus) -> LedgerEntry {
        let mode = self.mode();
        let l = constants::contraction_constant(mode, self.exponent);
        let paper_constant = match self.coverage() {
            Coverage::InRange => constants::stated_power_constant(mode, self.exponent),
            Coverage::Extra => None,
        };
        let derived_constant = constants::derived_power_constant(mode, self.exponent);
        LedgerEntry {
            family: LedgerFamily::of(self.arity, mode),
            coverage: self.coverage(),
            status,
            k: self.matrix_size,
            derivation_seed: self.derivation_seed,
            direction_seed: self.direction_seed,
            probe_seed: self.probes.seed,
            probe_count: self.probes.element_count,
            r_min: self.probes.r_min,
            r_max: self.probes.r_max,
            mu_count: self.probes.mu_count,
            max_iterations: self.stabilizer.max_iterations,
            tolerance: self.stabilizer.convergence_tolerance,
            theta_prime: self.theta_prime,
            theta: self.theta,
            p: self.exponent,
            mode,
            contraction_constant: l,
            measured_ratio: None,
            theorem_constant: constants::theorem_constant(mode, l),
            paper_constant,
            derived_constant,
            sound_constant: None,
            paper_holds: None,
            derived_holds: None,
            sound_holds: None,
            derived_tighter_than_paper: paper_constant.map(|c| derived_constant <= c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub premise: PremiseReport,
    /// Absent when the premise fails.
    pub certificate: Option<StabilityCertificate>,
    pub limit: Option<EvaluableMap>,
    /// The exact derivation the perturbation was built around.
    pub reference: EvaluableMap,
    pub perturbed: EvaluableMap,
    /// Generalized distance between the limit and the reference derivation.
    pub limit_gap: Option<f64>,
    pub ledger: LedgerEntry,
}

pub fn run_experiment(exp: &Experiment) -> Result<RunOutcome> {
    exp.validate()?;
    let reference = exp.reference_derivation()?;
    let f = exp.perturbed_map()?;
    let phi = exp.control()?;
    let probes = exp.probes.build(exp.matrix_size)?;

    let premise = verify_premise(&f, &phi, &probes)?;
    let premise_ok = match exp.coverage() {
        Coverage::InRange => premise.all_hold(),
        // Rows outside the stated range only exercise the additive part.
        Coverage::Extra => premise.holds[0],
    };
    if !premise_ok {
        return Ok(RunOutcome {
            status: RunStatus::PremiseFail,
            premise,
            certificate: None,
            limit: None,
            reference,
            perturbed: f,
            limit_gap: None,
            ledger: exp.ledger_skeleton(RunStatus::PremiseFail),
        });
    }

    let (limit, mut cert) = stabilize(&f, &phi, &exp.stabilizer, &probes)?;
    cert.residuals = Some(residual_report(&limit, &probes)?);
    let limit_gap = generalized_distance(&reference, &limit, &phi, &probes)?;

    let status = if !cert.converged {
        RunStatus::NotConverged
    } else if cert.sound_bound_holds {
        RunStatus::Certified
    } else {
        RunStatus::SoundBoundViolated
    };
    let mut ledger = exp.ledger_skeleton(status);
    let measured = cert.d_f_d;
    let claim = |c: f64| {
        cert.converged
            .then_some(measured <= c * (1.0 + BOUND_TOLERANCE))
    };
    ledger.measured_ratio = Some(measured);
    ledger.sound_constant = Some(cert.sound_bound);
    ledger.paper_holds = ledger.paper_constant.and_then(claim);
    ledger.derived_holds = claim(ledger.derived_constant);
    ledger.sound_holds = claim(cert.sound_bound);

    Ok(RunOutcome {
        status,
        premise,
        certificate: Some(cert),
        limit: Some(limit),
        reference,
        perturbed: f,
        limit_gap: Some(limit_gap),
        ledger,
    })
}
