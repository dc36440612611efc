//! Dilation iteration `J^n f` towards the exact derivation, with a
//! certificate recording both the stated constant and the a-posteriori bound
//! `d(f, D) <= d(f, Jf) / (1 - L)`.

use alloc::vec::Vec;

use crate::algebra::Element;
use crate::error::{Error, Result};
use crate::maps::{
    generalized_distance_capped, ControlFunction, DilationMode, EvaluableMap, ProbeSet,
    DEFAULT_RATIO_CAP,
};
use crate::verifier::{constants, ResidualReport, BOUND_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilizerConfig {
    pub mode: DilationMode,
    pub max_iterations: u32,
    /// Threshold on the successive-iterate distance `d(J^n f, J^(n+1) f)`.
    pub convergence_tolerance: f64,
    pub ratio_cap: f64,
}

impl StabilizerConfig {
    pub fn new(mode: DilationMode) -> Self {
        StabilizerConfig {
            mode,
            max_iterations: 40,
            convergence_tolerance: 1e-9,
            ratio_cap: DEFAULT_RATIO_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.convergence_tolerance.is_finite() && self.convergence_tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive and finite"));
        }
        if !(self.ratio_cap > 0.0) {
            return Err(Error::invalid("ratio_cap", "must be positive"));
        }
        Ok(())
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityCertificate {
    pub mode: DilationMode,
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub contraction_constant: f64,
    pub n_star: u32,
    #[cfg_attr(
        feature = "serde",
        serde(rename = "d_f_Jf", with = "crate::serde_float")
    )]
    pub d_f_jf: f64,
    #[cfg_attr(
        feature = "serde",
        serde(rename = "d_f_D", with = "crate::serde_float")
    )]
    pub d_f_d: f64,
    /// `L/(1-L)` (expand) or `L/(3-3L)` (contract).
    pub paper_bound: f64,
    /// `d(f, Jf) / (1 - L)`.
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub sound_bound: f64,
    /// `d(J^n f, J^(n+1) f)` for `n = 0 .. n_star - 1`.
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float::vec"))]
    pub contraction_profile: Vec<f64>,
    pub paper_bound_holds: bool,
    pub sound_bound_holds: bool,
    pub converged: bool,
    pub residuals: Option<ResidualReport>,
}

impl StabilityCertificate {
    /// Largest relative gap between `profile[n]` and `L^n profile[0]` for
    /// `n <= n_max`. A zero profile counts as exact.
    pub fn geometric_deviation(&self, n_max: usize) -> f64 {
        let Some(&first) = self.contraction_profile.first() else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        let mut expected = first;
        for (n, &d) in self.contraction_profile.iter().enumerate().take(n_max + 1) {
            if n > 0 {
                expected *= self.contraction_constant;
            }
            let gap = (d - expected).abs();
            if gap > 0.0 {
                worst = worst.max(gap / expected);
            }
        }
        worst
    }

    /// Whether each step contracts by at least `L`, up to a relative
    /// tolerance and an absolute floor.
    pub fn profile_contracts(&self, rel_tol: f64, floor: f64) -> bool {
        self.contraction_profile
            .windows(2)
            .all(|w| w[1] <= self.contraction_constant * w[0] * (1.0 + rel_tol) + floor)
    }
}

/// One more dilation step. Consecutive steps of the same mode are merged so
/// `n` applications give `DilationIterate(f, n, mode)`.
pub fn apply_j(f: &EvaluableMap, mode: DilationMode) -> EvaluableMap {
    match f {
        EvaluableMap::DilationIterate {
            base,
            steps,
            mode: m,
        } if *m == mode => EvaluableMap::DilationIterate {
            base: base.clone(),
            steps: steps + 1,
            mode,
        },
        other => EvaluableMap::dilation(other.clone(), 1, mode),
    }
}

fn check_preconditions(
    f: &EvaluableMap,
    phi: &ControlFunction,
    cfg: &StabilizerConfig,
    probes: &ProbeSet,
) -> Result<f64> {
    cfg.validate()?;
    if probes.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    if phi.mode_hint != cfg.mode {
        return Err(Error::ModeMismatch {
            requested: cfg.mode.name(),
            control: phi.mode_hint.name(),
        });
    }
    if !(phi.exponent > 0.0) {
        return Err(Error::invalid(
            "exponent",
            "must be positive; |0|^p = 0 is not continuous for p <= 0",
        ));
    }
    let l = phi.check_contractive()?;
    let origin = f.evaluate(&Element::zeros(probes.dim()))?;
    if !origin.is_zero() {
        return Err(Error::NonZeroAtOrigin {
            norm: origin.norm(),
        });
    }
    Ok(l)
}

fn distance_at(
    iteration: usize,
    h: &EvaluableMap,
    g: &EvaluableMap,
    phi: &ControlFunction,
    probes: &ProbeSet,
    cap: f64,
) -> Result<f64> {
    generalized_distance_capped(h, g, phi, probes, cap).map_err(|e| match e {
        Error::NonFiniteEvaluation { node, probe } => Error::IterationOverflow {
            iteration,
            probe,
            node,
        },
        other => other,
    })
}

/// Iterates `J` until the successive distance drops below the tolerance or
/// the iteration budget is spent. Returns `D = J^(n_star) f`.
///
/// Residuals are left empty; the experiment pipeline fills them.
pub fn stabilize(
    f: &EvaluableMap,
    phi: &ControlFunction,
    cfg: &StabilizerConfig,
    probes: &ProbeSet,
) -> Result<(EvaluableMap, StabilityCertificate)> {
    let l = check_preconditions(f, phi, cfg, probes)?;
    let mut current = f.clone();
    let mut profile = Vec::new();
    let mut converged = false;
    for n in 0..cfg.max_iterations as usize {
        let next = apply_j(&current, cfg.mode);
        let step = distance_at(n, &current, &next, phi, probes, cfg.ratio_cap)?;
        profile.push(step);
        current = next;
        if step < cfg.convergence_tolerance {
            converged = true;
            break;
        }
    }
    let n_star = profile.len() as u32;
    let d_f_jf = profile[0];
    let d_f_d = distance_at(n_star as usize, f, &current, phi, probes, cfg.ratio_cap)?;
    let paper_bound = constants::theorem_constant(cfg.mode, l);
    let sound_bound = d_f_jf / (1.0 - l);
    let within = |bound: f64| converged && d_f_d <= bound * (1.0 + BOUND_TOLERANCE);
    let cert = StabilityCertificate {
        mode: cfg.mode,
        contraction_constant: l,
        n_star,
        d_f_jf,
        d_f_d,
        paper_bound,
        sound_bound,
        contraction_profile: profile,
        paper_bound_holds: within(paper_bound),
        sound_bound_holds: within(sound_bound),
        converged,
        residuals: None,
    };
    Ok((current, cert))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlternateOutcome {
    /// `d(f, g)`; infinite means `g` lies outside the set where the limit is unique.
    pub distance_from_start: f64,
    pub converged: bool,
    /// Generalized distance between the limit from `g` and the limit from `f`.
    pub limit_gap: f64,
    /// `d(g, D)` with `D` the limit from `f`.
    pub distance_to_limit: f64,
    /// `d(g, Jg)`.
    pub first_step: f64,
    /// `d(g, D) <= d(g, Jg) / (1 - L)`, within `BOUND_TOLERANCE`.
    pub a_posteriori_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlternativeReport {
    pub certificate: StabilityCertificate,
    /// Every recorded successive distance is finite.
    pub successive_finite: bool,
    pub converged: bool,
    /// All alternates at finite distance reach the same limit within
    /// `10 * convergence_tolerance`.
    pub unique_limit: bool,
    pub a_posteriori_holds: bool,
    pub alternates: Vec<AlternateOutcome>,
}

impl AlternativeReport {
    pub fn all_hold(&self) -> bool {
        self.successive_finite && self.converged && self.unique_limit && self.a_posteriori_holds
    }
}

/// Checks the four conclusions of the fixed point alternative empirically
/// for `f` and a list of alternate starting maps.
pub fn fixed_point_alternative_check(
    f: &EvaluableMap,
    phi: &ControlFunction,
    cfg: &StabilizerConfig,
    probes: &ProbeSet,
    alternates: &[EvaluableMap],
) -> Result<AlternativeReport> {
    let (limit, certificate) = stabilize(f, phi, cfg, probes)?;
    let l = certificate.contraction_constant;
    let successive_finite = certificate
        .contraction_profile
        .iter()
        .all(|d| d.is_finite());
    let cap = cfg.ratio_cap;
    let mut outcomes = Vec::with_capacity(alternates.len());
    for g in alternates {
        let distance_from_start = distance_at(0, f, g, phi, probes, cap)?;
        let (g_limit, g_cert) = stabilize(g, phi, cfg, probes)?;
        let limit_gap = distance_at(g_cert.n_star as usize, &limit, &g_limit, phi, probes, cap)?;
        let distance_to_limit = distance_at(0, g, &limit, phi, probes, cap)?;
        let first_step = g_cert.d_f_jf;
        outcomes.push(AlternateOutcome {
            distance_from_start,
            converged: g_cert.converged,
            limit_gap,
            distance_to_limit,
            first_step,
            a_posteriori_holds: distance_to_limit
                <= first_step / (1.0 - l) * (1.0 + BOUND_TOLERANCE),
        });
    }
    let in_lambda = || {
        outcomes
            .iter()
            .filter(|o| o.distance_from_start.is_finite())
    };
    let unique_limit =
        in_lambda().all(|o| o.converged && o.limit_gap <= 10.0 * cfg.convergence_tolerance);
    let a_posteriori_holds = in_lambda().all(|o| o.a_posteriori_holds);
    Ok(AlternativeReport {
        converged: certificate.converged,
        certificate,
        successive_finite,
        unique_limit,
        a_posteriori_holds,
        alternates: outcomes,
    })
}
