//! Residuals of the target identities, bound checks against the stability
//! constants, and ledger entries comparing stated and certified constants.
//!
//! Every residual is a supremum over sampled arguments of a defect norm.
//! The normalized value divides each defect by `1 + sum of argument norms`;
//! the raw value keeps the plain norm for exact-zero assertions.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{ternary_product, Element};
use crate::error::Result;
use crate::experiment::{run_experiment, Experiment, RunStatus};
use crate::maps::{
    generalized_distance, Arity, ControlFunction, DilationMode, EvaluableMap, ProbeSet,
};

/// Relative slack for bound comparisons.
pub const BOUND_TOLERANCE: f64 = 1e-6;

/// `mu f((x+y+z)/3) + mu f((x-2y+z)/3) + mu f((x+y-2z)/3) - f(mu x)`.
pub fn jensen_defect(
    f: &EvaluableMap,
    x: &Element,
    y: &Element,
    z: &Element,
    mu: Complex64,
) -> Result<Element> {
    let (w, t, s) = jensen_arguments(x, y, z)?;
    let sum = f
        .evaluate(&w)?
        .add(&f.evaluate(&t)?)?
        .add(&f.evaluate(&s)?)?;
    sum.scale(mu)?.sub(&f.evaluate(&x.scale(mu)?)?)
}

/// `((x+y+z)/3, (x-2y+z)/3, (x+y-2z)/3)`.
pub fn jensen_arguments(
    x: &Element,
    y: &Element,
    z: &Element,
) -> Result<(Element, Element, Element)> {
    let w = x.add(y)?.add(z)?.div_real(3.0);
    let t = x.sub(&y.scale_real(2.0))?.add(z)?.div_real(3.0);
    let s = x.add(y)?.sub(&z.scale_real(2.0))?.div_real(3.0);
    Ok((w, t, s))
}

/// `f(w + t + s) - f(w) - f(t) - f(s)`.
pub fn additivity_defect(
    f: &EvaluableMap,
    w: &Element,
    t: &Element,
    s: &Element,
) -> Result<Element> {
    let whole = f.evaluate(&w.add(t)?.add(s)?)?;
    whole
        .sub(&f.evaluate(w)?)?
        .sub(&f.evaluate(t)?)?
        .sub(&f.evaluate(s)?)
}

/// `f(lambda x) - lambda f(x)`.
pub fn homogeneity_defect(f: &EvaluableMap, x: &Element, lambda: Complex64) -> Result<Element> {
    f.evaluate(&x.scale(lambda)?)?
        .sub(&f.evaluate(x)?.scale(lambda)?)
}

/// `f([abc]) - [f(a)bc] - [af(b)c] - [abf(c)]`.
pub fn derivation_defect(
    f: &EvaluableMap,
    a: &Element,
    b: &Element,
    c: &Element,
) -> Result<Element> {
    let lhs = f.evaluate(&ternary_product(a, b, c)?)?;
    lhs.sub(&ternary_product(&f.evaluate(a)?, b, c)?)?
        .sub(&ternary_product(a, &f.evaluate(b)?, c)?)?
        .sub(&ternary_product(a, b, &f.evaluate(c)?)?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Residual {
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub normalized: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub raw: f64,
}

impl Residual {
    fn record(&mut self, defect: f64, argument_norms: f64) {
        self.raw = self.raw.max(defect);
        self.normalized = self.normalized.max(defect / (1.0 + argument_norms));
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub jensen: Residual,
    pub additivity: Residual,
    pub homogeneity_t: Residual,
    pub homogeneity_c: Residual,
    pub derivation: Residual,
    pub jordan: Residual,
}

impl ResidualReport {
    pub fn max_normalized(&self) -> f64 {
        [
            self.jensen,
            self.additivity,
            self.homogeneity_t,
            self.homogeneity_c,
            self.derivation,
            self.jordan,
        ]
        .iter()
        .map(|r| r.normalized)
        .fold(0.0, f64::max)
    }
}

/// Jensen-type defect over probe triples and unit scalars.
pub fn jensen_residual(d: &EvaluableMap, probes: &ProbeSet) -> Result<Residual> {
    let mut out = Residual::default();
    for [i, j, l] in probes.triples() {
        let (x, y, z) = (
            &probes.elements[i],
            &probes.elements[j],
            &probes.elements[l],
        );
        let scale = x.norm() + y.norm() + z.norm();
        for mu in &probes.unit_scalars {
            out.record(jensen_defect(d, x, y, z, *mu)?.norm(), scale);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubstitutionReport {
    /// `f(w+t+s) - f(w) - f(t) - f(s)` over the substituted triples.
    pub additivity: Residual,
    /// Largest entrywise error of `w + t + s = x`, relative to the largest
    /// entry of `x`, `y`, `z`.
    pub reconstruction_error: f64,
}

/// Cauchy additivity on the substituted triples `w, t, s` built from probe
/// triples, together with the change-of-variables check `w + t + s = x`.
pub fn substitution_check(d: &EvaluableMap, probes: &ProbeSet) -> Result<SubstitutionReport> {
    let mut additivity = Residual::default();
    let mut reconstruction_error: f64 = 0.0;
    for [i, j, l] in probes.triples() {
        let (x, y, z) = (
            &probes.elements[i],
            &probes.elements[j],
            &probes.elements[l],
        );
        let (w, t, s) = jensen_arguments(x, y, z)?;
        let back = w.add(&t)?.add(&s)?;
        let scale = x
            .max_abs_entry()
            .max(y.max_abs_entry())
            .max(z.max_abs_entry());
        reconstruction_error = reconstruction_error.max(back.sub(x)?.max_abs_entry() / scale);
        additivity.record(
            additivity_defect(d, &w, &t, &s)?.norm(),
            w.norm() + t.norm() + s.norm(),
        );
    }
    Ok(SubstitutionReport {
        additivity,
        reconstruction_error,
    })
}

/// `f(mu x) = mu f(x)` over probes and unit scalars.
pub fn unit_homogeneity_residual(d: &EvaluableMap, probes: &ProbeSet) -> Result<Residual> {
    homogeneity_over(d, probes, &probes.unit_scalars)
}

/// `f(lambda x) = lambda f(x)` over probes and general complex scalars.
pub fn complex_homogeneity_residual(d: &EvaluableMap, probes: &ProbeSet) -> Result<Residual> {
    homogeneity_over(d, probes, &probes.scalars)
}

fn homogeneity_over(
    d: &EvaluableMap,
    probes: &ProbeSet,
    scalars: &[Complex64],
) -> Result<Residual> {
    let mut out = Residual::default();
    for x in &probes.elements {
        let n = x.norm();
        for lambda in scalars {
            out.record(
                homogeneity_defect(d, x, *lambda)?.norm(),
                n + lambda.norm() * n,
            );
        }
    }
    Ok(out)
}

fn unit_ball_triples(probes: &ProbeSet) -> (Vec<Element>, Vec<[usize; 3]>) {
    let ball = probes.unit_ball_elements();
    let mut triples = probes.triples();
    triples.extend((0..ball.len()).map(|i| [i, i, i]));
    (ball, triples)
}

/// Derivation defect over probe triples projected into the unit ball. The
/// diagonal triples are always included, so this dominates
/// [`jordan_residual`] on the same probe set.
pub fn derivation_residual(d: &EvaluableMap, probes: &ProbeSet) -> Result<Residual> {
    let (ball, triples) = unit_ball_triples(probes);
    let mut out = Residual::default();
    for [i, j, l] in triples {
        let (a, b, c) = (&ball[i], &ball[j], &ball[l]);
        out.record(
            derivation_defect(d, a, b, c)?.norm(),
            a.norm() + b.norm() + c.norm(),
        );
    }
    Ok(out)
}

/// Derivation defect on diagonal triples `(x, x, x)` in the unit ball.
pub fn jordan_residual(d: &EvaluableMap, probes: &ProbeSet) -> Result<Residual> {
    let mut out = Residual::default();
    for x in probes.unit_ball_elements() {
        out.record(derivation_defect(d, &x, &x, &x)?.norm(), 3.0 * x.norm());
    }
    Ok(out)
}

pub fn residual_report(d: &EvaluableMap, probes: &ProbeSet) -> Result<ResidualReport> {
    Ok(ResidualReport {
        jensen: jensen_residual(d, probes)?,
        additivity: substitution_check(d, probes)?.additivity,
        homogeneity_t: unit_homogeneity_residual(d, probes)?,
        homogeneity_c: complex_homogeneity_residual(d, probes)?,
        derivation: derivation_residual(d, probes)?,
        jordan: jordan_residual(d, probes)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub sup_ratio: f64,
    pub holds: bool,
}

/// `sup_x |f(x) - D(x)| / phi(x, 0, ...)` against `constant`.
pub fn bound_check(
    f: &EvaluableMap,
    d: &EvaluableMap,
    phi: &ControlFunction,
    constant: f64,
    probes: &ProbeSet,
) -> Result<BoundCheck> {
    let sup_ratio = generalized_distance(d, f, phi, probes)?;
    Ok(BoundCheck {
        sup_ratio,
        holds: sup_ratio <= constant * (1.0 + BOUND_TOLERANCE),
    })
}

/// Closed-form constants, all relative to `phi(x, 0, ..., 0) = theta |x|^p`.
pub mod constants {
    use crate::maps::DilationMode;

    fn pow(b: f64, e: f64) -> f64 {
        libm::pow(b, e)
    }

    /// Power-type contraction constant: `3^(p-1)` (expand), `3^(1-p)` (contract).
    pub fn contraction_constant(mode: DilationMode, p: f64) -> f64 {
        match mode {
            DilationMode::Expand => pow(3.0, p - 1.0),
            DilationMode::Contract => pow(3.0, 1.0 - p),
        }
    }

    /// Theorem-level constant in terms of `L`: `L/(1-L)` (expand) or
    /// `L/(3-3L)` (contract).
    pub fn theorem_constant(mode: DilationMode, l: f64) -> f64 {
        match mode {
            DilationMode::Expand => l / (1.0 - l),
            DilationMode::Contract => l / (3.0 - 3.0 * l),
        }
    }

    /// Stated power-family constant: `2^p/(2-2^p)` (expand) or `1/(3^p-3)`
    /// (contract). `None` when the denominator is not positive.
    pub fn stated_power_constant(mode: DilationMode, p: f64) -> Option<f64> {
        let (num, den) = match mode {
            DilationMode::Expand => (pow(2.0, p), 2.0 - pow(2.0, p)),
            DilationMode::Contract => (1.0, pow(3.0, p) - 3.0),
        };
        (den > 0.0).then(|| num / den)
    }

    /// Constant that follows from the fixed point argument with the power
    /// family's own contraction constant: `d(f, Jf) <= L` gives
    /// `3^p/(3-3^p)` in expand mode, and `d(f, Jf) <= 1` gives `1/(1-L)`
    /// with `L = 3^(1-p)` in contract mode.
    pub fn derived_power_constant(mode: DilationMode, p: f64) -> f64 {
        match mode {
            DilationMode::Expand => pow(3.0, p) / (3.0 - pow(3.0, p)),
            DilationMode::Contract => 1.0 / (1.0 - pow(3.0, 1.0 - p)),
        }
    }

    /// Exponent range in which the stated power-family constant is claimed:
    /// `(0, 1)` for expand, `(3, inf)` for contract.
    pub fn in_stated_range(mode: DilationMode, p: f64) -> bool {
        match mode {
            DilationMode::Expand => p > 0.0 && p < 1.0,
            DilationMode::Contract => p > 3.0,
        }
    }
}

/// Which stability statement a ledger row exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum LedgerFamily {
    DerivationExpand,
    DerivationContract,
    JordanExpand,
    JordanContract,
}

impl LedgerFamily {
    pub fn of(arity: Arity, mode: DilationMode) -> Self {
        match (arity, mode) {
            (Arity::Six, DilationMode::Expand) => LedgerFamily::DerivationExpand,
            (Arity::Six, DilationMode::Contract) => LedgerFamily::DerivationContract,
            (Arity::Four, DilationMode::Expand) => LedgerFamily::JordanExpand,
            (Arity::Four, DilationMode::Contract) => LedgerFamily::JordanContract,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LedgerFamily::DerivationExpand => "derivation-expand",
            LedgerFamily::DerivationContract => "derivation-contract",
            LedgerFamily::JordanExpand => "jordan-expand",
            LedgerFamily::JordanContract => "jordan-contract",
        }
    }
}

/// `InRange` rows lie in the exponent range where the stated constant is
/// claimed; `Extra` rows are outside it and only exercise the machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Coverage {
    InRange,
    Extra,
}

/// One discrepancy-ledger row. Holds every run parameter so the row can be
/// reproduced on its own.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedgerEntry {
    pub family: LedgerFamily,
    pub coverage: Coverage,
    pub status: RunStatus,
    pub k: usize,
    pub derivation_seed: u64,
    pub direction_seed: u64,
    pub probe_seed: u64,
    pub probe_count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub mu_count: usize,
    pub max_iterations: u32,
    pub tolerance: f64,
    pub theta_prime: f64,
    pub theta: f64,
    pub p: f64,
    pub mode: DilationMode,
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub contraction_constant: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float::option"))]
    pub measured_ratio: Option<f64>,
    pub theorem_constant: f64,
    pub paper_constant: Option<f64>,
    pub derived_constant: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float::option"))]
    pub sound_constant: Option<f64>,
    pub paper_holds: Option<bool>,
    pub derived_holds: Option<bool>,
    pub sound_holds: Option<bool>,
    /// Whether the derived constant is at most the stated one.
    pub derived_tighter_than_paper: Option<bool>,
}

/// Runs the full pipeline for one family point and returns its ledger row.
/// Rows whose premise fails carry `PremiseFail` and no bound claims.
pub fn corollary_check(experiment: &Experiment) -> Result<LedgerEntry> {
    Ok(run_experiment(experiment)?.ledger)
}

#[cfg(test)]
mod tests {
    use super::constants::*;
    use super::*;
    use crate::algebra::random_element;
    use crate::maps::DilationMode::{Contract, Expand};
    use crate::perturbation::make_inner_derivation;

    fn probes() -> ProbeSet {
        ProbeSet::new(2, 31, 6, 0.25, 4.0, 6).unwrap()
    }

    #[test]
    fn inner_derivation_residuals_vanish() {
        let d = make_inner_derivation(random_element(2, 77, 1.0).unwrap());
        let r = residual_report(&d, &probes()).unwrap();
        assert!(r.max_normalized() <= 1e-12, "{r:?}");
    }

    #[test]
    fn jensen_defect_of_power_map_closed_forms() {
        let u = random_element(2, 1, 1.0).unwrap();
        let g = EvaluableMap::power_perturbation(1.0, 0.5, u).unwrap();
        let x = random_element(2, 2, 2.25).unwrap();
        let zero = Element::zeros(2);
        let one = Complex64::new(1.0, 0.0);
        // x = y = z: the arguments are (x, 0, 0), so the defect vanishes.
        let diagonal = jensen_defect(&g, &x, &x, &x, one).unwrap().norm();
        assert!(diagonal < 1e-15, "{diagonal}");
        // y = z = 0: arguments (x/3, x/3, x/3), defect (3 * 3^-0.5 - 1) |x|^0.5.
        let axis = jensen_defect(&g, &x, &zero, &zero, one).unwrap().norm();
        let expected = (libm::sqrt(3.0) - 1.0) * 1.5;
        assert!((axis - expected).abs() < 1e-12, "{axis} vs {expected}");
    }

    #[test]
    fn jensen_residual_scales_with_map() {
        let u = random_element(2, 1, 1.0).unwrap();
        let g = EvaluableMap::power_perturbation(1.0, 0.5, u).unwrap();
        let lambda = Complex64::new(0.0, 2.5);
        let scaled = EvaluableMap::scaled(lambda, g.clone());
        let a = jensen_residual(&g, &probes()).unwrap();
        let b = jensen_residual(&scaled, &probes()).unwrap();
        assert!((b.raw - 2.5 * a.raw).abs() <= 1e-12 * b.raw);
    }

    #[test]
    fn substitution_examples() {
        let d = make_inner_derivation(random_element(2, 5, 1.0).unwrap());
        let x = random_element(2, 6, 1.3).unwrap();
        let zero = Element::zeros(2);
        assert!(
            additivity_defect(&d, &x, &x.neg(), &zero)
                .unwrap()
                .max_abs_entry()
                < 1e-15
        );
        let report = substitution_check(&d, &probes()).unwrap();
        assert!(report.additivity.normalized < 1e-12);
        assert!(
            report.reconstruction_error < 4.0 * f64::EPSILON,
            "{}",
            report.reconstruction_error
        );
    }

    #[test]
    fn derivation_examples() {
        let id = EvaluableMap::Identity;
        let i2 = Element::identity(2);
        let defect = derivation_defect(&id, &i2, &i2, &i2).unwrap().norm();
        assert_eq!(defect, 2.0);
        let zero = EvaluableMap::zero(2);
        assert_eq!(derivation_residual(&zero, &probes()).unwrap().raw, 0.0);
        let d = make_inner_derivation(random_element(2, 8, 1.0).unwrap());
        assert!(derivation_residual(&d, &probes()).unwrap().normalized < 1e-12);
    }

    #[test]
    fn jordan_examples() {
        let probes = probes().with_extra([Element::identity(2)]).unwrap();
        let r = jordan_residual(&EvaluableMap::Identity, &probes).unwrap();
        assert_eq!(r.raw, 2.0);
        let d = make_inner_derivation(random_element(2, 8, 1.0).unwrap());
        assert!(jordan_residual(&d, &probes).unwrap().raw < 1e-12);
        let full = derivation_residual(&EvaluableMap::Identity, &probes).unwrap();
        assert!(r.raw <= full.raw && r.normalized <= full.normalized);
    }

    #[test]
    fn bound_check_zero_gap() {
        let d = make_inner_derivation(random_element(2, 8, 1.0).unwrap());
        let phi = ControlFunction::new(1.0, 0.5, Arity::Six, Expand).unwrap();
        let b = bound_check(&d, &d, &phi, 1e-30, &probes()).unwrap();
        assert_eq!(b.sup_ratio, 0.0);
        assert!(b.holds);
    }

    #[test]
    fn closed_form_constants() {
        let s3 = libm::sqrt(3.0);
        let s2 = libm::sqrt(2.0);
        let l = contraction_constant(Expand, 0.5);
        assert!((l - 1.0 / s3).abs() < 1e-15);
        let thm = theorem_constant(Expand, l);
        // 3^-0.5 / (1 - 3^-0.5) = 1 / (sqrt3 - 1)
        assert!((thm - 1.0 / (s3 - 1.0)).abs() < 1e-14);
        assert!((thm - 1.3660254037844386).abs() < 1e-14);
        assert!((derived_power_constant(Expand, 0.5) - thm).abs() < 1e-14);
        let stated = stated_power_constant(Expand, 0.5).unwrap();
        assert!((stated - s2 / (2.0 - s2)).abs() < 1e-14);
        assert!((stated - 2.414213562373095).abs() < 1e-13);

        assert!((stated_power_constant(Contract, 4.0).unwrap() - 1.0 / 78.0).abs() < 1e-17);
        // L/(3-3L) with L = 3^(1-p) reduces to 1/(3^p - 3).
        for p in [3.5, 4.0, 5.0] {
            let l = contraction_constant(Contract, p);
            let a = theorem_constant(Contract, l);
            let b = stated_power_constant(Contract, p).unwrap();
            assert!((a - b).abs() <= 1e-14 * b);
        }
        assert!((derived_power_constant(Contract, 4.0) - 27.0 / 26.0).abs() < 1e-15);
        assert_eq!(stated_power_constant(Contract, 1.0), None);
        assert!((stated_power_constant(Contract, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(stated_power_constant(Expand, 1.0), None);
        assert!(in_stated_range(Expand, 0.5) && !in_stated_range(Expand, 1.0));
        assert!(in_stated_range(Contract, 4.0) && !in_stated_range(Contract, 2.5));
    }

    #[test]
    fn three_based_constant_is_tighter_than_two_based() {
        for p in [0.25, 0.5, 0.75] {
            let three = libm::pow(3.0, p) / (3.0 - libm::pow(3.0, p));
            let two = libm::pow(2.0, p) / (2.0 - libm::pow(2.0, p));
            assert!(three <= two, "p={p}");
            assert_eq!(derived_power_constant(Expand, p), three);
            assert_eq!(stated_power_constant(Expand, p), Some(two));
        }
    }
}
