//! Exact inner derivations, their power-type perturbations, and the check
//! that a perturbed map satisfies the approximate-derivation premises.

use alloc::string::String;
use alloc::vec::Vec;

use crate::algebra::{random_element, AlgebraDescriptor, Element};
use crate::error::Result;
use crate::maps::{Arity, ControlFunction, EvaluableMap, ProbeSet};
use crate::verifier::{derivation_defect, jensen_defect};

/// Ratios up to `1 + PREMISE_TOLERANCE` count as satisfying a premise.
pub const PREMISE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationKind {
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub theta_prime: f64,
    pub exponent: f64,
    /// Seed of the unit direction `u`.
    pub direction_seed: u64,
    pub kind: PerturbationKind,
}

impl PerturbationSpec {
    pub fn power(theta_prime: f64, exponent: f64, direction_seed: u64) -> Self {
        PerturbationSpec {
            theta_prime,
            exponent,
            direction_seed,
            kind: PerturbationKind::Power,
        }
    }

    pub fn direction(&self, algebra: &AlgebraDescriptor) -> Result<Element> {
        random_element(algebra.matrix_size, self.direction_seed, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PremiseReport {
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub sup_additive_ratio: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub sup_bracket_ratio: f64,
    /// `[additive, bracket]`.
    pub holds: [bool; 2],
    pub domain_note: String,
}

impl PremiseReport {
    pub fn all_hold(&self) -> bool {
        self.holds[0] && self.holds[1]
    }
}

/// `x -> m x - x m`.
pub fn make_inner_derivation(m: Element) -> EvaluableMap {
    EvaluableMap::InnerDerivation(m)
}

/// `D0 + PowerPerturbation(theta', p, u)` with `u` drawn from the spec's seed.
pub fn make_perturbed_map(
    d0: EvaluableMap,
    spec: &PerturbationSpec,
    algebra: &AlgebraDescriptor,
) -> Result<EvaluableMap> {
    let u = spec.direction(algebra)?;
    let g = EvaluableMap::power_perturbation(spec.theta_prime, spec.exponent, u)?;
    Ok(EvaluableMap::sum(d0, g))
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Checks the Jensen-type and bracket premises separately.
///
/// The additive premise is sampled over probe triples and all unit scalars
/// against `phi(x, y, z, 0, ...)`. The bracket premise is sampled over
/// triples of probes projected into the unit ball against
/// `phi(0, 0, 0, a, b, c)`; for arity four only diagonal triples `(a, a, a)`
/// are used, against `phi(0, 0, 0, a)`.
pub fn verify_premise(
    f: &EvaluableMap,
    phi: &ControlFunction,
    probes: &ProbeSet,
) -> Result<PremiseReport> {
    let elements = &probes.elements;
    let triples = probes.triples();

    let mut additive: f64 = 0.0;
    for [i, j, l] in &triples {
        let (x, y, z) = (&elements[*i], &elements[*j], &elements[*l]);
        let rhs = phi.value_from_norms(&[x.norm(), y.norm(), z.norm()]);
        for mu in &probes.unit_scalars {
            let lhs = jensen_defect(f, x, y, z, *mu)?.norm();
            additive = additive.max(ratio(lhs, rhs));
        }
    }

    let ball = probes.unit_ball_elements();
    let mut bracket: f64 = 0.0;
    let domain_note = match phi.arity {
        Arity::Six => {
            for [i, j, l] in &triples {
                let (a, b, c) = (&ball[*i], &ball[*j], &ball[*l]);
                let rhs = phi.value_from_norms(&[0.0, 0.0, 0.0, a.norm(), b.norm(), c.norm()]);
                let lhs = derivation_defect(f, a, b, c)?.norm();
                bracket = bracket.max(ratio(lhs, rhs));
            }
            "additive: probe triples x unit scalars; bracket: probe triples projected into the closed unit ball"
        }
        Arity::Four => {
            for a in &ball {
                let rhs = phi.value_from_norms(&[0.0, 0.0, 0.0, a.norm()]);
                let lhs = derivation_defect(f, a, a, a)?.norm();
                bracket = bracket.max(ratio(lhs, rhs));
            }
            "additive: probe triples x unit scalars; bracket: diagonal triples (a, a, a) of probes projected into the closed unit ball"
        }
    };

    Ok(PremiseReport {
        sup_additive_ratio: additive,
        sup_bracket_ratio: bracket,
        holds: [
            additive <= 1.0 + PREMISE_TOLERANCE,
            bracket <= 1.0 + PREMISE_TOLERANCE,
        ],
        domain_note: domain_note.into(),
    })
}

/// Inner derivations of a seeded family, for tests and self checks.
pub fn seeded_inner_derivations(
    k: usize,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<Vec<EvaluableMap>> {
    seeds
        .into_iter()
        .map(|s| random_element(k, s, 1.0).map(make_inner_derivation))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ternary_product;
    use crate::maps::DilationMode;
    use num_complex::Complex64;

    fn algebra(k: usize) -> AlgebraDescriptor {
        AlgebraDescriptor::with_size(k).unwrap()
    }

    #[test]
    fn trivial_inner_derivations_are_zero() {
        let x = random_element(3, 1, 2.0).unwrap();
        assert!(make_inner_derivation(Element::zeros(3))
            .evaluate(&x)
            .unwrap()
            .is_zero());
        assert!(make_inner_derivation(Element::identity(3))
            .evaluate(&x)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn telescoping_identity_on_matrix_units() {
        // m(abc) - (abc)m = (ma - am)bc + a(mb - bm)c + ab(mc - cm)
        let m = Element::unit(2, 0, 1);
        let e11 = Element::unit(2, 0, 0);
        let d = make_inner_derivation(m.clone());
        let abc = ternary_product(&e11, &e11, &e11).unwrap();
        let lhs = m
            .matmul(&abc)
            .unwrap()
            .sub(&abc.matmul(&m).unwrap())
            .unwrap();
        let da = d.evaluate(&e11).unwrap();
        let rhs = ternary_product(&da, &e11, &e11)
            .unwrap()
            .add(&ternary_product(&e11, &da, &e11).unwrap())
            .unwrap()
            .add(&ternary_product(&e11, &e11, &da).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        assert!(derivation_defect(&d, &e11, &e11, &e11).unwrap().is_zero());
    }

    #[test]
    fn perturbed_map_closed_form() {
        let alg = algebra(2);
        let d0 = make_inner_derivation(random_element(2, 8, 1.0).unwrap());
        let spec = PerturbationSpec::power(0.01, 0.5, 21);
        let f = make_perturbed_map(d0.clone(), &spec, &alg).unwrap();
        let x = random_element(2, 99, 4.0).unwrap();
        let u = spec.direction(&alg).unwrap();
        let expected = d0.evaluate(&x).unwrap().add(&u.scale_real(0.02)).unwrap();
        let got = f.evaluate(&x).unwrap();
        assert!(got.sub(&expected).unwrap().max_abs_entry() < 1e-15);
        assert!(f.evaluate(&Element::zeros(2)).unwrap().is_zero());

        let exact =
            make_perturbed_map(d0.clone(), &PerturbationSpec::power(0.0, 0.5, 21), &alg).unwrap();
        assert_eq!(exact.evaluate(&x).unwrap(), d0.evaluate(&x).unwrap());

        // p = 0 still sends 0 to 0.
        let flat = make_perturbed_map(
            EvaluableMap::zero(2),
            &PerturbationSpec::power(1.0, 0.0, 3),
            &alg,
        )
        .unwrap();
        assert!(flat.evaluate(&Element::zeros(2)).unwrap().is_zero());
        assert!((flat.evaluate(&x).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_derivation_premise_sups_are_zero() {
        let probes = ProbeSet::new(3, 5, 6, 0.25, 4.0, 6).unwrap();
        let d = make_inner_derivation(random_element(3, 2, 1.0).unwrap());
        let phi = ControlFunction::new(1.0, 0.5, Arity::Six, DilationMode::Expand).unwrap();
        let r = verify_premise(&d, &phi, &probes).unwrap();
        assert!(r.sup_additive_ratio < 1e-12, "{}", r.sup_additive_ratio);
        assert!(r.sup_bracket_ratio < 1e-12, "{}", r.sup_bracket_ratio);
        assert!(r.all_hold());
    }

    #[test]
    fn canonical_family_premises_hold() {
        let probes = ProbeSet::new(2, 17, 8, 0.25, 4.0, 8).unwrap();
        let alg = algebra(2);
        let d0 = make_inner_derivation(random_element(2, 4, 1.0).unwrap());
        for (p, mode) in [
            (0.25, DilationMode::Expand),
            (0.5, DilationMode::Expand),
            (0.75, DilationMode::Expand),
            (4.0, DilationMode::Contract),
            (5.0, DilationMode::Contract),
        ] {
            let f =
                make_perturbed_map(d0.clone(), &PerturbationSpec::power(0.01, p, 6), &alg).unwrap();
            for arity in [Arity::Six, Arity::Four] {
                let phi = ControlFunction::new(0.04, p, arity, mode).unwrap();
                let r = verify_premise(&f, &phi, &probes).unwrap();
                assert!(r.all_hold(), "p={p} {arity:?}: {r:?}");
                assert!(r.sup_additive_ratio > 0.0);
            }
        }
    }

    #[test]
    fn premise_fails_for_undersized_budget() {
        let probes = ProbeSet::new(2, 17, 6, 0.25, 4.0, 4).unwrap();
        let alg = algebra(2);
        let f = make_perturbed_map(
            EvaluableMap::zero(2),
            &PerturbationSpec::power(1.0, 0.5, 6),
            &alg,
        )
        .unwrap();
        let phi = ControlFunction::new(0.1, 0.5, Arity::Six, DilationMode::Expand).unwrap();
        let r = verify_premise(&f, &phi, &probes).unwrap();
        assert!(!r.holds[0]);
    }

    #[test]
    fn zero_budget_with_defect_is_infinite() {
        let probes = ProbeSet::new(2, 3, 3, 0.5, 2.0, 4).unwrap();
        let f = EvaluableMap::scaled(Complex64::new(1.0, 0.0), EvaluableMap::Identity);
        let phi = ControlFunction::new(0.0, 0.5, Arity::Six, DilationMode::Expand).unwrap();
        let r = verify_premise(&f, &phi, &probes).unwrap();
        // The identity is not a derivation.
        assert_eq!(r.sup_bracket_ratio, f64::INFINITY);
        assert!(!r.holds[1]);
    }
}
