//! Seeded invariant suites. Each suite reports how many of its cases passed;
//! the command line `selftest` and the acceptance tests both drive these.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{
    operator_norm, random_element, ternary_product, Element, DEFAULT_NORM_TOLERANCE,
};
use crate::error::Result;
use crate::experiment::{run_experiment, Experiment, ProbeSpec, RunStatus};
use crate::maps::{
    generalized_distance, Arity, ControlFunction, DilationMode, EvaluableMap, ProbeSet,
};
use crate::perturbation::{make_inner_derivation, verify_premise};
use crate::rng;
use crate::stabilizer::apply_j;
use crate::verifier::{derivation_residual, jordan_residual, residual_report};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

struct Tally {
    name: &'static str,
    passed: usize,
    total: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            passed: 0,
            total: 0,
        }
    }

    fn check(&mut self, ok: bool) {
        self.total += 1;
        if ok {
            self.passed += 1;
        }
    }

    fn done(self) -> SuiteResult {
        SuiteResult {
            name: self.name,
            passed: self.passed,
            total: self.total,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfTestOptions {
    pub seed: u64,
    /// Sampled tuples per algebra identity.
    pub tuples: usize,
    /// Multiplies the norm of triple products in the submultiplicativity
    /// suite; `1.0` is honest. Used for fault injection.
    pub product_norm_fault: f64,
    pub probes: ProbeSpec,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        SelfTestOptions {
            seed: 2024,
            tuples: 1000,
            product_norm_fault: 1.0,
            probes: ProbeSpec::default(),
        }
    }
}

fn element_at(seed: u64, index: u64, k: usize, lo: f64, hi: f64) -> Result<Element> {
    let mut r = rng::seeded(rng::mix(seed, index), rng::stream::SELFTEST);
    let norm = r.gen_range(lo..hi);
    random_element(k, rng::mix(seed, index ^ 0xA5A5), norm)
}

fn size_for(i: usize) -> usize {
    2 + i % 3
}

/// `|[abc]| <= |a||b||c| (1 + 10 tol)` over seeded triples with norms in
/// `[0.1, 2]`, plus the extremal triples `(a, a^H, a)` where equality holds.
pub fn submultiplicativity(
    seed: u64,
    count: usize,
    product_norm_fault: f64,
) -> Result<SuiteResult> {
    let mut t = Tally::new("submultiplicativity");
    let slack = 1.0 + 10.0 * DEFAULT_NORM_TOLERANCE;
    for i in 0..count {
        let k = size_for(i);
        let base = 3 * i as u64;
        let a = element_at(seed, base, k, 0.1, 2.0)?;
        let b = element_at(seed, base + 1, k, 0.1, 2.0)?;
        let c = element_at(seed, base + 2, k, 0.1, 2.0)?;
        let bound = a.norm() * b.norm() * c.norm() * slack;
        let p = ternary_product(&a, &b, &c)?;
        t.check(product_norm_fault * operator_norm(&p) <= bound);
        if i % 10 == 0 {
            let aligned = ternary_product(&a, &a.adjoint(), &a)?;
            let n = a.norm();
            t.check(product_norm_fault * operator_norm(&aligned) <= n * n * n * slack);
        }
    }
    Ok(t.done())
}

/// The five module compatibility identities with `X = A`, each checked over
/// `count` seeded 5-tuples: all three bracketings of a 5-fold product agree.
pub fn module_identities(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut t = Tally::new("module_identities");
    for i in 0..count {
        let k = size_for(i);
        let base = 5 * i as u64 + 1_000_000;
        let v: Vec<Element> = (0..5)
            .map(|j| element_at(seed, base + j, k, 0.1, 2.0))
            .collect::<Result<_>>()?;
        let (x, a, b, c, d) = (&v[0], &v[1], &v[2], &v[3], &v[4]);
        let scale: f64 = v.iter().map(Element::norm).product();
        for order in [
            [x, a, b, c, d],
            [a, x, b, c, d],
            [a, b, x, c, d],
            [a, b, c, x, d],
            [a, b, c, d, x],
        ] {
            let [p1, p2, p3, p4, p5] = order;
            let left = ternary_product(&ternary_product(p1, p2, p3)?, p4, p5)?;
            let mid = ternary_product(p1, &ternary_product(p2, p3, p4)?, p5)?;
            let right = ternary_product(p1, p2, &ternary_product(p3, p4, p5)?)?;
            let gap = left
                .sub(&mid)?
                .max_abs_entry()
                .max(left.sub(&right)?.max_abs_entry());
            t.check(gap <= 1e-12 * scale);
        }
    }
    Ok(t.done())
}

/// `|lambda a| = |lambda| |a|`.
pub fn norm_homogeneity(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut t = Tally::new("norm_homogeneity");
    let mut r = rng::seeded(seed, rng::stream::SCALAR);
    for i in 0..count {
        let a = element_at(seed, 2_000_000 + i as u64, size_for(i), 0.1, 2.0)?;
        let lambda = Complex64::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let lhs = a.scale(lambda)?.norm();
        let rhs = lambda.norm() * a.norm();
        t.check((lhs - rhs).abs() <= 10.0 * DEFAULT_NORM_TOLERANCE * rhs);
    }
    Ok(t.done())
}

/// Linearity of the triple product in each slot.
pub fn slot_linearity(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut t = Tally::new("slot_linearity");
    for i in 0..count {
        let k = size_for(i);
        let base = 4 * i as u64 + 3_000_000;
        let a = element_at(seed, base, k, 0.1, 2.0)?;
        let a2 = element_at(seed, base + 1, k, 0.1, 2.0)?;
        let b = element_at(seed, base + 2, k, 0.1, 2.0)?;
        let c = element_at(seed, base + 3, k, 0.1, 2.0)?;
        let scale = (a.norm() + a2.norm()) * b.norm() * c.norm();
        let sum = a.add(&a2)?;
        let cases = [
            (
                ternary_product(&sum, &b, &c)?,
                ternary_product(&a, &b, &c)?.add(&ternary_product(&a2, &b, &c)?)?,
            ),
            (
                ternary_product(&b, &sum, &c)?,
                ternary_product(&b, &a, &c)?.add(&ternary_product(&b, &a2, &c)?)?,
            ),
            (
                ternary_product(&b, &c, &sum)?,
                ternary_product(&b, &c, &a)?.add(&ternary_product(&b, &c, &a2)?)?,
            ),
        ];
        for (l, r) in cases {
            t.check(l.sub(&r)?.max_abs_entry() <= 1e-12 * scale);
        }
    }
    Ok(t.done())
}

/// Determinism, target norm, and shared pre-scale draws of `random_element`.
pub fn random_elements(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut t = Tally::new("random_element");
    for i in 0..count {
        let s = rng::mix(seed, i as u64);
        let k = size_for(i);
        let one = random_element(k, s, 1.0)?;
        let three = random_element(k, s, 3.0)?;
        t.check(one == random_element(k, s, 1.0)?);
        t.check((one.norm() - 1.0).abs() <= DEFAULT_NORM_TOLERANCE);
        t.check(three.sub(&one.scale_real(3.0))?.max_abs_entry() <= 1e-14);
    }
    Ok(t.done())
}

fn canonical_map(k: usize, seed: u64, theta_prime: f64, p: f64) -> Result<EvaluableMap> {
    let d0 = make_inner_derivation(random_element(k, seed, 1.0)?);
    let u = random_element(k, rng::mix(seed, 1), 1.0)?;
    Ok(EvaluableMap::sum(
        d0,
        EvaluableMap::power_perturbation(theta_prime, p, u)?,
    ))
}

/// Symmetry and triangle inequality of the probe metric on seeded map triples.
pub fn distance_pseudometric(seed: u64, count: usize, probes: &ProbeSpec) -> Result<SuiteResult> {
    let mut t = Tally::new("distance_pseudometric");
    let probes = probes.build(2)?;
    let phi = ControlFunction::new(1.0, 0.5, Arity::Six, DilationMode::Expand)?;
    for i in 0..count {
        let base = rng::mix(seed, 4_000_000 + i as u64);
        let maps: Vec<EvaluableMap> = (0..3)
            .map(|j| canonical_map(2, rng::mix(base, j), 0.1 * (j + 1) as f64, 0.5))
            .collect::<Result<_>>()?;
        let d = |a: usize, b: usize| generalized_distance(&maps[a], &maps[b], &phi, &probes);
        let (ab, ba, bc, ac) = (d(0, 1)?, d(1, 0)?, d(1, 2)?, d(0, 2)?);
        t.check(ab == ba);
        t.check(ac <= (ab + bc) * (1.0 + 1e-12));
    }
    Ok(t.done())
}

/// Inner derivations have vanishing residuals and satisfy both premises
/// with zero ratios.
pub fn inner_derivations(seed: u64, count: usize, probes: &ProbeSpec) -> Result<SuiteResult> {
    let mut t = Tally::new("inner_derivations");
    for i in 0..count {
        let k = size_for(i);
        let probe_set = probes.build(k)?;
        let d = make_inner_derivation(random_element(
            k,
            rng::mix(seed, 5_000_000 + i as u64),
            1.0,
        )?);
        let report = residual_report(&d, &probe_set)?;
        t.check(report.max_normalized() <= 1e-12);
        let phi = ControlFunction::new(1.0, 0.5, Arity::Six, DilationMode::Expand)?;
        let premise = verify_premise(&d, &phi, &probe_set)?;
        t.check(premise.sup_additive_ratio <= 1e-12 && premise.sup_bracket_ratio <= 1e-12);
        t.check(jordan_residual(&d, &probe_set)?.raw <= derivation_residual(&d, &probe_set)?.raw);
    }
    Ok(t.done())
}

/// Iteration budget for runs whose contraction constant is close to one;
/// `p = 0.75` needs roughly eighty steps to reach the default tolerance.
pub const SLOW_CONTRACTION_ITERATIONS: u32 = 200;

/// Canonical family runs: premises pass, runs certify, the limit is
/// dilation invariant and close to the reference derivation, and the
/// stated-vs-derived comparison is recorded.
pub fn canonical_runs(seed: u64, probes: &ProbeSpec) -> Result<SuiteResult> {
    let mut t = Tally::new("canonical_runs");
    let points = [
        (0.25, DilationMode::Expand),
        (0.5, DilationMode::Expand),
        (0.75, DilationMode::Expand),
        (4.0, DilationMode::Contract),
        (5.0, DilationMode::Contract),
    ];
    for (i, (p, mode)) in points.into_iter().enumerate() {
        for arity in [Arity::Six, Arity::Four] {
            let mut exp = Experiment::canonical(2, 0.01, p, mode, arity, rng::mix(seed, i as u64));
            exp.probes = ProbeSpec {
                seed: exp.probes.seed,
                ..*probes
            };
            exp.stabilizer.max_iterations = SLOW_CONTRACTION_ITERATIONS;
            let out = run_experiment(&exp)?;
            t.check(out.premise.all_hold());
            t.check(out.status == RunStatus::Certified);
            let tol = exp.stabilizer.convergence_tolerance;
            t.check(out.limit_gap.is_some_and(|g| g <= 10.0 * tol));
            if let (Some(limit), Some(cert)) = (&out.limit, &out.certificate) {
                let probe_set = exp.probes.build(exp.matrix_size)?;
                let phi = exp.control()?;
                let shifted = apply_j(limit, mode);
                t.check(generalized_distance(&shifted, limit, &phi, &probe_set)? < tol);
                t.check(
                    cert.residuals
                        .is_some_and(|r| r.max_normalized() <= 10.0 * tol),
                );
                t.check(cert.d_f_d <= cert.sound_bound * (1.0 + 1e-6));
            }
            match mode {
                DilationMode::Expand => {
                    t.check(out.ledger.derived_tighter_than_paper == Some(true))
                }
                DilationMode::Contract => t.check(out.ledger.paper_holds == Some(false)),
            }
        }
    }
    Ok(t.done())
}

/// Runs every suite. Fails early only on invalid options (for example an
/// empty probe configuration).
pub fn run_all(opts: &SelfTestOptions) -> Result<Vec<SuiteResult>> {
    // Validates the probe configuration before anything else runs.
    ProbeSet::new(
        2,
        opts.probes.seed,
        opts.probes.element_count,
        opts.probes.r_min,
        opts.probes.r_max,
        opts.probes.mu_count,
    )?;
    let seed = opts.seed;
    Ok(alloc::vec![
        submultiplicativity(seed, opts.tuples, opts.product_norm_fault)?,
        module_identities(seed, opts.tuples)?,
        norm_homogeneity(seed, 100)?,
        slot_linearity(seed, 100)?,
        random_elements(seed, 100)?,
        distance_pseudometric(seed, 50, &opts.probes)?,
        inner_derivations(seed, 20, &opts.probes)?,
        canonical_runs(seed, &opts.probes)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_suites_pass() {
        let opts = SelfTestOptions {
            tuples: 200,
            ..SelfTestOptions::default()
        };
        for suite in run_all(&opts).unwrap() {
            assert!(suite.ok(), "{suite:?}");
        }
    }

    #[test]
    fn tampered_norm_fails_submultiplicativity() {
        let suite = submultiplicativity(7, 200, 1.1).unwrap();
        assert!(!suite.ok());
        assert!(submultiplicativity(7, 200, 1.0).unwrap().ok());
    }

    #[test]
    fn empty_probe_config_is_rejected() {
        let opts = SelfTestOptions {
            probes: ProbeSpec {
                element_count: 0,
                ..ProbeSpec::default()
            },
            ..SelfTestOptions::default()
        };
        assert!(run_all(&opts).is_err());
    }
}
