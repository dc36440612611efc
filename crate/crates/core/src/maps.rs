//! Maps `A -> A` as expression trees, power-type control functions, seeded
//! probe sets, and the probe estimate of the generalized metric
//! `d(h, g) = inf { C : |g(x) - h(x)| <= C phi(x, 0, ..., 0) for all x }`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{random_element, Element};
use crate::error::{Error, Result};
use crate::rng;

/// Ratios above this count as an infinite generalized distance.
pub const DEFAULT_RATIO_CAP: f64 = 1e12;

/// Direction of the dilation iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum DilationMode {
    /// `J h(x) = h(3x) / 3`, contractive for exponents below one.
    Expand,
    /// `J h(x) = 3 h(x / 3)`, contractive for exponents above one.
    Contract,
}

impl DilationMode {
    pub fn name(self) -> &'static str {
        match self {
            DilationMode::Expand => "EXPAND",
            DilationMode::Contract => "CONTRACT",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvaluableMap {
    Identity,
    /// `x -> m x - x m`.
    InnerDerivation(Element),
    /// `x -> amplitude * |x|^exponent * direction` for `x != 0`, and `0 -> 0`.
    PowerPerturbation {
        amplitude: f64,
        exponent: f64,
        direction: Element,
    },
    Sum(Box<EvaluableMap>, Box<EvaluableMap>),
    ScalarMultiple(Complex64, Box<EvaluableMap>),
    /// `x -> 3^-n base(3^n x)` (expand) or `x -> 3^n base(x / 3^n)` (contract).
    DilationIterate {
        base: Box<EvaluableMap>,
        steps: u32,
        mode: DilationMode,
    },
}

impl EvaluableMap {
    pub fn zero(k: usize) -> Self {
        EvaluableMap::InnerDerivation(Element::zeros(k))
    }

    /// Power perturbation; `direction` must have unit operator norm.
    pub fn power_perturbation(amplitude: f64, exponent: f64, direction: Element) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(
                "amplitude",
                "must be finite and nonnegative",
            ));
        }
        if !exponent.is_finite() {
            return Err(Error::NonFinite { what: "exponent" });
        }
        let norm = direction.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(
                "direction",
                format!("must have unit norm, got {norm}"),
            ));
        }
        Ok(EvaluableMap::PowerPerturbation {
            amplitude,
            exponent,
            direction,
        })
    }

    pub fn sum(left: EvaluableMap, right: EvaluableMap) -> Self {
        EvaluableMap::Sum(Box::new(left), Box::new(right))
    }

    pub fn scaled(lambda: Complex64, base: EvaluableMap) -> Self {
        EvaluableMap::ScalarMultiple(lambda, Box::new(base))
    }

    pub fn dilation(base: EvaluableMap, steps: u32, mode: DilationMode) -> Self {
        EvaluableMap::DilationIterate {
            base: Box::new(base),
            steps,
            mode,
        }
    }

    /// Short description of the node, used in overflow diagnostics.
    pub fn describe(&self) -> String {
        match self {
            EvaluableMap::Identity => "Identity".into(),
            EvaluableMap::InnerDerivation(m) => format!("InnerDerivation(k={})", m.dim()),
            EvaluableMap::PowerPerturbation {
                amplitude,
                exponent,
                ..
            } => format!("PowerPerturbation(amplitude={amplitude}, exponent={exponent})"),
            EvaluableMap::Sum(l, r) => format!("Sum({}, {})", l.describe(), r.describe()),
            EvaluableMap::ScalarMultiple(l, b) => format!("ScalarMultiple({l}, {})", b.describe()),
            EvaluableMap::DilationIterate { base, steps, mode } => format!(
                "DilationIterate({}, n={steps}, {})",
                base.describe(),
                mode.name()
            ),
        }
    }

    pub fn evaluate(&self, x: &Element) -> Result<Element> {
        let value = match self {
            EvaluableMap::Identity => x.clone(),
            EvaluableMap::InnerDerivation(m) => m.matmul(x)?.sub(&x.matmul(m)?)?,
            EvaluableMap::PowerPerturbation {
                amplitude,
                exponent,
                direction,
            } => {
                if x.dim() != direction.dim() {
                    return Err(Error::DimensionMismatch {
                        left: direction.dim(),
                        right: x.dim(),
                    });
                }
                let norm = x.norm();
                if norm == 0.0 {
                    Element::zeros(x.dim())
                } else {
                    direction.scale_real(amplitude * libm::pow(norm, *exponent))
                }
            }
            EvaluableMap::Sum(l, r) => l.evaluate(x)?.add(&r.evaluate(x)?)?,
            EvaluableMap::ScalarMultiple(lambda, b) => b.evaluate(x)?.scale(*lambda)?,
            EvaluableMap::DilationIterate { base, steps, mode } => {
                if *steps == 0 {
                    base.evaluate(x)?
                } else {
                    let s = libm::pow(3.0, *steps as f64);
                    match mode {
                        DilationMode::Expand => base.evaluate(&x.scale_real(s))?.div_real(s),
                        DilationMode::Contract => base.evaluate(&x.div_real(s))?.scale_real(s),
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteEvaluation {
                node: self.describe(),
                probe: None,
            })
        }
    }
}

/// Number of arguments of a control function: six for the full derivation
/// premise, four for the Jordan variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Arity {
    Six,
    Four,
}

impl Arity {
    pub fn count(self) -> usize {
        match self {
            Arity::Six => 6,
            Arity::Four => 4,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            6 => Ok(Arity::Six),
            4 => Ok(Arity::Four),
            _ => Err(Error::invalid("arity", format!("must be 4 or 6, got {n}"))),
        }
    }
}

/// Power-type control function `phi(x_1, ..., x_n) = theta * sum |x_i|^p`
/// with the convention `|0|^p = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlFunction {
    pub theta: f64,
    pub exponent: f64,
    pub arity: Arity,
    pub mode_hint: DilationMode,
}

impl ControlFunction {
    pub fn new(theta: f64, exponent: f64, arity: Arity, mode_hint: DilationMode) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::invalid("theta", "must be finite and nonnegative"));
        }
        if !exponent.is_finite() {
            return Err(Error::NonFinite { what: "exponent" });
        }
        Ok(ControlFunction {
            theta,
            exponent,
            arity,
            mode_hint,
        })
    }

    fn power(&self, norm: f64) -> f64 {
        if norm == 0.0 {
            0.0
        } else {
            libm::pow(norm, self.exponent)
        }
    }

    /// `phi` evaluated from argument norms. Missing trailing arguments are zero.
    pub fn value_from_norms(&self, norms: &[f64]) -> f64 {
        debug_assert!(norms.len() <= self.arity.count());
        self.theta * norms.iter().map(|&n| self.power(n)).sum::<f64>()
    }

    pub fn value(&self, args: &[&Element]) -> f64 {
        let norms: Vec<f64> = args.iter().map(|e| e.norm()).collect();
        self.value_from_norms(&norms)
    }

    /// `phi(x, 0, ..., 0)`.
    pub fn at_first(&self, x: &Element) -> f64 {
        self.value_from_norms(&[x.norm()])
    }

    /// The least `L` with `phi(x) <= 3L phi(x/3)` (expand) or
    /// `phi(x) <= (L/3) phi(3x)` (contract).
    pub fn contraction_constant(&self) -> f64 {
        match self.mode_hint {
            DilationMode::Expand => libm::pow(3.0, self.exponent - 1.0),
            DilationMode::Contract => libm::pow(3.0, 1.0 - self.exponent),
        }
    }

    /// Fails unless `L < 1`.
    pub fn check_contractive(&self) -> Result<f64> {
        let l = self.contraction_constant();
        if l < 1.0 {
            Ok(l)
        } else {
            Err(Error::HypothesisViolated {
                contraction_constant: l,
            })
        }
    }
}

/// Seeded probe elements with log-spaced norms plus unit-circle and general
/// complex scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSet {
    pub elements: Vec<Element>,
    pub unit_scalars: Vec<Complex64>,
    /// Complex scalars of varying modulus for full homogeneity checks.
    pub scalars: Vec<Complex64>,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    /// Upper bound on the number of tuples drawn from the elements.
    pub tuple_budget: usize,
}

/// Default cap on sampled tuples per residual.
pub const DEFAULT_TUPLE_BUDGET: usize = 256;

impl ProbeSet {
    pub fn new(
        k: usize,
        seed: u64,
        element_count: usize,
        r_min: f64,
        r_max: f64,
        mu_count: usize,
    ) -> Result<Self> {
        if element_count == 0 {
            return Err(Error::EmptyProbeSet);
        }
        if !(r_min.is_finite() && r_max.is_finite() && r_min > 0.0 && r_max >= r_min) {
            return Err(Error::invalid(
                "probe radii",
                "need 0 < r_min <= r_max, finite",
            ));
        }
        let ratio = r_max / r_min;
        let elements = (0..element_count)
            .map(|i| {
                let t = if element_count == 1 {
                    0.0
                } else {
                    i as f64 / (element_count - 1) as f64
                };
                let radius = if i + 1 == element_count {
                    r_max
                } else {
                    r_min * libm::pow(ratio, t)
                };
                random_element(
                    k,
                    rng::mix(seed, i as u64 ^ (rng::stream::PROBE << 32)),
                    radius,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let unit_scalars = unit_circle_scalars(mu_count);
        let mut scalar_rng = rng::seeded(seed, rng::stream::SCALAR);
        let scalars = unit_scalars
            .iter()
            .map(|mu| *mu * scalar_rng.gen_range(0.1..3.0))
            .collect();
        Ok(ProbeSet {
            elements,
            unit_scalars,
            scalars,
            seed,
            r_min,
            r_max,
            tuple_budget: DEFAULT_TUPLE_BUDGET,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, Element::dim)
    }

    /// Adds further probe elements; zero is rejected.
    pub fn with_extra(mut self, extra: impl IntoIterator<Item = Element>) -> Result<Self> {
        for e in extra {
            if e.is_zero() {
                return Err(Error::invalid("probe", "0 is never a probe"));
            }
            self.elements.push(e);
        }
        Ok(self)
    }

    /// Probe elements radially projected into the closed unit ball.
    pub fn unit_ball_elements(&self) -> Vec<Element> {
        self.elements
            .iter()
            .map(|e| {
                let n = e.norm();
                if n > 1.0 {
                    e.div_real(n)
                } else {
                    e.clone()
                }
            })
            .collect()
    }

    /// Deterministic index triples: every ordered triple when there are at
    /// most `tuple_budget` of them, otherwise a seeded sample of that size.
    pub fn triples(&self) -> Vec<[usize; 3]> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        let total = n.saturating_mul(n).saturating_mul(n);
        if total <= self.tuple_budget {
            let mut out = Vec::with_capacity(total);
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        out.push([i, j, l]);
                    }
                }
            }
            out
        } else {
            let mut rng = rng::seeded(self.seed, rng::stream::TUPLE);
            (0..self.tuple_budget)
                .map(|_| {
                    [
                        rng.gen_range(0..n),
                        rng.gen_range(0..n),
                        rng.gen_range(0..n),
                    ]
                })
                .collect()
        }
    }
}

/// `1, i, -1` followed by the remaining `mu_count`-th roots of unity.
fn unit_circle_scalars(mu_count: usize) -> Vec<Complex64> {
    let mut out = alloc::vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
    ];
    for j in 0..mu_count {
        let angle = 2.0 * PI * j as f64 / mu_count as f64;
        let mu = Complex64::new(libm::cos(angle), libm::sin(angle));
        if out.iter().all(|z| (z - mu).norm() > 1e-12) {
            out.push(mu);
        }
    }
    out
}

/// Probe estimate of the generalized distance with the default ratio cap.
pub fn generalized_distance(
    h: &EvaluableMap,
    g: &EvaluableMap,
    phi: &ControlFunction,
    probes: &ProbeSet,
) -> Result<f64> {
    generalized_distance_capped(h, g, phi, probes, DEFAULT_RATIO_CAP)
}

/// `sup_x |g(x) - h(x)| / phi(x, 0, ..., 0)` over the probe elements.
///
/// This is a lower estimate of the infimum over all of `A`. Returns
/// `f64::INFINITY` when any ratio exceeds `cap`.
pub fn generalized_distance_capped(
    h: &EvaluableMap,
    g: &EvaluableMap,
    phi: &ControlFunction,
    probes: &ProbeSet,
    cap: f64,
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    let mut sup: f64 = 0.0;
    for (i, x) in probes.elements.iter().enumerate() {
        let budget = phi.at_first(x);
        if budget <= 0.0 {
            return Err(Error::ZeroControl { probe: i });
        }
        let at_probe = |e: Error| match e {
            Error::NonFiniteEvaluation { node, .. } => Error::NonFiniteEvaluation {
                node,
                probe: Some(i),
            },
            other => other,
        };
        let gap = g
            .evaluate(x)
            .map_err(at_probe)?
            .sub(&h.evaluate(x).map_err(at_probe)?)?
            .norm();
        let ratio = gap / budget;
        if !(ratio <= cap) {
            return Ok(f64::INFINITY);
        }
        sup = sup.max(ratio);
    }
    Ok(sup)
}
