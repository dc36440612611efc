//! Finite-dimensional ternary Banach algebra: `k x k` complex matrices with
//! `[abc] = a * b * c` and the operator (spectral) norm. The module is the
//! algebra itself, so every module compatibility identity reduces to
//! associativity of the matrix product.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Default relative tolerance for norm computations.
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-10;

/// Draws whose norm falls below this are resampled.
const NORM_FLOOR: f64 = 1e-8;
const DRAW_ATTEMPTS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductRule {
    /// `[abc] = a * b * c`, no adjoints.
    TripleMatrixProduct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormRule {
    /// Largest singular value.
    OperatorNorm,
}

/// A concrete ternary algebra instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraDescriptor {
    pub matrix_size: usize,
    pub product_rule: ProductRule,
    pub norm_rule: NormRule,
    pub norm_tolerance: f64,
}

impl AlgebraDescriptor {
    pub fn new(matrix_size: usize, norm_tolerance: f64) -> Result<Self> {
        if matrix_size == 0 {
            return Err(Error::invalid("matrix_size", "must be at least 1"));
        }
        if !(norm_tolerance.is_finite() && norm_tolerance > 0.0) {
            return Err(Error::invalid(
                "norm_tolerance",
                "must be positive and finite",
            ));
        }
        Ok(AlgebraDescriptor {
            matrix_size,
            product_rule: ProductRule::TripleMatrixProduct,
            norm_rule: NormRule::OperatorNorm,
            norm_tolerance,
        })
    }

    pub fn with_size(matrix_size: usize) -> Result<Self> {
        Self::new(matrix_size, DEFAULT_NORM_TOLERANCE)
    }

    pub fn zero(&self) -> Element {
        Element::zeros(self.matrix_size)
    }

    pub fn random_element(&self, seed: u64, target_norm: f64) -> Result<Element> {
        random_element(self.matrix_size, seed, target_norm)
    }
}

/// A point of the algebra: a `k x k` complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Element {
    k: usize,
    entries: Vec<Complex64>,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Element[")?;
        for i in 0..self.k {
            if i > 0 {
                f.write_str("; ")?;
            }
            for j in 0..self.k {
                if j > 0 {
                    f.write_str(", ")?;
                }
                let z = self.get(i, j);
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
        }
        f.write_str("]")
    }
}

impl Element {
    pub fn zeros(k: usize) -> Self {
        Element {
            k,
            entries: vec![Complex64::new(0.0, 0.0); k * k],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut e = Self::zeros(k);
        for i in 0..k {
            e.entries[i * k + i] = Complex64::new(1.0, 0.0);
        }
        e
    }

    /// Matrix unit with a single 1 at zero-based position `(i, j)`.
    pub fn unit(k: usize, i: usize, j: usize) -> Self {
        assert!(i < k && j < k, "matrix unit index out of range");
        let mut e = Self::zeros(k);
        e.entries[i * k + j] = Complex64::new(1.0, 0.0);
        e
    }

    pub fn from_entries(k: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != k * k {
            return Err(Error::invalid(
                "entries",
                alloc::format!("expected {} entries, got {}", k * k, entries.len()),
            ));
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { what: "entry" });
        }
        Ok(Element { k, entries })
    }

    pub fn from_real(k: usize, values: &[f64]) -> Result<Self> {
        Self::from_entries(k, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let k = values.len();
        let mut e = Self::zeros(k);
        for (i, &v) in values.iter().enumerate() {
            e.entries[i * k + i] = Complex64::new(v, 0.0);
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.k + j]
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    fn check_dim(&self, other: &Element) -> Result<()> {
        if self.k == other.k {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.k,
                right: other.k,
            })
        }
    }

    fn zip_with(
        &self,
        other: &Element,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Element> {
        self.check_dim(other)?;
        Ok(Element {
            k: self.k,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Element {
        self.map_entries(|z| -z)
    }

    pub fn scale(&self, lambda: Complex64) -> Result<Element> {
        if !lambda.is_finite() {
            return Err(Error::NonFinite { what: "scalar" });
        }
        Ok(self.map_entries(|z| z * lambda))
    }

    /// Multiplies by a real factor.
    pub fn scale_real(&self, factor: f64) -> Element {
        self.map_entries(|z| z * factor)
    }

    /// Divides every entry by a real factor (correctly rounded per entry,
    /// unlike multiplying by a rounded reciprocal).
    pub fn div_real(&self, divisor: f64) -> Element {
        self.map_entries(|z| Complex64::new(z.re / divisor, z.im / divisor))
    }

    fn map_entries(&self, op: impl Fn(Complex64) -> Complex64) -> Element {
        Element {
            k: self.k,
            entries: self.entries.iter().map(|&z| op(z)).collect(),
        }
    }

    pub fn matmul(&self, other: &Element) -> Result<Element> {
        self.check_dim(other)?;
        let k = self.k;
        let mut out = vec![Complex64::new(0.0, 0.0); k * k];
        for i in 0..k {
            for l in 0..k {
                let a = self.entries[i * k + l];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..k {
                    out[i * k + j] += a * other.entries[l * k + j];
                }
            }
        }
        Ok(Element { k, entries: out })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Element {
        let k = self.k;
        let mut out = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                out.entries[j * k + i] = self.entries[i * k + j].conj();
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        operator_norm(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// The triple product `[abc] = a * b * c`.
pub fn ternary_product(a: &Element, b: &Element, c: &Element) -> Result<Element> {
    a.matmul(b)?.matmul(c)
}

/// Largest singular value, computed as the square root of the top eigenvalue
/// of the Hermitian Gram matrix `a^H a` by cyclic complex Jacobi rotations.
/// Falls back to power iteration if the sweeps fail to converge.
pub fn operator_norm(a: &Element) -> f64 {
    let k = a.dim();
    if a.is_zero() {
        return 0.0;
    }
    if k == 1 {
        return a.entries[0].norm();
    }
    // Rescale so the Gram matrix neither overflows nor underflows.
    let scale = a.max_abs_entry();
    let scaled = a.div_real(scale);
    let gram = scaled.adjoint().matmul(&scaled).expect("square");
    let top = jacobi_top_eigenvalue(&gram).unwrap_or_else(|| power_top_eigenvalue(&gram));
    libm::sqrt(top.max(0.0)) * scale
}

const JACOBI_SWEEPS: usize = 64;

fn jacobi_top_eigenvalue(gram: &Element) -> Option<f64> {
    let k = gram.k;
    let mut g = gram.entries.clone();
    let at = |p: usize, q: usize| p * k + q;
    for _ in 0..JACOBI_SWEEPS {
        let mut off = 0.0;
        let mut total = 0.0;
        for p in 0..k {
            for q in 0..k {
                let n = g[at(p, q)].norm_sqr();
                total += n;
                if p != q {
                    off += n;
                }
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * total * 1e-2 {
            return Some((0..k).map(|i| g[at(i, i)].re).fold(f64::MIN, f64::max));
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let gpq = g[at(p, q)];
                let r = gpq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = gpq / r;
                let (a, b) = (g[at(p, p)].re, g[at(q, q)].re);
                let theta = (b - a) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // Rotation W = diag(1, conj(phase)) * [[c, s], [-s, c]].
                let w_qp = -s * phase.conj();
                let w_qq = c * phase.conj();
                for i in 0..k {
                    let (gp, gq) = (g[at(i, p)], g[at(i, q)]);
                    g[at(i, p)] = gp * c + gq * w_qp;
                    g[at(i, q)] = gp * s + gq * w_qq;
                }
                for j in 0..k {
                    let (gp, gq) = (g[at(p, j)], g[at(q, j)]);
                    g[at(p, j)] = gp * c + gq * w_qp.conj();
                    g[at(q, j)] = gp * s + gq * w_qq.conj();
                }
                g[at(p, q)] = Complex64::new(0.0, 0.0);
                g[at(q, p)] = Complex64::new(0.0, 0.0);
                g[at(p, p)] = Complex64::new(g[at(p, p)].re, 0.0);
                g[at(q, q)] = Complex64::new(g[at(q, q)].re, 0.0);
            }
        }
    }
    None
}

/// Power iteration with Rayleigh quotient on a Hermitian positive
/// semidefinite matrix.
pub(crate) fn power_top_eigenvalue(gram: &Element) -> f64 {
    let k = gram.k;
    let mut v: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(1.0 + i as f64 * 0.1, 0.05 * i as f64))
        .collect();
    let mut estimate = 0.0;
    for _ in 0..2000 {
        let mut w = vec![Complex64::new(0.0, 0.0); k];
        for i in 0..k {
            for j in 0..k {
                w[i] += gram.entries[i * k + j] * v[j];
            }
        }
        let norm = libm::sqrt(w.iter().map(|z| z.norm_sqr()).sum());
        if norm == 0.0 {
            return 0.0;
        }
        let rayleigh: f64 = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
            / v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        v = w.into_iter().map(|z| z / norm).collect();
        if (rayleigh - estimate).abs() <= f64::EPSILON * rayleigh.abs() {
            return rayleigh;
        }
        estimate = rayleigh;
    }
    estimate
}

/// Seeded element with operator norm `target_norm`.
///
/// Entries are drawn uniformly from the unit square of the complex plane and
/// the draw is rescaled by `target_norm / norm`, so two calls with the same
/// seed differ only by the final scale factor.
pub fn random_element(k: usize, seed: u64, target_norm: f64) -> Result<Element> {
    if k == 0 {
        return Err(Error::invalid("matrix_size", "must be at least 1"));
    }
    if !(target_norm.is_finite() && target_norm > 0.0) {
        return Err(Error::invalid("target_norm", "must be positive and finite"));
    }
    for attempt in 0..DRAW_ATTEMPTS {
        let mut rng = rng::seeded(rng::mix(seed, attempt as u64), rng::stream::ELEMENT);
        let entries: Vec<Complex64> = (0..k * k)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let draw = Element { k, entries };
        let norm = operator_norm(&draw);
        if norm >= NORM_FLOOR {
            return Ok(draw.scale_real(target_norm / norm));
        }
    }
    Err(Error::DegenerateDraw {
        seed,
        attempts: DRAW_ATTEMPTS,
    })
}
