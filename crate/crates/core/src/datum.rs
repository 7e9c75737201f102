//! Smooth compactly supported initial data with exact derivatives.
//!
//! A datum is `f(x) = χ(x)·Σ_j c_j x^j/j! + Σ bumps`, where `χ ≡ 1` on `[0, L/2]`,
//! `χ ≡ 0` on `[L, ∞)`, and every bump lives inside `[L/4, L]`. Near the origin `f`
//! is exactly the polynomial, so `f⁽ʲ⁾(0) = c_j` and every derivative of order at
//! least `n` vanishes identically on `[0, L/4]`.
//!
//! Derivatives are computed with truncated Taylor series ("jets") propagated
//! through `exp` and reciprocal, so they are exact up to rounding.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::BoundaryVector;
use crate::error::{Result, UtmError};
use crate::problem::ValidatedProblem;

/// Below this exponent `e^{-1/s}` and its derivatives are treated as exactly zero.
const EXP_CUTOFF: f64 = -600.0;

/// Highest derivative order whose L¹ norm is cached for tail bounds.
pub const MAX_NORM_ORDER: usize = 24;

/// Normalized Taylor coefficients `a_k = g⁽ᵏ⁾(x)/k!` of a real function.
#[derive(Debug, Clone)]
struct Jet(Vec<f64>);

impl Jet {
    fn zero(order: usize) -> Self {
        Jet(vec![0.0; order + 1])
    }

    fn constant(c: f64, order: usize) -> Self {
        let mut j = Self::zero(order);
        j.0[0] = c;
        j
    }

    fn affine(x0: f64, slope: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.0[1] = slope;
        }
        j
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    fn mul(&self, other: &Jet) -> Jet {
        let k = self.0.len();
        let mut out = vec![0.0; k];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.0.iter().take(k - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet(out)
    }

    fn add(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn scale(&self, s: f64) -> Jet {
        Jet(self.0.iter().map(|a| a * s).collect())
    }

    fn recip(&self) -> Jet {
        let a = &self.0;
        let mut b = vec![0.0; a.len()];
        b[0] = 1.0 / a[0];
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Jet(b)
    }

    fn exp(&self) -> Jet {
        let a = &self.0;
        let mut e = vec![0.0; a.len()];
        e[0] = a[0].exp();
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }
}

/// Jet of `e^{-1/s}` (zero for `s ≤ 0`) where `s = s0 + slope·h`.
fn psi_jet(s0: f64, slope: f64, order: usize) -> Jet {
    if s0 <= 0.0 || -1.0 / s0 < EXP_CUTOFF {
        return Jet::zero(order);
    }
    Jet::affine(s0, slope, order).recip().scale(-1.0).exp()
}

/// `A·exp(−1/(1−s²))`, `s = (x−center)/half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    fn jet(&self, x: f64, order: usize) -> Jet {
        let s0 = (x - self.center) / self.half_width;
        let q0 = 1.0 - s0 * s0;
        if q0 <= 0.0 || -1.0 / q0 < EXP_CUTOFF {
            return Jet::zero(order);
        }
        let s = Jet::affine(s0, 1.0 / self.half_width, order);
        let q = Jet::constant(1.0, order).add(&s.mul(&s).scale(-1.0));
        q.recip().scale(-1.0).exp().scale(self.amplitude)
    }

    pub fn start(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn end(&self) -> f64 {
        self.center + self.half_width
    }
}

/// A member of the working space: smooth, compactly supported in `[0, L]`.
#[derive(Debug)]
pub struct InitialDatum {
    support: f64,
    poly: Vec<Complex64>,
    bumps: Vec<Bump>,
    norms: OnceLock<Vec<f64>>,
}

impl Clone for InitialDatum {
    fn clone(&self) -> Self {
        Self::from_parts(self.support, self.poly.clone(), self.bumps.clone())
    }
}

impl InitialDatum {
    /// Builds a datum without any boundary-condition check.
    pub fn from_parts(support: f64, poly: Vec<Complex64>, bumps: Vec<Bump>) -> Self {
        assert!(support > 0.0 && support.is_finite(), "support must be positive");
        Self {
            support,
            poly,
            bumps,
            norms: OnceLock::new(),
        }
    }

    /// The zero function with nominal support `L`.
    pub fn zero(support: f64) -> Self {
        Self::from_parts(support, Vec::new(), Vec::new())
    }

    /// Support bound `L`: `f ≡ 0` on `[L, ∞)`.
    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn polynomial_coeffs(&self) -> &[Complex64] {
        &self.poly
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0) && self.poly.iter().all(|c| c.norm() == 0.0)
    }

    /// Degree of the polynomial part plus one; derivatives of this order or higher vanish near 0.
    pub fn poly_len(&self) -> usize {
        self.poly.iter().rposition(|c| c.norm() != 0.0).map_or(0, |p| p + 1)
    }

    /// Left end of the support of `f⁽ᵈ⁾`: zero unless `d` kills the polynomial part.
    pub fn derivative_support_start(&self, d: usize) -> f64 {
        if d < self.poly_len() {
            return 0.0;
        }
        let half = if self.poly_len() > 0 {
            0.5 * self.support
        } else {
            self.support
        };
        self.bumps.iter().map(Bump::start).fold(half, f64::min).max(0.0)
    }

    /// `f⁽ᵏ⁾(0)` for `k = 0..len`.
    pub fn boundary_vector(&self, len: usize) -> BoundaryVector {
        BoundaryVector::new(
            (0..len)
                .map(|j| self.poly.get(j).copied().unwrap_or_default())
                .collect(),
        )
    }

    /// `f(x), f'(x), …, f⁽ᵏᵐᵃˣ⁾(x)`.
    pub fn derivatives(&self, x: f64, kmax: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); kmax + 1];
        if !(x < self.support) {
            return out;
        }
        if x < 0.0 {
            // polynomial continuation to the left of the origin
            for (k, o) in out.iter_mut().enumerate() {
                *o = self.poly_derivative(x, k);
            }
            return out;
        }
        if self.poly_len() > 0 {
            let chi = self.cutoff_jet(x, kmax);
            // Leibniz: (χP)^(k) = Σ C(k,i) χ^(i) P^(k−i); with normalized jets it is a Cauchy product.
            let p: Vec<Complex64> = (0..=kmax).map(|k| self.poly_derivative(x, k) / factorial(k)).collect();
            for k in 0..=kmax {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..=k {
                    if chi.0[i] != 0.0 {
                        s += p[k - i] * chi.0[i];
                    }
                }
                out[k] = s;
            }
        }
        for b in &self.bumps {
            let j = b.jet(x, kmax);
            for (o, v) in out.iter_mut().zip(&j.0) {
                *o += *v;
            }
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o *= factorial(k);
        }
        out
    }

    pub fn derivative(&self, x: f64, k: usize) -> Complex64 {
        self.derivatives(x, k)[k]
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.derivative(x, 0)
    }

    fn poly_derivative(&self, x: f64, k: usize) -> Complex64 {
        // d^k/dx^k Σ c_j x^j/j! = Σ_{j≥k} c_j x^{j−k}/(j−k)!
        let mut s = Complex64::new(0.0, 0.0);
        let mut term = 1.0;
        for (i, c) in self.poly.iter().skip(k).enumerate() {
            if i > 0 {
                term *= x / i as f64;
            }
            s += c * term;
        }
        s
    }

    fn cutoff_jet(&self, x: f64, order: usize) -> Jet {
        let l = self.support;
        if x >= l {
            return Jet::zero(order);
        }
        if x <= 0.5 * l {
            return Jet::constant(1.0, order);
        }
        let a = psi_jet(l - x, -1.0, order);
        let b = psi_jet(x - 0.5 * l, 1.0, order);
        if a.is_zero() {
            return Jet::zero(order);
        }
        if b.is_zero() {
            return Jet::constant(1.0, order);
        }
        a.mul(&a.add(&b).recip())
    }

    /// `‖f⁽ᵏ⁾‖₁` over `[0, L]` for `k ≤ MAX_NORM_ORDER`, cached.
    pub fn derivative_l1_norm(&self, k: usize) -> f64 {
        let norms = self.norms.get_or_init(|| self.compute_norms());
        norms.get(k).copied().unwrap_or(f64::INFINITY)
    }

    fn compute_norms(&self) -> Vec<f64> {
        // midpoint rule on a fine grid; only used for tail bounds, so a few digits suffice
        let cells = 4000;
        let h = self.support / cells as f64;
        let mut acc = vec![0.0; MAX_NORM_ORDER + 1];
        for i in 0..cells {
            let x = (i as f64 + 0.5) * h;
            for (a, d) in acc.iter_mut().zip(self.derivatives(x, MAX_NORM_ORDER)) {
                *a += d.norm() * h;
            }
        }
        // safety margin for the coarse rule
        acc.iter().map(|v| v * 1.25).collect()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `c_j = f⁽ʲ⁾(0)` for `j < m_terms`: the coefficients of the large-λ expansion
/// `f̂(λ) = Σ_j c_j/(iλ)^{j+1} + O(λ^{−m−1})`.
pub fn tail_subtraction_coeffs(f: &InitialDatum, m_terms: usize) -> Vec<Complex64> {
    f.boundary_vector(m_terms).values
}

/// Random bumps inside `[L/4, L]`, reproducible from the seed.
pub fn random_bumps(support: f64, seed: u64) -> Vec<Bump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 2;
    (0..count)
        .map(|_| {
            let half_width = support * rng.gen_range(0.15..0.3);
            let lo = 0.25 * support + half_width;
            let hi = support - half_width;
            let center = rng.gen_range(lo..hi);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Bump {
                center,
                half_width,
                amplitude: sign * rng.gen_range(1.0..3.0),
            }
        })
        .collect()
}

/// Builds a datum in the problem's domain: polynomial part from `kernel_coeffs`
/// (which must be annihilated by every boundary form) plus optional seeded bumps.
pub fn make_datum(
    problem: &ValidatedProblem,
    cutoff_scale: f64,
    kernel_coeffs: &[Complex64],
    bump_seed: Option<u64>,
) -> Result<InitialDatum> {
    let n = problem.n();
    if kernel_coeffs.len() != n {
        return Err(UtmError::InvalidArgument(format!(
            "expected {n} kernel coefficients, got {}",
            kernel_coeffs.len()
        )));
    }
    if !(cutoff_scale > 0.0 && cutoff_scale.is_finite()) {
        return Err(UtmError::InvalidArgument(format!(
            "support {cutoff_scale} must be positive"
        )));
    }
    let u = BoundaryVector::new(kernel_coeffs.to_vec());
    let residual = problem
        .boundary()
        .apply(&u)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let scale =
        kernel_coeffs.iter().map(|z| z.norm()).fold(1.0, f64::max) * problem.boundary().matrix().max_abs().max(1.0);
    if residual > 1e-12 * scale {
        return Err(UtmError::CoeffsNotInKernel(residual));
    }
    let bumps = bump_seed.map_or_else(Vec::new, |s| random_bumps(cutoff_scale, s));
    Ok(InitialDatum::from_parts(cutoff_scale, kernel_coeffs.to_vec(), bumps))
}

/// A kernel vector with as many nonzero boundary derivatives as the conditions allow.
pub fn generic_kernel_vector(problem: &ValidatedProblem) -> Vec<Complex64> {
    let k = problem.boundary().matrix().kernel();
    let n = problem.n();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..k.cols() {
        let w = if c % 2 == 0 { 1.0 } else { -0.6 } / (1.0 + c as f64);
        for (r, vr) in v.iter_mut().enumerate() {
            *vr += k[(r, c)] * w;
        }
    }
    let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m > 0.0 {
        for z in &mut v {
            *z /= m;
        }
    }
    v
}

/// The three standard test data on `[0, L]`: boundary-heavy, pure bump, and mixed.
pub fn standard_data(problem: &ValidatedProblem, support: f64) -> Vec<(&'static str, InitialDatum)> {
    let kernel = generic_kernel_vector(problem);
    let zero = vec![Complex64::new(0.0, 0.0); problem.n()];
    let half: Vec<Complex64> = kernel.iter().map(|z| z * 0.5).collect();
    vec![
        (
            "boundary",
            make_datum(problem, support, &kernel, None).expect("kernel vector"),
        ),
        (
            "bump",
            make_datum(problem, support, &zero, Some(11)).expect("zero vector"),
        ),
        (
            "mixed",
            make_datum(problem, support, &half, Some(23)).expect("kernel vector"),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, validate};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn jets_match_finite_differences() {
        let f = InitialDatum::from_parts(3.0, vec![c(0.3), c(1.0), c(-0.5)], random_bumps(3.0, 5));
        for &x in &[0.2, 1.0, 1.7, 2.3, 2.9] {
            let d = f.derivatives(x, 3);
            let h = 1e-4;
            for k in 0..3 {
                let fd = (f.derivative(x + h, k) - f.derivative(x - h, k)) / (2.0 * h);
                assert!((fd - d[k + 1]).norm() < 1e-5 * (1.0 + d[k + 1].norm()), "x={x} k={k}");
            }
        }
    }

    #[test]
    fn boundary_values_are_the_polynomial() {
        let f = InitialDatum::from_parts(3.0, vec![c(0.0), c(1.0), c(2.0)], random_bumps(3.0, 1));
        let d = f.derivatives(0.0, 5);
        assert_eq!(d[0], c(0.0));
        assert!((d[1] - c(1.0)).norm() < 1e-15);
        assert!((d[2] - c(2.0)).norm() < 1e-15);
        assert_eq!(d[3], c(0.0));
        assert_eq!(f.value(3.0), c(0.0));
        assert_eq!(f.value(10.0), c(0.0));
    }

    #[test]
    fn bumps_live_in_the_upper_three_quarters() {
        for seed in 0..50 {
            for b in random_bumps(2.0, seed) {
                assert!(b.start() >= 0.5 - 1e-12 && b.end() <= 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn make_datum_checks_the_kernel() {
        let p1 = validate(builtin("lkdv-dirichlet").unwrap()).unwrap();
        let f = make_datum(&p1, 3.0, &[c(0.0), c(1.0), c(0.0)], None).unwrap();
        assert_eq!(f.value(0.0), c(0.0));
        assert!((f.derivative(0.0, 1) - c(1.0)).norm() < 1e-15);
        assert!(matches!(
            make_datum(&p1, 3.0, &[c(1.0), c(0.0), c(0.0)], None),
            Err(UtmError::CoeffsNotInKernel(_))
        ));
        let p2 = validate(builtin("reverse-lkdv").unwrap()).unwrap();
        let g = make_datum(&p2, 3.0, &[c(0.0), c(0.0), c(1.0)], Some(3)).unwrap();
        let d = g.derivatives(0.0, 2);
        assert_eq!((d[0], d[1]), (c(0.0), c(0.0)));
        assert!((d[2] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn generic_kernel_vectors_are_admissible() {
        for p in crate::problem::builtin_catalog() {
            let vp = validate(p).unwrap();
            let v = generic_kernel_vector(&vp);
            assert!(make_datum(&vp, 3.0, &v, Some(1)).is_ok());
            assert!(v.iter().filter(|z| z.norm() > 0.0).count() >= vp.n() - vp.big_n());
        }
    }

    #[test]
    fn subtraction_coeffs_of_pure_bump_vanish() {
        let f = InitialDatum::from_parts(3.0, vec![c(0.0); 3], random_bumps(3.0, 9));
        assert!(tail_subtraction_coeffs(&f, 5).iter().all(|z| z.norm() == 0.0));
        assert!(f.derivative_support_start(3) >= 0.75);
    }
}
