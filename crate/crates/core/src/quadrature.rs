//! Panel Gauss–Legendre quadrature along contour segments.
//!
//! Each segment is cut into panels whose length follows the local oscillation rate
//! and grows geometrically away from the segment's inner end. Every panel carries a
//! high-order rule and a half-order rule; their difference is the error estimate.
//! Semi-infinite rays are truncated where a caller-supplied decay model says the
//! remaining tail is below a tenth of the absolute tolerance.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::contour::{PathSegment, SegmentKind};
use crate::error::{Result, UtmError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureParams {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Gauss–Legendre order of the high rule on each panel; the low rule uses half.
    pub max_panel_order: usize,
    /// Hard upper limit on any truncation radius.
    pub truncation_radius: f64,
    /// High-rule nodes per wavelength of the integrand's oscillation.
    pub oscillation_density: f64,
    /// How many times a segment may halve its panels when the estimate is too large.
    pub max_refinements: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_panel_order: 20,
            truncation_radius: 5e4,
            oscillation_density: 24.0,
            max_refinements: 4,
        }
    }
}

impl QuadratureParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(UtmError::InvalidArgument(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.oscillation_density >= 4.0) {
            return bad("oscillation density must be at least 4");
        }
        if self.max_panel_order < 2 || self.max_panel_order > 64 {
            return bad("panel order must lie in [2, 64]");
        }
        if !(self.truncation_radius > 0.0) {
            return bad("truncation radius must be positive");
        }
        Ok(())
    }
}

/// Phase rate of the integrand, in radians per unit of `|λ|`, as a function of `|λ|`:
/// `linear + coeff·|λ|^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationHint {
    pub linear: f64,
    pub coeff: f64,
    pub power: i32,
}

impl OscillationHint {
    pub fn none() -> Self {
        Self {
            linear: 0.0,
            coeff: 0.0,
            power: 0,
        }
    }

    /// Phase from `e^{iλx}` times transforms over `[0, L]`, plus `e^{−aλⁿt}`.
    pub fn fourier(x: f64, support: f64, n: usize, a_abs: f64, t: f64) -> Self {
        Self {
            linear: x.abs() + support,
            coeff: n as f64 * a_abs * t,
            power: n as i32 - 1,
        }
    }

    pub fn rate(&self, r: f64) -> f64 {
        self.linear
            + if self.coeff > 0.0 {
                self.coeff * r.powi(self.power)
            } else {
                0.0
            }
    }
}

/// Bound on `|integrand|` along a semi-infinite ray, as a function of the ray parameter.
#[derive(Clone)]
pub enum DecayModel {
    /// `scale·exp(−rate·p^power + growth·p)`.
    Exponential {
        scale: f64,
        rate: f64,
        power: f64,
        growth: f64,
    },
    /// `scale·p^{−power}` with `power > 1`.
    Algebraic { scale: f64, power: f64 },
    /// Any pointwise bound, assumed eventually decreasing faster than `1/p`.
    Envelope(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential {
                scale,
                rate,
                power,
                growth,
            } => write!(f, "Exponential({scale}, {rate}, {power}, {growth})"),
            Self::Algebraic { scale, power } => write!(f, "Algebraic({scale}, {power})"),
            Self::Envelope(_) => write!(f, "Envelope"),
        }
    }
}

impl DecayModel {
    /// Ray parameter beyond which the tail integral is below `abs_tol/10`.
    pub fn truncation_radius(&self, start: f64, abs_tol: f64) -> Result<f64> {
        let target = abs_tol / 10.0;
        match *self {
            Self::Exponential {
                scale,
                rate,
                power,
                growth,
            } => {
                if !(rate > 0.0 && power > 0.0) {
                    return Err(UtmError::TailBoundUnavailable);
                }
                if scale <= 0.0 {
                    return Ok(start);
                }
                // rate·Λ^p − growth·Λ = ln(10·scale/abs_tol); monotone past its minimum
                let rhs = (scale / target).ln().max(0.0);
                let g = |l: f64| rate * l.powf(power) - growth * l - rhs;
                let mut hi = start.max(1.0);
                while g(hi) < 0.0 || (power > 1.0 && hi < (growth / (rate * power)).powf(1.0 / (power - 1.0))) {
                    hi *= 2.0;
                    if hi > 1e12 {
                        return Err(UtmError::TailBoundUnavailable);
                    }
                }
                let mut lo = start.min(hi);
                if g(lo) >= 0.0 {
                    return Ok(lo);
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                // the exponential tail integral adds at most a factor 1/(rate·p·Λ^{p−1}); pad it
                Ok(hi * 1.05 + 1.0)
            }
            Self::Algebraic { scale, power } => {
                if !(power > 1.0) {
                    return Err(UtmError::TailBoundUnavailable);
                }
                if scale <= 0.0 {
                    return Ok(start);
                }
                Ok((scale / ((power - 1.0) * target)).powf(1.0 / (power - 1.0)).max(start))
            }
            Self::Envelope(ref bound) => {
                let ok = |p: f64| bound(p) * p.max(1.0) < target;
                let mut p = start.max(1e-3);
                let mut steps = 0;
                while !(ok(p) && ok(2.0 * p) && ok(4.0 * p)) {
                    p *= 2.0;
                    steps += 1;
                    if steps > 60 {
                        return Err(UtmError::TailBoundUnavailable);
                    }
                }
                // bisect back towards the first point where the bound holds
                let (mut lo, mut hi) = (0.5 * p, p);
                if steps == 0 {
                    return Ok(p);
                }
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    if ok(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Ok(hi)
            }
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule of order `n ≤ 64`.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<OnceLock<GaussLegendre>>> = OnceLock::new();
    let table = RULES.get_or_init(|| (0..=64).map(|_| OnceLock::new()).collect());
    assert!((1..=64).contains(&n), "unsupported Gauss–Legendre order {n}");
    table[n].get_or_init(|| compute_gauss_legendre(n))
}

/// A discretized segment: `∫ f dλ ≈ Σ w_i f(λ_i)`, with the orientation and `dλ/dp` folded
/// into the weights.
#[derive(Debug, Clone, Default)]
pub struct SegmentRule {
    pub high: Vec<(Complex64, Complex64)>,
    pub low: Vec<(Complex64, Complex64)>,
    /// Where a semi-infinite ray was cut off, if it was.
    pub truncated_at: Option<f64>,
    pub panels: usize,
}

impl SegmentRule {
    pub fn apply(&self, f: impl Fn(Complex64) -> Complex64) -> (Complex64, f64) {
        let hi: Complex64 = self.high.iter().map(|(l, w)| w * f(*l)).sum();
        let lo: Complex64 = self.low.iter().map(|(l, w)| w * f(*l)).sum();
        (hi, (hi - lo).norm())
    }
}

/// Outcome of integrating one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    /// False when the estimate still exceeded the tolerance after all refinements.
    pub converged: bool,
}

/// Panel breakpoints on `[a, b]` in parameter units.
fn panel_breaks(
    seg: &PathSegment,
    a: f64,
    b: f64,
    params: &QuadratureParams,
    hint: &OscillationHint,
    shrink: f64,
) -> Vec<f64> {
    let p_high = params.max_panel_order as f64;
    let speed = seg.speed();
    let (near, cap) = match seg.kind {
        SegmentKind::Ray { base, angle, inner, .. } => {
            let j = (base + Complex64::from_polar(inner, angle)).norm();
            (0.2 * j.clamp(1e-3, 1.0), 2.0)
        }
        SegmentKind::Arc { radius, .. } => (f64::INFINITY, 0.25 * radius),
    };
    let mut out = vec![a];
    let mut s = a;
    while s < b {
        let lam = seg.point(s);
        let r = lam.norm();
        let rate = hint.rate(r).max(1e-12);
        let l_osc = (p_high / params.oscillation_density) * 2.0 * PI / rate;
        let mut len = l_osc.min(cap);
        if near.is_finite() {
            len = len.min(0.5 * r.max(near)).min(0.5 * (s - a) + near);
        }
        let dp = (len * shrink / speed).max(1e-12 * (1.0 + s.abs()));
        let next = s + dp;
        if next >= b || b - next < 0.25 * dp {
            out.push(b);
            break;
        }
        out.push(next);
        s = next;
    }
    out
}

/// Discretizes a segment; `refine` halves every panel that many times.
pub fn discretize(
    seg: &PathSegment,
    params: &QuadratureParams,
    hint: &OscillationHint,
    decay: Option<&DecayModel>,
    refine: usize,
) -> Result<SegmentRule> {
    params.validate()?;
    let (a, mut b) = seg.param_range();
    let mut truncated_at = None;
    if b.is_infinite() {
        let model = decay.ok_or(UtmError::TailBoundUnavailable)?;
        let lam = model.truncation_radius(a, params.abs_tol)?;
        b = lam.min(params.truncation_radius).max(a);
        truncated_at = Some(b);
    }
    let mut rule = SegmentRule {
        truncated_at,
        ..SegmentRule::default()
    };
    if b <= a {
        return Ok(rule);
    }
    let shrink = 0.5f64.powi(refine as i32);
    let breaks = panel_breaks(seg, a, b, params, hint, shrink);
    let hi_rule = gauss_legendre(params.max_panel_order);
    let lo_rule = gauss_legendre((params.max_panel_order / 2).max(1));
    rule.panels = breaks.len() - 1;
    rule.high.reserve(rule.panels * hi_rule.nodes.len());
    rule.low.reserve(rule.panels * lo_rule.nodes.len());
    for w in breaks.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (gl, dest) in [(hi_rule, &mut rule.high), (lo_rule, &mut rule.low)] {
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                let p = c + h * x;
                dest.push((seg.point(p), seg.tangent(p) * (wt * h * seg.orientation)));
            }
        }
    }
    Ok(rule)
}

/// `∫_seg f(λ) dλ` with refinement until the order-doubling estimate meets the tolerance.
pub fn integrate_segment(
    f: impl Fn(Complex64) -> Complex64,
    seg: &PathSegment,
    params: &QuadratureParams,
    hint: &OscillationHint,
    decay: Option<&DecayModel>,
) -> Result<QuadResult> {
    let mut last = QuadResult {
        value: Complex64::new(0.0, 0.0),
        error: f64::INFINITY,
        converged: false,
    };
    for refine in 0..=params.max_refinements {
        let rule = discretize(seg, params, hint, decay, refine)?;
        let (value, error) = rule.apply(&f);
        let limit = params.abs_tol.max(params.rel_tol * value.norm());
        last = QuadResult {
            value,
            error,
            converged: error <= limit,
        };
        if last.converged {
            break;
        }
    }
    Ok(last)
}

/// `∫_{Γ₀} e^{iλx} λ^{−m} dλ` for `x > 0`: identically zero, because `Γ₀` passes above
/// the only pole and the integrand decays in the upper half plane.
pub fn gamma0_monomial_integral(m: usize, x: f64, delta_indent: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(UtmError::NonpositiveX(x));
    }
    if m == 0 || !(delta_indent > 0.0) {
        return Err(UtmError::InvalidArgument(format!(
            "need m ≥ 1 and δ > 0, got m = {m}, δ = {delta_indent}"
        )));
    }
    Ok(Complex64::new(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1, 2, 5, 10, 20, 33] {
            let gl = gauss_legendre(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            let even = 2 * n - 2;
            let q: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(even as i32))
                .sum();
            assert!((q - 2.0 / (even as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn constant_on_arc_gives_chord() {
        // ∫ 1 dλ along a path is end − start
        let seg = PathSegment::arc(c(0.0, 0.0), 2.0, 0.3, 2.0, 1.0);
        let r = integrate_segment(
            |_| c(1.0, 0.0),
            &seg,
            &QuadratureParams::default(),
            &OscillationHint::none(),
            None,
        )
        .unwrap();
        assert!((r.value - (seg.end_point() - seg.start_point())).norm() < 1e-13);
        let rev = integrate_segment(
            |_| c(1.0, 0.0),
            &seg.reversed(),
            &QuadratureParams::default(),
            &OscillationHint::none(),
            None,
        )
        .unwrap();
        assert_eq!(rev.value, -r.value);
    }

    #[test]
    fn residue_check_on_indented_line() {
        // ∫_{Γ₀} e^{iλ}/(λ − 2iδ) dλ = 2πi e^{−2δ}: the pole sits above the indentation
        let delta = 0.1;
        let params = QuadratureParams::default();
        let hint = OscillationHint::fourier(1.0, 0.0, 1, 0.0, 0.0);
        let pole = c(0.0, 2.0 * delta);
        let f = |l: Complex64| (Complex64::i() * l).exp() / (l - pole);
        // the real-line tails decay like 1/λ only: cut them at Λ and add their leading asymptotics
        let zero = c(0.0, 0.0);
        let segs = [
            PathSegment::ray(zero, PI, delta, 4000.0, -1.0),
            PathSegment::arc(zero, delta, 0.0, PI, -1.0),
            PathSegment::ray(zero, 0.0, delta, 4000.0, 1.0),
        ];
        let total: Complex64 = segs
            .iter()
            .map(|s| integrate_segment(f, s, &params, &hint, None).unwrap().value)
            .sum();
        // boundary terms of the truncated tails: ∫_Λ^∞ e^{iλ}/λ ≈ i e^{iΛ}/Λ on each side
        let lam = 4000.0;
        let tails = Complex64::i() * (Complex64::i() * lam).exp() / (c(lam, 0.0) - pole)
            - Complex64::i() * (-Complex64::i() * lam).exp() / (c(-lam, 0.0) - pole);
        let exact = 2.0 * PI * Complex64::i() * (-2.0 * delta).exp();
        assert!(
            (total + tails - exact).norm() < 1e-6,
            "{}",
            (total + tails - exact).norm()
        );
    }

    #[test]
    fn exponential_truncation_matches_formula() {
        let m = DecayModel::Exponential {
            scale: 1.0,
            rate: 2.0,
            power: 1.0,
            growth: 0.0,
        };
        let l = m.truncation_radius(0.0, 1e-10).unwrap();
        let formula = (1e11f64).ln() / 2.0;
        assert!(l >= formula && l < formula * 1.2 + 1.0);
        assert!(matches!(
            DecayModel::Algebraic { scale: 1.0, power: 1.0 }.truncation_radius(1.0, 1e-8),
            Err(UtmError::TailBoundUnavailable)
        ));
    }

    #[test]
    fn infinite_rays_need_a_decay_model() {
        let seg = PathSegment::ray(c(0.0, 0.0), 0.0, 1.0, f64::INFINITY, 1.0);
        let r = integrate_segment(
            |_| c(1.0, 0.0),
            &seg,
            &QuadratureParams::default(),
            &OscillationHint::none(),
            None,
        );
        assert!(matches!(r, Err(UtmError::TailBoundUnavailable)));
        let decay = DecayModel::Exponential {
            scale: 1.0,
            rate: 1.0,
            power: 1.0,
            growth: 0.0,
        };
        let r = integrate_segment(
            |l: Complex64| (-l).exp(),
            &seg,
            &QuadratureParams::default(),
            &OscillationHint::none(),
            Some(&decay),
        )
        .unwrap();
        assert!((r.value - c((-1.0f64).exp(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn monomial_integral_is_zero() {
        assert_eq!(gamma0_monomial_integral(3, 1.0, 0.1).unwrap(), c(0.0, 0.0));
        assert_eq!(gamma0_monomial_integral(1, 0.5, 0.1).unwrap(), c(0.0, 0.0));
        assert!(matches!(
            gamma0_monomial_integral(2, 0.0, 0.1),
            Err(UtmError::NonpositiveX(_))
        ));
    }
}
