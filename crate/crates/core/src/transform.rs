//! Forward transforms `F_k[f](λ)`, their kernels, and contour inversion.
//!
//! Every forward transform is a finite combination of Fourier transforms of the
//! datum at rotated arguments,
//!
//! ```text
//! F_k[f](λ) = Σ_l c_{k,l}(λ) f̂(μ_l),   μ_l = α^{N+l−k} λ,   f̂(μ) = ∫₀^L e^{−iμy} f(y) dy,
//! ```
//!
//! with `c_{0,1} = 1/2π` and, for `k ≥ 1`, `c_{k,l}` the signed cyclic cofactors of
//! `M(α^{N+1−k}λ)` contracted with the first row of `M(λ)` and divided by `2πΔ`.
//!
//! Integrating by parts `m` times splits `f̂(μ)` into boundary terms
//! `Σ_{j<m} f⁽ʲ⁾(0)/(iμ)^{j+1}` and a remainder `(iμ)^{−m}·(f⁽ᵐ⁾)^(μ)`. The boundary
//! terms are rational in `λ` and integrate to zero along every contour by Jordan's
//! lemma, so at `t = 0` only the rapidly decaying remainder is integrated.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::boundary::{complementary_forms, BoundaryFormMatrix};
use crate::charmat::CharMatrix;
use crate::contour::{
    build_contours, default_indent, deform_bounded, mu_factors, ContourSystem, GrowthBox, PathSegment, SegmentKind,
    DEFAULT_GROWTH_CAP,
};
use crate::datum::{InitialDatum, MAX_NORM_ORDER};
use crate::error::{Result, UtmError};
use crate::problem::ValidatedProblem;
use crate::quadrature::{discretize, gamma0_monomial_integral, DecayModel, OscillationHint, QuadratureParams};

/// Panels on the coarsest level of the inner-transform cache.
const BASE_PANELS: usize = 64;
/// Gauss–Legendre nodes per inner panel.
const INNER_ORDER: usize = 16;
/// Largest phase change `|μ|ℓ` allowed across one inner panel.
const INNER_PHASE: f64 = 3.0 * PI;
/// Inner panels beyond `40/κ` past the support start are dropped when `e^{−iμy}` decays at rate `κ`.
const INNER_DECAY_CUT: f64 = 40.0;
const MAX_LEVEL: usize = 16;
const TWO_PI: f64 = 2.0 * PI;

/// `∫₀^L e^{−iμy} f⁽ᵈ⁾(y) dy` with derivative samples cached on dyadic panel levels.
///
/// The polynomial-with-cutoff part and the bump part are kept apart: only the former has
/// nonzero derivatives at the origin, so only it needs boundary-term subtraction. Bump
/// derivatives grow factorially with the order and are never used beyond what is asked.
pub struct TransformTable {
    datum: InitialDatum,
    max_order: usize,
    parts: [Component; 2],
}

impl TransformTable {
    pub fn new(datum: InitialDatum, max_order: usize) -> Self {
        let l = datum.support();
        let poly = InitialDatum::from_parts(l, datum.polynomial_coeffs().to_vec(), Vec::new());
        let bumps = InitialDatum::from_parts(l, Vec::new(), datum.bumps().to_vec());
        Self {
            datum,
            max_order,
            parts: [Component::new(poly, max_order), Component::new(bumps, max_order)],
        }
    }

    pub fn datum(&self) -> &InitialDatum {
        &self.datum
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `(f⁽ᵈ⁾)^(μ)`.
    pub fn hat(&self, d: usize, mu: Complex64) -> Complex64 {
        self.parts[0].hat(d, mu) + self.parts[1].hat(d, mu)
    }

    /// `(f⁽ᵈ⁾)^(μ)` minus its first `m` boundary terms, `= (iμ)^{−m} (f^{(d+m)})^(μ)`.
    pub fn remainder(&self, d: usize, m: usize, mu: Complex64) -> Complex64 {
        let poly = if self.parts[0].datum.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.parts[0].hat(d + m, mu) / (Complex64::i() * mu).powu(m as u32)
        };
        poly + self.parts[1].hat(d, mu)
    }

    /// Upper bound on `|remainder(d, m, μ)|` from derivative norms.
    pub fn remainder_bound(&self, d: usize, m: usize, mu: Complex64) -> f64 {
        self.parts[0].bound(d, m, mu) + self.parts[1].bound(d, 0, mu)
    }
}

struct Component {
    datum: InitialDatum,
    max_order: usize,
    levels: Vec<OnceLock<Level>>,
    min_level: OnceLock<usize>,
}

struct Level {
    ell: f64,
    /// `values[d][panel·INNER_ORDER + i]`.
    values: Vec<Vec<Complex64>>,
}

impl Component {
    fn new(datum: InitialDatum, max_order: usize) -> Self {
        Self {
            datum,
            max_order,
            levels: (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect(),
            min_level: OnceLock::new(),
        }
    }

    /// Coarsest level on which `∫₀^L f⁽ᵈ⁾ = −f⁽ᵈ⁻¹⁾(0)` holds to near rounding for the top order.
    fn min_level(&self) -> usize {
        *self.min_level.get_or_init(|| {
            let d = self.max_order;
            let exact = if d == 0 {
                None
            } else {
                Some(-self.datum.boundary_vector(d).values[d - 1])
            };
            let scale = self.datum.derivative_l1_norm(d).max(f64::MIN_POSITIVE);
            let mut prev = None;
            for j in 0..MAX_LEVEL {
                let v = self.hat_on(j, d, Complex64::new(0.0, 0.0));
                let err = match exact {
                    Some(e) => (v - e).norm(),
                    None => prev.map_or(f64::INFINITY, |p: Complex64| (v - p).norm()),
                };
                if err <= 1e-13 * scale {
                    return j;
                }
                prev = Some(v);
            }
            MAX_LEVEL
        })
    }

    fn bound(&self, d: usize, m: usize, mu: Complex64) -> f64 {
        if self.datum.is_zero() {
            return 0.0;
        }
        let datum = &self.datum;
        let bv = datum.boundary_vector(MAX_NORM_ORDER + 1).values;
        let l = datum.support();
        let r = mu.norm();
        let mut best = f64::INFINITY;
        let mut head = 0.0;
        for q in m..=MAX_NORM_ORDER.saturating_sub(d) {
            if q > m {
                head += bv[d + q - 1].norm() / r.powi(q as i32);
            }
            let y0 = datum.derivative_support_start(d + q);
            let e = (mu.im * y0).max(mu.im * l).exp();
            let tail = datum.derivative_l1_norm(d + q) * e / r.powi(q as i32);
            best = best.min(head + tail);
        }
        best
    }

    fn hat(&self, d: usize, mu: Complex64) -> Complex64 {
        assert!(d <= self.max_order, "derivative order {d} not cached");
        if self.datum.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let need = (self.datum.support() * mu.norm() / INNER_PHASE).ceil() as usize;
        let mut j = self.min_level();
        while (BASE_PANELS << j) < need && j < MAX_LEVEL {
            j += 1;
        }
        self.hat_on(j, d, mu)
    }

    fn level(&self, j: usize) -> &Level {
        self.levels[j].get_or_init(|| {
            let l = self.datum.support();
            let panels = BASE_PANELS << j;
            let ell = l / panels as f64;
            let gl = crate::quadrature::gauss_legendre(INNER_ORDER);
            let mut values = vec![Vec::with_capacity(panels * INNER_ORDER); self.max_order + 1];
            for p in 0..panels {
                let c = (p as f64 + 0.5) * ell;
                for x in &gl.nodes {
                    let ds = self.datum.derivatives(c + 0.5 * ell * x, self.max_order);
                    for (v, d) in values.iter_mut().zip(ds) {
                        v.push(d);
                    }
                }
            }
            Level { ell, values }
        })
    }

    fn hat_on(&self, j: usize, d: usize, mu: Complex64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let level = self.level(j);
        let panels = BASE_PANELS << j;
        let ell = level.ell;
        let y0 = self.datum.derivative_support_start(d);
        let first = ((y0 / ell).floor() as usize).min(panels);
        let kappa = -mu.im;
        let last = if kappa > 0.0 {
            let cut = y0 + INNER_DECAY_CUT / kappa;
            (((cut / ell).ceil() as usize) + 1).min(panels)
        } else {
            panels
        };
        if first >= last {
            return zero;
        }
        let gl = crate::quadrature::gauss_legendre(INNER_ORDER);
        let mi = Complex64::new(0.0, -1.0) * mu;
        let offs: Vec<Complex64> = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| (mi * (0.5 * ell * x)).exp() * (0.5 * ell * w))
            .collect();
        let step = (mi * ell).exp();
        let vals = &level.values[d];
        let mut acc = zero;
        let mut z = zero;
        for p in first..last {
            if (p - first) % 256 == 0 {
                z = (mi * ((p as f64 + 0.5) * ell)).exp();
            }
            let base = p * INNER_ORDER;
            let mut inner = zero;
            for (o, v) in offs.iter().zip(&vals[base..base + INNER_ORDER]) {
                inner += o * v;
            }
            acc += z * inner;
            z *= step;
        }
        acc
    }
}

/// Which transform is integrated:
/// `factor · λ^power · Σ_l c_{k,l}(λ) (iμ_l)^{−subtract} (f^{(deriv+subtract)})^(μ_l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub deriv: usize,
    pub subtract: usize,
    pub factor: Complex64,
    pub power: i32,
}

impl TransformSpec {
    /// The plain forward transform `F_k[f]`.
    pub fn full() -> Self {
        Self {
            deriv: 0,
            subtract: 0,
            factor: Complex64::new(1.0, 0.0),
            power: 0,
        }
    }

    /// `F_k[f]` minus its first `m` boundary terms.
    pub fn remainder(m: usize) -> Self {
        Self {
            subtract: m,
            ..Self::full()
        }
    }

    /// `λ^{−n} F_k[Sf]` with `Sf = (−i)ⁿ f⁽ⁿ⁾`, minus `m` boundary terms.
    pub fn operator_over_eigenvalue(n: usize, m: usize) -> Self {
        Self {
            deriv: n,
            subtract: m,
            factor: Complex64::new(0.0, -1.0).powu(n as u32),
            power: -(n as i32),
        }
    }
}

/// A datum together with its cached inner transforms.
pub struct PreparedDatum {
    table: TransformTable,
}

impl PreparedDatum {
    pub fn datum(&self) -> &InitialDatum {
        self.table.datum()
    }

    pub fn table(&self) -> &TransformTable {
        &self.table
    }
}

/// `(x, t)` rectangle served by one plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalBox {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl EvalBox {
    pub fn at(x: f64, t: f64) -> Self {
        Self {
            x_min: x,
            x_max: x,
            t_min: t,
            t_max: t,
        }
    }

    pub fn xs(xs: &[f64], t: f64) -> Self {
        let (lo, hi) = min_max(xs);
        Self {
            x_min: lo,
            x_max: hi,
            t_min: t,
            t_max: t,
        }
    }

    fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x_min, self.t_min),
            (self.x_min, self.t_max),
            (self.x_max, self.t_min),
            (self.x_max, self.t_max),
        ]
    }
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Kernel coefficients `c_{k,l}(λ)` and the arguments `μ_l`.
#[derive(Debug, Clone)]
pub struct KernelCoefficients {
    cm: CharMatrix,
    factors: Vec<Vec<Complex64>>,
}

impl KernelCoefficients {
    /// `(c_{k,l}(λ), μ_l)` for each `l`.
    pub fn at(&self, k: usize, lambda: Complex64) -> Result<Vec<(Complex64, Complex64)>> {
        if k == 0 {
            return Ok(vec![(Complex64::new(1.0 / TWO_PI, 0.0), lambda)]);
        }
        let big_n = self.cm.big_n() as i64;
        let mu = self.cm.alpha_pow(big_n + 1 - k as i64) * lambda;
        let m_mu = self.cm.eval_m(mu);
        let delta = m_mu.det();
        let hadamard: f64 = (0..m_mu.rows())
            .map(|r| m_mu.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .product();
        if delta.norm() <= 1e-13 * hadamard {
            return Err(UtmError::OnDeltaZero(format!("k = {k}, λ = {lambda}")));
        }
        let cof = self.cm.signed_cofactors(mu);
        let row = self.cm.first_row(lambda);
        let denom = delta * TWO_PI;
        Ok(self.factors[k]
            .iter()
            .zip(&cof)
            .map(|(f, cl)| {
                let s: Complex64 = cl.iter().zip(&row).map(|(a, b)| a * b).sum();
                (s / denom, f * lambda)
            })
            .collect())
    }
}

/// Everything needed to transform data for one problem: `M`, `R`, the contours, and
/// the complementary boundary forms.
pub struct TransformPair {
    problem: ValidatedProblem,
    coeffs: KernelCoefficients,
    r: f64,
    contours: ContourSystem,
    bc: BoundaryFormMatrix,
    bc_star: BoundaryFormMatrix,
    params: QuadratureParams,
    growth_cap: f64,
}

/// A transform value or contour integral with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// `R` is this factor times the largest root modulus of `Δ` (at least one).
pub const DEFAULT_SAFETY: f64 = 1.1;

impl TransformPair {
    pub fn new(problem: ValidatedProblem) -> Result<Self> {
        Self::with_params(problem, QuadratureParams::default(), DEFAULT_SAFETY)
    }

    pub fn with_params(problem: ValidatedProblem, params: QuadratureParams, safety: f64) -> Result<Self> {
        params.validate()?;
        let cm = CharMatrix::new(&problem)?;
        let r = cm.choose_r(safety)?;
        let contours = build_contours(&problem, r, default_indent(r))?;
        let (bc, bc_star) = complementary_forms(problem.boundary(), cm.bstar())?;
        let factors = mu_factors(&problem);
        Ok(Self {
            problem,
            coeffs: KernelCoefficients { cm, factors },
            r,
            contours,
            bc,
            bc_star,
            params,
            growth_cap: DEFAULT_GROWTH_CAP,
        })
    }

    pub fn problem(&self) -> &ValidatedProblem {
        &self.problem
    }

    pub fn char_matrix(&self) -> &CharMatrix {
        &self.coeffs.cm
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn contours(&self) -> &ContourSystem {
        &self.contours
    }

    pub fn params(&self) -> &QuadratureParams {
        &self.params
    }

    pub fn set_params(&mut self, params: QuadratureParams) -> Result<()> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    /// Largest log-growth of the integrand tolerated when rotating rays for `t > 0`.
    /// Lower caps keep cancellation small at the price of longer rays.
    pub fn growth_cap(&self) -> f64 {
        self.growth_cap
    }

    pub fn set_growth_cap(&mut self, cap: f64) -> Result<()> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(UtmError::InvalidArgument(format!("growth cap {cap} must be positive")));
        }
        self.growth_cap = cap;
        Ok(())
    }

    /// `B_c` and `B_c*`.
    pub fn complementary(&self) -> (&BoundaryFormMatrix, &BoundaryFormMatrix) {
        (&self.bc, &self.bc_star)
    }

    pub fn coefficients(&self) -> &KernelCoefficients {
        &self.coeffs
    }

    /// Caches inner transforms of `f` up to the derivative orders the checks need.
    pub fn prepare(&self, f: InitialDatum) -> PreparedDatum {
        PreparedDatum {
            table: TransformTable::new(f, self.problem.n() + 3),
        }
    }

    /// `φ^k(x, λ)`, so that `F_k[f](λ) = ∫₀^∞ φ^k(x, λ) f(x) dx`.
    pub fn kernel(&self, k: usize, lambda: Complex64, x: f64) -> Result<Complex64> {
        let i = Complex64::i();
        Ok(self
            .coeffs
            .at(k, lambda)?
            .into_iter()
            .map(|(c, mu)| c * (-i * mu * x).exp())
            .sum())
    }

    /// `F_k[f](λ)`.
    pub fn forward(&self, f: &PreparedDatum, k: usize, lambda: Complex64) -> Result<Complex64> {
        self.transform_value(f, k, lambda, &TransformSpec::full())
    }

    /// `F_k[Sf](λ)` with `Sf = (−i)ⁿ f⁽ⁿ⁾`.
    pub fn forward_operator(&self, f: &PreparedDatum, k: usize, lambda: Complex64) -> Result<Complex64> {
        let n = self.problem.n();
        let spec = TransformSpec {
            deriv: n,
            subtract: 0,
            factor: Complex64::new(0.0, -1.0).powu(n as u32),
            power: 0,
        };
        self.transform_value(f, k, lambda, &spec)
    }

    /// The remainder part of `spec` (boundary terms removed).
    pub fn transform_value(
        &self,
        f: &PreparedDatum,
        k: usize,
        lambda: Complex64,
        spec: &TransformSpec,
    ) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, mu) in self.coeffs.at(k, lambda)? {
            acc += c * f.table.remainder(spec.deriv, spec.subtract, mu);
        }
        Ok(acc * spec.factor * lambda.powi(spec.power))
    }

    /// The boundary-term part removed by `spec`: rational in `λ`.
    pub fn boundary_terms(
        &self,
        f: &PreparedDatum,
        k: usize,
        lambda: Complex64,
        spec: &TransformSpec,
    ) -> Result<Complex64> {
        let i = Complex64::i();
        let bv = f.datum().boundary_vector(spec.deriv + spec.subtract).values;
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, mu) in self.coeffs.at(k, lambda)? {
            let mut s = Complex64::new(0.0, 0.0);
            let mut p = i * mu;
            for j in 0..spec.subtract {
                s += bv[spec.deriv + j] / p;
                p *= i * mu;
            }
            acc += c * s;
        }
        Ok(acc * spec.factor * lambda.powi(spec.power))
    }

    /// Pointwise upper bound on `|transform_value|`, used to place truncation radii.
    fn value_bound(&self, f: &PreparedDatum, k: usize, lambda: Complex64, spec: &TransformSpec) -> f64 {
        let Ok(cs) = self.coeffs.at(k, lambda) else {
            return f64::INFINITY;
        };
        let total: f64 = cs
            .into_iter()
            .map(|(c, mu)| c.norm() * f.table.remainder_bound(spec.deriv, spec.subtract, mu))
            .sum();
        total * spec.factor.norm() * lambda.norm().powi(spec.power)
    }

    /// Node sets and transform values for integrating `spec` over `contours`, valid for
    /// every `(x, t)` in `bx`.
    pub fn plan(
        &self,
        f: &PreparedDatum,
        spec: TransformSpec,
        contours: &ContourSystem,
        which: &[usize],
        bx: EvalBox,
    ) -> Result<ContourPlan> {
        let n = self.problem.n();
        let a = self.problem.a();
        let support = f.datum().support();
        let hint = OscillationHint::fourier(bx.x_max.max(0.0), support, n, a.norm(), bx.t_max);
        let mut segments = Vec::new();
        for &k in which {
            for seg in contours.contour(k) {
                let decay = if seg.is_infinite() {
                    Some(self.envelope(f, k, spec, seg, bx))
                } else {
                    None
                };
                let mut chosen = None;
                for refine in 0..=self.params.max_refinements {
                    let rule = discretize(seg, &self.params, &hint, decay.as_ref(), refine)?;
                    let planned = self.fill(f, k, spec, rule, a, n)?;
                    let worst = bx
                        .corners()
                        .iter()
                        .map(|&(x, t)| {
                            let (v, e) = planned.eval(x, t);
                            (e, self.params.abs_tol.max(self.params.rel_tol * v.norm()))
                        })
                        .fold(true, |ok, (e, lim)| ok && e <= lim);
                    let done = worst || refine == self.params.max_refinements;
                    chosen = Some(planned);
                    if done {
                        break;
                    }
                }
                segments.push(chosen.expect("at least one refinement level"));
            }
        }
        Ok(ContourPlan {
            segments,
            params: self.params,
        })
    }

    fn fill(
        &self,
        f: &PreparedDatum,
        k: usize,
        spec: TransformSpec,
        rule: crate::quadrature::SegmentRule,
        a: Complex64,
        n: usize,
    ) -> Result<PlannedSegment> {
        let eval = |nodes: &[(Complex64, Complex64)]| -> Result<Vec<PlanNode>> {
            nodes
                .par_iter()
                .map(|&(lam, w)| {
                    let v = self.transform_value(f, k, lam, &spec)?;
                    Ok(PlanNode {
                        lambda: lam,
                        a_lambda_n: a * lam.powu(n as u32),
                        weighted: w * v,
                    })
                })
                .collect()
        };
        Ok(PlannedSegment {
            k,
            high: eval(&rule.high)?,
            low: eval(&rule.low)?,
            truncated_at: rule.truncated_at,
        })
    }

    fn envelope(&self, f: &PreparedDatum, k: usize, spec: TransformSpec, seg: &PathSegment, bx: EvalBox) -> DecayModel {
        let SegmentKind::Ray { base, angle, .. } = seg.kind else {
            unreachable!("only rays are infinite")
        };
        let dir = Complex64::from_polar(1.0, angle);
        let (a, n) = (self.problem.a(), self.problem.n() as u32);
        // sample the bound on a geometric grid once; the closure interpolates monotonically
        let grid: Vec<(f64, f64)> = (0..=240)
            .map(|i| {
                let p = 10f64.powf(-1.0 + 6.0 * i as f64 / 240.0);
                let lam = base + dir * p;
                let b = self.value_bound(f, k, lam, &spec);
                let growth = bx
                    .corners()
                    .iter()
                    .map(|&(x, t)| (Complex64::i() * lam * x - a * lam.powu(n) * t).re)
                    .fold(f64::NEG_INFINITY, f64::max);
                (p, b * growth.exp())
            })
            .collect();
        let grid = Arc::new(grid);
        DecayModel::Envelope(Arc::new(move |p: f64| {
            // largest sampled bound at or beyond p: a monotone envelope
            grid.iter()
                .filter(|(q, _)| *q >= p * 0.999)
                .map(|(_, b)| *b)
                .fold(0.0, f64::max)
                .max(if p > grid.last().unwrap().0 {
                    grid.last().unwrap().1
                } else {
                    0.0
                })
        }))
    }

    /// `Σ_k ∫_{Γ_k} e^{iλx} F_k[f](λ) dλ` at `t = 0`: boundary terms integrate to zero exactly,
    /// so only the order-`(n+1)` remainder is integrated.
    pub fn reconstruct_many(&self, f: &PreparedDatum, xs: &[f64]) -> Result<Vec<Estimate>> {
        check_positive(xs)?;
        if f.datum().is_zero() {
            return Ok(vec![zero_estimate(); xs.len()]);
        }
        let m = self.problem.n() + 1;
        for j in 1..=m {
            for &x in xs {
                // the subtracted monomials contribute nothing on Γ₀
                debug_assert_eq!(
                    gamma0_monomial_integral(j, x, self.contours.delta_indent)?,
                    Complex64::new(0.0, 0.0)
                );
            }
        }
        let which: Vec<usize> = (0..self.contours.len()).collect();
        let plan = self.plan(
            f,
            TransformSpec::remainder(m),
            &self.contours,
            &which,
            EvalBox::xs(xs, 0.0),
        )?;
        Ok(xs.iter().map(|&x| plan.estimate(x, 0.0)).collect())
    }

    pub fn reconstruct(&self, f: &PreparedDatum, x: f64) -> Result<Estimate> {
        Ok(self.reconstruct_many(f, &[x])?[0])
    }

    /// `∫_{Γ_k} e^{iλx} F_k[f](λ) dλ` for `k ≥ 1`; zero for data satisfying the boundary conditions.
    pub fn gamma_k_vanishing(&self, f: &PreparedDatum, k: usize, xs: &[f64]) -> Result<Vec<Estimate>> {
        if k == 0 || k >= self.contours.len() {
            return Err(UtmError::InvalidArgument(format!("contour index {k} out of range")));
        }
        check_positive(xs)?;
        if f.datum().is_zero() {
            return Ok(vec![zero_estimate(); xs.len()]);
        }
        let m = self.problem.n() + 1;
        let plan = self.plan(
            f,
            TransformSpec::remainder(m),
            &self.contours,
            &[k],
            EvalBox::xs(xs, 0.0),
        )?;
        Ok(xs.iter().map(|&x| plan.estimate(x, 0.0)).collect())
    }

    /// `Σ_k ∫_{Γ_k} e^{iλx} F(k, λ) dλ` for a user-supplied spectral function with a
    /// pointwise bound `|F(k, λ)| ≤ bound(k, λ)` used for truncation.
    pub fn inverse(
        &self,
        contours: &ContourSystem,
        spectral: &(dyn Fn(usize, Complex64) -> Complex64 + Sync),
        bound: Arc<dyn Fn(usize, Complex64) -> f64 + Send + Sync>,
        x: f64,
        support: f64,
    ) -> Result<Estimate> {
        check_positive(&[x])?;
        let hint = OscillationHint::fourier(x, support, 1, 0.0, 0.0);
        let mut total = zero_estimate();
        for k in 0..contours.len() {
            for seg in contours.contour(k) {
                let decay = if seg.is_infinite() {
                    let SegmentKind::Ray { base, angle, .. } = seg.kind else {
                        unreachable!()
                    };
                    let b = bound.clone();
                    Some(DecayModel::Envelope(Arc::new(move |p: f64| {
                        let lam = base + Complex64::from_polar(p, angle);
                        b(k, lam) * (-lam.im * x).exp()
                    })))
                } else {
                    None
                };
                let r = crate::quadrature::integrate_segment(
                    |lam| (Complex64::i() * lam * x).exp() * spectral(k, lam),
                    seg,
                    &self.params,
                    &hint,
                    decay.as_ref(),
                )?;
                total.value += r.value;
                total.error += r.error;
                total.converged &= r.converged;
            }
        }
        Ok(total)
    }

    /// Contours for evaluation at positive times: rays rotated into growth sectors as far
    /// as the worst-case growth over the box allows.
    pub fn time_contours(&self, f: &PreparedDatum, bx: EvalBox) -> Result<ContourSystem> {
        let gb = GrowthBox {
            x_min: bx.x_min,
            x_max: bx.x_max,
            t_min: bx.t_min,
            t_max: bx.t_max,
            support: f.datum().support(),
            cap: self.growth_cap,
        };
        deform_bounded(&self.contours, &self.problem, &gb, 0.5)
    }
}

fn zero_estimate() -> Estimate {
    Estimate {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        converged: true,
    }
}

fn check_positive(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !(**x > 0.0)) {
        Some(&x) => Err(UtmError::NonpositiveX(x)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy)]
struct PlanNode {
    lambda: Complex64,
    a_lambda_n: Complex64,
    weighted: Complex64,
}

#[derive(Debug, Clone)]
struct PlannedSegment {
    k: usize,
    high: Vec<PlanNode>,
    low: Vec<PlanNode>,
    truncated_at: Option<f64>,
}

fn sum_nodes(nodes: &[PlanNode], x: f64, t: f64) -> Complex64 {
    let i = Complex64::i();
    nodes
        .iter()
        .map(|nd| nd.weighted * (i * nd.lambda * x - nd.a_lambda_n * t).exp())
        .sum()
}

impl PlannedSegment {
    fn eval(&self, x: f64, t: f64) -> (Complex64, f64) {
        let hi = sum_nodes(&self.high, x, t);
        let lo = sum_nodes(&self.low, x, t);
        (hi, (hi - lo).norm())
    }
}

/// Fixed quadrature nodes with transform values attached. Evaluating at any `(x, t)`
/// is a finite sum of exact exponential solutions, so finite differences of the
/// result see no quadrature noise.
#[derive(Debug, Clone)]
pub struct ContourPlan {
    segments: Vec<PlannedSegment>,
    params: QuadratureParams,
}

impl ContourPlan {
    /// Integral over the planned contours with error estimate.
    pub fn estimate(&self, x: f64, t: f64) -> Estimate {
        let mut out = zero_estimate();
        for s in &self.segments {
            let (v, e) = s.eval(x, t);
            out.value += v;
            out.error += e;
        }
        out.converged = out.error <= self.params.abs_tol.max(self.params.rel_tol * out.value.norm()) * 10.0;
        out
    }

    /// Per-contour integrals.
    pub fn by_contour(&self, x: f64, t: f64) -> Vec<(usize, Complex64)> {
        let mut out: Vec<(usize, Complex64)> = Vec::new();
        for s in &self.segments {
            let (v, _) = s.eval(x, t);
            match out.iter_mut().find(|(k, _)| *k == s.k) {
                Some(e) => e.1 += v,
                None => out.push((s.k, v)),
            }
        }
        out
    }

    /// `Σ |w_i V(λ_i) e^{iλ_i x − aλ_iⁿt}|`: the size of the terms that cancel down to the
    /// estimate, so `ε·magnitude` bounds the rounding error of [`Self::estimate`].
    pub fn magnitude(&self, x: f64, t: f64) -> f64 {
        let i = Complex64::i();
        self.segments
            .iter()
            .flat_map(|s| &s.high)
            .map(|nd| (nd.weighted * (i * nd.lambda * x - nd.a_lambda_n * t).exp()).norm())
            .sum()
    }

    pub fn node_count(&self) -> usize {
        self.segments.iter().map(|s| s.high.len() + s.low.len()).sum()
    }

    /// Largest truncation radius used on any ray.
    pub fn max_truncation(&self) -> Option<f64> {
        self.segments
            .iter()
            .filter_map(|s| s.truncated_at)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::standard_data;
    use crate::problem::{builtin, validate};

    fn pair(name: &str) -> TransformPair {
        TransformPair::new(validate(builtin(name).unwrap()).unwrap()).unwrap()
    }

    fn alpha() -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI / 3.0)
    }

    #[test]
    fn lkdv_kernel_matches_closed_form() {
        let p = pair("lkdv-dirichlet");
        let (a, i) = (alpha(), Complex64::i());
        for (lam, x) in [(Complex64::new(2.0, 3.5), 0.4), (Complex64::new(-1.5, 2.0), 1.7)] {
            let want = -(a * (-i * a * lam * x).exp() + a * a * (-i * a * a * lam * x).exp()) / TWO_PI;
            assert!((p.kernel(1, lam, x).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn reverse_lkdv_kernels_match_closed_form() {
        let p = pair("reverse-lkdv");
        let (a, i) = (alpha(), Complex64::i());
        let lam = Complex64::new(4.0, 1.0);
        let x = 0.9;
        let k1 = (-i * a * a * lam * x).exp() / TWO_PI;
        let k2 = (-i * a * lam * x).exp() / TWO_PI;
        assert!((p.kernel(1, lam, x).unwrap() - k1).norm() < 1e-12);
        assert!((p.kernel(2, lam, x).unwrap() - k2).norm() < 1e-12);
        assert!((p.kernel(0, Complex64::new(0.0, 0.0), 0.3).unwrap().re - 1.0 / TWO_PI).abs() < 1e-15);
    }

    #[test]
    fn kernel_refuses_zeros_of_delta() {
        let p = pair("robin-4");
        // Δ vanishes at the origin, so every rotated argument does too
        assert!(matches!(
            p.kernel(1, Complex64::new(0.0, 0.0), 1.0),
            Err(UtmError::OnDeltaZero(_))
        ));
    }

    #[test]
    fn inner_transform_matches_brute_force() {
        let p = pair("lkdv-dirichlet");
        for (_, f) in standard_data(p.problem(), 3.0) {
            let table = TransformTable::new(f.clone(), 4);
            for mu in [
                Complex64::new(0.7, 0.0),
                Complex64::new(25.0, -1.0),
                Complex64::new(-3.0, 2.0),
            ] {
                let cells = 40_000;
                let h = 3.0 / cells as f64;
                let brute: Complex64 = (0..cells)
                    .map(|c| {
                        let y = (c as f64 + 0.5) * h;
                        (-Complex64::i() * mu * y).exp() * f.value(y) * h
                    })
                    .sum();
                assert!((table.hat(0, mu) - brute).norm() < 1e-7, "{mu}");
            }
        }
    }

    #[test]
    fn zero_datum_gives_zero_everywhere() {
        let p = pair("heat-neumann");
        let z = p.prepare(InitialDatum::zero(2.0));
        assert_eq!(
            p.forward(&z, 1, Complex64::new(3.0, 4.0)).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(p.reconstruct(&z, 0.5).unwrap().value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn reconstruction_rejects_nonpositive_x() {
        let p = pair("heat-dirichlet");
        let (_, f) = standard_data(p.problem(), 3.0).remove(0);
        let f = p.prepare(f);
        assert!(matches!(p.reconstruct(&f, 0.0), Err(UtmError::NonpositiveX(_))));
    }

    #[test]
    fn reconstruction_beyond_support_is_zero() {
        let p = pair("lkdv-dirichlet");
        let (_, f) = standard_data(p.problem(), 2.0).remove(2);
        let f = p.prepare(f);
        assert!(p.reconstruct(&f, 2.5).unwrap().value.norm() < 1e-7);
    }
}
