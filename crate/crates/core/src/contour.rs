//! Integration contours in the spectral plane.
//!
//! `Γ₀` is the real line indented above the origin. Each `Γ_k`, `k ≥ 1`, bounds one
//! connected piece of `{λ ∈ ℂ⁺ : Re(aλⁿ) < 0, |λ| > R}` and is traversed with the
//! region on its right: in along the first ray, anticlockwise round the arc, out
//! along the second ray.
//!
//! For `t > 0` the rays are rotated into neighbouring sectors where `Re(aλⁿ) > 0`.
//! This is legitimate because transforms of compactly supported data are entire of
//! exponential type, which `e^{−aλⁿt}` dominates; the swept wedges contain no zeros of
//! `Δ` since they start on or outside `|λ| = R`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, UtmError};
use crate::problem::ValidatedProblem;

/// Default largest allowed exponent `log |integrand growth|` on a deformed ray.
pub const DEFAULT_GROWTH_CAP: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    /// `λ(p) = base + p·e^{iθ}`, `p ∈ [inner, outer]`; `outer` may be infinite.
    Ray {
        base: Complex64,
        angle: f64,
        inner: f64,
        outer: f64,
    },
    /// `λ(p) = center + radius·e^{ip}`, `p ∈ [from, to]`, `from < to`.
    Arc {
        center: Complex64,
        radius: f64,
        from: f64,
        to: f64,
    },
}

/// A parametrized piece of contour. Integrals are `orientation · ∫ f(λ(p)) λ'(p) dp`
/// over the increasing parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub orientation: f64,
}

impl PathSegment {
    pub fn ray(base: Complex64, angle: f64, inner: f64, outer: f64, orientation: f64) -> Self {
        assert!(outer > inner, "empty ray");
        Self {
            kind: SegmentKind::Ray {
                base,
                angle,
                inner,
                outer,
            },
            orientation,
        }
    }

    pub fn arc(center: Complex64, radius: f64, from: f64, to: f64, orientation: f64) -> Self {
        assert!(to > from && to - from < 2.0 * PI, "arc must subtend (0, 2π)");
        Self {
            kind: SegmentKind::Arc {
                center,
                radius,
                from,
                to,
            },
            orientation,
        }
    }

    pub fn param_range(&self) -> (f64, f64) {
        match self.kind {
            SegmentKind::Ray { inner, outer, .. } => (inner, outer),
            SegmentKind::Arc { from, to, .. } => (from, to),
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.param_range().1.is_infinite()
    }

    pub fn point(&self, p: f64) -> Complex64 {
        match self.kind {
            SegmentKind::Ray { base, angle, .. } => base + Complex64::from_polar(p, angle),
            SegmentKind::Arc { center, radius, .. } => center + Complex64::from_polar(radius, p),
        }
    }

    /// `dλ/dp`.
    pub fn tangent(&self, p: f64) -> Complex64 {
        match self.kind {
            SegmentKind::Ray { angle, .. } => Complex64::from_polar(1.0, angle),
            SegmentKind::Arc { radius, .. } => Complex64::from_polar(radius, p) * Complex64::i(),
        }
    }

    /// Speed `|dλ/dp|`.
    pub fn speed(&self) -> f64 {
        match self.kind {
            SegmentKind::Ray { .. } => 1.0,
            SegmentKind::Arc { radius, .. } => radius,
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            kind: self.kind,
            orientation: -self.orientation,
        }
    }

    /// Splits the parameter interval at `p`.
    pub fn split(&self, p: f64) -> (Self, Self) {
        let (a, b) = self.param_range();
        assert!(p > a && p < b, "split point outside segment");
        let with = |lo: f64, hi: f64| {
            let kind = match self.kind {
                SegmentKind::Ray { base, angle, .. } => SegmentKind::Ray {
                    base,
                    angle,
                    inner: lo,
                    outer: hi,
                },
                SegmentKind::Arc { center, radius, .. } => SegmentKind::Arc {
                    center,
                    radius,
                    from: lo,
                    to: hi,
                },
            };
            Self {
                kind,
                orientation: self.orientation,
            }
        };
        (with(a, p), with(p, b))
    }

    /// True for a ray lying on the real axis.
    pub fn on_real_axis(&self) -> bool {
        match self.kind {
            SegmentKind::Ray { base, angle, .. } => base.im.abs() < 1e-14 && angle.sin().abs() < 1e-12,
            SegmentKind::Arc { .. } => false,
        }
    }

    /// Point where the traversal starts.
    pub fn start_point(&self) -> Complex64 {
        let (a, b) = self.param_range();
        if self.orientation > 0.0 {
            self.point(a)
        } else {
            self.point(b)
        }
    }

    /// Point where the traversal ends.
    pub fn end_point(&self) -> Complex64 {
        let (a, b) = self.param_range();
        if self.orientation > 0.0 {
            self.point(b)
        } else {
            self.point(a)
        }
    }
}

/// The full contour `Γ = Γ₀ ∪ Γ₁ ∪ … ∪ Γ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSystem {
    pub gamma0: Vec<PathSegment>,
    pub gammas: Vec<Vec<PathSegment>>,
    /// Angular extent `(θ₁, θ₂)` of the region bounded by each `Γ_k`.
    pub sectors: Vec<(f64, f64)>,
    pub delta_indent: f64,
    pub r: f64,
}

impl ContourSystem {
    /// Segments of contour `k` (`0` is the indented real line).
    pub fn contour(&self, k: usize) -> &[PathSegment] {
        if k == 0 {
            &self.gamma0
        } else {
            &self.gammas[k - 1]
        }
    }

    /// Number of contours including `Γ₀`.
    pub fn len(&self) -> usize {
        self.gammas.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Evenly spaced points on every segment; infinite rays are clipped at `clip`
    /// parameter units past their inner end. Rows are `(contour, segment, p, λ)`.
    pub fn sample(&self, per_segment: usize, clip: f64) -> Vec<(usize, usize, f64, Complex64)> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            for (si, seg) in self.contour(k).iter().enumerate() {
                let (a, b) = seg.param_range();
                let b = if b.is_infinite() { a + clip } else { b };
                for i in 0..per_segment {
                    let frac = if per_segment == 1 {
                        0.0
                    } else {
                        i as f64 / (per_segment - 1) as f64
                    };
                    let p = a + (b - a) * frac;
                    out.push((k, si, p, seg.point(p)));
                }
            }
        }
        out
    }
}

/// Default indentation radius `min(0.1, R/10)`.
pub fn default_indent(r: f64) -> f64 {
    (0.1f64).min(r / 10.0)
}

/// Sign of `Re(a e^{inθ})`, the growth direction of `e^{−aλⁿt}` along `arg λ = θ`.
fn re_a_lambda_n(a: Complex64, n: usize, theta: f64) -> f64 {
    (a * Complex64::from_polar(1.0, n as f64 * theta)).re
}

/// Angles in `(lo, hi)` where `Re(a e^{inθ})` changes sign, sorted, with both ends added.
fn sign_change_partition(a: Complex64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let phi = a.arg();
    let nf = n as f64;
    let mut cuts = vec![lo, hi];
    // cos(φ + nθ) = 0  ⇔  θ = (π/2 + jπ − φ)/n
    let jmin = ((nf * lo + phi - PI / 2.0) / PI).floor() as i64 - 1;
    let jmax = ((nf * hi + phi - PI / 2.0) / PI).ceil() as i64 + 1;
    for j in jmin..=jmax {
        let th = (PI / 2.0 + j as f64 * PI - phi) / nf;
        if th > lo + 1e-14 && th < hi - 1e-14 {
            cuts.push(th);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    cuts
}

/// Maximal open angular intervals of `(0, π)` where `Re(aλⁿ) < 0`, by increasing angle.
pub fn decay_free_sectors(a: Complex64, n: usize) -> Vec<(f64, f64)> {
    let cuts = sign_change_partition(a, n, 0.0, PI);
    cuts.windows(2)
        .filter(|w| re_a_lambda_n(a, n, 0.5 * (w[0] + w[1])) < 0.0)
        .map(|w| (w[0], w[1]))
        .collect()
}

/// The sector where `Re(aλⁿ) > 0` adjacent to angle `theta` on the given side
/// (`+1` anticlockwise, `−1` clockwise), or `None` if that side has `Re(aλⁿ) < 0`.
fn adjacent_growth_sector(a: Complex64, n: usize, theta: f64, side: f64) -> Option<(f64, f64)> {
    let width = PI / n as f64;
    let (lo, hi) = if side > 0.0 {
        (theta, theta + 2.0 * width)
    } else {
        (theta - 2.0 * width, theta)
    };
    let cuts = sign_change_partition(a, n, lo, hi);
    let w = if side > 0.0 {
        (cuts[0], cuts[1])
    } else {
        (cuts[cuts.len() - 2], cuts[cuts.len() - 1])
    };
    (re_a_lambda_n(a, n, 0.5 * (w.0 + w.1)) > 0.0).then_some(w)
}

/// Builds `Γ₀, Γ₁, …, Γ_N` for radius `R` and indentation `δ`.
pub fn build_contours(problem: &ValidatedProblem, r: f64, delta_indent: f64) -> Result<ContourSystem> {
    if !(delta_indent > 0.0 && delta_indent < r) {
        return Err(UtmError::InvalidArgument(format!(
            "need 0 < δ < R, got δ = {delta_indent}, R = {r}"
        )));
    }
    let sectors = decay_free_sectors(problem.a(), problem.n());
    if sectors.is_empty() {
        return Err(UtmError::NoComponents);
    }
    let zero = Complex64::new(0.0, 0.0);
    let gamma0 = vec![
        PathSegment::ray(zero, PI, delta_indent, f64::INFINITY, -1.0),
        PathSegment::arc(zero, delta_indent, 0.0, PI, -1.0),
        PathSegment::ray(zero, 0.0, delta_indent, f64::INFINITY, 1.0),
    ];
    let gammas = sectors
        .iter()
        .map(|&(t1, t2)| {
            vec![
                PathSegment::ray(zero, t1, r, f64::INFINITY, -1.0),
                PathSegment::arc(zero, r, t1, t2, 1.0),
                PathSegment::ray(zero, t2, r, f64::INFINITY, 1.0),
            ]
        })
        .collect();
    Ok(ContourSystem {
        gamma0,
        gammas,
        sectors,
        delta_indent,
        r,
    })
}

/// Rectangle of `(x, t)` values a deformation must serve, plus the datum support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBox {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub support: f64,
    pub cap: f64,
}

/// Direction in which ray `seg_index` of contour `k` is rotated, and the growth sector
/// it rotates into. `None` means the ray already sits inside a growth sector.
fn rotation_target(
    problem: &ValidatedProblem,
    cs: &ContourSystem,
    k: usize,
    seg_index: usize,
) -> Result<Option<(f64, f64)>> {
    let (a, n) = (problem.a(), problem.n());
    let seg = cs.contour(k)[seg_index];
    let SegmentKind::Ray { angle, .. } = seg.kind else {
        return Ok(None);
    };
    let width = PI / n as f64;
    let probe = 1e-9;
    let at_boundary = re_a_lambda_n(a, n, angle).abs() < 1e-12;
    if !at_boundary {
        if re_a_lambda_n(a, n, angle) > 0.0 {
            return Ok(None);
        }
        // a Γ_k ray can only sit on a sector boundary
        return Err(UtmError::NoDecaySector(angle));
    }
    let side = if k == 0 {
        // prefer ℂ⁺
        let up = if angle.cos() > 0.0 { 1.0 } else { -1.0 };
        if re_a_lambda_n(a, n, angle + up * probe) > 0.0 {
            up
        } else {
            -up
        }
    } else {
        let (t1, t2) = cs.sectors[k - 1];
        if (angle - t1).abs() < (angle - t2).abs() {
            -1.0
        } else {
            1.0
        }
    };
    match adjacent_growth_sector(a, n, angle, side) {
        Some((lo, hi)) => Ok(Some((side, (hi - lo).min(width)))),
        None => Err(UtmError::NoDecaySector(angle)),
    }
}

/// Rotates rays by `theta_fraction` of the adjacent growth sector's width. `t = 0`
/// returns the system unchanged.
pub fn deform_for_time(
    cs: &ContourSystem,
    problem: &ValidatedProblem,
    t: f64,
    theta_fraction: f64,
) -> Result<ContourSystem> {
    if t < 0.0 {
        return Err(UtmError::InvalidArgument(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(cs.clone());
    }
    deform_with(cs, problem, theta_fraction, |_, _, _, full| full)
}

/// Like [`deform_for_time`], but each rotation is cut back until the integrand's
/// worst-case exponential growth over `bx` stays below `bx.cap`.
pub fn deform_bounded(
    cs: &ContourSystem,
    problem: &ValidatedProblem,
    bx: &GrowthBox,
    theta_fraction: f64,
) -> Result<ContourSystem> {
    if bx.t_max <= 0.0 {
        return Ok(cs.clone());
    }
    let factors = mu_factors(problem);
    deform_with(cs, problem, theta_fraction, |k, base, side, full| {
        let growth = |rot: f64| max_growth(problem, &factors[k], bx, base, side * rot);
        if growth(full) <= bx.cap {
            return full;
        }
        let (mut lo, mut hi) = (0.0, full);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if growth(mid) <= bx.cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    })
}

/// The rotation factors `α^{N+l−k}` relating `λ` on `Γ_k` to the transform arguments.
pub fn mu_factors(problem: &ValidatedProblem) -> Vec<Vec<Complex64>> {
    let n = problem.n() as i64;
    let big_n = problem.big_n() as i64;
    let m = n - big_n;
    let alpha_pow = |p: i64| Complex64::from_polar(1.0, 2.0 * PI * p.rem_euclid(n) as f64 / n as f64);
    let mut out = vec![vec![Complex64::new(1.0, 0.0)]];
    for k in 1..=big_n {
        out.push((1..=m).map(|l| alpha_pow(big_n + l - k)).collect());
    }
    out
}

/// `sup_p` over the ray `base + p e^{i·(θ+rot)}` of the log growth of
/// `e^{iλx − aλⁿt}·ĝ(μ)` at the corners of the box.
fn max_growth(
    problem: &ValidatedProblem,
    factors: &[Complex64],
    bx: &GrowthBox,
    ray: (Complex64, f64),
    rot: f64,
) -> f64 {
    let (base, angle) = ray;
    let dir = Complex64::from_polar(1.0, angle + rot);
    let (a, n) = (problem.a(), problem.n() as i32);
    let mut worst = f64::NEG_INFINITY;
    // geometric sampling of the ray; growth is a polynomial in p so this is dense enough
    for i in 0..=400 {
        let p = 1e-3 * 10f64.powf(i as f64 / 400.0 * 7.0);
        let lam = base + dir * p;
        let mu_growth = factors.iter().map(|f| (f * lam).im.max(0.0)).fold(0.0, f64::max) * bx.support;
        let ev = (a * lam.powi(n)).re;
        for &x in &[bx.x_min, bx.x_max] {
            for &t in &[bx.t_min, bx.t_max] {
                let g = -lam.im * x + mu_growth - ev * t;
                worst = worst.max(g);
            }
        }
    }
    worst
}

fn deform_with(
    cs: &ContourSystem,
    problem: &ValidatedProblem,
    theta_fraction: f64,
    mut limit: impl FnMut(usize, (Complex64, f64), f64, f64) -> f64,
) -> Result<ContourSystem> {
    if !(theta_fraction > 0.0 && theta_fraction < 1.0) {
        return Err(UtmError::InvalidArgument(format!(
            "theta_fraction {theta_fraction} outside (0, 1)"
        )));
    }
    let mut out = cs.clone();
    for k in 0..cs.len() {
        for si in 0..cs.contour(k).len() {
            let seg = cs.contour(k)[si];
            let SegmentKind::Ray { base, angle, inner, .. } = seg.kind else {
                continue;
            };
            let Some((side, width)) = rotation_target(problem, cs, k, si)? else {
                continue;
            };
            let junction = base + Complex64::from_polar(inner, angle);
            let full = theta_fraction * width;
            let rot = limit(k, (junction, angle), side, full);
            if rot <= 0.0 {
                continue;
            }
            let new = PathSegment::ray(junction, angle + side * rot, 0.0, f64::INFINITY, seg.orientation);
            if k == 0 {
                out.gamma0[si] = new;
            } else {
                out.gammas[k - 1][si] = new;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, validate};

    fn sys(name: &str, r: f64) -> (ValidatedProblem, ContourSystem) {
        let vp = validate(builtin(name).unwrap()).unwrap();
        let cs = build_contours(&vp, r, default_indent(r)).unwrap();
        (vp, cs)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sectors_of_catalog_problems() {
        let (_, c1) = sys("lkdv-dirichlet", 1.1);
        assert_eq!(c1.sectors.len(), 1);
        assert!(close(c1.sectors[0].0, PI / 3.0) && close(c1.sectors[0].1, 2.0 * PI / 3.0));
        let (_, c2) = sys("reverse-lkdv", 1.1);
        assert_eq!(c2.sectors.len(), 2);
        assert!(close(c2.sectors[0].0, 0.0) && close(c2.sectors[0].1, PI / 3.0));
        assert!(close(c2.sectors[1].0, 2.0 * PI / 3.0) && close(c2.sectors[1].1, PI));
        assert!(c2.gammas[0][0].on_real_axis() && c2.gammas[1][2].on_real_axis());
        let (_, h) = sys("heat-dirichlet", 1.1);
        assert!(close(h.sectors[0].0, PI / 4.0) && close(h.sectors[0].1, 3.0 * PI / 4.0));
        let (_, r4) = sys("robin-4", 3.2);
        assert_eq!(r4.sectors.len(), 2);
        assert!(close(r4.sectors[0].0, PI / 6.0) && close(r4.sectors[0].1, 5.0 * PI / 12.0));
        assert!(close(r4.sectors[1].0, 2.0 * PI / 3.0) && close(r4.sectors[1].1, 11.0 * PI / 12.0));
    }

    #[test]
    fn contours_are_connected() {
        for name in crate::problem::BUILTIN_NAMES {
            let (_, cs) = sys(name, 3.5);
            for k in 0..cs.len() {
                let segs = cs.contour(k);
                for w in segs.windows(2) {
                    assert!((w[0].end_point() - w[1].start_point()).norm() < 1e-12, "{name} Γ{k}");
                }
            }
        }
    }

    #[test]
    fn deformation_at_zero_time_is_identity() {
        let (vp, cs) = sys("lkdv-dirichlet", 1.1);
        assert_eq!(deform_for_time(&cs, &vp, 0.0, 0.5).unwrap(), cs);
    }

    #[test]
    fn deformation_directions() {
        let (vp, cs) = sys("lkdv-dirichlet", 1.1);
        let d = deform_for_time(&cs, &vp, 0.1, 0.5).unwrap();
        let SegmentKind::Ray { angle, base, .. } = d.gamma0[2].kind else {
            panic!()
        };
        assert!(close(angle, PI / 6.0));
        assert!((base - Complex64::new(cs.delta_indent, 0.0)).norm() < 1e-15);
        let (vp2, cs2) = sys("reverse-lkdv", 1.1);
        let d2 = deform_for_time(&cs2, &vp2, 0.1, 0.5).unwrap();
        let SegmentKind::Ray { angle, .. } = d2.gammas[0][0].kind else {
            panic!()
        };
        assert!(angle < 0.0 && angle > -PI / 3.0);
        let SegmentKind::Ray { angle, .. } = d2.gamma0[2].kind else {
            panic!()
        };
        assert!(angle < 0.0);
        // arcs survive untouched
        assert_eq!(d2.gammas[0][1], cs2.gammas[0][1]);
    }

    #[test]
    fn heat_real_line_needs_no_rotation() {
        let (vp, cs) = sys("heat-neumann", 1.1);
        let d = deform_for_time(&cs, &vp, 0.5, 0.5).unwrap();
        assert_eq!(d.gamma0, cs.gamma0);
        assert_ne!(d.gammas, cs.gammas);
    }

    #[test]
    fn bounded_deformation_respects_cap() {
        let (vp, cs) = sys("heat-dirichlet", 1.1);
        let bx = GrowthBox {
            x_min: 0.5,
            x_max: 1.5,
            t_min: 0.01,
            t_max: 1.0,
            support: 3.0,
            cap: DEFAULT_GROWTH_CAP,
        };
        let d = deform_bounded(&cs, &vp, &bx, 0.5).unwrap();
        let factors = mu_factors(&vp);
        for k in 1..d.len() {
            for seg in d.contour(k) {
                if let SegmentKind::Ray { base, angle, inner, .. } = seg.kind {
                    let g = max_growth(
                        &vp,
                        &factors[k],
                        &bx,
                        (base + Complex64::from_polar(inner, angle), angle),
                        0.0,
                    );
                    assert!(g <= bx.cap + 1e-6, "{g}");
                }
            }
        }
    }
}
