//! Ground truth computed along code paths that share nothing with the contour quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::datum::InitialDatum;
use crate::error::{Result, UtmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    SineTransform,
    CosineTransform,
    AdaptiveQuad,
    FdResidual,
    Residue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: Complex64,
    pub method: OracleMethod,
    pub est_error: f64,
}

/// Kronrod 15-point nodes on `[0, 1]` half (positive abscissae, descending), with the
/// embedded 7-point Gauss weights.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod abscissae on `[−1, 1]`, ascending.
pub fn kronrod_nodes() -> Vec<f64> {
    let mut v: Vec<f64> = XK.iter().map(|x| -x).collect();
    v.extend(XK.iter().rev().skip(1));
    v
}

fn gk15(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let pair = f(c - h * XK[j]) + f(c + h * XK[j]);
        k += pair * WK[j];
        if j % 2 == 1 {
            g += pair * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Globally adaptive G7K15 on `[a, b]`: the worst interval is bisected until the summed
/// estimate meets `tol`.
pub fn adaptive_real(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> OracleResult {
    let mut heap: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    let (v, e) = gk15(f, a, b);
    heap.push((a, b, v, e));
    for _ in 0..4000 {
        let err: f64 = heap.iter().map(|h| h.3).sum();
        if err <= tol {
            break;
        }
        let (idx, _) = heap
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = heap.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        for (s, t) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(f, s, t);
            heap.push((s, t, v, e));
        }
    }
    OracleResult {
        value: heap.iter().map(|h| h.2).sum(),
        method: OracleMethod::AdaptiveQuad,
        est_error: heap.iter().map(|h| h.3).sum(),
    }
}

/// A finite path in ℂ for [`adaptive_reference`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OraclePath {
    Segment {
        from: Complex64,
        to: Complex64,
    },
    Arc {
        center: Complex64,
        radius: f64,
        from: f64,
        to: f64,
    },
}

/// `∫_path g(λ) dλ` by adaptive G7K15 in the path parameter.
pub fn adaptive_reference(g: &dyn Fn(Complex64) -> Complex64, path: OraclePath, tol: f64) -> OracleResult {
    match path {
        OraclePath::Segment { from, to } => {
            let d = to - from;
            adaptive_real(&|s| g(from + d * s) * d, 0.0, 1.0, tol)
        }
        OraclePath::Arc {
            center,
            radius,
            from,
            to,
        } => adaptive_real(
            &|th| {
                let e = Complex64::from_polar(radius, th);
                g(center + e) * Complex64::i() * e
            },
            from,
            to,
            tol,
        ),
    }
}

/// `∫_ℝ e^{iλx} Σ r_j/(λ − p_j) dλ` for `x > 0` and poles off the real line, by residues
/// in the upper half plane.
pub fn residue_line_integral(poles: &[(Complex64, Complex64)], x: f64) -> Result<OracleResult> {
    if !(x > 0.0) {
        return Err(UtmError::NonpositiveX(x));
    }
    if let Some((p, _)) = poles.iter().find(|(p, _)| p.im == 0.0) {
        return Err(UtmError::InvalidArgument(format!("pole {p} on the real line")));
    }
    let value = poles
        .iter()
        .filter(|(p, _)| p.im > 0.0)
        .map(|(p, r)| 2.0 * PI * Complex64::i() * r * (Complex64::i() * p * x).exp())
        .sum();
    Ok(OracleResult {
        value,
        method: OracleMethod::Residue,
        est_error: 0.0,
    })
}

/// Breakpoints of `[0, L]` at the edges of the datum's smooth pieces.
fn datum_breaks(f: &InitialDatum) -> Vec<f64> {
    let l = f.support();
    let mut b = vec![0.0, l];
    if f.poly_len() > 0 {
        b.push(0.5 * l);
    }
    for bump in f.bumps() {
        b.push(bump.start().clamp(0.0, l));
        b.push(bump.end().clamp(0.0, l));
        b.push(bump.center.clamp(0.0, l));
    }
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    b
}

fn half_line_transform(f: &InitialDatum, kernel: fn(f64) -> f64, lam: f64, tol: f64) -> Complex64 {
    let b = datum_breaks(f);
    b.windows(2)
        .map(|w| adaptive_real(&|y| f.value(y) * kernel(lam * y), w[0], w[1], tol).value)
        .sum()
}

fn heat_transform_solution(
    f: &InitialDatum,
    x: f64,
    t: f64,
    kernel: fn(f64) -> f64,
    method: OracleMethod,
) -> Result<OracleResult> {
    if !(x > 0.0) {
        return Err(UtmError::NonpositiveX(x));
    }
    if !(t >= 0.0) {
        return Err(UtmError::InvalidArgument(format!("negative time {t}")));
    }
    if f.is_zero() {
        return Ok(OracleResult {
            value: Complex64::new(0.0, 0.0),
            method,
            est_error: 0.0,
        });
    }
    // e^{−λ²t} < 1e−17 past this; at t = 0 the datum transform itself must have decayed
    let lam_max = if t > 0.0 { (40.0 / t).sqrt() } else { 400.0 };
    let inner_tol = 1e-14;
    let outer = |lam: f64| half_line_transform(f, kernel, lam, inner_tol) * (kernel(lam * x) * (-lam * lam * t).exp());
    // one panel per half period of the slower oscillation keeps every panel smooth
    let period = PI / x.max(f.support());
    let panels = (lam_max / period).ceil().max(1.0) as usize;
    let h = lam_max / panels as f64;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in 0..panels {
        let r = adaptive_real(&outer, p as f64 * h, (p + 1) as f64 * h, 1e-13);
        value += r.value;
        err += r.est_error;
    }
    Ok(OracleResult {
        value: value * (2.0 / PI),
        method,
        est_error: err * 2.0 / PI,
    })
}

/// Dirichlet heat solution `(2/π)∫₀^∞ sin(λx) e^{−λ²t} ∫₀^L sin(λy) f(y) dy dλ`.
pub fn heat_dirichlet_solution(f: &InitialDatum, x: f64, t: f64) -> Result<OracleResult> {
    heat_transform_solution(f, x, t, f64::sin, OracleMethod::SineTransform)
}

/// Neumann heat solution with the cosine pair.
pub fn heat_neumann_solution(f: &InitialDatum, x: f64, t: f64) -> Result<OracleResult> {
    heat_transform_solution(f, x, t, f64::cos, OracleMethod::CosineTransform)
}

/// Finite-difference weights for the derivatives `0..=order` at `z` from samples at `xs`.
/// Row `d` holds the weights of the `d`-th derivative.
pub fn fornberg_weights(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Second-order centered stencil for the `d`-th derivative with spacing `h`.
pub fn centered_stencil(d: usize, h: f64) -> Vec<(f64, f64)> {
    let half = d.div_ceil(2).max(1) as i64;
    let xs: Vec<f64> = (-half..=half).map(|i| i as f64 * h).collect();
    let w = fornberg_weights(0.0, &xs, d);
    xs.into_iter().zip(w[d].iter().copied()).collect()
}

/// `|∂ₜq + a(−i)ⁿ∂ₓⁿq|` at `(x, t)` from centered second-order stencils. The value uses
/// spatial step `h/2`; the difference from step `h` gives the error estimate.
///
/// The time step is `max(hⁿ, 10⁻⁹)`: the temporal error is then negligible next to the
/// `O(h²)` spatial error, so halving `h` cuts the residual by four, and `∂ₜ` is never
/// taken from a step so small that rounding takes over.
pub fn fd_residual(
    q: &dyn Fn(f64, f64) -> Complex64,
    n: usize,
    a: Complex64,
    x: f64,
    t: f64,
    h: f64,
) -> Result<OracleResult> {
    if !(h > 0.0) {
        return Err(UtmError::InvalidArgument(format!("step {h} must be positive")));
    }
    let coef = a * Complex64::new(0.0, -1.0).powu(n as u32);
    let residual = |h: f64| {
        let ht = fd_time_step(n, h);
        let qt = (q(x, t + ht) - q(x, t - ht)) / (2.0 * ht);
        let qx: Complex64 = centered_stencil(n, h).iter().map(|(dx, w)| q(x + dx, t) * *w).sum();
        (qt + coef * qx).norm()
    };
    let coarse = residual(h);
    let fine = residual(0.5 * h);
    Ok(OracleResult {
        value: Complex64::new(fine, 0.0),
        method: OracleMethod::FdResidual,
        est_error: (coarse - fine).abs() / 3.0,
    })
}

/// Time step paired with spatial step `h` in [`fd_residual`].
pub fn fd_time_step(n: usize, h: f64) -> f64 {
    h.powi(n as i32).max(1e-9)
}

/// `∂ₓʲq(0, t)` for `j = 0..n` from one-sided samples at `x = h, 2h, …, points·h`.
pub fn extrapolated_boundary_values(q: &dyn Fn(f64) -> Complex64, n: usize, h: f64, points: usize) -> Vec<Complex64> {
    let xs: Vec<f64> = (1..=points).map(|i| i as f64 * h).collect();
    let w = fornberg_weights(0.0, &xs, n - 1);
    let vals: Vec<Complex64> = xs.iter().map(|&x| q(x)).collect();
    w.iter()
        .map(|row| row.iter().zip(&vals).map(|(c, v)| v * *c).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_integrates_polynomials() {
        let r = adaptive_real(&|x| Complex64::new(x.powi(7) - 3.0 * x * x, 0.0), 0.0, 2.0, 1e-14);
        assert!((r.value.re - (32.0 - 8.0)).abs() < 1e-12);
        let one = adaptive_real(&|_| Complex64::new(1.0, 0.0), 0.0, 1.0, 1e-15);
        assert!((one.value.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residue_matches_adaptive_line_integral() {
        // e^{iλx}/((λ² + 1)(λ² + 4)) over ℝ is (π/3)(e^{−x} − e^{−2x}/2)
        let x = 0.7;
        let i = Complex64::i();
        let third = 1.0 / 3.0;
        let poles = [
            (i, -i * (0.5 * third)),
            (-i, i * (0.5 * third)),
            (2.0 * i, i * (0.25 * third)),
            (-2.0 * i, -i * (0.25 * third)),
        ];
        let exact = residue_line_integral(&poles, x).unwrap().value;
        let closed = PI / 3.0 * ((-x as f64).exp() - 0.5 * (-2.0 * x as f64).exp());
        assert!((exact.re - closed).abs() < 1e-14);
        let g = |l: Complex64| (i * l * x).exp() / ((l * l + 1.0) * (l * l + 4.0));
        let mut body = Complex64::new(0.0, 0.0);
        for c in -200..200 {
            let (a, b) = (c as f64 * 10.0, (c + 1) as f64 * 10.0);
            body += adaptive_reference(
                &g,
                OraclePath::Segment {
                    from: Complex64::new(a, 0.0),
                    to: Complex64::new(b, 0.0),
                },
                1e-15,
            )
            .value;
        }
        // the neglected tails are below 2·∫_{2000}^∞ λ⁻⁴ ≈ 1e−10
        assert!((body - exact).norm() < 1e-10, "{body} vs {exact}");
    }

    #[test]
    fn fornberg_recovers_derivatives_of_polynomials() {
        let s = centered_stencil(3, 0.1);
        let d3: f64 = s.iter().map(|(x, w)| (1.0 + x).powi(3) * w).sum();
        assert!((d3 - 6.0).abs() < 1e-9);
        let s = centered_stencil(4, 0.1);
        let d4: f64 = s.iter().map(|(x, w)| x.powi(4) * w).sum();
        assert!((d4 - 24.0).abs() < 1e-8);
    }

    #[test]
    fn plane_wave_has_tiny_fd_residual() {
        let (n, a, lam) = (3, Complex64::new(0.0, -1.0), Complex64::new(0.8, 0.3));
        let q = move |x: f64, t: f64| (Complex64::i() * lam * x - a * lam.powu(3) * t).exp();
        let r = fd_residual(&q, n, a, 0.5, 0.2, 1e-3).unwrap();
        assert!(r.value.re < 1e-6);
        // second order: halving the step cuts the residual by about four
        let r1 = fd_residual(&q, n, a, 0.5, 0.2, 0.1).unwrap().value.re;
        let r2 = fd_residual(&q, n, a, 0.5, 0.2, 0.05).unwrap().value.re;
        assert!((r1 / r2 - 4.0).abs() < 0.3, "{r1} {r2}");
    }

    #[test]
    fn one_sided_extrapolation_is_exact_for_polynomials() {
        let q = |x: f64| Complex64::new(2.0 - x + 0.5 * x * x + x.powi(3), 0.0);
        let v = extrapolated_boundary_values(&q, 3, 0.05, 6);
        assert!((v[0].re - 2.0).abs() < 1e-10);
        assert!((v[1].re + 1.0).abs() < 1e-9);
        assert!((v[2].re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn oracle_nodes_differ_from_panel_rules() {
        let k = kronrod_nodes();
        for m in [10, 16, 20] {
            let gl = crate::quadrature::gauss_legendre(m);
            assert!(gl
                .nodes
                .iter()
                .all(|x| k.iter().all(|y| (x - y).abs() > 1e-6) || x.abs() < 1e-15));
        }
    }
}
