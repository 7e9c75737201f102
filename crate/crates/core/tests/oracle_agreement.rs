use std::f64::consts::PI;
use std::sync::Arc;

use utm_core::oracles::{adaptive_real, heat_dirichlet_solution, heat_neumann_solution, residue_line_integral};
use utm_core::*;

fn pair(name: &str) -> TransformPair {
    TransformPair::new(validate(builtin(name).unwrap()).unwrap()).unwrap()
}

#[test]
fn gamma0_transform_matches_adaptive_quadrature() {
    let p = pair("lkdv-dirichlet");
    for (label, f) in standard_data(p.problem(), 3.0) {
        let pf = p.prepare(f.clone());
        for lam in [0.3, 4.0, -17.5] {
            let oracle = adaptive_real(
                &|y| (Complex64::new(0.0, -lam * y)).exp() * f.value(y) / (2.0 * PI),
                0.0,
                3.0,
                1e-13,
            );
            let got = p.forward(&pf, 0, Complex64::new(lam, 0.0)).unwrap();
            assert!(
                (got - oracle.value).norm() < 1e-9,
                "{label} λ={lam}: {got} vs {}",
                oracle.value
            );
        }
    }
}

#[test]
fn heat_solutions_match_transform_oracles() {
    for name in ["heat-dirichlet", "heat-neumann"] {
        let p = pair(name);
        let (_, f) = standard_data(p.problem(), 3.0).remove(2);
        let pf = p.prepare(f.clone());
        for (x, t) in [(0.7, 0.05), (1.4, 0.5)] {
            let got = p.solve_at(&pf, x, t).unwrap().value;
            let want = if name == "heat-dirichlet" {
                heat_dirichlet_solution(&f, x, t).unwrap()
            } else {
                heat_neumann_solution(&f, x, t).unwrap()
            };
            assert!((got - want.value).norm() < 1e-8, "{name} ({x}, {t})");
        }
    }
}

#[test]
fn inverse_of_rational_spectrum_matches_residues() {
    let p = pair("heat-dirichlet");
    let spectral = |k: usize, l: Complex64| {
        if k == 0 {
            1.0 / (l * l + 4.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let bound = Arc::new(|_: usize, l: Complex64| 1.0 / (l.norm_sqr() - 4.0).abs().max(1e-3));
    let i = Complex64::i();
    let poles = [(2.0 * i, -i / 4.0), (-2.0 * i, i / 4.0)];
    for x in [0.2, 1.0, 2.5] {
        let got = p.inverse(p.contours(), &spectral, bound.clone(), x, 1.0).unwrap();
        let want = residue_line_integral(&poles, x).unwrap().value;
        assert!((want.re - 0.5 * PI * (-2.0 * x).exp()).abs() < 1e-14);
        assert!((got.value - want).norm() < 1e-8, "x={x}: {} vs {want}", got.value);
    }
}

#[test]
fn reconstruction_is_linear_in_the_datum() {
    let p = pair("robin-4");
    let data = standard_data(p.problem(), 3.0);
    let (f, g) = (&data[0].1, &data[1].1);
    let poly: Vec<Complex64> = f.polynomial_coeffs().iter().map(|c| c * 2.0).collect();
    let bumps: Vec<Bump> = g
        .bumps()
        .iter()
        .map(|b| Bump {
            amplitude: -b.amplitude,
            ..*b
        })
        .collect();
    let h = InitialDatum::from_parts(3.0, poly, bumps);
    let xs = [0.4, 1.3, 2.2];
    let rf = p.reconstruct_many(&p.prepare(f.clone()), &xs).unwrap();
    let rg = p.reconstruct_many(&p.prepare(g.clone()), &xs).unwrap();
    let rh = p.reconstruct_many(&p.prepare(h), &xs).unwrap();
    for j in 0..xs.len() {
        assert!((rh[j].value - (rf[j].value * 2.0 - rg[j].value)).norm() < 1e-8);
    }
}
