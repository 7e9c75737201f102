//! The characteristic matrix `M(λ)` built from the adjoint boundary forms,
//! its determinant `Δ`, cyclic cofactors, and the zeros of `Δ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::boundary::{adjoint_forms, BoundaryFormMatrix};
use crate::error::{Result, UtmError};
use crate::linalg::CMatrix;
use crate::problem::ValidatedProblem;

/// Roots closer than this are merged and counted with multiplicity.
pub const CLUSTER_RADIUS: f64 = 1e-6;

/// Interpolated coefficients below this fraction of the largest one are treated as zero.
const COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CharMatrix {
    n: usize,
    big_n: usize,
    alpha: Complex64,
    bstar: BoundaryFormMatrix,
    /// `entries[k][j][r]`: coefficient of `λ^r` in `M^{k+1}_{j+1}(λ)`.
    entries: Vec<Vec<Vec<Complex64>>>,
}

impl CharMatrix {
    pub fn new(problem: &ValidatedProblem) -> Result<Self> {
        let bstar = adjoint_forms(problem.boundary())?;
        Ok(Self::from_adjoint(problem.n(), problem.big_n(), bstar))
    }

    /// Builds `M` from given adjoint forms. The row-conjugated forms enter `M`, which
    /// coincides with the adjoint rows whenever these are real.
    pub fn from_adjoint(n: usize, big_n: usize, bstar: BoundaryFormMatrix) -> Self {
        let m = n - big_n;
        assert_eq!(bstar.n_forms(), m, "adjoint form count");
        let alpha = Complex64::from_polar(1.0, 2.0 * PI / n as f64);
        let neg_i = Complex64::new(0.0, -1.0);
        let entries = (0..m)
            .map(|k| {
                let base = neg_i * alpha.powu(k as u32);
                (0..m)
                    .map(|j| (0..n).map(|r| base.powu(r as u32) * bstar.row(j)[r].conj()).collect())
                    .collect()
            })
            .collect();
        Self {
            n,
            big_n,
            alpha,
            bstar,
            entries,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// Size `n − N` of the matrix.
    pub fn size(&self) -> usize {
        self.n - self.big_n
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// `α^p` for any integer `p`.
    pub fn alpha_pow(&self, p: i64) -> Complex64 {
        let n = self.n as i64;
        let e = p.rem_euclid(n);
        Complex64::from_polar(1.0, 2.0 * PI * e as f64 / n as f64)
    }

    pub fn bstar(&self) -> &BoundaryFormMatrix {
        &self.bstar
    }

    /// `M^{k}_{j}(λ)` with one-based `k`, `j`.
    pub fn entry(&self, k: usize, j: usize, lambda: Complex64) -> Complex64 {
        horner(&self.entries[k - 1][j - 1], lambda)
    }

    /// Coefficients of the polynomial `M^{k}_{j}(λ)`, lowest degree first.
    pub fn entry_poly(&self, k: usize, j: usize) -> &[Complex64] {
        &self.entries[k - 1][j - 1]
    }

    pub fn eval_m(&self, lambda: Complex64) -> CMatrix {
        let m = self.size();
        CMatrix::from_fn(m, m, |k, j| horner(&self.entries[k][j], lambda))
    }

    /// First row `M^1_j(λ)`, `j = 1..n−N`.
    pub fn first_row(&self, lambda: Complex64) -> Vec<Complex64> {
        (0..self.size()).map(|j| horner(&self.entries[0][j], lambda)).collect()
    }

    pub fn delta(&self, lambda: Complex64) -> Complex64 {
        self.eval_m(lambda).det()
    }

    /// `det X^{l,j}(λ)`: the `(n−N−1)`-square block read cyclically from `M`
    /// starting at entry `(l+1, j+1)`. One-based `l`, `j`.
    pub fn cofactor_det(&self, l: usize, j: usize, lambda: Complex64) -> Complex64 {
        cyclic_minor(&self.eval_m(lambda), l, j)
    }

    /// `(−1)^{(n−N−1)(l+j)}`.
    pub fn cofactor_sign(&self, l: usize, j: usize) -> f64 {
        if ((self.size() - 1) * (l + j)) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// All signed cyclic cofactors at once: `out[l−1][j−1] = sign·det X^{l,j}(λ)`.
    pub fn signed_cofactors(&self, lambda: Complex64) -> Vec<Vec<Complex64>> {
        let mat = self.eval_m(lambda);
        let m = self.size();
        (1..=m)
            .map(|l| {
                (1..=m)
                    .map(|j| cyclic_minor(&mat, l, j) * self.cofactor_sign(l, j))
                    .collect()
            })
            .collect()
    }

    /// Upper bound on the degree of `Δ`.
    pub fn delta_degree_bound(&self) -> usize {
        (self.n - 1) * self.size()
    }

    /// Coefficients of `Δ` (ascending powers) by interpolation on the unit circle.
    pub fn delta_polynomial(&self) -> Result<Vec<Complex64>> {
        let d = self.delta_degree_bound();
        let pts = d + 1;
        let w = Complex64::from_polar(1.0, 2.0 * PI / pts as f64);
        let vals: Vec<Complex64> = (0..pts).map(|j| self.delta(w.powu(j as u32))).collect();
        let mut coeffs: Vec<Complex64> = (0..pts)
            .map(|k| {
                vals.iter()
                    .enumerate()
                    .map(|(j, v)| v * w.powi(-((j * k) as i32)))
                    .sum::<Complex64>()
                    / pts as f64
            })
            .collect();
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return Err(UtmError::DeltaIdenticallyZero);
        }
        for c in &mut coeffs {
            if c.norm() < COEFF_TOL * scale {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        Ok(coeffs)
    }

    /// Distinct zeros of `Δ` with multiplicities.
    pub fn delta_roots(&self) -> Result<Vec<DeltaRoot>> {
        let coeffs = self.delta_polynomial()?;
        Ok(polynomial_roots(&coeffs))
    }

    /// `safety · max(1, max |root|)`: every zero of `Δ` lies inside the disc of this radius.
    pub fn choose_r(&self, safety: f64) -> Result<f64> {
        assert!(safety >= 1.0, "safety factor must be at least 1");
        let roots = self.delta_roots()?;
        let rmax = roots.iter().map(|r| r.value.norm()).fold(1.0, f64::max);
        Ok(safety * rmax)
    }
}

fn cyclic_minor(mat: &CMatrix, l: usize, j: usize) -> Complex64 {
    let m = mat.rows();
    let sub = CMatrix::from_fn(m - 1, m - 1, |p, q| mat[((l + p) % m, (j + q) % m)]);
    sub.det()
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRoot {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Roots of `Σ c_k z^k` via companion-matrix eigenvalues, Newton-polished and clustered.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<DeltaRoot> {
    let zero = Complex64::new(0.0, 0.0);
    let low_zeros = coeffs.iter().take_while(|c| **c == zero).count();
    let reduced = &coeffs[low_zeros.min(coeffs.len())..];
    let deg = reduced.len().saturating_sub(1);
    let mut raw = Vec::with_capacity(deg);
    if deg > 0 {
        let lead = reduced[deg];
        let comp = DMatrix::<Complex64>::from_fn(deg, deg, |i, j| {
            if i == 0 {
                -reduced[deg - 1 - j] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                zero
            }
        });
        let eig = comp
            .eigenvalues()
            .map(|v| v.iter().copied().collect::<Vec<_>>())
            .unwrap_or_default();
        for z in eig {
            raw.push(newton_polish(reduced, z));
        }
    }
    let mut roots: Vec<DeltaRoot> = Vec::new();
    if low_zeros > 0 {
        roots.push(DeltaRoot {
            value: zero,
            multiplicity: low_zeros,
        });
    }
    for z in raw {
        if let Some(r) = roots.iter_mut().find(|r| (r.value - z).norm() < CLUSTER_RADIUS) {
            let k = r.multiplicity as f64;
            r.value = (r.value * k + z) / (k + 1.0);
            r.multiplicity += 1;
        } else {
            roots.push(DeltaRoot {
                value: z,
                multiplicity: 1,
            });
        }
    }
    roots.sort_by(|a, b| a.value.norm().total_cmp(&b.value.norm()));
    roots
}

fn newton_polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let deriv: Vec<Complex64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    let mut best = horner(coeffs, z).norm();
    for _ in 0..8 {
        let dp = horner(&deriv, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - horner(coeffs, z) / dp;
        let v = horner(coeffs, cand).norm();
        if v < best {
            best = v;
            z = cand;
        } else {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, builtin_catalog, validate};

    fn cm(name: &str) -> CharMatrix {
        CharMatrix::new(&validate(builtin(name).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn m_for_lkdv_problems() {
        let c1 = cm("lkdv-dirichlet");
        let lam = Complex64::new(0.7, -1.3);
        let m = c1.eval_m(lam);
        let i = Complex64::i();
        let a = c1.alpha();
        let expect = [[1.0.into(), -i * lam], [1.0.into(), -i * a * lam]];
        for k in 0..2 {
            for j in 0..2 {
                assert!((m[(k, j)] - expect[k][j]).norm() < 1e-14);
            }
        }
        let c2 = cm("reverse-lkdv");
        assert_eq!(c2.size(), 1);
        assert!((c2.delta(lam) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn delta_of_problem_one() {
        let c1 = cm("lkdv-dirichlet");
        let a = c1.alpha();
        for &lam in &[Complex64::new(1.0, 0.0), Complex64::new(-0.3, 2.0)] {
            let lhs = c1.delta(a * lam);
            let rhs = -Complex64::i() * lam * (a * a - a);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn cofactor_conventions() {
        let lam = Complex64::new(0.4, 0.9);
        assert_eq!(cm("reverse-lkdv").cofactor_det(1, 1, lam), Complex64::new(1.0, 0.0));
        let c1 = cm("lkdv-dirichlet");
        assert!((c1.cofactor_det(1, 2, lam) - c1.entry(2, 1, lam)).norm() < 1e-15);
        assert!((c1.cofactor_det(2, 1, lam) - c1.entry(1, 2, lam)).norm() < 1e-15);
    }

    #[test]
    fn robin_roots() {
        let c = cm("robin-4");
        let roots = c.delta_roots().unwrap();
        let zero = roots.iter().find(|r| r.value.norm() < 1e-9).unwrap();
        assert_eq!(zero.multiplicity, 2);
        assert!(roots.iter().all(|r| r.value.norm() < 4.0));
        let total: usize = roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, c.delta_polynomial().unwrap().len() - 1);
    }

    #[test]
    fn radius_floor() {
        for name in ["reverse-lkdv", "lkdv-dirichlet", "heat-dirichlet"] {
            assert!((cm(name).choose_r(1.1).unwrap() - 1.1).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn polynomial_reproduces_delta() {
        for p in builtin_catalog() {
            let c = CharMatrix::new(&validate(p).unwrap()).unwrap();
            let coeffs = c.delta_polynomial().unwrap();
            for k in 0..10 {
                let z = Complex64::from_polar(0.3 + 0.5 * k as f64, 0.7 * k as f64);
                let d = c.delta(z);
                assert!((horner(&coeffs, z) - d).norm() <= 1e-10 * d.norm().max(1e-300) + 1e-13);
            }
        }
    }
}
