//! Boundary forms at `x = 0`, the concomitant, and adjoint/complementary forms.
//!
//! A boundary form is a row `b` acting on the vector `u(f) = (f(0), f'(0), …, f⁽ⁿ⁻¹⁾(0))`
//! as `Σ_k b_k u_k`. The sesquilinear pairing `x·y = Σ xᵢ conj(yᵢ)` appears in the
//! complementary-form identity.

use num_complex::Complex64;

use crate::error::{Result, UtmError};
use crate::linalg::CMatrix;

/// Entries smaller than this (relative to the row scale) are snapped to zero after normalization.
const SNAP_TOL: f64 = 1e-13;

/// A stack of boundary forms, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFormMatrix {
    rows: CMatrix,
}

impl BoundaryFormMatrix {
    pub fn new(rows: CMatrix) -> Self {
        Self { rows }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        Self::new(CMatrix::from_rows(rows))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        Self::new(CMatrix::from_real_rows(rows))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rows
    }

    pub fn n_forms(&self) -> usize {
        self.rows.rows()
    }

    pub fn order(&self) -> usize {
        self.rows.cols()
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        self.rows.row(j)
    }

    pub fn is_real(&self) -> bool {
        self.rows.is_real(1e-14)
    }

    /// Applies every form to a boundary vector.
    pub fn apply(&self, u: &BoundaryVector) -> Vec<Complex64> {
        self.rows.mul_vec(&u.values)
    }

    /// True when every form annihilates `u` up to `tol` (relative to `|u|`).
    pub fn annihilates(&self, u: &BoundaryVector, tol: f64) -> bool {
        let scale = u.values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0) * self.rows.max_abs().max(1.0);
        self.apply(u).iter().all(|z| z.norm() <= tol * scale)
    }

    /// Canonical representative of the row space: reduced echelon form with columns
    /// eliminated from the highest derivative down, so each row's highest-order
    /// coefficient is 1. Rows are sorted by that highest order, ascending.
    pub fn canonical(&self) -> Self {
        let n = self.order();
        let order: Vec<usize> = (0..n).rev().collect();
        let (r, _) = self.rows.rref_with_order(&order);
        let mut rows = r.to_rows();
        rows.reverse();
        for row in &mut rows {
            let scale = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for z in row.iter_mut() {
                if z.re.abs() < SNAP_TOL * scale {
                    z.re = 0.0;
                }
                if z.im.abs() < SNAP_TOL * scale {
                    z.im = 0.0;
                }
            }
        }
        if rows.is_empty() {
            return Self::new(CMatrix::zeros(0, n));
        }
        Self::from_rows(&rows)
    }

    /// True when both matrices span the same row space.
    pub fn row_equivalent(&self, other: &Self) -> bool {
        if self.order() != other.order() {
            return false;
        }
        let r = self.rows.rank();
        r == other.rows.rank() && self.rows.vstack(&other.rows).rank() == r
    }
}

/// `(f(0), f'(0), …, f⁽ⁿ⁻¹⁾(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVector {
    pub values: Vec<Complex64>,
}

impl BoundaryVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `C` with `[φψ](0) = u(φ)ᵀ C conj(u(ψ))`.
pub fn concomitant_matrix(n: usize) -> CMatrix {
    let sign = Complex64::new(0.0, -1.0).powu(n as u32);
    CMatrix::from_fn(n, n, |p, q| {
        if p + q + 1 == n {
            if q % 2 == 0 {
                sign
            } else {
                -sign
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// The concomitant `[φψ](0)` from boundary vectors.
pub fn concomitant(u: &BoundaryVector, v: &BoundaryVector) -> Complex64 {
    let n = u.len();
    assert_eq!(v.len(), n);
    let c = concomitant_matrix(n);
    let vbar: Vec<Complex64> = v.values.iter().map(Complex64::conj).collect();
    let cv = c.mul_vec(&vbar);
    u.values.iter().zip(&cv).map(|(a, b)| a * b).sum()
}

/// `Σ xᵢ conj(yᵢ)`.
pub fn sesq_dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// Adjoint boundary forms: the `n − N` forms whose common kernel is exactly the set
/// of `v` with `uᵀ C conj(v) = 0` for every `u ∈ ker B`.
pub fn adjoint_forms(b: &BoundaryFormMatrix) -> Result<BoundaryFormMatrix> {
    let n = b.order();
    let k = b.matrix().kernel();
    if k.cols() + b.n_forms() != n {
        return Err(UtmError::KernelComputationFailed);
    }
    let w = &k.transpose() * &concomitant_matrix(n);
    let bstar = BoundaryFormMatrix::new(w.conj()).canonical();
    if bstar.n_forms() != n - b.n_forms() {
        return Err(UtmError::KernelComputationFailed);
    }
    Ok(bstar)
}

/// Forms `B_c` (`n − N` rows) and `B_c*` (`N` rows) with
/// `−[fφ](0) = (Bu)·(B_c* v) + (B_c u)·(B* v)` for all boundary vectors `u`, `v`.
pub fn complementary_forms(
    b: &BoundaryFormMatrix,
    bstar: &BoundaryFormMatrix,
) -> Result<(BoundaryFormMatrix, BoundaryFormMatrix)> {
    let n = b.order();
    let c = concomitant_matrix(n);
    let k = b.matrix().kernel();
    let w = &k.transpose() * &c;
    let y = bstar.matrix().conj();
    // W = T·Y
    let yt_inv = y.transpose().left_inverse().ok_or(UtmError::CompletionFailed)?;
    let t = (&yt_inv * &w.transpose()).transpose();
    if (&(&t * &y) - &w).max_abs() > 1e-10 * w.max_abs().max(1.0) {
        return Err(UtmError::CompletionFailed);
    }
    let k_inv = k.left_inverse().ok_or(UtmError::CompletionFailed)?;
    let bc = -&(&t.transpose() * &k_inv);
    let l = b
        .matrix()
        .transpose()
        .left_inverse()
        .ok_or(UtmError::CompletionFailed)?;
    let rhs = -&(&c + &(&bc.transpose() * &y));
    let x = &l * &rhs;
    let check = &(&b.matrix().transpose() * &x) + &(&bc.transpose() * &y);
    if (&check + &c).max_abs() > 1e-10 {
        return Err(UtmError::CompletionFailed);
    }
    Ok((BoundaryFormMatrix::new(bc), BoundaryFormMatrix::new(x.conj())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real_rows(m: &BoundaryFormMatrix) -> Vec<Vec<f64>> {
        m.matrix()
            .to_rows()
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|z| {
                        assert!(z.im.abs() < 1e-14);
                        z.re
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn concomitant_small_cases() {
        let c2 = concomitant_matrix(2);
        assert_eq!(c2[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(c2[(1, 0)], Complex64::new(-1.0, 0.0));
        assert_eq!(c2[(0, 0)], Complex64::new(0.0, 0.0));
        let u = BoundaryVector::from_real(&[1.0, 2.0, 3.0]);
        let v = concomitant(&u, &u);
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let zero = BoundaryVector::from_real(&[0.0, 0.0, 0.0]);
        assert_eq!(concomitant(&zero, &u), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn adjoint_forms_of_catalog() {
        let cases: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = vec![
            (
                vec![vec![1.0, 0.0, 0.0]],
                vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            ),
            (
                vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
                vec![vec![1.0, 0.0, 0.0]],
            ),
            (vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]),
            (vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]),
            (
                vec![vec![0.0, 0.0, 3.0, 1.0], vec![-2.0, 1.0, 0.0, 0.0]],
                vec![vec![3.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, -2.0, 1.0]],
            ),
        ];
        for (b, expected) in cases {
            let bstar = adjoint_forms(&BoundaryFormMatrix::from_real_rows(&b)).unwrap();
            let got = real_rows(&bstar);
            assert_eq!(got.len(), expected.len());
            for (g, e) in got.iter().zip(&expected) {
                for (x, y) in g.iter().zip(e) {
                    assert!((x - y).abs() < 1e-13, "{b:?}: {got:?} vs {expected:?}");
                }
            }
        }
    }

    #[test]
    fn adjoint_is_involutive() {
        let b = BoundaryFormMatrix::from_real_rows(&[vec![0.0, 0.0, 3.0, 1.0], vec![-2.0, 1.0, 0.0, 0.0]]);
        let bstar = adjoint_forms(&b).unwrap();
        let back = adjoint_forms(&bstar).unwrap();
        assert!(back.row_equivalent(&b));
    }

    #[test]
    fn complementary_identity_on_random_vectors() {
        let b = BoundaryFormMatrix::from_real_rows(&[vec![1.0, 0.0, 0.0]]);
        let bstar = adjoint_forms(&b).unwrap();
        let (bc, bcs) = complementary_forms(&b, &bstar).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let mut draw = || {
                BoundaryVector::new(
                    (0..3)
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect(),
                )
            };
            let u = draw();
            let v = draw();
            let lhs = -concomitant(&u, &v);
            let rhs = sesq_dot(&b.apply(&u), &bcs.apply(&v)) + sesq_dot(&bc.apply(&u), &bstar.apply(&v));
            worst = worst.max((lhs - rhs).norm());
        }
        assert!(worst < 1e-12, "{worst}");
    }
}
