//! Dense complex matrices small enough that nothing clever is needed.
//!
//! Boundary and characteristic matrices in this crate are at most `n × n`
//! with `n` in the single digits, so everything here is plain Gaussian
//! elimination with partial pivoting.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

/// Relative pivot tolerance used for rank decisions.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row vectors. All rows must share a length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Complex64> {
        self.row(i).to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Complex64::conj).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol * (1.0 + z.re.abs()))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale_row(&mut self, i: usize, s: Complex64) {
        for j in 0..self.cols {
            self[(i, j)] *= s;
        }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &CMatrix) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Submatrix of the given rows (all columns).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let rows: Vec<Vec<Complex64>> = idx.iter().map(|&i| self.row_vec(i)).collect();
        if rows.is_empty() {
            return Self::zeros(0, self.cols);
        }
        Self::from_rows(&rows)
    }

    /// Determinant by LU with partial pivoting. The empty matrix has determinant one.
    pub fn det(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                if f != Complex64::new(0.0, 0.0) {
                    for j in k..n {
                        let v = a[(k, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
        }
        det
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Reduced row echelon form, processing columns in the given order.
    /// Returns the reduced matrix (zero rows dropped) and the pivot columns.
    pub fn rref_with_order(&self, order: &[usize]) -> (CMatrix, Vec<usize>) {
        let mut a = self.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut pivots = Vec::new();
        let mut r = 0;
        for &c in order {
            if r == a.rows {
                break;
            }
            let p = (r..a.rows)
                .max_by(|&i, &j| a[(i, c)].norm().total_cmp(&a[(j, c)].norm()))
                .unwrap();
            if a[(p, c)].norm() <= PIVOT_TOL * scale {
                continue;
            }
            a.swap_rows(p, r);
            let inv = a[(r, c)].inv();
            a.scale_row(r, inv);
            for i in 0..a.rows {
                if i != r {
                    let f = a[(i, c)];
                    if f != Complex64::new(0.0, 0.0) {
                        for j in 0..a.cols {
                            let v = a[(r, j)];
                            a[(i, j)] -= f * v;
                        }
                    }
                }
            }
            // clean the pivot column exactly
            for i in 0..a.rows {
                a[(i, c)] = if i == r {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            pivots.push(c);
            r += 1;
        }
        let kept: Vec<usize> = (0..r).collect();
        (a.select_rows(&kept), pivots)
    }

    pub fn rank(&self) -> usize {
        let order: Vec<usize> = (0..self.cols).collect();
        self.rref_with_order(&order).1.len()
    }

    /// Columns spanning the right kernel, returned as an `cols × k` matrix.
    pub fn kernel(&self) -> CMatrix {
        let order: Vec<usize> = (0..self.cols).collect();
        let (r, pivots) = self.rref_with_order(&order);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = CMatrix::zeros(self.cols, free.len());
        for (fi, &f) in free.iter().enumerate() {
            k[(f, fi)] = Complex64::new(1.0, 0.0);
            for (pi, &p) in pivots.iter().enumerate() {
                k[(p, fi)] = -r[(pi, f)];
            }
        }
        k
    }

    /// Solves `self · X = rhs` for square `self`.
    pub fn solve(&self, rhs: &CMatrix) -> Option<CMatrix> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(rhs.rows, self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() <= PIVOT_TOL * scale {
                return None;
            }
            a.swap_rows(p, k);
            b.swap_rows(p, k);
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                for j in 0..b.cols {
                    let v = b[(k, j)];
                    b[(i, j)] -= f * v;
                }
            }
        }
        let mut x = CMatrix::zeros(n, b.cols);
        for j in 0..b.cols {
            for i in (0..n).rev() {
                let mut s = b[(i, j)];
                for l in i + 1..n {
                    s -= a[(i, l)] * x[(l, j)];
                }
                x[(i, j)] = s / a[(i, i)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<CMatrix> {
        self.solve(&CMatrix::identity(self.rows))
    }

    /// Left inverse `(Aᴴ A)⁻¹ Aᴴ` of a matrix with full column rank.
    pub fn left_inverse(&self) -> Option<CMatrix> {
        let ah = self.adjoint();
        let gram = &ah * self;
        gram.solve(&ah)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        CMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * rhs[(k, j)]).sum()
        })
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }
}

impl std::ops::Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| -self[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn det_of_small_matrices() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]]);
        assert!((m.det() - c(-2.0, 0.0)).norm() < 1e-14);
        assert_eq!(CMatrix::zeros(0, 0).det(), c(1.0, 0.0));
    }

    #[test]
    fn kernel_is_annihilated() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 1.0, 1.0]]);
        let k = m.kernel();
        assert_eq!(k.cols(), 2);
        assert!((&m * &k).max_abs() < 1e-14);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rank_detects_dependent_rows() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0]]);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn solve_and_inverse() {
        let m = CMatrix::from_rows(&[vec![c(2.0, 1.0), c(0.0, 1.0)], vec![c(1.0, 0.0), c(3.0, -1.0)]]);
        let inv = m.inverse().unwrap();
        assert!((&(&m * &inv) - &CMatrix::identity(2)).max_abs() < 1e-14);
        let tall = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0]]);
        let li = tall.left_inverse().unwrap();
        assert!((&(&li * &tall) - &CMatrix::identity(2)).max_abs() < 1e-13);
    }
}
