//! The problem class `q_t + a(−i)ⁿ∂ₓⁿq = 0` on the half line.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::boundary::BoundaryFormMatrix;
use crate::error::{Result, UtmError};

/// Tolerance used when matching `a` against `±i`.
const UNIT_TOL: f64 = 1e-12;

/// A half-line evolution problem: order, dispersion constant, boundary forms.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineProblem {
    pub n: usize,
    pub a: Complex64,
    pub boundary: BoundaryFormMatrix,
    pub label: String,
}

impl HalfLineProblem {
    pub fn new(n: usize, a: Complex64, boundary: BoundaryFormMatrix, label: impl Into<String>) -> Self {
        Self {
            n,
            a,
            boundary,
            label: label.into(),
        }
    }

    /// Convenience constructor from real boundary coefficient rows.
    pub fn from_real(n: usize, a: Complex64, rows: &[Vec<f64>], label: impl Into<String>) -> Self {
        Self::new(n, a, BoundaryFormMatrix::from_real_rows(rows), label)
    }
}

/// How many boundary conditions the problem needs, and whether it is admissible at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WellPosednessClass {
    pub n_conditions: usize,
    pub admissible: bool,
}

fn is_i(a: Complex64) -> bool {
    (a - Complex64::i()).norm() < UNIT_TOL
}

fn is_minus_i(a: Complex64) -> bool {
    (a + Complex64::i()).norm() < UNIT_TOL
}

/// Counts the boundary conditions for order `n` and dispersion constant `a`.
///
/// For odd `n` with `a ∉ {±i}` the count is reported as `(n−1)/2` but flagged inadmissible.
pub fn classify(n: usize, a: Complex64) -> WellPosednessClass {
    if n % 2 == 0 {
        WellPosednessClass {
            n_conditions: n / 2,
            admissible: n >= 2 && a.re >= 0.0 && a.norm() > 0.0,
        }
    } else if is_i(a) {
        WellPosednessClass {
            n_conditions: (n + 1) / 2,
            admissible: n >= 3,
        }
    } else {
        WellPosednessClass {
            n_conditions: (n - 1) / 2,
            admissible: n >= 3 && is_minus_i(a),
        }
    }
}

/// True when every `Γ_k`, `k ≥ 1`, stays off the real axis, so that the transforms
/// are type I augmented eigenfunctions as well as type II.
pub fn type_one_expected(n: usize, a: Complex64) -> bool {
    (n % 2 == 1 && is_minus_i(a)) || (n % 2 == 0 && a.re > 0.0)
}

/// A problem that passed [`validate`]. Everything downstream takes one of these.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProblem {
    problem: HalfLineProblem,
    class: WellPosednessClass,
}

impl ValidatedProblem {
    pub fn problem(&self) -> &HalfLineProblem {
        &self.problem
    }

    pub fn n(&self) -> usize {
        self.problem.n
    }

    pub fn a(&self) -> Complex64 {
        self.problem.a
    }

    /// Number of boundary conditions `N`.
    pub fn big_n(&self) -> usize {
        self.class.n_conditions
    }

    pub fn boundary(&self) -> &BoundaryFormMatrix {
        &self.problem.boundary
    }

    pub fn label(&self) -> &str {
        &self.problem.label
    }

    pub fn type_one_expected(&self) -> bool {
        type_one_expected(self.problem.n, self.problem.a)
    }
}

pub fn validate(problem: HalfLineProblem) -> Result<ValidatedProblem> {
    if problem.n < 2 {
        return Err(UtmError::InvalidProblem(format!("order {} < 2", problem.n)));
    }
    if problem.a.norm() == 0.0 || !problem.a.re.is_finite() || !problem.a.im.is_finite() {
        return Err(UtmError::InadmissibleDispersion(format!("a = {}", problem.a)));
    }
    let class = classify(problem.n, problem.a);
    if !class.admissible {
        return Err(UtmError::InadmissibleDispersion(format!(
            "n = {}, a = {}",
            problem.n, problem.a
        )));
    }
    let m = problem.boundary.matrix();
    if m.cols() != problem.n {
        return Err(UtmError::InvalidProblem(format!(
            "boundary forms have {} coefficients, expected {}",
            m.cols(),
            problem.n
        )));
    }
    if m.rows() != class.n_conditions {
        return Err(UtmError::WrongConditionCount {
            order: problem.n,
            expected: class.n_conditions,
            found: m.rows(),
        });
    }
    let rank = m.rank();
    if rank < m.rows() {
        return Err(UtmError::RankDeficientBoundary { rank, rows: m.rows() });
    }
    Ok(ValidatedProblem { problem, class })
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 5] = [
    "lkdv-dirichlet",
    "reverse-lkdv",
    "heat-dirichlet",
    "heat-neumann",
    "robin-4",
];

/// The worked examples: two LKdV problems, Dirichlet and Neumann heat, and a fourth-order Robin problem.
pub fn builtin_catalog() -> Vec<HalfLineProblem> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    vec![
        HalfLineProblem::from_real(3, -i, &[vec![1.0, 0.0, 0.0]], "lkdv-dirichlet"),
        HalfLineProblem::from_real(3, i, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], "reverse-lkdv"),
        HalfLineProblem::from_real(2, one, &[vec![1.0, 0.0]], "heat-dirichlet"),
        HalfLineProblem::from_real(2, one, &[vec![0.0, 1.0]], "heat-neumann"),
        HalfLineProblem::from_real(
            4,
            Complex64::from_polar(1.0, -PI / 6.0),
            &[vec![0.0, 0.0, 3.0, 1.0], vec![-2.0, 1.0, 0.0, 0.0]],
            "robin-4",
        ),
    ]
}

pub fn builtin(name: &str) -> Option<HalfLineProblem> {
    builtin_catalog().into_iter().find(|p| p.label == name)
}
