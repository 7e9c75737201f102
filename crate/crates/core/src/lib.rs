//! Unified transform method for half-line linear evolution equations
//! `q_t + a(−i)ⁿ∂ₓⁿq = 0`.

pub mod boundary;
pub mod charmat;
pub mod contour;
pub mod datum;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod oracles;
pub mod problem;
pub mod quadrature;
pub mod spectral;
pub mod transform;

pub use boundary::{
    adjoint_forms, complementary_forms, concomitant, concomitant_matrix, BoundaryFormMatrix, BoundaryVector,
};
pub use charmat::{CharMatrix, DeltaRoot};
pub use contour::{build_contours, deform_for_time, ContourSystem, PathSegment, SegmentKind};
pub use datum::{make_datum, standard_data, tail_subtraction_coeffs, Bump, InitialDatum};
pub use error::{Result, UtmError};
pub use evolution::SolutionField;
pub use num_complex::Complex64;
pub use oracles::{OracleMethod, OracleResult};
pub use problem::{
    builtin, builtin_catalog, classify, validate, HalfLineProblem, ValidatedProblem, WellPosednessClass, BUILTIN_NAMES,
};
pub use quadrature::{DecayModel, QuadratureParams};
pub use spectral::{CheckKind, RemainderPolynomial, SpectralReport, Verdict};
pub use transform::{
    ContourPlan, Estimate, EvalBox, KernelCoefficients, PreparedDatum, TransformPair, TransformSpec, TransformTable,
};
