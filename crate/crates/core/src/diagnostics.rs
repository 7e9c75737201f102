//! Independent consistency checks on computed solutions and characteristic matrices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::BoundaryVector;
use crate::charmat::CharMatrix;
use crate::error::Result;
use crate::oracles::{extrapolated_boundary_values, fd_residual, fd_time_step};
use crate::transform::{EvalBox, PreparedDatum, TransformPair};

/// Finite-difference view of an evolved solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionCheck {
    /// Largest `|∂ₜq + a(−i)ⁿ∂ₓⁿq|` with spatial step `h/4`.
    pub pde_residual: f64,
    /// Largest residual at step `h` over largest residual at `h/2`.
    pub halving_ratio: f64,
    /// Largest boundary-form value of the one-sided extrapolated jet at `x = 0`.
    pub boundary_residual: f64,
}

/// Step used for the one-sided boundary extrapolation.
pub const BOUNDARY_STEP: f64 = 0.01;

/// FD residuals on `xs × ts` (all `t > 0`) and boundary forms at every `t`.
///
/// The halving ratio compares steps `h` and `h/2`; the residual itself is read at `h/4`.
/// Every FD evaluation uses one plan covering its stencil, so the only error seen is
/// the stencil's own truncation.
pub fn evolution_check(
    pair: &TransformPair,
    f: &PreparedDatum,
    xs: &[f64],
    ts: &[f64],
    h: f64,
) -> Result<EvolutionCheck> {
    let n = pair.problem().n();
    let a = pair.problem().a();
    let (mut fine, mut coarse, mut pde, mut bnd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &t in ts {
        for &x in xs {
            let ht = fd_time_step(n, h);
            let bx = EvalBox {
                x_min: x - 4.0 * h,
                x_max: x + 4.0 * h,
                t_min: t - ht,
                t_max: t + ht,
            };
            let plan = pair.solution_plan(f, bx)?;
            let q = |x, t| plan.estimate(x, t).value;
            let r = fd_residual(&q, n, a, x, t, h)?;
            fine = fine.max(r.value.re);
            coarse = coarse.max(r.value.re + 3.0 * r.est_error);
            pde = pde.max(fd_residual(&q, n, a, x, t, 0.5 * h)?.value.re);
        }
        let points = n + 6;
        let bx = EvalBox {
            x_min: BOUNDARY_STEP,
            x_max: BOUNDARY_STEP * points as f64,
            t_min: t,
            t_max: t,
        };
        let plan = pair.solution_plan(f, bx)?;
        let u = extrapolated_boundary_values(&|x| plan.estimate(x, t).value, n, BOUNDARY_STEP, points);
        for z in pair.problem().boundary().apply(&BoundaryVector::new(u)) {
            bnd = bnd.max(z.norm());
        }
    }
    Ok(EvolutionCheck {
        pde_residual: pde,
        halving_ratio: if fine > 0.0 { coarse / fine } else { f64::NAN },
        boundary_residual: bnd,
    })
}

/// Largest `|Σ_l sign·det X^{l,j}(λ) M^l_r(λ) − Δ(λ)δ_{jr}| / |Δ(λ)|` over `samples`
/// seeded random `λ` with `0.3 ≤ |λ| ≤ 6` away from zeros of `Δ`.
pub fn cofactor_identity_residual(cm: &CharMatrix, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = cm.size();
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let lam = Complex64::from_polar(rng.gen_range(0.3..6.0), rng.gen_range(-PI..PI));
        let delta = cm.delta(lam);
        if delta.norm() < 1e-8 {
            continue;
        }
        let cof = cm.signed_cofactors(lam);
        for j in 1..=m {
            for r in 1..=m {
                let s: Complex64 = (1..=m).map(|l| cof[l - 1][j - 1] * cm.entry(l, r, lam)).sum();
                let want = if j == r { delta } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((s - want).norm() / delta.norm());
            }
        }
        done += 1;
    }
    worst
}
