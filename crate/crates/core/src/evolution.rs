//! `q(x, t) = Σ_k ∫_{Γ_k} e^{iλx − aλⁿt} F_k[f](λ) dλ`, evaluated without time stepping.

use num_complex::Complex64;

use crate::contour::{ContourSystem, SegmentKind};
use crate::error::{Result, UtmError};
use crate::transform::{min_max, ContourPlan, Estimate, EvalBox, PreparedDatum, TransformPair, TransformSpec};

/// `q(x_i, t_j)` on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `values[i][j] = q(xs[i], ts[j])`.
    pub values: Vec<Vec<Complex64>>,
    pub errors: Vec<Vec<f64>>,
}

impl SolutionField {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i][j]
    }

    /// Rows `(x, t, q)` with `t` varying fastest.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.xs
            .iter()
            .enumerate()
            .flat_map(move |(i, &x)| self.ts.iter().enumerate().map(move |(j, &t)| (x, t, self.values[i][j])))
    }
}

/// A ray that lies on ℝ where `e^{−aλⁿt}` does not decay leaves the integral undefined.
fn check_deformed(pair: &TransformPair, cs: &ContourSystem) -> Result<()> {
    let (a, n) = (pair.problem().a(), pair.problem().n() as i32);
    for k in 0..cs.len() {
        for seg in cs.contour(k) {
            if let SegmentKind::Ray { angle, .. } = seg.kind {
                if seg.on_real_axis() && (a * Complex64::from_polar(1.0, n as f64 * angle)).re <= 1e-12 {
                    return Err(UtmError::DeformationRequired);
                }
            }
        }
    }
    Ok(())
}

impl TransformPair {
    /// A fixed-node plan valid on the whole box. Boxes touching `t = 0` must be the
    /// single time `t = 0`; positive-time boxes use contours rotated into growth sectors.
    pub fn solution_plan(&self, f: &PreparedDatum, bx: EvalBox) -> Result<ContourPlan> {
        if bx.x_min <= 0.0 {
            return Err(UtmError::NonpositiveX(bx.x_min));
        }
        if bx.t_min < 0.0 || bx.t_max < bx.t_min {
            return Err(UtmError::InvalidArgument(format!(
                "bad time range [{}, {}]",
                bx.t_min, bx.t_max
            )));
        }
        let all: Vec<usize> = (0..self.contours().len()).collect();
        if bx.t_max == 0.0 {
            let spec = TransformSpec::remainder(self.problem().n() + 1);
            return self.plan(f, spec, self.contours(), &all, bx);
        }
        if bx.t_min == 0.0 {
            return Err(UtmError::InvalidArgument("time box straddles t = 0".into()));
        }
        let cs = self.time_contours(f, bx)?;
        check_deformed(self, &cs)?;
        self.plan(f, TransformSpec::full(), &cs, &all, bx)
    }

    /// `q(x, t)`; `t = 0` is the reconstruction integral.
    pub fn solve_at(&self, f: &PreparedDatum, x: f64, t: f64) -> Result<Estimate> {
        if f.datum().is_zero() {
            return Ok(Estimate {
                value: Complex64::new(0.0, 0.0),
                error: 0.0,
                converged: true,
            });
        }
        Ok(self.solution_plan(f, EvalBox::at(x, t))?.estimate(x, t))
    }

    /// `q` on `xs × ts`; transform values are computed once per time and reused for all `x`.
    pub fn solve_grid(&self, f: &PreparedDatum, xs: &[f64], ts: &[f64]) -> Result<SolutionField> {
        if xs.is_empty() || ts.is_empty() {
            return Err(UtmError::InvalidArgument("empty grid".into()));
        }
        if let Some(&t) = ts.iter().find(|t| !(**t >= 0.0)) {
            return Err(UtmError::InvalidArgument(format!("negative time {t}")));
        }
        let (x_min, x_max) = min_max(xs);
        let mut values = vec![vec![Complex64::new(0.0, 0.0); ts.len()]; xs.len()];
        let mut errors = vec![vec![0.0; ts.len()]; xs.len()];
        if !f.datum().is_zero() {
            for (j, &t) in ts.iter().enumerate() {
                let bx = EvalBox {
                    x_min,
                    x_max,
                    t_min: t,
                    t_max: t,
                };
                let plan = self.solution_plan(f, bx)?;
                for (i, &x) in xs.iter().enumerate() {
                    let e = plan.estimate(x, t);
                    values[i][j] = e.value;
                    errors[i][j] = e.error;
                }
            }
        }
        Ok(SolutionField {
            xs: xs.to_vec(),
            ts: ts.to_vec(),
            values,
            errors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::standard_data;
    use crate::problem::{builtin, validate};

    #[test]
    fn real_rays_without_decay_are_rejected() {
        let p = TransformPair::new(validate(builtin("lkdv-dirichlet").unwrap()).unwrap()).unwrap();
        assert_eq!(check_deformed(&p, p.contours()), Err(UtmError::DeformationRequired));
        // the heat contour on ℝ already decays
        let h = TransformPair::new(validate(builtin("heat-dirichlet").unwrap()).unwrap()).unwrap();
        assert!(check_deformed(&h, h.contours()).is_ok());
    }

    #[test]
    fn initial_column_is_the_reconstruction() {
        let p = TransformPair::new(validate(builtin("reverse-lkdv").unwrap()).unwrap()).unwrap();
        let (_, f) = standard_data(p.problem(), 3.0).remove(2);
        let f = p.prepare(f);
        let xs = [0.4, 1.1];
        let field = p.solve_grid(&f, &xs, &[0.0, 0.1]).unwrap();
        let rec = p.reconstruct_many(&f, &xs).unwrap();
        for (i, r) in rec.iter().enumerate() {
            assert_eq!(field.get(i, 0), r.value);
        }
        assert_eq!(field.rows().count(), 4);
    }

    #[test]
    fn bad_grids_are_rejected() {
        let p = TransformPair::new(validate(builtin("heat-neumann").unwrap()).unwrap()).unwrap();
        let f = p.prepare(standard_data(p.problem(), 3.0).remove(1).1);
        assert!(p.solve_grid(&f, &[], &[0.1]).is_err());
        assert!(p.solve_grid(&f, &[0.5], &[-0.1]).is_err());
        let bx = EvalBox {
            x_min: 0.5,
            x_max: 1.0,
            t_min: 0.0,
            t_max: 0.1,
        };
        assert!(p.solution_plan(&f, bx).is_err());
    }
}
