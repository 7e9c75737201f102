//! Line-oriented `key=value` run configuration.
//!
//! Problem keys: `order`, `a=<re>,<im>`, one `bc=<c0>,...,<c_{n-1}>` per boundary form,
//! `label`, or `builtin=<name>` instead of all of them. Datum keys `datum.kernel`,
//! `datum.support`, `datum.seed`; quadrature keys `quad.rel_tol`, `quad.abs_tol`,
//! `quad.density`, `quad.max_order`; grids `solve.xs`, `solve.ts`. Blank lines and
//! lines starting with `#` are skipped.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use utm_core::datum::generic_kernel_vector;
use utm_core::{
    builtin, make_datum, validate, BoundaryFormMatrix, HalfLineProblem, InitialDatum, QuadratureParams, UtmError,
    ValidatedProblem,
};

/// Default datum support `L`.
pub const DEFAULT_SUPPORT: f64 = 3.0;
/// Bump seed used when the config names none.
pub const DEFAULT_SEED: u64 = 23;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

impl From<ParseError> for UtmError {
    fn from(e: ParseError) -> Self {
        UtmError::Parse {
            line: e.line,
            message: e.message,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Builtin(String),
    Explicit {
        order: usize,
        a: Complex64,
        rows: Vec<Vec<Complex64>>,
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatumSpec {
    /// Boundary jet `(f(0), …, f⁽ⁿ⁻¹⁾(0))`; `None` picks half a generic kernel vector.
    pub kernel: Option<Vec<Complex64>>,
    pub support: f64,
    /// `None` means no bumps.
    pub seed: Option<u64>,
}

impl Default for DatumSpec {
    fn default() -> Self {
        Self {
            kernel: None,
            support: DEFAULT_SUPPORT,
            seed: Some(DEFAULT_SEED),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub problem: Option<ProblemSource>,
    pub datum: DatumSpec,
    pub quad: QuadratureParams,
    pub xs: Option<Vec<f64>>,
    pub ts: Option<Vec<f64>>,
    /// Accept complex boundary coefficients (`allow_complex=true`).
    pub allow_complex: bool,
}

impl RunConfig {
    pub fn with_builtin(name: &str) -> Self {
        Self {
            problem: Some(ProblemSource::Builtin(name.to_string())),
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        let (mut order, mut a, mut label, mut builtin_name) = (None, None, None, None);
        let mut rows: Vec<(usize, Vec<Complex64>)> = Vec::new();
        let mut complex_rows = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| ParseError { line, message };
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key=value, got '{body}'")))?;
            if key != "bc" && !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            match key {
                "order" => {
                    order = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| err(format!("bad order '{value}'")))?,
                    )
                }
                "a" => {
                    let v = parse_reals(value).map_err(err)?;
                    if v.len() != 2 {
                        return Err(err(format!("a needs <re>,<im>, got {} numbers", v.len())));
                    }
                    a = Some(Complex64::new(v[0], v[1]));
                }
                "bc" => {
                    let row = parse_complexes(value).map_err(err)?;
                    if complex_rows.is_none() && row.iter().any(|z| z.im != 0.0) {
                        complex_rows = Some(line);
                    }
                    rows.push((line, row));
                }
                "label" => label = Some(value.to_string()),
                "builtin" => builtin_name = Some((line, value.to_string())),
                "allow_complex" => cfg.allow_complex = parse_bool(value).map_err(err)?,
                "datum.kernel" => cfg.datum.kernel = Some(parse_complexes(value).map_err(err)?),
                "datum.support" => cfg.datum.support = parse_positive(value).map_err(err)?,
                "datum.seed" => {
                    cfg.datum.seed = if value == "none" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| err(format!("bad seed '{value}'")))?)
                    }
                }
                "quad.rel_tol" => cfg.quad.rel_tol = parse_positive(value).map_err(err)?,
                "quad.abs_tol" => cfg.quad.abs_tol = parse_positive(value).map_err(err)?,
                "quad.density" => cfg.quad.oscillation_density = parse_positive(value).map_err(err)?,
                "quad.max_order" => {
                    cfg.quad.max_panel_order = value.parse().map_err(|_| err(format!("bad order '{value}'")))?
                }
                "solve.xs" => cfg.xs = Some(parse_grid(value).map_err(err)?),
                "solve.ts" => cfg.ts = Some(parse_grid(value).map_err(err)?),
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        if let Some(line) = complex_rows.filter(|_| !cfg.allow_complex) {
            return Err(ParseError {
                line,
                message: "complex boundary coefficients need allow_complex=true".into(),
            });
        }
        let explicit = order.is_some() || a.is_some() || !rows.is_empty();
        cfg.problem = match (builtin_name, explicit) {
            (Some((line, _)), true) => {
                return Err(ParseError {
                    line,
                    message: "builtin cannot be combined with order/a/bc".into(),
                })
            }
            (Some((_, name)), false) => Some(ProblemSource::Builtin(name)),
            (None, true) => {
                let last = text.lines().count().max(1);
                let missing = |what: &str| ParseError {
                    line: last,
                    message: format!("missing key '{what}'"),
                };
                let order = order.ok_or_else(|| missing("order"))?;
                let a = a.ok_or_else(|| missing("a"))?;
                if rows.is_empty() {
                    return Err(missing("bc"));
                }
                if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != order) {
                    return Err(ParseError {
                        line: *line,
                        message: format!("bc has {} coefficients, order is {order}", r.len()),
                    });
                }
                Some(ProblemSource::Explicit {
                    order,
                    a,
                    rows: rows.into_iter().map(|(_, r)| r).collect(),
                    label: label.unwrap_or_else(|| "custom".into()),
                })
            }
            (None, false) => None,
        };
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<ValidatedProblem, UtmError> {
        let p = match &self.problem {
            None => {
                return Err(UtmError::InvalidArgument(
                    "no problem given (use --builtin or --problem)".into(),
                ))
            }
            Some(ProblemSource::Builtin(name)) => builtin(name).ok_or_else(|| {
                UtmError::InvalidArgument(format!(
                    "unknown builtin '{name}' (known: {})",
                    utm_core::BUILTIN_NAMES.join(", ")
                ))
            })?,
            Some(ProblemSource::Explicit { order, a, rows, label }) => {
                HalfLineProblem::new(*order, *a, BoundaryFormMatrix::from_rows(rows), label.clone())
            }
        };
        validate(p)
    }

    pub fn datum(&self, problem: &ValidatedProblem) -> Result<InitialDatum, UtmError> {
        let kernel = match &self.datum.kernel {
            Some(k) => k.clone(),
            None => generic_kernel_vector(problem).iter().map(|z| z * 0.5).collect(),
        };
        make_datum(problem, self.datum.support, &kernel, self.datum.seed)
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got '{s}'")),
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("bad number '{}'", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite number '{}'", s.trim()))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_real).collect()
}

/// Comma list of reals or complex literals such as `2-0.5i`.
pub fn parse_complexes(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<Complex64>()
                .ok()
                .filter(|z| z.re.is_finite() && z.im.is_finite())
                .ok_or_else(|| format!("bad coefficient '{p}'"))
        })
        .collect()
}

/// `a,b,c` or `start:step:stop` (inclusive of `stop` up to rounding).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let v: Vec<f64> = s.split(':').map(parse_real).collect::<Result<_, _>>()?;
        let [start, step, stop] = v[..] else {
            return Err(format!("range needs start:step:stop, got '{s}'"));
        };
        if !(step > 0.0) || stop < start {
            return Err(format!("empty or invalid range '{s}'"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(format!("range '{s}' has too many points"));
        }
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    let v = parse_reals(s)?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_problem_round_trips() {
        let cfg = RunConfig::parse("# LKdV\norder=3\na=0,-1\nbc=1,0,0\nlabel=mine\n").unwrap();
        let p = cfg.problem().unwrap();
        assert_eq!((p.n(), p.big_n(), p.label()), (3, 1, "mine"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("order=3\n\na=0,-1\nbc=1,0\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = RunConfig::parse("order=3\nfoo=1\n").unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (2, "unknown key 'foo'"));
        let e = RunConfig::parse("order=3\norder=4\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = RunConfig::parse("order=2\na=1,0\nbc=1+2i,0\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(RunConfig::parse("allow_complex=true\norder=2\na=1,0\nbc=1+2i,0\n").is_ok());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5:0.25:1").unwrap(), vec![0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("1:0:2").is_err());
        assert!(parse_grid("1:1").is_err());
    }

    #[test]
    fn builtin_with_overrides() {
        let cfg =
            RunConfig::parse("builtin=heat-neumann\ndatum.seed=none\nquad.rel_tol=1e-9\nsolve.ts=0.1,0.2\n").unwrap();
        assert_eq!(cfg.problem, Some(ProblemSource::Builtin("heat-neumann".into())));
        assert_eq!(cfg.datum.seed, None);
        assert_eq!(cfg.quad.rel_tol, 1e-9);
        assert!(cfg.datum(&cfg.problem().unwrap()).unwrap().bumps().is_empty());
        assert!(RunConfig::parse("builtin=heat-neumann\norder=2\n").is_err());
    }
}
