//! Fixtures shared by the benchmarks.

use utm_core::{builtin, standard_data, validate, PreparedDatum, TransformPair};

/// Datum support used throughout the benchmarks.
pub const SUPPORT: f64 = 3.0;

/// A catalog problem with its transform pair and prepared mixed datum.
pub struct Fixture {
    pub name: &'static str,
    pub pair: TransformPair,
    pub datum: PreparedDatum,
}

pub fn fixture(name: &'static str) -> Fixture {
    let problem = validate(builtin(name).expect("catalog problem")).expect("catalog problems validate");
    let pair = TransformPair::new(problem).expect("catalog problems build");
    let (_, f) = standard_data(pair.problem(), SUPPORT).remove(2);
    let datum = pair.prepare(f);
    Fixture { name, pair, datum }
}

/// `count` evenly spaced points in `[0.05L, L]`.
pub fn sample_xs(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| SUPPORT * (0.05 + 0.95 * i as f64 / (count.max(2) - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let f = fixture("heat-dirichlet");
        assert_eq!(f.name, "heat-dirichlet");
        assert_eq!(f.pair.contours().len(), 2);
        let xs = sample_xs(5);
        assert_eq!((xs[0], xs[4]), (0.15000000000000002, 3.0));
    }
}
