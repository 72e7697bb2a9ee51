//! Spearman correlation and ordinary least squares with t-tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dynamics::DynamicsResult;
use crate::error::{Error, Result};
use crate::metrics::{NodeMetric, NodeMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p_value: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpearmanPValue {
    /// `t = ρ √((n-2)/(1-ρ²))` with `n - 2` degrees of freedom.
    #[default]
    TApprox,
    /// Full permutation distribution; only for `n <= 10`.
    Exact,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn two_sided_t(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Pairs where either value is non-finite are dropped.
fn complete_pairs(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip()
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    spearman_with(x, y, SpearmanPValue::TApprox)
}

pub fn spearman_with(x: &[f64], y: &[f64], method: SpearmanPValue) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let (x, y) = complete_pairs(x, y);
    let n = x.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "spearman needs at least 4 complete pairs, got {n}"
        )));
    }
    let rx = average_ranks(&x);
    let ry = average_ranks(&y);
    let rho = pearson(&rx, &ry).ok_or(Error::UndefinedCorrelation)?;
    let p_value = match method {
        SpearmanPValue::TApprox => {
            if (1.0 - rho * rho) <= 0.0 {
                0.0
            } else {
                let t = rho * ((n as f64 - 2.0) / (1.0 - rho * rho)).sqrt();
                two_sided_t(t, n as f64 - 2.0)
            }
        }
        SpearmanPValue::Exact => {
            if n > 10 {
                return Err(Error::InvalidInput(format!(
                    "exact spearman p-value limited to n <= 10, got {n}"
                )));
            }
            exact_permutation_p(&rx, &ry, rho)
        }
    };
    Ok(CorrelationResult {
        rho,
        p_value,
        n_obs: n,
    })
}

fn exact_permutation_p(rx: &[f64], ry: &[f64], rho: f64) -> f64 {
    // Heap's algorithm over permutations of ry.
    let n = ry.len();
    let mut perm = ry.to_vec();
    let mut c = vec![0usize; n];
    let threshold = rho.abs() - 1e-12;
    let mut total = 0u64;
    let mut extreme = 0u64;
    let mut visit = |p: &[f64]| {
        total += 1;
        if pearson(rx, p).is_some_and(|r| r.abs() >= threshold) {
            extreme += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    extreme as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then predictors in the order given.
    pub coefficients: Vec<Coefficient>,
    pub df: usize,
    pub r_squared: f64,
    pub n_obs: usize,
    /// Cases removed because some value was missing.
    pub dropped_cases: usize,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

pub const INTERCEPT: &str = "intercept";

/// Relative column norm below which a column counts as collinear with the
/// columns before it.
const COLLINEARITY_TOLERANCE: f64 = 1e-10;

/// OLS with an intercept. Cases with any non-finite value are dropped.
pub fn ols_regression(response: &[f64], predictors: &[(&str, &[f64])]) -> Result<RegressionResult> {
    for (name, col) in predictors {
        if col.len() != response.len() {
            return Err(Error::InvalidInput(format!(
                "predictor `{name}` has {} values, response has {}",
                col.len(),
                response.len()
            )));
        }
    }
    let keep: Vec<usize> = (0..response.len())
        .filter(|&i| response[i].is_finite() && predictors.iter().all(|(_, c)| c[i].is_finite()))
        .collect();
    let n = keep.len();
    let p = predictors.len() + 1;
    if n <= p {
        return Err(Error::InvalidInput(format!(
            "regression needs more than {p} complete cases, got {n}"
        )));
    }

    let x = DMatrix::from_fn(n, p, |r, c| {
        if c == 0 {
            1.0
        } else {
            predictors[c - 1].1[keep[r]]
        }
    });
    let y = DVector::from_iterator(n, keep.iter().map(|&i| response[i]));

    let qr = x.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..p)
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= COLLINEARITY_TOLERANCE * norm
        })
        .map(|j| {
            if j == 0 {
                INTERCEPT.to_string()
            } else {
                predictors[j - 1].0.to_string()
            }
        })
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }

    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient { columns: vec![] })?;
    let residuals = &y - &x * &beta;
    let rss = residuals.norm_squared();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient { columns: vec![] })?;
    let cov_unscaled = &r_inv * r_inv.transpose();

    let mean_y = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let coefficients = (0..p)
        .map(|j| {
            let se = (sigma2 * cov_unscaled[(j, j)]).sqrt();
            let estimate = beta[j];
            let t = estimate / se;
            Coefficient {
                name: if j == 0 {
                    INTERCEPT.to_string()
                } else {
                    predictors[j - 1].0.to_string()
                },
                estimate,
                std_error: se,
                t,
                p_value: two_sided_t(t, df as f64),
            }
        })
        .collect();

    Ok(RegressionResult {
        coefficients,
        df,
        r_squared,
        n_obs: n,
        dropped_cases: response.len() - n,
        residuals: residuals.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCorrelation {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub result: Option<CorrelationResult>,
}

/// Spearman correlation for every unordered pair of columns. Pairs whose
/// correlation is undefined carry `None`.
pub fn correlation_battery(columns: &[(String, Vec<f64>)]) -> Vec<NamedCorrelation> {
    let mut out = Vec::new();
    for (i, (a, xa)) in columns.iter().enumerate() {
        for (b, xb) in &columns[i + 1..] {
            out.push(NamedCorrelation {
                a: a.clone(),
                b: b.clone(),
                result: spearman(xa, xb).ok(),
            });
        }
    }
    out
}

/// Predictors of log prevalence in the static analysis.
pub const STATIC_PREDICTORS: [NodeMetric; 6] = [
    NodeMetric::Betweenness,
    NodeMetric::Degree,
    NodeMetric::StrengthPerEdge,
    NodeMetric::Clustering,
    NodeMetric::Participation,
    NodeMetric::Xi,
];

/// Metrics whose slopes join Ω as predictors of the prevalence slope.
pub const TEMPORAL_SLOPE_PREDICTORS: [NodeMetric; 5] = [
    NodeMetric::Betweenness,
    NodeMetric::Degree,
    NodeMetric::StrengthPerEdge,
    NodeMetric::Clustering,
    NodeMetric::Participation,
];

pub const OMEGA: &str = "omega";

fn or_nan(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Regresses the natural log of prevalence on the static node measures.
pub fn analysis_static(
    topics: &[String],
    prevalence: &[f64],
    metrics: &[NodeMetrics],
) -> Result<RegressionResult> {
    if let Some(i) = prevalence.iter().position(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::LogDomain {
            topic: topics.get(i).cloned().unwrap_or_else(|| i.to_string()),
        });
    }
    let response: Vec<f64> = prevalence.iter().map(|p| p.ln()).collect();
    let columns: Vec<(&str, Vec<f64>)> = STATIC_PREDICTORS
        .iter()
        .map(|&m| {
            let values = prevalence
                .iter()
                .zip(metrics)
                .map(|(&p, row)| or_nan(m.value(p, row)))
                .collect();
            (m.name(), values)
        })
        .collect();
    let refs: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    ols_regression(&response, &refs)
}

/// Regresses the prevalence slope on Ω and the slopes of the structural
/// measures. `metric_slopes` must list the predictors in the order they should
/// appear.
pub fn analysis_temporal(
    prevalence_slope: &[Option<f64>],
    omega: &[Option<f64>],
    metric_slopes: &[(NodeMetric, Vec<Option<f64>>)],
) -> Result<RegressionResult> {
    let response: Vec<f64> = prevalence_slope.iter().copied().map(or_nan).collect();
    let mut columns: Vec<(&str, Vec<f64>)> = vec![(OMEGA, omega.iter().copied().map(or_nan).collect())];
    for (m, values) in metric_slopes {
        columns.push((m.name(), values.iter().copied().map(or_nan).collect()));
    }
    let refs: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    ols_regression(&response, &refs)
}

/// Temporal regression over the non-excluded topics of a dynamics run.
pub fn analysis_temporal_from(dynamics: &DynamicsResult) -> Result<RegressionResult> {
    let keep: Vec<usize> = (0..dynamics.topics.len()).filter(|&i| !dynamics.excluded[i]).collect();
    let pick = |v: Vec<Option<f64>>| -> Vec<Option<f64>> { keep.iter().map(|&i| v[i]).collect() };
    let prevalence = pick(dynamics.deltas(NodeMetric::Prevalence));
    let omega = pick(dynamics.omega.omega.clone());
    let slopes: Vec<(NodeMetric, Vec<Option<f64>>)> = TEMPORAL_SLOPE_PREDICTORS
        .iter()
        .map(|&m| (m, pick(dynamics.deltas(m))))
        .collect();
    analysis_temporal(&prevalence, &omega, &slopes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spearman_monotone_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = [2.0, 4.0, 8.0, 16.0, 32.0];
        let down = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(spearman(&x, &up).unwrap().rho, 1.0);
        assert_eq!(spearman(&x, &down).unwrap().rho, -1.0);
        assert_eq!(spearman(&x, &up).unwrap().p_value, 0.0);
    }

    #[test]
    fn spearman_with_ties_matches_hand_ranks() {
        let x = [1.0, 2.0, 2.0, 3.0, 4.0, 4.0];
        let y = [2.0, 1.0, 3.0, 3.0, 5.0, 4.0];
        // ranks x: 1, 2.5, 2.5, 4, 5.5, 5.5 ; ranks y: 2, 1, 3.5, 3.5, 6, 5
        assert_eq!(average_ranks(&x), vec![1.0, 2.5, 2.5, 4.0, 5.5, 5.5]);
        assert_eq!(average_ranks(&y), vec![2.0, 1.0, 3.5, 3.5, 6.0, 5.0]);
        // Deviations from 3.5: x (-2.5,-1,-1,0.5,2,2), y (-1.5,-2.5,0,0,2.5,1.5)
        // sxy = 3.75+2.5+0+0+5+3 = 14.25; sxx = 6.25+1+1+0.25+4+4 = 16.5;
        // syy = 2.25+6.25+0+0+6.25+2.25 = 17
        let expected = 14.25 / (16.5f64 * 17.0).sqrt();
        let r = spearman(&x, &y).unwrap();
        assert!((r.rho - expected).abs() < 1e-14);
        assert_eq!(r.n_obs, 6);
    }

    #[test]
    fn spearman_errors() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::UndefinedCorrelation)
        ));
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        let r = spearman(&[1.0, f64::NAN, 2.0, 3.0, 4.0], &[1.0, 9.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(r.n_obs, 4);
    }

    #[test]
    fn spearman_exact_p() {
        // n = 4 perfect correlation: 2 of 24 permutations reach |rho| = 1.
        let r = spearman_with(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], SpearmanPValue::Exact).unwrap();
        assert!((r.p_value - 2.0 / 24.0).abs() < 1e-15);
        let big: Vec<f64> = (0..11).map(f64::from).collect();
        assert!(spearman_with(&big, &big, SpearmanPValue::Exact).is_err());
    }

    #[test]
    fn spearman_t_approximation_value() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
        let r = spearman(&x, &y).unwrap();
        // d = ±1 everywhere: rho = 1 - 6*8/(8*63) = 1 - 48/504
        let rho = 1.0 - 48.0 / 504.0;
        assert!((r.rho - rho).abs() < 1e-14);
        let t = rho * (6.0 / (1.0 - rho * rho)).sqrt();
        let p = 2.0 * StudentsT::new(0.0, 1.0, 6.0).unwrap().sf(t);
        assert!((r.p_value - p).abs() < 1e-14);
    }

    #[test]
    fn ols_exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = ols_regression(&y, &[("x", &x)]).unwrap();
        assert!((fit.coefficients[0].estimate - 1.0).abs() < 1e-12);
        assert!((fit.coefficient("x").unwrap().estimate - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        assert_eq!(fit.df, 8);
    }

    #[test]
    fn ols_matches_normal_equations_on_orthogonal_design() {
        // Columns are orthogonal contrasts over 8 runs.
        let a = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let y = [3.1, 0.9, 1.2, -0.8, 3.0, 1.1, 0.8, -1.1];
        let fit = ols_regression(&y, &[("a", &a), ("b", &b)]).unwrap();
        // Normal equations are diagonal: beta_j = <x_j, y> / <x_j, x_j>.
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
        assert!((fit.coefficients[0].estimate - y.iter().sum::<f64>() / 8.0).abs() < 1e-10);
        assert!((fit.coefficients[1].estimate - dot(&a, &y) / 8.0).abs() < 1e-10);
        assert!((fit.coefficients[2].estimate - dot(&b, &y) / 8.0).abs() < 1e-10);
        let rss: f64 = fit.residuals.iter().map(|r| r * r).sum();
        let se = (rss / 5.0 / 8.0).sqrt();
        assert!((fit.coefficients[1].std_error - se).abs() < 1e-10);
    }

    #[test]
    fn ols_names_collinear_columns() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let doubled: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let constant = vec![3.0; 10];
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        match ols_regression(&y, &[("x", &x), ("twice_x", &doubled)]) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["twice_x"]),
            other => panic!("{other:?}"),
        }
        match ols_regression(&y, &[("x", &x), ("flat", &constant)]) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["flat"]),
            other => panic!("{other:?}"),
        }
        assert!(ols_regression(&y[..2], &[("x", &x[..2])]).is_err());
    }

    #[test]
    fn ols_listwise_deletion() {
        let x = [1.0, 2.0, f64::NAN, 4.0, 5.0, 6.0];
        let y = [1.0, 2.1, 3.0, 3.9, f64::NAN, 6.2];
        let fit = ols_regression(&y, &[("x", &x)]).unwrap();
        assert_eq!(fit.n_obs, 4);
        assert_eq!(fit.dropped_cases, 2);
        assert_eq!(fit.df, 2);
    }

    fn design() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-5.0f64..5.0, 20),
            prop::collection::vec(-5.0f64..5.0, 20),
            prop::collection::vec(-5.0f64..5.0, 20),
        )
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_transform(x in prop::collection::vec(-10.0f64..10.0, 5..30), y in prop::collection::vec(-10.0f64..10.0, 30)) {
            let y = &y[..x.len()];
            if let Ok(base) = spearman(&x, y) {
                let tx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let ty: Vec<f64> = y.iter().map(|v| v * 3.0 - 1.0).collect();
                let moved = spearman(&tx, &ty).unwrap();
                prop_assert!((base.rho - moved.rho).abs() < 1e-12);
                let selfcorr = spearman(&x, &x).unwrap();
                prop_assert!((selfcorr.rho - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn residuals_orthogonal_to_predictors((a, b, y) in design()) {
            let fit = ols_regression(&y, &[("a", &a), ("b", &b)]).unwrap();
            let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            for col in [&a, &b] {
                let dot: f64 = col.iter().zip(&fit.residuals).map(|(p, q)| p * q).sum();
                let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(dot.abs() < 1e-8 * norm * scale);
            }
            let sum: f64 = fit.residuals.iter().sum();
            prop_assert!(sum.abs() < 1e-8 * scale * 20f64.sqrt());
        }

        #[test]
        fn t_statistics_scale_invariant((a, b, y) in design(), sa in 0.01f64..100.0, sb in -100.0f64..-0.01) {
            let a2: Vec<f64> = a.iter().map(|v| v * sa + 7.0).collect();
            let b2: Vec<f64> = b.iter().map(|v| v * sb).collect();
            let f1 = ols_regression(&y, &[("a", &a), ("b", &b)]).unwrap();
            let f2 = ols_regression(&y, &[("a", &a2), ("b", &b2)]).unwrap();
            prop_assert!((f1.coefficients[1].t - f2.coefficients[1].t).abs() < 1e-7 * f1.coefficients[1].t.abs().max(1.0));
            prop_assert!((f1.coefficients[2].t + f2.coefficients[2].t).abs() < 1e-7 * f1.coefficients[2].t.abs().max(1.0));
        }
    }
}
