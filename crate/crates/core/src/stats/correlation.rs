use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;
use crate::features::{ColumnGroup, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub feature: String,
    pub r: f64,
    /// Two-sided p-value of the t test on `r` with n - 2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub stars: String,
}

/// `*`, `**`, `***` at p < 0.05, 0.01, 0.001.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Pearson product-moment correlation with its two-sided t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { n, min: 3 });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p_value = correlation_p_value(r, n);
    Ok(CorrelationResult { feature: String::new(), r, p_value, n, stars: significance_stars(p_value).into() })
}

fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// A correlation table row. `r` is absent when the feature is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub feature: String,
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub stars: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CorrelationRow {
    /// `r` with three decimals followed by its stars, e.g. `0.605***`.
    pub fn cell(&self) -> String {
        match self.r {
            Some(r) => format!("{r:.3}{}", self.stars),
            None => "n/a".into(),
        }
    }
}

/// Point-biserial correlation of every crowd column with a 0/1 outcome.
pub fn correlate_with_outcome(m: &FeatureMatrix, outcomes: &[bool]) -> Result<Vec<CorrelationRow>, StatsError> {
    if outcomes.len() != m.n_rows() {
        return Err(StatsError::LengthMismatch(m.n_rows(), outcomes.len()));
    }
    let y: Vec<f64> = outcomes.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
    let mut rows = Vec::new();
    for j in m.group_indices(ColumnGroup::Crowd) {
        let feature = m.columns()[j].name.clone();
        let row = match pearson(&m.column(j), &y) {
            Ok(res) => CorrelationRow {
                feature,
                r: Some(res.r),
                p_value: Some(res.p_value),
                n: res.n,
                stars: res.stars,
                note: None,
            },
            Err(StatsError::ConstantInput) => CorrelationRow {
                feature,
                r: None,
                p_value: None,
                n: y.len(),
                stars: String::new(),
                note: Some("feature or outcome is constant; r undefined".into()),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations_are_exact() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().r, 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().r, -1.0);
    }

    #[test]
    fn hand_case() {
        let res = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(res.r, 0.8);
        // df = 2 has the closed form p = 1 - |t| / sqrt(t^2 + 2)
        let t: f64 = 0.8 * (2.0f64 / 0.36).sqrt();
        assert!((t - 1.886).abs() < 1e-3);
        assert!((res.p_value - (1.0 - t / (t * t + 2.0).sqrt())).abs() < 1e-9);
        assert_eq!(res.stars, "");
    }

    #[test]
    fn errors() {
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::ConstantInput));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFewPoints { .. })));
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.005), "**");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.05), "");
    }

    #[test]
    fn row_cell_layout() {
        let row = CorrelationRow {
            feature: "appeal".into(),
            r: Some(0.6049),
            p_value: Some(1e-9),
            n: 10,
            stars: "***".into(),
            note: None,
        };
        assert_eq!(row.cell(), "0.605***");
    }

    #[test]
    fn constant_feature_is_flagged_not_fatal() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![("flat".into(), ColumnGroup::Crowd), ("x".into(), ColumnGroup::Crowd)],
            vec![vec![1.0, 0.1], vec![1.0, 0.9], vec![1.0, 0.2], vec![1.0, 0.8]],
        );
        let rows = correlate_with_outcome(&m, &[false, true, false, true]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].r.is_none() && rows[0].note.is_some());
        assert!(rows[1].r.unwrap() > 0.9);
    }
}
