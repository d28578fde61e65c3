//! Summary statistics and the one-sided paired t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use wlot_core::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    /// Every difference is exactly zero.
    AllZero,
    /// Constant positive difference: p tends to 0.
    Positive,
    /// Constant negative difference: p tends to 1.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// `P(T >= t)` under the null of zero mean difference.
    pub p_value: f64,
    pub degenerate: Option<Degenerate>,
}

/// Tests `mean(a - b) > 0` on paired samples.
pub fn paired_ttest_onesided(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let df = n - 1;
    let m = mean(&d);
    let s = std_dev(&d);
    if s == 0.0 {
        let (t, p, flag) = if m == 0.0 {
            (0.0, 0.5, Degenerate::AllZero)
        } else if m > 0.0 {
            (f64::INFINITY, 0.0, Degenerate::Positive)
        } else {
            (f64::NEG_INFINITY, 1.0, Degenerate::Negative)
        };
        return Ok(TTest {
            t,
            df,
            p_value: p,
            degenerate: Some(flag),
        });
    }
    let t = m / (s / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(TTest {
        t,
        df,
        p_value: dist.sf(t),
        degenerate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_cases() {
        let r = paired_ttest_onesided(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.degenerate, Some(Degenerate::AllZero));
        assert_eq!(r.p_value, 0.5);
        let r = paired_ttest_onesided(&[2.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(r.degenerate, Some(Degenerate::Positive));
        assert_eq!(r.p_value, 0.0);
        assert!(paired_ttest_onesided(&[1.0], &[0.0]).is_err());
        assert!(paired_ttest_onesided(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn summary() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_dev(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }
}
