//! Membership tests for `S(a, b)`: nondecreasing `t_n ≥ 1` with `t_{mn}/t_n ≤ a·m^b`.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SabParams {
    pub a: f64,
    pub b: f64,
}

impl SabParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "S(a,b) needs a, b > 0, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SabReport {
    pub holds: bool,
    /// Largest `t_{mn} / (t_n · a · m^b)`.
    pub worst_ratio: f64,
    pub worst_at: (u64, u64),
}

/// Checks `t_{mn} ≤ a m^b t_n` over the tested `(m, n)`.
///
/// The sequence must be `≥ 1` and nondecreasing on every index touched.
pub fn check_sab(
    seq: &dyn Fn(u64) -> f64,
    params: SabParams,
    m_range: RangeInclusive<u64>,
    n_range: RangeInclusive<u64>,
) -> Result<SabReport> {
    if m_range.is_empty() || n_range.is_empty() {
        return Err(Error::EmptyGrid("S(a,b) index range"));
    }
    let mut touched = BTreeSet::new();
    for m in m_range.clone() {
        for n in n_range.clone() {
            touched.insert(n);
            touched.insert(m * n);
        }
    }
    let mut prev: Option<(u64, f64)> = None;
    for &k in &touched {
        let v = seq(k);
        if !(v >= 1.0) {
            return Err(Error::SequenceBelowOne(k));
        }
        if let Some((j, pv)) = prev {
            if v < pv {
                return Err(Error::DecreasingSequence { index: j, next: k });
            }
        }
        prev = Some((k, v));
    }
    let mut report = SabReport {
        holds: true,
        worst_ratio: 0.0,
        worst_at: (0, 0),
    };
    for m in m_range {
        let cap = params.a * (m as f64).powf(params.b);
        for n in n_range.clone() {
            let ratio = seq(m * n) / (seq(n) * cap);
            if ratio > report.worst_ratio || ratio.is_nan() {
                report.worst_ratio = ratio;
                report.worst_at = (m, n);
            }
        }
    }
    report.holds = report.worst_ratio <= 1.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_sequence_is_exact() {
        let r = check_sab(
            &|n| n as f64,
            SabParams::new(1.0, 1.0).unwrap(),
            1..=20,
            1..=50,
        )
        .unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_ratio, 1.0);
    }

    #[test]
    fn squares_are_exact() {
        let r = check_sab(
            &|n| (n * n) as f64,
            SabParams::new(1.0, 2.0).unwrap(),
            1..=20,
            1..=50,
        )
        .unwrap();
        assert!(r.holds);
        assert!((r.worst_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_fails() {
        let r = check_sab(
            &|n| 2f64.powi(n as i32),
            SabParams::new(10.0, 3.0).unwrap(),
            2..=2,
            1..=60,
        )
        .unwrap();
        assert!(!r.holds);
        // Ratio 2^n / (a·2^b) at n = 60.
        assert_eq!(r.worst_at, (2, 60));
        assert!((r.worst_ratio - 2f64.powi(60) / 80.0).abs() / r.worst_ratio < 1e-12);
    }

    #[test]
    fn decreasing_rejected() {
        let err = check_sab(
            &|n| 100.0 / n as f64 + 1.0,
            SabParams::new(1.0, 1.0).unwrap(),
            1..=2,
            1..=3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DecreasingSequence { .. }));
        assert!(matches!(
            check_sab(&|_| 0.5, SabParams::new(1.0, 1.0).unwrap(), 1..=2, 1..=3),
            Err(Error::SequenceBelowOne(1))
        ));
    }

    proptest! {
        #[test]
        fn doubling_params_keeps_membership(q in 0.5f64..3.0, a in 0.5f64..4.0, b in 0.5f64..4.0) {
            let seq = move |n: u64| (n as f64).powf(q);
            let base = check_sab(&seq, SabParams::new(a, b).unwrap(), 1..=8, 1..=16).unwrap();
            for p in [SabParams::new(2.0 * a, b).unwrap(), SabParams::new(a, 2.0 * b).unwrap()] {
                let r = check_sab(&seq, p, 1..=8, 1..=16).unwrap();
                prop_assert!(!base.holds || r.holds);
                prop_assert!(r.worst_ratio <= base.worst_ratio * (1.0 + 1e-12));
            }
        }
    }
}
