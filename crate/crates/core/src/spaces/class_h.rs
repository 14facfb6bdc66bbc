//! Numerical evidence for class-H admission and the lifted sequence space.
//!
//! A sequence space is admitted when `inf_n |X_{n,…,pn}|` grows without bound
//! in `p`; a function space when `inf_s |X_{[s,ts)}|` grows without bound in `t`.
//! Here the infimum runs over a finite inner range and growth is judged against
//! a threshold curve, so the result is evidence, never a proof.

use serde::{Deserialize, Serialize};

use super::{Domain, Element, NormValue, NormedSpace, WeightedSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassHMargin {
    pub multiplier: f64,
    pub margin: f64,
    /// Inner index (`n` or `s`) attaining the minimum.
    pub argmin: f64,
}

/// `min_{n ∈ inner} |X_{n,…,pn}|` (sequences) or `min_{s ∈ inner} |X_{[s, ts))}|` (functions).
pub fn class_h_margin<S: NormedSpace>(
    sp: &S,
    multiplier: f64,
    inner: &[f64],
) -> Result<ClassHMargin> {
    if inner.is_empty() {
        return Err(Error::EmptyGrid("inner range"));
    }
    if !(multiplier >= 1.0 && multiplier.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "multiplier {multiplier} must be >= 1"
        )));
    }
    let top = inner.iter().copied().fold(1.0_f64, f64::max);
    let widened = sp.with_horizon(sp.horizon().max(2.0 * multiplier * top + 2.0));
    let mut best = ClassHMargin {
        multiplier,
        margin: f64::INFINITY,
        argmin: f64::NAN,
    };
    for &x in inner {
        let value = match sp.domain() {
            Domain::Sequence => {
                if multiplier.fract() != 0.0 || x.fract() != 0.0 || x < 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "sequence margins need integer multiplier and n >= 1, got p={multiplier}, n={x}"
                    )));
                }
                let n = x as u64;
                widened
                    .norm(&Element::Indicator {
                        lo: n,
                        hi: n * multiplier as u64,
                    })?
                    .value
            }
            Domain::Function => {
                if x < 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "inner point s = {x} must be >= 1"
                    )));
                }
                widened
                    .norm(&Element::Interval {
                        lo: x,
                        hi: multiplier * x,
                    })?
                    .value
            }
        };
        if value < best.margin {
            best.margin = value;
            best.argmin = x;
        }
    }
    Ok(best)
}

/// Growth curve a margin sequence has to exceed at its last multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Threshold {
    /// A fixed level.
    Constant { level: f64 },
    /// `0.5 · (ln m)^{1/p}` at the last multiplier `m`.
    HalfLogRoot { p: f64 },
    /// Twice the first margin.
    DoublingOverSpan,
}

impl Threshold {
    /// `0.5 · (ln m)^{1/p}` with the space's exponent.
    pub fn default_for<S: NormedSpace>(sp: &S) -> Self {
        Threshold::HalfLogRoot { p: sp.exponent() }
    }

    fn level(&self, margins: &[ClassHMargin]) -> f64 {
        match *self {
            Threshold::Constant { level } => level,
            Threshold::HalfLogRoot { p } => {
                let m = margins.last().map_or(1.0, |c| c.multiplier);
                0.5 * m.ln().max(0.0).powf(1.0 / p)
            }
            Threshold::DoublingOverSpan => 2.0 * margins.first().map_or(0.0, |c| c.margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHReport {
    pub space: String,
    pub admitted: bool,
    pub nondecreasing: bool,
    pub threshold: Threshold,
    pub threshold_level: f64,
    pub margins: Vec<ClassHMargin>,
}

/// Margins over increasing multipliers; admitted iff they are nondecreasing
/// and the last exceeds the threshold.
pub fn check_class_h<S: NormedSpace>(
    sp: &S,
    multipliers: &[f64],
    inner: &[f64],
    threshold: Threshold,
) -> Result<ClassHReport> {
    if multipliers.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "class-H scan needs at least 3 multipliers, got {}",
            multipliers.len()
        )));
    }
    if multipliers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "multipliers must be strictly increasing".into(),
        ));
    }
    let margins = multipliers
        .iter()
        .map(|&m| class_h_margin(sp, m, inner))
        .collect::<Result<Vec<_>>>()?;
    let nondecreasing = margins
        .windows(2)
        .all(|w| w[1].margin >= w[0].margin * (1.0 - 1e-12));
    let threshold_level = threshold.level(&margins);
    let last = margins.last().map_or(0.0, |c| c.margin);
    Ok(ClassHReport {
        space: sp.label(),
        admitted: nondecreasing && last > threshold_level,
        nondecreasing,
        threshold,
        threshold_level,
        margins,
    })
}

/// `multiplier,margin` rows with a header line.
pub fn margin_curve_csv(report: &ClassHReport) -> String {
    let mut out = String::from("multiplier,margin\n");
    for c in &report.margins {
        out.push_str(&format!("{},{}\n", c.multiplier, c.margin));
    }
    out
}

/// The sequence space `S_A` of a function space `A`:
/// `|{αₙ}| = |Σ αₙ X_{[n,n+1)}|_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedSpace {
    pub base: WeightedSpace,
}

/// Lifts a function space on `ℝ≥1` to a sequence space.
pub fn lift_sequence_space(base: WeightedSpace) -> Result<LiftedSpace> {
    if base.domain != Domain::Function {
        return Err(Error::CarrierMismatch("lift needs a function space"));
    }
    Ok(LiftedSpace { base })
}

impl NormedSpace for LiftedSpace {
    fn domain(&self) -> Domain {
        Domain::Sequence
    }

    fn horizon(&self) -> f64 {
        self.base.horizon
    }

    fn exponent(&self) -> f64 {
        self.base.exponent()
    }

    fn convergence_tol(&self) -> f64 {
        self.base.convergence_tol
    }

    fn label(&self) -> String {
        format!("S[{}]", self.base.label())
    }

    fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            base: self.base.with_horizon(horizon),
        }
    }

    fn norm(&self, elem: &Element<'_>) -> Result<NormValue> {
        match *elem {
            Element::Finite(values) => self.base.norm(&Element::Steps(values)),
            Element::Indicator { lo, hi } => self.base.norm(&Element::Interval {
                lo: lo.max(1) as f64,
                hi: (hi + 1) as f64,
            }),
            Element::Sequence(f) => {
                let n = self.base.horizon.ceil() as u64;
                let values: Vec<f64> = (1..n).map(f).collect();
                self.base.norm(&Element::Steps(&values))
            }
            _ => Err(Error::CarrierMismatch(
                "lifted sequence space given a function",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_sum(lo: u64, hi: u64) -> f64 {
        (lo..=hi).map(|j| 1.0 / j as f64).sum()
    }

    fn inner_1_100() -> Vec<f64> {
        (1..=100).map(f64::from).collect()
    }

    #[test]
    fn l1_margin_at_ten() {
        let sp = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        let m = class_h_margin(&sp, 10.0, &inner_1_100()).unwrap();
        // Oracle: direct summation, minimum at n = 100.
        assert!((m.margin - seg_sum(100, 1000)).abs() < 1e-12);
        assert!((m.margin - 2.308_093_342_910_725).abs() < 1e-12);
        assert_eq!(m.argmin, 100.0);
    }

    #[test]
    fn l1_margin_at_one_is_single_term() {
        let sp = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        let m = class_h_margin(&sp, 1.0, &inner_1_100()).unwrap();
        assert!((m.margin - 0.01).abs() < 1e-15);
    }

    #[test]
    fn continuous_margin_is_log_multiplier() {
        let sp = WeightedSpace::lp_function(1.0, 10.0).unwrap();
        let m = class_h_margin(&sp, std::f64::consts::E, &[1.0, 3.7, 50.0, 1e4]).unwrap();
        assert!((m.margin - 1.0).abs() < 1e-14);
    }

    #[test]
    fn l1_and_l2_are_admitted() {
        let mult = [4.0, 16.0, 64.0, 256.0];
        let inner = inner_1_100();
        let l1 = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        let r = check_class_h(&l1, &mult, &inner, Threshold::default_for(&l1)).unwrap();
        assert!(r.admitted, "{r:?}");
        for c in &r.margins {
            assert!((c.margin - c.multiplier.ln()).abs() < 0.01);
        }
        let l2 = WeightedSpace::lp_function(2.0, 10.0).unwrap();
        let r = check_class_h(&l2, &mult, &[1.0, 2.0, 10.0], Threshold::default_for(&l2)).unwrap();
        assert!(r.admitted, "{r:?}");
        for c in &r.margins {
            assert!((c.margin - c.multiplier.ln().sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_norm_is_rejected() {
        let sp = WeightedSpace::sup(Domain::Sequence, 10.0).unwrap();
        let r = check_class_h(
            &sp,
            &[4.0, 16.0, 64.0, 256.0],
            &inner_1_100(),
            Threshold::default_for(&sp),
        )
        .unwrap();
        assert!(!r.admitted);
        assert!(r.margins.iter().all(|c| c.margin == 1.0));
    }

    #[test]
    fn power_relation_between_l1_and_lp() {
        let inner = inner_1_100();
        let l1 = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        for p in [0.5, 2.0, 3.0] {
            let lp = WeightedSpace::lp_sequence(p, 10.0).unwrap();
            for mult in [2.0, 7.0, 30.0] {
                let a = class_h_margin(&l1, mult, &inner).unwrap().margin;
                let b = class_h_margin(&lp, mult, &inner).unwrap().margin;
                assert!((b - a.powf(1.0 / p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn class_h_preconditions() {
        let sp = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        let t = Threshold::default_for(&sp);
        assert!(check_class_h(&sp, &[4.0, 16.0], &[1.0], t).is_err());
        assert!(check_class_h(&sp, &[4.0, 2.0, 16.0], &[1.0], t).is_err());
        assert!(class_h_margin(&sp, 4.0, &[]).is_err());
        assert!(class_h_margin(&sp, 2.5, &[1.0]).is_err());
    }

    #[test]
    fn lift_of_l1_on_unit_sequences() {
        let lifted = lift_sequence_space(WeightedSpace::lp_function(1.0, 1e3).unwrap()).unwrap();
        let e1 = [1.0];
        let v = lifted.norm(&Element::Finite(&e1)).unwrap().value;
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(lifted.norm(&Element::Finite(&[0.0; 5])).unwrap().value, 0.0);
        for k in [1u64, 5, 40] {
            let v = lifted
                .norm(&Element::Indicator { lo: 1, hi: k })
                .unwrap()
                .value;
            assert!((v - ((k + 1) as f64).ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn lifted_space_is_admitted() {
        let lifted = lift_sequence_space(WeightedSpace::lp_function(1.0, 10.0).unwrap()).unwrap();
        let r = check_class_h(
            &lifted,
            &[4.0, 16.0, 64.0, 256.0],
            &inner_1_100(),
            Threshold::default_for(&lifted),
        )
        .unwrap();
        assert!(r.admitted, "{r:?}");
    }

    #[test]
    fn lift_rejects_sequence_base() {
        assert!(lift_sequence_space(WeightedSpace::lp_sequence(1.0, 10.0).unwrap()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let sp = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        let r = check_class_h(&sp, &[2.0, 4.0, 8.0], &[1.0], Threshold::DoublingOverSpan).unwrap();
        let csv = margin_curve_csv(&r);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("multiplier,margin\n2,1.5\n"));
    }
}
