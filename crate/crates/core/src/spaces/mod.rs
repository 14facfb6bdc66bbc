//! Weighted sequence and function norms.
//!
//! `ℓᵖ_w(ℤ≥1)` carries `|s|ᵖ = Σ_{j≥1} |s(j)|ᵖ / j` and `Lᵖ_w(ℝ≥1)` carries
//! `|f|ᵖ = ∫_1^∞ |f(t)|ᵖ dt/t`. Infinite sums and integrals are truncated at
//! the space's horizon `H`; the value at `H/2` is computed alongside and the
//! result is flagged converged when the two agree to `convergence_tol`.
//!
//! Function integrals run in the variable `u = ln t`, where the weight `dt/t`
//! becomes `du`. Step functions and interval indicators are integrated exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod class_h;
pub mod quadrature;
pub mod sab;

pub use class_h::{
    check_class_h, class_h_margin, lift_sequence_space, margin_curve_csv, ClassHMargin,
    ClassHReport, LiftedSpace, Threshold,
};
pub use sab::{check_sab, SabParams, SabReport};

use quadrature::{integrate, QuadOptions};

/// Default relative tolerance of the halving convergence test.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-3;

/// Underlying measure space of a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// `ℤ≥1` with counting measure.
    Sequence,
    /// `ℝ≥1` with Lebesgue measure.
    Function,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "kebab-case")]
pub enum NormKind {
    /// `(Σ |s(j)|ᵖ/j)^{1/p}` or `(∫ |f|ᵖ dt/t)^{1/p}`.
    WeightedLp { p: f64 },
    /// Unweighted supremum; not in class H.
    Sup,
}

/// A truncated element of a sequence or function space. Values must be
/// nonnegative (norms act on `|·|`).
#[derive(Clone, Copy)]
pub enum Element<'a> {
    /// `s(1), s(2), …`, zero beyond the slice.
    Finite(&'a [f64]),
    /// Characteristic sequence of `{lo, …, hi}`.
    Indicator { lo: u64, hi: u64 },
    /// `j ↦ s(j)` for `j ≥ 1`.
    Sequence(&'a dyn Fn(u64) -> f64),
    /// `Σ_n a_n X_{[n, n+1)}` with `a_1 = steps[0]`.
    Steps(&'a [f64]),
    /// Characteristic function of `[lo, hi)`.
    Interval { lo: f64, hi: f64 },
    /// A function on `ℝ≥1`; integrals are split at the breakpoints.
    Function {
        f: &'a dyn Fn(f64) -> f64,
        breakpoints: &'a [f64],
    },
}

impl Element<'_> {
    pub fn domain(&self) -> Domain {
        match self {
            Element::Finite(_) | Element::Indicator { .. } | Element::Sequence(_) => {
                Domain::Sequence
            }
            _ => Domain::Function,
        }
    }
}

/// A norm value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// Value with the horizon halved.
    pub half_value: f64,
    pub converged: bool,
    /// True for `0 < p < 1`, where the formula is only a quasi-norm.
    pub quasi: bool,
}

/// A (quasi-)normed space of nonnegative sequences or functions.
pub trait NormedSpace {
    fn domain(&self) -> Domain;

    fn horizon(&self) -> f64;

    /// Exponent used by default class-H thresholds (`p`, or 1 for sup norms).
    fn exponent(&self) -> f64;

    fn convergence_tol(&self) -> f64;

    fn label(&self) -> String;

    fn with_horizon(&self, horizon: f64) -> Self
    where
        Self: Sized;

    fn norm(&self, elem: &Element<'_>) -> Result<NormValue>;

    /// Norms of the prefixes `values[..end]` for each `end`, each truncated at `end`.
    fn prefix_norms(&self, values: &[f64], ends: &[usize]) -> Result<Vec<f64>>
    where
        Self: Sized,
    {
        ends.iter()
            .map(|&end| {
                let end = end.clamp(1, values.len().max(1));
                self.with_horizon(end.max(2) as f64)
                    .norm(&Element::Finite(&values[..end.min(values.len())]))
                    .map(|v| v.value)
            })
            .collect()
    }

    /// Norms of `f` restricted to `[1, end)` for each `end` (function spaces).
    fn prefix_norms_fn(&self, f: &dyn Fn(f64) -> f64, ends: &[f64]) -> Result<Vec<f64>>
    where
        Self: Sized,
    {
        ends.iter()
            .map(|&end| {
                if end <= 1.0 {
                    return Ok(0.0);
                }
                self.with_horizon(end)
                    .norm(&Element::Function {
                        f,
                        breakpoints: &[],
                    })
                    .map(|v| v.value)
            })
            .collect()
    }
}

/// Evaluates the norm of `elem` in `sp`.
pub fn norm_eval<S: NormedSpace>(sp: &S, elem: &Element<'_>) -> Result<NormValue> {
    sp.norm(elem)
}

/// `ℓᵖ_w`, `Lᵖ_w` or a sup norm, truncated at `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpace {
    pub domain: Domain,
    pub kind: NormKind,
    pub horizon: f64,
    pub convergence_tol: f64,
}

impl WeightedSpace {
    pub fn new(domain: Domain, kind: NormKind, horizon: f64, convergence_tol: f64) -> Result<Self> {
        if let NormKind::WeightedLp { p } = kind {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "exponent p = {p} must be > 0"
                )));
            }
        }
        if !(horizon >= 2.0 && horizon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon {horizon} must be >= 2"
            )));
        }
        if !(convergence_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "convergence_tol {convergence_tol} must be > 0"
            )));
        }
        Ok(Self {
            domain,
            kind,
            horizon,
            convergence_tol,
        })
    }

    /// `ℓᵖ_w(ℤ≥1)` truncated at index `horizon`.
    pub fn lp_sequence(p: f64, horizon: f64) -> Result<Self> {
        Self::new(
            Domain::Sequence,
            NormKind::WeightedLp { p },
            horizon,
            DEFAULT_CONVERGENCE_TOL,
        )
    }

    /// `Lᵖ_w(ℝ≥1)` truncated at `horizon`.
    pub fn lp_function(p: f64, horizon: f64) -> Result<Self> {
        Self::new(
            Domain::Function,
            NormKind::WeightedLp { p },
            horizon,
            DEFAULT_CONVERGENCE_TOL,
        )
    }

    pub fn sup(domain: Domain, horizon: f64) -> Result<Self> {
        Self::new(domain, NormKind::Sup, horizon, DEFAULT_CONVERGENCE_TOL)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.convergence_tol = tol;
        self
    }

    pub fn is_quasi_norm(&self) -> bool {
        matches!(self.kind, NormKind::WeightedLp { p } if p < 1.0)
    }

    fn finish(&self, sum: f64, half: f64) -> NormValue {
        let (value, half_value) = match self.kind {
            NormKind::WeightedLp { p } => (sum.powf(1.0 / p), half.powf(1.0 / p)),
            NormKind::Sup => (sum, half),
        };
        let converged = if value == 0.0 {
            true
        } else {
            value.is_finite() && ((value - half_value) / value).abs() < self.convergence_tol
        };
        NormValue {
            value,
            half_value,
            converged,
            quasi: self.is_quasi_norm(),
        }
    }

    fn term(&self, x: f64, at: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeValue { at, value: x });
        }
        Ok(match self.kind {
            NormKind::WeightedLp { p } => x.powf(p),
            NormKind::Sup => x,
        })
    }

    fn sequence_norm(&self, elem: &Element<'_>) -> Result<NormValue> {
        let n = self.horizon.floor() as u64;
        let half_n = n / 2;
        let mut acc = Accumulator::new(self.kind);
        let mut half = 0.0;
        let visit = |j: u64, x: f64, acc: &mut Accumulator| -> Result<()> {
            let term = self.term(x, j as f64)?;
            acc.add(term, j as f64);
            Ok(())
        };
        match *elem {
            Element::Finite(values) => {
                for (i, &x) in values.iter().enumerate().take(n as usize) {
                    let j = i as u64 + 1;
                    visit(j, x, &mut acc)?;
                    if j == half_n {
                        half = acc.total();
                    }
                }
                if (values.len() as u64) < half_n {
                    half = acc.total();
                }
            }
            Element::Indicator { lo, hi } => {
                let lo = lo.max(1);
                for j in lo..=hi.min(n) {
                    visit(j, 1.0, &mut acc)?;
                    if j == half_n {
                        half = acc.total();
                    }
                }
                if hi < half_n {
                    half = acc.total();
                }
            }
            Element::Sequence(f) => {
                for j in 1..=n {
                    visit(j, f(j), &mut acc)?;
                    if j == half_n {
                        half = acc.total();
                    }
                }
            }
            _ => return Err(Error::CarrierMismatch("sequence space given a function")),
        }
        Ok(self.finish(acc.total(), half))
    }

    fn function_norm(&self, elem: &Element<'_>) -> Result<NormValue> {
        let top = self.horizon;
        let mid = 0.5 * top;
        match *elem {
            Element::Steps(steps) => {
                let mut acc = Accumulator::new(self.kind);
                let mut half_acc = Accumulator::new(self.kind);
                for (i, &a) in steps.iter().enumerate() {
                    let n = (i + 1) as f64;
                    if n >= top {
                        break;
                    }
                    let term = self.term(a, n)?;
                    acc.push(term * ((n + 1.0).min(top) / n).ln());
                    if n < mid {
                        half_acc.push(term * ((n + 1.0).min(mid) / n).ln());
                    }
                }
                Ok(self.finish(acc.total(), half_acc.total()))
            }
            Element::Interval { lo, hi } => {
                let measure = |cap: f64| {
                    let (a, b) = (lo.max(1.0), hi.min(cap));
                    if b > a {
                        (b / a).ln()
                    } else {
                        0.0
                    }
                };
                let (full, half) = match self.kind {
                    NormKind::WeightedLp { .. } => (measure(top), measure(mid)),
                    NormKind::Sup => (
                        if measure(top) > 0.0 { 1.0 } else { 0.0 },
                        if measure(mid) > 0.0 { 1.0 } else { 0.0 },
                    ),
                };
                Ok(self.finish(full, half))
            }
            Element::Function { f, breakpoints } => match self.kind {
                NormKind::WeightedLp { p } => {
                    let mut failure = None;
                    let mut g = |u: f64| {
                        let t = u.exp();
                        let x = f(t);
                        if x < 0.0 || x.is_nan() {
                            failure.get_or_insert(Error::NegativeValue { at: t, value: x });
                            0.0
                        } else {
                            x.powf(p)
                        }
                    };
                    let cuts: Vec<f64> = breakpoints
                        .iter()
                        .filter(|b| **b > 1.0 && **b < mid)
                        .map(|b| b.ln())
                        .collect();
                    let opts = QuadOptions::default();
                    let lower = integrate(&mut g, 0.0, mid.ln(), &cuts, opts);
                    let upper_cuts: Vec<f64> = breakpoints
                        .iter()
                        .filter(|b| **b >= mid && **b < top)
                        .map(|b| b.ln())
                        .collect();
                    let upper = integrate(&mut g, mid.ln(), top.ln(), &upper_cuts, opts);
                    if let Some(err) = failure {
                        return Err(err);
                    }
                    Ok(self.finish(lower.value + upper.value, lower.value))
                }
                NormKind::Sup => {
                    let mut pts: Vec<f64> = breakpoints
                        .iter()
                        .copied()
                        .filter(|b| *b >= 1.0 && *b < top)
                        .chain([1.0, mid, top])
                        .collect();
                    pts.sort_by(f64::total_cmp);
                    pts.dedup();
                    let (mut full, mut half) = (0.0_f64, 0.0_f64);
                    for w in pts.windows(2) {
                        let (a, b) = (w[0].ln(), w[1].ln());
                        for k in 0..64 {
                            let t = (a + (b - a) * (k as f64 + 0.5) / 64.0).exp();
                            let x = self.term(f(t), t)?;
                            full = full.max(x);
                            if t < mid {
                                half = half.max(x);
                            }
                        }
                    }
                    Ok(self.finish(full, half))
                }
            },
            _ => Err(Error::CarrierMismatch("function space given a sequence")),
        }
    }
}

/// Neumaier-compensated sum (or a running max for sup norms).
struct Accumulator {
    sup: bool,
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn new(kind: NormKind) -> Self {
        Self {
            sup: matches!(kind, NormKind::Sup),
            sum: 0.0,
            comp: 0.0,
        }
    }

    fn add(&mut self, term: f64, weight: f64) {
        if self.sup {
            self.push(term);
        } else {
            self.push(term / weight);
        }
    }

    fn push(&mut self, x: f64) {
        if self.sup {
            self.sum = self.sum.max(x);
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl NormedSpace for WeightedSpace {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn exponent(&self) -> f64 {
        match self.kind {
            NormKind::WeightedLp { p } => p,
            NormKind::Sup => 1.0,
        }
    }

    fn convergence_tol(&self) -> f64 {
        self.convergence_tol
    }

    fn label(&self) -> String {
        let tag = match self.domain {
            Domain::Sequence => "l",
            Domain::Function => "L",
        };
        match self.kind {
            NormKind::WeightedLp { p } => format!("{tag}^{p}_w"),
            NormKind::Sup => format!("{tag}^inf"),
        }
    }

    fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon: horizon.max(2.0),
            ..*self
        }
    }

    fn norm(&self, elem: &Element<'_>) -> Result<NormValue> {
        if elem.domain() != self.domain {
            return Err(Error::CarrierMismatch(match self.domain {
                Domain::Sequence => "sequence space given a function",
                Domain::Function => "function space given a sequence",
            }));
        }
        match self.domain {
            Domain::Sequence => self.sequence_norm(elem),
            Domain::Function => self.function_norm(elem),
        }
    }

    fn prefix_norms(&self, values: &[f64], ends: &[usize]) -> Result<Vec<f64>> {
        if self.domain != Domain::Sequence {
            return Err(Error::CarrierMismatch("prefix norms need a sequence space"));
        }
        let mut order: Vec<usize> = (0..ends.len()).collect();
        order.sort_by_key(|&i| ends[i]);
        let mut out = vec![0.0; ends.len()];
        let mut acc = Accumulator::new(self.kind);
        let mut j = 0usize;
        for i in order {
            let end = ends[i].min(values.len());
            while j < end {
                acc.add(self.term(values[j], (j + 1) as f64)?, (j + 1) as f64);
                j += 1;
            }
            out[i] = self.finish(acc.total(), acc.total()).value;
        }
        Ok(out)
    }

    fn prefix_norms_fn(&self, f: &dyn Fn(f64) -> f64, ends: &[f64]) -> Result<Vec<f64>> {
        if self.domain != Domain::Function {
            return Err(Error::CarrierMismatch(
                "function prefix norms need a function space",
            ));
        }
        let mut order: Vec<usize> = (0..ends.len()).collect();
        order.sort_by(|&a, &b| ends[a].total_cmp(&ends[b]));
        let mut out = vec![0.0; ends.len()];
        let mut acc = Accumulator::new(self.kind);
        let mut reached = 1.0_f64;
        let mut failure = None;
        for i in order {
            let end = ends[i];
            if end > reached {
                let (a, b) = (reached.ln(), end.ln());
                match self.kind {
                    NormKind::WeightedLp { p } => {
                        let piece = integrate(
                            |u| {
                                let t = u.exp();
                                let x = f(t);
                                if x < 0.0 || x.is_nan() {
                                    failure.get_or_insert(Error::NegativeValue { at: t, value: x });
                                    0.0
                                } else {
                                    x.powf(p)
                                }
                            },
                            a,
                            b,
                            &[],
                            QuadOptions::default(),
                        );
                        acc.push(piece.value);
                    }
                    NormKind::Sup => {
                        for k in 0..64 {
                            let t = (a + (b - a) * (k as f64 + 0.5) / 64.0).exp();
                            acc.push(self.term(f(t), t)?);
                        }
                    }
                }
                reached = end;
            }
            if let Some(err) = failure.take() {
                return Err(err);
            }
            out[i] = self.finish(acc.total(), acc.total()).value;
        }
        Ok(out)
    }
}

/// Either a weighted space or a lifted sequence space, chosen at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnySpace {
    Weighted(WeightedSpace),
    Lifted(LiftedSpace),
}

impl NormedSpace for AnySpace {
    fn domain(&self) -> Domain {
        match self {
            AnySpace::Weighted(s) => s.domain(),
            AnySpace::Lifted(s) => s.domain(),
        }
    }

    fn horizon(&self) -> f64 {
        match self {
            AnySpace::Weighted(s) => s.horizon(),
            AnySpace::Lifted(s) => s.horizon(),
        }
    }

    fn exponent(&self) -> f64 {
        match self {
            AnySpace::Weighted(s) => s.exponent(),
            AnySpace::Lifted(s) => s.exponent(),
        }
    }

    fn convergence_tol(&self) -> f64 {
        match self {
            AnySpace::Weighted(s) => s.convergence_tol(),
            AnySpace::Lifted(s) => s.convergence_tol(),
        }
    }

    fn label(&self) -> String {
        match self {
            AnySpace::Weighted(s) => s.label(),
            AnySpace::Lifted(s) => s.label(),
        }
    }

    fn with_horizon(&self, horizon: f64) -> Self {
        match self {
            AnySpace::Weighted(s) => AnySpace::Weighted(s.with_horizon(horizon)),
            AnySpace::Lifted(s) => AnySpace::Lifted(s.with_horizon(horizon)),
        }
    }

    fn norm(&self, elem: &Element<'_>) -> Result<NormValue> {
        match self {
            AnySpace::Weighted(s) => s.norm(elem),
            AnySpace::Lifted(s) => s.norm(elem),
        }
    }

    fn prefix_norms(&self, values: &[f64], ends: &[usize]) -> Result<Vec<f64>> {
        match self {
            AnySpace::Weighted(s) => s.prefix_norms(values, ends),
            AnySpace::Lifted(s) => s.prefix_norms(values, ends),
        }
    }

    fn prefix_norms_fn(&self, f: &dyn Fn(f64) -> f64, ends: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnySpace::Weighted(s) => s.prefix_norms_fn(f, ends),
            AnySpace::Lifted(s) => s.prefix_norms_fn(f, ends),
        }
    }
}

/// Result of [`check_norm_axioms`]. `triangle` is `None` when skipped (`p < 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub definiteness: bool,
    pub monotonicity: bool,
    pub triangle: Option<bool>,
    pub homogeneity: bool,
    pub checked_pairs: usize,
    pub warnings: Vec<String>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.definiteness && self.monotonicity && self.homogeneity && self.triangle != Some(false)
    }
}

/// Checks the Banach function norm axioms on probe pairs.
///
/// Probes are value vectors read as finite sequences (sequence spaces) or as
/// step functions on unit intervals `[n, n+1)` (function spaces). Absolute
/// values are taken before evaluation.
pub fn check_norm_axioms(
    sp: &WeightedSpace,
    probes: &[(Vec<f64>, Vec<f64>)],
    scalars: &[f64],
) -> Result<AxiomReport> {
    const REL: f64 = 1e-12;
    let eval = |v: &[f64]| -> Result<f64> {
        let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let elem = match sp.domain {
            Domain::Sequence => Element::Finite(&abs),
            Domain::Function => Element::Steps(&abs),
        };
        sp.norm(&elem).map(|n| n.value)
    };
    let within = sp.horizon.floor() as usize - usize::from(sp.domain == Domain::Function);
    let mut report = AxiomReport {
        definiteness: eval(&[])? == 0.0 && eval(&[0.0; 4])? == 0.0,
        monotonicity: true,
        triangle: if sp.is_quasi_norm() { None } else { Some(true) },
        homogeneity: true,
        checked_pairs: 0,
        warnings: Vec::new(),
    };
    if sp.is_quasi_norm() {
        report
            .warnings
            .push("p < 1: quasi-norm, triangle inequality skipped".to_string());
    }
    for (g, h) in probes {
        report.checked_pairs += 1;
        let (ng, nh) = (eval(g)?, eval(h)?);
        for (v, nv) in [(g, ng), (h, nh)] {
            let visible = v.iter().take(within).any(|x| *x != 0.0);
            if visible != (nv > 0.0) {
                report.definiteness = false;
            }
        }
        let len = g.len().max(h.len());
        let at = |v: &Vec<f64>, i: usize| v.get(i).map_or(0.0, |x| x.abs());
        let lower: Vec<f64> = (0..len).map(|i| at(g, i).min(at(h, i))).collect();
        let nl = eval(&lower)?;
        if nl > ng * (1.0 + REL) || nl > nh * (1.0 + REL) {
            report.monotonicity = false;
        }
        if let Some(ok) = report.triangle.as_mut() {
            let sum: Vec<f64> = (0..len).map(|i| at(g, i) + at(h, i)).collect();
            if eval(&sum)? > (ng + nh) * (1.0 + REL) {
                *ok = false;
            }
        }
        for &z in scalars {
            let scaled: Vec<f64> = g.iter().map(|x| z * x).collect();
            let ns = eval(&scaled)?;
            if (ns - z.abs() * ng).abs() > REL * (z.abs() * ng).max(f64::MIN_POSITIVE) {
                report.homogeneity = false;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn harmonic(n: u64) -> f64 {
        (1..=n).map(|j| 1.0 / j as f64).sum()
    }

    #[test]
    fn l1_indicator_is_harmonic_number() {
        let sp = WeightedSpace::lp_sequence(1.0, 100.0).unwrap();
        let v = sp.norm(&Element::Indicator { lo: 1, hi: 10 }).unwrap();
        assert!((v.value - 2.928_968_253_968_254).abs() < 1e-14);
        assert!(v.converged);
        let ones = [1.0; 10];
        let w = sp.norm(&Element::Finite(&ones)).unwrap();
        assert!((w.value - v.value).abs() < 1e-15);
    }

    #[test]
    fn zero_element_has_zero_norm() {
        for sp in [
            WeightedSpace::lp_sequence(2.0, 50.0).unwrap(),
            WeightedSpace::lp_function(0.5, 50.0).unwrap(),
        ] {
            let z = [0.0; 8];
            let e = match sp.domain {
                Domain::Sequence => Element::Finite(&z),
                Domain::Function => Element::Steps(&z),
            };
            let v = sp.norm(&e).unwrap();
            assert_eq!(v.value, 0.0);
            assert!(v.converged);
        }
    }

    #[test]
    fn interval_up_to_e_has_unit_norm() {
        let sp = WeightedSpace::lp_function(1.0, 100.0).unwrap();
        let exact = sp
            .norm(&Element::Interval {
                lo: 1.0,
                hi: std::f64::consts::E,
            })
            .unwrap();
        assert!((exact.value - 1.0).abs() < 1e-15);
        let f = |t: f64| if t < std::f64::consts::E { 1.0 } else { 0.0 };
        let quad = sp
            .norm(&Element::Function {
                f: &f,
                breakpoints: &[std::f64::consts::E],
            })
            .unwrap();
        assert!((quad.value - 1.0).abs() < 1e-10, "{quad:?}");
    }

    #[test]
    fn negative_values_rejected() {
        let sp = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        assert!(matches!(
            sp.norm(&Element::Finite(&[1.0, -2.0])),
            Err(Error::NegativeValue { .. })
        ));
        let fs = WeightedSpace::lp_function(1.0, 10.0).unwrap();
        let f = |t: f64| 2.0 - t;
        assert!(matches!(
            fs.norm(&Element::Function {
                f: &f,
                breakpoints: &[]
            }),
            Err(Error::NegativeValue { .. })
        ));
    }

    #[test]
    fn domain_mismatch_rejected() {
        let sp = WeightedSpace::lp_sequence(1.0, 10.0).unwrap();
        assert!(matches!(
            sp.norm(&Element::Interval { lo: 1.0, hi: 2.0 }),
            Err(Error::CarrierMismatch(_))
        ));
    }

    #[test]
    fn invalid_space_parameters() {
        assert!(WeightedSpace::lp_sequence(0.0, 10.0).is_err());
        assert!(WeightedSpace::lp_sequence(1.0, 1.5).is_err());
        assert!(WeightedSpace::lp_sequence(1.0, 10.0)
            .unwrap()
            .with_tol(1e-3)
            .is_quasi_norm()
            .eq(&false));
        assert!(WeightedSpace::lp_function(0.5, 10.0)
            .unwrap()
            .is_quasi_norm());
    }

    #[test]
    fn divergent_sequence_not_converged() {
        let sp = WeightedSpace::lp_sequence(1.0, 1e5).unwrap();
        let one = |_: u64| 1.0;
        let v = sp.norm(&Element::Sequence(&one)).unwrap();
        assert!(!v.converged);
        assert!((v.value - harmonic(100_000)).abs() < 1e-9);
    }

    #[test]
    fn prefix_norms_match_truncations() {
        let sp = WeightedSpace::lp_sequence(2.0, 1000.0).unwrap();
        let values: Vec<f64> = (1..=1000).map(|j| 1.0 / j as f64).collect();
        let ends = [1000, 3, 10, 1];
        let fast = sp.prefix_norms(&values, &ends).unwrap();
        for (end, v) in ends.iter().zip(&fast) {
            let slow = sp
                .with_horizon(*end as f64)
                .norm(&Element::Finite(&values[..*end]))
                .unwrap()
                .value;
            assert!((slow - v).abs() < 1e-14);
        }
    }

    #[test]
    fn function_prefix_norms_match_truncations() {
        let sp = WeightedSpace::lp_function(2.0, 1e4).unwrap();
        let f = |t: f64| 2.0 / (t + 1.0);
        let ends = [1e4, 1.0, 1.5, 30.0];
        let fast = sp.prefix_norms_fn(&f, &ends).unwrap();
        assert_eq!(fast[1], 0.0);
        // Oracle: ∫_1^T 4/(t(t+1)^2) dt = 4[ln(t/(t+1)) + 1/(t+1)]_1^T.
        let exact =
            |t: f64| (4.0 * ((t / (t + 1.0)).ln() + 1.0 / (t + 1.0) - 0.5f64.ln() - 0.5)).sqrt();
        for (end, v) in ends.iter().zip(&fast) {
            assert!((exact(*end) - v).abs() < 1e-9, "{end}: {v}");
        }
    }

    #[test]
    fn axioms_hold_for_l2() {
        let sp = WeightedSpace::lp_sequence(2.0, 64.0).unwrap();
        let probes = vec![
            (vec![1.0, 0.0, 3.0], vec![0.5, 2.0]),
            (vec![0.2; 20], vec![-1.0, 4.0, 0.0, 0.7]),
        ];
        let r = check_norm_axioms(&sp, &probes, &[0.0, -2.5, 3.0]).unwrap();
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.triangle, Some(true));
    }

    #[test]
    fn quasi_norm_skips_triangle() {
        let sp = WeightedSpace::lp_sequence(0.5, 64.0).unwrap();
        let r = check_norm_axioms(&sp, &[(vec![1.0], vec![0.0, 1.0])], &[2.0]).unwrap();
        assert_eq!(r.triangle, None);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn monotone_pair_doubles() {
        let sp = WeightedSpace::lp_function(1.0, 64.0).unwrap();
        let g = vec![1.0, 0.5, 0.25];
        let h: Vec<f64> = g.iter().map(|x| 2.0 * x).collect();
        let ng = sp.norm(&Element::Steps(&g)).unwrap().value;
        let nh = sp.norm(&Element::Steps(&h)).unwrap().value;
        assert!(ng <= nh);
        assert!((nh - 2.0 * ng).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn continuous_weight_is_scale_invariant(c in 1.0001f64..50.0, s in 1.0f64..1e3) {
            let sp = WeightedSpace::lp_function(1.0, 1e6).unwrap();
            let exact = sp.norm(&Element::Interval { lo: s, hi: c * s }).unwrap().value;
            prop_assert!((exact - c.ln()).abs() < 1e-10);
            let f = move |t: f64| if t >= s && t < c * s { 1.0 } else { 0.0 };
            let quad = sp
                .norm(&Element::Function { f: &f, breakpoints: &[s, c * s] })
                .unwrap()
                .value;
            prop_assert!((quad - c.ln()).abs() < 1e-10);
        }

        #[test]
        fn finite_support_is_exact(values in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            let sp = WeightedSpace::lp_sequence(1.0, 100.0).unwrap();
            let oracle: f64 = values.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).sum();
            let v = sp.norm(&Element::Finite(&values)).unwrap().value;
            prop_assert!((v - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }

        #[test]
        fn triangle_inequality_l_p(
            g in proptest::collection::vec(0.0f64..5.0, 1..20),
            h in proptest::collection::vec(0.0f64..5.0, 1..20),
            p in 1.0f64..4.0,
        ) {
            let sp = WeightedSpace::lp_sequence(p, 64.0).unwrap();
            let r = check_norm_axioms(&sp, &[(g, h)], &[0.5, -3.0]).unwrap();
            prop_assert!(r.all_passed(), "{:?}", r);
        }
    }
}
