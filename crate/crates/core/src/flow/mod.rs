//! Stochastic evolution semiflows and cocycles.
//!
//! A semiflow `ζ: T × M → M` moves sample points forward in a two-time
//! fashion (`ζ(t,t,v) = v`, `ζ(t,s,v) = ζ(t,r,ζ(r,s,v))`). A cocycle
//! `Φ: T × M → L(X)` acts on a finite-dimensional state space over it and
//! satisfies `Φ(t,t,v) = I` and `Φ(t,s,v) = Φ(t,r,ζ(r,s,v)) Φ(r,s,v)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod gallery;
pub mod laws;

pub use gallery::{gallery, GalleryParams, System, GALLERY_NAMES};
pub use laws::{
    check_cocycle_laws, check_semiflow_laws, random_triples, verify_growth_bound, GrowthCheck,
    LawReport, TimeTriple, WorstCase,
};

/// A pair of times `t ≥ s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePair {
    t: f64,
    s: f64,
}

impl TimePair {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidTime(s));
        }
        if !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        if t < s {
            return Err(Error::TimeOrder { t, s });
        }
        Ok(Self { t, s })
    }

    /// The diagonal pair `(t, t)`.
    pub fn diagonal(t: f64) -> Result<Self> {
        Self::new(t, t)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// A point of the sample space `M`.
///
/// Finite models use atom indices; path and parameter models use real
/// coordinate vectors (a tabulated path is the vector of its node values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplePoint {
    Atom(usize),
    Point(Vec<f64>),
}

impl SamplePoint {
    pub fn point(coords: impl Into<Vec<f64>>) -> Self {
        Self::Point(coords.into())
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Self::Point(c) => Some(c),
            Self::Atom(_) => None,
        }
    }

    /// Distance used by the law checks: Euclidean for points, discrete for atoms.
    pub fn distance(&self, other: &SamplePoint) -> f64 {
        match (self, other) {
            (Self::Atom(a), Self::Atom(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            (Self::Point(a), Self::Point(b)) if a.len() == b.len() => {
                let scale = crate::norm2(a).max(1.0);
                crate::distance2(a, b) / scale
            }
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Atom(j) => write!(f, "atom {j}"),
            Self::Point(c) => write!(f, "point {c:?}"),
        }
    }
}

/// The declared sample space of a semiflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Carrier {
    /// Atoms `0..count`.
    Atoms(usize),
    /// Real vectors of the given length.
    Points(usize),
}

impl Carrier {
    pub fn contains(&self, v: &SamplePoint) -> bool {
        match (self, v) {
            (Carrier::Atoms(n), SamplePoint::Atom(j)) => j < n,
            (Carrier::Points(d), SamplePoint::Point(c)) => {
                c.len() == *d && c.iter().all(|x| x.is_finite())
            }
            _ => false,
        }
    }

    pub(crate) fn require(&self, v: &SamplePoint) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::OutsideCarrier(format!("{v} not in {self:?}")))
        }
    }
}

/// Claimed polynomial growth `‖Φ(t,s,y)x‖ ≤ M (t/s)^ω ‖x‖` for `t ≥ s ≥ θ`.
///
/// `omega` is signed: negative values encode pathwise polynomial stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub m: f64,
    pub omega: f64,
    pub theta: f64,
}

impl GrowthBound {
    pub fn new(m: f64, omega: f64, theta: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "growth constant M = {m} must be > 0"
            )));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "threshold θ = {theta} must be > 0"
            )));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParams(format!(
                "exponent ω = {omega} must be finite"
            )));
        }
        Ok(Self { m, omega, theta })
    }

    /// `M (t/s)^ω`.
    pub fn factor(&self, tp: TimePair) -> f64 {
        self.m * (tp.t() / tp.s()).powf(self.omega)
    }
}

/// A stochastic evolution semiflow `ζ`.
pub trait Semiflow: Send + Sync {
    fn name(&self) -> &str;

    fn carrier(&self) -> Carrier;

    /// `ζ(t, s, v)` for a point already known to lie in the carrier.
    fn flow(&self, tp: TimePair, v: &SamplePoint) -> SamplePoint;

    /// `ζ(t, s, v)` with carrier validation.
    fn evolve(&self, tp: TimePair, v: &SamplePoint) -> Result<SamplePoint> {
        self.carrier().require(v)?;
        Ok(self.flow(tp, v))
    }
}

/// A stochastic evolution cocycle `Φ` acting on `ℝ^dim`.
pub trait Cocycle: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn growth(&self) -> Option<GrowthBound> {
        None
    }

    /// `Φ(t, s, v) x`. Implementations may reject times outside their domain.
    fn act(&self, tp: TimePair, v: &SamplePoint, x: &[f64]) -> Result<Vec<f64>>;
}

/// `ζ(t, s, v)` with validation of `v` against the carrier.
pub fn evolve_state(sf: &dyn Semiflow, tp: TimePair, v: &SamplePoint) -> Result<SamplePoint> {
    sf.evolve(tp, v)
}

/// `Φ(t, s, v) x` with dimension and carrier validation.
pub fn apply_cocycle(
    cz: &dyn Cocycle,
    sf: &dyn Semiflow,
    tp: TimePair,
    v: &SamplePoint,
    x: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != cz.dim() {
        return Err(Error::DimensionMismatch {
            expected: cz.dim(),
            got: x.len(),
        });
    }
    sf.carrier().require(v)?;
    cz.act(tp, v, x)
}

/// `ζ(t,s,v)(τ) = ((t+1)/(s+1)) v(τ)` on tabulated paths.
#[derive(Debug, Clone)]
pub struct ScalingSemiflow {
    nodes: usize,
}

impl ScalingSemiflow {
    pub fn new(nodes: usize) -> Self {
        Self { nodes }
    }
}

impl Semiflow for ScalingSemiflow {
    fn name(&self) -> &str {
        "path-scaling"
    }

    fn carrier(&self) -> Carrier {
        Carrier::Points(self.nodes)
    }

    fn flow(&self, tp: TimePair, v: &SamplePoint) -> SamplePoint {
        let factor = (tp.t() + 1.0) / (tp.s() + 1.0);
        match v {
            SamplePoint::Point(c) => SamplePoint::Point(c.iter().map(|x| factor * x).collect()),
            SamplePoint::Atom(_) => v.clone(),
        }
    }
}

type HomogeneousMap = Arc<dyn Fn(f64, &SamplePoint) -> SamplePoint + Send + Sync>;

/// `ζ(t, s, v) = φ(t − s, v)` for a one-parameter semiflow `φ`.
#[derive(Clone)]
pub struct HomogeneousLift {
    name: String,
    carrier: Carrier,
    phi: HomogeneousMap,
}

impl HomogeneousLift {
    pub fn new(
        name: impl Into<String>,
        carrier: Carrier,
        phi: impl Fn(f64, &SamplePoint) -> SamplePoint + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            carrier,
            phi: Arc::new(phi),
        }
    }

    /// The parametric shift `φ(τ, v) = v + τ` on `ℝ^dim`.
    pub fn shift(dim: usize) -> Self {
        Self::new("parameter-shift", Carrier::Points(dim), |tau, v| match v {
            SamplePoint::Point(c) => SamplePoint::Point(c.iter().map(|x| x + tau).collect()),
            SamplePoint::Atom(_) => v.clone(),
        })
    }
}

impl Semiflow for HomogeneousLift {
    fn name(&self) -> &str {
        &self.name
    }

    fn carrier(&self) -> Carrier {
        self.carrier
    }

    fn flow(&self, tp: TimePair, v: &SamplePoint) -> SamplePoint {
        (self.phi)(tp.t() - tp.s(), v)
    }
}

/// `ζ(t, s, v) = v`.
#[derive(Debug, Clone)]
pub struct IdentitySemiflow {
    carrier: Carrier,
}

impl IdentitySemiflow {
    pub fn new(carrier: Carrier) -> Self {
        Self { carrier }
    }
}

impl Semiflow for IdentitySemiflow {
    fn name(&self) -> &str {
        "identity"
    }

    fn carrier(&self) -> Carrier {
        self.carrier
    }

    fn flow(&self, _tp: TimePair, v: &SamplePoint) -> SamplePoint {
        v.clone()
    }
}

type SemiflowMap = Arc<dyn Fn(TimePair, &SamplePoint) -> SamplePoint + Send + Sync>;

/// A semiflow given by an arbitrary closure. Laws are not assumed.
#[derive(Clone)]
pub struct FnSemiflow {
    name: String,
    carrier: Carrier,
    f: SemiflowMap,
}

impl FnSemiflow {
    pub fn new(
        name: impl Into<String>,
        carrier: Carrier,
        f: impl Fn(TimePair, &SamplePoint) -> SamplePoint + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            carrier,
            f: Arc::new(f),
        }
    }
}

impl Semiflow for FnSemiflow {
    fn name(&self) -> &str {
        &self.name
    }

    fn carrier(&self) -> Carrier {
        self.carrier
    }

    fn flow(&self, tp: TimePair, v: &SamplePoint) -> SamplePoint {
        (self.f)(tp, v)
    }
}

/// Scalar cocycle `Φ(t,s,v) = ((t + shift)/(s + shift))^exponent · I`.
///
/// `shift = 1, exponent = -1` is the inverse-linear cocycle; `exponent = 1`
/// its reciprocal; `exponent = 0` the identity.
#[derive(Debug, Clone)]
pub struct RatioPowerCocycle {
    name: String,
    dim: usize,
    shift: f64,
    exponent: f64,
    growth: Option<GrowthBound>,
}

impl RatioPowerCocycle {
    pub fn new(name: impl Into<String>, dim: usize, shift: f64, exponent: f64) -> Self {
        Self {
            name: name.into(),
            dim,
            shift,
            exponent,
            growth: None,
        }
    }

    pub fn with_growth(mut self, growth: GrowthBound) -> Self {
        self.growth = Some(growth);
        self
    }

    pub fn factor(&self, tp: TimePair) -> Result<f64> {
        ratio_power(tp, self.shift, self.exponent)
    }
}

fn ratio_power(tp: TimePair, shift: f64, exponent: f64) -> Result<f64> {
    if tp.t() == tp.s() || exponent == 0.0 {
        return Ok(1.0);
    }
    let den = tp.s() + shift;
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "s + {shift} must be positive, got s = {}",
            tp.s()
        )));
    }
    Ok(((tp.t() + shift) / den).powf(exponent))
}

impl Cocycle for RatioPowerCocycle {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn growth(&self) -> Option<GrowthBound> {
        self.growth
    }

    fn act(&self, tp: TimePair, _v: &SamplePoint, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.factor(tp)?;
        Ok(x.iter().map(|xi| c * xi).collect())
    }
}

/// Atom-wise scalar cocycle `Φ(t,s,j) = ((t + shift)/(s + shift))^{exponents[j]} · I`.
#[derive(Debug, Clone)]
pub struct AtomwisePowerCocycle {
    name: String,
    dim: usize,
    shift: f64,
    exponents: Vec<f64>,
    growth: Option<GrowthBound>,
}

impl AtomwisePowerCocycle {
    pub fn new(name: impl Into<String>, dim: usize, shift: f64, exponents: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            dim,
            shift,
            exponents,
            growth: None,
        }
    }

    pub fn with_growth(mut self, growth: GrowthBound) -> Self {
        self.growth = Some(growth);
        self
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }
}

impl Cocycle for AtomwisePowerCocycle {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn growth(&self) -> Option<GrowthBound> {
        self.growth
    }

    fn act(&self, tp: TimePair, v: &SamplePoint, x: &[f64]) -> Result<Vec<f64>> {
        let j = match v {
            SamplePoint::Atom(j) if *j < self.exponents.len() => *j,
            other => {
                return Err(Error::OutsideCarrier(format!(
                    "{other} not an atom of {}",
                    self.name
                )))
            }
        };
        let c = ratio_power(tp, self.shift, self.exponents[j])?;
        Ok(x.iter().map(|xi| c * xi).collect())
    }
}

type FamilyMap = Arc<dyn Fn(TimePair) -> Vec<f64> + Send + Sync>;

/// Lift `Φ_U(t, s, v) = U(t, s)` of a deterministic evolution family.
///
/// The family returns `U(t, s)` as a row-major `dim × dim` matrix.
#[derive(Clone)]
pub struct EvolutionFamilyLift {
    name: String,
    dim: usize,
    family: FamilyMap,
    growth: Option<GrowthBound>,
}

impl EvolutionFamilyLift {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        family: impl Fn(TimePair) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            family: Arc::new(family),
            growth: None,
        }
    }

    pub fn with_growth(mut self, growth: GrowthBound) -> Self {
        self.growth = Some(growth);
        self
    }
}

impl Cocycle for EvolutionFamilyLift {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn growth(&self) -> Option<GrowthBound> {
        self.growth
    }

    fn act(&self, tp: TimePair, _v: &SamplePoint, x: &[f64]) -> Result<Vec<f64>> {
        let u = (self.family)(tp);
        let n = self.dim;
        if u.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: u.len(),
            });
        }
        Ok((0..n)
            .map(|i| (0..n).map(|k| u[i * n + k] * x[k]).sum())
            .collect())
    }
}

type CocycleMap = Arc<dyn Fn(TimePair, &SamplePoint, &[f64]) -> Vec<f64> + Send + Sync>;

/// A cocycle given by an arbitrary closure. Laws are not assumed.
#[derive(Clone)]
pub struct FnCocycle {
    name: String,
    dim: usize,
    f: CocycleMap,
}

impl FnCocycle {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(TimePair, &SamplePoint, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            f: Arc::new(f),
        }
    }
}

impl Cocycle for FnCocycle {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn act(&self, tp: TimePair, v: &SamplePoint, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(tp, v, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(t: f64, s: f64) -> TimePair {
        TimePair::new(t, s).unwrap()
    }

    #[test]
    fn time_pair_rejects_reverse_order() {
        assert_eq!(
            TimePair::new(1.0, 3.0),
            Err(Error::TimeOrder { t: 1.0, s: 3.0 })
        );
        assert!(TimePair::new(2.0, -1.0).is_err());
        assert!(TimePair::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn scaling_semiflow_doubles_path() {
        let sf = ScalingSemiflow::new(3);
        let v = SamplePoint::point(vec![0.0, 1.5, -2.0]);
        let out = evolve_state(&sf, tp(3.0, 1.0), &v).unwrap();
        assert_eq!(out, SamplePoint::point(vec![0.0, 3.0, -4.0]));
    }

    #[test]
    fn semiflow_identity_at_equal_times() {
        let sf = ScalingSemiflow::new(2);
        let v = SamplePoint::point(vec![0.3, 0.7]);
        assert_eq!(evolve_state(&sf, tp(4.0, 4.0), &v).unwrap(), v);
    }

    #[test]
    fn shift_lift_moves_by_elapsed_time() {
        let sf = HomogeneousLift::shift(1);
        let v = SamplePoint::point(vec![0.25]);
        let out = evolve_state(&sf, tp(5.0, 2.0), &v).unwrap();
        assert_eq!(out, SamplePoint::point(vec![3.25]));
    }

    #[test]
    fn evolve_rejects_points_outside_carrier() {
        let sf = ScalingSemiflow::new(3);
        let err = evolve_state(&sf, tp(1.0, 0.0), &SamplePoint::point(vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::OutsideCarrier(_)));
        assert!(evolve_state(&sf, tp(1.0, 0.0), &SamplePoint::Atom(0)).is_err());
    }

    #[test]
    fn inverse_linear_cocycle_halves_at_three_one() {
        let sf = ScalingSemiflow::new(1);
        let cz = RatioPowerCocycle::new("inverse-linear", 1, 1.0, -1.0);
        let v = SamplePoint::point(vec![0.0]);
        let out = apply_cocycle(&cz, &sf, tp(3.0, 1.0), &v, &[1.0]).unwrap();
        assert_eq!(out, vec![0.5]);
        let same = apply_cocycle(&cz, &sf, tp(2.0, 2.0), &v, &[4.0]).unwrap();
        assert_eq!(same, vec![4.0]);
    }

    #[test]
    fn evolution_family_lift_squares_ratio() {
        let sf = HomogeneousLift::shift(1);
        let cz = EvolutionFamilyLift::new("power-2", 1, |tp| {
            vec![((tp.s() + 1.0) / (tp.t() + 1.0)).powi(2)]
        });
        let out = apply_cocycle(
            &cz,
            &sf,
            tp(3.0, 1.0),
            &SamplePoint::point(vec![0.0]),
            &[1.0],
        )
        .unwrap();
        assert_eq!(out, vec![0.25]);
    }

    #[test]
    fn apply_checks_dimension() {
        let sf = ScalingSemiflow::new(1);
        let cz = RatioPowerCocycle::new("id", 2, 1.0, 0.0);
        let err = apply_cocycle(
            &cz,
            &sf,
            tp(1.0, 0.0),
            &SamplePoint::point(vec![0.0]),
            &[1.0],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn atomwise_cocycle_rejects_zero_base_time() {
        let cz = AtomwisePowerCocycle::new("p", 1, 0.0, vec![0.0, -1.0]);
        assert!(cz.act(tp(2.0, 0.0), &SamplePoint::Atom(1), &[1.0]).is_err());
        assert_eq!(
            cz.act(tp(0.0, 0.0), &SamplePoint::Atom(1), &[1.0]).unwrap(),
            vec![1.0]
        );
        assert_eq!(
            cz.act(tp(8.0, 2.0), &SamplePoint::Atom(1), &[1.0]).unwrap(),
            vec![0.25]
        );
    }

    #[test]
    fn growth_bound_validation() {
        assert!(GrowthBound::new(0.0, 1.0, 1.0).is_err());
        assert!(GrowthBound::new(1.0, 1.0, 0.0).is_err());
        let gb = GrowthBound::new(2.0, -1.0, 1.0).unwrap();
        assert_eq!(gb.factor(tp(4.0, 2.0)), 1.0);
    }
}
