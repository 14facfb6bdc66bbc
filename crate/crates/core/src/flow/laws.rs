//! Grid checks of the semiflow and cocycle algebraic laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cocycle, SamplePoint, Semiflow, TimePair};
use crate::error::{Error, Result};

/// Times `t ≥ r ≥ s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTriple {
    pub t: f64,
    pub r: f64,
    pub s: f64,
}

impl TimeTriple {
    pub fn new(t: f64, r: f64, s: f64) -> Result<Self> {
        TimePair::new(t, r)?;
        TimePair::new(r, s)?;
        Ok(Self { t, r, s })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub t: f64,
    pub r: f64,
    pub s: f64,
    pub sample: SamplePoint,
}

/// Outcome of a law check: the largest defect found over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub max_residual: f64,
    pub grid_size: usize,
    pub worst_case: Option<WorstCase>,
    pub tol: f64,
    pub passed: bool,
}

impl LawReport {
    fn new(tol: f64) -> Self {
        Self {
            max_residual: 0.0,
            grid_size: 0,
            worst_case: None,
            tol,
            passed: true,
        }
    }

    fn record(&mut self, residual: f64, tt: TimeTriple, sample: &SamplePoint) {
        self.grid_size += 1;
        // NaN residuals count as failures.
        if residual > self.max_residual || (residual.is_nan() && !self.max_residual.is_nan()) {
            self.max_residual = residual;
            self.worst_case = Some(WorstCase {
                t: tt.t,
                r: tt.r,
                s: tt.s,
                sample: sample.clone(),
            });
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.max_residual <= self.tol;
        self
    }
}

/// Deterministic low-discrepancy triples in `[lo, hi]`.
///
/// Points of the additive recurrence with the plastic-number generator,
/// rotated by a seeded random offset, sorted into `t ≥ r ≥ s`.
pub fn random_triples(n: usize, seed: u64, lo: f64, hi: f64) -> Result<Vec<TimeTriple>> {
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "triple range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
        )));
    }
    // Plastic number: root of x^3 = x + 1.
    let g = 1.324_717_957_244_746_f64;
    let alpha = [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let span = hi - lo;
    Ok((1..=n)
        .map(|k| {
            let mut u = [0.0; 3];
            for d in 0..3 {
                u[d] = (offset[d] + alpha[d] * k as f64).fract();
            }
            u.sort_by(|a, b| a.total_cmp(b));
            TimeTriple {
                t: lo + span * u[2],
                r: lo + span * u[1],
                s: lo + span * u[0],
            }
        })
        .collect())
}

/// Maximum defect of `ζ(t,s,v) = ζ(t,r,ζ(r,s,v))` and `ζ(t,t,v) = v` over the grid.
pub fn check_semiflow_laws(
    sf: &dyn Semiflow,
    grid: &[TimeTriple],
    samples: &[SamplePoint],
    tol: f64,
) -> Result<LawReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid("time triples"));
    }
    if samples.is_empty() {
        return Err(Error::EmptyGrid("samples"));
    }
    let mut report = LawReport::new(tol);
    for &tt in grid {
        let ts = TimePair::new(tt.t, tt.s)?;
        let tr = TimePair::new(tt.t, tt.r)?;
        let rs = TimePair::new(tt.r, tt.s)?;
        for v in samples {
            let direct = sf.evolve(ts, v)?;
            let stepped = sf.evolve(tr, &sf.evolve(rs, v)?)?;
            let ident = sf.evolve(TimePair::diagonal(tt.s)?, v)?;
            let residual = direct.distance(&stepped).max(ident.distance(v));
            report.record(residual, tt, v);
        }
    }
    Ok(report.finish())
}

/// Maximum of `‖Φ(t,s,v)x − Φ(t,r,ζ(r,s,v))Φ(r,s,v)x‖/‖x‖` and the identity
/// defect `‖Φ(s,s,v)x − x‖/‖x‖` over grid, samples and probes.
pub fn check_cocycle_laws(
    cz: &dyn Cocycle,
    sf: &dyn Semiflow,
    grid: &[TimeTriple],
    samples: &[SamplePoint],
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<LawReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid("time triples"));
    }
    if samples.is_empty() {
        return Err(Error::EmptyGrid("samples"));
    }
    if probes.is_empty() {
        return Err(Error::EmptyGrid("probes"));
    }
    for x in probes {
        if x.len() != cz.dim() {
            return Err(Error::DimensionMismatch {
                expected: cz.dim(),
                got: x.len(),
            });
        }
        if crate::norm2(x) == 0.0 {
            return Err(Error::ZeroProbe);
        }
    }
    let mut report = LawReport::new(tol);
    for &tt in grid {
        let ts = TimePair::new(tt.t, tt.s)?;
        let tr = TimePair::new(tt.t, tt.r)?;
        let rs = TimePair::new(tt.r, tt.s)?;
        let diag = TimePair::diagonal(tt.s)?;
        for v in samples {
            sf.carrier().require(v)?;
            let moved = sf.evolve(rs, v)?;
            for x in probes {
                let nx = crate::norm2(x);
                let direct = cz.act(ts, v, x)?;
                let stepped = cz.act(tr, &moved, &cz.act(rs, v, x)?)?;
                let ident = cz.act(diag, v, x)?;
                let residual = (crate::distance2(&direct, &stepped) / nx)
                    .max(crate::distance2(&ident, x) / nx);
                report.record(residual, tt, v);
            }
        }
    }
    Ok(report.finish())
}

/// Result of checking a claimed [`super::GrowthBound`] on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `‖Φx‖ / (M (t/s)^ω ‖x‖)`; at most 1 when the bound holds.
    pub worst_ratio: f64,
}

/// Checks `‖Φ(t,s,y)x‖ ≤ M (t/s)^ω ‖x‖` for every pair with `s ≥ θ`.
///
/// Pairs with `s < θ` are skipped. A relative slack of `1e-12` absorbs rounding.
pub fn verify_growth_bound(
    cz: &dyn Cocycle,
    pairs: &[TimePair],
    samples: &[SamplePoint],
    probes: &[Vec<f64>],
) -> Result<GrowthCheck> {
    let gb = cz
        .growth()
        .ok_or_else(|| Error::InvalidParams(format!("{} has no growth bound", cz.name())))?;
    let mut check = GrowthCheck {
        checked: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for &tp in pairs.iter().filter(|tp| tp.s() >= gb.theta) {
        let bound = gb.factor(tp);
        for v in samples {
            for x in probes {
                let nx = crate::norm2(x);
                if nx == 0.0 {
                    return Err(Error::ZeroProbe);
                }
                let ratio = crate::norm2(&cz.act(tp, v, x)?) / (bound * nx);
                check.checked += 1;
                if ratio > 1.0 + 1e-12 {
                    check.violations += 1;
                }
                check.worst_ratio = check.worst_ratio.max(ratio);
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Carrier, FnSemiflow, RatioPowerCocycle, ScalingSemiflow};

    #[test]
    fn triples_are_ordered_and_reproducible() {
        let a = random_triples(200, 7, 1.0, 100.0).unwrap();
        let b = random_triples(200, 7, 1.0, 100.0).unwrap();
        assert_eq!(a, b);
        for tt in &a {
            assert!(tt.t >= tt.r && tt.r >= tt.s && tt.s >= 1.0 && tt.t <= 100.0);
        }
        assert_ne!(a, random_triples(200, 8, 1.0, 100.0).unwrap());
    }

    #[test]
    fn scaling_semiflow_is_associative_on_grid() {
        let sf = ScalingSemiflow::new(3);
        let grid = random_triples(50, 1, 0.0, 50.0).unwrap();
        let samples = vec![SamplePoint::point(vec![0.0, 1.0, -0.5])];
        let report = check_semiflow_laws(&sf, &grid, &samples, 1e-9).unwrap();
        assert!(report.max_residual <= 1e-12, "{report:?}");
        assert!(report.passed);
        assert_eq!(report.grid_size, 50);
    }

    #[test]
    fn degenerate_grid_has_zero_residual() {
        let sf = ScalingSemiflow::new(1);
        let cz = RatioPowerCocycle::new("il", 1, 1.0, -1.0);
        let grid = vec![TimeTriple::new(2.0, 2.0, 2.0).unwrap()];
        let samples = vec![SamplePoint::point(vec![1.0])];
        let r = check_semiflow_laws(&sf, &grid, &samples, 1e-9).unwrap();
        assert_eq!(r.max_residual, 0.0);
        let r = check_cocycle_laws(&cz, &sf, &grid, &samples, &[vec![3.0]], 1e-9).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn broken_semiflow_reports_worst_case() {
        let sf = FnSemiflow::new("broken", Carrier::Points(1), |tp, v| match v {
            SamplePoint::Point(c) => SamplePoint::Point(c.iter().map(|x| x + tp.t()).collect()),
            other => other.clone(),
        });
        let grid = random_triples(50, 3, 0.0, 10.0).unwrap();
        let samples = vec![SamplePoint::point(vec![0.0])];
        let r = check_semiflow_laws(&sf, &grid, &samples, 1e-9).unwrap();
        assert!(!r.passed);
        assert!(r.max_residual > 1e-9);
        assert!(r.worst_case.is_some());
    }

    #[test]
    fn inverse_linear_cocycle_telescopes() {
        let sf = ScalingSemiflow::new(2);
        let cz = RatioPowerCocycle::new("il", 2, 1.0, -1.0);
        let grid = random_triples(50, 11, 0.0, 100.0).unwrap();
        let samples = vec![SamplePoint::point(vec![0.2, 0.4])];
        let probes = vec![vec![1.0, 0.0], vec![-2.0, 3.0]];
        let r = check_cocycle_laws(&cz, &sf, &grid, &samples, &probes, 1e-9).unwrap();
        assert!(r.max_residual <= 1e-12, "{r:?}");
    }

    #[test]
    fn cocycle_check_errors() {
        let sf = ScalingSemiflow::new(1);
        let cz = RatioPowerCocycle::new("il", 1, 1.0, -1.0);
        let samples = vec![SamplePoint::point(vec![0.0])];
        assert_eq!(
            check_cocycle_laws(&cz, &sf, &[], &samples, &[vec![1.0]], 1e-9),
            Err(Error::EmptyGrid("time triples"))
        );
        let grid = random_triples(3, 0, 0.0, 1.0).unwrap();
        assert_eq!(
            check_cocycle_laws(&cz, &sf, &grid, &samples, &[vec![0.0]], 1e-9),
            Err(Error::ZeroProbe)
        );
        assert!(TimeTriple::new(1.0, 2.0, 0.0).is_err());
    }
}
