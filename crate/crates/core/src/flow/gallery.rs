//! Closed-form example systems.
//!
//! | name                     | cocycle                               | in-mean behaviour            |
//! |--------------------------|---------------------------------------|------------------------------|
//! | `inverse-linear`         | `(s+1)/(t+1) · I` over path scaling   | stable, not exponentially    |
//! | `linear-growth`          | `(t+1)/(s+1) · I` over path scaling   | unstable                     |
//! | `partitioned-decay`      | atom-wise `(t/s)^{-α_j}`, `α₀ = 0`    | stable, not pathwise stable  |
//! | `evolution-family-power` | `((s+1)/(t+1))^k · I` over a shift    | stable                       |
//! | `constant-identity`      | `I`                                   | neither                      |

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{
    AtomwisePowerCocycle, Carrier, Cocycle, EvolutionFamilyLift, GrowthBound, HomogeneousLift,
    IdentitySemiflow, RatioPowerCocycle, SamplePoint, ScalingSemiflow, Semiflow,
};
use crate::error::{Error, Result};
use crate::measure::{FiniteMeasure, Observable, Orbit, ProbabilitySpace};

pub const GALLERY_NAMES: [&str; 5] = [
    "inverse-linear",
    "linear-growth",
    "partitioned-decay",
    "evolution-family-power",
    "constant-identity",
];

/// Numeric gallery parameters by name.
pub type GalleryParams = BTreeMap<String, f64>;

/// A fully wired skew-evolution semiflow with a default measure and observable.
#[derive(Clone)]
pub struct System {
    pub name: String,
    pub semiflow: Arc<dyn Semiflow>,
    pub cocycle: Arc<dyn Cocycle>,
    pub measure: ProbabilitySpace,
    pub observable: Observable,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("name", &self.name)
            .field("semiflow", &self.semiflow.name())
            .field("cocycle", &self.cocycle.name())
            .field("measure", &self.measure)
            .field("observable", &self.observable)
            .finish()
    }
}

impl System {
    /// Orbit of the default observable.
    pub fn orbit(&self, budget: usize) -> Orbit<'_> {
        Orbit::new(
            self.cocycle.as_ref(),
            self.semiflow.as_ref(),
            &self.measure,
            &self.observable,
            budget,
        )
    }

    /// Orbit of another observable under the default measure.
    pub fn orbit_of<'a>(&'a self, g: &'a Observable, budget: usize) -> Orbit<'a> {
        Orbit::new(
            self.cocycle.as_ref(),
            self.semiflow.as_ref(),
            &self.measure,
            g,
            budget,
        )
    }

    pub fn with_measure(mut self, measure: ProbabilitySpace) -> Self {
        self.measure = measure;
        self
    }
}

struct Params<'a> {
    name: &'a str,
    raw: &'a GalleryParams,
}

impl Params<'_> {
    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.raw.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidParams(format!(
                "`{}` does not accept parameter `{k}` (allowed: {})",
                self.name,
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    fn count(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        let Some(&v) = self.raw.get(key) else {
            return Ok(default);
        };
        if v.fract() != 0.0 || v < min as f64 || v > 1e6 {
            return Err(Error::InvalidParams(format!(
                "`{key}` must be an integer >= {min}, got {v}"
            )));
        }
        Ok(v as usize)
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.raw.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("`{key}` must be finite")));
        }
        Ok(v)
    }
}

fn unit_vector(dim: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    e
}

/// Tabulated paths `v_i(τ_m) = (i+1)·m/nodes`, all starting at `v(0) = 0`.
fn path_atoms(atoms: usize, nodes: usize) -> Result<ProbabilitySpace> {
    let points = (0..atoms)
        .map(|i| {
            SamplePoint::Point(
                (0..nodes)
                    .map(|m| (i + 1) as f64 * m as f64 / nodes as f64)
                    .collect(),
            )
        })
        .collect();
    FiniteMeasure::uniform(points).map(ProbabilitySpace::FiniteDiscrete)
}

fn path_system(name: &str, p: &Params<'_>, exponent: f64, growth: GrowthBound) -> Result<System> {
    p.check_keys(&["dim", "atoms", "nodes"])?;
    let dim = p.count("dim", 1, 1)?;
    let atoms = p.count("atoms", 4, 1)?;
    let nodes = p.count("nodes", 3, 1)?;
    Ok(System {
        name: name.to_string(),
        semiflow: Arc::new(ScalingSemiflow::new(nodes)),
        cocycle: Arc::new(RatioPowerCocycle::new(name, dim, 1.0, exponent).with_growth(growth)),
        measure: path_atoms(atoms, nodes)?,
        observable: Observable::constant("unit", unit_vector(dim)),
    })
}

/// Builds the named gallery system.
pub fn gallery(name: &str, params: &GalleryParams) -> Result<System> {
    let p = Params { name, raw: params };
    match name {
        "inverse-linear" => path_system(name, &p, -1.0, GrowthBound::new(2.0, -1.0, 1.0)?),
        "linear-growth" => path_system(name, &p, 1.0, GrowthBound::new(1.0, 1.0, 1.0)?),
        "constant-identity" => path_system(name, &p, 0.0, GrowthBound::new(1.0, 0.0, 1.0)?),
        "partitioned-decay" => {
            p.check_keys(&["dim", "J", "alpha"])?;
            let dim = p.count("dim", 1, 1)?;
            let j_max = p.count("J", 8, 1)?;
            let alpha = p.real("alpha", 1.0)?;
            if alpha <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "`alpha` must be > 0, got {alpha}"
                )));
            }
            // w₀ = 0, w_j = c·2^{-j} with c normalizing the total to one.
            let c = 1.0 / (1.0 - 0.5_f64.powi(j_max as i32));
            let mut atoms = vec![(SamplePoint::Atom(0), 0.0)];
            atoms.extend((1..=j_max).map(|j| (SamplePoint::Atom(j), c * 0.5_f64.powi(j as i32))));
            let mut exponents = vec![0.0];
            exponents.extend(std::iter::repeat_n(-alpha, j_max));
            Ok(System {
                name: name.to_string(),
                semiflow: Arc::new(IdentitySemiflow::new(Carrier::Atoms(j_max + 1))),
                cocycle: Arc::new(
                    AtomwisePowerCocycle::new(name, dim, 0.0, exponents)
                        .with_growth(GrowthBound::new(1.0, 0.0, 1.0)?),
                ),
                measure: ProbabilitySpace::finite(atoms)?,
                observable: Observable::constant("unit", unit_vector(dim)),
            })
        }
        "evolution-family-power" => {
            p.check_keys(&["dim", "k", "atoms"])?;
            let dim = p.count("dim", 1, 1)?;
            let atoms = p.count("atoms", 4, 1)?;
            let k = p.real("k", 2.0)?;
            if k <= 0.0 {
                return Err(Error::InvalidParams(format!("`k` must be > 0, got {k}")));
            }
            let family = move |tp: super::TimePair| {
                let c = ((tp.s() + 1.0) / (tp.t() + 1.0)).powf(k);
                let mut u = vec![0.0; dim * dim];
                for i in 0..dim {
                    u[i * dim + i] = c;
                }
                u
            };
            let points = (0..atoms)
                .map(|i| SamplePoint::Point(vec![i as f64 / atoms as f64]))
                .collect();
            Ok(System {
                name: name.to_string(),
                semiflow: Arc::new(HomogeneousLift::shift(1)),
                cocycle: Arc::new(
                    EvolutionFamilyLift::new(name, dim, family).with_growth(GrowthBound::new(
                        2f64.powf(k),
                        -k,
                        1.0,
                    )?),
                ),
                measure: FiniteMeasure::uniform(points).map(ProbabilitySpace::FiniteDiscrete)?,
                observable: Observable::constant("unit", unit_vector(dim)),
            })
        }
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{check_cocycle_laws, random_triples, verify_growth_bound, TimePair};

    fn build(name: &str) -> System {
        gallery(name, &GalleryParams::new()).unwrap()
    }

    #[test]
    fn inverse_linear_mean_at_three_one() {
        let sys = build("inverse-linear");
        let m = sys.orbit(1).mean_at(3.0, 1.0).unwrap();
        assert_eq!(m.value, 0.5);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn constant_identity_mean_is_l1() {
        let sys = build("constant-identity");
        for (t, s) in [(1.0, 0.0), (7.0, 3.0), (100.0, 2.5)] {
            assert_eq!(sys.orbit(1).mean_at(t, s).unwrap().value, 1.0);
        }
    }

    #[test]
    fn partitioned_decay_mean_at_ten_s() {
        let mut params = GalleryParams::new();
        params.insert("J".into(), 8.0);
        let sys = gallery("partitioned-decay", &params).unwrap();
        // Oracle: Σ_{j≥1} w_j·(1/10), zero-weight atom excluded.
        let c = 1.0 / (1.0 - 2f64.powi(-8));
        let oracle: f64 = (1..=8).map(|j| c * 2f64.powi(-j) * 0.1).sum();
        for s in [1.0, 3.0, 20.0] {
            let m = sys.orbit(1).mean_at(10.0 * s, s).unwrap().value;
            assert!((m - oracle).abs() < 1e-15);
            assert!((m - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn partitioned_decay_is_not_pathwise_stable() {
        let sys = build("partitioned-decay");
        let out = sys
            .cocycle
            .act(
                TimePair::new(1e6, 1.0).unwrap(),
                &SamplePoint::Atom(0),
                &[1.0],
            )
            .unwrap();
        assert_eq!(out, vec![1.0]);
    }

    #[test]
    fn partitioned_decay_laws_hold() {
        let sys = build("partitioned-decay");
        let grid = random_triples(50, 5, 1.0, 100.0).unwrap();
        let samples = sys.measure.support_sample(0);
        let r = check_cocycle_laws(
            sys.cocycle.as_ref(),
            sys.semiflow.as_ref(),
            &grid,
            &samples,
            &[vec![1.0]],
            1e-9,
        )
        .unwrap();
        assert!(r.max_residual <= 1e-12, "{r:?}");
    }

    #[test]
    fn unknown_and_invalid() {
        assert_eq!(
            gallery("nope", &GalleryParams::new()).unwrap_err(),
            Error::UnknownSystem("nope".into())
        );
        let mut params = GalleryParams::new();
        params.insert("J".into(), 0.0);
        assert!(gallery("partitioned-decay", &params).is_err());
        params.insert("J".into(), 2.5);
        assert!(gallery("partitioned-decay", &params).is_err());
        let mut params = GalleryParams::new();
        params.insert("bogus".into(), 1.0);
        assert!(gallery("inverse-linear", &params).is_err());
    }

    #[test]
    fn growth_bounds_hold_on_grid() {
        let pairs: Vec<TimePair> = [1.0, 1.5, 2.0, 5.0, 30.0]
            .iter()
            .flat_map(|&s| {
                [1.0, 1.1, 2.0, 10.0, 1e3]
                    .iter()
                    .map(move |&m| TimePair::new(m * s, s).unwrap())
            })
            .collect();
        for name in GALLERY_NAMES {
            let sys = build(name);
            let samples = sys.measure.support_sample(0);
            let check =
                verify_growth_bound(sys.cocycle.as_ref(), &pairs, &samples, &[vec![1.0]]).unwrap();
            assert_eq!(check.violations, 0, "{name}: {check:?}");
            assert!(check.checked > 0);
        }
    }

    #[test]
    fn multi_dimensional_state() {
        let mut params = GalleryParams::new();
        params.insert("dim".into(), 3.0);
        let sys = gallery("evolution-family-power", &params).unwrap();
        assert_eq!(sys.cocycle.dim(), 3);
        let m = sys.orbit(1).mean_at(3.0, 1.0).unwrap().value;
        assert!((m - 0.25).abs() < 1e-15);
    }
}
