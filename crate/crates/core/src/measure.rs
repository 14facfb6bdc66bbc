//! Probability spaces, `L¹(M, P)` observables and the mean functional
//! `E_P ‖Φ(t,s,·) g(·)‖`.
//!
//! Finite-discrete measures are integrated exactly; sampler measures use
//! seeded Monte Carlo. A given seed always produces the same draws, so every
//! mean evaluated with one sampler is a deterministic function of `(t, s)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Cocycle, SamplePoint, Semiflow, TimePair};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finite measure `Σ w_j δ_{y_j}` with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure {
    atoms: Vec<(SamplePoint, f64)>,
}

impl FiniteMeasure {
    pub fn new(atoms: Vec<(SamplePoint, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParams(
                "finite measure needs at least one atom".into(),
            ));
        }
        if let Some((_, w)) = atoms.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "atom weight {w} must be >= 0"
            )));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Equal weights on the given points.
    pub fn uniform(points: Vec<SamplePoint>) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let mut atoms: Vec<_> = points.into_iter().map(|p| (p, w)).collect();
        // Absorb rounding so the sum is 1 within tolerance for any count.
        let head = atoms.len().saturating_sub(1) as f64 * w;
        if let Some(last) = atoms.last_mut() {
            last.1 = 1.0 - head;
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(SamplePoint, f64)] {
        &self.atoms
    }
}

/// Distribution of a seeded sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Independent uniform coordinates on `[lo, hi]^dim`.
    UniformBox { dim: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub seed: u64,
    /// Stream index within the seed; distinct streams are independent.
    #[serde(default)]
    pub stream: u64,
}

impl Sampler {
    pub fn uniform_box(dim: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if dim == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParams(format!(
                "uniform box needs dim >= 1 and lo < hi, got dim={dim}, [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            kind: SamplerKind::UniformBox { dim, lo, hi },
            seed,
            stream: 0,
        })
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// The first `n` draws of this sampler's stream.
    pub fn draw(&self, n: usize) -> Vec<SamplePoint> {
        let mut rng = self.rng();
        match self.kind {
            SamplerKind::UniformBox { dim, lo, hi } => (0..n)
                .map(|_| SamplePoint::Point((0..dim).map(|_| rng.gen_range(lo..hi)).collect()))
                .collect(),
        }
    }
}

/// The probability space `(M, B, P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilitySpace {
    FiniteDiscrete(FiniteMeasure),
    Sampler(Sampler),
}

impl ProbabilitySpace {
    pub fn finite(atoms: Vec<(SamplePoint, f64)>) -> Result<Self> {
        FiniteMeasure::new(atoms).map(Self::FiniteDiscrete)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::FiniteDiscrete(_))
    }

    /// Representative sample points: all atoms, or the first `n` draws.
    pub fn support_sample(&self, n: usize) -> Vec<SamplePoint> {
        match self {
            Self::FiniteDiscrete(m) => m.atoms.iter().map(|(p, _)| p.clone()).collect(),
            Self::Sampler(s) => s.draw(n),
        }
    }

    /// `∫ f(y) dP(y)` for a nonnegative integrand.
    fn integrate(
        &self,
        budget: usize,
        mut f: impl FnMut(&SamplePoint) -> Result<f64>,
    ) -> Result<MeanEstimate> {
        match self {
            Self::FiniteDiscrete(m) => {
                let mut value = 0.0;
                for (y, w) in &m.atoms {
                    if *w == 0.0 {
                        continue;
                    }
                    value += w * f(y)?;
                }
                Ok(MeanEstimate {
                    value,
                    stderr: 0.0,
                    n_samples: m.atoms.len(),
                })
            }
            Self::Sampler(s) => {
                if budget == 0 {
                    return Err(Error::ZeroBudget);
                }
                let mut rng = s.rng();
                let SamplerKind::UniformBox { dim, lo, hi } = s.kind;
                // Welford accumulation.
                let (mut mean, mut m2) = (0.0_f64, 0.0_f64);
                let mut coords = vec![0.0; dim];
                for k in 1..=budget {
                    for c in coords.iter_mut() {
                        *c = rng.gen_range(lo..hi);
                    }
                    let y = SamplePoint::Point(coords.clone());
                    let x = f(&y)?;
                    let delta = x - mean;
                    mean += delta / k as f64;
                    m2 += delta * (x - mean);
                }
                let stderr = if budget > 1 {
                    (m2 / (budget - 1) as f64).sqrt() / (budget as f64).sqrt()
                } else {
                    0.0
                };
                Ok(MeanEstimate {
                    value: mean,
                    stderr,
                    n_samples: budget,
                })
            }
        }
    }
}

type ObservableMap = Arc<dyn Fn(&SamplePoint) -> Vec<f64> + Send + Sync>;

/// An element `g ∈ L¹(M, P; X)`.
#[derive(Clone)]
pub struct Observable {
    name: String,
    dim: usize,
    eval: ObservableMap,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&SamplePoint) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
        }
    }

    /// `g(y) = value` for every `y`.
    pub fn constant(name: impl Into<String>, value: Vec<f64>) -> Self {
        let dim = value.len();
        Self::new(name, dim, move |_| value.clone())
    }

    /// `g(y) = y₀ · e₁`, the first sample coordinate along the first axis.
    pub fn first_coordinate(name: impl Into<String>, dim: usize) -> Self {
        Self::new(name, dim, move |y| {
            let mut out = vec![0.0; dim];
            if let (Some(c), Some(o)) = (y.coords().and_then(|c| c.first()), out.first_mut()) {
                *o = *c;
            }
            out
        })
    }

    /// Atom-indexed table; atoms missing from the table map to zero.
    pub fn table(name: impl Into<String>, dim: usize, values: BTreeMap<usize, Vec<f64>>) -> Self {
        Self::new(name, dim, move |y| match y {
            SamplePoint::Atom(j) => values.get(j).cloned().unwrap_or_else(|| vec![0.0; dim]),
            SamplePoint::Point(_) => vec![0.0; dim],
        })
    }

    /// `λ g`.
    pub fn scaled(&self, factor: f64) -> Self {
        let inner = self.eval.clone();
        Self::new(format!("{}*{factor}", self.name), self.dim, move |y| {
            inner(y).into_iter().map(|v| v * factor).collect()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, y: &SamplePoint) -> Vec<f64> {
        (self.eval)(y)
    }
}

/// Estimate of a nonnegative mean; `stderr` is zero for exact integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// `‖g‖₁ = ∫ ‖g(y)‖ dP(y)`.
pub fn l1_norm(g: &Observable, p: &ProbabilitySpace, budget: usize) -> Result<MeanEstimate> {
    p.integrate(budget, |y| Ok(crate::norm2(&g.eval(y))))
}

/// `∫ ‖Φ(t,s,y) g(y)‖ dP(y)`.
pub fn mean_norm(
    cz: &dyn Cocycle,
    sf: &dyn Semiflow,
    tp: TimePair,
    g: &Observable,
    p: &ProbabilitySpace,
    budget: usize,
) -> Result<MeanEstimate> {
    if g.dim() != cz.dim() {
        return Err(Error::DimensionMismatch {
            expected: cz.dim(),
            got: g.dim(),
        });
    }
    let carrier = sf.carrier();
    p.integrate(budget, |y| {
        carrier.require(y)?;
        Ok(crate::norm2(&cz.act(tp, y, &g.eval(y))?))
    })
}

/// The data needed to evaluate `t ↦ E‖Φ(t,s,·)g‖`: a skew-evolution
/// semiflow, a probability space, one observable and a sample budget.
#[derive(Clone, Copy)]
pub struct Orbit<'a> {
    pub cocycle: &'a dyn Cocycle,
    pub semiflow: &'a dyn Semiflow,
    pub measure: &'a ProbabilitySpace,
    pub observable: &'a Observable,
    pub budget: usize,
}

impl<'a> Orbit<'a> {
    pub fn new(
        cocycle: &'a dyn Cocycle,
        semiflow: &'a dyn Semiflow,
        measure: &'a ProbabilitySpace,
        observable: &'a Observable,
        budget: usize,
    ) -> Self {
        Self {
            cocycle,
            semiflow,
            measure,
            observable,
            budget,
        }
    }

    pub fn mean(&self, tp: TimePair) -> Result<MeanEstimate> {
        mean_norm(
            self.cocycle,
            self.semiflow,
            tp,
            self.observable,
            self.measure,
            self.budget,
        )
    }

    /// Mean at `(t, s)` given by scalars, validating the order.
    pub fn mean_at(&self, t: f64, s: f64) -> Result<MeanEstimate> {
        self.mean(TimePair::new(t, s)?)
    }

    pub fn l1(&self) -> Result<MeanEstimate> {
        l1_norm(self.observable, self.measure, self.budget)
    }
}

/// Outcome of [`injectivity_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub injective: bool,
    /// Smallest `mean(ts, s) / ‖g‖₁` on the grid.
    pub min_ratio: f64,
    /// `(t·s, s)` where the minimum was found.
    pub argmin: (f64, f64),
    pub eps: f64,
    pub checked: usize,
}

/// Checks `∫‖Φ(ts,s,y)g(y)‖dP > eps·‖g‖₁` for every `s ∈ s_grid`, `t ∈ t_grid`.
///
/// `t_grid` holds multipliers `t ≥ 1`. A zero observable is rejected.
pub fn injectivity_check(
    orbit: &Orbit<'_>,
    s_grid: &[f64],
    t_grid: &[f64],
    eps: f64,
) -> Result<InjectivityReport> {
    if s_grid.is_empty() {
        return Err(Error::EmptyGrid("s_grid"));
    }
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid("t_grid"));
    }
    let l1 = orbit.l1()?.value;
    if l1 <= 0.0 {
        return Err(Error::ZeroObservable);
    }
    let mut report = InjectivityReport {
        injective: true,
        min_ratio: f64::INFINITY,
        argmin: (f64::NAN, f64::NAN),
        eps,
        checked: 0,
    };
    for &s in s_grid {
        for &t in t_grid {
            if t < 1.0 {
                return Err(Error::InvalidParams(format!(
                    "multiplier t = {t} must be >= 1"
                )));
            }
            let ratio = orbit.mean_at(t * s, s)?.value / l1;
            report.checked += 1;
            if ratio < report.min_ratio {
                report.min_ratio = ratio;
                report.argmin = (t * s, s);
            }
        }
    }
    report.injective = report.min_ratio > eps;
    Ok(report)
}

/// One atom of a finite measure as written in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub id: usize,
    pub weight: f64,
    pub g_value: Vec<f64>,
}

/// Builds a finite measure on atom ids and the atom-table observable from
/// a list of `{id, weight, g_value}` records.
pub fn finite_measure_from_atoms(atoms: &[AtomSpec]) -> Result<(ProbabilitySpace, Observable)> {
    let dim = atoms
        .first()
        .map(|a| a.g_value.len())
        .ok_or_else(|| Error::InvalidParams("atom list is empty".into()))?;
    let mut table = BTreeMap::new();
    for a in atoms {
        if a.g_value.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.g_value.len(),
            });
        }
        if table.insert(a.id, a.g_value.clone()).is_some() {
            return Err(Error::InvalidParams(format!("duplicate atom id {}", a.id)));
        }
    }
    let measure = ProbabilitySpace::finite(
        atoms
            .iter()
            .map(|a| (SamplePoint::Atom(a.id), a.weight))
            .collect(),
    )?;
    Ok((measure, Observable::table("atom-table", dim, table)))
}

/// Parses a JSON array of `{id, weight, g_value}` records.
pub fn load_finite_measure(json: &str) -> Result<(ProbabilitySpace, Observable)> {
    let atoms: Vec<AtomSpec> =
        serde_json::from_str(json).map_err(|e| Error::InvalidParams(format!("atom list: {e}")))?;
    finite_measure_from_atoms(&atoms)
}
