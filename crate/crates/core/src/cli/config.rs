use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datko::{ClassifyConfig, SamplingSequence};
use crate::error::Result;
use crate::flow::{
    gallery, AtomwisePowerCocycle, Carrier, GalleryParams, GrowthBound, IdentitySemiflow, System,
};
use crate::measure::{finite_measure_from_atoms, AtomSpec, Observable, ProbabilitySpace, Sampler};
use crate::spaces::{
    lift_sequence_space, AnySpace, Domain, NormKind, SabParams, Threshold, WeightedSpace,
    DEFAULT_CONVERGENCE_TOL,
};

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Laws,
    GrowthFit,
    DatkoStability,
    DatkoInstability,
    Certificates,
    Classify,
    ClassH,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemSpec {
    Gallery {
        name: String,
        #[serde(default)]
        params: GalleryParams,
    },
    Inline(InlineSystem),
}

/// Atom-wise power cocycle `((t+shift)/(s+shift))^{exponent_j} · I` over
/// the identity semiflow on atoms `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    #[serde(default = "default_inline_name")]
    pub name: String,
    #[serde(default)]
    pub shift: f64,
    pub atoms: Vec<InlineAtom>,
    #[serde(default)]
    pub growth: Option<GrowthBound>,
}

fn default_inline_name() -> String {
    "inline".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineAtom {
    pub id: usize,
    pub weight: f64,
    pub g_value: Vec<f64>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// The measure attached to the system.
    #[default]
    Default,
    FiniteDiscrete {
        atoms: Vec<AtomSpec>,
    },
    /// Uniform on `[lo, hi]^dim`; `dim` defaults to the carrier dimension.
    UniformSampler {
        #[serde(default)]
        dim: Option<usize>,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// The system observable, or the atom table of a finite-discrete measure.
    Default,
    Constant {
        #[serde(default)]
        name: Option<String>,
        value: Vec<f64>,
    },
    /// `g(y) = y₀ e₁` for point sample spaces.
    FirstCoordinate {
        #[serde(default)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierSpec {
    #[default]
    Sequence,
    Function,
    Lifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormSpec {
    #[default]
    Lp,
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default)]
    pub carrier: CarrierSpec,
    #[serde(default)]
    pub norm: NormSpec,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub convergence_tol: Option<f64>,
}

impl Default for SpaceSpec {
    fn default() -> Self {
        Self {
            carrier: CarrierSpec::Sequence,
            norm: NormSpec::Lp,
            p: 1.0,
            horizon: None,
            convergence_tol: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceSpec {
    #[default]
    Linear,
    Quadratic,
    /// `t_j = j^power`, declared in `S(a, b)`.
    Custom {
        power: f64,
        a: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSettings {
    #[serde(default = "default_triples")]
    pub triples: usize,
    #[serde(default = "default_law_lo")]
    pub lo: f64,
    #[serde(default = "default_law_hi")]
    pub hi: f64,
    #[serde(default = "default_law_samples")]
    pub samples: usize,
    #[serde(default = "default_law_tol")]
    pub tol: f64,
}

fn default_triples() -> usize {
    1000
}
fn default_law_lo() -> f64 {
    1.0
}
fn default_law_hi() -> f64 {
    100.0
}
fn default_law_samples() -> usize {
    16
}
fn default_law_tol() -> f64 {
    1e-9
}

impl Default for LawSettings {
    fn default() -> Self {
        Self {
            triples: default_triples(),
            lo: default_law_lo(),
            hi: default_law_hi(),
            samples: default_law_samples(),
            tol: default_law_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSettings {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<u64>,
    #[serde(default = "one")]
    pub delta: f64,
    /// Grid on which the contraction/expansion ratios are scanned.
    #[serde(default = "default_cert_grid")]
    pub grid: Vec<f64>,
    /// Side length of the `(s, r/s)` grid checking the decay and growth bounds.
    #[serde(default = "default_bound_side")]
    pub bound_grid_side: usize,
}

fn default_lambdas() -> Vec<u64> {
    vec![2, 3, 4, 8, 16]
}
fn default_cert_grid() -> Vec<f64> {
    (1..=100).map(f64::from).collect()
}
fn default_bound_side() -> usize {
    32
}

impl Default for CertificateSettings {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            delta: 1.0,
            grid: default_cert_grid(),
            bound_grid_side: default_bound_side(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassHSettings {
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
    #[serde(default = "default_inner")]
    pub inner: Vec<f64>,
    #[serde(default)]
    pub threshold: Option<Threshold>,
}

fn default_multipliers() -> Vec<f64> {
    vec![4.0, 16.0, 64.0, 256.0]
}
fn default_inner() -> Vec<f64> {
    (1..=100).map(f64::from).collect()
}

impl Default for ClassHSettings {
    fn default() -> Self {
        Self {
            multipliers: default_multipliers(),
            inner: default_inner(),
            threshold: None,
        }
    }
}

/// A batch run as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub measure: MeasureSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableSpec>,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    /// Truncation horizon; defaults to 1e5 for sequences and 1e7 for functions.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(default)]
    pub sequence: SequenceSpec,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub laws: LawSettings,
    #[serde(default)]
    pub certificates: CertificateSettings,
    #[serde(default)]
    pub class_h: ClassHSettings,
}

fn default_budget() -> usize {
    1000
}
fn default_observables() -> Vec<ObservableSpec> {
    vec![ObservableSpec::Default]
}
fn default_s_grid() -> Vec<f64> {
    ClassifyConfig::default().s_grid
}
fn default_t_grid() -> Vec<f64> {
    ClassifyConfig::default().t_grid
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> RunError {
    RunError::Validation(format!("{field}: {msg}"))
}

fn check_grid(field: &str, grid: &[f64], min: f64) -> std::result::Result<(), RunError> {
    if grid.is_empty() {
        return Err(invalid(field, "must be nonempty"));
    }
    if let Some(x) = grid.iter().find(|x| !(**x >= min && x.is_finite())) {
        return Err(invalid(
            field,
            format!("entry {x} must be finite and >= {min}"),
        ));
    }
    Ok(())
}

/// The validated, fully resolved form of a configuration.
pub(crate) struct Resolved {
    pub system: System,
    pub observables: Vec<Observable>,
    pub space: AnySpace,
    pub sequence: SamplingSequence,
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Validation(format!("config: {e}")))
    }

    /// The effective truncation horizon of the functional space.
    pub fn effective_horizon(&self) -> f64 {
        self.space
            .horizon
            .or(self.horizon)
            .unwrap_or(match self.space.carrier {
                CarrierSpec::Function => 1e7,
                CarrierSpec::Sequence | CarrierSpec::Lifted => 1e5,
            })
    }

    pub fn validate(&self) -> std::result::Result<(), RunError> {
        if self.analyses.is_empty() {
            return Err(invalid("analyses", "must list at least one analysis"));
        }
        check_grid("s_grid", &self.s_grid, f64::MIN_POSITIVE)?;
        check_grid("t_grid", &self.t_grid, 1.0)?;
        let h = self.effective_horizon();
        if !(h >= 2.0 && h.is_finite()) {
            return Err(invalid("horizon", format!("{h} must be >= 2")));
        }
        if self.budget == 0 {
            return Err(invalid("budget", "must be >= 1"));
        }
        if self.observables.is_empty() {
            return Err(invalid("observables", "must be nonempty"));
        }
        if self.laws.triples == 0 {
            return Err(invalid("laws.triples", "must be >= 1"));
        }
        if self.laws.samples == 0 {
            return Err(invalid("laws.samples", "must be >= 1"));
        }
        if self.certificates.lambdas.is_empty() {
            return Err(invalid("certificates.lambdas", "must be nonempty"));
        }
        check_grid(
            "certificates.grid",
            &self.certificates.grid,
            f64::MIN_POSITIVE,
        )?;
        check_grid("class_h.multipliers", &self.class_h.multipliers, 1.0)?;
        check_grid("class_h.inner", &self.class_h.inner, 1.0)?;
        Ok(())
    }

    fn build_system(&self) -> std::result::Result<System, RunError> {
        match &self.system {
            SystemSpec::Gallery { name, params } => gallery(name, params).map_err(|e| match e {
                crate::Error::UnknownSystem(_) => invalid("system.gallery.name", e),
                other => invalid("system.gallery.params", other),
            }),
            SystemSpec::Inline(spec) => {
                let wrap = |e: crate::Error| invalid("system.inline", e);
                if spec.atoms.is_empty() {
                    return Err(invalid("system.inline.atoms", "must be nonempty"));
                }
                let n = spec.atoms.len();
                let mut exponents = vec![f64::NAN; n];
                for a in &spec.atoms {
                    if a.id >= n || !exponents[a.id].is_nan() {
                        return Err(invalid(
                            "system.inline.atoms",
                            format!("ids must be a permutation of 0..{n}, got {}", a.id),
                        ));
                    }
                    if !a.exponent.is_finite() {
                        return Err(invalid("system.inline.atoms", "exponent must be finite"));
                    }
                    exponents[a.id] = a.exponent;
                }
                let specs: Vec<AtomSpec> = spec
                    .atoms
                    .iter()
                    .map(|a| AtomSpec {
                        id: a.id,
                        weight: a.weight,
                        g_value: a.g_value.clone(),
                    })
                    .collect();
                let (measure, observable) = finite_measure_from_atoms(&specs).map_err(wrap)?;
                let dim = observable.dim();
                let mut cocycle = AtomwisePowerCocycle::new(&spec.name, dim, spec.shift, exponents);
                if let Some(gb) = spec.growth {
                    cocycle = cocycle.with_growth(
                        GrowthBound::new(gb.m, gb.omega, gb.theta)
                            .map_err(|e| invalid("system.inline.growth", e))?,
                    );
                }
                Ok(System {
                    name: spec.name.clone(),
                    semiflow: Arc::new(IdentitySemiflow::new(Carrier::Atoms(n))),
                    cocycle: Arc::new(cocycle),
                    measure,
                    observable,
                })
            }
        }
    }

    fn build_space(&self) -> std::result::Result<AnySpace, RunError> {
        let s = &self.space;
        let kind = match s.norm {
            NormSpec::Lp => NormKind::WeightedLp { p: s.p },
            NormSpec::Sup => NormKind::Sup,
        };
        let tol = s.convergence_tol.unwrap_or(DEFAULT_CONVERGENCE_TOL);
        let h = self.effective_horizon();
        let wrap = |e: crate::Error| invalid("space", e);
        Ok(match s.carrier {
            CarrierSpec::Sequence => AnySpace::Weighted(
                WeightedSpace::new(Domain::Sequence, kind, h, tol).map_err(wrap)?,
            ),
            CarrierSpec::Function => AnySpace::Weighted(
                WeightedSpace::new(Domain::Function, kind, h, tol).map_err(wrap)?,
            ),
            CarrierSpec::Lifted => AnySpace::Lifted(
                lift_sequence_space(
                    WeightedSpace::new(Domain::Function, kind, h, tol).map_err(wrap)?,
                )
                .map_err(wrap)?,
            ),
        })
    }

    fn build_sequence(&self) -> std::result::Result<SamplingSequence, RunError> {
        let seq = match self.sequence {
            SequenceSpec::Linear => SamplingSequence::Linear,
            SequenceSpec::Quadratic => SamplingSequence::Quadratic,
            SequenceSpec::Custom { power, a, b } => {
                if !(power > 0.0 && power.is_finite()) {
                    return Err(invalid("sequence.custom.power", "must be > 0"));
                }
                SamplingSequence::power(
                    power,
                    SabParams::new(a, b).map_err(|e| invalid("sequence.custom", e))?,
                )
            }
        };
        seq.validate().map_err(|e| invalid("sequence", e))?;
        Ok(seq)
    }

    pub(crate) fn resolve(&self) -> std::result::Result<Resolved, RunError> {
        self.validate()?;
        let mut system = self.build_system()?;
        let mut atom_table = None;
        match &self.measure {
            MeasureSpec::Default => {}
            MeasureSpec::FiniteDiscrete { atoms } => {
                let (m, g) =
                    finite_measure_from_atoms(atoms).map_err(|e| invalid("measure.atoms", e))?;
                atom_table = Some(g);
                system = system.with_measure(m);
            }
            MeasureSpec::UniformSampler { dim, lo, hi } => {
                let carrier_dim = match system.semiflow.carrier() {
                    Carrier::Points(d) => d,
                    Carrier::Atoms(_) => {
                        return Err(invalid(
                            "measure",
                            format!(
                                "uniform sampler needs a point carrier; {} uses atoms",
                                system.name
                            ),
                        ))
                    }
                };
                let d = dim.unwrap_or(carrier_dim);
                if d != carrier_dim {
                    return Err(invalid(
                        "measure.dim",
                        format!("{d} differs from the carrier dimension {carrier_dim}"),
                    ));
                }
                let s = Sampler::uniform_box(d, lo.unwrap_or(0.0), hi.unwrap_or(1.0), self.seed)
                    .map_err(|e| invalid("measure", e))?;
                system = system.with_measure(ProbabilitySpace::Sampler(s));
            }
        }
        self.check_support(&system)?;
        let dim = system.cocycle.dim();
        let mut observables = Vec::new();
        let mut names = BTreeMap::new();
        for (i, spec) in self.observables.iter().enumerate() {
            let g = match spec {
                ObservableSpec::Default => atom_table
                    .clone()
                    .unwrap_or_else(|| system.observable.clone()),
                ObservableSpec::Constant { name, value } => Observable::constant(
                    name.clone().unwrap_or_else(|| format!("constant-{i}")),
                    value.clone(),
                ),
                ObservableSpec::FirstCoordinate { name } => Observable::first_coordinate(
                    name.clone().unwrap_or_else(|| "first-coordinate".into()),
                    dim,
                ),
            };
            if g.dim() != dim {
                return Err(invalid(
                    &format!("observables[{i}]"),
                    format!(
                        "dimension {} differs from the state dimension {dim}",
                        g.dim()
                    ),
                ));
            }
            if names.insert(g.name().to_string(), i).is_some() {
                return Err(invalid(
                    &format!("observables[{i}]"),
                    format!("duplicate observable name `{}`", g.name()),
                ));
            }
            observables.push(g);
        }
        Ok(Resolved {
            system,
            observables,
            space: self.build_space()?,
            sequence: self.build_sequence()?,
        })
    }

    fn check_support(&self, system: &System) -> std::result::Result<(), RunError> {
        let carrier = system.semiflow.carrier();
        for y in system.measure.support_sample(4) {
            if !carrier.contains(&y) {
                return Err(invalid(
                    "measure",
                    format!("{y} is outside the carrier {carrier:?} of {}", system.name),
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn classify_config(&self, r: &Resolved) -> ClassifyConfig {
        ClassifyConfig {
            s_grid: self.s_grid.clone(),
            t_grid: self.t_grid.clone(),
            space: r.space,
            sequence: r.sequence.clone(),
            budget: self.budget,
            eps: self.eps.unwrap_or(1e-9),
            lambdas: self.certificates.lambdas.clone(),
            delta: self.certificates.delta,
            cert_grid: self.certificates.grid.clone(),
        }
    }
}

/// Keeps only `Ok` from library calls, mapping errors through `RunError`.
pub(crate) fn lib<T>(r: Result<T>) -> std::result::Result<T, RunError> {
    r.map_err(RunError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormedSpace;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["classify"]}"#,
        )
        .unwrap();
        assert_eq!(c.budget, 1000);
        assert_eq!(c.effective_horizon(), 1e5);
        assert_eq!(c.s_grid.len(), 8);
        assert!(c.resolve().is_ok());
    }

    #[test]
    fn empty_grid_names_field() {
        let c = AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["classify"], "s_grid": []}"#,
        )
        .unwrap();
        let RunError::Validation(msg) = c.validate().unwrap_err() else {
            panic!()
        };
        assert!(msg.starts_with("s_grid"), "{msg}");
    }

    #[test]
    fn unknown_fields_and_systems_rejected() {
        assert!(AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": [], "sgrid": [1]}"#
        )
        .is_err());
        let c = AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "nope"}}, "analyses": ["laws"]}"#,
        )
        .unwrap();
        let Err(RunError::Validation(msg)) = c.resolve().map(|_| ()) else {
            panic!()
        };
        assert!(msg.contains("system.gallery.name"));
    }

    #[test]
    fn inline_system_builds() {
        let c = AnalysisConfig::from_json(
            r#"{"system": {"inline": {"atoms": [
                    {"id": 0, "weight": 0.5, "g_value": [1.0], "exponent": -1.0},
                    {"id": 1, "weight": 0.5, "g_value": [1.0], "exponent": -2.0}]}},
                "analyses": ["laws"]}"#,
        )
        .unwrap();
        let r = c.resolve().unwrap();
        let m = r.system.orbit(1).mean_at(2.0, 1.0).unwrap().value;
        assert!((m - 0.5 * (0.5 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn lifted_space_and_custom_sequence() {
        let c = AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["classify"],
                "sequence": {"custom": {"power": 2, "a": 1, "b": 2}},
                "space": {"carrier": "lifted", "p": 2},
                "class_h": {"threshold": {"kind": "half-log-root", "p": 1}}}"#,
        )
        .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.space.domain(), Domain::Sequence);
        assert_eq!(r.sequence.value(3), 9.0);
        let bad = AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["classify"],
                "sequence": {"custom": {"power": 2, "a": 1, "b": 1}}}"#,
        )
        .unwrap();
        let Err(RunError::Validation(msg)) = bad.resolve().map(|_| ()) else {
            panic!()
        };
        assert!(msg.starts_with("sequence"), "{msg}");
    }

    #[test]
    fn sampler_needs_point_carrier() {
        let c = AnalysisConfig::from_json(
            r#"{"system": {"gallery": {"name": "partitioned-decay"}},
                "measure": {"kind": "uniform-sampler"}, "analyses": ["laws"]}"#,
        )
        .unwrap();
        assert!(matches!(
            c.resolve().map(|_| ()),
            Err(RunError::Validation(_))
        ));
    }
}
