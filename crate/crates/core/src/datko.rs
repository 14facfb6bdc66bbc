//! Datko-type functionals, growth fits, lemma constants and the classifier.
//!
//! For a base time `s` and observable `g` the stability traces are
//! `ψ_{s,g}(j) = E‖Φ(t_j s, s)g‖` (discrete, sampled along `t_j`) and
//! `f_{s,g}(t) = E‖Φ(ts, s)g‖` (continuous). Instability traces use the
//! reciprocals of the same means. A system is declared stable in mean when the
//! stability norms are finite and converged on every `s` of the grid, and
//! unstable in mean when the reciprocal norms are, with injectivity. These
//! verdicts are numerical evidence on finite grids.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Cocycle, GrowthBound, Semiflow, TimePair};
use crate::measure::{injectivity_check, InjectivityReport, Observable, Orbit, ProbabilitySpace};
use crate::spaces::{check_sab, AnySpace, Domain, Element, NormedSpace, SabParams, WeightedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Stability,
    Instability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeKind {
    Discrete,
    Continuous,
}

type SequenceMap = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// Sampling times `t_j` of the discrete functionals.
#[derive(Clone)]
pub enum SamplingSequence {
    /// `t_j = j`, in `S(1, 1)`.
    Linear,
    /// `t_j = j²`, in `S(1, 2)`.
    Quadratic,
    /// A user sequence with its declared `S(a, b)` parameters.
    Custom {
        name: String,
        f: SequenceMap,
        params: SabParams,
    },
}

impl fmt::Debug for SamplingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl SamplingSequence {
    /// `t_j = j^q` declared in `S(a, b)`.
    pub fn power(q: f64, params: SabParams) -> Self {
        SamplingSequence::Custom {
            name: format!("j^{q}"),
            f: Arc::new(move |j| (j as f64).powf(q)),
            params,
        }
    }

    pub fn value(&self, j: u64) -> f64 {
        match self {
            SamplingSequence::Linear => j as f64,
            SamplingSequence::Quadratic => (j as f64) * (j as f64),
            SamplingSequence::Custom { f, .. } => f(j),
        }
    }

    pub fn params(&self) -> SabParams {
        match self {
            SamplingSequence::Linear => SabParams { a: 1.0, b: 1.0 },
            SamplingSequence::Quadratic => SabParams { a: 1.0, b: 2.0 },
            SamplingSequence::Custom { params, .. } => *params,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SamplingSequence::Linear => "linear".into(),
            SamplingSequence::Quadratic => "quadratic".into(),
            SamplingSequence::Custom { name, .. } => name.clone(),
        }
    }

    /// Checks membership in the declared `S(a, b)` on `m ≤ 16`, `n ≤ 256`
    /// and rejects sequences that look bounded.
    ///
    /// Bounded sequences force every mean to vanish; that degenerate case is
    /// not handled by the trace functionals.
    pub fn validate(&self) -> Result<()> {
        let f = |j: u64| self.value(j);
        let report = check_sab(&f, self.params(), 1..=16, 1..=256)?;
        if !report.holds {
            return Err(Error::InvalidParams(format!(
                "sequence {} is not in S({}, {}): ratio {} at (m, n) = {:?}",
                self.label(),
                self.params().a,
                self.params().b,
                report.worst_ratio,
                report.worst_at
            )));
        }
        if !(self.value(1 << 20) >= 2.0 * self.value(1)) {
            return Err(Error::InvalidParams(format!(
                "sequence {} appears bounded; bounded sampling sequences are not supported",
                self.label()
            )));
        }
        Ok(())
    }
}

/// One recorded row of a trace: index (or time), mean, term entering the
/// norm, and the norm of the trace up to that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub mean: f64,
    pub term: f64,
    pub partial_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatkoTrace {
    pub functional: Functional,
    pub time: TimeKind,
    pub s: f64,
    pub observable: String,
    pub space: String,
    pub sequence: Option<String>,
    pub horizon: f64,
    pub norm_value: f64,
    pub half_value: f64,
    pub converged: bool,
    /// First-order Monte Carlo error carried to the norm; zero for exact measures.
    pub stderr_bound: f64,
    pub samples: Vec<TracePoint>,
    /// Every term of a discrete trace.
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl DatkoTrace {
    /// `index,mean,term,partial_norm` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,mean,term,partial_norm\n");
        for p in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.x, p.mean, p.term, p.partial_norm
            ));
        }
        out
    }
}

fn check_base_time(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "base time s = {s} must be > 0"
        )));
    }
    Ok(())
}

fn term_of(functional: Functional, mean: f64, t: f64, s: f64) -> Result<f64> {
    match functional {
        Functional::Stability => Ok(mean),
        Functional::Instability => {
            if mean == 0.0 {
                Err(Error::ZeroMean { t, s })
            } else {
                Ok(1.0 / mean)
            }
        }
    }
}

fn stderr_of(functional: Functional, mean: f64, stderr: f64) -> f64 {
    match functional {
        Functional::Stability => stderr,
        Functional::Instability => stderr / (mean * mean),
    }
}

/// Indices `1..=100`, then about 20 per decade, always ending at `n`.
fn record_indices(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=n.min(100)).collect();
    let mut k = 0;
    loop {
        let j = (100.0 * 10f64.powf(k as f64 / 20.0)).round() as usize;
        if j >= n {
            break;
        }
        if out.last() != Some(&j) {
            out.push(j);
        }
        k += 1;
    }
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

fn discrete_trace<S: NormedSpace>(
    orbit: &Orbit<'_>,
    functional: Functional,
    s: f64,
    seq: &SamplingSequence,
    space: &S,
    horizon: u64,
) -> Result<DatkoTrace> {
    check_base_time(s)?;
    seq.validate()?;
    if space.domain() != Domain::Sequence {
        return Err(Error::CarrierMismatch(
            "discrete functional needs a sequence space",
        ));
    }
    if horizon < 2 {
        return Err(Error::InvalidParams(format!(
            "horizon {horizon} must be >= 2"
        )));
    }
    if functional == Functional::Instability && orbit.l1()?.value <= 0.0 {
        return Err(Error::ZeroObservable);
    }
    let n = horizon as usize;
    let mut means = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut errs = Vec::with_capacity(n);
    for j in 1..=horizon {
        let t = seq.value(j) * s;
        let m = orbit.mean(TimePair::new(t, s)?)?;
        values.push(term_of(functional, m.value, t, s)?);
        errs.push(stderr_of(functional, m.value, m.stderr));
        means.push(m.value);
    }
    let space = space.with_horizon(horizon as f64);
    let norm = space.norm(&Element::Finite(&values))?;
    let stderr_bound = if errs.iter().any(|e| *e > 0.0) {
        space.norm(&Element::Finite(&errs))?.value
    } else {
        0.0
    };
    let at = record_indices(n);
    let partial = space.prefix_norms(&values, &at)?;
    let samples = at
        .iter()
        .zip(partial)
        .map(|(&j, partial_norm)| TracePoint {
            x: j as f64,
            mean: means[j - 1],
            term: values[j - 1],
            partial_norm,
        })
        .collect();
    Ok(DatkoTrace {
        functional,
        time: TimeKind::Discrete,
        s,
        observable: orbit.observable.name().to_string(),
        space: space.label(),
        sequence: Some(seq.label()),
        horizon: horizon as f64,
        norm_value: norm.value,
        half_value: norm.half_value,
        converged: norm.converged,
        stderr_bound,
        samples,
        values,
    })
}

fn geometric_points(top: f64, per_decade: usize) -> Vec<f64> {
    let decades = top.log10();
    let steps = (decades * per_decade as f64).ceil() as usize;
    (0..=steps)
        .map(|k| 10f64.powf(k as f64 / per_decade as f64))
        .filter(|t| *t < top)
        .collect()
}

fn continuous_trace<S: NormedSpace>(
    orbit: &Orbit<'_>,
    functional: Functional,
    s: f64,
    space: &S,
    horizon: f64,
    sample_at: &[f64],
) -> Result<DatkoTrace> {
    check_base_time(s)?;
    if space.domain() != Domain::Function {
        return Err(Error::CarrierMismatch(
            "continuous functional needs a function space",
        ));
    }
    if !(horizon >= 2.0 && horizon.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "horizon {horizon} must be >= 2"
        )));
    }
    if functional == Functional::Instability && orbit.l1()?.value <= 0.0 {
        return Err(Error::ZeroObservable);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let eval = |t: f64| -> (f64, f64) {
        let run = || -> Result<(f64, f64)> {
            let m = orbit.mean(TimePair::new(t * s, s)?)?;
            Ok((
                term_of(functional, m.value, t * s, s)?,
                stderr_of(functional, m.value, m.stderr),
            ))
        };
        match run() {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                (0.0, 0.0)
            }
        }
    };
    let f = |t: f64| eval(t).0;
    let space = space.with_horizon(horizon);
    let norm = space.norm(&Element::Function {
        f: &f,
        breakpoints: &[],
    })?;
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let stderr_bound = if orbit.measure.is_exact() {
        0.0
    } else {
        let fe = |t: f64| eval(t).1;
        space
            .norm(&Element::Function {
                f: &fe,
                breakpoints: &[],
            })?
            .value
    };
    let mut at: Vec<f64> = if sample_at.is_empty() {
        geometric_points(horizon, 10)
    } else {
        sample_at
            .iter()
            .copied()
            .filter(|t| *t >= 1.0 && *t <= horizon)
            .collect()
    };
    at.sort_by(f64::total_cmp);
    at.dedup();
    if at.last() != Some(&horizon) {
        at.push(horizon);
    }
    let partial = space.prefix_norms_fn(&f, &at)?;
    let mut samples = Vec::with_capacity(at.len());
    for (&t, partial_norm) in at.iter().zip(partial) {
        // The last row carries the full norm so the CSV ends at `norm_value`.
        let partial_norm = if t == horizon {
            norm.value
        } else {
            partial_norm
        };
        let m = orbit.mean(TimePair::new(t * s, s)?)?;
        samples.push(TracePoint {
            x: t,
            mean: m.value,
            term: term_of(functional, m.value, t * s, s)?,
            partial_norm,
        });
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    Ok(DatkoTrace {
        functional,
        time: TimeKind::Continuous,
        s,
        observable: orbit.observable.name().to_string(),
        space: space.label(),
        sequence: None,
        horizon,
        norm_value: norm.value,
        half_value: norm.half_value,
        converged: norm.converged,
        stderr_bound,
        samples,
        values: Vec::new(),
    })
}

/// `|ψ_{s,g}|` with `ψ_{s,g}(j) = E‖Φ(t_j s, s)g‖`, truncated at `horizon` terms.
pub fn datko_discrete<S: NormedSpace>(
    orbit: &Orbit<'_>,
    s: f64,
    seq: &SamplingSequence,
    space: &S,
    horizon: u64,
) -> Result<DatkoTrace> {
    discrete_trace(orbit, Functional::Stability, s, seq, space, horizon)
}

/// `|f_{s,g}|` with `f_{s,g}(t) = E‖Φ(ts, s)g‖` on `[1, horizon]`.
///
/// `sample_at` lists the times recorded in the trace (default: 10 per decade).
pub fn datko_continuous<S: NormedSpace>(
    orbit: &Orbit<'_>,
    s: f64,
    space: &S,
    horizon: f64,
    sample_at: &[f64],
) -> Result<DatkoTrace> {
    continuous_trace(orbit, Functional::Stability, s, space, horizon, sample_at)
}

/// Discrete trace of reciprocal means `1 / E‖Φ(t_j s, s)g‖`.
pub fn instability_discrete<S: NormedSpace>(
    orbit: &Orbit<'_>,
    s: f64,
    seq: &SamplingSequence,
    space: &S,
    horizon: u64,
) -> Result<DatkoTrace> {
    discrete_trace(orbit, Functional::Instability, s, seq, space, horizon)
}

/// Continuous trace of reciprocal means `1 / E‖Φ(ts, s)g‖`.
pub fn instability_continuous<S: NormedSpace>(
    orbit: &Orbit<'_>,
    s: f64,
    space: &S,
    horizon: f64,
    sample_at: &[f64],
) -> Result<DatkoTrace> {
    continuous_trace(orbit, Functional::Instability, s, space, horizon, sample_at)
}

/// Least-squares power law `E‖Φ(ts,s)g‖ / ‖g‖₁ ≈ M t^ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Smallest `M` making `M t^ω̂` an upper bound on the grid.
    pub m_hat: f64,
    pub omega_hat: f64,
    /// Least-squares intercept of `ln ratio` on `ln t`.
    pub intercept: f64,
    /// Max relative deviation from the least-squares line.
    pub residual: f64,
    /// `(t, s, ratio)` for every grid point.
    pub points: Vec<(f64, f64, f64)>,
}

pub fn fit_growth(orbit: &Orbit<'_>, s_grid: &[f64], t_grid: &[f64]) -> Result<GrowthFit> {
    if s_grid.is_empty() {
        return Err(Error::EmptyGrid("s_grid"));
    }
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid("t_grid"));
    }
    let lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t_grid.iter().copied().fold(0.0, f64::max);
    if lo < 1.0 || hi / lo < 100.0 {
        return Err(Error::InvalidParams(format!(
            "t_grid must lie in [1, ∞) and span two decades, got [{lo}, {hi}]"
        )));
    }
    let l1 = orbit.l1()?.value;
    if l1 <= 0.0 {
        return Err(Error::ZeroObservable);
    }
    let mut points = Vec::new();
    let mut xy = Vec::new();
    for &s in s_grid {
        check_base_time(s)?;
        for &t in t_grid {
            let m = orbit.mean_at(t * s, s)?.value;
            if m <= 0.0 {
                return Err(Error::ZeroMean { t: t * s, s });
            }
            points.push((t, s, m / l1));
            xy.push((t.ln(), (m / l1).ln()));
        }
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let omega_hat = sxy / sxx;
    let intercept = my - omega_hat * mx;
    let log_m = xy
        .iter()
        .map(|p| p.1 - omega_hat * p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let residual = xy
        .iter()
        .map(|p| ((p.1 - intercept - omega_hat * p.0).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(GrowthFit {
        m_hat: log_m.exp(),
        omega_hat,
        intercept,
        residual,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// `E‖Φ(λm, m)g‖ ≤ c‖g‖₁` with `c < 1` for integer `m ≥ δ`.
    Contraction,
    /// `E‖Φ(λs, s)g‖ ≥ c‖g‖₁` with `c > 1` for real `s ≥ δ`.
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub kind: CertificateKind,
    pub c: f64,
    pub lambda: u64,
    pub delta: f64,
    /// Grid point where `c` is attained.
    pub attained_at: f64,
    pub grid_size: usize,
}

fn certificate_search(
    orbit: &Orbit<'_>,
    kind: CertificateKind,
    lambdas: &[u64],
    delta: f64,
    grid: &[f64],
) -> Result<Option<ContractionCertificate>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid("certificate grid"));
    }
    if let Some(x) = grid.iter().find(|x| **x < delta) {
        return Err(Error::InvalidParams(format!(
            "grid point {x} below delta = {delta}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParams(format!("delta = {delta} must be > 0")));
    }
    let l1 = orbit.l1()?.value;
    if l1 <= 0.0 {
        return Err(Error::ZeroObservable);
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for lambda in sorted {
        if lambda < 2 {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} must be >= 2"
            )));
        }
        let mut extreme = match kind {
            CertificateKind::Contraction => (f64::NEG_INFINITY, f64::NAN),
            CertificateKind::Expansion => (f64::INFINITY, f64::NAN),
        };
        for &x in grid {
            let ratio = orbit.mean_at(lambda as f64 * x, x)?.value / l1;
            let better = match kind {
                CertificateKind::Contraction => ratio > extreme.0,
                CertificateKind::Expansion => ratio < extreme.0,
            };
            if better {
                extreme = (ratio, x);
            }
        }
        let ok = match kind {
            CertificateKind::Contraction => extreme.0 < 1.0,
            CertificateKind::Expansion => extreme.0 > 1.0,
        };
        if ok {
            return Ok(Some(ContractionCertificate {
                kind,
                c: extreme.0,
                lambda,
                delta,
                attained_at: extreme.1,
                grid_size: grid.len(),
            }));
        }
    }
    Ok(None)
}

/// Smallest `λ` among the candidates with `max_m E‖Φ(λm,m)g‖/‖g‖₁ < 1` on
/// the integer grid.
pub fn find_contraction(
    orbit: &Orbit<'_>,
    lambdas: &[u64],
    delta: f64,
    m_grid: &[u64],
) -> Result<Option<ContractionCertificate>> {
    let grid: Vec<f64> = m_grid.iter().map(|&m| m as f64).collect();
    certificate_search(orbit, CertificateKind::Contraction, lambdas, delta, &grid)
}

/// Smallest `λ` among the candidates with `min_s E‖Φ(λs,s)g‖/‖g‖₁ > 1` on
/// the real grid.
pub fn find_expansion(
    orbit: &Orbit<'_>,
    lambdas: &[u64],
    delta: f64,
    s_grid: &[f64],
) -> Result<Option<ContractionCertificate>> {
    certificate_search(orbit, CertificateKind::Expansion, lambdas, delta, s_grid)
}

/// Constants `(α, K)` of the polynomial decay or growth bound implied by a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstants {
    pub alpha: f64,
    pub k: f64,
    /// Intermediate constant `Mλ^ω/c` (contraction only).
    pub k1: Option<f64>,
    /// Threshold `γ = max{δ, θ + 1}` above which the bound applies.
    pub gamma: f64,
}

/// `α = −ln c / ln λ`, `K₁ = Mλ^ω / c`,
/// `K = max{M(1 + 1/⌊γ⌋)^{ω+α}, K₁ M (1 + 1/⌊γ⌋)^{ω+α}}`.
pub fn lemma_constants_stable(
    gb: &GrowthBound,
    cert: &ContractionCertificate,
) -> Result<LemmaConstants> {
    if cert.kind != CertificateKind::Contraction || !(cert.c > 0.0 && cert.c < 1.0) {
        return Err(Error::InvalidParams(format!(
            "contraction constant must lie in (0, 1), got {}",
            cert.c
        )));
    }
    if cert.lambda < 2 {
        return Err(Error::InvalidParams("lambda must be >= 2".into()));
    }
    let lambda = cert.lambda as f64;
    let alpha = -cert.c.ln() / lambda.ln();
    let k1 = gb.m * lambda.powf(gb.omega) / cert.c;
    let gamma = cert.delta.max(gb.theta + 1.0);
    let lift = (1.0 + 1.0 / gamma.floor()).powf(gb.omega + alpha);
    let k = (gb.m * lift).max(k1 * gb.m * lift);
    Ok(LemmaConstants {
        alpha,
        k,
        k1: Some(k1),
        gamma,
    })
}

/// `α = ln c / ln λ`, `K = M⁻¹ λ^{−ω}`.
pub fn lemma_constants_unstable(
    gb: &GrowthBound,
    cert: &ContractionCertificate,
) -> Result<LemmaConstants> {
    if cert.kind != CertificateKind::Expansion || !(cert.c > 1.0) {
        return Err(Error::InvalidParams(format!(
            "expansion constant must exceed 1, got {}",
            cert.c
        )));
    }
    if cert.lambda < 2 {
        return Err(Error::InvalidParams("lambda must be >= 2".into()));
    }
    let lambda = cert.lambda as f64;
    Ok(LemmaConstants {
        alpha: cert.c.ln() / lambda.ln(),
        k: 1.0 / (gb.m * lambda.powf(gb.omega)),
        k1: None,
        gamma: cert.delta.max(gb.theta + 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest (decay) or smallest (growth) `mean / bound` seen.
    pub worst_ratio: f64,
}

/// Checks `E‖Φ(r,s)g‖ ≤ K (r/s)^{−α} ‖g‖₁` for every pair with `s ≥ γ`.
pub fn verify_decay_bound(
    orbit: &Orbit<'_>,
    consts: &LemmaConstants,
    pairs: &[TimePair],
) -> Result<BoundCheck> {
    let l1 = orbit.l1()?.value;
    let mut check = BoundCheck {
        checked: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for tp in pairs.iter().filter(|tp| tp.s() >= consts.gamma) {
        let bound = consts.k * (tp.t() / tp.s()).powf(-consts.alpha) * l1;
        let ratio = orbit.mean(*tp)?.value / bound;
        check.checked += 1;
        if ratio > 1.0 + 1e-12 {
            check.violations += 1;
        }
        check.worst_ratio = check.worst_ratio.max(ratio);
    }
    Ok(check)
}

/// Checks `E‖Φ(ts,s)g‖ ≥ K t^α ‖g‖₁` for every pair with `s ≥ γ`.
pub fn verify_growth_lower_bound(
    orbit: &Orbit<'_>,
    consts: &LemmaConstants,
    pairs: &[TimePair],
) -> Result<BoundCheck> {
    let l1 = orbit.l1()?.value;
    let mut check = BoundCheck {
        checked: 0,
        violations: 0,
        worst_ratio: f64::INFINITY,
    };
    for tp in pairs.iter().filter(|tp| tp.s() >= consts.gamma) {
        let bound = consts.k * (tp.t() / tp.s()).powf(consts.alpha) * l1;
        let ratio = orbit.mean(*tp)?.value / bound;
        check.checked += 1;
        if ratio < 1.0 - 1e-12 {
            check.violations += 1;
        }
        check.worst_ratio = check.worst_ratio.min(ratio);
    }
    Ok(check)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    StableInMean,
    UnstableInMean,
    Inconclusive,
}

/// Settings of [`classify`].
#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub s_grid: Vec<f64>,
    /// Multipliers `t ≥ 1` for injectivity, growth fit and continuous samples.
    pub t_grid: Vec<f64>,
    /// Functional space; its domain selects discrete or continuous traces and
    /// its horizon the truncation.
    pub space: AnySpace,
    pub sequence: SamplingSequence,
    pub budget: usize,
    pub eps: f64,
    pub lambdas: Vec<u64>,
    pub delta: f64,
    pub cert_grid: Vec<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            s_grid: (0..8).map(|k| 2f64.powi(k)).collect(),
            t_grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            space: AnySpace::Weighted(
                WeightedSpace::lp_sequence(1.0, 1e5).expect("static space parameters"),
            ),
            sequence: SamplingSequence::Linear,
            budget: 1000,
            eps: 1e-9,
            lambdas: vec![2, 3, 4, 8, 16],
            delta: 1.0,
            cert_grid: (1..=100).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSummary {
    /// All traces finite and converged.
    pub bounded: bool,
    pub sup: f64,
    pub sup_at_s: f64,
    pub all_converged: bool,
    /// Set when a trace could not be built (e.g. a vanishing mean).
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub stability: FunctionalSummary,
    pub instability: FunctionalSummary,
    pub injective: bool,
    pub injectivity: Vec<InjectivityReport>,
    pub contraction: Option<ContractionCertificate>,
    pub expansion: Option<ContractionCertificate>,
    pub omega_hat: Option<f64>,
    pub observables: Vec<String>,
    pub s_grid: Vec<f64>,
    pub space: String,
    pub time: TimeKind,
    pub sequence: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    pub traces: Vec<DatkoTrace>,
}

fn trace_for(
    orbit: &Orbit<'_>,
    functional: Functional,
    s: f64,
    cfg: &ClassifyConfig,
) -> Result<DatkoTrace> {
    let horizon = cfg.space.horizon();
    match cfg.space.domain() {
        Domain::Sequence => discrete_trace(
            orbit,
            functional,
            s,
            &cfg.sequence,
            &cfg.space,
            horizon as u64,
        ),
        Domain::Function => {
            continuous_trace(orbit, functional, s, &cfg.space, horizon, &cfg.t_grid)
        }
    }
}

fn summarize(traces: &[&DatkoTrace], error: Option<String>) -> FunctionalSummary {
    let mut sup = (f64::NEG_INFINITY, f64::NAN);
    for t in traces {
        if t.norm_value > sup.0 || t.norm_value.is_nan() {
            sup = (t.norm_value, t.s);
        }
    }
    let all_converged = error.is_none() && traces.iter().all(|t| t.converged);
    FunctionalSummary {
        bounded: all_converged && sup.0.is_finite(),
        sup: sup.0,
        sup_at_s: sup.1,
        all_converged,
        error,
    }
}

/// Numerical decision between stability in mean, instability in mean and
/// neither, over the configured grids and the given observables.
pub fn classify(
    cz: &dyn Cocycle,
    sf: &dyn Semiflow,
    measure: &ProbabilitySpace,
    g_set: &[Observable],
    cfg: &ClassifyConfig,
) -> Result<Classification> {
    if g_set.is_empty() {
        return Err(Error::EmptyGrid("observables"));
    }
    if cfg.s_grid.is_empty() {
        return Err(Error::EmptyGrid("s_grid"));
    }
    if cfg.t_grid.is_empty() {
        return Err(Error::EmptyGrid("t_grid"));
    }
    let mut traces = Vec::new();
    let mut instability_error = None;
    let mut injectivity = Vec::new();
    let mut contraction = None;
    let mut expansion = None;
    let mut omega_hat = None;
    let integer_grid: Vec<u64> = cfg
        .cert_grid
        .iter()
        .filter(|x| x.fract() == 0.0 && **x >= cfg.delta)
        .map(|x| *x as u64)
        .collect();
    for (gi, g) in g_set.iter().enumerate() {
        let orbit = Orbit::new(cz, sf, measure, g, cfg.budget);
        for &s in &cfg.s_grid {
            traces.push(trace_for(&orbit, Functional::Stability, s, cfg)?);
            match trace_for(&orbit, Functional::Instability, s, cfg) {
                Ok(t) => traces.push(t),
                Err(e @ Error::ZeroMean { .. }) => {
                    instability_error.get_or_insert_with(|| format!("{}: {e}", g.name()));
                }
                Err(e) => return Err(e),
            }
        }
        injectivity.push(injectivity_check(
            &orbit,
            &cfg.s_grid,
            &cfg.t_grid,
            cfg.eps,
        )?);
        if gi == 0 {
            if !integer_grid.is_empty() {
                contraction = find_contraction(&orbit, &cfg.lambdas, cfg.delta, &integer_grid)?;
            }
            expansion = find_expansion(&orbit, &cfg.lambdas, cfg.delta, &cfg.cert_grid)?;
            omega_hat = match fit_growth(&orbit, &cfg.s_grid, &cfg.t_grid) {
                Ok(fit) => Some(fit.omega_hat),
                Err(Error::ZeroMean { .. } | Error::InvalidParams(_)) => None,
                Err(e) => return Err(e),
            };
        }
    }
    let stab: Vec<&DatkoTrace> = traces
        .iter()
        .filter(|t| t.functional == Functional::Stability)
        .collect();
    let inst: Vec<&DatkoTrace> = traces
        .iter()
        .filter(|t| t.functional == Functional::Instability)
        .collect();
    let stability = summarize(&stab, None);
    let instability = summarize(&inst, instability_error);
    let injective = injectivity.iter().all(|r| r.injective);
    let outcome = match (stability.bounded, instability.bounded && injective) {
        (true, false) => Outcome::StableInMean,
        (false, true) => Outcome::UnstableInMean,
        _ => Outcome::Inconclusive,
    };
    let (time, sequence) = match cfg.space.domain() {
        Domain::Sequence => (TimeKind::Discrete, Some(cfg.sequence.label())),
        Domain::Function => (TimeKind::Continuous, None),
    };
    Ok(Classification {
        verdict: Verdict {
            outcome,
            stability,
            instability,
            injective,
            injectivity,
            contraction,
            expansion,
            omega_hat,
            observables: g_set.iter().map(|g| g.name().to_string()).collect(),
            s_grid: cfg.s_grid.clone(),
            space: cfg.space.label(),
            time,
            sequence,
        },
        traces,
    })
}
