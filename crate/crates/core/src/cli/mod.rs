//! Config-driven batch runner.
//!
//! `run` reads an [`AnalysisConfig`] as JSON, executes the requested analyses
//! (laws first), and writes `report.json` plus one CSV per trace into the
//! output directory. Exit codes: 0 success, 2 validation error, 3 numerical
//! failure.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::datko::{
    classify, datko_continuous, datko_discrete, find_contraction, find_expansion, fit_growth,
    instability_continuous, instability_discrete, lemma_constants_stable, lemma_constants_unstable,
    verify_decay_bound, verify_growth_lower_bound, BoundCheck, ContractionCertificate, DatkoTrace,
    Functional, GrowthFit, LemmaConstants, TimeKind, Verdict,
};
use crate::error::Error;
use crate::flow::verify_growth_bound;
use crate::flow::{
    check_cocycle_laws, check_semiflow_laws, random_triples, GrowthCheck, LawReport, TimePair,
    GALLERY_NAMES,
};
use crate::measure::Orbit;
use crate::spaces::{check_class_h, ClassHReport, Domain, NormedSpace, Threshold};

use config::{lib, Resolved};
pub use config::{
    Analysis, AnalysisConfig, CarrierSpec, CertificateSettings, ClassHSettings, InlineAtom,
    InlineSystem, LawSettings, MeasureSpec, NormSpec, ObservableSpec, SequenceSpec, SpaceSpec,
    SystemSpec,
};

/// JSON schema of [`AnalysisConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("config.schema.json");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::ZeroMean { .. } | Error::NegativeValue { .. } => {
                RunError::Numerical(e.to_string())
            }
            other => RunError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides the configured seed.
    pub seed: Option<u64>,
    /// Non-convergence of any trace becomes a numerical failure.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub name: String,
    pub l1: f64,
    pub l1_stderr: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawsSection {
    pub triples: usize,
    pub interval: (f64, f64),
    pub semiflow: LawReport,
    pub cocycle: LawReport,
    pub growth_bound: Option<GrowthCheck>,
    pub passed: bool,
}

/// A trace without its rows; the rows live in `csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
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
    pub stderr_bound: f64,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSection {
    pub contraction: Option<ContractionCertificate>,
    pub expansion: Option<ContractionCertificate>,
    pub stable_constants: Option<LemmaConstants>,
    pub unstable_constants: Option<LemmaConstants>,
    pub decay_check: Option<BoundCheck>,
    pub growth_check: Option<BoundCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifySection {
    pub verdict: Verdict,
    pub traces: Vec<TraceRecord>,
}

/// Everything a run produced. Serialized as `report.json`; the wall-clock
/// time is kept out of the file so identical configs give identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub system: String,
    pub seed: u64,
    pub budget: usize,
    pub exact_measure: bool,
    pub space: String,
    pub analyses: Vec<Analysis>,
    pub observables: Vec<ObservableSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laws: Option<LawsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_fit: Option<GrowthFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datko_stability: Option<Vec<TraceRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datko_instability: Option<Vec<TraceRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_h: Option<ClassHReport>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
    #[serde(skip)]
    pub traces: Vec<DatkoTrace>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| {
            RunError::Validation(format!("out: cannot create {}: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| {
            RunError::Validation(format!("out: cannot write {}: {e}", path.display()))
        })?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn trace_file(system: &str, prefix: &str, t: &DatkoTrace) -> String {
    let kind = match t.functional {
        Functional::Stability => "stability",
        Functional::Instability => "instability",
    };
    format!(
        "{prefix}{}_{kind}_{}_s{}.csv",
        slug(system),
        slug(&t.observable),
        t.s
    )
}

fn record(t: &DatkoTrace, csv: String) -> TraceRecord {
    TraceRecord {
        functional: t.functional,
        time: t.time,
        s: t.s,
        observable: t.observable.clone(),
        space: t.space.clone(),
        sequence: t.sequence.clone(),
        horizon: t.horizon,
        norm_value: t.norm_value,
        half_value: t.half_value,
        converged: t.converged,
        stderr_bound: t.stderr_bound,
        csv,
    }
}

fn run_laws(cfg: &AnalysisConfig, r: &Resolved, seed: u64) -> Result<LawsSection, RunError> {
    let sys = &r.system;
    let l = &cfg.laws;
    let grid = lib(random_triples(l.triples, seed, l.lo, l.hi))?;
    let samples = sys.measure.support_sample(l.samples);
    let dim = sys.cocycle.dim();
    let mut probes: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    probes.push((0..dim).map(|i| 1.0 + i as f64).collect());
    let semiflow = lib(check_semiflow_laws(
        sys.semiflow.as_ref(),
        &grid,
        &samples,
        l.tol,
    ))?;
    let cocycle = lib(check_cocycle_laws(
        sys.cocycle.as_ref(),
        sys.semiflow.as_ref(),
        &grid,
        &samples,
        &probes,
        l.tol,
    ))?;
    let growth_bound = match sys.cocycle.growth() {
        Some(_) => {
            let pairs: Vec<TimePair> = grid
                .iter()
                .map(|tt| TimePair::new(tt.t, tt.s))
                .collect::<crate::Result<_>>()
                .map_err(RunError::from)?;
            Some(lib(verify_growth_bound(
                sys.cocycle.as_ref(),
                &pairs,
                &samples,
                &probes,
            ))?)
        }
        None => None,
    };
    let passed = semiflow.passed
        && cocycle.passed
        && growth_bound.as_ref().is_none_or(|g| g.violations == 0);
    Ok(LawsSection {
        triples: grid.len(),
        interval: (l.lo, l.hi),
        semiflow,
        cocycle,
        growth_bound,
        passed,
    })
}

fn run_trace(
    orbit: &Orbit<'_>,
    functional: Functional,
    s: f64,
    cfg: &AnalysisConfig,
    r: &Resolved,
) -> crate::Result<DatkoTrace> {
    let h = r.space.horizon();
    match (r.space.domain(), functional) {
        (Domain::Sequence, Functional::Stability) => {
            datko_discrete(orbit, s, &r.sequence, &r.space, h as u64)
        }
        (Domain::Sequence, Functional::Instability) => {
            instability_discrete(orbit, s, &r.sequence, &r.space, h as u64)
        }
        (Domain::Function, Functional::Stability) => {
            datko_continuous(orbit, s, &r.space, h, &cfg.t_grid)
        }
        (Domain::Function, Functional::Instability) => {
            instability_continuous(orbit, s, &r.space, h, &cfg.t_grid)
        }
    }
}

/// `side × side` pairs `(r, s)` with `s ∈ [max(2, γ), 100]` and `r/s ∈ [1, 1000]`.
fn bound_grid(side: usize, gamma: f64) -> Vec<TimePair> {
    let lo = gamma.max(2.0);
    let hi = lo.max(100.0);
    let geo = |a: f64, b: f64, k: usize| {
        if side == 1 {
            a
        } else {
            a * (b / a).powf(k as f64 / (side - 1) as f64)
        }
    };
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        let s = geo(lo, hi, i);
        for j in 0..side {
            out.push(TimePair::new(s * geo(1.0, 1000.0, j), s).expect("ordered by construction"));
        }
    }
    out
}

fn run_certificates(
    cfg: &AnalysisConfig,
    r: &Resolved,
    orbit: &Orbit<'_>,
) -> Result<CertificateSection, RunError> {
    let c = &cfg.certificates;
    let m_grid: Vec<u64> = c
        .grid
        .iter()
        .filter(|x| x.fract() == 0.0 && **x >= c.delta)
        .map(|x| *x as u64)
        .collect();
    let contraction = if m_grid.is_empty() {
        None
    } else {
        lib(find_contraction(orbit, &c.lambdas, c.delta, &m_grid))?
    };
    let expansion = lib(find_expansion(orbit, &c.lambdas, c.delta, &c.grid))?;
    let mut section = CertificateSection {
        contraction,
        expansion,
        stable_constants: None,
        unstable_constants: None,
        decay_check: None,
        growth_check: None,
    };
    if let Some(gb) = r.system.cocycle.growth() {
        if let Some(cert) = &section.contraction {
            let k = lib(lemma_constants_stable(&gb, cert))?;
            let pairs = bound_grid(c.bound_grid_side, k.gamma);
            section.decay_check = Some(lib(verify_decay_bound(orbit, &k, &pairs))?);
            section.stable_constants = Some(k);
        }
        if let Some(cert) = &section.expansion {
            let k = lib(lemma_constants_unstable(&gb, cert))?;
            let pairs = bound_grid(c.bound_grid_side, k.gamma);
            section.growth_check = Some(lib(verify_growth_lower_bound(orbit, &k, &pairs))?);
            section.unstable_constants = Some(k);
        }
    }
    Ok(section)
}

fn load_config(path: &Path) -> Result<AnalysisConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| {
        RunError::Validation(format!("config: cannot read {}: {e}", path.display()))
    })?;
    AnalysisConfig::from_json(&text)
}

/// Reads the config at `config_path` and runs it; see [`run_config`].
pub fn run_analysis(config_path: &Path, opts: &RunOptions) -> Result<RunReport, RunError> {
    run_config(load_config(config_path)?, opts)
}

/// Executes every requested analysis and writes the report and trace CSVs.
///
/// With `strict`, a non-converged trace turns into [`RunError::Numerical`]
/// after the files have been written.
pub fn run_config(mut cfg: AnalysisConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let strict = opts.strict || cfg.strict;
    let r = cfg.resolve()?;
    let mut writer = Writer::new(&opts.out)?;
    let mut analyses = cfg.analyses.clone();
    analyses.sort();
    analyses.dedup();
    let sys = &r.system;

    let mut observables = Vec::new();
    for g in &r.observables {
        let l1 = lib(sys.orbit_of(g, cfg.budget).l1())?;
        if l1.value <= 0.0 {
            return Err(RunError::Validation(format!(
                "observables: `{}` has zero L1 norm",
                g.name()
            )));
        }
        observables.push(ObservableSummary {
            name: g.name().to_string(),
            l1: l1.value,
            l1_stderr: l1.stderr,
            n_samples: l1.n_samples,
        });
    }

    let mut report = RunReport {
        system: sys.name.clone(),
        seed: cfg.seed,
        budget: cfg.budget,
        exact_measure: sys.measure.is_exact(),
        space: r.space.label(),
        analyses: analyses.clone(),
        observables,
        laws: None,
        growth_fit: None,
        datko_stability: None,
        datko_instability: None,
        certificates: None,
        classify: None,
        class_h: None,
        files: Vec::new(),
        wall_clock_secs: 0.0,
        traces: Vec::new(),
    };
    let mut unconverged = Vec::new();

    for analysis in &analyses {
        match analysis {
            Analysis::Laws => report.laws = Some(run_laws(&cfg, &r, cfg.seed)?),
            Analysis::GrowthFit => {
                let orbit = sys.orbit_of(&r.observables[0], cfg.budget);
                report.growth_fit = Some(lib(fit_growth(&orbit, &cfg.s_grid, &cfg.t_grid))?);
            }
            Analysis::DatkoStability | Analysis::DatkoInstability => {
                let functional = if *analysis == Analysis::DatkoStability {
                    Functional::Stability
                } else {
                    Functional::Instability
                };
                let mut records = Vec::new();
                for g in &r.observables {
                    let orbit = sys.orbit_of(g, cfg.budget);
                    for &s in &cfg.s_grid {
                        let t = lib(run_trace(&orbit, functional, s, &cfg, &r))?;
                        let name = trace_file(&sys.name, "", &t);
                        writer.write(&name, &t.to_csv())?;
                        if !t.converged {
                            unconverged.push(name.clone());
                        }
                        records.push(record(&t, name));
                        report.traces.push(t);
                    }
                }
                match functional {
                    Functional::Stability => report.datko_stability = Some(records),
                    Functional::Instability => report.datko_instability = Some(records),
                }
            }
            Analysis::Certificates => {
                let orbit = sys.orbit_of(&r.observables[0], cfg.budget);
                report.certificates = Some(run_certificates(&cfg, &r, &orbit)?);
            }
            Analysis::Classify => {
                let out = lib(classify(
                    sys.cocycle.as_ref(),
                    sys.semiflow.as_ref(),
                    &sys.measure,
                    &r.observables,
                    &cfg.classify_config(&r),
                ))?;
                let mut records = Vec::new();
                for t in out.traces {
                    let name = trace_file(&sys.name, "classify_", &t);
                    writer.write(&name, &t.to_csv())?;
                    records.push(record(&t, name));
                    report.traces.push(t);
                }
                report.classify = Some(ClassifySection {
                    verdict: out.verdict,
                    traces: records,
                });
            }
            Analysis::ClassH => {
                let threshold = cfg
                    .class_h
                    .threshold
                    .unwrap_or_else(|| Threshold::default_for(&r.space));
                report.class_h = Some(lib(check_class_h(
                    &r.space,
                    &cfg.class_h.multipliers,
                    &cfg.class_h.inner,
                    threshold,
                ))?);
            }
        }
    }

    writer.files.push("report.json".into());
    report.files = writer.files.clone();
    writer.files.pop();
    writer.write("report.json", &report.to_json())?;
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    if strict && !unconverged.is_empty() {
        return Err(RunError::Numerical(format!(
            "strict: traces did not converge: {}",
            unconverged.join(", ")
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Trace,
    MarginCurve,
    Fit,
}

fn dat(rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    for (x, y) in rows {
        out.push_str(&format!("{x} {y}\n"));
    }
    out
}

/// Writes two-column `x y` files for plotting and returns their names.
///
/// `trace`: `(t, mean)` rows for every trace; `margin-curve`: `(p, margin)`;
/// `fit`: `(t, mean/‖g‖₁)` per base time.
pub fn emit_plot_data(
    report: &RunReport,
    kind: PlotKind,
    out: &Path,
) -> Result<Vec<String>, RunError> {
    let mut writer = Writer::new(out)?;
    let sys = slug(&report.system);
    match kind {
        PlotKind::Trace => {
            if report.traces.is_empty() {
                return Err(RunError::Validation(
                    "plot trace: report has no datko-stability, datko-instability or classify traces"
                        .into(),
                ));
            }
            for t in &report.traces {
                let functional = match t.functional {
                    Functional::Stability => "stability",
                    Functional::Instability => "instability",
                };
                let name = format!(
                    "{sys}_s{}_trace_{functional}_{}.dat",
                    t.s,
                    slug(&t.observable)
                );
                // Classify and standalone traces may share a name; the second write
                // carries identical rows.
                writer.write(&name, &dat(t.samples.iter().map(|p| (p.x, p.mean))))?;
            }
        }
        PlotKind::MarginCurve => {
            let ch = report.class_h.as_ref().ok_or_else(|| {
                RunError::Validation("plot margin-curve: report has no class-h analysis".into())
            })?;
            writer.write(
                &format!("{sys}_margin-curve.dat"),
                &dat(ch.margins.iter().map(|c| (c.multiplier, c.margin))),
            )?;
        }
        PlotKind::Fit => {
            let fit = report.growth_fit.as_ref().ok_or_else(|| {
                RunError::Validation("plot fit: report has no growth-fit analysis".into())
            })?;
            let mut bases: Vec<f64> = fit.points.iter().map(|p| p.1).collect();
            bases.dedup();
            for s in bases {
                writer.write(
                    &format!("{sys}_s{s}_fit.dat"),
                    &dat(fit.points.iter().filter(|p| p.1 == s).map(|p| (p.0, p.2))),
                )?;
            }
        }
    }
    writer.files.sort();
    writer.files.dedup();
    Ok(writer.files)
}

#[derive(Debug, Parser)]
#[command(
    name = "skewflow",
    version,
    about = "Mean-norm analyses of stochastic skew-evolution semiflows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the analyses of a JSON config.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Fail with exit code 3 when a trace does not converge.
        #[arg(long)]
        strict: bool,
        /// Also write plot data files of this kind (repeatable).
        #[arg(long, value_enum)]
        plot: Vec<PlotKind>,
    },
    /// Inspect the built-in systems.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Print the JSON schema of the config format.
    Schema,
}

#[derive(Debug, Subcommand)]
pub enum GalleryAction {
    List,
}

fn summary_line(report: &RunReport) -> String {
    let mut line = format!("{}: {} file(s) written", report.system, report.files.len());
    if let Some(c) = &report.classify {
        line.push_str(&format!(", verdict {:?}", c.verdict.outcome));
    }
    if let Some(l) = &report.laws {
        line.push_str(&format!(
            ", laws {}",
            if l.passed { "ok" } else { "FAILED" }
        ));
    }
    line
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Schema => {
            print!("{CONFIG_SCHEMA}");
            ExitCode::SUCCESS
        }
        Command::Gallery {
            action: GalleryAction::List,
        } => {
            for name in GALLERY_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            seed,
            strict,
            plot,
        } => {
            let opts = RunOptions { out, seed, strict };
            let result = run_analysis(&config, &opts).and_then(|report| {
                for kind in plot {
                    emit_plot_data(&report, kind, &opts.out)?;
                }
                Ok(report)
            });
            match result {
                Ok(report) => {
                    println!("{}", summary_line(&report));
                    eprintln!("elapsed {:.3} s", report.wall_clock_secs);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            }
        }
    }
}
