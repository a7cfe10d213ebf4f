//! Argument parsing and the six commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g2flow_core::boundary::{catalog, classify, BoundaryError, BoundaryOptions, Symmetry, TableColumn};
use g2flow_core::cohom1::{residual, Cohom1Error, EquationClass};
use g2flow_core::flows::{
    self, first_integral_defects, BranchPolicy, FamilyKind, FamilyParams, FlowError, FlowStatus, SolutionFamily,
    ThetaFn,
};
use g2flow_core::g2core::{hypersurface_profile, G2Error};
use g2flow_core::orbits::{build_orbit_model, ModelId, OrbitError};
use g2flow_core::profile::ProfileError;
use g2flow_core::Profile;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::format::{self, Format, FormatError};
use crate::report::{
    catalog_csv, CatalogRow, CheckReport, ClassifyReport, EventSummary, Named, ResidualSummary, SolveReport,
    VerifyReport,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FAIL: u8 = 2;
pub const EXIT_HALT: u8 = 3;

/// Residual tolerance when neither `--tol` nor `G2FLOW_TOL` is given.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Structure relations must hold to this accuracy.
pub const ORBIT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("bad expression: {0}")]
    Expr(#[from] ExprError),
    #[error("{0}")]
    Flow(#[from] FlowError),
    #[error("{0}")]
    Orbit(#[from] OrbitError),
    #[error("{0}")]
    Cohom1(#[from] Cohom1Error),
    #[error("{0}")]
    Boundary(#[from] BoundaryError),
    #[error("{0}")]
    G2(#[from] G2Error),
    #[error("{0}")]
    Profile(#[from] ProfileError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Format { .. } | CliError::Expr(_) => EXIT_USAGE,
            CliError::Profile(_) => EXIT_USAGE,
            CliError::Flow(e) => match e {
                FlowError::Halted { .. } | FlowError::Pole { .. } => EXIT_HALT,
                FlowError::InvalidParams(_)
                | FlowError::UnknownFamily(_)
                | FlowError::MissingTheta
                | FlowError::SingularEndpoint { .. }
                | FlowError::BranchMismatch { .. } => EXIT_USAGE,
                _ => EXIT_FAIL,
            },
            CliError::Orbit(OrbitError::UnknownModel(_) | OrbitError::UnknownElement(_)) => EXIT_USAGE,
            CliError::Orbit(_) => EXIT_FAIL,
            CliError::Cohom1(Cohom1Error::UnknownClass(_) | Cohom1Error::ZeroLambda) => EXIT_USAGE,
            CliError::Cohom1(_) => EXIT_FAIL,
            CliError::Boundary(e) => match e {
                BoundaryError::UnknownSymmetry(_)
                | BoundaryError::UnknownColumn(_)
                | BoundaryError::UnknownCondition(_)
                | BoundaryError::UnknownElement(_)
                | BoundaryError::AnchorOutsideGrid { .. }
                | BoundaryError::WindowTooShort { .. }
                | BoundaryError::PeriodTooLong { .. } => EXIT_USAGE,
                _ => EXIT_FAIL,
            },
            CliError::G2(e) => match e {
                G2Error::RadiusNotPositive { .. } | G2Error::EmptyRange | G2Error::TooFewSamples(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            },
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "g2flow", version, about = "Cohomogeneity-one G2-structures: solve, check and classify")]
pub struct RunConfig {
    /// Residual tolerance (overrides G2FLOW_TOL; default 1e-8).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Print reports as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structure relations of an orbit model.
    VerifyOrbit(VerifyArgs),
    /// Sample a solution family and check its residuals.
    Solve(SolveArgs),
    /// Residuals of a profile file for one equation class.
    Check(CheckArgs),
    /// Place a profile file in the manifold catalog.
    Classify(ClassifyArgs),
    /// Print the manifold catalog for a symmetry group.
    Table(TableArgs),
    /// Profile of the hypersurface |v| = r(s) in flat 8-space.
    Hypersurface(HypersurfaceArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// g2-su3, su3-t2, su3-t123 or sp2.
    pub model: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Halt,
    Record,
}

#[derive(Debug, Clone, Args, Default)]
pub struct SolveArgs {
    /// Family name, e.g. bryant-salamon-cp2, weak-g2, cosymplectic.
    pub family: String,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// θ(t) for the cosymplectic family, e.g. "sin(t) + pi/4".
    #[arg(long)]
    pub theta: Option<String>,
    /// Initial f₁ (cosymplectic) or the constant radius (constant-orbit).
    #[arg(long)]
    pub f1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// Lower end of r for the holonomy families.
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Deformation amplitude of symplectic-deformed.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Orbit model for weak-su3 and constant-orbit.
    #[arg(long)]
    pub model: Option<String>,
    /// Branch sign ε of the cosymplectic recovery.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// ε_θ of the holonomy families (−1 reverses the parameter).
    #[arg(long, allow_hyphen_values = true)]
    pub eps_theta: Option<f64>,
    /// Integrate the full (f₁², f₂², f₃²) system instead of recovering f₂, f₃.
    #[arg(long)]
    pub system: bool,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long, default_value_t = 801)]
    pub samples: usize,
    /// Profile output path; the format follows --format or the extension.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Parameter sweep, e.g. mu=0:1:0.1 (inclusive).
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Symplectic,
    Cosymplectic,
    Weak,
    /// Both symplectic and cosymplectic.
    Holonomy,
}

impl ClassArg {
    fn classes(self) -> &'static [EquationClass] {
        match self {
            ClassArg::Symplectic => &[EquationClass::Symplectic],
            ClassArg::Cosymplectic => &[EquationClass::Cosymplectic],
            ClassArg::Weak => &[EquationClass::WeakHolonomy],
            ClassArg::Holonomy => &[EquationClass::Symplectic, EquationClass::Cosymplectic],
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub class: ClassArg,
    /// λ for the weak class; fitted when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Override the model stored in the file.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColumnArg {
    Holonomy,
    Symplectic,
    Weak,
    Cosymplectic,
}

impl ColumnArg {
    fn column(self) -> TableColumn {
        match self {
            ColumnArg::Holonomy | ColumnArg::Symplectic => TableColumn::HolonomySymplectic,
            ColumnArg::Weak => TableColumn::WeakHolonomy,
            ColumnArg::Cosymplectic => TableColumn::Cosymplectic,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub class: ColumnArg,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Parity window as a fraction of the domain.
    #[arg(long, default_value_t = 0.1)]
    pub window: f64,
    /// Largest accepted parity defect.
    #[arg(long, default_value_t = 1e-6)]
    pub defect_tol: f64,
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// g2, su3 or sp2.
    pub symmetry: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HypersurfaceArgs {
    /// r(s) > 0, e.g. "1 + 0.3*sin(s)".
    #[arg(long)]
    pub r: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub s_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Tolerance from `--tol`, then `G2FLOW_TOL`, then the default.
pub fn resolve_tolerance(flag: Option<f64>, env: Option<&str>) -> Result<f64, CliError> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(s)) => s.trim().parse::<f64>().map_err(|_| usage(format!("G2FLOW_TOL='{s}' is not a number")))?,
        (None, None) => DEFAULT_TOL,
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

fn parse_model(s: &str) -> Result<ModelId, CliError> {
    s.parse::<ModelId>().map_err(|e| usage(e.to_string()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_profile(path: &Path, model: Option<&str>) -> Result<Profile, CliError> {
    let model = model.map(parse_model).transpose()?;
    let text = read_text(path)?;
    format::profile_from_str(&text, Format::from_path(path), model)
        .map_err(|source| CliError::Format { path: path.to_path_buf(), source })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
}

/// Runs one parsed command, writing its report to `out`; returns the exit
/// code. `env_tol` is the value of `G2FLOW_TOL`, if set.
pub fn run(cfg: &RunConfig, env_tol: Option<&str>, out: &mut dyn Write) -> Result<u8, CliError> {
    let tol = resolve_tolerance(cfg.tol, env_tol)?;
    match &cfg.command {
        Command::VerifyOrbit(a) => cmd_verify_orbit(a, cfg.json, out),
        Command::Solve(a) => cmd_solve(a, tol, cfg.json, out),
        Command::Check(a) => cmd_check(a, tol, cfg.json, out),
        Command::Classify(a) => cmd_classify(a, tol, cfg.json, out),
        Command::Table(a) => cmd_table(a, out),
        Command::Hypersurface(a) => cmd_hypersurface(a, tol, cfg.json, out),
    }
}

fn cmd_verify_orbit(a: &VerifyArgs, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let id = parse_model(&a.model)?;
    let model = build_orbit_model(id)?;
    let report = VerifyReport::new(id.as_str(), model.verification(), ORBIT_TOL);
    emit(out, &if json { format::to_json_pretty(&report) } else { report.render() })?;
    Ok(if report.passes { EXIT_PASS } else { EXIT_FAIL })
}

// ---------------------------------------------------------------------------
// solve

/// Which flags each family reads.
fn allowed_flags(kind: FamilyKind) -> &'static [&'static str] {
    use FamilyKind::*;
    match kind {
        CosymplecticGeneric => &["mu", "nu", "theta", "f1", "t-min", "t-max", "epsilon", "system", "policy"],
        HolonomyTriaxial => &["mu", "nu", "r-min", "r-max", "eps-theta"],
        BryantSalamonCp2 | BryantSalamonS4 => &["nu", "r-min", "r-max", "eps-theta"],
        WeakG2 | RoundSphere => &["lambda", "t-min", "t-max"],
        WeakSu3 => &["model", "t-min", "t-max"],
        SymplecticSimple | Flat | Cp2CosymplecticClosed => &["t-min", "t-max"],
        SymplecticDeformed => &["amplitude", "r-min", "r-max"],
        ConstantOrbit => &["model", "f1", "t-min", "t-max"],
    }
}

fn given_flags(a: &SolveArgs) -> Vec<&'static str> {
    let mut v = Vec::new();
    let mut flag = |set: bool, name: &'static str| {
        if set {
            v.push(name);
        }
    };
    flag(a.mu.is_some(), "mu");
    flag(a.nu.is_some(), "nu");
    flag(a.lambda.is_some(), "lambda");
    flag(a.theta.is_some(), "theta");
    flag(a.f1.is_some(), "f1");
    flag(a.t_min.is_some(), "t-min");
    flag(a.t_max.is_some(), "t-max");
    flag(a.r_min.is_some(), "r-min");
    flag(a.r_max.is_some(), "r-max");
    flag(a.amplitude.is_some(), "amplitude");
    flag(a.model.is_some(), "model");
    flag(a.epsilon.is_some(), "epsilon");
    flag(a.eps_theta.is_some(), "eps-theta");
    flag(a.system, "system");
    flag(a.policy.is_some(), "policy");
    v
}

/// A fully validated solve request.
#[derive(Clone)]
pub struct SolveSpec {
    pub kind: FamilyKind,
    pub params: FamilyParams,
    pub theta: Option<(String, ThetaFn)>,
    pub amplitude: f64,
    pub model: Option<ModelId>,
    pub system: bool,
    pub policy: BranchPolicy,
    pub samples: usize,
}

impl SolveSpec {
    pub fn from_args(a: &SolveArgs) -> Result<SolveSpec, CliError> {
        let kind: FamilyKind = a.family.parse().map_err(|e: FlowError| usage(e.to_string()))?;
        let allowed = allowed_flags(kind);
        for f in given_flags(a) {
            if !allowed.contains(&f) {
                return Err(usage(format!("--{f} does not apply to the {kind} family")));
            }
        }
        let mut p = kind.default_params();
        if let Some(v) = a.mu {
            p.mu = v;
        }
        if let Some(v) = a.nu {
            p.nu = v;
        }
        if let Some(v) = a.lambda {
            if v == 0.0 {
                return Err(usage("--lambda must be non-zero"));
            }
            p.lambda = v;
            if a.t_max.is_none() {
                let period = if kind == FamilyKind::RoundSphere { 4.0 } else { 2.0 };
                p.t_range.1 = p.t_range.0 + period * std::f64::consts::PI / v.abs();
            }
        }
        if let Some(v) = a.f1 {
            p.f1_initial = v;
        }
        if let Some(v) = a.t_min.or(a.r_min) {
            p.t_range.0 = v;
        }
        if let Some(v) = a.t_max.or(a.r_max) {
            p.t_range.1 = v;
        }
        if let Some(v) = a.epsilon {
            p.signs.epsilon = v;
        }
        if let Some(v) = a.eps_theta {
            p.signs.eps_theta = v;
        }
        if kind == FamilyKind::HolonomyTriaxial && a.r_min.is_none() && p.t_range.0 <= p.mu {
            p.t_range.0 = p.mu + 0.5;
        }
        p.validate()?;
        if a.samples < 5 {
            return Err(usage(format!("--samples must be at least 5, got {}", a.samples)));
        }
        let theta = match &a.theta {
            Some(src) => {
                let e = Arc::new(Expr::parse(src, "t")?);
                let f: ThetaFn = Arc::new(move |t| e.eval(t));
                Some((src.clone(), f))
            }
            None if kind == FamilyKind::CosymplecticGeneric => {
                let f: ThetaFn = Arc::new(|t| t);
                Some(("t".to_string(), f))
            }
            None => None,
        };
        let model = a.model.as_deref().map(parse_model).transpose()?;
        if kind == FamilyKind::WeakSu3 && model == Some(ModelId::G2Su3) {
            return Err(usage("weak-su3 has no g2-su3 model"));
        }
        Ok(SolveSpec {
            kind,
            params: p,
            theta,
            amplitude: a.amplitude.unwrap_or(0.1),
            model,
            system: a.system,
            policy: match a.policy {
                Some(PolicyArg::Record) => BranchPolicy::Record,
                _ => BranchPolicy::Halt,
            },
            samples: a.samples,
        })
    }

    fn parameters(&self) -> Vec<Named> {
        let p = &self.params;
        let mut v = Vec::new();
        let mut push = |name: &str, value: f64| v.push(Named { name: name.to_string(), value });
        for f in allowed_flags(self.kind) {
            match *f {
                "mu" => push("mu", p.mu),
                "nu" => push("nu", p.nu),
                "lambda" => push("lambda", p.lambda),
                "f1" => push("f1", p.f1_initial),
                "amplitude" => push("amplitude", self.amplitude),
                "epsilon" => push("epsilon", p.signs.epsilon),
                "eps-theta" => push("eps_theta", p.signs.eps_theta),
                _ => {}
            }
        }
        v
    }
}

pub struct SolveOutcome {
    pub report: SolveReport,
    pub profile: Option<Profile>,
    pub code: u8,
}

/// Runs one solve without touching the file system.
pub fn solve(spec: &SolveSpec, tol: f64) -> Result<SolveOutcome, CliError> {
    let p = &spec.params;
    let range = p.t_range;
    let n = spec.samples;
    let mut status = "completed".to_string();
    let mut halted_at = None;
    let mut events = Vec::new();
    let mut drift = None;
    let family = SolutionFamily::new(spec.kind).with_params(*p);
    let profile = match spec.kind {
        FamilyKind::CosymplecticGeneric => {
            let (_, theta) = spec.theta.as_ref().ok_or(FlowError::MissingTheta)?;
            let sol = if spec.system {
                flows::integrate_cosymplectic_system(theta.as_ref(), p, n, spec.policy)?
            } else {
                flows::integrate_cosymplectic(theta.as_ref(), p, n, spec.policy)?
            };
            events = sol.events.iter().map(|e| EventSummary { name: e.name.clone(), t: e.t }).collect();
            match &sol.status {
                FlowStatus::Completed => {}
                FlowStatus::HaltedAtBranch { event, t } => {
                    status = "halted".to_string();
                    halted_at = Some(EventSummary { name: event.clone(), t: *t });
                }
                FlowStatus::HaltedAtPole { t } => {
                    status = "halted".to_string();
                    halted_at = Some(EventSummary { name: "pole".to_string(), t: *t });
                }
            }
            let worst = (0..sol.profile.len())
                .map(|i| first_integral_defects(sol.profile.radii().at(i), p.mu, p.nu))
                .fold(0.0f64, |m, d| m.max(d[0].abs()).max(d[1].abs()).max(d[2].abs()));
            drift = Some(worst.max(sol.drift));
            sol.profile
        }
        FamilyKind::SymplecticDeformed => flows::symplectic_deformed(spec.amplitude, range, n)?.profile,
        FamilyKind::WeakSu3 => flows::weak_su3(spec.model.unwrap_or(ModelId::Su3T2), range, n)?,
        FamilyKind::ConstantOrbit => {
            flows::constant_orbit(spec.model.unwrap_or(ModelId::Su3T2), p.f1_initial, range, n)?
        }
        _ => family.evaluate(n)?,
    };
    let halted = halted_at.is_some();
    let mut residuals = Vec::new();
    if profile.len() >= 5 {
        for class in spec.kind.classes() {
            let lambda = match class {
                EquationClass::WeakHolonomy => family.lambda(),
                _ => None,
            };
            residuals.push(ResidualSummary::new(&residual(&profile, *class, lambda)?, tol));
        }
    }
    let passes = !halted && residuals.iter().all(|r| r.passes);
    let code = if halted {
        EXIT_HALT
    } else if passes {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    let t = profile.t();
    let report = SolveReport {
        family: spec.kind.as_str().to_string(),
        model: profile.model().as_str().to_string(),
        samples: profile.len(),
        interval: [t[0], t[t.len() - 1]],
        parameters: spec.parameters(),
        status,
        halted_at,
        events,
        first_integral_drift: drift,
        residuals,
        output: None,
        passes,
    };
    Ok(SolveOutcome { report, profile: Some(profile), code })
}

/// A `--sweep name=start:stop:step` request.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn parse_sweep(s: &str) -> Result<Sweep, CliError> {
    let bad = || usage(format!("--sweep expects name=start:stop:step, got '{s}'"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = range.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, h] = parts[..] else { return Err(bad()) };
    if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(usage(format!("--sweep would run {count} solves")));
    }
    let values = (0..count).map(|k| a + k as f64 * h).collect();
    Ok(Sweep { name: name.trim().to_string(), values })
}

fn apply_sweep(a: &SolveArgs, name: &str, v: f64) -> Result<SolveArgs, CliError> {
    let mut b = a.clone();
    b.sweep = None;
    let slot = match name {
        "mu" => &mut b.mu,
        "nu" => &mut b.nu,
        "lambda" => &mut b.lambda,
        "f1" => &mut b.f1,
        "t-min" | "t_min" => &mut b.t_min,
        "t-max" | "t_max" => &mut b.t_max,
        "r-min" | "r_min" => &mut b.r_min,
        "r-max" | "r_max" => &mut b.r_max,
        "amplitude" => &mut b.amplitude,
        _ => return Err(usage(format!("cannot sweep '{name}'"))),
    };
    *slot = Some(v);
    Ok(b)
}

/// `out.json` → `out.003.json` for sweep member 3.
fn indexed_path(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("profile");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{k:03}.{ext}"),
        None => format!("{stem}.{k:03}"),
    };
    path.with_file_name(name)
}

fn write_profile(path: &Path, format: Option<Format>, p: &Profile) -> Result<String, CliError> {
    let fmt = format.unwrap_or_else(|| Format::from_path(path));
    write_text(path, &format::profile_to_string(p, fmt))?;
    Ok(path.display().to_string())
}

fn cmd_solve(a: &SolveArgs, tol: f64, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let Some(sweep) = &a.sweep else {
        let spec = SolveSpec::from_args(a)?;
        let mut o = solve(&spec, tol)?;
        if let (Some(path), Some(p)) = (&a.output, &o.profile) {
            o.report.output = Some(write_profile(path, a.format, p)?);
        }
        emit(out, &if json { format::to_json_pretty(&o.report) } else { o.report.render() })?;
        return Ok(o.code);
    };
    let sweep = parse_sweep(sweep)?;
    // Validate every member before computing any of them.
    let specs: Vec<SolveSpec> = sweep
        .values
        .iter()
        .map(|v| apply_sweep(a, &sweep.name, *v).and_then(|b| SolveSpec::from_args(&b)))
        .collect::<Result<_, _>>()?;
    let results: Vec<Result<SolveOutcome, CliError>> = specs.par_iter().map(|s| solve(s, tol)).collect();
    let mut reports = Vec::new();
    let mut code = EXIT_PASS;
    let mut text = String::new();
    for (k, (v, r)) in sweep.values.iter().zip(results).enumerate() {
        let mut o = match r {
            Ok(o) => o,
            Err(e) => {
                code = code.max(e.exit_code());
                text.push_str(&format!("[{k}] {}={}: error: {e}\n", sweep.name, format::fmt_f64(*v)));
                continue;
            }
        };
        if let (Some(path), Some(p)) = (&a.output, &o.profile) {
            o.report.output = Some(write_profile(&indexed_path(path, k), a.format, p)?);
        }
        code = code.max(o.code);
        let worst = o.report.residuals.iter().fold(0.0f64, |m, r| m.max(r.max_abs));
        text.push_str(&format!(
            "[{k}] {}={}: {} max residual {worst:.3e}{} {}\n",
            sweep.name,
            format::fmt_f64(*v),
            o.report.status,
            o.report.first_integral_drift.map(|d| format!(" drift {d:.3e}")).unwrap_or_default(),
            if o.report.passes { "PASS" } else { "FAIL" }
        ));
        reports.push(o.report);
    }
    emit(out, &if json { format::to_json_pretty(&reports) } else { text })?;
    Ok(code)
}

// ---------------------------------------------------------------------------
// check, classify, table, hypersurface

fn cmd_check(a: &CheckArgs, tol: f64, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    if a.lambda.is_some() && a.class != ClassArg::Weak {
        return Err(usage("--lambda only applies to --class weak"));
    }
    if a.lambda == Some(0.0) {
        return Err(usage("--lambda must be non-zero"));
    }
    let p = read_profile(&a.file, a.model.as_deref())?;
    let residuals: Vec<ResidualSummary> = a
        .class
        .classes()
        .iter()
        .map(|c| residual(&p, *c, a.lambda).map(|r| ResidualSummary::new(&r, tol)))
        .collect::<Result<_, _>>()?;
    let passes = residuals.iter().all(|r| r.passes);
    let report = CheckReport {
        file: a.file.display().to_string(),
        model: p.model().as_str().to_string(),
        samples: p.len(),
        residuals,
        passes,
    };
    emit(out, &if json { format::to_json_pretty(&report) } else { report.render() })?;
    Ok(if passes { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_classify(a: &ClassifyArgs, tol: f64, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    if a.lambda.is_some() && a.class != ColumnArg::Weak {
        return Err(usage("--lambda only applies to --class weak"));
    }
    if !(a.window > 0.0 && a.window <= 0.5) {
        return Err(usage("--window must be in (0, 0.5]"));
    }
    if !(a.defect_tol > 0.0) {
        return Err(usage("--defect-tol must be positive"));
    }
    let p = read_profile(&a.file, a.model.as_deref())?;
    let opts = BoundaryOptions { window_fraction: a.window, tol: a.defect_tol, residual_tol: tol };
    let report = classify(&p, a.class.column(), a.lambda, &opts)?;
    let r = ClassifyReport::new(&a.file.display().to_string(), &report, tol);
    emit(out, &if json { format::to_json_pretty(&r) } else { r.render() })?;
    Ok(if r.passes { EXIT_PASS } else { EXIT_FAIL })
}

pub fn table_text(symmetry: Symmetry, fmt: Format) -> String {
    let rows: Vec<CatalogRow> = catalog(symmetry).iter().map(CatalogRow::new).collect();
    match fmt {
        Format::Csv => catalog_csv(&rows),
        Format::Json => format::to_json_pretty(&rows),
    }
}

fn cmd_table(a: &TableArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let symmetry: Symmetry = a.symmetry.parse().map_err(|e: BoundaryError| usage(e.to_string()))?;
    let text = table_text(symmetry, a.format);
    match &a.output {
        Some(path) => write_text(path, &text)?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_PASS)
}

fn cmd_hypersurface(a: &HypersurfaceArgs, tol: f64, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let r = Expr::parse(&a.r, "s")?;
    let p = hypersurface_profile(|s| r.eval(s), (a.s_min, a.s_max), a.samples)?;
    let rep = ResidualSummary::new(&residual(&p, EquationClass::Cosymplectic, None)?, tol);
    let passes = rep.passes;
    let mut report = SolveReport {
        family: "hypersurface".to_string(),
        model: p.model().as_str().to_string(),
        samples: p.len(),
        interval: [p.t()[0], p.t()[p.len() - 1]],
        parameters: vec![Named { name: "s_min".into(), value: a.s_min }, Named { name: "s_max".into(), value: a.s_max }],
        status: "completed".to_string(),
        halted_at: None,
        events: Vec::new(),
        first_integral_drift: None,
        residuals: vec![rep],
        output: None,
        passes,
    };
    if let Some(path) = &a.output {
        report.output = Some(write_profile(path, a.format, &p)?);
    }
    emit(out, &if json { format::to_json_pretty(&report) } else { report.render() })?;
    Ok(if passes { EXIT_PASS } else { EXIT_FAIL })
}
