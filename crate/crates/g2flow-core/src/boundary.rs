//! Smoothness at special orbits, periodicity over circle bases, and the
//! catalog of cohomogeneity-one manifolds with G₂, SU(3) and Sp(2)
//! symmetry.
//!
//! A special-orbit condition is a list of parity requirements on f₁, f₂,
//! f₃, sinθ, cosθ about the anchor, plus slope and non-vanishing
//! constraints. At an endpoint of the grid there is no data on the far
//! side, so parity is measured by least-squares fits with even-only or
//! odd-only Chebyshev polynomials on a window; the defect is the sup of
//! the fit residual. At an interior anchor the profile is reflected.
//!
//! For SU(3) the conditions come in three relabelled copies: CP2_k has fₖ
//! collapsing (fₖ odd, |fₖ′(0)| = 1), the exceptional orbit with index k
//! has fₖ even and non-zero, and in both cases the other two radii satisfy
//! fⱼ²(t) = fₗ²(−t), i.e. fⱼ² + fₗ² is even and fⱼ² − fₗ² is odd.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cohom1::{residual, Cohom1Error, EquationClass, ResidualReport};
use crate::linalg::{least_squares, LinalgError, Mat};
use crate::math::{abs, cos, sin};
use crate::numeric::fd::derivative;
use crate::numeric::interp::lagrange_local;
use crate::numeric::NumericError;
use crate::orbits::{build_orbit_model, ModelId, OrbitError};
use crate::profile::Profile;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryError {
    Cohom1(Cohom1Error),
    Orbit(OrbitError),
    Numeric(NumericError),
    Linalg(LinalgError),
    /// The anchor lies outside the sampled interval.
    AnchorOutsideGrid { t: f64 },
    /// Too few samples in the parity window.
    WindowTooShort { needed: usize, got: usize },
    PeriodTooLong { period: f64, length: f64 },
    UnknownCondition(String),
    UnknownElement(String),
    UnknownSymmetry(String),
    UnknownColumn(String),
    ResidualTooLarge { class: EquationClass, max_abs: f64 },
}

impl fmt::Display for BoundaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use BoundaryError::*;
        match self {
            Cohom1(e) => write!(f, "{e}"),
            Orbit(e) => write!(f, "{e}"),
            Numeric(e) => write!(f, "{e}"),
            Linalg(e) => write!(f, "{e}"),
            AnchorOutsideGrid { t } => write!(f, "anchor t = {t} is outside the grid"),
            WindowTooShort { needed, got } => write!(f, "parity window needs {needed} samples, got {got}"),
            PeriodTooLong { period, length } => write!(f, "period {period} exceeds the grid length {length}"),
            UnknownCondition(s) => write!(f, "unknown special orbit '{s}'"),
            UnknownElement(s) => write!(f, "unknown normalizer element '{s}'"),
            UnknownSymmetry(s) => write!(f, "unknown symmetry '{s}' (expected g2, su3 or sp2)"),
            UnknownColumn(s) => write!(f, "unknown table column '{s}' (expected holonomy, weak or cosymplectic)"),
            ResidualTooLarge { class, max_abs } => {
                write!(f, "profile fails the {class} residual ({max_abs:e}); refusing to classify")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BoundaryError {}

impl From<Cohom1Error> for BoundaryError {
    fn from(e: Cohom1Error) -> Self {
        BoundaryError::Cohom1(e)
    }
}

impl From<OrbitError> for BoundaryError {
    fn from(e: OrbitError) -> Self {
        BoundaryError::Orbit(e)
    }
}

impl From<NumericError> for BoundaryError {
    fn from(e: NumericError) -> Self {
        BoundaryError::Numeric(e)
    }
}

impl From<LinalgError> for BoundaryError {
    fn from(e: LinalgError) -> Self {
        BoundaryError::Linalg(e)
    }
}

// ---------------------------------------------------------------------------
// Conditions.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// A scalar built from the profile; radius indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Radius(usize),
    SinTheta,
    CosTheta,
    SquareSum(usize, usize),
    SquareDiff(usize, usize),
}

impl Quantity {
    fn eval(self, f: [f64; 3], theta: f64) -> f64 {
        match self {
            Quantity::Radius(k) => f[k],
            Quantity::SinTheta => sin(theta),
            Quantity::CosTheta => cos(theta),
            Quantity::SquareSum(j, l) => f[j] * f[j] + f[l] * f[l],
            Quantity::SquareDiff(j, l) => f[j] * f[j] - f[l] * f[l],
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Radius(k) => write!(f, "f{}", k + 1),
            Quantity::SinTheta => write!(f, "sin(theta)"),
            Quantity::CosTheta => write!(f, "cos(theta)"),
            Quantity::SquareSum(j, l) => write!(f, "f{}^2+f{}^2", j + 1, l + 1),
            Quantity::SquareDiff(j, l) => write!(f, "f{}^2-f{}^2", j + 1, l + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityRequirement {
    pub quantity: Quantity,
    pub parity: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueConstraint {
    /// |fₖ′(0)| = 1.
    UnitSlope(usize),
    /// fₖ(0) ≠ 0.
    NonZero(usize),
}

/// The shape of a special orbit, independent of SU(3) relabelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitKind {
    /// {∗} = G₂/G₂.
    Point,
    /// RP(6) = G₂/N(SU(3)).
    Rp6,
    /// CP(2)ₖ = SU(3)/U(2).
    Cp2,
    /// F_σ = F₁,₂/A_σ for a transposition σ.
    Exceptional,
    /// F_Σ = F₁,₂/Σ₃ over the principal orbit F₍₁₂₃₎.
    FSigma,
    /// S⁴ = HP(1).
    S4,
    /// C = CP(3)/ℤ₂.
    C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecialOrbitCondition {
    pub orbit_name: String,
    pub kind: OrbitKind,
    /// 0-based index of the distinguished radius (SU(3) relabelling).
    pub index: usize,
    pub parity: Vec<ParityRequirement>,
    pub value_constraints: Vec<ValueConstraint>,
    /// Pairs (j, l) with fⱼ²(t) = fₗ²(−t).
    pub cross_relations: Vec<(usize, usize)>,
}

impl SpecialOrbitCondition {
    fn collapsing(name: &str, kind: OrbitKind, k: usize, others: Option<(usize, usize)>) -> Self {
        let mut parity = vec![
            ParityRequirement { quantity: Quantity::Radius(k), parity: Parity::Odd },
            ParityRequirement { quantity: Quantity::SinTheta, parity: Parity::Odd },
            ParityRequirement { quantity: Quantity::CosTheta, parity: Parity::Even },
        ];
        let mut value_constraints = vec![ValueConstraint::UnitSlope(k)];
        let mut cross_relations = Vec::new();
        if let Some((j, l)) = others {
            parity.push(ParityRequirement { quantity: Quantity::SquareSum(j, l), parity: Parity::Even });
            parity.push(ParityRequirement { quantity: Quantity::SquareDiff(j, l), parity: Parity::Odd });
            value_constraints.push(ValueConstraint::NonZero(j));
            cross_relations.push((j, l));
        }
        SpecialOrbitCondition { orbit_name: name.to_string(), kind, index: k, parity, value_constraints, cross_relations }
    }

    fn reflecting(name: &str, kind: OrbitKind, k: usize, others: Option<(usize, usize)>) -> Self {
        let mut parity = vec![
            ParityRequirement { quantity: Quantity::Radius(k), parity: Parity::Even },
            ParityRequirement { quantity: Quantity::SinTheta, parity: Parity::Even },
            ParityRequirement { quantity: Quantity::CosTheta, parity: Parity::Odd },
        ];
        let mut value_constraints = vec![ValueConstraint::NonZero(k)];
        let mut cross_relations = Vec::new();
        if let Some((j, l)) = others {
            parity.push(ParityRequirement { quantity: Quantity::SquareSum(j, l), parity: Parity::Even });
            parity.push(ParityRequirement { quantity: Quantity::SquareDiff(j, l), parity: Parity::Odd });
            value_constraints.push(ValueConstraint::NonZero(j));
            cross_relations.push((j, l));
        }
        SpecialOrbitCondition { orbit_name: name.to_string(), kind, index: k, parity, value_constraints, cross_relations }
    }
}

const EXCEPTIONAL_NAMES: [&str; 3] = ["F23", "F13", "F12"];
const CP2_NAMES: [&str; 3] = ["CP2_1", "CP2_2", "CP2_3"];

/// Every special-orbit condition available for a principal orbit.
pub fn conditions(model: ModelId) -> Vec<SpecialOrbitCondition> {
    match model {
        ModelId::G2Su3 => vec![
            SpecialOrbitCondition::collapsing("point", OrbitKind::Point, 0, None),
            SpecialOrbitCondition::reflecting("RP6", OrbitKind::Rp6, 0, None),
        ],
        ModelId::Su3T123 => vec![SpecialOrbitCondition::reflecting("F_Sigma", OrbitKind::FSigma, 0, None)],
        ModelId::Su3T2 => {
            let mut out = Vec::new();
            for k in 0..3 {
                let others = Some(((k + 1) % 3, (k + 2) % 3)).map(|(a, b)| (a.min(b), a.max(b)));
                out.push(SpecialOrbitCondition::collapsing(CP2_NAMES[k], OrbitKind::Cp2, k, others));
                out.push(SpecialOrbitCondition::reflecting(EXCEPTIONAL_NAMES[k], OrbitKind::Exceptional, k, others));
            }
            out
        }
        ModelId::Sp2 => vec![
            SpecialOrbitCondition::collapsing("S4", OrbitKind::S4, 0, Some((1, 2))),
            SpecialOrbitCondition::reflecting("C", OrbitKind::C, 0, Some((1, 2))),
        ],
    }
}

/// Looks up a condition by orbit name for the given principal orbit.
pub fn condition(model: ModelId, name: &str) -> Result<SpecialOrbitCondition, BoundaryError> {
    conditions(model)
        .into_iter()
        .find(|c| c.orbit_name == name)
        .ok_or_else(|| BoundaryError::UnknownCondition(name.to_string()))
}

// ---------------------------------------------------------------------------
// Parity checks.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    Start,
    End,
    /// Reflection about an interior point.
    Interior(f64),
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anchor::Start => write!(f, "start"),
            Anchor::End => write!(f, "end"),
            Anchor::Interior(t) => write!(f, "t={t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// Half-width of the parity window as a fraction of the domain length.
    pub window_fraction: f64,
    /// Largest accepted parity or slope defect; also the floor below which
    /// a value counts as vanishing.
    pub tol: f64,
    /// Tolerance on the equation residual that classification requires.
    pub residual_tol: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions { window_fraction: 0.1, tol: 1e-6, residual_tol: 1e-8 }
    }
}

/// Number of even (or odd) Chebyshev terms in an endpoint fit.
const FIT_TERMS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub orbit_name: String,
    pub anchor: Anchor,
    /// Parity and slope defects, each of which must be below tolerance.
    pub residuals: Vec<(String, f64)>,
    /// Values at the anchor that must stay away from zero.
    pub margins: Vec<(String, f64)>,
    pub max_defect: f64,
    pub passes: bool,
}

/// Chebyshev Tₙ(x) and Tₙ′(x) for n = 0..count.
fn chebyshev(x: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; count];
    let mut u = vec![0.0; count];
    let mut dt = vec![0.0; count];
    if count > 0 {
        t[0] = 1.0;
        u[0] = 1.0;
    }
    if count > 1 {
        t[1] = x;
        u[1] = 2.0 * x;
    }
    for n in 2..count {
        t[n] = 2.0 * x * t[n - 1] - t[n - 2];
        u[n] = 2.0 * x * u[n - 1] - u[n - 2];
    }
    for n in 1..count {
        dt[n] = n as f64 * u[n - 1];
    }
    (t, dt)
}

/// Least-squares fit of samples u(τ), τ ∈ [0, w], by Σ cₖ T_{2k+p}(τ/w);
/// returns (sup residual, value at 0, derivative at 0).
fn parity_fit(tau: &[f64], u: &[f64], w: f64, parity: Parity) -> Result<(f64, f64, f64), BoundaryError> {
    let m = tau.len();
    let terms = FIT_TERMS.min(m.saturating_sub(1) / 2).max(1);
    let off = if parity == Parity::Even { 0 } else { 1 };
    let total = 2 * terms + 1;
    let a = Mat::from_fn(m, terms, |i, k| chebyshev(tau[i] / w, total).0[2 * k + off]);
    let (c, _) = least_squares(&a, u)?;
    let mut worst = 0.0f64;
    for i in 0..m {
        let (t, _) = chebyshev(tau[i] / w, total);
        let v: f64 = (0..terms).map(|k| c[k] * t[2 * k + off]).sum();
        worst = worst.max(abs(v - u[i]));
    }
    let (t0, d0) = chebyshev(0.0, total);
    let value = (0..terms).map(|k| c[k] * t0[2 * k + off]).sum();
    let slope = (0..terms).map(|k| c[k] * d0[2 * k + off]).sum::<f64>() / w;
    Ok((worst, value, slope))
}

/// Samples on one side of the anchor: distances τ ≥ 0 and indices.
fn window(p: &Profile, anchor: Anchor, opts: &BoundaryOptions) -> Result<Vec<(f64, usize)>, BoundaryError> {
    let t = p.t();
    let n = t.len();
    let (a, b) = (t[0], t[n - 1]);
    let w = opts.window_fraction * (b - a);
    let min_pts = 2 * FIT_TERMS + 2;
    let mut out: Vec<(f64, usize)> = match anchor {
        Anchor::Start => (0..n).map(|i| (t[i] - a, i)).collect(),
        Anchor::End => (0..n).rev().map(|i| (b - t[i], i)).collect(),
        Anchor::Interior(_) => unreachable!("interior anchors are reflected"),
    };
    let within = out.iter().take_while(|(d, _)| *d <= w * (1.0 + 1e-12)).count();
    let keep = within.max(min_pts).min(n);
    if keep < min_pts {
        return Err(BoundaryError::WindowTooShort { needed: min_pts, got: keep });
    }
    out.truncate(keep);
    Ok(out)
}

fn derivative_at(p: &Profile, k: usize, i: usize) -> Result<f64, BoundaryError> {
    if let Some(d) = p.derivatives() {
        return Ok(d.radii.at(i)[k]);
    }
    let f: Vec<f64> = (0..p.len()).map(|j| p.radii().at(j)[k]).collect();
    Ok(derivative(p.t(), &f, 1)?[i])
}

/// Measures every requirement of `cond` at `anchor`.
pub fn check_special_orbit(
    p: &Profile,
    anchor: Anchor,
    cond: &SpecialOrbitCondition,
    opts: &BoundaryOptions,
) -> Result<ConditionCheck, BoundaryError> {
    let mut residuals = Vec::new();
    let mut margins = Vec::new();
    let n = p.len();
    let value = |q: Quantity, i: usize| q.eval(p.radii().at(i), p.theta()[i]);
    match anchor {
        Anchor::Interior(t0) => {
            let t = p.t();
            if !(t0 > t[0] && t0 < t[n - 1]) {
                return Err(BoundaryError::AnchorOutsideGrid { t: t0 });
            }
            let reach = (t0 - t[0]).min(t[n - 1] - t0).min(opts.window_fraction * (t[n - 1] - t[0]));
            let series = |q: Quantity| -> Vec<f64> { (0..n).map(|i| value(q, i)).collect() };
            let interp = |ys: &[f64], x: f64| lagrange_local(t, ys, x, 6);
            let taus: Vec<f64> = (0..=40).map(|k| reach * k as f64 / 40.0).collect();
            for req in &cond.parity {
                let ys = series(req.quantity);
                let mut worst = 0.0f64;
                for &tau in &taus {
                    let (l, r) = (interp(&ys, t0 - tau)?, interp(&ys, t0 + tau)?);
                    let d = match req.parity {
                        Parity::Even => r - l,
                        Parity::Odd => r + l,
                    };
                    worst = worst.max(abs(d));
                }
                residuals.push((format!("{} {}", req.quantity, parity_word(req.parity)), worst));
            }
            for vc in &cond.value_constraints {
                match *vc {
                    ValueConstraint::UnitSlope(k) => {
                        let ys = series(Quantity::Radius(k));
                        let h = 1e-3 * reach.max(1e-3);
                        let d = (interp(&ys, t0 + h)? - interp(&ys, t0 - h)?) / (2.0 * h);
                        residuals.push((format!("|f{}'(0)|-1", k + 1), abs(abs(d) - 1.0)));
                    }
                    ValueConstraint::NonZero(k) => {
                        margins.push((format!("f{}(0)", k + 1), interp(&series(Quantity::Radius(k)), t0)?));
                    }
                }
            }
        }
        Anchor::Start | Anchor::End => {
            let win = window(p, anchor, opts)?;
            let w = win.last().map(|x| x.0).unwrap_or(1.0).max(f64::MIN_POSITIVE);
            let tau: Vec<f64> = win.iter().map(|x| x.0).collect();
            let i0 = win[0].1;
            let mut slopes = Vec::new();
            for req in &cond.parity {
                let u: Vec<f64> = win.iter().map(|&(_, i)| value(req.quantity, i)).collect();
                let (defect, _, slope) = parity_fit(&tau, &u, w, req.parity)?;
                residuals.push((format!("{} {}", req.quantity, parity_word(req.parity)), defect));
                slopes.push((req.quantity, slope));
            }
            for vc in &cond.value_constraints {
                match *vc {
                    ValueConstraint::UnitSlope(k) => {
                        let fitted = slopes.iter().find(|(q, _)| *q == Quantity::Radius(k)).map(|x| x.1);
                        let slope = match fitted {
                            Some(s) => s,
                            None => derivative_at(p, k, i0)?,
                        };
                        residuals.push((format!("|f{}'(0)|-1", k + 1), abs(abs(slope) - 1.0)));
                    }
                    ValueConstraint::NonZero(k) => {
                        margins.push((format!("f{}(0)", k + 1), p.radii().at(i0)[k]));
                    }
                }
            }
        }
    }
    let max_defect = residuals.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
    let margins_ok = margins.iter().all(|(_, v)| abs(*v) > opts.tol);
    let passes = max_defect < opts.tol && margins_ok;
    Ok(ConditionCheck { orbit_name: cond.orbit_name.clone(), anchor, residuals, margins, max_defect, passes })
}

fn parity_word(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

// ---------------------------------------------------------------------------
// Periodicity.

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityReport {
    pub element: String,
    pub period: f64,
    /// sup |f_{σ(i)}²(t + P) − fᵢ²(t)| and the same for first derivatives.
    pub radii_defect: f64,
    /// sup over cosθ and sinθ of the analogous defect under the element's
    /// action on α and β.
    pub theta_defect: f64,
    pub reverses_orientation: bool,
}

impl PeriodicityReport {
    pub fn max_defect(&self) -> f64 {
        self.radii_defect.max(self.theta_defect)
    }
}

/// Metric permutation σ (g_i ↦ g_σ(i)) and the signs of α, β under an
/// element, expanded to three radii.
fn element_action(model: ModelId, name: &str) -> Result<([usize; 3], f64, f64, bool), BoundaryError> {
    let m = build_orbit_model(model)?;
    let el = m.normalizer(name).map_err(|_| BoundaryError::UnknownElement(name.to_string()))?.clone();
    let count = m.metric_generators().len();
    let mut sigma_small = [0usize; 3];
    for i in 0..count {
        let img = m.act_metric(&el, i)?;
        let j = img.iter().position(|v| abs(*v - 1.0) < 1e-9).unwrap_or(i);
        sigma_small[i] = j;
    }
    // Expand to (f₁, f₂, f₃): Equal has one generator, Pair has (g₁, g₂+g₃).
    let sigma = match count {
        1 => [0, 1, 2],
        2 => [sigma_small[0], if sigma_small[1] == 1 { 1 } else { 0 }, if sigma_small[1] == 1 { 2 } else { 0 }],
        _ => sigma_small,
    };
    let a = m.act(&el, &m.unit("α")?)?.coords[m.generator("α")?.1];
    let b = m.act(&el, &m.unit("β")?)?.coords[m.generator("β")?.1];
    Ok((sigma, a, b, el.reverses_orientation))
}

/// Checks that the structure at t + P is the pullback of the structure at
/// t by `element`. With `period = None` the grid is one period and the
/// 1-jets at the two ends are compared.
pub fn check_periodicity(p: &Profile, element: &str, period: Option<f64>) -> Result<PeriodicityReport, BoundaryError> {
    let t = p.t();
    let n = t.len();
    let length = t[n - 1] - t[0];
    let (sigma, a, b, reverses) = element_action(p.model(), element)?;
    let period = period.unwrap_or(length);
    if period > length * (1.0 + 1e-12) {
        return Err(BoundaryError::PeriodTooLong { period, length });
    }
    let radii: Vec<Vec<f64>> = (0..3).map(|k| (0..n).map(|i| p.radii().at(i)[k]).collect()).collect();
    let sq: Vec<Vec<f64>> = radii.iter().map(|r| r.iter().map(|x| x * x).collect()).collect();
    let cs: Vec<f64> = p.theta().iter().map(|x| cos(*x)).collect();
    let sn: Vec<f64> = p.theta().iter().map(|x| sin(*x)).collect();
    let mut radii_defect = 0.0f64;
    let mut theta_defect = 0.0f64;
    let ends_only = period >= length * (1.0 - 1e-12);
    let pts: Vec<usize> = if ends_only { vec![0] } else { (0..n).filter(|&i| t[i] + period <= t[n - 1]).collect() };
    let shifted = |ys: &[f64], x: f64| -> Result<f64, BoundaryError> {
        if ends_only {
            Ok(ys[n - 1])
        } else {
            Ok(lagrange_local(t, ys, x, 6)?)
        }
    };
    for &i in &pts {
        let x = t[i] + period;
        for k in 0..3 {
            radii_defect = radii_defect.max(abs(shifted(&sq[sigma[k]], x)? - sq[k][i]));
        }
        theta_defect = theta_defect.max(abs(shifted(&cs, x)? - a * cs[i]));
        theta_defect = theta_defect.max(abs(shifted(&sn, x)? - b * sn[i]));
    }
    if ends_only {
        // First derivatives of fₖ² and of (cosθ, sinθ).
        let mut dsq = Vec::new();
        for k in 0..3 {
            let d0 = derivative_at(p, k, 0)?;
            let d1 = derivative_at(p, k, n - 1)?;
            dsq.push((2.0 * radii[k][0] * d0, 2.0 * radii[k][n - 1] * d1));
        }
        for k in 0..3 {
            radii_defect = radii_defect.max(abs(dsq[sigma[k]].1 - dsq[k].0));
        }
        let dth = match p.derivatives() {
            Some(d) => (d.theta[0], d.theta[n - 1]),
            None => {
                let d = derivative(t, p.theta(), 1)?;
                (d[0], d[n - 1])
            }
        };
        let th = p.theta();
        let dc = (-sin(th[0]) * dth.0, -sin(th[n - 1]) * dth.1);
        let ds = (cos(th[0]) * dth.0, cos(th[n - 1]) * dth.1);
        theta_defect = theta_defect.max(abs(dc.1 - a * dc.0)).max(abs(ds.1 - b * ds.0));
    }
    Ok(PeriodicityReport { element: element.to_string(), period, radii_defect, theta_defect, reverses_orientation: reverses })
}

// ---------------------------------------------------------------------------
// Catalog.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    G2,
    Su3,
    Sp2,
}

impl Symmetry {
    pub fn of(model: ModelId) -> Symmetry {
        match model {
            ModelId::G2Su3 => Symmetry::G2,
            ModelId::Su3T2 | ModelId::Su3T123 => Symmetry::Su3,
            ModelId::Sp2 => Symmetry::Sp2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Symmetry::G2 => "g2",
            Symmetry::Su3 => "su3",
            Symmetry::Sp2 => "sp2",
        }
    }
}

impl FromStr for Symmetry {
    type Err = BoundaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g2" => Ok(Symmetry::G2),
            "su3" => Ok(Symmetry::Su3),
            "sp2" => Ok(Symmetry::Sp2),
            _ => Err(BoundaryError::UnknownSymmetry(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseTopology {
    Line,
    Circle,
    HalfOpen,
    ClosedInterval,
}

impl BaseTopology {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseTopology::Line => "line",
            BaseTopology::Circle => "circle",
            BaseTopology::HalfOpen => "half-open",
            BaseTopology::ClosedInterval => "closed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Existence {
    None,
    Complete,
    Incomplete,
    NoG2Structure,
}

impl Existence {
    pub fn as_str(self) -> &'static str {
        match self {
            Existence::None => "None",
            Existence::Complete => "Complete",
            Existence::Incomplete => "Incomplete",
            Existence::NoG2Structure => "No G₂ structure",
        }
    }
}

/// The three existence columns of the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableColumn {
    HolonomySymplectic,
    WeakHolonomy,
    Cosymplectic,
}

impl TableColumn {
    pub fn as_str(self) -> &'static str {
        match self {
            TableColumn::HolonomySymplectic => "holonomy & symplectic",
            TableColumn::WeakHolonomy => "weak holonomy",
            TableColumn::Cosymplectic => "cosymplectic",
        }
    }

    /// Equation classes a profile must satisfy to be placed in the column.
    pub fn classes(self) -> &'static [EquationClass] {
        match self {
            TableColumn::HolonomySymplectic => &[EquationClass::Symplectic],
            TableColumn::WeakHolonomy => &[EquationClass::WeakHolonomy],
            TableColumn::Cosymplectic => &[EquationClass::Cosymplectic],
        }
    }
}

impl FromStr for TableColumn {
    type Err = BoundaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "holonomy" | "symplectic" => Ok(TableColumn::HolonomySymplectic),
            "weak" | "weak-holonomy" => Ok(TableColumn::WeakHolonomy),
            "cosymplectic" => Ok(TableColumn::Cosymplectic),
            _ => Err(BoundaryError::UnknownColumn(s.to_string())),
        }
    }
}

/// How a row's base is built from special orbits or a gluing element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowShape {
    /// Two special orbits; `same_index` distinguishes the two double cosets
    /// under SU(3) (e.g. CP(2)₁ at both ends versus CP(2)₁ and CP(2)₂).
    Closed { left: OrbitKind, right: OrbitKind, same_index: bool },
    HalfOpen(OrbitKind),
    /// ℝ ×_h G/K for a normalizer element h; "identity" gives S¹ × G/K.
    Circle(&'static str),
    Line,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCatalogEntry {
    pub symmetry: Symmetry,
    pub manifold_label: &'static str,
    pub principal_orbit: &'static str,
    pub model: ModelId,
    pub base: BaseTopology,
    pub shape: RowShape,
    pub holonomy_symplectic: Existence,
    pub weak_holonomy: Existence,
    pub cosymplectic: Existence,
}

impl ManifoldCatalogEntry {
    pub fn existence(&self, column: TableColumn) -> Existence {
        match column {
            TableColumn::HolonomySymplectic => self.holonomy_symplectic,
            TableColumn::WeakHolonomy => self.weak_holonomy,
            TableColumn::Cosymplectic => self.cosymplectic,
        }
    }
}

fn row(
    symmetry: Symmetry,
    model: ModelId,
    label: &'static str,
    principal: &'static str,
    shape: RowShape,
    cols: [Existence; 3],
) -> ManifoldCatalogEntry {
    let base = match shape {
        RowShape::Closed { .. } => BaseTopology::ClosedInterval,
        RowShape::HalfOpen(_) => BaseTopology::HalfOpen,
        RowShape::Circle(_) => BaseTopology::Circle,
        RowShape::Line => BaseTopology::Line,
    };
    ManifoldCatalogEntry {
        symmetry,
        manifold_label: label,
        principal_orbit: principal,
        model,
        base,
        shape,
        holonomy_symplectic: cols[0],
        weak_holonomy: cols[1],
        cosymplectic: cols[2],
    }
}

/// The rows of the table for one symmetry group, in table order.
///
/// The row set is the finished result of the double-coset and normalizer
/// analysis: closed intervals for each unordered pair of special orbits
/// and each double coset, half-open intervals for each special orbit,
/// circles for each normalizer component, and the line. Circles glued by
/// an orientation-reversing element carry no G₂-structure.
pub fn catalog(symmetry: Symmetry) -> Vec<ManifoldCatalogEntry> {
    use Existence::{Complete as Y, Incomplete as I, NoG2Structure as X, None as N};
    use OrbitKind::*;
    use RowShape::*;
    let closed = |left, right, same_index| Closed { left, right, same_index };
    match symmetry {
        Symmetry::G2 => {
            let r = |label, shape, cols| row(Symmetry::G2, ModelId::G2Su3, label, "S⁶", shape, cols);
            vec![
                r("S⁷", closed(Point, Point, true), [N, Y, Y]),
                r("RP(7)", closed(Point, Rp6, true), [N, Y, Y]),
                r("RP(7)#RP(7)", closed(Rp6, Rp6, true), [N, N, Y]),
                r("S¹×S⁶", Circle("identity"), [N, N, Y]),
                r("ℝ×_{D₇}S⁶", Circle("D7"), [X, X, X]),
                r("⟨RP(6) | S⁶", HalfOpen(Rp6), [N, N, Y]),
                r("ℝ⁷", HalfOpen(Point), [Y, I, Y]),
                r("ℝ×S⁶", Line, [I, I, Y]),
            ]
        }
        Symmetry::Su3 => {
            let r = |label, shape, cols| row(Symmetry::Su3, ModelId::Su3T2, label, "F₁,₂", shape, cols);
            let q = |label, shape, cols| row(Symmetry::Su3, ModelId::Su3T123, label, "F₍₁₂₃₎", shape, cols);
            vec![
                r("[CP(2)₁ | F₁,₂ | CP(2)₁]", closed(Cp2, Cp2, true), [N, N, Y]),
                r("[CP(2)₁ | F₁,₂ | CP(2)₂]", closed(Cp2, Cp2, false), [N, N, N]),
                r("[CP(2)₁ | F₁,₂ | F₍₂₃₎]", closed(Cp2, Exceptional, true), [N, N, Y]),
                r("[CP(2)₁ | F₁,₂ | F₍₁₃₎]", closed(Cp2, Exceptional, false), [N, N, N]),
                r("[F₍₂₃₎ | F₁,₂ | F₍₂₃₎]", closed(Exceptional, Exceptional, true), [N, N, Y]),
                r("[F₍₂₃₎ | F₁,₂ | F₍₁₃₎]", closed(Exceptional, Exceptional, false), [N, N, Y]),
                r("S¹×F₁,₂", Circle("identity"), [N, N, Y]),
                r("ℝ×_{A₍₂₃₎}F₁,₂", Circle("A23"), [X, X, X]),
                r("ℝ×_{A₍₁₂₃₎}F₁,₂", Circle("A123"), [N, N, Y]),
                r("⟨CP(2)₁ | F₁,₂", HalfOpen(Cp2), [Y, N, Y]),
                r("⟨F₍₂₃₎ | F₁,₂", HalfOpen(Exceptional), [N, N, Y]),
                r("ℝ×F₁,₂", Line, [I, I, Y]),
                q("[F_Σ | F₍₁₂₃₎ | F_Σ]", closed(FSigma, FSigma, true), [N, N, Y]),
                q("⟨F_Σ | F₍₁₂₃₎", HalfOpen(FSigma), [N, N, Y]),
                q("S¹×F₍₁₂₃₎", Circle("identity"), [N, N, Y]),
                q("ℝ×_{A₍₂₃₎}F₍₁₂₃₎", Circle("A23"), [X, X, X]),
                q("ℝ×F₍₁₂₃₎", Line, [I, I, Y]),
            ]
        }
        Symmetry::Sp2 => {
            let r = |label, shape, cols| row(Symmetry::Sp2, ModelId::Sp2, label, "CP(3)", shape, cols);
            vec![
                r("[S⁴ | CP(3) | S⁴]", closed(S4, S4, true), [N, N, Y]),
                r("[S⁴ | CP(3) | C]", closed(S4, C, true), [N, N, Y]),
                r("[C | CP(3) | C]", closed(C, C, true), [N, N, Y]),
                r("S¹×CP(3)", Circle("identity"), [N, N, Y]),
                r("ℝ×_{D₂}CP(3)", Circle("D2"), [X, X, X]),
                r("⟨S⁴ | CP(3)", HalfOpen(S4), [Y, N, Y]),
                r("⟨C | CP(3)", HalfOpen(C), [N, N, Y]),
                r("ℝ×CP(3)", Line, [I, I, Y]),
            ]
        }
    }
}

// ---------------------------------------------------------------------------
// Classification.

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogMatch {
    pub manifold_label: &'static str,
    pub base: BaseTopology,
    pub existence: Existence,
    /// Whether the table admits a solution of this class on the row.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub column: TableColumn,
    pub residuals: Vec<ResidualReport>,
    pub start: Vec<ConditionCheck>,
    pub end: Vec<ConditionCheck>,
    pub periodicity: Vec<PeriodicityReport>,
    pub candidates: Vec<CatalogMatch>,
    /// Set only when exactly one catalog row matches.
    pub manifold_label: Option<&'static str>,
    pub interval_length: f64,
    pub notes: Vec<String>,
}

impl BoundaryReport {
    pub fn matched_start(&self) -> Vec<&str> {
        self.start.iter().filter(|c| c.passes).map(|c| c.orbit_name.as_str()).collect()
    }

    pub fn matched_end(&self) -> Vec<&str> {
        self.end.iter().filter(|c| c.passes).map(|c| c.orbit_name.as_str()).collect()
    }

    pub fn is_ambiguous(&self) -> bool {
        self.candidates.len() > 1
    }

    /// One-line summary: the label, the ambiguity, or "no catalog match".
    pub fn summary(&self) -> String {
        match (self.manifold_label, self.candidates.len()) {
            (Some(label), _) => label.to_string(),
            (None, 0) => "no catalog match (incomplete)".to_string(),
            (None, _) => {
                let labels: Vec<&str> = self.candidates.iter().map(|c| c.manifold_label).collect();
                format!("ambiguous: {}", labels.join(", "))
            }
        }
    }
}

fn closed_matches(shape: RowShape, a: &SpecialOrbitCondition, b: &SpecialOrbitCondition) -> bool {
    match shape {
        RowShape::Closed { left, right, same_index } => {
            let same = a.index == b.index;
            let kinds = (a.kind == left && b.kind == right) || (a.kind == right && b.kind == left);
            kinds && (same == same_index || !matches!(a.kind, OrbitKind::Cp2 | OrbitKind::Exceptional))
        }
        _ => false,
    }
}

/// Places a profile in the catalog: runs the residual of `column`, checks
/// every special-orbit condition at both ends and every normalizer
/// element for periodicity, then collects the matching rows.
pub fn classify(
    p: &Profile,
    column: TableColumn,
    lambda: Option<f64>,
    opts: &BoundaryOptions,
) -> Result<BoundaryReport, BoundaryError> {
    let mut residuals = Vec::new();
    for class in column.classes() {
        let r = residual(p, *class, lambda)?;
        if !r.passes(opts.residual_tol) {
            return Err(BoundaryError::ResidualTooLarge { class: *class, max_abs: r.max_abs });
        }
        residuals.push(r);
    }
    let model = p.model();
    let conds = conditions(model);
    let mut start = Vec::new();
    let mut end = Vec::new();
    for c in &conds {
        start.push(check_special_orbit(p, Anchor::Start, c, opts)?);
        end.push(check_special_orbit(p, Anchor::End, c, opts)?);
    }
    let orbit_model = build_orbit_model(model)?;
    let mut periodicity = Vec::new();
    for el in orbit_model.normalizers() {
        periodicity.push(check_periodicity(p, &el.name, None)?);
    }

    let rows: Vec<ManifoldCatalogEntry> =
        catalog(Symmetry::of(model)).into_iter().filter(|r| r.model == model).collect();
    let start_ok: Vec<&SpecialOrbitCondition> =
        conds.iter().zip(&start).filter(|(_, c)| c.passes).map(|(c, _)| c).collect();
    let end_ok: Vec<&SpecialOrbitCondition> =
        conds.iter().zip(&end).filter(|(_, c)| c.passes).map(|(c, _)| c).collect();
    let mut picked: Vec<usize> = Vec::new();
    let mut push = |i: usize| {
        if !picked.contains(&i) {
            picked.push(i);
        }
    };
    let mut notes = Vec::new();
    if !start_ok.is_empty() && !end_ok.is_empty() {
        for a in &start_ok {
            for b in &end_ok {
                for (i, _) in rows.iter().enumerate().filter(|(_, r)| closed_matches(r.shape, a, b)) {
                    push(i);
                }
            }
        }
    } else {
        for c in start_ok.iter().chain(end_ok.iter()) {
            for (i, _) in rows.iter().enumerate().filter(|(_, r)| r.shape == RowShape::HalfOpen(c.kind)) {
                push(i);
            }
        }
    }
    for pr in periodicity.iter().filter(|pr| pr.max_defect() < opts.tol) {
        if pr.reverses_orientation {
            notes.push(format!("periodic under {} but it reverses vol₀: no G₂-structure", pr.element));
            continue;
        }
        // Every 3-cycle gives the same space as A123.
        let name = if pr.element == "A132" { "A123" } else { pr.element.as_str() };
        for (i, _) in rows.iter().enumerate().filter(|(_, r)| matches!(r.shape, RowShape::Circle(e) if e == name)) {
            push(i);
        }
    }
    for side in [(&start, "start"), (&end, "end")] {
        let names: Vec<&str> = side.0.iter().filter(|c| c.passes).map(|c| c.orbit_name.as_str()).collect();
        if names.len() > 1 {
            notes.push(format!("several special orbits fit at the {}: {}", side.1, names.join(", ")));
        }
    }
    let candidates: Vec<CatalogMatch> = picked
        .iter()
        .map(|&i| {
            let r = &rows[i];
            let e = r.existence(column);
            CatalogMatch {
                manifold_label: r.manifold_label,
                base: r.base,
                existence: e,
                consistent: matches!(e, Existence::Complete | Existence::Incomplete),
            }
        })
        .collect();
    let manifold_label = if candidates.len() == 1 { Some(candidates[0].manifold_label) } else { None };
    if candidates.is_empty() {
        notes.push("no special orbit or periodicity matches".to_string());
    }
    let t = p.t();
    Ok(BoundaryReport {
        column,
        residuals,
        start,
        end,
        periodicity,
        candidates,
        manifold_label,
        interval_length: t[t.len() - 1] - t[0],
        notes,
    })
}
