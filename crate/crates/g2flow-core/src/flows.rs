//! Solution families: the cosymplectic flow with its conserved μ, ν, the
//! triaxial holonomy family and its Bryant–Salamon specializations, weak
//! holonomy, the symplectic (h, x, y) system and the Euler-top reduction.
//!
//! Throughout, the conserved quantities of the cosymplectic flow are
//!
//! ```text
//! f₁²(f₃² − f₂²) = μ²,   f₂²(f₃² − f₁²) = ν²,   f₃²(f₂² − f₁²) = ν² − μ²
//! ```
//!
//! with ν ≥ μ ≥ 0.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::cohom1::{residual, Cohom1Error, EquationClass, ResidualReport};
use crate::math::{abs, cbrt, cos, exp, sin, sqrt};
use crate::numeric::fd::{central_directional, central_directional6, derivative};
use crate::numeric::interp::lagrange_local;
use crate::numeric::ode::{dopri5, EventSpec, OdeOptions, OdeStatus};
use crate::numeric::quad::{integrate, invert_arc_length};
use crate::numeric::{linspace, NumericError};
use crate::orbits::ModelId;
use crate::profile::{Profile, ProfileDerivatives, ProfileError, Radii};

/// θ as a function of t.
pub type ThetaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    Profile(ProfileError),
    Numeric(NumericError),
    Cohom1(Cohom1Error),
    InvalidParams(String),
    /// The requested ε disagrees with sgn(f₁² − μ).
    BranchMismatch { f1: f64, mu: f64, epsilon: f64 },
    /// Ξ has a pole at f₁ = 0 when μ > 0.
    Pole { t: f64 },
    /// The quadratic for y has no positive root.
    NoPositiveRoot { t: f64, discriminant: f64 },
    /// r reaches μ > 0, where the holonomy family is singular.
    SingularEndpoint { r: f64, mu: f64 },
    NotHolonomy { residual: f64 },
    /// A family that needs θ(t) was evaluated without one.
    MissingTheta,
    Halted { event: String, t: f64 },
    UnknownFamily(String),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FlowError::*;
        match self {
            Profile(e) => write!(f, "{e}"),
            Numeric(e) => write!(f, "{e}"),
            Cohom1(e) => write!(f, "{e}"),
            InvalidParams(s) => write!(f, "invalid parameters: {s}"),
            BranchMismatch { f1, mu, epsilon } => {
                write!(f, "ε = {epsilon} but sgn(f₁² − μ) disagrees at f₁ = {f1}, μ = {mu}")
            }
            Pole { t } => write!(f, "Ξ pole: f₁ reaches 0 with μ > 0 near t = {t}"),
            NoPositiveRoot { t, discriminant } => {
                write!(f, "no positive root for y at t = {t} (discriminant {discriminant})")
            }
            SingularEndpoint { r, mu } => write!(f, "r = {r} touches the singular value μ = {mu}"),
            NotHolonomy { residual } => write!(f, "profile is not holonomy G₂ (residual {residual:e})"),
            MissingTheta => write!(f, "this family needs a θ(t) function"),
            Halted { event, t } => write!(f, "integration halted at {event}, t = {t}"),
            UnknownFamily(s) => write!(f, "unknown family '{s}'"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FlowError {}

impl From<ProfileError> for FlowError {
    fn from(e: ProfileError) -> Self {
        FlowError::Profile(e)
    }
}

impl From<NumericError> for FlowError {
    fn from(e: NumericError) -> Self {
        FlowError::Numeric(e)
    }
}

impl From<Cohom1Error> for FlowError {
    fn from(e: Cohom1Error) -> Self {
        FlowError::Cohom1(e)
    }
}

// ---------------------------------------------------------------------------
// Parameters.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub residual_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ode_rtol: 1e-10, ode_atol: 1e-12, residual_tol: 1e-8 }
    }
}

/// Sign choices ε, ε₂₃, ε₃₁, ε₁₂*, ε_θ, each ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSigns {
    pub epsilon: f64,
    pub eps23: f64,
    pub eps31: f64,
    pub eps12_star: f64,
    pub eps_theta: f64,
}

impl Default for EpsilonSigns {
    fn default() -> Self {
        EpsilonSigns { epsilon: 1.0, eps23: 1.0, eps31: 1.0, eps12_star: 1.0, eps_theta: 1.0 }
    }
}

impl EpsilonSigns {
    fn validate(&self) -> Result<(), FlowError> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("eps23", self.eps23),
            ("eps31", self.eps31),
            ("eps12*", self.eps12_star),
            ("eps_theta", self.eps_theta),
        ] {
            if v != 1.0 && v != -1.0 {
                return Err(FlowError::InvalidParams(format!("{name} must be ±1, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
    pub signs: EpsilonSigns,
    pub f1_initial: f64,
    /// Parameter interval: t for most families, θ for the closed CP(2)
    /// family, r for the holonomy families.
    pub t_range: (f64, f64),
    pub tol: Tolerances,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            mu: 0.0,
            nu: 1.0,
            lambda: 4.0,
            signs: EpsilonSigns::default(),
            f1_initial: 1.0,
            t_range: (0.0, 2.0),
            tol: Tolerances::default(),
        }
    }
}

impl FamilyParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        let finite = [self.mu, self.nu, self.lambda, self.f1_initial, self.t_range.0, self.t_range.1];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::InvalidParams("non-finite parameter".into()));
        }
        if !(self.mu >= 0.0 && self.nu >= self.mu) {
            return Err(FlowError::InvalidParams(format!("need ν ≥ μ ≥ 0, got μ = {}, ν = {}", self.mu, self.nu)));
        }
        if !(self.t_range.1 > self.t_range.0) {
            return Err(FlowError::InvalidParams(format!("empty range {:?}", self.t_range)));
        }
        self.signs.validate()
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions { rtol: self.tol.ode_rtol, atol: self.tol.ode_atol, ..OdeOptions::default() }
    }
}

fn check_mu_nu(mu: f64, nu: f64) -> Result<(), FlowError> {
    if !(mu >= 0.0 && nu >= mu && nu.is_finite()) {
        return Err(FlowError::InvalidParams(format!("need ν ≥ μ ≥ 0, got μ = {mu}, ν = {nu}")));
    }
    Ok(())
}

fn check_samples(n: usize) -> Result<(), FlowError> {
    if n < 2 {
        return Err(FlowError::InvalidParams(format!("need at least 2 samples, got {n}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ξ and the algebraic recovery of f₂, f₃.

/// The slope bound Ξ(f₁, μ, ν) of the cosymplectic flow, so that
/// |f₁′| ≤ √Ξ. Returns +∞ at the pole f₁ = 0 when μ > 0.
pub fn xi(f1: f64, mu: f64, nu: f64) -> f64 {
    let x = f1 * f1;
    let a = 2.0 * nu * nu - mu * mu;
    if mu == 0.0 {
        if nu == 0.0 {
            return 0.25;
        }
        // Common factor x² cancelled, which leaves a finite value at f₁ = 0.
        let r = sqrt(x * x + 4.0 * nu * nu);
        return (x * x + 4.0 * nu * nu) / (2.0 * (x * x + 2.0 * nu * nu + x * r));
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    let m4 = mu * mu * mu * mu;
    if x > 1.0 {
        let u = 1.0 / x;
        let n = 1.0 + 2.0 * a * u * u + m4 * u * u * u * u;
        n / (2.0 * (1.0 + a * u * u + sqrt(n)))
    } else {
        let n = x * x * x * x + 2.0 * a * x * x + m4;
        n / (2.0 * x * x * (x * x + a + sqrt(n)))
    }
}

/// Positive root of z² − p z − q = 0 for q ≥ 0, without cancellation.
fn positive_root(p: f64, q: f64) -> (f64, f64) {
    let r = sqrt(p * p + 4.0 * q);
    let z = if p >= 0.0 { 0.5 * (p + r) } else { 2.0 * q / (r - p) };
    (z, r)
}

/// f₂² and f₃² from f₁ and the conserved μ, ν. `epsilon` must equal
/// sgn(f₁² − μ) (and so sgn(f₂² − ν)); it is checked, not used to choose.
pub fn recover_f2f3(f1: f64, mu: f64, nu: f64, epsilon: f64) -> Result<(f64, f64), FlowError> {
    check_mu_nu(mu, nu)?;
    let x = f1 * f1;
    if mu > 0.0 && x == 0.0 {
        return Err(FlowError::Pole { t: f64::NAN });
    }
    if x != mu && (x - mu).signum() != epsilon.signum() {
        return Err(FlowError::BranchMismatch { f1, mu, epsilon });
    }
    let (a, b) = if mu == 0.0 { (x, x) } else { (x - mu * mu / x, x + mu * mu / x) };
    let (f2sq, _) = positive_root(a, nu * nu);
    let (f3sq, _) = positive_root(b, nu * nu - mu * mu);
    Ok((f2sq, f3sq))
}

/// d(f₂²)/d(f₁²) and d(f₃²)/d(f₁²) along the recovery.
fn recover_slopes(x: f64, mu: f64, nu: f64) -> (f64, f64) {
    let m2 = mu * mu / (x * x);
    let (a, b) = if mu == 0.0 { (x, x) } else { (x - mu * mu / x, x + mu * mu / x) };
    let half_slope = |p: f64, q: f64| {
        let r = sqrt(p * p + 4.0 * q);
        if r == 0.0 {
            1.0
        } else if p >= 0.0 {
            0.5 * (1.0 + p / r)
        } else {
            2.0 * q / (r * (r - p))
        }
    };
    (half_slope(a, nu * nu) * (1.0 + m2), half_slope(b, nu * nu - mu * mu) * (1.0 - m2))
}

/// Deviations of the three conserved quantities from μ², ν², ν² − μ².
pub fn first_integral_defects(f: [f64; 3], mu: f64, nu: f64) -> [f64; 3] {
    let [a, b, c] = [f[0] * f[0], f[1] * f[1], f[2] * f[2]];
    [a * (c - b) - mu * mu, b * (c - a) - nu * nu, c * (b - a) - (nu * nu - mu * mu)]
}

fn max_drift(p: &Profile, mu: f64, nu: f64) -> f64 {
    (0..p.len())
        .map(|i| first_integral_defects(p.radii().at(i), mu, nu).iter().fold(0.0f64, |m, v| m.max(abs(*v))))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Cosymplectic flow.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchPolicy {
    /// Stop at the first branch event.
    #[default]
    Halt,
    /// Continue and list every branch event.
    Record,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchEvent {
    pub name: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowStatus {
    Completed,
    HaltedAtBranch { event: String, t: f64 },
    HaltedAtPole { t: f64 },
}

impl FlowStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, FlowStatus::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct CosymplecticSolution {
    pub profile: Profile,
    pub status: FlowStatus,
    pub events: Vec<BranchEvent>,
    /// Largest deviation of any conserved quantity along the output.
    pub drift: f64,
}

fn theta_derivative(theta: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-3 * (1.0 + abs(t));
    central_directional(|d| theta(t + d), h)
}

fn status_from(sol_status: &OdeStatus, names: &[&str]) -> FlowStatus {
    match sol_status {
        OdeStatus::Completed => FlowStatus::Completed,
        OdeStatus::Terminated { event, t } => {
            if names[*event] == "pole" {
                FlowStatus::HaltedAtPole { t: *t }
            } else {
                FlowStatus::HaltedAtBranch { event: names[*event].to_string(), t: *t }
            }
        }
    }
}

/// Integrates f₁′ = cosθ √Ξ(f₁, μ, ν) and recovers f₂, f₃ algebraically.
/// The output carries analytic derivatives.
pub fn integrate_cosymplectic(
    theta: &dyn Fn(f64) -> f64,
    params: &FamilyParams,
    samples: usize,
    policy: BranchPolicy,
) -> Result<CosymplecticSolution, FlowError> {
    params.validate()?;
    check_samples(samples)?;
    let (mu, nu) = (params.mu, params.nu);
    if !(params.f1_initial > 0.0) {
        return Err(FlowError::InvalidParams("f1 initial value must be positive".into()));
    }
    recover_f2f3(params.f1_initial, mu, nu, params.signs.epsilon)?;
    let t_eval = linspace(params.t_range.0, params.t_range.1, samples);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = cos(theta(t)) * sqrt(xi(y[0], mu, nu));
    };
    let mut events = Vec::new();
    let mut names = Vec::new();
    if mu > 0.0 {
        events.push(EventSpec::new("f1^2=mu", policy == BranchPolicy::Halt, move |_, y: &[f64]| y[0] * y[0] - mu));
        names.push("f1^2=mu");
        events.push(EventSpec::new("pole", true, move |_, y: &[f64]| y[0] * y[0] - 1e-8 * mu));
        names.push("pole");
    }
    let sol = dopri5(rhs, &[params.f1_initial], &t_eval, &events, &params.ode_options())?;
    let status = status_from(&sol.status, &names);
    let branch_events =
        sol.events.iter().filter(|e| e.name != "pole").map(|e| BranchEvent { name: e.name.clone(), t: e.t }).collect();

    let n = sol.t.len();
    let (mut f1, mut f2, mut f3, mut th) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut d1, mut d2, mut d3, mut dth) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let t = sol.t[i];
        let a = sol.y[i][0];
        let x = a * a;
        let eps = if x == mu { params.signs.epsilon } else { (x - mu).signum() };
        let (b2, c2) = recover_f2f3(a, mu, nu, eps)?;
        let (b, c) = (sqrt(b2), sqrt(c2));
        let th_i = theta(t);
        let da = cos(th_i) * sqrt(xi(a, mu, nu));
        let (s2, s3) = recover_slopes(x, mu, nu);
        f1[i] = a;
        f2[i] = b;
        f3[i] = c;
        th[i] = th_i;
        d1[i] = da;
        d2[i] = s2 * a * da / b;
        d3[i] = s3 * a * da / c;
        dth[i] = theta_derivative(theta, t);
    }
    let profile = Profile::new(ModelId::Su3T2, sol.t, Radii::Triaxial { f1, f2, f3 }, th)?
        .with_derivatives(ProfileDerivatives { radii: Radii::Triaxial { f1: d1, f2: d2, f3: d3 }, theta: dth })?;
    let drift = max_drift(&profile, mu, nu);
    Ok(CosymplecticSolution { profile, status, events: branch_events, drift })
}

/// Integrates the cosymplectic equations directly in yₖ = fₖ²,
///
/// ```text
/// y₁′ = cosθ √y₁ (y₂ + y₃ − y₁) / √(y₂y₃)   (and cyclically),
/// ```
///
/// from f₁(t₀) with f₂, f₃ recovered from μ, ν. Nothing enforces the
/// conserved quantities, so their drift measures the integration.
pub fn integrate_cosymplectic_system(
    theta: &dyn Fn(f64) -> f64,
    params: &FamilyParams,
    samples: usize,
    policy: BranchPolicy,
) -> Result<CosymplecticSolution, FlowError> {
    params.validate()?;
    check_samples(samples)?;
    let (mu, nu) = (params.mu, params.nu);
    if !(params.f1_initial > 0.0) {
        return Err(FlowError::InvalidParams("f1 initial value must be positive".into()));
    }
    let (b2, c2) = recover_f2f3(params.f1_initial, mu, nu, params.signs.epsilon)?;
    let y0 = [params.f1_initial * params.f1_initial, b2, c2];
    let t_eval = linspace(params.t_range.0, params.t_range.1, samples);
    let field = |c: f64, y: &[f64], dy: &mut [f64]| {
        let s = [sqrt(y[0]), sqrt(y[1]), sqrt(y[2])];
        dy[0] = c * s[0] * (y[1] + y[2] - y[0]) / (s[1] * s[2]);
        dy[1] = c * s[1] * (y[2] + y[0] - y[1]) / (s[2] * s[0]);
        dy[2] = c * s[2] * (y[0] + y[1] - y[2]) / (s[0] * s[1]);
    };
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| field(cos(theta(t)), y, dy);
    let halt = policy == BranchPolicy::Halt;
    let mut events = Vec::new();
    let mut names = Vec::new();
    if mu > 0.0 {
        events.push(EventSpec::new("f1^2=mu", halt, move |_, y: &[f64]| y[0] - mu));
        names.push("f1^2=mu");
    }
    if nu > 0.0 {
        events.push(EventSpec::new("f2^2=nu", halt, move |_, y: &[f64]| y[1] - nu));
        names.push("f2^2=nu");
        events.push(EventSpec::new("f3^2=nu+mu", halt, move |_, y: &[f64]| y[2] - (nu + mu)));
        names.push("f3^2=nu+mu");
    }
    events.push(EventSpec::new("pole", true, |_, y: &[f64]| y[0].min(y[1]).min(y[2]) - 1e-12));
    names.push("pole");
    let sol = dopri5(rhs, &y0, &t_eval, &events, &params.ode_options())?;
    let status = status_from(&sol.status, &names);
    let branch_events =
        sol.events.iter().filter(|e| e.name != "pole").map(|e| BranchEvent { name: e.name.clone(), t: e.t }).collect();

    let n = sol.t.len();
    let mut f = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut df = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let (mut th, mut dth) = (vec![0.0; n], vec![0.0; n]);
    let mut dy = [0.0; 3];
    for i in 0..n {
        let t = sol.t[i];
        th[i] = theta(t);
        dth[i] = theta_derivative(theta, t);
        field(cos(th[i]), &sol.y[i], &mut dy);
        for k in 0..3 {
            f[k][i] = sqrt(sol.y[i][k]);
            df[k][i] = dy[k] / (2.0 * f[k][i]);
        }
    }
    let [f1, f2, f3] = f;
    let [d1, d2, d3] = df;
    let profile = Profile::new(ModelId::Su3T2, sol.t, Radii::Triaxial { f1, f2, f3 }, th)?
        .with_derivatives(ProfileDerivatives { radii: Radii::Triaxial { f1: d1, f2: d2, f3: d3 }, theta: dth })?;
    let drift = max_drift(&profile, mu, nu);
    Ok(CosymplecticSolution { profile, status, events: branch_events, drift })
}

// ---------------------------------------------------------------------------
// Triaxial holonomy family.

/// Radii at r: f₁² = r√(A/B), f₂² = √(AB)/r, f₃² = r√(B/A) with
/// A = r² − μ², B = r² + ν² − μ².
pub fn holonomy_radii(r: f64, mu: f64, nu: f64) -> [f64; 3] {
    if mu == 0.0 {
        let q = sqrt(sqrt(r * r + nu * nu));
        if q == 0.0 {
            return [0.0; 3];
        }
        return [r / q, q, q];
    }
    let a = r * r - mu * mu;
    let b = r * r + nu * nu - mu * mu;
    [sqrt(r * sqrt(a / b)), sqrt(sqrt(a * b) / r), sqrt(r * sqrt(b / a))]
}

/// dt/dr = √r ((r² − μ²)(r² + ν² − μ²))^{−1/4}.
pub fn holonomy_dt_dr(r: f64, mu: f64, nu: f64) -> f64 {
    let b = r * r + nu * nu - mu * mu;
    if mu == 0.0 {
        return 1.0 / sqrt(sqrt(b));
    }
    let a = r * r - mu * mu;
    sqrt(r) / sqrt(sqrt(a * b))
}

/// The holonomy family on r ∈ `r_range`, sampled uniformly in arc length
/// t (starting at 0) with θ ≡ 0. With ε_θ = −1 the profile is traversed
/// backwards and θ ≡ π.
pub fn holonomy_triaxial(
    mu: f64,
    nu: f64,
    r_range: (f64, f64),
    eps_theta: f64,
    samples: usize,
) -> Result<Profile, FlowError> {
    check_mu_nu(mu, nu)?;
    check_samples(samples)?;
    if eps_theta != 1.0 && eps_theta != -1.0 {
        return Err(FlowError::InvalidParams(format!("eps_theta must be ±1, got {eps_theta}")));
    }
    let (r0, r1) = r_range;
    if !(r1 > r0) || !r1.is_finite() {
        return Err(FlowError::InvalidParams(format!("empty r range {r_range:?}")));
    }
    if mu > 0.0 && r0 <= mu {
        return Err(FlowError::SingularEndpoint { r: r0, mu });
    }
    if r0 < 0.0 {
        return Err(FlowError::InvalidParams(format!("r must be non-negative, got {r0}")));
    }
    // r = μ + s⁴ removes the endpoint singularity of dt/dr at r = μ (and at
    // r = 0 when μ = ν = 0).
    let speed = move |s: f64| {
        let s2 = s * s;
        let r = mu + s2 * s2;
        let b = r * r + nu * nu - mu * mu;
        if mu == 0.0 {
            4.0 * s2 * s / sqrt(sqrt(b))
        } else {
            4.0 * s2 * sqrt(r) / sqrt(sqrt((2.0 * mu + s2 * s2) * b))
        }
    };
    let s_of = |r: f64| sqrt(sqrt(r - mu));
    let (t, s) = invert_arc_length(speed, (s_of(r0), s_of(r1)), samples, 1e-13, 1e-13)?;
    let n = t.len();
    let mut f = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut df = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let si = s[i] * s[i];
        let r = mu + si * si;
        let fr = holonomy_radii(r, mu, nu);
        // Near r = 0 with ν = 0 the radii behave like √r, so keep the
        // stencil inside the domain there as well.
        let mut h = 1e-3 * (1.0 + r);
        if mu > 0.0 || nu == 0.0 {
            h = h.min(0.25 * (r - mu));
        }
        let dtdr = holonomy_dt_dr(r, mu, nu);
        for k in 0..3 {
            f[k][i] = fr[k];
            df[k][i] = if h > 0.0 {
                central_directional6(|d| holonomy_radii(r + d, mu, nu)[k], h) / dtdr
            } else {
                // r = 0 with μ = ν = 0: the cone f = t/2.
                0.5
            };
        }
    }
    let [f1, f2, f3] = f;
    let [d1, d2, d3] = df;
    let (radii, dradii, model) = if mu == 0.0 {
        (Radii::Pair { f1, f2 }, Radii::Pair { f1: d1, f2: d2 }, ModelId::Su3T2)
    } else {
        (Radii::Triaxial { f1, f2, f3 }, Radii::Triaxial { f1: d1, f2: d2, f3: d3 }, ModelId::Su3T2)
    };
    let p = Profile::new(model, t, radii, vec![0.0; n])?
        .with_derivatives(ProfileDerivatives { radii: dradii, theta: vec![0.0; n] })?;
    if eps_theta > 0.0 {
        Ok(p)
    } else {
        let rev = p.reversed();
        let theta = vec![PI; n];
        let d = rev.derivatives().cloned().ok_or(FlowError::InvalidParams("missing derivatives".into()))?;
        Ok(Profile::new(model, rev.t().to_vec(), rev.radii().clone(), theta)?.with_derivatives(d)?)
    }
}

// ---------------------------------------------------------------------------
// Closed forms.

fn analytic_profile(
    model: ModelId,
    t: Vec<f64>,
    // (f, f′, θ, θ′) with f₃ = f₂ implied by the shape.
    eval: impl Fn(f64) -> ([f64; 3], [f64; 3], f64, f64),
    shape: Shape,
) -> Result<Profile, FlowError> {
    let n = t.len();
    let mut f = [vec![0.0; n], vec![0.0; n]];
    let mut df = [vec![0.0; n], vec![0.0; n]];
    let (mut th, mut dth) = (vec![0.0; n], vec![0.0; n]);
    for (i, &ti) in t.iter().enumerate() {
        let (v, dv, a, da) = eval(ti);
        for k in 0..2 {
            f[k][i] = v[k];
            df[k][i] = dv[k];
        }
        th[i] = a;
        dth[i] = da;
    }
    let [f1, f2] = f;
    let [d1, d2] = df;
    let (radii, dradii) = match shape {
        Shape::Equal => (Radii::Equal(f1), Radii::Equal(d1)),
        Shape::Pair => (Radii::Pair { f1, f2 }, Radii::Pair { f1: d1, f2: d2 }),
    };
    Ok(Profile::new(model, t, radii, th)?.with_derivatives(ProfileDerivatives { radii: dradii, theta: dth })?)
}

#[derive(Clone, Copy)]
enum Shape {
    Equal,
    Pair,
}

/// Flat ℝ⁷ under G₂: f = t, θ ≡ 0.
pub fn flat(t_range: (f64, f64), samples: usize) -> Result<Profile, FlowError> {
    check_samples(samples)?;
    analytic_profile(ModelId::G2Su3, linspace(t_range.0, t_range.1, samples), |t| ([t; 3], [1.0; 3], 0.0, 0.0), Shape::Equal)
}

/// Weak holonomy under G₂: f = (4/λ) sin(λt/4), θ = −λt/4, so that
/// λf = −4 sinθ and 4θ′ = −λ.
pub fn weak_g2(lambda: f64, t_range: (f64, f64), samples: usize) -> Result<Profile, FlowError> {
    check_samples(samples)?;
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(FlowError::InvalidParams("weak holonomy needs λ ≠ 0".into()));
    }
    let k = lambda / 4.0;
    analytic_profile(
        ModelId::G2Su3,
        linspace(t_range.0, t_range.1, samples),
        |t| ([sin(k * t) / k; 3], [cos(k * t); 3], -k * t, -k),
        Shape::Equal,
    )
}

/// Weak holonomy under SU(3) or Sp(2) with equal radii: f = sin(t/2),
/// θ = t/2. The structure is incomplete, so `t_range` should stay inside
/// (0, π).
pub fn weak_su3(model: ModelId, t_range: (f64, f64), samples: usize) -> Result<Profile, FlowError> {
    check_samples(samples)?;
    if model == ModelId::G2Su3 {
        return Err(FlowError::InvalidParams("weak SU(3) family needs an SU(3) or Sp(2) orbit".into()));
    }
    analytic_profile(
        model,
        linspace(t_range.0, t_range.1, samples),
        |t| ([sin(0.5 * t); 3], [0.5 * cos(0.5 * t); 3], 0.5 * t, 0.5),
        Shape::Equal,
    )
}

/// Constant orbit f ≡ c with θ ≡ π/2.
pub fn constant_orbit(model: ModelId, c: f64, t_range: (f64, f64), samples: usize) -> Result<Profile, FlowError> {
    check_samples(samples)?;
    if !(c > 0.0) {
        return Err(FlowError::InvalidParams(format!("constant radius must be positive, got {c}")));
    }
    analytic_profile(model, linspace(t_range.0, t_range.1, samples), |_| ([c; 3], [0.0; 3], PI / 2.0, 0.0), Shape::Equal)
}

/// The closed cosymplectic family over CP(2):
/// dθ/dt = (1 + sin²θ)^{1/4}, f₁² = sin²θ (1 + sin²θ)^{−1/2},
/// f₂² = f₃² = (1 + sin²θ)^{1/2}, sampled uniformly in t for θ in
/// `theta_range`, with t starting at 0.
pub fn cp2_cosymplectic_closed(theta_range: (f64, f64), samples: usize) -> Result<Profile, FlowError> {
    check_samples(samples)?;
    let speed = |th: f64| {
        let s = sin(th);
        1.0 / sqrt(sqrt(1.0 + s * s))
    };
    let (t, th) = invert_arc_length(speed, theta_range, samples, 1e-14, 1e-14)?;
    let eval = |i: usize| {
        let (s, c) = (sin(th[i]), cos(th[i]));
        let q = 1.0 + s * s;
        let q4 = sqrt(sqrt(q));
        let dth = q4;
        let f1 = s / q4;
        let f2 = q4;
        let df1 = c * (1.0 + 0.5 * s * s) / (q * q4) * dth;
        let df2 = 0.5 * s * c / (q / q4) * dth;
        ([f1, f2, f2], [df1, df2, df2], th[i], dth)
    };
    let idx: Vec<f64> = (0..t.len()).map(|i| i as f64).collect();
    let p = analytic_profile(ModelId::Su3T2, idx, |x| eval(x as usize), Shape::Pair)?;
    let d = p.derivatives().cloned().ok_or(FlowError::InvalidParams("missing derivatives".into()))?;
    Ok(Profile::new(ModelId::Su3T2, t, p.radii().clone(), p.theta().to_vec())?.with_derivatives(d)?)
}

/// The simple symplectic SU(3) solution f₁ = t, f₂ = f₃ = √(1 + t²/4),
/// θ ≡ 0.
pub fn symplectic_simple(t_range: (f64, f64), samples: usize) -> Result<Profile, FlowError> {
    check_samples(samples)?;
    analytic_profile(
        ModelId::Su3T2,
        linspace(t_range.0, t_range.1, samples),
        |t| {
            let q = sqrt(1.0 + 0.25 * t * t);
            ([t, q, q], [1.0, 0.25 * t / q, 0.25 * t / q], 0.0, 0.0)
        },
        Shape::Pair,
    )
}

// ---------------------------------------------------------------------------
// Symplectic (h, x, y) system.

/// Which root of the quadratic for y to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootChoice {
    Larger,
    Smaller,
    /// The root nearest a reference value at each sample.
    Nearest,
}

#[derive(Debug, Clone)]
pub struct SymplecticSolution {
    pub profile: Profile,
    pub y: Vec<f64>,
    /// min |h′| over the grid; at least 1/2 for every solution.
    pub min_abs_dh: f64,
}

/// (h, x, y) with h³ = f₁f₂f₃, x = h²/f₂², y = h²/f₃².
pub fn to_hxy(f: [f64; 3]) -> (f64, f64, f64) {
    let h = cbrt(f[0] * f[1] * f[2]);
    (h, h * h / (f[1] * f[1]), h * h / (f[2] * f[2]))
}

/// 6ε_θh′ − (xy + 1/x + 1/y).
pub fn symplectic_defect(dh: f64, x: f64, y: f64, eps_theta: f64) -> f64 {
    6.0 * eps_theta * dh - (x * y + 1.0 / x + 1.0 / y)
}

/// Solves 6ε_θh′ = xy + 1/x + 1/y for y at each sample and rebuilds
/// f₁ = h√(xy), f₂ = h/√x, f₃ = h/√y, θ ≡ 0 (ε_θ = 1) or π.
/// `reference` is consulted only by [`RootChoice::Nearest`].
pub fn symplectic_system(
    t: &[f64],
    h: &[f64],
    dh: &[f64],
    x: &[f64],
    eps_theta: f64,
    choice: RootChoice,
    reference: Option<&[f64]>,
) -> Result<SymplecticSolution, FlowError> {
    let n = t.len();
    for (name, len) in [("h", h.len()), ("h'", dh.len()), ("x", x.len())] {
        if len != n {
            return Err(FlowError::InvalidParams(format!("{name} has {len} samples, t has {n}")));
        }
    }
    if let Some(r) = reference {
        if r.len() != n {
            return Err(FlowError::InvalidParams(format!("reference has {} samples, t has {n}", r.len())));
        }
    } else if choice == RootChoice::Nearest {
        return Err(FlowError::InvalidParams("nearest-root choice needs reference values".into()));
    }
    if eps_theta != 1.0 && eps_theta != -1.0 {
        return Err(FlowError::InvalidParams(format!("eps_theta must be ±1, got {eps_theta}")));
    }
    let mut f = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut ys = vec![0.0; n];
    let mut min_dh = f64::INFINITY;
    for i in 0..n {
        if !(h[i] > 0.0 && x[i] > 0.0) {
            return Err(FlowError::InvalidParams(format!("h and x must be positive, sample {i}")));
        }
        // x y² − b y + 1 = 0 with b = 6ε_θh′ − 1/x.
        let b = 6.0 * eps_theta * dh[i] - 1.0 / x[i];
        let disc = b * b - 4.0 * x[i];
        if disc < 0.0 && disc > -1e-12 * b * b {
            // Touching the minimum at (1, 1) up to rounding.
        } else if disc < 0.0 || b <= 0.0 {
            return Err(FlowError::NoPositiveRoot { t: t[i], discriminant: disc });
        }
        let r = sqrt(disc.max(0.0));
        let big = (b + r) / (2.0 * x[i]);
        let small = 1.0 / (x[i] * big);
        let y = match choice {
            RootChoice::Larger => big,
            RootChoice::Smaller => small,
            RootChoice::Nearest => {
                let want = reference.map_or(big, |r| r[i]);
                if abs(big - want) <= abs(small - want) {
                    big
                } else {
                    small
                }
            }
        };
        ys[i] = y;
        f[0][i] = h[i] * sqrt(x[i] * y);
        f[1][i] = h[i] / sqrt(x[i]);
        f[2][i] = h[i] / sqrt(y);
        min_dh = min_dh.min(abs(dh[i]));
    }
    let theta = if eps_theta > 0.0 { 0.0 } else { PI };
    let [f1, f2, f3] = f;
    let profile = Profile::new(ModelId::Su3T2, t.to_vec(), Radii::Triaxial { f1, f2, f3 }, vec![theta; n])?;
    Ok(SymplecticSolution { profile, y: ys, min_abs_dh: min_dh })
}

/// Deformation of the Bryant–Salamon CP(2) solution on r ∈ `r_range`
/// (r > 0): h is kept and x is multiplied by 1 + a e^{−t²}.
pub fn symplectic_deformed(amplitude: f64, r_range: (f64, f64), samples: usize) -> Result<SymplecticSolution, FlowError> {
    if !(r_range.0 > 0.0) {
        return Err(FlowError::InvalidParams("the deformation needs r > 0 so that h > 0".into()));
    }
    let base = holonomy_triaxial(0.0, 1.0, r_range, 1.0, samples)?;
    let d = base.derivatives().ok_or(FlowError::InvalidParams("missing derivatives".into()))?;
    let n = base.len();
    let (mut h, mut dh, mut x, mut y0) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let fv = base.radii().at(i);
        let dv = d.radii.at(i);
        let (hi, xi_, yi) = to_hxy(fv);
        let dbig_f = dv[0] * fv[1] * fv[2] + fv[0] * dv[1] * fv[2] + fv[0] * fv[1] * dv[2];
        h[i] = hi;
        dh[i] = dbig_f / (3.0 * hi * hi);
        let t = base.t()[i];
        x[i] = xi_ * (1.0 + amplitude * exp(-t * t));
        y0[i] = yi;
    }
    symplectic_system(base.t(), &h, &dh, &x, 1.0, RootChoice::Nearest, Some(&y0))
}

// ---------------------------------------------------------------------------
// Euler top.

#[derive(Debug, Clone)]
pub struct EulerTop {
    pub s: Vec<f64>,
    pub w: [Vec<f64>; 3],
    pub eps_theta: f64,
    /// max |dwᵢ/ds − ε_θ wⱼw_k| over the grid.
    pub defect: f64,
}

/// Reparameterizes a holonomy profile by dt = f₁f₂f₃ ds and
/// wᵢ = fⱼf_k, and measures the reduced Euler equations
/// dwᵢ/ds = ε_θ wⱼw_k with derivatives taken on the s grid.
pub fn euler_top_reparam(p: &Profile, holonomy_tol: f64) -> Result<EulerTop, FlowError> {
    let rs = residual(p, EquationClass::Symplectic, None)?;
    let rc = residual(p, EquationClass::Cosymplectic, None)?;
    let worst = rs.max_abs.max(rc.max_abs);
    if !(worst <= holonomy_tol) {
        return Err(FlowError::NotHolonomy { residual: worst });
    }
    let n = p.len();
    let t = p.t();
    let big_f: Vec<f64> = (0..n)
        .map(|i| {
            let f = p.radii().at(i);
            f[0] * f[1] * f[2]
        })
        .collect();
    if let Some(i) = big_f.iter().position(|v| abs(*v) < 1e-12) {
        return Err(FlowError::InvalidParams(format!("f₁f₂f₃ vanishes at sample {i}; ds = dt/f₁f₂f₃ diverges")));
    }
    let inv: Vec<f64> = big_f.iter().map(|v| 1.0 / v).collect();
    // Running ∫dt/F over a local degree-5 interpolant.
    let mut s = vec![0.0; n];
    for i in 1..n {
        let seg = integrate(|x| lagrange_local(t, &inv, x, 6).unwrap_or(f64::NAN), t[i - 1], t[i], 1e-15, 1e-13)?;
        s[i] = s[i - 1] + seg;
    }
    let mut w = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let f = p.radii().at(i);
        w[0][i] = f[1] * f[2];
        w[1][i] = f[2] * f[0];
        w[2][i] = f[0] * f[1];
    }
    let eps = if cos(p.theta()[0]) >= 0.0 { 1.0 } else { -1.0 };
    let mut defect = 0.0f64;
    for k in 0..3 {
        let dw = derivative(&s, &w[k], 1)?;
        let (j, l) = ((k + 1) % 3, (k + 2) % 3);
        for i in 0..n {
            defect = defect.max(abs(dw[i] - eps * w[j][i] * w[l][i]));
        }
    }
    Ok(EulerTop { s, w, eps_theta: eps, defect })
}

// ---------------------------------------------------------------------------
// Families and the catalog.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    CosymplecticGeneric,
    HolonomyTriaxial,
    BryantSalamonCp2,
    BryantSalamonS4,
    WeakG2,
    WeakSu3,
    SymplecticSimple,
    SymplecticDeformed,
    Flat,
    RoundSphere,
    ConstantOrbit,
    Cp2CosymplecticClosed,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 12] = [
        FamilyKind::CosymplecticGeneric,
        FamilyKind::HolonomyTriaxial,
        FamilyKind::BryantSalamonCp2,
        FamilyKind::BryantSalamonS4,
        FamilyKind::WeakG2,
        FamilyKind::WeakSu3,
        FamilyKind::SymplecticSimple,
        FamilyKind::SymplecticDeformed,
        FamilyKind::Flat,
        FamilyKind::RoundSphere,
        FamilyKind::ConstantOrbit,
        FamilyKind::Cp2CosymplecticClosed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::CosymplecticGeneric => "cosymplectic",
            FamilyKind::HolonomyTriaxial => "holonomy-triaxial",
            FamilyKind::BryantSalamonCp2 => "bryant-salamon-cp2",
            FamilyKind::BryantSalamonS4 => "bryant-salamon-s4",
            FamilyKind::WeakG2 => "weak-g2",
            FamilyKind::WeakSu3 => "weak-su3",
            FamilyKind::SymplecticSimple => "symplectic-simple",
            FamilyKind::SymplecticDeformed => "symplectic-deformed",
            FamilyKind::Flat => "flat",
            FamilyKind::RoundSphere => "round-sphere",
            FamilyKind::ConstantOrbit => "constant-orbit",
            FamilyKind::Cp2CosymplecticClosed => "cp2-cosymplectic-closed",
        }
    }

    /// Equation classes the family's profiles satisfy.
    pub fn classes(self) -> &'static [EquationClass] {
        use EquationClass::*;
        match self {
            FamilyKind::HolonomyTriaxial
            | FamilyKind::BryantSalamonCp2
            | FamilyKind::BryantSalamonS4
            | FamilyKind::Flat => &[Symplectic, Cosymplectic],
            FamilyKind::SymplecticSimple | FamilyKind::SymplecticDeformed => &[Symplectic],
            FamilyKind::WeakG2 | FamilyKind::RoundSphere | FamilyKind::WeakSu3 => &[WeakHolonomy, Cosymplectic],
            FamilyKind::CosymplecticGeneric | FamilyKind::ConstantOrbit | FamilyKind::Cp2CosymplecticClosed => {
                &[Cosymplectic]
            }
        }
    }

    /// Default parameters: μ, ν, λ and the parameter interval.
    pub fn default_params(self) -> FamilyParams {
        let base = FamilyParams::default();
        let with = |t_range: (f64, f64)| FamilyParams { t_range, ..base };
        match self {
            FamilyKind::CosymplecticGeneric => with((0.0, 2.0)),
            FamilyKind::HolonomyTriaxial => FamilyParams { mu: 1.0, nu: 2.0, t_range: (1.5, 5.0), ..base },
            FamilyKind::BryantSalamonCp2 | FamilyKind::BryantSalamonS4 => with((0.0, 10.0)),
            FamilyKind::WeakG2 => with((0.0, 2.0 * PI / base.lambda)),
            FamilyKind::RoundSphere => with((0.0, 4.0 * PI / base.lambda)),
            FamilyKind::WeakSu3 => with((0.2, PI - 0.2)),
            FamilyKind::SymplecticSimple => with((0.0, 3.0)),
            FamilyKind::SymplecticDeformed => with((0.5, 6.0)),
            FamilyKind::Flat => with((0.0, 3.0)),
            FamilyKind::ConstantOrbit => FamilyParams { f1_initial: 1.0, t_range: (0.0, 3.0), ..base },
            FamilyKind::Cp2CosymplecticClosed => with((0.0, PI)),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let alias = match s {
            "cosymplectic-generic" => Some(FamilyKind::CosymplecticGeneric),
            "bs-cp2" => Some(FamilyKind::BryantSalamonCp2),
            "bs-s4" => Some(FamilyKind::BryantSalamonS4),
            _ => None,
        };
        alias
            .or_else(|| FamilyKind::ALL.iter().copied().find(|k| k.as_str() == s))
            .ok_or_else(|| FlowError::UnknownFamily(s.to_string()))
    }
}

/// A family together with its parameters.
#[derive(Clone)]
pub struct SolutionFamily {
    pub kind: FamilyKind,
    pub params: FamilyParams,
    /// θ(t), used by the generic cosymplectic family only.
    pub theta: Option<ThetaFn>,
}

impl fmt::Debug for SolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolutionFamily")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("theta", &self.theta.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl SolutionFamily {
    pub fn new(kind: FamilyKind) -> Self {
        let theta: Option<ThetaFn> = match kind {
            FamilyKind::CosymplecticGeneric => Some(Arc::new(|t: f64| t)),
            _ => None,
        };
        SolutionFamily { kind, params: kind.default_params(), theta }
    }

    pub fn with_params(mut self, params: FamilyParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_theta(mut self, theta: ThetaFn) -> Self {
        self.theta = Some(theta);
        self
    }

    /// λ to check the weak-holonomy residual with; `None` means fitted.
    pub fn lambda(&self) -> Option<f64> {
        match self.kind {
            FamilyKind::WeakG2 | FamilyKind::RoundSphere => Some(self.params.lambda),
            _ => None,
        }
    }

    pub fn classes(&self) -> &'static [EquationClass] {
        self.kind.classes()
    }

    /// Samples the family on `samples` points of its parameter interval.
    pub fn evaluate(&self, samples: usize) -> Result<Profile, FlowError> {
        let p = &self.params;
        p.validate()?;
        let range = p.t_range;
        match self.kind {
            FamilyKind::CosymplecticGeneric => {
                let theta = self.theta.as_ref().ok_or(FlowError::MissingTheta)?;
                let sol = integrate_cosymplectic(theta.as_ref(), p, samples, BranchPolicy::Halt)?;
                match sol.status {
                    FlowStatus::Completed => Ok(sol.profile),
                    FlowStatus::HaltedAtBranch { event, t } => Err(FlowError::Halted { event, t }),
                    FlowStatus::HaltedAtPole { t } => Err(FlowError::Pole { t }),
                }
            }
            FamilyKind::HolonomyTriaxial => holonomy_triaxial(p.mu, p.nu, range, p.signs.eps_theta, samples),
            FamilyKind::BryantSalamonCp2 => holonomy_triaxial(0.0, p.nu, range, p.signs.eps_theta, samples),
            FamilyKind::BryantSalamonS4 => {
                Ok(holonomy_triaxial(0.0, p.nu, range, p.signs.eps_theta, samples)?.relabel(ModelId::Sp2)?)
            }
            FamilyKind::WeakG2 | FamilyKind::RoundSphere => weak_g2(p.lambda, range, samples),
            FamilyKind::WeakSu3 => weak_su3(ModelId::Su3T2, range, samples),
            FamilyKind::SymplecticSimple => symplectic_simple(range, samples),
            FamilyKind::SymplecticDeformed => Ok(symplectic_deformed(0.1, range, samples)?.profile),
            FamilyKind::Flat => flat(range, samples),
            FamilyKind::ConstantOrbit => constant_orbit(ModelId::Su3T2, p.f1_initial, range, samples),
            FamilyKind::Cp2CosymplecticClosed => cp2_cosymplectic_closed(range, samples),
        }
    }

    /// Residual reports for every class the family claims.
    pub fn check(&self, profile: &Profile) -> Result<Vec<ResidualReport>, FlowError> {
        self.classes()
            .iter()
            .map(|c| {
                let lambda = if *c == EquationClass::WeakHolonomy { self.lambda() } else { None };
                residual(profile, *c, lambda).map_err(FlowError::from)
            })
            .collect()
    }
}

/// Every closed-form family with its default parameters.
pub fn closed_form_catalog() -> Vec<SolutionFamily> {
    [
        FamilyKind::Flat,
        FamilyKind::RoundSphere,
        FamilyKind::WeakG2,
        FamilyKind::ConstantOrbit,
        FamilyKind::Cp2CosymplecticClosed,
        FamilyKind::BryantSalamonCp2,
        FamilyKind::BryantSalamonS4,
        FamilyKind::WeakSu3,
        FamilyKind::SymplecticSimple,
    ]
    .into_iter()
    .map(SolutionFamily::new)
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohom1::{residual_cosymplectic, residual_symplectic, residual_weak_holonomy, Cohom1};
    use proptest::prelude::*;

    fn params(mu: f64, nu: f64, f1: f64, t_range: (f64, f64)) -> FamilyParams {
        FamilyParams { mu, nu, f1_initial: f1, t_range, ..FamilyParams::default() }
    }

    #[test]
    fn xi_values() {
        for f in [0.3, 1.0, 7.0] {
            assert_eq!(xi(f, 0.0, 0.0), 0.25);
        }
        assert!((xi(1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((xi(1e6, 1.0, 2.0) - 0.25).abs() < 1e-12);
        assert_eq!(xi(0.0, 1.0, 1.0), f64::INFINITY);
        assert!((xi(0.0, 0.0, 1.0) - 1.0).abs() < 1e-15);
        // Both evaluation forms agree across the switch at f₁ = 1.
        let direct = |f1: f64, mu: f64, nu: f64| {
            let x = f1 * f1;
            let a = 2.0 * nu * nu - mu * mu;
            let n = x.powi(4) + 2.0 * a * x * x + mu.powi(4);
            n / (2.0 * x * x * (x * x + a + n.sqrt()))
        };
        for f1 in [0.5, 0.999, 1.001, 3.0] {
            assert!((xi(f1, 0.7, 1.3) - direct(f1, 0.7, 1.3)).abs() < 1e-14);
            assert!((xi(f1, 0.0, 1.3) - direct(f1, 0.0, 1.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn recovery_examples() {
        assert_eq!(recover_f2f3(0.0, 0.0, 1.0, 1.0).unwrap(), (1.0, 1.0));
        let (a, b) = recover_f2f3(1.7, 0.0, 0.0, 1.0).unwrap();
        assert!((a - 1.7 * 1.7).abs() < 1e-15 && (b - 1.7 * 1.7).abs() < 1e-15);
        let (a, b) = recover_f2f3(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((2.0 * a - (1.0 + 5f64.sqrt())).abs() < 1e-15);
        assert_eq!(a, b);
        assert!(matches!(recover_f2f3(0.5, 1.0, 2.0, 1.0), Err(FlowError::BranchMismatch { .. })));
        assert!(recover_f2f3(0.5, 1.0, 2.0, -1.0).is_ok());
        assert!(matches!(recover_f2f3(0.0, 1.0, 2.0, -1.0), Err(FlowError::Pole { .. })));
        assert!(matches!(recover_f2f3(1.0, 2.0, 1.0, 1.0), Err(FlowError::InvalidParams(_))));
    }

    #[test]
    fn cone_flow_is_linear() {
        let sol = integrate_cosymplectic(&|_| 0.0, &params(0.0, 0.0, 1.0, (0.0, 4.0)), 41, BranchPolicy::Halt).unwrap();
        assert!(sol.status.is_complete());
        for i in 0..sol.profile.len() {
            let t = sol.profile.t()[i];
            for f in sol.profile.radii().at(i) {
                assert!((f - (1.0 + 0.5 * t)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn horizontal_theta_freezes_the_radii() {
        let sol = integrate_cosymplectic(&|_| PI / 2.0, &params(0.5, 1.0, 1.2, (0.0, 3.0)), 31, BranchPolicy::Halt)
            .unwrap();
        let f0 = sol.profile.radii().at(0);
        for i in 0..sol.profile.len() {
            let f = sol.profile.radii().at(i);
            for k in 0..3 {
                assert!((f[k] - f0[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conserved_quantities_with_theta_equal_t() {
        let p = params(0.0, 1.0, 1.0, (0.0, 2.0));
        let a = integrate_cosymplectic(&|t| t, &p, 201, BranchPolicy::Halt).unwrap();
        let b = integrate_cosymplectic_system(&|t| t, &p, 201, BranchPolicy::Halt).unwrap();
        assert!(a.drift < 1e-12, "{}", a.drift);
        assert!(b.drift < 1e-8, "{}", b.drift);
        for sol in [&a, &b] {
            let r = residual_cosymplectic(&sol.profile).unwrap();
            assert!(r.passes(1e-8), "{r:?}");
        }
        for i in 0..a.profile.len() {
            let (fa, fb) = (a.profile.radii().at(i), b.profile.radii().at(i));
            for k in 0..3 {
                assert!((fa[k] - fb[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn triaxial_system_tracks_algebraic_route() {
        let p = params(0.3, 0.8, 1.5, (0.0, 5.0));
        let th = |t: f64| (1.3 * t).sin();
        let a = integrate_cosymplectic(&th, &p, 101, BranchPolicy::Record).unwrap();
        let b = integrate_cosymplectic_system(&th, &p, 101, BranchPolicy::Record).unwrap();
        assert_eq!(a.profile.len(), b.profile.len());
        for i in 0..a.profile.len() {
            let (fa, fb) = (a.profile.radii().at(i), b.profile.radii().at(i));
            for k in 0..3 {
                assert!((fa[k] - fb[k]).abs() < 1e-8, "{i} {k} {} {}", fa[k], fb[k]);
            }
        }
        assert!(b.drift < 1e-8);
    }

    #[test]
    fn branch_crossing_halts_or_is_recorded() {
        let p = params(1.0, 2.0, 1.2, (0.0, 3.0));
        let sol = integrate_cosymplectic(&|_| PI, &p, 61, BranchPolicy::Halt).unwrap();
        let FlowStatus::HaltedAtBranch { event, t } = &sol.status else { panic!("{:?}", sol.status) };
        assert_eq!(event, "f1^2=mu");
        // f₁ decreases at rate √Ξ ≥ 1/2 from 1.2 to 1.
        assert!(*t > 0.0 && *t < 0.4);
        assert!(sol.profile.t().last().unwrap() <= t);

        let rec = integrate_cosymplectic(&|_| PI, &p, 61, BranchPolicy::Record).unwrap();
        assert_eq!(rec.events.len(), 1);
        assert!((rec.events[0].t - t).abs() < 1e-9);
        assert!(matches!(rec.status, FlowStatus::HaltedAtPole { .. }));
        let r = residual_cosymplectic(&rec.profile).unwrap();
        assert!(r.passes(1e-8), "{r:?}");

        let sys = integrate_cosymplectic_system(&|_| PI, &p, 61, BranchPolicy::Halt).unwrap();
        assert!(matches!(sys.status, FlowStatus::HaltedAtBranch { .. }));
    }

    #[test]
    fn bryant_salamon_closed_form() {
        let p = holonomy_triaxial(0.0, 1.0, (0.0, 10.0), 1.0, 401).unwrap();
        assert_eq!(p.radii().shape_name(), Radii::Pair { f1: vec![], f2: vec![] }.shape_name());
        assert!(residual_symplectic(&p).unwrap().passes(1e-8));
        assert!(residual_cosymplectic(&p).unwrap().passes(1e-8));
        assert_eq!(p.f1()[0], 0.0);
        assert!((p.f2()[0] - 1.0).abs() < 1e-15);
        assert!((p.derivatives().unwrap().radii.f1()[0] - 1.0).abs() < 1e-10);
        let s4 = SolutionFamily::new(FamilyKind::BryantSalamonS4).evaluate(201).unwrap();
        assert_eq!(s4.model(), ModelId::Sp2);
        assert!(residual_symplectic(&s4).unwrap().passes(1e-8));
        assert!(residual_cosymplectic(&s4).unwrap().passes(1e-8));
    }

    #[test]
    fn cone_limit_of_the_holonomy_family() {
        let p = holonomy_triaxial(0.0, 0.0, (0.0, 4.0), 1.0, 101).unwrap();
        for i in 0..p.len() {
            let t = p.t()[i];
            for f in p.radii().at(i) {
                assert!((f - 0.5 * t).abs() < 1e-10, "{t} {f}");
            }
        }
        // f² = t/4 is not a solution.
        let bad = Profile::new(
            ModelId::Su3T2,
            linspace(0.5, 2.0, 61),
            Radii::Equal(linspace(0.5, 2.0, 61).iter().map(|t| (t / 4.0).sqrt()).collect()),
            vec![0.0; 61],
        )
        .unwrap();
        assert!(!residual_symplectic(&bad).unwrap().passes(1e-3));
    }

    #[test]
    fn generic_triaxial_holonomy() {
        let (mu, nu) = (1.0, 2.0);
        let p = holonomy_triaxial(mu, nu, (1.5, 5.0), 1.0, 301).unwrap();
        assert!(max_drift(&p, mu, nu) < 1e-8);
        assert!(residual_symplectic(&p).unwrap().passes(1e-8));
        assert!(residual_cosymplectic(&p).unwrap().passes(1e-8));
        // f₁′ = ½ f₂⁻¹f₃⁻¹ cosθ √Δ₁ with Δ₁ = (f₃² + (ν²−μ²)f₃⁻²)(f₂² + ν²f₂⁻²).
        let d = p.derivatives().unwrap();
        for i in 0..p.len() {
            let [_, b, c] = p.radii().at(i);
            let delta = (c * c + (nu * nu - mu * mu) / (c * c)) * (b * b + nu * nu / (b * b));
            assert!((d.radii.f1()[i] - 0.5 / (b * c) * delta.sqrt()).abs() < 1e-8);
        }
        // r² = f₁² f₃².
        let r_last = p.f1().last().unwrap() * p.f3().last().unwrap();
        assert!((r_last - 5.0).abs() < 1e-12);
        assert!(matches!(holonomy_triaxial(mu, nu, (1.0, 5.0), 1.0, 11), Err(FlowError::SingularEndpoint { .. })));
    }

    #[test]
    fn reversed_holonomy_has_theta_pi() {
        let p = holonomy_triaxial(0.5, 1.0, (0.8, 3.0), -1.0, 201).unwrap();
        assert!(p.theta().iter().all(|x| *x == PI));
        assert!(p.f1()[0] > p.f1()[200]);
        assert!(residual_symplectic(&p).unwrap().passes(1e-8));
        assert!(residual_cosymplectic(&p).unwrap().passes(1e-8));
    }

    #[test]
    fn holonomy_matches_the_flow() {
        let h = holonomy_triaxial(0.0, 1.0, (0.5, 4.0), 1.0, 101).unwrap();
        let p = params(0.0, 1.0, h.f1()[0], (0.0, *h.t().last().unwrap()));
        let sol = integrate_cosymplectic(&|_| 0.0, &p, 101, BranchPolicy::Halt).unwrap();
        for i in 0..h.len() {
            assert!((sol.profile.t()[i] - h.t()[i]).abs() < 1e-12);
            let (a, b) = (sol.profile.radii().at(i), h.radii().at(i));
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn weak_g2_round_sphere() {
        let p = weak_g2(4.0, (0.0, PI), 401).unwrap();
        let r = residual_weak_holonomy(&p, Some(4.0)).unwrap();
        assert!(r.passes(1e-8), "{r:?}");
        let half = weak_g2(4.0, (0.0, PI / 2.0), 3).unwrap();
        assert!((half.f1()[2] - 1.0).abs() < 1e-15);
        assert!(weak_g2(0.0, (0.0, 1.0), 3).is_err());
        let neg = weak_g2(-2.0, (0.1, 2.0 * PI - 0.1), 201).unwrap();
        assert!(residual_weak_holonomy(&neg, Some(-2.0)).unwrap().passes(1e-8));
    }

    #[test]
    fn weak_su3_fits_minus_two() {
        for model in [ModelId::Su3T2, ModelId::Su3T123, ModelId::Sp2] {
            let p = weak_su3(model, (0.2, PI - 0.2), 301).unwrap();
            let engine = Cohom1::new(model).unwrap();
            let lambda = engine.fit_lambda(&p).unwrap();
            assert!((lambda + 2.0).abs() < 1e-10, "{model}: {lambda}");
            assert!(engine.residual_weak_holonomy(&p, None).unwrap().passes(1e-8));
        }
    }

    #[test]
    fn cp2_closed_family() {
        let p = cp2_cosymplectic_closed((0.1, PI - 0.1), 301).unwrap();
        assert!(residual_cosymplectic(&p).unwrap().passes(1e-8));
        // f₂² is symmetric about the midpoint, f₁ too, θ − π/2 is odd.
        let n = p.len();
        for i in 0..n {
            let j = n - 1 - i;
            assert!((p.f2()[i] - p.f2()[j]).abs() < 1e-12);
            assert!((p.theta()[i] + p.theta()[j] - PI).abs() < 1e-12);
        }
        let full = cp2_cosymplectic_closed((0.0, PI), 101).unwrap();
        assert_eq!(full.f1()[0], 0.0);
    }

    #[test]
    fn symplectic_minimum_point() {
        let t = linspace(0.0, 2.0, 11);
        let h: Vec<f64> = t.iter().map(|t| 1.0 + 0.5 * t).collect();
        let sol = symplectic_system(&t, &h, &[0.5; 11], &[1.0; 11], 1.0, RootChoice::Larger, None).unwrap();
        for i in 0..11 {
            assert!((sol.y[i] - 1.0).abs() < 1e-7);
            let f = sol.profile.radii().at(i);
            assert!((f[0] - f[1]).abs() < 1e-6 && (f[1] - f[2]).abs() < 1e-6);
        }
        assert_eq!(sol.min_abs_dh, 0.5);
        assert!(matches!(
            symplectic_system(&t, &h, &[0.4; 11], &[1.0; 11], 1.0, RootChoice::Larger, None),
            Err(FlowError::NoPositiveRoot { .. })
        ));
    }

    #[test]
    fn simple_symplectic_example_in_hxy() {
        let p = symplectic_simple((0.0, 3.0), 201).unwrap();
        assert!(residual_symplectic(&p).unwrap().passes(1e-10));
        let d = p.derivatives().unwrap();
        let (mut h, mut dh, mut x, mut y) = (vec![], vec![], vec![], vec![]);
        for i in 1..p.len() {
            let f = p.radii().at(i);
            let df = d.radii.at(i);
            let (hi, xi_, yi) = to_hxy(f);
            let big_f = f[0] * f[1] * f[2];
            let dbig_f = df[0] * f[1] * f[2] + f[0] * df[1] * f[2] + f[0] * f[1] * df[2];
            let dhi = dbig_f / (3.0 * hi * hi);
            assert!(symplectic_defect(dhi, xi_, yi, 1.0).abs() < 1e-12 * (1.0 + big_f));
            h.push(hi);
            dh.push(dhi);
            x.push(xi_);
            y.push(yi);
        }
        let t = p.t()[1..].to_vec();
        let sol = symplectic_system(&t, &h, &dh, &x, 1.0, RootChoice::Nearest, Some(&y)).unwrap();
        for i in 0..t.len() {
            let (a, b) = (sol.profile.radii().at(i), p.radii().at(i + 1));
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deformed_bryant_salamon_is_triaxial_and_symplectic() {
        let sol = symplectic_deformed(0.1, (0.5, 6.0), 801).unwrap();
        let r = residual_symplectic(&sol.profile).unwrap();
        assert!(r.passes(1e-8), "{r:?}");
        assert!(sol.min_abs_dh >= 0.5 - 1e-12);
        let split = sol.profile.f2().iter().zip(sol.profile.f3()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(split > 1e-3);
        // The deformation breaks the cosymplectic equation.
        assert!(!residual_cosymplectic(&sol.profile).unwrap().passes(1e-6));
    }

    #[test]
    fn euler_top_on_holonomy_profiles() {
        let bs = holonomy_triaxial(0.0, 1.0, (0.5, 6.0), 1.0, 801).unwrap();
        let top = euler_top_reparam(&bs, 1e-8).unwrap();
        assert!(top.defect < 1e-6, "{}", top.defect);
        assert_eq!(top.eps_theta, 1.0);
        let rev = holonomy_triaxial(1.0, 2.0, (1.5, 5.0), -1.0, 801).unwrap();
        let top = euler_top_reparam(&rev, 1e-8).unwrap();
        assert_eq!(top.eps_theta, -1.0);
        assert!(top.defect < 1e-6, "{}", top.defect);
        let cone = holonomy_triaxial(0.0, 0.0, (0.5, 4.0), 1.0, 401).unwrap();
        let top = euler_top_reparam(&cone, 1e-8).unwrap();
        assert!(top.defect < 1e-6);
        assert!(top.w[0].iter().zip(&top.w[1]).all(|(a, b)| (a - b).abs() < 1e-12));
        let c = constant_orbit(ModelId::Su3T2, 1.0, (0.0, 1.0), 21).unwrap();
        assert!(matches!(euler_top_reparam(&c, 1e-8), Err(FlowError::NotHolonomy { .. })));
    }

    #[test]
    fn catalog_families_pass_their_classes() {
        for fam in closed_form_catalog() {
            let p = fam.evaluate(401).unwrap();
            for r in fam.check(&p).unwrap() {
                assert!(r.passes(1e-8), "{}: {r:?}", fam.kind);
            }
        }
    }

    #[test]
    fn generic_family_needs_theta() {
        let mut fam = SolutionFamily::new(FamilyKind::CosymplecticGeneric);
        assert!(fam.evaluate(21).is_ok());
        fam.theta = None;
        assert_eq!(fam.evaluate(21).unwrap_err(), FlowError::MissingTheta);
    }

    #[test]
    fn family_names_round_trip() {
        for k in FamilyKind::ALL {
            assert_eq!(k.as_str().parse::<FamilyKind>().unwrap(), k);
        }
        assert_eq!("bs-cp2".parse::<FamilyKind>().unwrap(), FamilyKind::BryantSalamonCp2);
        assert!("bogus".parse::<FamilyKind>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn xi_decreases_in_f1(mu in 0.0f64..2.0, extra in 0.0f64..2.0) {
            let nu = mu + extra;
            let mut prev = f64::INFINITY;
            for k in 0..400 {
                let f1 = 0.02 * 1.02f64.powi(k);
                let v = xi(f1, mu, nu);
                prop_assert!(v > 0.0);
                prop_assert!(v <= prev * (1.0 + 1e-14));
                prev = v;
            }
            prop_assert!((xi(1e5, mu, nu) - 0.25).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn recovery_satisfies_the_first_integrals(mu in 0.0f64..2.0, extra in 0.0f64..2.0, f1 in 0.05f64..5.0) {
            let nu = mu + extra;
            let eps = if f1 * f1 >= mu { 1.0 } else { -1.0 };
            let (b, c) = recover_f2f3(f1, mu, nu, eps).unwrap();
            let d = first_integral_defects([f1, b.sqrt(), c.sqrt()], mu, nu);
            let scale = 1.0 + f1.powi(4) + c * c;
            for v in d {
                prop_assert!(v.abs() < 1e-12 * scale);
            }
            prop_assert!(c >= nu + mu - 1e-12 * scale);
            if f1 * f1 != mu && b != nu {
                prop_assert_eq!((b - nu).signum(), eps);
            }
        }

        #[test]
        fn symplectic_quadratic_bound(x in 1e-3f64..5.0, y in 1e-3f64..5.0) {
            prop_assert!(x * y + 1.0 / x + 1.0 / y >= 3.0 - 1e-12);
        }
    }
}
