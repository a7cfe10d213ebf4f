//! Cohomogeneity-one G₂-structures on I × G/K: φ and ✲φ from a profile,
//! and the residuals of the cosymplectic, symplectic and weak holonomy
//! equations.
//!
//! Forms on I × G/K live in ℝ⁷ with dt as the last coordinate and are split
//! as A + B∧dt with A, B invariant on the orbit. Then
//! d(A + B∧dt) = d_G A + (d_G B + (−1)^{deg A} ∂ₜA)∧dt,
//! where d_G is the invariant derivative of the orbit model. The *generic*
//! path runs φ through the 7-dimensional Hodge star and this formula; the
//! *displayed* path evaluates the closed-form coefficient formulas. Every
//! residual report carries the discrepancy between the two.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::exterior::{index_masks, mask_indices, mask_rank, FormError, KForm, MetricTensor, Orientation};
use crate::math::{abs, cos, sin};
use crate::numeric::fd::{central_directional6, derivative};
use crate::numeric::NumericError;
use crate::orbits::{alpha, beta, build_orbit_model, omega, InvForm, ModelId, OrbitError, OrbitModel, ORBIT_DIM};
use crate::profile::{Profile, ProfileError};

/// Index of dt in the 7-dimensional tangent model.
pub const DT: usize = 6;

/// Fewest samples the derivative stencils accept.
pub const MIN_SAMPLES: usize = 5;

// Radii below this are treated as a collapsed orbit when building the metric.
const RADIUS_FLOOR: f64 = 1e-9;
/// Smallest |f| / max|f| at which f′ − cos θ is divided out in full.
const G2_RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationClass {
    Cosymplectic,
    Symplectic,
    WeakHolonomy,
}

impl EquationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EquationClass::Cosymplectic => "cosymplectic",
            EquationClass::Symplectic => "symplectic",
            EquationClass::WeakHolonomy => "weak-holonomy",
        }
    }
}

impl fmt::Display for EquationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquationClass {
    type Err = Cohom1Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosymplectic" => Ok(EquationClass::Cosymplectic),
            "symplectic" => Ok(EquationClass::Symplectic),
            "weak" | "weak-holonomy" | "weakholonomy" => Ok(EquationClass::WeakHolonomy),
            _ => Err(Cohom1Error::UnknownClass(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cohom1Error {
    Profile(ProfileError),
    Orbit(OrbitError),
    Form(FormError),
    Numeric(NumericError),
    GridTooShort { needed: usize, got: usize },
    VanishingRadius { index: usize },
    ZeroLambda,
    /// ✲φ has no Inv⁴ part to fit λ against.
    DegenerateFit,
    ModelMismatch { engine: ModelId, profile: ModelId },
    UnknownClass(String),
}

impl fmt::Display for Cohom1Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Cohom1Error::*;
        match self {
            Profile(e) => write!(f, "{e}"),
            Orbit(e) => write!(f, "{e}"),
            Form(e) => write!(f, "{e}"),
            Numeric(e) => write!(f, "{e}"),
            GridTooShort { needed, got } => write!(f, "need at least {needed} samples to differentiate, got {got}"),
            VanishingRadius { index } => write!(f, "a radius vanishes at interior sample {index}"),
            ZeroLambda => write!(f, "λ = 0: use the symplectic and cosymplectic residuals instead"),
            DegenerateFit => write!(f, "cannot fit λ: ✲φ has vanishing orbit part"),
            ModelMismatch { engine, profile } => write!(f, "engine built for {engine} but profile is {profile}"),
            UnknownClass(s) => write!(f, "unknown equation class '{s}' (expected cosymplectic, symplectic or weak)"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Cohom1Error {}

impl From<ProfileError> for Cohom1Error {
    fn from(e: ProfileError) -> Self {
        Cohom1Error::Profile(e)
    }
}

impl From<OrbitError> for Cohom1Error {
    fn from(e: OrbitError) -> Self {
        Cohom1Error::Orbit(e)
    }
}

impl From<FormError> for Cohom1Error {
    fn from(e: FormError) -> Self {
        Cohom1Error::Form(e)
    }
}

impl From<NumericError> for Cohom1Error {
    fn from(e: NumericError) -> Self {
        Cohom1Error::Numeric(e)
    }
}

// ---------------------------------------------------------------------------
// Assembly.

/// φ, ✲φ and g sampled along a profile, in the SU(3) labelling shared by
/// all four models (for G₂/SU(3) and SU(3)/T⁽¹²³⁾ the ωᵢ enter through
/// ω = ω₁+ω₂+ω₃).
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledStructure {
    pub model: ModelId,
    pub t: Vec<f64>,
    /// Coefficients of (ω₁∧dt, ω₂∧dt, ω₃∧dt, α, β) in φ.
    pub phi: Vec<[f64; 5]>,
    /// Coefficients of (ω₂ω₃, ω₃ω₁, ω₁ω₂, α∧dt, β∧dt) in ✲φ.
    pub star_phi: Vec<[f64; 5]>,
    /// Coefficients of (dt², g₁, g₂, g₃).
    pub metric: Vec<[f64; 4]>,
}

impl AssembledStructure {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// φ at sample `i` as a 3-form on ℝ⁷.
    pub fn phi_form(&self, i: usize) -> KForm {
        let c = &self.phi[i];
        let mut out = KForm::zero(7, 3).expect("3-forms on ℝ⁷");
        for k in 0..3 {
            out.add_term(c[k], &[2 * k, 2 * k + 1, DT]).expect("index in range");
        }
        out.axpy(c[3], &lift(&alpha())).expect("same shape");
        out.axpy(c[4], &lift(&beta())).expect("same shape");
        out
    }

    /// ✲φ at sample `i` as a 4-form on ℝ⁷.
    pub fn star_phi_form(&self, i: usize) -> KForm {
        let c = &self.star_phi[i];
        let mut out = KForm::zero(7, 4).expect("4-forms on ℝ⁷");
        out.add_term(c[0], &[2, 3, 4, 5]).expect("index in range");
        out.add_term(c[1], &[0, 1, 4, 5]).expect("index in range");
        out.add_term(c[2], &[0, 1, 2, 3]).expect("index in range");
        out.axpy(c[3], &wedge_dt(&alpha())).expect("same shape");
        out.axpy(c[4], &wedge_dt(&beta())).expect("same shape");
        out
    }

    pub fn metric_tensor(&self, i: usize) -> MetricTensor {
        let m = &self.metric[i];
        MetricTensor::diagonal(&[m[1], m[1], m[2], m[2], m[3], m[3], m[0]]).expect("diagonal metric")
    }
}

/// Samples φ, ✲φ and g along the profile from their closed forms.
pub fn assemble(p: &Profile) -> Result<AssembledStructure, Cohom1Error> {
    let n = p.len();
    let mut phi = Vec::with_capacity(n);
    let mut star_phi = Vec::with_capacity(n);
    let mut metric = Vec::with_capacity(n);
    for i in 0..n {
        let [f1, f2, f3] = p.radii().at(i);
        if i > 0 && i + 1 < n && (f1 == 0.0 || f2 == 0.0 || f3 == 0.0) {
            return Err(Cohom1Error::VanishingRadius { index: i });
        }
        let (c, s) = (cos(p.theta()[i]), sin(p.theta()[i]));
        let big_f = f1 * f2 * f3;
        let (q1, q2, q3) = (f1 * f1, f2 * f2, f3 * f3);
        phi.push([q1, q2, q3, big_f * c, big_f * s]);
        star_phi.push([q2 * q3, q3 * q1, q1 * q2, -big_f * s, big_f * c]);
        metric.push([1.0, q1, q2, q3]);
    }
    Ok(AssembledStructure { model: p.model(), t: p.t().to_vec(), phi, star_phi, metric })
}

fn lift(a: &KForm) -> KForm {
    a.embed(7, &[0, 1, 2, 3, 4, 5]).expect("orbit form")
}

fn wedge_dt(a: &KForm) -> KForm {
    lift(a).wedge(&KForm::basis(7, &[DT]).expect("dt")).expect("degree fits")
}

/// φ = Σ fᵢ²ωᵢ∧dt + f₁f₂f₃(cos θ α + sin θ β) on ℝ⁷.
pub fn seven_phi(f: [f64; 3], theta: f64) -> KForm {
    let big_f = f[0] * f[1] * f[2];
    let mut out = KForm::zero(7, 3).expect("3-forms on ℝ⁷");
    for k in 0..3 {
        out.axpy(f[k] * f[k], &wedge_dt(&omega(k))).expect("same shape");
    }
    out.axpy(big_f * cos(theta), &lift(&alpha())).expect("same shape");
    out.axpy(big_f * sin(theta), &lift(&beta())).expect("same shape");
    out
}

/// g = dt² + Σ fᵢ²gᵢ, with collapsed radii floored so the Hodge star stays
/// defined at special orbits.
pub fn seven_metric(f: [f64; 3]) -> MetricTensor {
    let q = |x: f64| (x * x).max(RADIUS_FLOOR * RADIUS_FLOOR);
    let (a, b, c) = (q(f[0]), q(f[1]), q(f[2]));
    MetricTensor::diagonal(&[a, a, b, b, c, c, 1.0]).expect("diagonal metric")
}

/// Splits a form on ℝ⁷ as A + B∧dt, with A and B on ℝ⁶.
pub fn split_dt(form: &KForm) -> Result<(KForm, KForm), FormError> {
    let k = form.degree();
    if form.dim() != 7 {
        return Err(FormError::DimensionMismatch { left: 7, right: form.dim() });
    }
    let mut a = if k <= ORBIT_DIM { KForm::zero(ORBIT_DIM, k)? } else { KForm::zero(ORBIT_DIM, 0)? };
    let mut b = if k >= 1 { KForm::zero(ORBIT_DIM, k - 1)? } else { KForm::zero(ORBIT_DIM, 0)? };
    let dt_bit = 1u8 << DT;
    for (mask, c) in form.terms() {
        if mask & dt_bit != 0 {
            // e^I ∧ e^6 with every index of I below 6 is already sorted.
            let m = mask & !dt_bit;
            b.coeffs_mut()[mask_rank(ORBIT_DIM, m)] += c;
        } else if k <= ORBIT_DIM {
            a.coeffs_mut()[mask_rank(ORBIT_DIM, mask)] += c;
        }
    }
    Ok((a, b))
}

// ---------------------------------------------------------------------------
// Generic invariant calculus.

/// A form A + B∧dt with A, B in generator coordinates of the orbit model.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitForm {
    pub orbit: InvForm,
    pub dt: InvForm,
}

/// Named per-sample coefficient arrays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientSet {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CoefficientSet {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].as_slice())
    }

    fn push(&mut self, name: String, values: Vec<f64>) {
        self.names.push(name);
        self.values.push(values);
    }

    /// Largest entrywise difference against a set with the same names.
    pub fn max_abs_diff(&self, other: &CoefficientSet) -> f64 {
        let mut worst = 0.0f64;
        for (name, v) in self.names.iter().zip(&self.values) {
            match other.get(name) {
                Some(w) => {
                    for (a, b) in v.iter().zip(w) {
                        worst = worst.max(abs(a - b));
                    }
                }
                None => return f64::INFINITY,
            }
        }
        worst
    }
}

/// dφ and d✲φ computed along both paths.
#[derive(Debug, Clone, PartialEq)]
pub struct DPhiCoefficients {
    pub generic: CoefficientSet,
    pub displayed: CoefficientSet,
}

impl DPhiCoefficients {
    pub fn discrepancy(&self) -> f64 {
        self.generic.max_abs_diff(&self.displayed)
    }
}

/// Per-sample dφ and d✲φ in generator coordinates.
#[derive(Debug, Clone, PartialEq)]
struct Derivatives {
    /// Inv⁴ part of dφ.
    dphi_orbit: Vec<Vec<f64>>,
    /// Inv³ coefficient of dt in dφ.
    dphi_dt: Vec<Vec<f64>>,
    /// Inv⁴ coefficient of dt in d✲φ.
    dstar_dt: Vec<Vec<f64>>,
}

/// Residual evaluator bound to one orbit model.
#[derive(Debug, Clone)]
pub struct Cohom1 {
    model: OrbitModel,
}

impl Cohom1 {
    pub fn new(id: ModelId) -> Result<Self, Cohom1Error> {
        Ok(Cohom1 { model: build_orbit_model(id)? })
    }

    pub fn from_model(model: OrbitModel) -> Self {
        Cohom1 { model }
    }

    pub fn model(&self) -> &OrbitModel {
        &self.model
    }

    fn check(&self, p: &Profile) -> Result<(), Cohom1Error> {
        if p.model() != self.model.id() {
            return Err(Cohom1Error::ModelMismatch { engine: self.model.id(), profile: p.model() });
        }
        if p.len() < MIN_SAMPLES {
            return Err(Cohom1Error::GridTooShort { needed: MIN_SAMPLES, got: p.len() });
        }
        Ok(())
    }

    fn project_split(&self, form: &KForm) -> Result<SplitForm, Cohom1Error> {
        let (a, b) = split_dt(form)?;
        let tol_a = crate::orbits::projection_tolerance(a.max_abs());
        let tol_b = crate::orbits::projection_tolerance(b.max_abs());
        Ok(SplitForm { orbit: self.model.project(&a, tol_a)?, dt: self.model.project(&b, tol_b)? })
    }

    /// φ at one sample in generator coordinates: A ∈ Inv³, B ∈ Inv².
    pub fn phi_split(&self, f: [f64; 3], theta: f64) -> Result<SplitForm, Cohom1Error> {
        self.project_split(&seven_phi(f, theta))
    }

    /// ✲φ at one sample: A ∈ Inv⁴, B ∈ Inv³. φ is the pullback of the
    /// unit-radius form under L = diag(f₁, f₁, f₂, f₂, f₃, f₃, 1) and
    /// g = LᵀL with det L ≥ 0, so ✲φ is the pullback of the flat star. This
    /// stays exact where a radius vanishes.
    pub fn star_phi_split(&self, f: [f64; 3], theta: f64) -> Result<SplitForm, Cohom1Error> {
        let unit = seven_phi([1.0; 3], theta).hodge(&MetricTensor::identity(7)?, &Orientation::standard(7)?)?;
        let l = [f[0], f[0], f[1], f[1], f[2], f[2], 1.0];
        let mut star = unit;
        let masks = index_masks(7, star.degree());
        for (c, mask) in star.coeffs_mut().iter_mut().zip(masks) {
            *c *= mask_indices(*mask).map(|i| l[i]).product::<f64>();
        }
        self.project_split(&star)
    }

    fn generic(&self, p: &Profile) -> Result<Derivatives, Cohom1Error> {
        let n = p.len();
        let mut phis = Vec::with_capacity(n);
        let mut stars = Vec::with_capacity(n);
        for i in 0..n {
            let f = p.radii().at(i);
            phis.push(self.phi_split(f, p.theta()[i])?);
            stars.push(self.star_phi_split(f, p.theta()[i])?);
        }
        // ∂ₜ of the orbit parts A_φ ∈ Inv³ and A_✲φ ∈ Inv⁴.
        let (dt_phi, dt_star) = match p.derivatives() {
            Some(d) => {
                let mut dp = Vec::with_capacity(n);
                let mut ds = Vec::with_capacity(n);
                for i in 0..n {
                    let f = p.radii().at(i);
                    let v = d.radii.at(i);
                    let (th, vth) = (p.theta()[i], d.theta[i]);
                    let speed = v.iter().fold(abs(vth), |m, x| m.max(abs(*x)));
                    let h = 1e-2 / (1.0 + speed);
                    let at = |s: f64| ([f[0] + s * v[0], f[1] + s * v[1], f[2] + s * v[2]], th + s * vth);
                    dp.push(self.directional(&at, h, |f, th| Ok(self.phi_split(f, th)?.orbit.coords))?);
                    ds.push(self.directional(&at, h, |f, th| Ok(self.star_phi_split(f, th)?.orbit.coords))?);
                }
                (dp, ds)
            }
            None => (
                grid_derivative(p.t(), phis.iter().map(|s| s.orbit.coords.clone()).collect())?,
                grid_derivative(p.t(), stars.iter().map(|s| s.orbit.coords.clone()).collect())?,
            ),
        };
        let mut out = Derivatives { dphi_orbit: Vec::new(), dphi_dt: Vec::new(), dstar_dt: Vec::new() };
        for i in 0..n {
            // φ: A has degree 3, so the ∂ₜ term enters with a minus sign.
            out.dphi_orbit.push(self.model.d(&phis[i].orbit)?.coords);
            let db = self.model.d(&phis[i].dt)?.coords;
            out.dphi_dt.push(db.iter().zip(&dt_phi[i]).map(|(a, b)| a - b).collect());
            // ✲φ: A has degree 4 and d_G A lands in Inv⁵ = 0.
            let db = self.model.d(&stars[i].dt)?.coords;
            out.dstar_dt.push(db.iter().zip(&dt_star[i]).map(|(a, b)| a + b).collect());
        }
        Ok(out)
    }

    fn directional<A, G>(&self, at: &A, h: f64, g: G) -> Result<Vec<f64>, Cohom1Error>
    where
        A: Fn(f64) -> ([f64; 3], f64),
        G: Fn([f64; 3], f64) -> Result<Vec<f64>, Cohom1Error>,
    {
        let offsets = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let mut samples = Vec::with_capacity(6);
        for o in offsets {
            let (f, th) = at(o * h);
            samples.push(g(f, th)?);
        }
        let m = samples[0].len();
        let mut out = vec![0.0; m];
        for (j, slot) in out.iter_mut().enumerate() {
            let pick = |s: f64| {
                let k = offsets.iter().position(|o| *o * h == s).expect("stencil offset");
                samples[k][j]
            };
            *slot = central_directional6(pick, h);
        }
        Ok(out)
    }

    fn displayed(&self, p: &Profile) -> Result<Derivatives, Cohom1Error> {
        let n = p.len();
        let id = self.model.id();
        let mut pair = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut fc = vec![0.0; n];
        let mut fs = vec![0.0; n];
        let mut sq = vec![0.0; n];
        for i in 0..n {
            let f = p.radii().at(i);
            let big_f = f[0] * f[1] * f[2];
            let q = [f[0] * f[0], f[1] * f[1], f[2] * f[2]];
            pair[0][i] = q[1] * q[2];
            pair[1][i] = q[2] * q[0];
            pair[2][i] = q[0] * q[1];
            fc[i] = big_f * cos(p.theta()[i]);
            fs[i] = big_f * sin(p.theta()[i]);
            sq[i] = q[0] + q[1] + q[2];
        }
        let (dpair, dfc, dfs) = match p.derivatives() {
            Some(d) => {
                let mut dpair = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
                let mut dfc = vec![0.0; n];
                let mut dfs = vec![0.0; n];
                for i in 0..n {
                    let f = p.radii().at(i);
                    let v = d.radii.at(i);
                    let (c, s) = (cos(p.theta()[i]), sin(p.theta()[i]));
                    for (k, (a, b)) in [(1usize, 2usize), (2, 0), (0, 1)].into_iter().enumerate() {
                        dpair[k][i] = 2.0 * f[a] * f[b] * (v[a] * f[b] + f[a] * v[b]);
                    }
                    let big_f = f[0] * f[1] * f[2];
                    let dbig_f = v[0] * f[1] * f[2] + f[0] * v[1] * f[2] + f[0] * f[1] * v[2];
                    dfc[i] = dbig_f * c - big_f * s * d.theta[i];
                    dfs[i] = dbig_f * s + big_f * c * d.theta[i];
                }
                (dpair, dfc, dfs)
            }
            None => {
                let t = p.t();
                (
                    [derivative(t, &pair[0], 1)?, derivative(t, &pair[1], 1)?, derivative(t, &pair[2], 1)?],
                    derivative(t, &fc, 1)?,
                    derivative(t, &fs, 1)?,
                )
            }
        };
        let mut out = Derivatives { dphi_orbit: Vec::new(), dphi_dt: Vec::new(), dstar_dt: Vec::new() };
        for i in 0..n {
            let (big_fc, big_fs) = (fc[i], fs[i]);
            let beta_dt = -dfs[i];
            match id {
                ModelId::Su3T2 => {
                    out.dphi_orbit.push(vec![-2.0 * big_fs; 3]);
                    out.dphi_dt.push(vec![0.5 * sq[i] - dfc[i], beta_dt]);
                    out.dstar_dt.push((0..3).map(|k| dpair[k][i] - 2.0 * big_fc).collect());
                }
                ModelId::Sp2 => {
                    out.dphi_orbit.push(vec![-2.0 * big_fs, -big_fs]);
                    out.dphi_dt.push(vec![0.5 * sq[i] - dfc[i], beta_dt]);
                    out.dstar_dt.push(vec![dpair[2][i] - 2.0 * big_fc, 0.5 * dpair[0][i] - big_fc]);
                }
                ModelId::G2Su3 => {
                    // Here sq = 3f², and ½(f⁴)′ − 2f³cos θ = 2f³(f′ − cos θ).
                    out.dphi_orbit.push(vec![-2.0 * big_fs]);
                    out.dphi_dt.push(vec![sq[i] - dfc[i], beta_dt]);
                    out.dstar_dt.push(vec![0.5 * dpair[0][i] - 2.0 * big_fc]);
                }
                ModelId::Su3T123 => {
                    out.dphi_orbit.push(vec![-big_fs]);
                    out.dphi_dt.push(vec![0.5 * sq[i] - dfc[i], beta_dt]);
                    out.dstar_dt.push(vec![0.5 * dpair[0][i] - big_fc]);
                }
            }
        }
        Ok(out)
    }

    fn named(&self, d: &Derivatives) -> CoefficientSet {
        let mut set = CoefficientSet::default();
        let columns = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
        for (j, g) in self.model.basis(4).iter().enumerate() {
            set.push(format!("dphi[{}]", g.name), columns(&d.dphi_orbit, j));
        }
        for (j, g) in self.model.basis(3).iter().enumerate() {
            set.push(format!("dphi[{}∧dt]", g.name), columns(&d.dphi_dt, j));
        }
        for (j, g) in self.model.basis(4).iter().enumerate() {
            set.push(format!("d*phi[{}∧dt]", g.name), columns(&d.dstar_dt, j));
        }
        set
    }

    /// dφ and d✲φ along the generic and the displayed path.
    pub fn d_phi_coefficients(&self, p: &Profile) -> Result<DPhiCoefficients, Cohom1Error> {
        self.check(p)?;
        Ok(DPhiCoefficients { generic: self.named(&self.generic(p)?), displayed: self.named(&self.displayed(p)?) })
    }

    /// Coefficients (ω₂ω₃, ω₃ω₁, ω₁ω₂) of an invariant 4-form.
    pub fn pair_coefficients(&self, coords: &[f64]) -> Result<[f64; 3], Cohom1Error> {
        let k = self.model.to_kform(&self.model.inv(4, coords.to_vec())?)?;
        Ok([k.term(&[2, 3, 4, 5])?, k.term(&[0, 1, 4, 5])?, k.term(&[0, 1, 2, 3])?])
    }

    fn both(&self, p: &Profile) -> Result<(Derivatives, f64), Cohom1Error> {
        self.check(p)?;
        let g = self.generic(p)?;
        let shown = self.displayed(p)?;
        let cross = self.named(&g).max_abs_diff(&self.named(&shown));
        Ok((g, cross))
    }

    /// Sup-norms of d✲φ, one per pair (fᵢ²fⱼ²)′ − 2f₁f₂f₃cos θ; for
    /// G₂/SU(3) the single component f′ − cos θ.
    pub fn residual_cosymplectic(&self, p: &Profile) -> Result<ResidualReport, Cohom1Error> {
        let (g, cross) = self.both(p)?;
        let mut comps = Vec::new();
        if self.model.id() == ModelId::G2Su3 {
            // The ω²∧dt coefficient is 2f³(f′ − cos θ) but its rounding error
            // decays slower than f³, so small radii are clamped to a floor.
            let fmax = p.f1().iter().fold(0.0f64, |m, f| m.max(abs(*f)));
            let floor = RADIUS_FLOOR.max(G2_RELATIVE_FLOOR * fmax);
            let mut sup = 0.0f64;
            for (i, row) in g.dstar_dt.iter().enumerate() {
                let f = abs(p.f1()[i]).max(floor);
                sup = sup.max(abs(row[0] / (2.0 * f * f * f)));
            }
            comps.push(("f'-cos(theta)".to_string(), sup));
        } else {
            let mut sup = [0.0f64; 3];
            for row in &g.dstar_dt {
                let pc = self.pair_coefficients(row)?;
                for k in 0..3 {
                    sup[k] = sup[k].max(abs(pc[k]));
                }
            }
            for (k, name) in PAIR_NAMES.iter().enumerate() {
                comps.push((format!("d*phi[{name}∧dt]"), sup[k]));
            }
        }
        Ok(ResidualReport::new(EquationClass::Cosymplectic, None, comps, cross, Vec::new()))
    }

    /// Sup-norms of the α∧dt, β∧dt and ωᵢωⱼ coefficients of dφ.
    pub fn residual_symplectic(&self, p: &Profile) -> Result<ResidualReport, Cohom1Error> {
        let (g, cross) = self.both(p)?;
        let comps = self.form_components("dphi", &g, None, p)?;
        Ok(ResidualReport::new(EquationClass::Symplectic, None, comps, cross, Vec::new()))
    }

    /// Sup-norms of dφ − λ✲φ. With `lambda = None`, λ is fitted by least
    /// squares on the Inv⁴ part, where dφ = λ✲φ reads −2f₁f₂f₃ sin θ = λfᵢ²fⱼ².
    pub fn residual_weak_holonomy(&self, p: &Profile, lambda: Option<f64>) -> Result<ResidualReport, Cohom1Error> {
        let (g, cross) = self.both(p)?;
        let lambda = match lambda {
            Some(l) if l == 0.0 => return Err(Cohom1Error::ZeroLambda),
            Some(l) => l,
            None => self.fit_from(&g, p)?,
        };
        let comps = self.form_components("dphi-λ*phi", &g, Some(lambda), p)?;
        let diagnostics = self.weak_diagnostics(p, lambda)?;
        Ok(ResidualReport::new(EquationClass::WeakHolonomy, Some(lambda), comps, cross, diagnostics))
    }

    /// Least-squares λ for dφ = λ✲φ on the orbit part.
    pub fn fit_lambda(&self, p: &Profile) -> Result<f64, Cohom1Error> {
        self.check(p)?;
        let g = self.generic(p)?;
        self.fit_from(&g, p)
    }

    fn fit_from(&self, g: &Derivatives, p: &Profile) -> Result<f64, Cohom1Error> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, row) in g.dphi_orbit.iter().enumerate() {
            let star = self.star_phi_split(p.radii().at(i), p.theta()[i])?;
            let a = self.pair_coefficients(row)?;
            let b = self.pair_coefficients(&star.orbit.coords)?;
            for k in 0..3 {
                num += a[k] * b[k];
                den += b[k] * b[k];
            }
        }
        if den == 0.0 {
            return Err(Cohom1Error::DegenerateFit);
        }
        Ok(num / den)
    }

    fn form_components(
        &self,
        prefix: &str,
        g: &Derivatives,
        lambda: Option<f64>,
        p: &Profile,
    ) -> Result<Vec<(String, f64)>, Cohom1Error> {
        let mut sup_dt = [0.0f64; 2];
        let mut sup_pair = [0.0f64; 3];
        for i in 0..p.len() {
            let mut dt = g.dphi_dt[i].clone();
            let mut orbit = self.pair_coefficients(&g.dphi_orbit[i])?;
            if let Some(l) = lambda {
                let star = self.star_phi_split(p.radii().at(i), p.theta()[i])?;
                for (a, b) in dt.iter_mut().zip(&star.dt.coords) {
                    *a -= l * b;
                }
                let sp = self.pair_coefficients(&star.orbit.coords)?;
                for k in 0..3 {
                    orbit[k] -= l * sp[k];
                }
            }
            for k in 0..2 {
                sup_dt[k] = sup_dt[k].max(abs(dt[k]));
            }
            for k in 0..3 {
                sup_pair[k] = sup_pair[k].max(abs(orbit[k]));
            }
        }
        let names3: Vec<&str> = self.model.basis(3).iter().map(|g| g.name.as_str()).collect();
        let mut comps = Vec::new();
        for k in 0..2 {
            comps.push((format!("{prefix}[{}∧dt]", names3[k]), sup_dt[k]));
        }
        for (k, name) in PAIR_NAMES.iter().enumerate() {
            comps.push((format!("{prefix}[{name}]"), sup_pair[k]));
        }
        Ok(comps)
    }

    /// The θ′ relations 4θ′ = −λ and θ′ = −4λ, and λf = −4 sin θ for
    /// G₂/SU(3). These are consequences, so they stay out of maxAbs.
    fn weak_diagnostics(&self, p: &Profile, lambda: f64) -> Result<Vec<(String, f64)>, Cohom1Error> {
        let dtheta = match p.derivatives() {
            Some(d) => d.theta.clone(),
            None => derivative(p.t(), p.theta(), 1)?,
        };
        let sup = |f: &dyn Fn(usize) -> f64| (0..p.len()).fold(0.0f64, |m, i| m.max(abs(f(i))));
        let mut out = vec![
            ("4theta'+lambda".to_string(), sup(&|i| 4.0 * dtheta[i] + lambda)),
            ("theta'+4lambda".to_string(), sup(&|i| dtheta[i] + 4.0 * lambda)),
        ];
        if self.model.id() == ModelId::G2Su3 {
            out.push(("lambda*f+4sin(theta)".to_string(), sup(&|i| lambda * p.f1()[i] + 4.0 * sin(p.theta()[i]))));
        }
        Ok(out)
    }
}

const PAIR_NAMES: [&str; 3] = ["ω2ω3", "ω3ω1", "ω1ω2"];

fn grid_derivative(t: &[f64], rows: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, Cohom1Error> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0.0; m]; n];
    for j in 0..m {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        for (i, v) in derivative(t, &col, 1)?.into_iter().enumerate() {
            out[i][j] = v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports.

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub class: EquationClass,
    pub lambda: Option<f64>,
    /// Sup over the grid of each named coefficient.
    pub components: Vec<(String, f64)>,
    pub max_abs: f64,
    /// Largest difference between the generic and displayed coefficients.
    pub cross_check: f64,
    /// Derived relations reported alongside but not counted in `max_abs`.
    pub diagnostics: Vec<(String, f64)>,
}

impl ResidualReport {
    fn new(
        class: EquationClass,
        lambda: Option<f64>,
        components: Vec<(String, f64)>,
        cross_check: f64,
        diagnostics: Vec<(String, f64)>,
    ) -> Self {
        let max_abs = components.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
        ResidualReport { class, lambda, components, max_abs, cross_check, diagnostics }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs <= tol
    }
}

pub fn residual_cosymplectic(p: &Profile) -> Result<ResidualReport, Cohom1Error> {
    Cohom1::new(p.model())?.residual_cosymplectic(p)
}

pub fn residual_symplectic(p: &Profile) -> Result<ResidualReport, Cohom1Error> {
    Cohom1::new(p.model())?.residual_symplectic(p)
}

pub fn residual_weak_holonomy(p: &Profile, lambda: Option<f64>) -> Result<ResidualReport, Cohom1Error> {
    Cohom1::new(p.model())?.residual_weak_holonomy(p, lambda)
}

pub fn d_phi_coefficients(p: &Profile) -> Result<DPhiCoefficients, Cohom1Error> {
    Cohom1::new(p.model())?.d_phi_coefficients(p)
}

/// Runs the residual of one equation class.
pub fn residual(p: &Profile, class: EquationClass, lambda: Option<f64>) -> Result<ResidualReport, Cohom1Error> {
    let engine = Cohom1::new(p.model())?;
    match class {
        EquationClass::Cosymplectic => engine.residual_cosymplectic(p),
        EquationClass::Symplectic => engine.residual_symplectic(p),
        EquationClass::WeakHolonomy => engine.residual_weak_holonomy(p, lambda),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2core::recover_metric_with;
    use crate::numeric::linspace;
    use crate::profile::{ProfileDerivatives, Radii};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn star_phi_matches_the_metric_star() {
        let engine = Cohom1::new(ModelId::Su3T2).unwrap();
        let (f, th) = ([0.7, -1.3, 2.1], 0.4);
        let direct = seven_phi(f, th).hodge(&seven_metric(f), &Orientation::standard(7).unwrap()).unwrap();
        let want = engine.project_split(&direct).unwrap();
        let got = engine.star_phi_split(f, th).unwrap();
        for (a, b) in got.orbit.coords.iter().zip(&want.orbit.coords).chain(got.dt.coords.iter().zip(&want.dt.coords)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn star_phi_is_continuous_at_a_collapsed_radius() {
        let engine = Cohom1::new(ModelId::Su3T2).unwrap();
        let at = |f1: f64| engine.star_phi_split([f1, 1.0, 1.0], 0.3).unwrap();
        let (zero, near) = (at(0.0), at(1e-7));
        for (a, b) in zero.orbit.coords.iter().zip(&near.orbit.coords).chain(zero.dt.coords.iter().zip(&near.dt.coords)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    fn equal(model: ModelId, t: Vec<f64>, f: impl Fn(f64) -> f64, th: impl Fn(f64) -> f64) -> Profile {
        let fv = t.iter().map(|x| f(*x)).collect();
        let tv = t.iter().map(|x| th(*x)).collect();
        Profile::new(model, t, Radii::Equal(fv), tv).unwrap()
    }

    #[test]
    fn g2_unit_profile_is_omega_dt_plus_alpha() {
        let p = equal(ModelId::G2Su3, linspace(0.0, 1.0, 5), |_| 1.0, |_| 0.0);
        let a = assemble(&p).unwrap();
        assert_eq!(a.phi[2], [1.0, 1.0, 1.0, 1.0, 0.0]);
        let engine = Cohom1::new(ModelId::G2Su3).unwrap();
        let s = engine.phi_split([1.0; 3], 0.0).unwrap();
        assert_eq!(s.orbit.coords, vec![1.0, 0.0]);
        assert!((s.dt.coords[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn su3_constant_radii() {
        let c = 1.7;
        let p = equal(ModelId::Su3T2, linspace(0.0, 1.0, 5), |_| c, |_| 0.0);
        let a = assemble(&p).unwrap();
        assert_eq!(a.phi[0], [c * c, c * c, c * c, c * c * c, 0.0]);
    }

    #[test]
    fn theta_period_leaves_coefficients() {
        let t = linspace(0.0, 1.0, 7);
        let p = equal(ModelId::Su3T2, t.clone(), |x| 1.0 + x, |x| 0.3 + x);
        let q = equal(ModelId::Su3T2, t, |x| 1.0 + x, |x| 0.3 + x + 2.0 * PI);
        let (a, b) = (assemble(&p).unwrap(), assemble(&q).unwrap());
        for (x, y) in a.phi.iter().zip(&b.phi) {
            for k in 0..5 {
                assert!((x[k] - y[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn assembled_phi_is_g2_with_the_assembled_metric() {
        let t = linspace(0.0, 1.0, 5);
        let fv = Radii::Triaxial { f1: vec![0.7; 5], f2: vec![1.3; 5], f3: vec![2.1; 5] };
        let p = Profile::new(ModelId::Su3T2, t, fv, vec![0.4; 5]).unwrap();
        let a = assemble(&p).unwrap();
        let geo = recover_metric_with(&a.phi_form(0), &Orientation::standard(7).unwrap()).unwrap();
        assert!(geo.is_g2_type);
        assert!(geo.metric.unwrap().matrix().max_abs_diff(a.metric_tensor(0).matrix()) < 1e-12);
        let star = a.phi_form(0).hodge(&a.metric_tensor(0), &Orientation::standard(7).unwrap()).unwrap();
        assert!(star.max_abs_diff(&a.star_phi_form(0)) < 1e-12);
        let seven = a.phi_form(0).wedge(&star).unwrap().top_coefficient().unwrap();
        let vol = (0.7f64 * 1.3 * 2.1).powi(2);
        assert!((seven - 7.0 * vol).abs() < 1e-11);
    }

    #[test]
    fn split_round_trip() {
        let phi = seven_phi([0.5, 1.5, 2.0], 1.1);
        let (a, b) = split_dt(&phi).unwrap();
        let back = lift(&a).try_add(&wedge_dt(&b)).unwrap();
        assert!(back.max_abs_diff(&phi) < 1e-15);
    }

    #[test]
    fn flat_g2_is_closed_and_coclosed() {
        let t = linspace(0.5, 2.0, 41);
        let p = equal(ModelId::G2Su3, t.clone(), |x| x, |_| 0.0);
        let d = ProfileDerivatives { radii: Radii::Equal(vec![1.0; 41]), theta: vec![0.0; 41] };
        let p = p.with_derivatives(d).unwrap();
        let c = residual_cosymplectic(&p).unwrap();
        let s = residual_symplectic(&p).unwrap();
        assert!(c.max_abs < 1e-10 && s.max_abs < 1e-10, "{c:?} {s:?}");
        let coeffs = d_phi_coefficients(&p).unwrap();
        for v in coeffs.generic.values.iter().flatten() {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn constant_g2_residuals() {
        let t = linspace(0.0, 1.0, 11);
        let c = 1.3;
        let p = equal(ModelId::G2Su3, t.clone(), |_| c, |_| PI / 2.0);
        assert!(residual_cosymplectic(&p).unwrap().max_abs < 1e-12);
        let q = equal(ModelId::G2Su3, t, |_| c, |_| 0.0);
        let r = residual_cosymplectic(&q).unwrap();
        assert!((r.component("f'-cos(theta)").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_su3_needs_cos_zero() {
        let t = linspace(0.0, 1.0, 11);
        let c = 0.8;
        let p = equal(ModelId::Su3T2, t.clone(), |_| c, |_| 0.0);
        let r = residual_cosymplectic(&p).unwrap();
        assert!((r.max_abs - 2.0 * c * c * c).abs() < 1e-12);
        let q = equal(ModelId::Su3T2, t, |_| c, |_| PI / 2.0);
        assert!(residual_cosymplectic(&q).unwrap().max_abs < 1e-12);
    }

    #[test]
    fn simple_symplectic_su3_example() {
        let t = linspace(0.2, 3.0, 61);
        let f1 = t.clone();
        let f2: Vec<f64> = t.iter().map(|x| (1.0 + x * x / 4.0).sqrt()).collect();
        let d1 = vec![1.0; 61];
        let d2: Vec<f64> = t.iter().map(|x| x / 4.0 / (1.0 + x * x / 4.0).sqrt()).collect();
        let p = Profile::new(ModelId::Su3T2, t, Radii::Pair { f1, f2 }, vec![0.0; 61])
            .unwrap()
            .with_derivatives(ProfileDerivatives { radii: Radii::Pair { f1: d1, f2: d2 }, theta: vec![0.0; 61] })
            .unwrap();
        let r = residual_symplectic(&p).unwrap();
        assert!(r.max_abs < 1e-10, "{r:?}");
    }

    #[test]
    fn sin_theta_shows_in_symplectic_residual() {
        let p = equal(ModelId::Su3T2, linspace(0.0, 1.0, 9), |_| 1.0, |_| 0.5);
        let r = residual_symplectic(&p).unwrap();
        let expected = 2.0 * 0.5f64.sin();
        assert!((r.component("dphi[ω1ω2]").unwrap() - expected).abs() < 1e-12);
    }

    fn weak_g2(lambda: f64, n: usize) -> Profile {
        let t = linspace(0.1, 4.0 * PI / lambda - 0.1, n);
        let f: Vec<f64> = t.iter().map(|x| 4.0 / lambda * (lambda * x / 4.0).sin()).collect();
        let df: Vec<f64> = t.iter().map(|x| (lambda * x / 4.0).cos()).collect();
        let th: Vec<f64> = t.iter().map(|x| -lambda * x / 4.0).collect();
        Profile::new(ModelId::G2Su3, t, Radii::Equal(f), th)
            .unwrap()
            .with_derivatives(ProfileDerivatives { radii: Radii::Equal(df), theta: vec![-lambda / 4.0; n] })
            .unwrap()
    }

    #[test]
    fn round_sphere_is_weak() {
        let p = weak_g2(4.0, 201);
        let r = residual_weak_holonomy(&p, Some(4.0)).unwrap();
        assert!(r.max_abs < 1e-10, "{r:?}");
        assert!(r.cross_check < 1e-10);
        let fitted = Cohom1::new(ModelId::G2Su3).unwrap().fit_lambda(&p).unwrap();
        assert!((fitted - 4.0).abs() < 1e-10);
        // d(dφ)/λ = d✲φ must vanish.
        assert!(residual_cosymplectic(&p).unwrap().max_abs < 1e-10);
        assert_eq!(residual_weak_holonomy(&p, Some(0.0)), Err(Cohom1Error::ZeroLambda));
    }

    #[test]
    fn unequal_radii_break_weak_constraint() {
        let t = linspace(0.5, 1.5, 11);
        let f2: Vec<f64> = t.iter().map(|x| 1.0 + 0.1 * x).collect();
        let p = Profile::new(ModelId::Su3T2, t.clone(), Radii::Pair { f1: t.clone(), f2 }, vec![0.3; 11]).unwrap();
        let r = residual_weak_holonomy(&p, Some(1.0)).unwrap();
        assert!(r.component("dphi-λ*phi[ω2ω3]").unwrap() > 1e-3);
    }

    #[test]
    fn grid_derivatives_converge_at_fourth_order() {
        let err = |n: usize| {
            let p = weak_g2(4.0, n).without_derivatives();
            residual_weak_holonomy(&p, Some(4.0)).unwrap().max_abs
        };
        let ratio = err(101) / err(201);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn short_grid_rejected() {
        let p = equal(ModelId::G2Su3, linspace(0.0, 1.0, 4), |_| 1.0, |_| 0.0);
        assert_eq!(residual_cosymplectic(&p).unwrap_err(), Cohom1Error::GridTooShort { needed: 5, got: 4 });
    }

    #[test]
    fn class_names_parse() {
        assert_eq!("weak".parse::<EquationClass>().unwrap(), EquationClass::WeakHolonomy);
        assert!("closed".parse::<EquationClass>().is_err());
    }

    fn random_profile(model: ModelId, a: [f64; 3], b: [f64; 3], th: [f64; 2], n: usize) -> Profile {
        let t = linspace(0.0, 1.0, n);
        let f = |k: usize, x: f64| 1.0 + a[k] * x + b[k] * x * x;
        let df = |k: usize, x: f64| a[k] + 2.0 * b[k] * x;
        let col = |g: &dyn Fn(f64) -> f64| t.iter().map(|x| g(*x)).collect::<Vec<f64>>();
        let (radii, d) = match model.radii_count() {
            1 => (Radii::Equal(col(&|x| f(0, x))), Radii::Equal(col(&|x| df(0, x)))),
            2 => (
                Radii::Pair { f1: col(&|x| f(0, x)), f2: col(&|x| f(1, x)) },
                Radii::Pair { f1: col(&|x| df(0, x)), f2: col(&|x| df(1, x)) },
            ),
            _ => (
                Radii::Triaxial { f1: col(&|x| f(0, x)), f2: col(&|x| f(1, x)), f3: col(&|x| f(2, x)) },
                Radii::Triaxial { f1: col(&|x| df(0, x)), f2: col(&|x| df(1, x)), f3: col(&|x| df(2, x)) },
            ),
        };
        let theta = col(&|x| th[0] + th[1] * x * x);
        let dtheta = col(&|x| 2.0 * th[1] * x);
        Profile::new(model, t, radii, theta)
            .unwrap()
            .with_derivatives(ProfileDerivatives { radii: d, theta: dtheta })
            .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generic_matches_displayed(
            m in 0usize..4,
            a in proptest::array::uniform3(-0.4f64..0.4),
            b in proptest::array::uniform3(-0.3f64..0.3),
            th in proptest::array::uniform2(-3.0f64..3.0),
        ) {
            let model = ModelId::ALL[m];
            let p = random_profile(model, a, b, th, 9);
            let c = d_phi_coefficients(&p).unwrap();
            prop_assert!(c.discrepancy() < 1e-10, "{}", c.discrepancy());
            let q = p.without_derivatives();
            let c = d_phi_coefficients(&q).unwrap();
            prop_assert!(c.discrepancy() < 1e-10, "{}", c.discrepancy());
        }

        #[test]
        fn sp2_residuals_match_su3_with_f3_equal_f2(
            a in proptest::array::uniform3(-0.4f64..0.4),
            b in proptest::array::uniform3(-0.3f64..0.3),
            th in proptest::array::uniform2(-3.0f64..3.0),
        ) {
            let p = random_profile(ModelId::Sp2, a, b, th, 9);
            let q = p.clone().relabel(ModelId::Su3T2).unwrap();
            for class in [EquationClass::Cosymplectic, EquationClass::Symplectic] {
                let x = residual(&p, class, None).unwrap();
                let y = residual(&q, class, None).unwrap();
                for ((n1, v1), (n2, v2)) in x.components.iter().zip(&y.components) {
                    prop_assert_eq!(n1, n2);
                    prop_assert!((v1 - v2).abs() < 1e-10);
                }
            }
        }
    }
}
