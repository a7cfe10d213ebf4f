//! Linear algebra of G₂ on ℝ⁷: the model 3-forms φ(θ), metric and volume
//! recovery from a stable 3-form, and the Spin(7) 4-form on ℝ⁷ ⊕ ℝN.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::exterior::{FormError, KForm, MetricTensor, Orientation};
use crate::linalg::Mat;
use crate::math::{abs, acos, cos, pow, sin, sqrt};
use crate::numeric::fd::central_directional;
use crate::numeric::quad::invert_arc_length;
use crate::numeric::{linspace, NumericError};
use crate::orbits::ModelId;
use crate::profile::{Profile, ProfileDerivatives, ProfileError, Radii};

pub const G2_DIM: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub enum G2Error {
    NotG2Type,
    WrongShape { dim: usize, degree: usize },
    InvalidNormal(usize),
    RadiusNotPositive { s: f64 },
    TooFewSamples(usize),
    EmptyRange,
    Form(FormError),
    Numeric(NumericError),
    Profile(ProfileError),
}

impl fmt::Display for G2Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            G2Error::NotG2Type => write!(f, "3-form is not of G₂ type for the given orientation"),
            G2Error::WrongShape { dim, degree } => {
                write!(f, "expected a 3-form on ℝ⁷, got degree {degree} on ℝ^{dim}")
            }
            G2Error::InvalidNormal(i) => write!(f, "normal direction {i} outside 0..8"),
            G2Error::RadiusNotPositive { s } => write!(f, "radius function not positive at s = {s}"),
            G2Error::TooFewSamples(n) => write!(f, "need at least 5 samples, got {n}"),
            G2Error::EmptyRange => write!(f, "empty parameter range"),
            G2Error::Form(e) => write!(f, "{e}"),
            G2Error::Numeric(e) => write!(f, "{e}"),
            G2Error::Profile(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for G2Error {}

impl From<FormError> for G2Error {
    fn from(e: FormError) -> Self {
        G2Error::Form(e)
    }
}

impl From<NumericError> for G2Error {
    fn from(e: NumericError) -> Self {
        G2Error::Numeric(e)
    }
}

impl From<ProfileError> for G2Error {
    fn from(e: ProfileError) -> Self {
        G2Error::Profile(e)
    }
}

/// φ(θ) = ω₀∧v₀ + cos θ α₀ + sin θ β₀ on ℝ⁷ with basis v₀…v₆.
#[derive(Debug, Clone, PartialEq)]
pub struct G2ModelForm {
    pub theta: f64,
    pub form: KForm,
}

fn f7(terms: &[(f64, &[usize])], degree: usize) -> KForm {
    KForm::from_terms(G2_DIM, degree, terms).expect("static form")
}

/// ω₀ = v₁₂ + v₃₄ + v₅₆.
pub fn omega0() -> KForm {
    f7(&[(1.0, &[1, 2]), (1.0, &[3, 4]), (1.0, &[5, 6])], 2)
}

/// α₀ = v₂₄₆ − v₂₃₅ − v₁₄₅ − v₁₃₆.
pub fn alpha0() -> KForm {
    f7(&[(1.0, &[2, 4, 6]), (-1.0, &[2, 3, 5]), (-1.0, &[1, 4, 5]), (-1.0, &[1, 3, 6])], 3)
}

/// β₀ = v₁₃₅ − v₁₄₆ − v₂₃₆ − v₂₄₅.
pub fn beta0() -> KForm {
    f7(&[(1.0, &[1, 3, 5]), (-1.0, &[1, 4, 6]), (-1.0, &[2, 3, 6]), (-1.0, &[2, 4, 5])], 3)
}

pub fn model_three_form(theta: f64) -> G2ModelForm {
    let v0 = KForm::basis(G2_DIM, &[0]).expect("basis");
    let mut form = omega0().wedge(&v0).expect("wedge");
    form.axpy(cos(theta), &alpha0()).expect("shape");
    form.axpy(sin(theta), &beta0()).expect("shape");
    G2ModelForm { theta, form }
}

/// The permutation v₁→v₃→v₅→v₁, v₂→v₄→v₆→v₂ as a linear map of ℝ⁷; it
/// preserves every φ(θ).
pub fn stabilizer_permutation() -> Mat {
    let images = [0usize, 3, 4, 5, 6, 1, 2];
    Mat::from_fn(G2_DIM, G2_DIM, |i, j| if images[i] == j { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredGeometry {
    /// Bᵢⱼ = top coefficient of (eᵢ⌟φ)∧(eⱼ⌟φ)∧φ, signed by the orientation.
    pub b_matrix: Mat,
    pub metric: Option<MetricTensor>,
    pub volume: Option<Orientation>,
    pub is_g2_type: bool,
}

/// Metric and volume of a 3-form on ℝ⁷ for the standard orientation.
pub fn recover_metric(phi: &KForm) -> Result<RecoveredGeometry, G2Error> {
    recover_metric_with(phi, &Orientation::standard(G2_DIM)?)
}

/// Solves 6 g(v,w) vol = (v⌟φ)∧(w⌟φ)∧φ. With vol = σ√det g e₀…₆ one gets
/// B = 6√det g · g, hence g = B · det(B)^{−1/9} · 6^{−2/9}.
pub fn recover_metric_with(phi: &KForm, orientation: &Orientation) -> Result<RecoveredGeometry, G2Error> {
    if phi.dim() != G2_DIM || phi.degree() != 3 {
        return Err(G2Error::WrongShape { dim: phi.dim(), degree: phi.degree() });
    }
    if orientation.dim() != G2_DIM {
        return Err(G2Error::Form(FormError::DimensionMismatch { left: G2_DIM, right: orientation.dim() }));
    }
    let sigma = orientation.sign();
    let contractions: Vec<KForm> = (0..G2_DIM)
        .map(|i| {
            let mut e = [0.0; G2_DIM];
            e[i] = 1.0;
            phi.contract(&e)
        })
        .collect::<Result<_, _>>()?;
    let mut b = Mat::zeros(G2_DIM, G2_DIM);
    for i in 0..G2_DIM {
        let ci = contractions[i].wedge(phi)?;
        for j in i..G2_DIM {
            let top = contractions[j].wedge(&ci)?.top_coefficient().unwrap_or(0.0);
            b[(i, j)] = sigma * top;
            b[(j, i)] = sigma * top;
        }
    }
    let det = b.det().unwrap_or(0.0);
    let not_g2 = RecoveredGeometry { b_matrix: b.clone(), metric: None, volume: None, is_g2_type: false };
    if !(det > 0.0) || !b.is_positive_definite() {
        return Ok(not_g2);
    }
    let scale = pow(det, -1.0 / 9.0) * pow(6.0, -2.0 / 9.0);
    let g = MetricTensor::new(b.scale(scale))?;
    let vol_coef = sigma * sqrt(g.det());
    let volume = Orientation::new(KForm::from_coeffs(G2_DIM, G2_DIM, vec![vol_coef])?)?;
    Ok(RecoveredGeometry { b_matrix: b, metric: Some(g), volume: Some(volume), is_g2_type: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spin7Form {
    /// Ω = φ∧N♭ + ⋆φ.
    pub omega: KForm,
    /// vol₈ = vol₇∧N♭.
    pub volume: KForm,
    pub normal: usize,
}

/// Builds Ω on ℝ⁸ where `normal` is the index of the added direction N.
pub fn spin7_four_form(phi: &KForm, normal: usize) -> Result<Spin7Form, G2Error> {
    if normal > G2_DIM {
        return Err(G2Error::InvalidNormal(normal));
    }
    let geom = recover_metric(phi)?;
    let (g, vol) = match (geom.metric, geom.volume) {
        (Some(g), Some(v)) => (g, v),
        _ => return Err(G2Error::NotG2Type),
    };
    let star = phi.hodge(&g, &vol)?;
    let map: Vec<usize> = (0..G2_DIM).map(|i| if i < normal { i } else { i + 1 }).collect();
    let n_flat = KForm::basis(G2_DIM + 1, &[normal])?;
    let mut omega = phi.embed(G2_DIM + 1, &map)?.wedge(&n_flat)?;
    omega.axpy(1.0, &star.embed(G2_DIM + 1, &map)?)?;
    let volume = vol.volume_form().embed(G2_DIM + 1, &map)?.wedge(&n_flat)?;
    Ok(Spin7Form { omega, volume, normal })
}

fn fd_step(s: f64) -> f64 {
    2e-4 * (1.0 + abs(s))
}

/// Hypersurface ‖v‖ = r(s) in ℝ⁷ × ℝ, with derivatives of r by finite
/// differences of the supplied function.
pub fn hypersurface_profile<R>(r: R, s_range: (f64, f64), n_samples: usize) -> Result<Profile, G2Error>
where
    R: Fn(f64) -> f64,
{
    let dr = |s: f64| {
        let h = fd_step(s);
        central_directional(|d| r(s + d), h)
    };
    let d2r = |s: f64| {
        let h = 5.0 * fd_step(s);
        (-r(s + 2.0 * h) + 16.0 * r(s + h) - 30.0 * r(s) + 16.0 * r(s - h) - r(s - 2.0 * h)) / (12.0 * h * h)
    };
    hypersurface_profile_analytic(&r, dr, d2r, s_range, n_samples)
}

/// Reparameterizes r(s) by arc length dt = √(1+r′²) ds on a uniform t-grid
/// from 0, giving f(t) = r(s(t)) and cos θ = f′.
pub fn hypersurface_profile_analytic<R, D, D2>(
    r: R,
    dr: D,
    d2r: D2,
    s_range: (f64, f64),
    n_samples: usize,
) -> Result<Profile, G2Error>
where
    R: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    let (s0, s1) = s_range;
    if !(s1 > s0) {
        return Err(G2Error::EmptyRange);
    }
    if n_samples < 5 {
        return Err(G2Error::TooFewSamples(n_samples));
    }
    for s in linspace(s0, s1, n_samples.max(257)) {
        if !(r(s) > 0.0) {
            return Err(G2Error::RadiusNotPositive { s });
        }
    }
    let speed = |s: f64| {
        let d = dr(s);
        sqrt(1.0 + d * d)
    };
    // Finite-difference noise in r′ sits near 1e-12, so ask for no more.
    let (tgrid, s_vals) = invert_arc_length(speed, s_range, n_samples, 1e-13, 1e-13)?;

    let mut f = Vec::with_capacity(n_samples);
    let mut fp = Vec::with_capacity(n_samples);
    let mut theta = Vec::with_capacity(n_samples);
    let mut dtheta = Vec::with_capacity(n_samples);
    for &s in &s_vals {
        let d = dr(s);
        let q = 1.0 + d * d;
        let slope = d / sqrt(q);
        f.push(r(s));
        fp.push(slope);
        theta.push(acos(slope.clamp(-1.0, 1.0)));
        // θ′ = −f″/sin θ with f″ = r″/(1+r′²)² and sin θ = (1+r′²)^{−1/2}.
        dtheta.push(-d2r(s) / (q * sqrt(q)));
    }
    let p = Profile::new(ModelId::G2Su3, tgrid, Radii::Equal(f), theta)?;
    Ok(p.with_derivatives(ProfileDerivatives { radii: Radii::Equal(fp), theta: dtheta })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn model_form_coefficients_at_zero() {
        let phi = model_three_form(0.0).form;
        let plus: [&[usize]; 4] = [&[0, 1, 2], &[0, 3, 4], &[0, 5, 6], &[2, 4, 6]];
        let minus: [&[usize]; 3] = [&[2, 3, 5], &[1, 4, 5], &[1, 3, 6]];
        for idx in plus {
            assert_eq!(phi.term(idx).unwrap(), 1.0);
        }
        for idx in minus {
            assert_eq!(phi.term(idx).unwrap(), -1.0);
        }
        assert_eq!(phi.coeffs().iter().filter(|c| **c != 0.0).count(), 7);
    }

    #[test]
    fn model_form_at_right_angle_uses_beta() {
        let phi = model_three_form(PI / 2.0).form;
        assert!(phi.term(&[2, 4, 6]).unwrap().abs() < 1e-15);
        assert!((phi.term(&[1, 3, 5]).unwrap() - 1.0).abs() < 1e-15);
        assert!((phi.term(&[2, 4, 5]).unwrap() + 1.0).abs() < 1e-15);
        let periodic = model_three_form(2.0 * PI).form;
        assert!(periodic.max_abs_diff(&model_three_form(0.0).form) < 1e-15);
    }

    #[test]
    fn identity_metric_for_model_forms() {
        for theta in [0.0, 1.0, PI / 3.0] {
            let geom = recover_metric(&model_three_form(theta).form).unwrap();
            assert!(geom.is_g2_type);
            let g = geom.metric.unwrap();
            assert!(g.matrix().max_abs_diff(&Mat::identity(7)) < 1e-12);
            assert!((geom.volume.unwrap().volume_form().top_coefficient().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_form_metric() {
        // For c·φ(0) with g = κ I: 6κ·κ^{7/2} = 6c³, so κ = c^{2/3}.
        for c in [2.0f64, 8.0] {
            let phi = model_three_form(0.0).form.scaled(c);
            let g = recover_metric(&phi).unwrap().metric.unwrap();
            let kappa = c.powf(2.0 / 3.0);
            assert!(g.matrix().max_abs_diff(&Mat::identity(7).scale(kappa)) < 1e-12, "c = {c}");
        }
    }

    #[test]
    fn degenerate_form_is_not_g2() {
        let phi = KForm::basis(7, &[0, 1, 2]).unwrap();
        let geom = recover_metric(&phi).unwrap();
        assert!(!geom.is_g2_type);
        assert!(geom.metric.is_none());
    }

    #[test]
    fn reversed_orientation_is_flagged() {
        let phi = model_three_form(0.3).form;
        let rev = Orientation::standard(7).unwrap().reversed();
        assert!(!recover_metric_with(&phi, &rev).unwrap().is_g2_type);
        // −φ is G₂-type for the reversed orientation.
        assert!(recover_metric_with(&phi.scaled(-1.0), &rev).unwrap().is_g2_type);
    }

    #[test]
    fn phi_wedge_star_phi_is_seven_vol() {
        let phi = model_three_form(0.7).form;
        let star = phi.hodge(&MetricTensor::identity(7).unwrap(), &Orientation::standard(7).unwrap()).unwrap();
        assert!((phi.wedge(&star).unwrap().top_coefficient().unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn stabilizer_preserves_phi() {
        let l = stabilizer_permutation();
        for theta in [0.0, 0.4, 2.0] {
            let phi = model_three_form(theta).form;
            assert!(phi.pullback(&l).unwrap().max_abs_diff(&phi) < 1e-15);
        }
    }

    #[test]
    fn spin7_normalization_and_contraction() {
        let phi = model_three_form(0.0).form;
        let s = spin7_four_form(&phi, 7).unwrap();
        let sq = s.omega.wedge(&s.omega).unwrap().top_coefficient().unwrap();
        assert!((sq - 14.0 * s.volume.top_coefficient().unwrap()).abs() < 1e-12);
        let mut n = [0.0; 8];
        n[7] = 1.0;
        let back = s.omega.contract(&n).unwrap();
        let expected = phi.embed(8, &[0, 1, 2, 3, 4, 5, 6]).unwrap().scaled(-1.0);
        assert!(back.max_abs_diff(&expected) < 1e-15);
        // Invariance under the stabilizer extended by the identity on N.
        let l7 = stabilizer_permutation();
        let l8 = Mat::from_fn(8, 8, |i, j| if i < 7 && j < 7 { l7[(i, j)] } else if i == j { 1.0 } else { 0.0 });
        assert!(s.omega.pullback(&l8).unwrap().max_abs_diff(&s.omega) < 1e-15);
    }

    #[test]
    fn spin7_rejects_bad_input() {
        assert_eq!(spin7_four_form(&KForm::basis(7, &[0, 1, 2]).unwrap(), 7), Err(G2Error::NotG2Type));
        assert_eq!(spin7_four_form(&model_three_form(0.0).form, 9), Err(G2Error::InvalidNormal(9)));
    }

    #[test]
    fn constant_radius_hypersurface() {
        let p = hypersurface_profile(|_| 2.0, (0.0, 1.0), 11).unwrap();
        assert!(p.f1().iter().all(|f| (f - 2.0).abs() < 1e-15));
        assert!(p.theta().iter().all(|t| t.cos().abs() < 1e-12));
    }

    #[test]
    fn linear_radius_has_slope_one_over_root_two() {
        let p = hypersurface_profile(|s| s, (1.0, 3.0), 21).unwrap();
        let d = p.derivatives().unwrap();
        for fp in d.radii.f1() {
            assert!((fp - 1.0 / 2f64.sqrt()).abs() < 1e-11);
        }
        let total = 2.0 * 2f64.sqrt();
        assert!((p.t()[20] - total).abs() < 1e-10);
        for (t, f) in p.t().iter().zip(p.f1()) {
            assert!((f - (1.0 + t / 2f64.sqrt())).abs() < 1e-10);
        }
    }

    #[test]
    fn round_sphere_hypersurface() {
        let lambda = 4.0;
        let big_r = 4.0 / lambda;
        let phi0: f64 = 0.3;
        let s0 = -big_r * phi0.cos();
        let p = hypersurface_profile(|s| (big_r * big_r - s * s).sqrt(), (s0, -s0), 41).unwrap();
        for (t, f) in p.t().iter().zip(p.f1()) {
            let exact = big_r * (phi0 + t / big_r).sin();
            assert!((f - exact).abs() < 1e-10, "t={t}: {f} vs {exact}");
        }
    }

    #[test]
    fn non_positive_radius_rejected() {
        assert!(matches!(hypersurface_profile(|s| s, (-1.0, 1.0), 11), Err(G2Error::RadiusNotPositive { .. })));
    }

    fn near_identity() -> impl Strategy<Value = Mat> {
        proptest::collection::vec(-0.3f64..0.3, 49)
            .prop_map(|d| Mat::from_fn(7, 7, |i, j| d[i * 7 + j] + if i == j { 1.0 } else { 0.0 }))
    }

    proptest! {
        #[test]
        fn metric_recovery_theta_independent(theta in -10.0f64..10.0) {
            let g = recover_metric(&model_three_form(theta).form).unwrap().metric.unwrap();
            prop_assert!(g.matrix().max_abs_diff(&Mat::identity(7)) < 1e-10);
        }

        #[test]
        fn metric_recovery_is_natural(l in near_identity(), theta in 0.0f64..6.3) {
            prop_assume!(l.det().unwrap() > 0.1);
            let phi = model_three_form(theta).form.pullback(&l).unwrap();
            let g = recover_metric(&phi).unwrap().metric.unwrap();
            let expected = l.transpose().matmul(&l).unwrap();
            prop_assert!(g.matrix().max_abs_diff(&expected) < 1e-8);
        }
    }
}
