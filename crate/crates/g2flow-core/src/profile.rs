//! Sampled cohomogeneity-one data: radii f₁, f₂, f₃ and phase θ on a t-grid.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::orbits::ModelId;

/// Radii with the symmetry-class sharing stored structurally.
#[derive(Debug, Clone, PartialEq)]
pub enum Radii {
    /// f₁ = f₂ = f₃.
    Equal(Vec<f64>),
    /// f₂ = f₃.
    Pair { f1: Vec<f64>, f2: Vec<f64> },
    Triaxial { f1: Vec<f64>, f2: Vec<f64>, f3: Vec<f64> },
}

impl Radii {
    pub fn f1(&self) -> &[f64] {
        match self {
            Radii::Equal(f) => f,
            Radii::Pair { f1, .. } | Radii::Triaxial { f1, .. } => f1,
        }
    }

    pub fn f2(&self) -> &[f64] {
        match self {
            Radii::Equal(f) => f,
            Radii::Pair { f2, .. } | Radii::Triaxial { f2, .. } => f2,
        }
    }

    pub fn f3(&self) -> &[f64] {
        match self {
            Radii::Equal(f) => f,
            Radii::Pair { f2, .. } => f2,
            Radii::Triaxial { f3, .. } => f3,
        }
    }

    pub fn len(&self) -> usize {
        self.f1().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.f1()[i], self.f2()[i], self.f3()[i]]
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            Radii::Equal(_) => "equal",
            Radii::Pair { .. } => "pair",
            Radii::Triaxial { .. } => "triaxial",
        }
    }

    fn arrays(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            Radii::Equal(f) => alloc::vec![("f", f.as_slice())],
            Radii::Pair { f1, f2 } => alloc::vec![("f1", f1.as_slice()), ("f2", f2.as_slice())],
            Radii::Triaxial { f1, f2, f3 } => {
                alloc::vec![("f1", f1.as_slice()), ("f2", f2.as_slice()), ("f3", f3.as_slice())]
            }
        }
    }

    fn same_shape(&self, other: &Radii) -> bool {
        core::mem::discriminant(self) == core::mem::discriminant(other)
    }

    fn map(&self, g: impl Fn(&[f64]) -> Vec<f64>) -> Radii {
        match self {
            Radii::Equal(f) => Radii::Equal(g(f)),
            Radii::Pair { f1, f2 } => Radii::Pair { f1: g(f1), f2: g(f2) },
            Radii::Triaxial { f1, f2, f3 } => Radii::Triaxial { f1: g(f1), f2: g(f2), f3: g(f3) },
        }
    }
}

/// Analytic t-derivatives, same layout as the values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDerivatives {
    pub radii: Radii,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    Empty,
    LengthMismatch { field: String, expected: usize, got: usize },
    NonMonotone { index: usize },
    NonFinite { field: String, index: usize },
    VanishingRadius { which: String, index: usize },
    ShapeNotAllowed { model: ModelId, shape: &'static str },
    NotShared { model: ModelId, index: usize },
    DerivativeShape,
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ProfileError::*;
        match self {
            Empty => write!(f, "profile has no samples"),
            LengthMismatch { field, expected, got } => {
                write!(f, "array '{field}' has length {got}, expected {expected}")
            }
            NonMonotone { index } => write!(f, "t-grid not strictly increasing at index {index}"),
            NonFinite { field, index } => write!(f, "non-finite value in '{field}' at index {index}"),
            VanishingRadius { which, index } => {
                write!(f, "radius {which} vanishes at interior index {index}")
            }
            ShapeNotAllowed { model, shape } => write!(f, "model {model} does not allow {shape} radii"),
            NotShared { model, index } => write!(
                f,
                "model {model} requires shared radii, but the arrays differ at index {index}"
            ),
            DerivativeShape => write!(f, "derivative arrays do not match the profile layout"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProfileError {}

/// A cohomogeneity-one structure sampled on an arc-length grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    model: ModelId,
    t: Vec<f64>,
    radii: Radii,
    theta: Vec<f64>,
    derivatives: Option<ProfileDerivatives>,
}

fn check_finite(field: &str, v: &[f64]) -> Result<(), ProfileError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(ProfileError::NonFinite { field: field.into(), index }),
        None => Ok(()),
    }
}

fn check_len(field: &str, v: &[f64], n: usize) -> Result<(), ProfileError> {
    if v.len() != n {
        return Err(ProfileError::LengthMismatch { field: field.into(), expected: n, got: v.len() });
    }
    Ok(())
}

fn shape_allowed(model: ModelId, radii: &Radii) -> bool {
    match model {
        ModelId::G2Su3 | ModelId::Su3T123 => matches!(radii, Radii::Equal(_)),
        ModelId::Sp2 => matches!(radii, Radii::Equal(_) | Radii::Pair { .. }),
        ModelId::Su3T2 => true,
    }
}

fn first_difference(a: &[f64], b: &[f64]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x.to_bits() != y.to_bits())
}

impl Profile {
    pub fn new(model: ModelId, t: Vec<f64>, radii: Radii, theta: Vec<f64>) -> Result<Self, ProfileError> {
        let n = t.len();
        if n == 0 {
            return Err(ProfileError::Empty);
        }
        check_finite("t", &t)?;
        for i in 1..n {
            if !(t[i] > t[i - 1]) {
                return Err(ProfileError::NonMonotone { index: i });
            }
        }
        if !shape_allowed(model, &radii) {
            return Err(ProfileError::ShapeNotAllowed { model, shape: radii.shape_name() });
        }
        for (name, arr) in radii.arrays() {
            check_len(name, arr, n)?;
            check_finite(name, arr)?;
            if n > 2 {
                if let Some(k) = arr[1..n - 1].iter().position(|x| *x == 0.0) {
                    return Err(ProfileError::VanishingRadius { which: name.into(), index: k + 1 });
                }
            }
        }
        check_len("theta", &theta, n)?;
        check_finite("theta", &theta)?;
        Ok(Profile { model, t, radii, theta, derivatives: None })
    }

    /// Builds a profile from three separate arrays. Models with shared radii
    /// require the shared arrays to be bitwise identical.
    pub fn from_arrays(
        model: ModelId,
        t: Vec<f64>,
        f1: Vec<f64>,
        f2: Vec<f64>,
        f3: Vec<f64>,
        theta: Vec<f64>,
    ) -> Result<Self, ProfileError> {
        let n = t.len();
        check_len("f1", &f1, n)?;
        check_len("f2", &f2, n)?;
        check_len("f3", &f3, n)?;
        let radii = match model {
            ModelId::G2Su3 | ModelId::Su3T123 => {
                if let Some(i) = first_difference(&f1, &f2).or_else(|| first_difference(&f1, &f3)) {
                    return Err(ProfileError::NotShared { model, index: i });
                }
                Radii::Equal(f1)
            }
            ModelId::Sp2 => {
                if let Some(i) = first_difference(&f2, &f3) {
                    return Err(ProfileError::NotShared { model, index: i });
                }
                Radii::Pair { f1, f2 }
            }
            ModelId::Su3T2 => Radii::Triaxial { f1, f2, f3 },
        };
        Profile::new(model, t, radii, theta)
    }

    pub fn with_derivatives(mut self, d: ProfileDerivatives) -> Result<Self, ProfileError> {
        let n = self.t.len();
        if !d.radii.same_shape(&self.radii) {
            return Err(ProfileError::DerivativeShape);
        }
        for (name, arr) in d.radii.arrays() {
            check_len(name, arr, n)?;
            check_finite(name, arr)?;
        }
        check_len("theta'", &d.theta, n)?;
        check_finite("theta'", &d.theta)?;
        self.derivatives = Some(d);
        Ok(self)
    }

    pub fn without_derivatives(mut self) -> Self {
        self.derivatives = None;
        self
    }

    /// Same data viewed under another model; the radii layout must be allowed.
    pub fn relabel(self, model: ModelId) -> Result<Self, ProfileError> {
        let Profile { t, radii, theta, derivatives, .. } = self;
        let radii = match (model, radii) {
            (ModelId::Sp2, Radii::Triaxial { f1, f2, f3 }) => {
                if let Some(i) = first_difference(&f2, &f3) {
                    return Err(ProfileError::NotShared { model, index: i });
                }
                Radii::Pair { f1, f2 }
            }
            (_, r) => r,
        };
        let derivatives = match (model, derivatives) {
            (ModelId::Sp2, Some(ProfileDerivatives { radii: Radii::Triaxial { f1, f2, .. }, theta })) => {
                Some(ProfileDerivatives { radii: Radii::Pair { f1, f2 }, theta })
            }
            (_, d) => d,
        };
        let p = Profile::new(model, t, radii, theta)?;
        match derivatives {
            Some(d) => p.with_derivatives(d),
            None => Ok(p),
        }
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn radii(&self) -> &Radii {
        &self.radii
    }

    pub fn f1(&self) -> &[f64] {
        self.radii.f1()
    }

    pub fn f2(&self) -> &[f64] {
        self.radii.f2()
    }

    pub fn f3(&self) -> &[f64] {
        self.radii.f3()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn derivatives(&self) -> Option<&ProfileDerivatives> {
        self.derivatives.as_ref()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Sub-profile on indices `lo..hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Self, ProfileError> {
        let cut = |v: &[f64]| v[lo..hi].to_vec();
        let p = Profile::new(self.model, cut(&self.t), self.radii.map(cut), cut(&self.theta))?;
        match &self.derivatives {
            Some(d) => p.with_derivatives(ProfileDerivatives { radii: d.radii.map(cut), theta: cut(&d.theta) }),
            None => Ok(p),
        }
    }

    /// The profile traversed backwards: t ↦ t₀ + t₁ − t.
    pub fn reversed(&self) -> Self {
        let n = self.t.len();
        let (a, b) = (self.t[0], self.t[n - 1]);
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<f64>>();
        let neg_rev = |v: &[f64]| v.iter().rev().map(|x| -x).collect::<Vec<f64>>();
        let t: Vec<f64> = self.t.iter().rev().map(|x| a + b - x).collect();
        Profile {
            model: self.model,
            t,
            radii: self.radii.map(rev),
            theta: rev(&self.theta),
            derivatives: self
                .derivatives
                .as_ref()
                .map(|d| ProfileDerivatives { radii: d.radii.map(neg_rev), theta: neg_rev(&d.theta) }),
        }
    }
}
