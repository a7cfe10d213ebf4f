//! Dense exterior algebra on ℝⁿ, n ≤ 8.
//!
//! A degree-k form stores one coefficient per strictly increasing
//! multi-index, in lexicographic order. Multi-indices are handled as bit
//! masks; the lex position of every mask is precomputed at compile time.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use crate::linalg::Mat;
use crate::math::{abs, sqrt};

pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum FormError {
    InvalidDimension(usize),
    InvalidDegree { dim: usize, degree: usize },
    CoefficientLength { expected: usize, got: usize },
    DimensionMismatch { left: usize, right: usize },
    DegreeOverflow { left: usize, right: usize, dim: usize },
    DegreeZero,
    VectorLength { expected: usize, got: usize },
    IndexOutOfRange { index: usize, dim: usize },
    RepeatedIndex(usize),
    NonSquareMap { rows: usize, cols: usize },
    NotSymmetric { defect: f64 },
    DegenerateMetric,
    InvalidOrientation,
}

impl fmt::Display for FormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FormError::*;
        match self {
            InvalidDimension(n) => write!(f, "ambient dimension {n} outside 1..=8"),
            InvalidDegree { dim, degree } => write!(f, "degree {degree} invalid in dimension {dim}"),
            CoefficientLength { expected, got } => {
                write!(f, "expected {expected} coefficients, got {got}")
            }
            DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} against {right}")
            }
            DegreeOverflow { left, right, dim } => {
                write!(f, "degree {left} + {right} exceeds dimension {dim}")
            }
            DegreeZero => write!(f, "cannot contract a 0-form"),
            VectorLength { expected, got } => {
                write!(f, "vector has length {got}, expected {expected}")
            }
            IndexOutOfRange { index, dim } => write!(f, "index {index} out of range for dimension {dim}"),
            RepeatedIndex(i) => write!(f, "index {i} repeated in a basis element"),
            NonSquareMap { rows, cols } => write!(f, "linear map is {rows}x{cols}, expected square"),
            NotSymmetric { defect } => write!(f, "metric is not symmetric (defect {defect:e})"),
            DegenerateMetric => write!(f, "metric is degenerate"),
            InvalidOrientation => write!(f, "orientation must be a nonzero top-degree form"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FormError {}

const fn binom_const(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    let mut i = 0;
    while i < k {
        r = r * (n - i) / (i + 1);
        i += 1;
    }
    r
}

struct Tables {
    masks: [[[u8; 70]; MAX_DIM + 1]; MAX_DIM + 1],
    rank: [[u8; 256]; MAX_DIM + 1],
}

const fn build_tables() -> Tables {
    let mut masks = [[[0u8; 70]; MAX_DIM + 1]; MAX_DIM + 1];
    let mut rank = [[0u8; 256]; MAX_DIM + 1];
    let mut n = 0;
    while n <= MAX_DIM {
        let mut k = 0;
        while k <= n {
            // Lexicographic enumeration of k-subsets of {0..n-1}.
            let mut c = [0usize; MAX_DIM];
            let mut i = 0;
            while i < k {
                c[i] = i;
                i += 1;
            }
            let total = binom_const(n, k);
            let mut pos = 0;
            while pos < total {
                let mut mask = 0usize;
                let mut j = 0;
                while j < k {
                    mask |= 1 << c[j];
                    j += 1;
                }
                masks[n][k][pos] = mask as u8;
                rank[n][mask] = pos as u8;
                pos += 1;
                if k > 0 {
                    let mut r = k;
                    while r > 0 && c[r - 1] == n - k + r - 1 {
                        r -= 1;
                    }
                    if r > 0 {
                        c[r - 1] += 1;
                        let mut s = r;
                        while s < k {
                            c[s] = c[s - 1] + 1;
                            s += 1;
                        }
                    }
                }
            }
            k += 1;
        }
        n += 1;
    }
    Tables { masks, rank }
}

static TABLES: Tables = build_tables();

/// Binomial coefficient C(n, k).
pub fn binomial(n: usize, k: usize) -> usize {
    binom_const(n, k)
}

/// Bit masks of the k-subsets of {0..n-1} in lexicographic order.
pub fn index_masks(n: usize, k: usize) -> &'static [u8] {
    debug_assert!(n <= MAX_DIM && k <= n);
    &TABLES.masks[n][k][..binom_const(n, k)]
}

/// Lexicographic position of `mask` among subsets of its own size.
#[inline]
pub fn mask_rank(n: usize, mask: u8) -> usize {
    TABLES.rank[n][mask as usize] as usize
}

/// Indices set in `mask`, increasing.
pub fn mask_indices(mask: u8) -> impl Iterator<Item = usize> {
    (0..8usize).filter(move |i| mask & (1 << i) != 0)
}

/// Sign of e^I ∧ e^J relative to e^{I∪J}; zero when the masks overlap.
#[inline]
pub fn wedge_sign(i: u8, j: u8) -> f64 {
    if i & j != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    let mut rest = j;
    while rest != 0 {
        let b = rest.trailing_zeros();
        rest &= rest - 1;
        let above = (i as u32) >> (b + 1);
        swaps += above.count_ones();
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sorts `indices` into a mask, returning the permutation sign.
fn sorted_mask(indices: &[usize], dim: usize) -> Result<(u8, f64), FormError> {
    let mut mask = 0u8;
    let mut sign = 1.0;
    for &i in indices {
        if i >= dim {
            return Err(FormError::IndexOutOfRange { index: i, dim });
        }
        if mask & (1 << i) != 0 {
            return Err(FormError::RepeatedIndex(i));
        }
        // Moving e^i left past the larger indices already present.
        if ((mask as u32) >> (i + 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= 1 << i;
    }
    Ok((mask, sign))
}

fn check_dim(dim: usize) -> Result<(), FormError> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(FormError::InvalidDimension(dim))
    }
}

/// A degree-k alternating form on ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct KForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl KForm {
    pub fn zero(dim: usize, degree: usize) -> Result<Self, FormError> {
        check_dim(dim)?;
        if degree > dim {
            return Err(FormError::InvalidDegree { dim, degree });
        }
        Ok(KForm { dim, degree, coeffs: vec![0.0; binomial(dim, degree)] })
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self, FormError> {
        let z = KForm::zero(dim, degree)?;
        if coeffs.len() != z.coeffs.len() {
            return Err(FormError::CoefficientLength { expected: z.coeffs.len(), got: coeffs.len() });
        }
        Ok(KForm { coeffs, ..z })
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self, FormError> {
        KForm::from_coeffs(dim, 0, vec![c])
    }

    /// The basis element e^{i₁}∧…∧e^{i_k}, indices in any order.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self, FormError> {
        let mut f = KForm::zero(dim, indices.len())?;
        f.add_term(1.0, indices)?;
        Ok(f)
    }

    /// The one-form Σ vᵢ eⁱ.
    pub fn one_form(v: &[f64]) -> Result<Self, FormError> {
        KForm::from_coeffs(v.len(), 1, v.to_vec())
    }

    /// Builds a form from `(coefficient, indices)` terms.
    pub fn from_terms(dim: usize, degree: usize, terms: &[(f64, &[usize])]) -> Result<Self, FormError> {
        let mut f = KForm::zero(dim, degree)?;
        for (c, idx) in terms {
            if idx.len() != degree {
                return Err(FormError::InvalidDegree { dim, degree: idx.len() });
            }
            f.add_term(*c, idx)?;
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of e^{indices}, with the sign of the sorting permutation.
    pub fn term(&self, indices: &[usize]) -> Result<f64, FormError> {
        if indices.len() != self.degree {
            return Err(FormError::InvalidDegree { dim: self.dim, degree: indices.len() });
        }
        let (mask, sign) = sorted_mask(indices, self.dim)?;
        Ok(sign * self.coeffs[mask_rank(self.dim, mask)])
    }

    pub fn add_term(&mut self, c: f64, indices: &[usize]) -> Result<(), FormError> {
        if indices.len() != self.degree {
            return Err(FormError::InvalidDegree { dim: self.dim, degree: indices.len() });
        }
        let (mask, sign) = sorted_mask(indices, self.dim)?;
        self.coeffs[mask_rank(self.dim, mask)] += sign * c;
        Ok(())
    }

    /// Nonzero terms as (mask, coefficient) in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (u8, f64)> + '_ {
        index_masks(self.dim, self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| (*m, *c))
    }

    /// The single coefficient of a top-degree form.
    pub fn top_coefficient(&self) -> Option<f64> {
        (self.degree == self.dim).then(|| self.coeffs[0])
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(abs(*c)))
    }

    /// Sup-norm distance; `f64::INFINITY` when the shapes differ.
    pub fn max_abs_diff(&self, other: &KForm) -> f64 {
        if self.dim != other.dim || self.degree != other.degree {
            return f64::INFINITY;
        }
        self.coeffs.iter().zip(&other.coeffs).fold(0.0, |m, (a, b)| m.max(abs(a - b)))
    }

    pub fn scaled(&self, s: f64) -> KForm {
        KForm { dim: self.dim, degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn same_shape(&self, other: &KForm) -> Result<(), FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        if self.degree != other.degree {
            return Err(FormError::InvalidDegree { dim: self.dim, degree: other.degree });
        }
        Ok(())
    }

    /// self += a·other.
    pub fn axpy(&mut self, a: f64, other: &KForm) -> Result<(), FormError> {
        self.same_shape(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn try_add(&self, other: &KForm) -> Result<KForm, FormError> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn try_sub(&self, other: &KForm) -> Result<KForm, FormError> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn wedge(&self, other: &KForm) -> Result<KForm, FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let n = self.dim;
        if self.degree + other.degree > n {
            return Err(FormError::DegreeOverflow { left: self.degree, right: other.degree, dim: n });
        }
        let mut out = KForm::zero(n, self.degree + other.degree)?;
        for (mi, ci) in self.terms() {
            for (mj, cj) in other.terms() {
                if mi & mj != 0 {
                    continue;
                }
                out.coeffs[mask_rank(n, mi | mj)] += wedge_sign(mi, mj) * ci * cj;
            }
        }
        Ok(out)
    }

    /// Interior product ι_v.
    pub fn contract(&self, v: &[f64]) -> Result<KForm, FormError> {
        if self.degree == 0 {
            return Err(FormError::DegreeZero);
        }
        if v.len() != self.dim {
            return Err(FormError::VectorLength { expected: self.dim, got: v.len() });
        }
        let n = self.dim;
        let mut out = KForm::zero(n, self.degree - 1)?;
        for (mask, c) in self.terms() {
            for (p, i) in mask_indices(mask).enumerate() {
                if v[i] == 0.0 {
                    continue;
                }
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[mask_rank(n, mask & !(1 << i))] += sign * v[i] * c;
            }
        }
        Ok(out)
    }

    /// Evaluates the form on `degree` vectors.
    pub fn evaluate(&self, vectors: &[&[f64]]) -> Result<f64, FormError> {
        if vectors.len() != self.degree {
            return Err(FormError::InvalidDegree { dim: self.dim, degree: vectors.len() });
        }
        let mut f = self.clone();
        for v in vectors {
            f = f.contract(v)?;
        }
        Ok(f.coeffs[0])
    }

    /// Pullback under the linear map with matrix `l`, i.e. L*eⁱ = Σⱼ L_ij eʲ.
    pub fn pullback(&self, l: &Mat) -> Result<KForm, FormError> {
        if !l.is_square() {
            return Err(FormError::NonSquareMap { rows: l.rows(), cols: l.cols() });
        }
        if l.rows() != self.dim {
            return Err(FormError::DimensionMismatch { left: self.dim, right: l.rows() });
        }
        let n = self.dim;
        let k = self.degree;
        let mut out = KForm::zero(n, k)?;
        if k == 0 {
            out.coeffs[0] = self.coeffs[0];
            return Ok(out);
        }
        let targets = index_masks(n, k);
        for (mi, ci) in self.terms() {
            for (pos, &mj) in targets.iter().enumerate() {
                out.coeffs[pos] += ci * minor(l, mi, mj);
            }
        }
        Ok(out)
    }

    /// Hodge star for metric `g` and orientation `o`, defined by
    /// a ∧ ⋆b = ⟨a, b⟩ vol_g.
    pub fn hodge(&self, g: &MetricTensor, o: &Orientation) -> Result<KForm, FormError> {
        let n = self.dim;
        if g.dim() != n {
            return Err(FormError::DimensionMismatch { left: n, right: g.dim() });
        }
        if o.dim() != n {
            return Err(FormError::DimensionMismatch { left: n, right: o.dim() });
        }
        if !g.is_positive_definite() {
            return Err(FormError::DegenerateMetric);
        }
        let k = self.degree;
        let full: u8 = if n == 8 { 0xff } else { ((1u16 << n) - 1) as u8 };
        let volcoef = o.sign() * sqrt(g.det());
        let mut out = KForm::zero(n, n - k)?;
        let masks = index_masks(n, k);
        if g.matrix().is_diagonal() {
            for (pos, &mi) in masks.iter().enumerate() {
                let c = self.coeffs[pos];
                if c == 0.0 {
                    continue;
                }
                let inner: f64 = mask_indices(mi).map(|i| 1.0 / g.matrix()[(i, i)]).product();
                let comp = full & !mi;
                out.coeffs[mask_rank(n, comp)] += wedge_sign(mi, comp) * volcoef * inner * c;
            }
        } else {
            let ginv = g.inverse();
            for &mi in masks {
                let mut acc = 0.0;
                for (mj, cj) in self.terms() {
                    acc += cj * minor(&ginv, mi, mj);
                }
                if acc != 0.0 {
                    let comp = full & !mi;
                    out.coeffs[mask_rank(n, comp)] += wedge_sign(mi, comp) * volcoef * acc;
                }
            }
        }
        Ok(out)
    }

    /// Re-expresses the form in a larger space, sending index i to `map[i]`.
    pub fn embed(&self, new_dim: usize, map: &[usize]) -> Result<KForm, FormError> {
        if map.len() != self.dim {
            return Err(FormError::VectorLength { expected: self.dim, got: map.len() });
        }
        let mut out = KForm::zero(new_dim, self.degree)?;
        let mut idx = Vec::with_capacity(self.degree);
        for (mask, c) in self.terms() {
            idx.clear();
            idx.extend(mask_indices(mask).map(|i| map[i]));
            out.add_term(c, &idx)?;
        }
        Ok(out)
    }
}

/// det L[I, J] for row set I and column set J of equal size.
fn minor(l: &Mat, rows: u8, cols: u8) -> f64 {
    let r: Vec<usize> = mask_indices(rows).collect();
    let c: Vec<usize> = mask_indices(cols).collect();
    match r.len() {
        0 => 1.0,
        1 => l[(r[0], c[0])],
        2 => l[(r[0], c[0])] * l[(r[1], c[1])] - l[(r[0], c[1])] * l[(r[1], c[0])],
        k => {
            let sub = Mat::from_fn(k, k, |i, j| l[(r[i], c[j])]);
            sub.det().unwrap_or(0.0)
        }
    }
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mask, c) in self.terms() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{c:+}")?;
            if self.degree > 0 {
                write!(f, " e")?;
                for i in mask_indices(mask) {
                    write!(f, "{i}")?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &KForm {
    type Output = KForm;
    fn add(self, rhs: &KForm) -> KForm {
        self.try_add(rhs).expect("adding forms of different shape")
    }
}

impl Add for KForm {
    type Output = KForm;
    fn add(self, rhs: KForm) -> KForm {
        &self + &rhs
    }
}

impl Sub for &KForm {
    type Output = KForm;
    fn sub(self, rhs: &KForm) -> KForm {
        self.try_sub(rhs).expect("subtracting forms of different shape")
    }
}

impl Sub for KForm {
    type Output = KForm;
    fn sub(self, rhs: KForm) -> KForm {
        &self - &rhs
    }
}

impl Neg for KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scaled(-1.0)
    }
}

impl Mul<&KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: &KForm) -> KForm {
        rhs.scaled(self)
    }
}

impl Mul<KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: KForm) -> KForm {
        rhs.scaled(self)
    }
}

/// A symmetric bilinear form with a cached positive-definiteness flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    entries: Mat,
    positive_definite: bool,
}

impl MetricTensor {
    /// Validates symmetry (relative 1e-12) and symmetrizes exactly.
    pub fn new(entries: Mat) -> Result<Self, FormError> {
        if !entries.is_square() {
            return Err(FormError::NonSquareMap { rows: entries.rows(), cols: entries.cols() });
        }
        let n = entries.rows();
        check_dim(n)?;
        let scale = entries.max_abs().max(1.0);
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                defect = defect.max(abs(entries[(i, j)] - entries[(j, i)]));
            }
        }
        if defect > 1e-12 * scale {
            return Err(FormError::NotSymmetric { defect });
        }
        let sym = Mat::from_fn(n, n, |i, j| 0.5 * (entries[(i, j)] + entries[(j, i)]));
        let positive_definite = sym.is_positive_definite();
        Ok(MetricTensor { entries: sym, positive_definite })
    }

    pub fn identity(dim: usize) -> Result<Self, FormError> {
        MetricTensor::new(Mat::identity(dim))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self, FormError> {
        MetricTensor::new(Mat::diagonal(d))
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positive_definite
    }

    pub fn det(&self) -> f64 {
        self.entries.det().unwrap_or(0.0)
    }

    /// Inverse matrix; callers check positive-definiteness first.
    pub fn inverse(&self) -> Mat {
        self.entries.inverse().expect("inverse of a positive-definite metric")
    }

    pub fn apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += v[i] * self.entries[(i, j)] * w[j];
            }
        }
        s
    }
}

/// An orientation, carried by a nonzero top-degree form.
#[derive(Debug, Clone, PartialEq)]
pub struct Orientation {
    volume: KForm,
}

impl Orientation {
    pub fn new(volume: KForm) -> Result<Self, FormError> {
        match volume.top_coefficient() {
            Some(c) if c != 0.0 && c.is_finite() => Ok(Orientation { volume }),
            _ => Err(FormError::InvalidOrientation),
        }
    }

    /// Orientation of e^0∧…∧e^{n-1}.
    pub fn standard(dim: usize) -> Result<Self, FormError> {
        check_dim(dim)?;
        Orientation::new(KForm::from_coeffs(dim, dim, vec![1.0])?)
    }

    pub fn dim(&self) -> usize {
        self.volume.dim
    }

    pub fn volume_form(&self) -> &KForm {
        &self.volume
    }

    pub fn sign(&self) -> f64 {
        if self.volume.coeffs[0] > 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn reversed(&self) -> Orientation {
        Orientation { volume: self.volume.scaled(-1.0) }
    }
}
