//! The principal orbits G/K: invariant forms, the invariant exterior
//! derivative and normalizer actions.
//!
//! SU(3)/T² and Sp(2)/(U(1)×Sp(1)) are built from explicit bases of the
//! isotropy complement 𝔪; brackets come from matrix commutators. G₂/SU(3)
//! is built axiomatically from its structure relations, and SU(3)/T⁽¹²³⁾
//! is the A₍₁₂₃₎-fixed part of SU(3)/T².

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64 as C64;

use crate::exterior::{binomial, mask_indices, FormError, KForm, MetricTensor, Orientation};
use crate::linalg::{least_squares, LinalgError, Mat};
use crate::math::{abs, sqrt};

/// Dimension of every principal orbit.
pub const ORBIT_DIM: usize = 6;

/// Tolerance for the structure-relation gate.
pub const GATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    G2Su3,
    Su3T2,
    Su3T123,
    Sp2,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::G2Su3, ModelId::Su3T2, ModelId::Su3T123, ModelId::Sp2];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::G2Su3 => "g2-su3",
            ModelId::Su3T2 => "su3-t2",
            ModelId::Su3T123 => "su3-t123",
            ModelId::Sp2 => "sp2",
        }
    }

    /// Number of independent radii (f₁, f₂, f₃) the model allows.
    pub fn radii_count(self) -> usize {
        match self {
            ModelId::G2Su3 | ModelId::Su3T123 => 1,
            ModelId::Sp2 => 2,
            ModelId::Su3T2 => 3,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = OrbitError;
    fn from_str(s: &str) -> Result<Self, OrbitError> {
        ModelId::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| OrbitError::UnknownModel(s.to_string()))
    }
}

/// Sign convention for de_i(E_j, E_k) in terms of e_i([E_j, E_k]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketConvention {
    /// de_i(E_j,E_k) = −e_i([E_j,E_k]); the exterior derivative of left-invariant forms.
    MaurerCartan,
    /// de_i(E_j,E_k) = +e_i([E_j,E_k]).
    Verbatim,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitError {
    UnknownModel(String),
    UnknownElement(String),
    UnknownGenerator(String),
    GateFailed { relation: String, defect: f64 },
    OutsideInvariantSpan { degree: usize, residual: f64 },
    DegreeOutOfRange(usize),
    CoordinateLength { expected: usize, got: usize },
    BracketNotClosed { residual: f64 },
    NotInvariant { generator: String, defect: f64 },
    Form(FormError),
    Linalg(LinalgError),
}

impl fmt::Display for OrbitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use OrbitError::*;
        match self {
            UnknownModel(s) => write!(f, "unknown orbit model '{s}' (expected g2-su3, su3-t2, su3-t123 or sp2)"),
            UnknownElement(s) => write!(f, "unknown normalizer element '{s}'"),
            UnknownGenerator(s) => write!(f, "unknown generator '{s}'"),
            GateFailed { relation, defect } => write!(f, "structure relation {relation} fails (defect {defect:e})"),
            OutsideInvariantSpan { degree, residual } => {
                write!(f, "degree-{degree} form lies outside the invariant span (residual {residual:e})")
            }
            DegreeOutOfRange(k) => write!(f, "degree {k} out of range"),
            CoordinateLength { expected, got } => write!(f, "expected {expected} generator coordinates, got {got}"),
            BracketNotClosed { residual } => write!(f, "bracket does not close on 𝔪 ⊕ 𝔨 (residual {residual:e})"),
            NotInvariant { generator, defect } => write!(f, "generator {generator} is not isotropy invariant (defect {defect:e})"),
            Form(e) => write!(f, "{e}"),
            Linalg(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OrbitError {}

impl From<FormError> for OrbitError {
    fn from(e: FormError) -> Self {
        OrbitError::Form(e)
    }
}

impl From<LinalgError> for OrbitError {
    fn from(e: LinalgError) -> Self {
        OrbitError::Linalg(e)
    }
}

/// A named invariant form on the 6-dimensional tangent model.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub form: KForm,
}

/// A named invariant symmetric 2-tensor (a block of the orbit metric).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGenerator {
    pub name: String,
    pub tensor: Mat,
}

/// An invariant form written in generator coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct InvForm {
    pub degree: usize,
    pub coords: Vec<f64>,
}

impl InvForm {
    pub fn max_abs_diff(&self, other: &InvForm) -> f64 {
        if self.degree != other.degree || self.coords.len() != other.coords.len() {
            return f64::INFINITY;
        }
        self.coords.iter().zip(&other.coords).fold(0.0, |m, (a, b)| m.max(abs(a - b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, a| m.max(abs(*a)))
    }
}

/// An element of N_G(K)/K, acting on 𝔪 through its tangent map.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerElement {
    pub name: String,
    /// Matrix L with L*eⁱ = Σⱼ L_ij eʲ.
    pub tangent: Mat,
    pub order: usize,
    pub reverses_orientation: bool,
}

/// One named structure relation with its defect.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationCheck {
    pub relation: String,
    pub defect: f64,
}

impl RelationCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.defect <= tol
    }
}

#[derive(Debug, Clone)]
pub struct OrbitModel {
    id: ModelId,
    basis: Vec<Vec<Generator>>,
    basis_mats: Vec<Mat>,
    metrics: Vec<MetricGenerator>,
    /// d on Inv^k → Inv^{k+1}; rows index the degree k+1 basis.
    d_mats: Vec<Mat>,
    /// de^i on 𝔪*, present for models built from brackets.
    d_one_forms: Option<Vec<KForm>>,
    normalizers: Vec<NormalizerElement>,
    checks: Vec<RelationCheck>,
}

// ---------------------------------------------------------------------------
// Complex matrices for the Lie algebra models.

#[derive(Debug, Clone, PartialEq)]
struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let mut m = CMat::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    fn mul(&self, o: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * o.get(k, j);
                }
            }
        }
        out
    }

    fn sub(&self, o: &CMat) -> CMat {
        CMat { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    fn scale(&self, s: f64) -> CMat {
        CMat { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    fn commutator(&self, o: &CMat) -> CMat {
        self.mul(o).sub(&o.mul(self))
    }

    /// Conjugate transpose; the inverse of a unitary matrix.
    fn adjoint(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.get(i, j).conj();
            }
        }
        out
    }

    /// Real coordinates (Re, Im of each entry) for least squares.
    fn real_vec(&self) -> Vec<f64> {
        self.data.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// Block matrix from 2×2 blocks of quaternions realized as complex 2×2.
    fn quaternionic(blocks: &[[Quat; 2]; 2]) -> CMat {
        let mut m = CMat::zeros(4);
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, q) in row.iter().enumerate() {
                let c = q.complex();
                for i in 0..2 {
                    for j in 0..2 {
                        m.data[(2 * bi + i) * 4 + 2 * bj + j] = c[i][j];
                    }
                }
            }
        }
        m
    }
}

/// A quaternion a + bi + cj + dk.
#[derive(Debug, Clone, Copy)]
struct Quat(f64, f64, f64, f64);

impl Quat {
    const ZERO: Quat = Quat(0.0, 0.0, 0.0, 0.0);

    /// i ↦ diag(i, −i), j ↦ [[0,1],[−1,0]], k ↦ [[0,i],[i,0]]; so ij = k.
    fn complex(self) -> [[C64; 2]; 2] {
        let Quat(a, b, c, d) = self;
        [[C64::new(a, b), C64::new(c, d)], [C64::new(-c, d), C64::new(a, -b)]]
    }
}

struct LieModel {
    m: Vec<CMat>,
    k: Vec<CMat>,
}

impl LieModel {
    fn su3_t2() -> Self {
        let z = C64::new(0.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        let im = |x: f64| C64::new(0.0, x);
        let h = 0.5;
        // 1/(2i) = −i/2.
        let m = vec![
            CMat::from_rows(&[&[z, z, z], &[z, z, r(-h)], &[z, r(h), z]]),
            CMat::from_rows(&[&[z, z, z], &[z, z, im(-h)], &[z, im(-h), z]]),
            CMat::from_rows(&[&[z, z, r(h)], &[z, z, z], &[r(-h), z, z]]),
            CMat::from_rows(&[&[z, z, im(-h)], &[z, z, z], &[im(-h), z, z]]),
            CMat::from_rows(&[&[z, r(-h), z], &[r(h), z, z], &[z, z, z]]),
            CMat::from_rows(&[&[z, im(-h), z], &[im(-h), z, z], &[z, z, z]]),
        ];
        let k = vec![
            CMat::from_rows(&[&[im(1.0), z, z], &[z, im(-1.0), z], &[z, z, z]]),
            CMat::from_rows(&[&[z, z, z], &[z, im(1.0), z], &[z, z, im(-1.0)]]),
        ];
        LieModel { m, k }
    }

    fn sp2() -> Self {
        let o = Quat::ZERO;
        let one = Quat(1.0, 0.0, 0.0, 0.0);
        let qi = Quat(0.0, 1.0, 0.0, 0.0);
        let qj = Quat(0.0, 0.0, 1.0, 0.0);
        let qk = Quat(0.0, 0.0, 0.0, 1.0);
        let neg = |q: Quat| Quat(-q.0, -q.1, -q.2, -q.3);
        let s = 1.0 / (2.0 * sqrt(2.0));
        let m = vec![
            CMat::quaternionic(&[[o, o], [o, qj]]).scale(0.5),
            CMat::quaternionic(&[[o, o], [o, neg(qk)]]).scale(0.5),
            CMat::quaternionic(&[[o, neg(one)], [one, o]]).scale(s),
            CMat::quaternionic(&[[o, qi], [qi, o]]).scale(s),
            CMat::quaternionic(&[[o, qj], [qj, o]]).scale(s),
            CMat::quaternionic(&[[o, qk], [qk, o]]).scale(s),
        ];
        let k = vec![
            CMat::quaternionic(&[[qi, o], [o, o]]),
            CMat::quaternionic(&[[qj, o], [o, o]]),
            CMat::quaternionic(&[[qk, o], [o, o]]),
            CMat::quaternionic(&[[o, o], [o, qi]]),
        ];
        LieModel { m, k }
    }

    /// Columns are the real coordinates of E₁…E₆ then K₁…K_r.
    fn coordinate_matrix(&self) -> Mat {
        let cols: Vec<Vec<f64>> = self.m.iter().chain(&self.k).map(CMat::real_vec).collect();
        Mat::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
    }

    /// Coordinates of X in the basis m ∪ k.
    fn coordinates(&self, basis: &Mat, x: &CMat) -> Result<Vec<f64>, OrbitError> {
        let (c, resid) = least_squares(basis, &x.real_vec())?;
        if resid > 1e-12 {
            return Err(OrbitError::BracketNotClosed { residual: resid });
        }
        Ok(c)
    }

    /// de^i as 2-forms on 𝔪.
    fn d_one_forms(&self, conv: BracketConvention) -> Result<Vec<KForm>, OrbitError> {
        let basis = self.coordinate_matrix();
        let sign = match conv {
            BracketConvention::MaurerCartan => -1.0,
            BracketConvention::Verbatim => 1.0,
        };
        let mut de = vec![KForm::zero(ORBIT_DIM, 2)?; ORBIT_DIM];
        for j in 0..ORBIT_DIM {
            for k in j + 1..ORBIT_DIM {
                let c = self.coordinates(&basis, &self.m[j].commutator(&self.m[k]))?;
                for (i, form) in de.iter_mut().enumerate() {
                    if c[i] != 0.0 {
                        form.add_term(sign * c[i], &[j, k])?;
                    }
                }
            }
        }
        Ok(de)
    }

    /// Matrix of ad(K) restricted to 𝔪 for each isotropy generator.
    fn isotropy_matrices(&self) -> Result<Vec<Mat>, OrbitError> {
        let basis = self.coordinate_matrix();
        let mut out = Vec::new();
        for kk in &self.k {
            let mut a = Mat::zeros(ORBIT_DIM, ORBIT_DIM);
            for j in 0..ORBIT_DIM {
                let c = self.coordinates(&basis, &kk.commutator(&self.m[j]))?;
                for i in 0..ORBIT_DIM {
                    a[(i, j)] = c[i];
                }
            }
            out.push(a);
        }
        Ok(out)
    }

    /// Tangent matrix of the right action by h: X ↦ Ad(h⁻¹)X on 𝔪.
    fn tangent_of(&self, h: &CMat) -> Result<Mat, OrbitError> {
        let basis = self.coordinate_matrix();
        let hinv = h.adjoint();
        let mut l = Mat::zeros(ORBIT_DIM, ORBIT_DIM);
        for j in 0..ORBIT_DIM {
            let img = hinv.mul(&self.m[j]).mul(h);
            let c = self.coordinates(&basis, &img)?;
            for i in 0..ORBIT_DIM {
                l[(i, j)] = c[i];
            }
            let kpart = c[ORBIT_DIM..].iter().fold(0.0, |m: f64, v| m.max(abs(*v)));
            if kpart > 1e-12 {
                return Err(OrbitError::BracketNotClosed { residual: kpart });
            }
        }
        Ok(l)
    }
}

fn su3_element(rows: [[f64; 3]; 3]) -> CMat {
    let r = |x: f64| C64::new(x, 0.0);
    CMat::from_rows(&[
        &[r(rows[0][0]), r(rows[0][1]), r(rows[0][2])],
        &[r(rows[1][0]), r(rows[1][1]), r(rows[1][2])],
        &[r(rows[2][0]), r(rows[2][1]), r(rows[2][2])],
    ])
}

/// Named elements of N_{SU(3)}(T²) representing the permutations of Σ₃.
fn su3_permutations() -> Vec<(&'static str, CMat)> {
    vec![
        ("A12", su3_element([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])),
        ("A13", su3_element([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])),
        ("A23", su3_element([[-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])),
        ("A123", su3_element([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])),
        ("A132", su3_element([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])),
    ]
}

// ---------------------------------------------------------------------------
// Standard forms on 𝔪 ≅ ℝ⁶ (0-based indices; e₁ ↦ 0).

fn f6(terms: &[(f64, &[usize])], degree: usize) -> KForm {
    KForm::from_terms(ORBIT_DIM, degree, terms).expect("static form")
}

pub fn alpha() -> KForm {
    f6(&[(1.0, &[1, 3, 5]), (-1.0, &[1, 2, 4]), (-1.0, &[0, 3, 4]), (-1.0, &[0, 2, 5])], 3)
}

pub fn beta() -> KForm {
    f6(&[(1.0, &[0, 2, 4]), (-1.0, &[0, 3, 5]), (-1.0, &[1, 2, 5]), (-1.0, &[1, 3, 4])], 3)
}

pub fn omega(i: usize) -> KForm {
    f6(&[(1.0, &[2 * i, 2 * i + 1])], 2)
}

pub fn vol0() -> KForm {
    f6(&[(1.0, &[0, 1, 2, 3, 4, 5])], 6)
}

fn omega_sum() -> KForm {
    omega(0) + omega(1) + omega(2)
}

fn w(a: &KForm, b: &KForm) -> KForm {
    a.wedge(b).expect("wedge of static forms")
}

fn gen(name: &str, form: KForm) -> Generator {
    Generator { name: name.to_string(), form }
}

fn block_metric(blocks: &[usize]) -> Mat {
    let mut d = [0.0; ORBIT_DIM];
    for &b in blocks {
        d[2 * b] = 1.0;
        d[2 * b + 1] = 1.0;
    }
    Mat::diagonal(&d)
}

fn basis_for(id: ModelId) -> Vec<Vec<Generator>> {
    let one = KForm::constant(ORBIT_DIM, 1.0).expect("scalar");
    let mut b: Vec<Vec<Generator>> = vec![Vec::new(); ORBIT_DIM + 1];
    b[0].push(gen("1", one));
    b[3] = vec![gen("α", alpha()), gen("β", beta())];
    b[6].push(gen("vol0", vol0()));
    match id {
        ModelId::Su3T2 => {
            b[2] = vec![gen("ω1", omega(0)), gen("ω2", omega(1)), gen("ω3", omega(2))];
            b[4] = vec![
                gen("ω2ω3", w(&omega(1), &omega(2))),
                gen("ω3ω1", w(&omega(2), &omega(0))),
                gen("ω1ω2", w(&omega(0), &omega(1))),
            ];
        }
        ModelId::Sp2 => {
            let w2 = omega(1) + omega(2);
            b[2] = vec![gen("ω1", omega(0)), gen("ω2", w2.clone())];
            b[4] = vec![gen("ω1ω2", w(&omega(0), &w2)), gen("ω2²", w(&w2, &w2))];
        }
        ModelId::G2Su3 => {
            let om = omega_sum();
            b[2] = vec![gen("ω", om.clone())];
            b[4] = vec![gen("ω²", w(&om, &om))];
        }
        ModelId::Su3T123 => {
            let om = omega_sum();
            b[2] = vec![gen("ω0", om.clone())];
            b[4] = vec![gen("ω0²", w(&om, &om))];
        }
    }
    b
}

fn metrics_for(id: ModelId) -> Vec<MetricGenerator> {
    let mg = |name: &str, blocks: &[usize]| MetricGenerator { name: name.to_string(), tensor: block_metric(blocks) };
    match id {
        ModelId::Su3T2 => vec![mg("g1", &[0]), mg("g2", &[1]), mg("g3", &[2])],
        ModelId::Sp2 => vec![mg("g1", &[0]), mg("g2", &[1, 2])],
        ModelId::G2Su3 | ModelId::Su3T123 => vec![mg("g0", &[0, 1, 2])],
    }
}

/// Exterior derivative on Λ(𝔪*) extended from `de` as an antiderivation.
fn d_full(de: &[KForm], a: &KForm) -> Result<KForm, FormError> {
    let n = a.dim();
    let k = a.degree();
    let mut out = KForm::zero(n, k + 1)?;
    if k == n {
        return Ok(out);
    }
    for (mask, c) in a.terms() {
        let idx: Vec<usize> = mask_indices(mask).collect();
        for p in 0..k {
            let left = KForm::basis(n, &idx[..p])?;
            let right = KForm::basis(n, &idx[p + 1..])?;
            let term = left.wedge(&de[idx[p]])?.wedge(&right)?;
            let sign = if p % 2 == 0 { c } else { -c };
            out.axpy(sign, &term)?;
        }
    }
    Ok(out)
}

/// The derivation of Λ(𝔪*) induced by an endomorphism A of 𝔪.
pub fn derivation(a: &KForm, m: &Mat) -> Result<KForm, FormError> {
    let n = a.dim();
    let mut out = KForm::zero(n, a.degree())?;
    let mut idx = Vec::with_capacity(a.degree());
    for (mask, c) in a.terms() {
        let base: Vec<usize> = mask_indices(mask).collect();
        for p in 0..base.len() {
            for j in 0..n {
                let coef = m[(j, base[p])];
                if coef == 0.0 || (j != base[p] && mask & (1 << j) != 0) {
                    continue;
                }
                idx.clear();
                idx.extend_from_slice(&base);
                idx[p] = j;
                out.add_term(c * coef, &idx)?;
            }
        }
    }
    Ok(out)
}

fn basis_matrix(gens: &[Generator], degree: usize) -> Mat {
    let rows = binomial(ORBIT_DIM, degree);
    Mat::from_fn(rows, gens.len(), |i, j| gens[j].form.coeffs()[i])
}

/// Dimension of the space of degree-k forms annihilated by all derivations
/// and fixed by all given pullbacks.
fn invariant_dimension(degree: usize, derivations: &[Mat], pullbacks: &[Mat]) -> Result<usize, OrbitError> {
    let n = binomial(ORBIT_DIM, degree);
    let ops = derivations.len() + pullbacks.len();
    let mut big = Mat::zeros(ops * n, n);
    for col in 0..n {
        let mut coeffs = vec![0.0; n];
        coeffs[col] = 1.0;
        let e = KForm::from_coeffs(ORBIT_DIM, degree, coeffs)?;
        for (oi, a) in derivations.iter().enumerate() {
            let img = derivation(&e, a)?;
            for r in 0..n {
                big[(oi * n + r, col)] = img.coeffs()[r];
            }
        }
        for (pi, l) in pullbacks.iter().enumerate() {
            let img = e.pullback(l)?;
            let oi = derivations.len() + pi;
            for r in 0..n {
                big[(oi * n + r, col)] = img.coeffs()[r] - if r == col { 1.0 } else { 0.0 };
            }
        }
    }
    Ok(n - big.rank(1e-10))
}

impl OrbitModel {
    pub fn id(&self) -> ModelId {
        self.id
    }

    /// Invariant generators of the given degree.
    pub fn basis(&self, degree: usize) -> &[Generator] {
        self.basis.get(degree).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn metric_generators(&self) -> &[MetricGenerator] {
        &self.metrics
    }

    pub fn normalizers(&self) -> &[NormalizerElement] {
        &self.normalizers
    }

    pub fn normalizer(&self, name: &str) -> Result<&NormalizerElement, OrbitError> {
        self.normalizers
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| OrbitError::UnknownElement(name.to_string()))
    }

    /// The relation checks run when the model was built.
    pub fn verification(&self) -> &[RelationCheck] {
        &self.checks
    }

    /// de^i for bracket-built models.
    pub fn one_form_differentials(&self) -> Option<&[KForm]> {
        self.d_one_forms.as_deref()
    }

    pub fn generator(&self, name: &str) -> Result<(usize, usize), OrbitError> {
        for (k, gens) in self.basis.iter().enumerate() {
            if let Some(i) = gens.iter().position(|g| g.name == name) {
                return Ok((k, i));
            }
        }
        Err(OrbitError::UnknownGenerator(name.to_string()))
    }

    /// Generator coordinates of a named generator.
    pub fn unit(&self, name: &str) -> Result<InvForm, OrbitError> {
        let (k, i) = self.generator(name)?;
        let mut coords = vec![0.0; self.basis[k].len()];
        coords[i] = 1.0;
        Ok(InvForm { degree: k, coords })
    }

    pub fn inv(&self, degree: usize, coords: Vec<f64>) -> Result<InvForm, OrbitError> {
        let n = self.basis.get(degree).ok_or(OrbitError::DegreeOutOfRange(degree))?.len();
        if coords.len() != n {
            return Err(OrbitError::CoordinateLength { expected: n, got: coords.len() });
        }
        Ok(InvForm { degree, coords })
    }

    pub fn zero(&self, degree: usize) -> Result<InvForm, OrbitError> {
        let n = self.basis.get(degree).ok_or(OrbitError::DegreeOutOfRange(degree))?.len();
        Ok(InvForm { degree, coords: vec![0.0; n] })
    }

    pub fn to_kform(&self, f: &InvForm) -> Result<KForm, OrbitError> {
        let gens = self.basis.get(f.degree).ok_or(OrbitError::DegreeOutOfRange(f.degree))?;
        if gens.len() != f.coords.len() {
            return Err(OrbitError::CoordinateLength { expected: gens.len(), got: f.coords.len() });
        }
        let mut out = KForm::zero(ORBIT_DIM, f.degree)?;
        for (g, c) in gens.iter().zip(&f.coords) {
            out.axpy(*c, &g.form)?;
        }
        Ok(out)
    }

    /// Generator coordinates of a form in the invariant span, with the
    /// least-squares residual checked against `tol`.
    pub fn project(&self, a: &KForm, tol: f64) -> Result<InvForm, OrbitError> {
        let k = a.degree();
        if a.dim() != ORBIT_DIM {
            return Err(OrbitError::Form(FormError::DimensionMismatch { left: ORBIT_DIM, right: a.dim() }));
        }
        if self.basis[k].is_empty() {
            let r = a.max_abs();
            if r > tol {
                return Err(OrbitError::OutsideInvariantSpan { degree: k, residual: r });
            }
            return Ok(InvForm { degree: k, coords: Vec::new() });
        }
        let (coords, resid) = least_squares(&self.basis_mats[k], a.coeffs())?;
        if resid > tol * (1.0 + a.max_abs()) {
            return Err(OrbitError::OutsideInvariantSpan { degree: k, residual: resid });
        }
        Ok(InvForm { degree: k, coords })
    }

    /// The invariant exterior derivative in generator coordinates.
    pub fn d(&self, f: &InvForm) -> Result<InvForm, OrbitError> {
        if f.degree >= ORBIT_DIM {
            // Forms of degree 7 vanish on a 6-dimensional orbit.
            return Ok(InvForm { degree: f.degree + 1, coords: Vec::new() });
        }
        let m = &self.d_mats[f.degree];
        if m.cols() != f.coords.len() {
            return Err(OrbitError::CoordinateLength { expected: m.cols(), got: f.coords.len() });
        }
        let coords = if m.rows() == 0 { Vec::new() } else { m.matvec(&f.coords)? };
        Ok(InvForm { degree: f.degree + 1, coords })
    }

    /// Matrix of d on Inv^k → Inv^{k+1}.
    pub fn d_matrix(&self, degree: usize) -> Option<&Mat> {
        self.d_mats.get(degree)
    }

    pub fn wedge(&self, a: &InvForm, b: &InvForm) -> Result<InvForm, OrbitError> {
        let p = self.to_kform(a)?.wedge(&self.to_kform(b)?)?;
        self.project(&p, 1e-12)
    }

    /// Pullback under a normalizer element, in generator coordinates.
    pub fn act(&self, element: &NormalizerElement, f: &InvForm) -> Result<InvForm, OrbitError> {
        let p = self.to_kform(f)?.pullback(&element.tangent)?;
        self.project(&p, 1e-10)
    }

    /// Pullback of the metric generators: coordinates of L^T g_i L.
    pub fn act_metric(&self, element: &NormalizerElement, i: usize) -> Result<Vec<f64>, OrbitError> {
        let l = &element.tangent;
        let img = l.transpose().matmul(&self.metrics[i].tensor)?.matmul(l)?;
        let cols = self.metrics.len();
        let a = Mat::from_fn(ORBIT_DIM * ORBIT_DIM, cols, |r, c| self.metrics[c].tensor.as_slice()[r]);
        let (coords, resid) = least_squares(&a, img.as_slice())?;
        if resid > 1e-10 {
            return Err(OrbitError::OutsideInvariantSpan { degree: 2, residual: resid });
        }
        Ok(coords)
    }

    /// Tabulated action of an element on (metrics, 2-forms, 3-forms),
    /// e.g. "(g1,g3,g2,−ω1,−ω3,−ω2,−α,β)".
    pub fn action_signature(&self, element: &NormalizerElement) -> Result<String, OrbitError> {
        let mut parts = Vec::new();
        for i in 0..self.metrics.len() {
            let c = self.act_metric(element, i)?;
            let names: Vec<&str> = self.metrics.iter().map(|m| m.name.as_str()).collect();
            parts.push(render_combination(&c, &names));
        }
        for k in [2usize, 3] {
            let names: Vec<&str> = self.basis[k].iter().map(|g| g.name.as_str()).collect();
            for i in 0..self.basis[k].len() {
                let mut e = vec![0.0; names.len()];
                e[i] = 1.0;
                let img = self.act(element, &InvForm { degree: k, coords: e })?;
                parts.push(render_combination(&img.coords, &names));
            }
        }
        Ok(format!("({})", parts.join(",")))
    }

    /// Named generator images of an element, for every degree.
    pub fn action_matrix(&self, element: &NormalizerElement, degree: usize) -> Result<Mat, OrbitError> {
        let n = self.basis[degree].len();
        let mut m = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let img = self.act(element, &InvForm { degree, coords: e })?;
            for i in 0..n {
                m[(i, j)] = img.coords[i];
            }
        }
        Ok(m)
    }

    /// Standard flat metric g₀ on 𝔪 with orientation vol₀.
    pub fn flat_structure() -> (MetricTensor, Orientation) {
        (
            MetricTensor::identity(ORBIT_DIM).expect("identity metric"),
            Orientation::new(vol0()).expect("vol0"),
        )
    }
}

fn render_combination(c: &[f64], names: &[&str]) -> String {
    let nz: Vec<(usize, f64)> = c.iter().copied().enumerate().filter(|(_, v)| abs(*v) > 1e-9).collect();
    if nz.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (n, (i, v)) in nz.iter().enumerate() {
        let neg = *v < 0.0;
        let mag = abs(*v);
        if n == 0 {
            if neg {
                s.push('−');
            }
        } else {
            s.push(if neg { '−' } else { '+' });
        }
        if abs(mag - 1.0) > 1e-9 {
            s.push_str(&format!("{mag}"));
        }
        s.push_str(names[*i]);
    }
    s
}

fn element_order(model: &OrbitModel, tangent: &Mat) -> Result<usize, OrbitError> {
    let probe = NormalizerElement { name: String::new(), tangent: tangent.clone(), order: 0, reverses_orientation: false };
    let mut acts = Vec::new();
    for k in 0..=ORBIT_DIM {
        if !model.basis[k].is_empty() {
            acts.push(model.action_matrix(&probe, k)?);
        }
    }
    let mut metric_acts = Vec::new();
    for i in 0..model.metrics.len() {
        metric_acts.push(model.act_metric(&probe, i)?);
    }
    let nm = model.metrics.len();
    let metric_mat = Mat::from_fn(nm, nm, |r, c| metric_acts[c][r]);
    let mut powers: Vec<Mat> = acts.clone();
    let mut mp = metric_mat.clone();
    for order in 1..=12 {
        let ident = powers.iter().all(|p| p.max_abs_diff(&Mat::identity(p.rows())) < 1e-10)
            && mp.max_abs_diff(&Mat::identity(nm)) < 1e-10;
        if ident {
            return Ok(order);
        }
        for (p, a) in powers.iter_mut().zip(&acts) {
            *p = p.matmul(a)?;
        }
        mp = mp.matmul(&metric_mat)?;
    }
    Ok(0)
}

fn make_element(model: &OrbitModel, name: &str, tangent: Mat) -> Result<NormalizerElement, OrbitError> {
    let reverses = vol0().pullback(&tangent)?.top_coefficient().unwrap_or(0.0) < 0.0;
    let order = element_order(model, &tangent)?;
    Ok(NormalizerElement { name: name.to_string(), tangent, order, reverses_orientation: reverses })
}

/// Builds and validates a model with the Maurer–Cartan bracket sign.
pub fn build_orbit_model(id: ModelId) -> Result<OrbitModel, OrbitError> {
    build_orbit_model_with(id, BracketConvention::MaurerCartan)
}

/// T⁽¹²³⁾ model: the A₍₁₂₃₎-fixed generators of SU(3)/T².
pub fn build_t123_model() -> Result<OrbitModel, OrbitError> {
    build_orbit_model(ModelId::Su3T123)
}

pub fn build_orbit_model_with(id: ModelId, conv: BracketConvention) -> Result<OrbitModel, OrbitError> {
    let basis = basis_for(id);
    let basis_mats: Vec<Mat> = basis.iter().enumerate().map(|(k, g)| basis_matrix(g, k)).collect();
    let mut model = OrbitModel {
        id,
        basis,
        basis_mats,
        metrics: metrics_for(id),
        d_mats: Vec::new(),
        d_one_forms: None,
        normalizers: Vec::new(),
        checks: Vec::new(),
    };

    let lie = match id {
        ModelId::Su3T2 | ModelId::Su3T123 => Some(LieModel::su3_t2()),
        ModelId::Sp2 => Some(LieModel::sp2()),
        ModelId::G2Su3 => None,
    };

    match &lie {
        Some(lie) => {
            let de = lie.d_one_forms(conv)?;
            // Invariance of the generators, and completeness of each basis.
            let derivs = lie.isotropy_matrices()?;
            let mut fixed = Vec::new();
            if id == ModelId::Su3T123 {
                let a123 = su3_permutations().into_iter().find(|(n, _)| *n == "A123").map(|(_, h)| h);
                if let Some(h) = a123 {
                    fixed.push(lie.tangent_of(&h)?);
                }
            }
            for k in 0..=ORBIT_DIM {
                for g in &model.basis[k] {
                    let mut defect: f64 = 0.0;
                    for a in &derivs {
                        defect = defect.max(derivation(&g.form, a)?.max_abs());
                    }
                    for l in &fixed {
                        defect = defect.max(g.form.pullback(l)?.max_abs_diff(&g.form));
                    }
                    if defect > 1e-12 {
                        return Err(OrbitError::NotInvariant { generator: g.name.clone(), defect });
                    }
                }
                let dim = invariant_dimension(k, &derivs, &fixed)?;
                model.checks.push(RelationCheck {
                    relation: format!("dim Inv^{k} = {}", model.basis[k].len()),
                    defect: abs(dim as f64 - model.basis[k].len() as f64),
                });
            }
            for k in 0..ORBIT_DIM {
                let rows = model.basis[k + 1].len();
                let cols = model.basis[k].len();
                let mut m = Mat::zeros(rows, cols);
                for j in 0..cols {
                    let dg = d_full(&de, &model.basis[k][j].form)?;
                    let p = model.project(&dg, 1e-12)?;
                    for i in 0..rows {
                        m[(i, j)] = p.coords[i];
                    }
                }
                model.d_mats.push(m);
            }
            model.d_one_forms = Some(de);
        }
        None => {
            // dω = 3α, dα = 0, dβ = −2ω², d(ω²) = 0.
            let mut d = Vec::new();
            for k in 0..ORBIT_DIM {
                d.push(Mat::zeros(model.basis[k + 1].len(), model.basis[k].len()));
            }
            d[2][(0, 0)] = 3.0;
            d[3][(0, 1)] = -2.0;
            model.d_mats = d;
        }
    }

    // Normalizer elements.
    let mut elements = vec![("identity", Mat::identity(ORBIT_DIM))];
    match (id, &lie) {
        (ModelId::Su3T2, Some(lie)) => {
            for (name, h) in su3_permutations() {
                elements.push((name, lie.tangent_of(&h)?));
            }
        }
        (ModelId::Su3T123, Some(lie)) => {
            for (name, h) in su3_permutations() {
                if name == "A23" {
                    elements.push((name, lie.tangent_of(&h)?));
                }
            }
        }
        (ModelId::Sp2, Some(lie)) => {
            let one = Quat(1.0, 0.0, 0.0, 0.0);
            let qj = Quat(0.0, 0.0, 1.0, 0.0);
            let d2 = CMat::quaternionic(&[[one, Quat::ZERO], [Quat::ZERO, qj]]);
            elements.push(("D2", lie.tangent_of(&d2)?));
        }
        (ModelId::G2Su3, _) => {
            // Complex conjugation on ℂ³ ≅ 𝔪.
            elements.push(("D7", Mat::diagonal(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0])));
        }
        _ => {}
    }
    for (name, l) in elements {
        let e = make_element(&model, name, l)?;
        model.normalizers.push(e);
    }

    let checks = relation_checks(&model)?;
    model.checks.extend(checks);
    if let Some(bad) = model.checks.iter().find(|c| !c.passes(GATE_TOL)) {
        return Err(OrbitError::GateFailed { relation: bad.relation.clone(), defect: bad.defect });
    }
    Ok(model)
}

fn relation_checks(model: &OrbitModel) -> Result<Vec<RelationCheck>, OrbitError> {
    let mut out = Vec::new();
    let u = |n: &str| model.unit(n);
    let lin = |terms: &[(f64, &str)]| -> Result<InvForm, OrbitError> {
        let (k, _) = model.generator(terms[0].1)?;
        let mut z = model.zero(k)?;
        for (c, n) in terms {
            let (_, i) = model.generator(n)?;
            z.coords[i] += c;
        }
        Ok(z)
    };
    let mut rel = |name: &str, lhs: InvForm, rhs: InvForm| {
        out.push(RelationCheck { relation: name.to_string(), defect: lhs.max_abs_diff(&rhs) });
    };
    let d = |f: InvForm| model.d(&f);

    match model.id {
        ModelId::Su3T2 => {
            for i in 1..=3 {
                rel(&format!("dω{i}=½α"), d(u(&format!("ω{i}"))?)?, lin(&[(0.5, "α")])?);
            }
            rel("dα=0", d(u("α")?)?, model.zero(4)?);
            rel("dβ=−2(ω1ω2+ω2ω3+ω3ω1)", d(u("β")?)?, lin(&[(-2.0, "ω1ω2"), (-2.0, "ω2ω3"), (-2.0, "ω3ω1")])?);
            for n in ["ω1ω2", "ω2ω3", "ω3ω1"] {
                rel(&format!("d({n})=0"), d(u(n)?)?, model.zero(5)?);
            }
        }
        ModelId::Sp2 => {
            rel("dω1=½α", d(u("ω1")?)?, lin(&[(0.5, "α")])?);
            rel("dω2=α", d(u("ω2")?)?, lin(&[(1.0, "α")])?);
            rel("dα=0", d(u("α")?)?, model.zero(4)?);
            rel("dβ=−2ω1ω2−ω2²", d(u("β")?)?, lin(&[(-2.0, "ω1ω2"), (-1.0, "ω2²")])?);
        }
        ModelId::G2Su3 => {
            rel("dω=3α", d(u("ω")?)?, lin(&[(3.0, "α")])?);
            rel("dα=0", d(u("α")?)?, model.zero(4)?);
            rel("dβ=−2ω²", d(u("β")?)?, lin(&[(-2.0, "ω²")])?);
        }
        ModelId::Su3T123 => {
            rel("dω0=(3/2)α", d(u("ω0")?)?, lin(&[(1.5, "α")])?);
            rel("dα=0", d(u("α")?)?, model.zero(4)?);
            rel("dβ=−ω0²", d(u("β")?)?, lin(&[(-1.0, "ω0²")])?);
        }
    }

    // ⋆₀α = β for the flat metric on 𝔪.
    let (g0, o0) = OrbitModel::flat_structure();
    let star = alpha().hodge(&g0, &o0)?;
    out.push(RelationCheck { relation: "⋆₀α=β".to_string(), defect: star.max_abs_diff(&beta()) });

    // d² = 0 on every generator.
    let mut dd: f64 = 0.0;
    for k in 0..ORBIT_DIM - 1 {
        for i in 0..model.basis[k].len() {
            let mut e = vec![0.0; model.basis[k].len()];
            e[i] = 1.0;
            let once = model.d(&InvForm { degree: k, coords: e })?;
            dd = dd.max(model.d(&once)?.max_abs());
        }
    }
    out.push(RelationCheck { relation: "d²=0".to_string(), defect: dd });

    // Normalizer actions commute with d.
    for el in &model.normalizers {
        let mut defect: f64 = 0.0;
        for k in 0..ORBIT_DIM {
            let a = model.action_matrix(el, k)?;
            let a1 = model.action_matrix(el, k + 1)?;
            let dm = &model.d_mats[k];
            if dm.rows() == 0 || dm.cols() == 0 {
                continue;
            }
            defect = defect.max(dm.matmul(&a)?.max_abs_diff(&a1.matmul(dm)?));
        }
        out.push(RelationCheck { relation: format!("{}∘d=d∘{}", el.name, el.name), defect });
    }
    Ok(out)
}

/// Tolerance helper shared by callers that project numerically computed forms.
pub fn projection_tolerance(scale: f64) -> f64 {
    1e-9 * (1.0 + scale)
}
