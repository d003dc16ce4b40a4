//! Heisenberg coordinates `(T, b, c) ∈ U(n-1) ⋉ N` for the stabilizer of the
//! boundary point `[f1]`, and the analysis of parabolic groups built on them.
//!
//! The group law is
//! `(T,b,c)·(T',b',c') = (TT', b + Tb', c + c' + Im⟨b, Tb'⟩)`
//! with `⟨x, y⟩ = Σ x_i ȳ_i`.

use std::collections::HashMap;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Basis, Isometry};
use crate::linalg::{
    c, cluster_indices, frobenius, hermitian_eigen, herm, is_unitary, real_rank, vec_norm, CMatrix,
    CVector, I,
};

/// Unitarity tolerance on rotation parts.
pub const UNITARY_TOL: f64 = 1e-10;
/// An eigendirection with `|1 − a_i(γ)| ≤ FIXED_TOL` for every generator is fixed.
pub const FIXED_TOL: f64 = 1e-10;
/// Threshold for a nonzero pure-center element.
pub const CENTER_TOL: f64 = 1e-10;
/// Relative tolerance for the rank computations over `R`.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergElement {
    pub t: CMatrix,
    pub b: CVector,
    pub c: f64,
}

impl HeisenbergElement {
    pub fn new(t: CMatrix, b: CVector, c: f64) -> Result<Self> {
        let m = t.nrows();
        if m == 0 {
            return Err(Error::UnsupportedDimension(1));
        }
        if t.ncols() != m {
            return Err(Error::NotHeisenberg("rotation part is not square".into()));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: b.len(),
            });
        }
        if !is_unitary(&t, UNITARY_TOL) {
            return Err(Error::NotHeisenberg("rotation part is not unitary".into()));
        }
        if !c.is_finite() || b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHeisenberg("non-finite entry".into()));
        }
        Ok(Self { t, b, c })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            t: CMatrix::identity(m, m),
            b: CVector::zeros(m),
            c: 0.0,
        }
    }

    /// The unipotent element `(Id, b, c)`.
    pub fn unipotent(b: CVector, c: f64) -> Self {
        let m = b.len();
        Self {
            t: CMatrix::identity(m, m),
            b,
            c,
        }
    }

    /// The elliptic element `(T, 0, 0)`.
    pub fn rotation(t: CMatrix) -> Self {
        let m = t.nrows();
        Self {
            t,
            b: CVector::zeros(m),
            c: 0.0,
        }
    }

    /// Size `n − 1` of the rotation part.
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let tb = &self.t * &other.b;
        Self {
            t: &self.t * &other.t,
            c: self.c + other.c + herm(&self.b, &tb).im,
            b: &self.b + tb,
        }
    }

    pub fn inverse(&self) -> Self {
        let t_inv = self.t.adjoint();
        let b = -(&t_inv * &self.b);
        Self {
            t: t_inv,
            b,
            c: -self.c,
        }
    }

    /// `g h g⁻¹ h⁻¹`.
    pub fn commutator(&self, other: &Self) -> Self {
        self * other * self.inverse() * other.inverse()
    }

    /// Translation part of the commutator of the affine projections:
    /// `(Id − T₂) b₁ − (Id − T₁) b₂`.
    pub fn projection_commutator(&self, other: &Self) -> CVector {
        let b1 = &self.b - &other.t * &self.b;
        let b2 = &other.b - &self.t * &other.b;
        b1 - b2
    }

    /// Matrix in the Siegel basis `(f1, f2, e1, …)`:
    /// rows `(1, −‖b‖²/2 + ic, −b*T)`, `(0, 1, 0)`, `(0, b, T)`.
    pub fn embed(&self) -> Isometry {
        let m = self.dim();
        let mut g = CMatrix::zeros(m + 2, m + 2);
        g[(0, 0)] = c(1.0, 0.0);
        g[(1, 1)] = c(1.0, 0.0);
        let b2: f64 = self.b.iter().map(|z| z.norm_sqr()).sum();
        g[(0, 1)] = c(-b2 / 2.0, self.c);
        let row = -(self.b.adjoint() * &self.t);
        for j in 0..m {
            g[(0, j + 2)] = row[j];
            g[(j + 2, 1)] = self.b[j];
        }
        g.view_mut((2, 2), (m, m)).copy_from(&self.t);
        Isometry::from_matrix_unchecked(Basis::Siegel, g)
    }

    /// Reads a Siegel-basis matrix fixing `[f1]` with unit-modulus eigenvalues
    /// back as `(T, b, c)`, after scaling the `(f2, f2)` entry to 1.
    pub fn from_isometry(g: &Isometry) -> Result<Self> {
        let g = g.to_basis(Basis::Siegel);
        let a = g.matrix();
        let size = a.nrows();
        if size < 3 {
            return Err(Error::UnsupportedDimension(size.saturating_sub(1)));
        }
        let m = size - 2;
        let pivot = a[(1, 1)];
        if pivot.norm() < 1e-12 {
            return Err(Error::NotHeisenberg("(f2, f2) entry vanishes".into()));
        }
        let a = a / pivot;
        let tol = 1e-9 * frobenius(&a).max(1.0);
        let mut off = (a[(0, 0)] - c(1.0, 0.0)).norm();
        for j in 0..size {
            if j != 1 {
                off = off.max(a[(1, j)].norm());
            }
        }
        for i in 2..size {
            off = off.max(a[(i, 0)].norm());
        }
        if off > tol {
            return Err(Error::NotHeisenberg(
                "matrix does not fix [f1] unipotently".into(),
            ));
        }
        let t = a.view((2, 2), (m, m)).into_owned();
        let b = CVector::from_iterator(m, (0..m).map(|i| a[(i + 2, 1)]));
        let h = Self::new(t, b, a[(0, 1)].im)?;
        if frobenius(&(h.embed().matrix() - &a)) > tol {
            return Err(Error::NotHeisenberg("matrix does not preserve the form".into()));
        }
        Ok(h)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.rotation_defect() <= tol && vec_norm(&self.b) <= tol && self.c.abs() <= tol
    }

    /// `T = Id`, `b = 0`, `|c| > CENTER_TOL`.
    pub fn is_nontrivial_central(&self) -> bool {
        self.rotation_defect() <= CENTER_TOL
            && vec_norm(&self.b) <= CENTER_TOL
            && self.c.abs() > CENTER_TOL
    }

    /// `‖T − Id‖_F`.
    pub fn rotation_defect(&self) -> f64 {
        let m = self.dim();
        frobenius(&(&self.t - CMatrix::identity(m, m)))
    }

    /// Largest deviation of the three parts.
    pub fn distance(&self, other: &Self) -> f64 {
        frobenius(&(&self.t - &other.t))
            .max(vec_norm(&(&self.b - &other.b)))
            .max((self.c - other.c).abs())
    }
}

impl Mul for &HeisenbergElement {
    type Output = HeisenbergElement;

    fn mul(self, rhs: &HeisenbergElement) -> HeisenbergElement {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Mul<HeisenbergElement> for HeisenbergElement {
    type Output = HeisenbergElement;

    fn mul(self, rhs: HeisenbergElement) -> HeisenbergElement {
        &self * &rhs
    }
}

impl Mul<&HeisenbergElement> for HeisenbergElement {
    type Output = HeisenbergElement;

    fn mul(self, rhs: &HeisenbergElement) -> HeisenbergElement {
        &self * rhs
    }
}

/// A word in the generators: letter `k > 0` is generator `k` (1-based),
/// `−k` its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn evaluate(&self, generators: &[HeisenbergElement]) -> Result<HeisenbergElement> {
        let m = generators
            .first()
            .map(|g| g.dim())
            .ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
        let mut acc = HeisenbergElement::identity(m);
        for &letter in &self.0 {
            let idx = letter.unsigned_abs() as usize;
            if letter == 0 || idx > generators.len() {
                return Err(Error::InvalidArgument(format!(
                    "letter {letter} does not name one of {} generators",
                    generators.len()
                )));
            }
            let g = &generators[idx - 1];
            acc = if letter > 0 {
                &acc * g
            } else {
                &acc * &g.inverse()
            };
        }
        Ok(acc)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&l| {
                if l > 0 {
                    format!("g{l}")
                } else {
                    format!("g{}^-1", -l)
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicGroupInput {
    pub generators: Vec<HeisenbergElement>,
    /// Words defining the generators of a finite-index subgroup to work with.
    pub substitution: Option<Vec<Word>>,
}

impl ParabolicGroupInput {
    pub fn new(generators: Vec<HeisenbergElement>) -> Result<Self> {
        Self::with_substitution(generators, None)
    }

    pub fn with_substitution(
        generators: Vec<HeisenbergElement>,
        substitution: Option<Vec<Word>>,
    ) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty generator list".into()))?;
        let m = first.dim();
        for g in &generators {
            if g.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: g.dim(),
                });
            }
        }
        let input = Self {
            generators,
            substitution,
        };
        input.working_generators()?;
        Ok(input)
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// The generators after applying the substitution, if any.
    pub fn working_generators(&self) -> Result<Vec<HeisenbergElement>> {
        match &self.substitution {
            None => Ok(self.generators.clone()),
            Some(words) => {
                if words.is_empty() {
                    return Err(Error::InvalidArgument("empty substitution".into()));
                }
                words.iter().map(|w| w.evaluate(&self.generators)).collect()
            }
        }
    }
}

/// `δ = (2l + k) / 2`, kept as the integer `2l + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CriticalExponent {
    twice: u32,
}

impl CriticalExponent {
    pub fn from_lk(l: u32, k: u32) -> Self {
        Self { twice: 2 * l + k }
    }

    pub fn numerator(&self) -> u32 {
        if self.twice.is_multiple_of(2) {
            self.twice / 2
        } else {
            self.twice
        }
    }

    pub fn denominator(&self) -> u32 {
        if self.twice.is_multiple_of(2) {
            1
        } else {
            2
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl fmt::Display for CriticalExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator(), self.denominator())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Caveat {
    /// No explicit nontrivial central element was found, so `l = 0` is not certified.
    CentralElementNotExhibited,
    /// `b(φ(γ))` left the fixed subspace by more than the tolerance.
    TranslationResidual { generator: usize, residual: f64 },
}

impl fmt::Display for Caveat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Caveat::CentralElementNotExhibited => f.write_str("central-element-not-exhibited"),
            Caveat::TranslationResidual {
                generator,
                residual,
            } => write!(f, "translation-residual(g{generator}, {residual:e})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParabolicAnalysis {
    pub working_generators: Vec<HeisenbergElement>,
    pub pi_abelian: bool,
    /// Unitary matrix whose columns jointly diagonalize the rotation parts.
    pub eigenbasis: CMatrix,
    /// `eigenvalues[j][i] = a_i(γ_j)`.
    pub eigenvalues: Vec<Vec<Complex64>>,
    /// `translation_coords[j][i] = b_i(γ_j)`.
    pub translation_coords: Vec<CVector>,
    /// Indices of the eigendirections spanning the common fixed space `V₁`.
    pub fixed_directions: Vec<usize>,
    /// Orthonormal basis of `V₁` as columns.
    pub fixed_basis: CMatrix,
    /// The conjugating translation `Λ`, in the original coordinates.
    pub lambda: CVector,
    /// Real spanning set `{p(b(γ))}` of `W₁`.
    pub w1_spanning: Vec<CVector>,
    /// `φ(γ) = T_Λ⁻¹ γ T_Λ` per generator.
    pub conjugated: Vec<HeisenbergElement>,
    pub elliptic_parts: Vec<HeisenbergElement>,
    pub unipotent_parts: Vec<HeisenbergElement>,
    pub totally_real: bool,
    pub stein: bool,
    pub l: u32,
    pub k: u32,
    pub delta: CriticalExponent,
    pub caveats: Vec<Caveat>,
    pub seed: u64,
}

impl ParabolicAnalysis {
    pub fn dim_fixed(&self) -> usize {
        self.fixed_directions.len()
    }

    pub fn dim_w1(&self) -> u32 {
        self.k
    }
}

/// Runs the complete parabolic pipeline on the working generators.
///
/// `seed` drives the random Hermitian combination used for simultaneous
/// diagonalization; the outcome does not depend on it beyond rounding.
pub fn analyze(input: &ParabolicGroupInput, seed: u64) -> Result<ParabolicAnalysis> {
    let gens = input.working_generators()?;
    let m = input.dim();
    let scale = gens
        .iter()
        .map(|g| vec_norm(&g.b))
        .fold(1.0, f64::max);

    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let rot = frobenius(&(&gens[i].t * &gens[j].t - &gens[j].t * &gens[i].t));
            let trans = vec_norm(&gens[i].projection_commutator(&gens[j]));
            let defect = rot.max(trans / scale);
            if defect > 1e-9 {
                return Err(Error::NonCommutingProjections {
                    first: i + 1,
                    second: j + 1,
                    defect,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations: Vec<CMatrix> = gens.iter().map(|g| g.t.clone()).collect();
    let q = joint_eigenbasis(&rotations, &mut rng)?;
    let qh = q.adjoint();

    let eigenvalues: Vec<Vec<Complex64>> = gens
        .iter()
        .map(|g| {
            let d = &qh * &g.t * &q;
            (0..m).map(|i| d[(i, i)]).collect()
        })
        .collect();
    let translation_coords: Vec<CVector> = gens.iter().map(|g| &qh * &g.b).collect();

    let fixed_directions: Vec<usize> = (0..m)
        .filter(|&i| {
            eigenvalues
                .iter()
                .all(|a| (c(1.0, 0.0) - a[i]).norm() <= FIXED_TOL)
        })
        .collect();
    let fixed_basis = CMatrix::from_fn(m, fixed_directions.len(), |r, j| {
        q[(r, fixed_directions[j])]
    });

    let mut lambda_coords = CVector::zeros(m);
    for i in 0..m {
        if fixed_directions.contains(&i) {
            continue;
        }
        let (j, gap) = eigenvalues
            .iter()
            .enumerate()
            .map(|(j, a)| (j, (c(1.0, 0.0) - a[i]).norm()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        debug_assert!(gap > FIXED_TOL);
        lambda_coords[i] = translation_coords[j][i] / (c(1.0, 0.0) - eigenvalues[j][i]);
    }
    let lambda = &q * &lambda_coords;

    let t_lambda = HeisenbergElement::unipotent(lambda.clone(), 0.0);
    let t_lambda_inv = t_lambda.inverse();
    let projector = &fixed_basis * fixed_basis.adjoint();

    let mut caveats = Vec::new();
    let mut conjugated = Vec::with_capacity(gens.len());
    let mut elliptic_parts = Vec::with_capacity(gens.len());
    let mut unipotent_parts = Vec::with_capacity(gens.len());
    let mut w1_spanning = Vec::with_capacity(gens.len());
    for (j, g) in gens.iter().enumerate() {
        let phi = &t_lambda_inv * g * &t_lambda;
        let residual = vec_norm(&(&phi.b - &projector * &phi.b));
        if residual > FIXED_TOL * scale {
            caveats.push(Caveat::TranslationResidual {
                generator: j + 1,
                residual,
            });
        }
        elliptic_parts.push(HeisenbergElement::rotation(phi.t.clone()));
        unipotent_parts.push(HeisenbergElement::unipotent(phi.b.clone(), phi.c));
        w1_spanning.push(&projector * &g.b);
        conjugated.push(phi);
    }

    let k = real_rank(&w1_spanning, RANK_TOL, 1e-10 * scale) as u32;
    let totally_real = totally_real_test(&w1_spanning);

    let mut central = gens.iter().any(|g| g.is_nontrivial_central())
        || unipotent_parts.iter().any(|u| u.is_nontrivial_central());
    if !central {
        'outer: for i in 0..gens.len() {
            for j in (i + 1)..gens.len() {
                if gens[i].commutator(&gens[j]).is_nontrivial_central() {
                    central = true;
                    break 'outer;
                }
            }
        }
    }
    if !central {
        caveats.push(Caveat::CentralElementNotExhibited);
    }
    let l = u32::from(central);

    Ok(ParabolicAnalysis {
        working_generators: gens,
        pi_abelian: true,
        eigenbasis: q,
        eigenvalues,
        translation_coords,
        fixed_directions,
        fixed_basis,
        lambda,
        w1_spanning,
        conjugated,
        elliptic_parts,
        unipotent_parts,
        totally_real,
        stein: totally_real,
        l,
        k,
        delta: CriticalExponent::from_lk(l, k),
        caveats,
        seed,
    })
}

/// Unitary `Q` with `Q* T Q` diagonal for every (commuting, unitary) `T`.
fn joint_eigenbasis(rotations: &[CMatrix], rng: &mut ChaCha8Rng) -> Result<CMatrix> {
    let m = rotations[0].nrows();
    let scale = rotations.iter().map(frobenius).fold(1.0, f64::max);
    for _attempt in 0..8 {
        let mut q = CMatrix::identity(m, m);
        let mut blocks: Vec<Vec<usize>> = vec![(0..m).collect()];

        let mut combo = CMatrix::zeros(m, m);
        for t in rotations {
            combo += hermitian_mix(t, rng);
        }
        refine(&mut q, &mut blocks, &combo, false, rng);
        for t in rotations {
            refine(&mut q, &mut blocks, t, true, rng);
        }

        let ok = rotations.iter().all(|t| {
            let d = q.adjoint() * t * &q;
            let mut off = 0.0;
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        off += d[(i, j)].norm_sqr();
                    }
                }
            }
            off.sqrt() <= 1e-9 * scale
        });
        if ok {
            return Ok(q);
        }
    }
    Err(Error::NoConvergence)
}

/// `r (T + T*)/2 + s (T − T*)/(2i)` with random real `r, s`.
fn hermitian_mix(t: &CMatrix, rng: &mut ChaCha8Rng) -> CMatrix {
    let r: f64 = rng.random_range(0.5..1.5);
    let s: f64 = rng.random_range(0.5..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let herm_part = (t + t.adjoint()) * c(0.5 * r, 0.0);
    let skew_part = (t - t.adjoint()) * (c(s, 0.0) / (I * 2.0));
    herm_part + skew_part
}

/// Diagonalizes `matrix` restricted to each current block and splits blocks
/// along its distinct eigenvalues.
fn refine(
    q: &mut CMatrix,
    blocks: &mut Vec<Vec<usize>>,
    matrix: &CMatrix,
    mix: bool,
    rng: &mut ChaCha8Rng,
) {
    let mut next = Vec::with_capacity(blocks.len());
    for block in blocks.iter() {
        if block.len() == 1 {
            next.push(block.clone());
            continue;
        }
        let m = q.nrows();
        let qb = CMatrix::from_fn(m, block.len(), |r, j| q[(r, block[j])]);
        let restricted = qb.adjoint() * matrix * &qb;
        let h = if mix {
            hermitian_mix(&restricted, rng)
        } else {
            restricted
        };
        let (values, vectors) = hermitian_eigen(&h);
        let rotated = &qb * vectors;
        for (j, &col) in block.iter().enumerate() {
            q.set_column(col, &rotated.column(j));
        }
        let top = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let as_complex: Vec<Complex64> = values.iter().map(|&v| c(v, 0.0)).collect();
        for cluster in cluster_indices(&as_complex, 1e-8 * top) {
            next.push(cluster.into_iter().map(|j| block[j]).collect());
        }
    }
    *blocks = next;
}

/// Whether `Span_R(S)` is totally real: `dim Span_R(S ∪ iS) = 2 dim Span_R(S)`.
pub fn totally_real_test(spanning: &[CVector]) -> bool {
    if spanning.is_empty() {
        return true;
    }
    let scale = spanning.iter().map(vec_norm).fold(1.0, f64::max);
    let abs = 1e-10 * scale;
    let base = real_rank(spanning, RANK_TOL, abs);
    let mut doubled: Vec<CVector> = spanning.to_vec();
    doubled.extend(spanning.iter().map(|v| v * I));
    real_rank(&doubled, RANK_TOL, abs) == 2 * base
}

#[derive(Clone, Debug, PartialEq)]
pub struct Z2Witness {
    pub x: Word,
    pub y: Word,
    /// `[x, y]`, a nontrivial central element.
    pub commutator: HeisenbergElement,
}

/// Searches words of length at most `max_word_length` for `x, y` whose
/// projections commute while `x` and `y` themselves do not.
pub fn z2_witness(input: &ParabolicGroupInput, max_word_length: usize) -> Option<Z2Witness> {
    let elements = enumerate_elements(&input.generators, max_word_length);
    for i in 0..elements.len() {
        for j in (i + 1)..elements.len() {
            let comm = elements[i].1.commutator(&elements[j].1);
            if comm.is_nontrivial_central() {
                return Some(Z2Witness {
                    x: elements[i].0.clone(),
                    y: elements[j].0.clone(),
                    commutator: comm,
                });
            }
        }
    }
    None
}

/// Distinct non-identity elements reachable by reduced words of length at
/// most `max_len`, in breadth-first order with generators before inverses.
pub fn enumerate_elements(
    generators: &[HeisenbergElement],
    max_len: usize,
) -> Vec<(Word, HeisenbergElement)> {
    let Some(first) = generators.first() else {
        return Vec::new();
    };
    let g = generators.len() as i32;
    let letters: Vec<i32> = (1..=g).chain((1..=g).map(|k| -k)).collect();
    let inverses: Vec<HeisenbergElement> = generators.iter().map(|x| x.inverse()).collect();
    let identity = HeisenbergElement::identity(first.dim());

    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    seen.insert(grid_key(&identity), ());
    let mut out = Vec::new();
    let mut layer = vec![(Word::default(), identity)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (word, elem) in &layer {
            for &letter in &letters {
                if word.0.last() == Some(&-letter) {
                    continue;
                }
                let idx = letter.unsigned_abs() as usize - 1;
                let step = if letter > 0 {
                    &generators[idx]
                } else {
                    &inverses[idx]
                };
                let prod = elem * step;
                let key = grid_key(&prod);
                if seen.contains_key(&key) {
                    continue;
                }
                seen.insert(key, ());
                let mut w = word.clone();
                w.0.push(letter);
                out.push((w.clone(), prod.clone()));
                next.push((w, prod));
            }
        }
        layer = next;
    }
    out
}

fn grid_key(h: &HeisenbergElement) -> Vec<i64> {
    let q = |x: f64| (x * 1e6).round() as i64;
    let mut key = Vec::with_capacity(2 * h.t.len() + 2 * h.b.len() + 1);
    for z in h.t.iter().chain(h.b.iter()) {
        key.push(q(z.re));
        key.push(q(z.im));
    }
    key.push(q(h.c));
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{busemann_siegel, horoball_translate, HermitianModel};
    use crate::linalg::CVector;
    use proptest::prelude::*;

    fn e(m: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(m);
        v[i] = c(1.0, 0.0);
        v
    }

    fn translation(b: CVector) -> HeisenbergElement {
        HeisenbergElement::unipotent(b, 0.0)
    }

    fn random_unitary(rng: &mut impl Rng, m: usize) -> CMatrix {
        let a = CMatrix::from_fn(m, m, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        a.qr().q()
    }

    fn random_element(rng: &mut impl Rng, m: usize) -> HeisenbergElement {
        let b = CVector::from_fn(m, |_, _| {
            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
        });
        HeisenbergElement::new(random_unitary(rng, m), b, rng.random_range(-3.0..3.0)).unwrap()
    }

    #[test]
    fn compose_examples() {
        let g1 = translation(e(1, 0));
        let g2 = translation(e(1, 0) * I);
        let p = g1.compose(&g2).unwrap();
        assert_eq!(p.b[0], c(1.0, 1.0));
        assert_eq!(p.c, -1.0);
        assert_eq!(p.t, CMatrix::identity(1, 1));
        assert_eq!(g1.compose(&HeisenbergElement::identity(1)).unwrap(), g1);
        let z = HeisenbergElement::unipotent(CVector::zeros(1), 1.0);
        let left = (&g1 * &g2) * &z;
        let right = &g1 * &(&g2 * &z);
        assert!(left.distance(&right) < 1e-15);
        assert!(matches!(
            g1.compose(&HeisenbergElement::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_and_commutator_examples() {
        let g1 = translation(e(1, 0));
        let inv = g1.inverse();
        assert_eq!(inv.b[0], c(-1.0, 0.0));
        assert_eq!(inv.c, 0.0);
        let id = HeisenbergElement::identity(2);
        assert!(id.inverse().is_identity(0.0));
        let g2 = translation(e(1, 0) * I);
        let comm = g1.commutator(&g2);
        assert!(comm.rotation_defect() == 0.0 && vec_norm(&comm.b) == 0.0);
        assert_eq!(comm.c, -2.0);
        assert!(g1.commutator(&g1).is_identity(1e-15));
    }

    #[test]
    fn new_rejects_malformed() {
        let t = CMatrix::from_element(1, 1, c(2.0, 0.0));
        assert!(HeisenbergElement::new(t, CVector::zeros(1), 0.0).is_err());
        assert!(HeisenbergElement::new(CMatrix::identity(2, 2), CVector::zeros(1), 0.0).is_err());
    }

    #[test]
    fn embedding_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 1..4 {
            let g = random_element(&mut rng, m);
            let mat = g.embed();
            assert!(mat.form_defect() < 1e-14);
            let back = HeisenbergElement::from_isometry(&mat).unwrap();
            assert!(back.distance(&g) < 1e-12);
            let scaled = Isometry::from_matrix_unchecked(
                Basis::Siegel,
                mat.matrix() * Complex64::from_polar(1.0, 0.7),
            );
            assert!(HeisenbergElement::from_isometry(&scaled).unwrap().distance(&g) < 1e-12);
        }
    }

    #[test]
    fn random_laws_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let m = rng.random_range(1..4);
            let g = random_element(&mut rng, m);
            let h = random_element(&mut rng, m);
            let k = random_element(&mut rng, m);

            let lhs = (&g * &h).embed();
            let rhs = g.embed().compose(&h.embed());
            assert!(frobenius(&(lhs.matrix() - rhs.matrix())) < 1e-12);

            let a = &(&g * &h) * &k;
            let b = &g * &(&h * &k);
            assert!(frobenius(&(&a.t - &b.t)) < 1e-12);
            assert!(vec_norm(&(&a.b - &b.b)) < 1e-12);
            assert!((a.c - b.c).abs() < 1e-12);

            assert!((&g.inverse() * &g).is_identity(1e-12));
            assert!((&g * &g.inverse()).is_identity(1e-12));

            let u = HeisenbergElement::unipotent(g.b.clone(), g.c);
            let v = HeisenbergElement::unipotent(h.b.clone(), h.c);
            let comm = u.commutator(&v);
            let expected = 2.0 * herm(&u.b, &v.b).im;
            assert!(comm.rotation_defect() < 1e-12 && vec_norm(&comm.b) < 1e-12);
            assert!((comm.c - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn commutator_translation_matches_projection_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let m = 3;
            let q = random_unitary(&mut rng, m);
            let diag = |rng: &mut ChaCha8Rng| {
                let d = CVector::from_fn(m, |_, _| Complex64::from_polar(1.0, rng.random_range(0.0..6.3)));
                &q * CMatrix::from_diagonal(&d) * q.adjoint()
            };
            let g = HeisenbergElement::new(diag(&mut rng), random_element(&mut rng, m).b, 0.5).unwrap();
            let h = HeisenbergElement::new(diag(&mut rng), random_element(&mut rng, m).b, -1.0).unwrap();
            let comm = g.commutator(&h);
            assert!(comm.rotation_defect() < 1e-12);
            assert!(vec_norm(&(&comm.b - g.projection_commutator(&h))) < 1e-12);
        }
    }

    #[test]
    fn horoball_maps_commute_with_heisenberg() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let g = random_element(&mut rng, 2).embed();
            let l = horoball_translate(3, rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)).unwrap();
            let d = l.compose(&g).matrix() - g.compose(&l).matrix();
            assert!(frobenius(&d) < 1e-12);
        }
    }

    #[test]
    fn busemann_is_heisenberg_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = HermitianModel::siegel(3).unwrap();
        for _ in 0..100 {
            let g = random_element(&mut rng, 2).embed();
            let u = CVector::from_fn(2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let re = -u.norm_squared() / 2.0 - rng.random_range(0.1..2.0);
            let p = crate::geometry::SiegelPoint::new(c(re, rng.random_range(-1.0..1.0)), u);
            let x = model.siegel_to_projective(&p).unwrap();
            let gp = model.projective_to_siegel(&g.apply(&x)).unwrap();
            assert!((busemann_siegel(&gp).unwrap() - busemann_siegel(&p).unwrap()).abs() < 1e-10);
        }
    }

    fn example1() -> ParabolicGroupInput {
        ParabolicGroupInput::new(vec![translation(e(1, 0)), translation(e(1, 0) * I)]).unwrap()
    }

    #[test]
    fn analyze_single_translation() {
        let input = ParabolicGroupInput::new(vec![translation(e(2, 0))]).unwrap();
        let a = analyze(&input, 0).unwrap();
        assert_eq!(a.dim_fixed(), 2);
        assert_eq!(a.k, 1);
        assert!(a.totally_real && a.stein);
        assert_eq!(a.l, 0);
        assert_eq!(a.delta.to_string(), "1/2");
        assert!(a.caveats.contains(&Caveat::CentralElementNotExhibited));
    }

    #[test]
    fn analyze_example1() {
        let a = analyze(&example1(), 0).unwrap();
        assert_eq!(a.k, 2);
        assert_eq!(a.l, 1);
        assert!(!a.totally_real && !a.stein);
        assert_eq!(a.delta.to_string(), "2/1");
        assert!(a.caveats.is_empty());
    }

    #[test]
    fn analyze_mixed_elliptic() {
        let g = HeisenbergElement::new(
            CMatrix::from_element(1, 1, c(-1.0, 0.0)),
            e(1, 0),
            1.0,
        )
        .unwrap();
        let a = analyze(&ParabolicGroupInput::new(vec![g]).unwrap(), 0).unwrap();
        assert_eq!(a.dim_fixed(), 0);
        assert_eq!(a.k, 0);
        assert!(a.totally_real && a.stein);
        assert!((a.lambda[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(a.unipotent_parts[0].is_nontrivial_central());
        assert!((a.unipotent_parts[0].c - 1.0).abs() < 1e-15);
        assert_eq!(a.l, 1);
        assert_eq!(a.delta.to_string(), "1/1");
    }

    #[test]
    fn analyze_example2() {
        let v3 = CVector::from_vec(vec![c(2f64.sqrt(), 1.0), c(0.0, 1.0)]);
        let input = ParabolicGroupInput::new(vec![
            translation(e(2, 0)),
            translation(e(2, 1)),
            translation(v3),
        ])
        .unwrap();
        let a = analyze(&input, 0).unwrap();
        assert_eq!((a.l, a.k), (1, 3));
        assert!(!a.stein);
        assert_eq!(a.delta.to_string(), "5/2");
    }

    #[test]
    fn analyze_reports_noncommuting_pair() {
        let rot = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let diag = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let input = ParabolicGroupInput::new(vec![
            translation(e(2, 0)),
            HeisenbergElement::rotation(rot),
            HeisenbergElement::rotation(diag),
        ])
        .unwrap();
        match analyze(&input, 0) {
            Err(Error::NonCommutingProjections { first, second, .. }) => {
                assert_eq!((first, second), (1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        // a rotation about a point other than the origin does not commute with a translation
        let shifted = HeisenbergElement::new(CMatrix::from_element(1, 1, c(-1.0, 0.0)), e(1, 0), 0.0).unwrap();
        let input = ParabolicGroupInput::new(vec![translation(e(1, 0)), shifted]).unwrap();
        assert!(matches!(
            analyze(&input, 0),
            Err(Error::NonCommutingProjections { .. })
        ));
    }

    #[test]
    fn substitution_selects_finite_index_subgroup() {
        // Π(γ1) = rotation by -1, Π(γ2) = translation: their squares commute.
        let rot = HeisenbergElement::rotation(CMatrix::from_element(1, 1, c(-1.0, 0.0)));
        let tr = translation(e(1, 0));
        let input = ParabolicGroupInput::with_substitution(
            vec![rot, tr],
            Some(vec![Word(vec![2]), Word(vec![1, 2, -1])]),
        )
        .unwrap();
        let a = analyze(&input, 3).unwrap();
        assert_eq!(a.k, 1);
        assert!(a.stein);
        assert!(ParabolicGroupInput::with_substitution(
            vec![translation(e(1, 0))],
            Some(vec![Word(vec![3])])
        )
        .is_err());
    }

    #[test]
    fn analysis_is_seed_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let input = random_virtually_abelian(&mut rng, 3, 3);
        let a = analyze(&input, 1).unwrap();
        let b = analyze(&input, 99).unwrap();
        assert_eq!((a.k, a.l, a.stein, a.delta), (b.k, b.l, b.stein, b.delta));
        assert!(vec_norm(&(&a.lambda - &b.lambda)) < 1e-9);
    }

    #[test]
    fn totally_real_examples() {
        assert!(totally_real_test(&[e(2, 0)]));
        assert!(!totally_real_test(&[e(2, 0), e(2, 0) * I]));
        assert!(totally_real_test(&[e(2, 0), e(2, 1) + e(2, 0) * I]));
        assert!(totally_real_test(&[]));
    }

    #[test]
    fn z2_witness_examples() {
        let w = z2_witness(&example1(), 1).unwrap();
        assert_eq!((w.x.0.as_slice(), w.y.0.as_slice()), (&[1][..], &[2][..]));
        assert_eq!(w.commutator.c, -2.0);
        let single = ParabolicGroupInput::new(vec![translation(e(1, 0))]).unwrap();
        assert!(z2_witness(&single, 6).is_none());
        let commuting = ParabolicGroupInput::new(vec![translation(e(2, 0)), translation(e(2, 1))]).unwrap();
        assert!(z2_witness(&commuting, 6).is_none());
    }

    #[test]
    fn enumerate_elements_counts_a_free_abelian_ball() {
        let gens = vec![translation(e(2, 0)), translation(e(2, 1))];
        // |k1| + |k2| ≤ 3 minus the identity
        assert_eq!(enumerate_elements(&gens, 3).len(), 24);
    }

    /// Commuting rotations sharing a random eigenbasis, translations consistent
    /// with a common centre `Λ`, plus random fixed-space translations.
    pub(crate) fn random_virtually_abelian(
        rng: &mut ChaCha8Rng,
        m: usize,
        count: usize,
    ) -> ParabolicGroupInput {
        let q = random_unitary(rng, m);
        let fixed = rng.random_range(0..=m);
        let centre = CVector::from_fn(m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let gens = (0..count)
            .map(|_| {
                let d = CVector::from_fn(m, |i, _| {
                    if i < fixed {
                        c(1.0, 0.0)
                    } else {
                        Complex64::from_polar(1.0, rng.random_range(0.3..6.0))
                    }
                });
                let t = &q * CMatrix::from_diagonal(&d) * q.adjoint();
                let w = CVector::from_fn(m, |i, _| {
                    if i < fixed {
                        c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
                    } else {
                        c(0.0, 0.0)
                    }
                });
                let b = (CMatrix::identity(m, m) - &t) * &centre + &q * w;
                HeisenbergElement::new(t, b, rng.random_range(-2.0..2.0)).unwrap()
            })
            .collect();
        ParabolicGroupInput::new(gens).unwrap()
    }

    #[test]
    fn split_is_exact_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let m = rng.random_range(1..4);
            let count = rng.random_range(1..4);
            let input = random_virtually_abelian(&mut rng, m, count);
            let a = analyze(&input, 5).unwrap();
            assert!(a.caveats.iter().all(|c| !matches!(c, Caveat::TranslationResidual { .. })));
            let p_perp = CMatrix::identity(m, m) - &a.fixed_basis * a.fixed_basis.adjoint();
            for j in 0..count {
                let (e_j, u_j) = (&a.elliptic_parts[j], &a.unipotent_parts[j]);
                assert_eq!(vec_norm(&e_j.b), 0.0);
                assert_eq!(e_j.c, 0.0);
                assert_eq!(u_j.rotation_defect(), 0.0);
                let prod = (e_j * u_j).embed();
                assert!(frobenius(&(prod.matrix() - a.conjugated[j].embed().matrix())) < 1e-10);
                assert!(vec_norm(&(&p_perp * &a.conjugated[j].b)) < 1e-10);
                for u in &a.unipotent_parts {
                    assert!(e_j.commutator(u).is_identity(1e-10));
                }
            }
            let gram = a.fixed_basis.adjoint() * &a.fixed_basis;
            let k = a.fixed_basis.ncols();
            assert!(frobenius(&(gram - CMatrix::identity(k, k))) < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn conjugation_covariance(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.random_range(1..4);
            let input = random_virtually_abelian(&mut rng, m, 3);
            let h = random_element(&mut rng, m);
            let conj: Vec<_> = input.generators.iter().map(|g| &(&h * g) * &h.inverse()).collect();
            let a = analyze(&input, seed).unwrap();
            let b = analyze(&ParabolicGroupInput::new(conj).unwrap(), seed).unwrap();
            prop_assert_eq!(
                (a.totally_real, a.stein, a.l, a.k, a.delta),
                (b.totally_real, b.stein, b.l, b.k, b.delta)
            );
        }

        #[test]
        fn generating_set_stability(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.random_range(1..4);
            let count = rng.random_range(1..4);
            let input = random_virtually_abelian(&mut rng, m, count);
            let a = analyze(&input, seed).unwrap();
            let mut gens = input.generators.clone();
            for _ in 0..3 {
                let len = rng.random_range(1..5);
                let word = Word((0..len).map(|_| {
                    let k = rng.random_range(1..=count as i32);
                    if rng.random::<bool>() { k } else { -k }
                }).collect());
                gens.push(word.evaluate(&input.generators).unwrap());
            }
            let b = analyze(&ParabolicGroupInput::new(gens).unwrap(), seed).unwrap();
            prop_assert_eq!(a.dim_fixed(), b.dim_fixed());
            prop_assert_eq!(
                (a.totally_real, a.stein, a.l, a.k, a.delta),
                (b.totally_real, b.stein, b.l, b.k, b.delta)
            );
        }
    }
}
