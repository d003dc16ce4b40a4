//! The Hermitian-form model of complex hyperbolic space.
//!
//! Points are complex lines in `C^{n+1}` on which the form is negative. Two
//! bases are supported: the *ball* basis, where `q(z) = -|z_0|^2 + Σ|z_i|^2`,
//! and the *Siegel* basis `(f1, f2, e1, …, e_{n-1})` adapted to the boundary
//! point `[f1]`, where `q(a f1 + β f2 + u) = 2 Re(a β̄) + ‖u‖^2`.
//!
//! The form `h` is linear in its first argument and conjugate-linear in the
//! second: `h(v, w) = w* G v`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use crate::linalg::{CMatrix, CVector};
use crate::linalg::{c, cluster_indices, eigenvalues, frobenius, max_abs, singular_values};

/// A lift `v` is a boundary point when `|q(v)| / ‖v‖² < BOUNDARY_TOL`.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Relative tolerance on eigenvalue moduli and on the rank test in `classify`.
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Relative tolerance accepted for `g* G g = G`.
pub const FORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Ball,
    Siegel,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Ball => "ball",
            Basis::Siegel => "siegel",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IsometryClass {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl fmt::Display for IsometryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IsometryClass::Identity => "identity",
            IsometryClass::Elliptic => "elliptic",
            IsometryClass::Parabolic => "parabolic",
            IsometryClass::Loxodromic => "loxodromic",
        })
    }
}

/// A point of `CP^n`, stored through one of its lifts.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectivePoint {
    pub coords: CVector,
}

impl ProjectivePoint {
    pub fn new(coords: CVector) -> Self {
        Self { coords }
    }

    pub fn from_slice(coords: &[Complex64]) -> Self {
        Self::new(CVector::from_column_slice(coords))
    }

    /// The ball-basis point `[1 : z]`.
    pub fn ball(z: &[Complex64]) -> Self {
        let mut v = Vec::with_capacity(z.len() + 1);
        v.push(c(1.0, 0.0));
        v.extend_from_slice(z);
        Self::from_slice(&v)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Coordinates `(a, u)` of the Siegel chart `(a, u) ↦ [a f1 + f2 + u]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiegelPoint {
    pub a: Complex64,
    pub u: CVector,
}

impl SiegelPoint {
    pub fn new(a: Complex64, u: CVector) -> Self {
        Self { a, u }
    }

    /// `2 Re(a) + ‖u‖²`, negative exactly on the interior.
    pub fn height(&self) -> f64 {
        2.0 * self.a.re + self.u.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// An element of `U(n,1)` written in a given basis, understood up to a unit scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: CMatrix,
    basis: Basis,
}

impl Isometry {
    /// Wraps `matrix` without checking that it preserves the form.
    pub fn from_matrix_unchecked(basis: Basis, matrix: CMatrix) -> Self {
        Self { matrix, basis }
    }

    pub fn identity(model: &HermitianModel) -> Self {
        let m = model.size();
        Self::from_matrix_unchecked(model.basis(), CMatrix::identity(m, m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        debug_assert_eq!(self.basis, other.basis);
        Isometry::from_matrix_unchecked(self.basis, &self.matrix * &other.matrix)
    }

    /// `G⁻¹ g* G`; both Gram matrices are involutions.
    pub fn inverse(&self) -> Isometry {
        let g = gram(self.basis, self.size());
        Isometry::from_matrix_unchecked(self.basis, &g * self.matrix.adjoint() * &g)
    }

    pub fn apply(&self, p: &ProjectivePoint) -> ProjectivePoint {
        ProjectivePoint::new(&self.matrix * &p.coords)
    }

    /// Relative defect `‖g* G g − G‖ / max(1, ‖g‖²)`.
    pub fn form_defect(&self) -> f64 {
        let g = gram(self.basis, self.size());
        let d = self.matrix.adjoint() * &g * &self.matrix - &g;
        let scale = frobenius(&self.matrix).powi(2).max(1.0);
        frobenius(&d) / scale
    }

    /// Representative with the phase fixed: the first entry (column-major)
    /// whose modulus is within a relative `1e-6` of the largest becomes
    /// real-positive. The modulus normalization is left untouched.
    pub fn canonical(&self) -> CMatrix {
        canonical_phase(&self.matrix)
    }

    pub fn to_basis(&self, target: Basis) -> Isometry {
        if target == self.basis {
            return self.clone();
        }
        let p = siegel_to_ball_matrix(self.size());
        let m = match target {
            Basis::Ball => &p * &self.matrix * p.adjoint(),
            Basis::Siegel => p.adjoint() * &self.matrix * &p,
        };
        Isometry::from_matrix_unchecked(target, m)
    }
}

pub(crate) fn canonical_phase(m: &CMatrix) -> CMatrix {
    let top = max_abs(m);
    if top == 0.0 {
        return m.clone();
    }
    let pivot = m
        .iter()
        .find(|z| z.norm() >= (1.0 - 1e-6) * top)
        .copied()
        .unwrap_or(c(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    m.map(|z| z * phase)
}

/// Gram matrix of the form in the given basis, of size `size × size`.
pub fn gram(basis: Basis, size: usize) -> CMatrix {
    let mut g = CMatrix::identity(size, size);
    match basis {
        Basis::Ball => g[(0, 0)] = c(-1.0, 0.0),
        Basis::Siegel => {
            g[(0, 0)] = c(0.0, 0.0);
            g[(1, 1)] = c(0.0, 0.0);
            g[(0, 1)] = c(1.0, 0.0);
            g[(1, 0)] = c(1.0, 0.0);
        }
    }
    g
}

/// Columns are the Siegel basis vectors expressed in ball coordinates:
/// `f1 = (e0 + e1)/√2`, `f2 = (e1 − e0)/√2`, `e_i ↦ e_{i+1}`. Unitary.
pub fn siegel_to_ball_matrix(size: usize) -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = CMatrix::identity(size, size);
    p[(0, 0)] = c(r, 0.0);
    p[(1, 0)] = c(r, 0.0);
    p[(0, 1)] = c(-r, 0.0);
    p[(1, 1)] = c(r, 0.0);
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HermitianModel {
    n: usize,
    basis: Basis,
}

impl HermitianModel {
    pub fn new(n: usize, basis: Basis) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedDimension(n));
        }
        Ok(Self { n, basis })
    }

    pub fn ball(n: usize) -> Result<Self> {
        Self::new(n, Basis::Ball)
    }

    pub fn siegel(n: usize) -> Result<Self> {
        Self::new(n, Basis::Siegel)
    }

    /// Complex dimension of the ball.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Length of lifts, `n + 1`.
    pub fn size(&self) -> usize {
        self.n + 1
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn gram(&self) -> CMatrix {
        gram(self.basis, self.size())
    }

    /// Change of basis taking Siegel coordinates to ball coordinates.
    pub fn siegel_to_ball(&self) -> CMatrix {
        siegel_to_ball_matrix(self.size())
    }

    fn check_len(&self, v: &CVector) -> Result<()> {
        if v.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn check_isometry(&self, g: &Isometry) -> Result<()> {
        if g.size() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: g.size(),
            });
        }
        Ok(())
    }

    /// Coordinates of a lift in the ball basis.
    pub fn to_ball_coords(&self, v: &CVector) -> CVector {
        match self.basis {
            Basis::Ball => v.clone(),
            Basis::Siegel => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let mut w = v.clone();
                w[0] = (v[0] - v[1]) * r;
                w[1] = (v[0] + v[1]) * r;
                w
            }
        }
    }

    /// Coordinates of a ball-basis lift in this model's basis.
    pub fn from_ball_coords(&self, v: &CVector) -> CVector {
        match self.basis {
            Basis::Ball => v.clone(),
            Basis::Siegel => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let mut w = v.clone();
                w[0] = (v[0] + v[1]) * r;
                w[1] = (v[1] - v[0]) * r;
                w
            }
        }
    }

    /// `h(v, w)`, linear in `v` and conjugate-linear in `w`.
    pub fn form_eval(&self, v: &CVector, w: &CVector) -> Result<Complex64> {
        self.check_len(v)?;
        self.check_len(w)?;
        Ok(form(self.basis, v, w))
    }

    pub fn q(&self, v: &CVector) -> f64 {
        form(self.basis, v, v).re
    }

    pub fn point_kind(&self, p: &ProjectivePoint) -> PointKind {
        let norm2: f64 = p.coords.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return PointKind::Boundary;
        }
        let rel = self.q(&p.coords) / norm2;
        if rel.abs() < BOUNDARY_TOL {
            PointKind::Boundary
        } else if rel < 0.0 {
            PointKind::Interior
        } else {
            PointKind::Exterior
        }
    }

    pub fn check_interior(&self, p: &ProjectivePoint) -> Result<()> {
        self.check_len(&p.coords)?;
        match self.point_kind(p) {
            PointKind::Interior => Ok(()),
            _ => {
                let norm2: f64 = p.coords.iter().map(|z| z.norm_sqr()).sum();
                Err(Error::NotInterior(if norm2 > 0.0 {
                    self.q(&p.coords) / norm2
                } else {
                    0.0
                }))
            }
        }
    }

    /// The ball origin; in the Siegel basis this is the chart point `(−1, 0)`.
    pub fn origin(&self) -> ProjectivePoint {
        let mut v = CVector::zeros(self.size());
        v[0] = c(1.0, 0.0);
        ProjectivePoint::new(self.from_ball_coords(&v))
    }

    /// Hyperbolic distance, from `cosh² d = |h(x,y)|² / (q(x) q(y))`.
    ///
    /// Evaluated through `sinh² d`, expanded into 2×2 minors of the ball-basis
    /// lifts, so that nearby points do not lose precision to cancellation.
    pub fn distance(&self, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
        self.check_interior(x)?;
        self.check_interior(y)?;
        let xb = self.to_ball_coords(&x.coords);
        let yb = self.to_ball_coords(&y.coords);
        Ok(ball_distance(&xb, &yb))
    }

    /// Classifies `g` by the moduli of its eigenvalues and its Jordan structure.
    pub fn classify(&self, g: &Isometry) -> Result<IsometryClass> {
        self.check_isometry(g)?;
        let m = self.size();
        let det = g.matrix().determinant().norm();
        if !(det.is_finite() && det > 0.0) {
            return Err(Error::NotFormPreserving(f64::INFINITY));
        }
        let scaled = g.matrix() / c(det.powf(1.0 / m as f64), 0.0);
        let g = Isometry::from_matrix_unchecked(g.basis(), scaled);
        let defect = g.form_defect();
        if defect > FORM_TOL {
            return Err(Error::NotFormPreserving(defect));
        }
        let a = g.matrix();
        let norm = frobenius(a);
        let mean_diag = a.diagonal().iter().sum::<Complex64>() / c(m as f64, 0.0);
        if frobenius(&(a - CMatrix::identity(m, m) * mean_diag)) <= CLASSIFY_TOL * norm {
            return Ok(IsometryClass::Identity);
        }

        let ev = eigenvalues(a)?;
        // perturbed Jordan blocks of size ≤ 3 split eigenvalues by ~ (ε‖g‖)^{1/3}
        let cluster_tol = (10.0 * (f64::EPSILON * norm).cbrt()).max(1e-6);
        let clusters = cluster_indices(&ev, cluster_tol);
        for cl in &clusters {
            let log_mod: f64 = cl.iter().map(|&i| ev[i].norm().ln()).sum::<f64>() / cl.len() as f64;
            if log_mod.abs() > CLASSIFY_TOL {
                return Ok(IsometryClass::Loxodromic);
            }
        }
        for cl in &clusters {
            let mu = cl.iter().map(|&i| ev[i]).sum::<Complex64>() / c(cl.len() as f64, 0.0);
            let shifted = a - CMatrix::identity(m, m) * mu;
            let sv = singular_values(&shifted);
            let nullity = sv.iter().filter(|&&s| s <= CLASSIFY_TOL * norm).count();
            if nullity < cl.len() {
                return Ok(IsometryClass::Parabolic);
            }
        }
        Ok(IsometryClass::Elliptic)
    }

    /// `(a, u) ↦ [a f1 + f2 + u]`, in this model's basis.
    pub fn siegel_to_projective(&self, p: &SiegelPoint) -> Result<ProjectivePoint> {
        if p.u.len() != self.n - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n - 1,
                found: p.u.len(),
            });
        }
        let h = p.height();
        if h.is_nan() || h >= 0.0 {
            return Err(Error::NotInterior(h));
        }
        let mut v = CVector::zeros(self.size());
        v[0] = p.a;
        v[1] = c(1.0, 0.0);
        for (i, z) in p.u.iter().enumerate() {
            v[i + 2] = *z;
        }
        Ok(ProjectivePoint::new(match self.basis {
            Basis::Siegel => v,
            Basis::Ball => siegel_to_ball_matrix(self.size()) * v,
        }))
    }

    /// Inverse of [`siegel_to_projective`](Self::siegel_to_projective).
    pub fn projective_to_siegel(&self, x: &ProjectivePoint) -> Result<SiegelPoint> {
        self.check_interior(x)?;
        let siegel = HermitianModel {
            n: self.n,
            basis: Basis::Siegel,
        };
        let v = siegel.from_ball_coords(&self.to_ball_coords(&x.coords));
        // interior points always have a nonzero f2-coefficient
        let beta = v[1];
        let a = v[0] / beta;
        let u = CVector::from_iterator(self.n - 1, v.iter().skip(2).map(|z| z / beta));
        Ok(SiegelPoint::new(a, u))
    }

    /// The transvection along the geodesic from the ball origin to `x`,
    /// mapping the origin to `x`.
    pub fn transvection_to(&self, x: &ProjectivePoint) -> Result<Isometry> {
        self.check_interior(x)?;
        let xb = self.to_ball_coords(&x.coords);
        let z: Vec<Complex64> = xb.iter().skip(1).map(|w| w / xb[0]).collect();
        let b = ball_boost(&z);
        Ok(Isometry::from_matrix_unchecked(Basis::Ball, b).to_basis(self.basis))
    }
}

fn form(basis: Basis, v: &CVector, w: &CVector) -> Complex64 {
    match basis {
        Basis::Ball => {
            let mut s = -v[0] * w[0].conj();
            for i in 1..v.len() {
                s += v[i] * w[i].conj();
            }
            s
        }
        Basis::Siegel => {
            let mut s = v[0] * w[1].conj() + v[1] * w[0].conj();
            for i in 2..v.len() {
                s += v[i] * w[i].conj();
            }
            s
        }
    }
}

/// Distance between two interior ball-basis lifts (no interior check).
pub(crate) fn ball_distance(x: &CVector, y: &CVector) -> f64 {
    let m = x.len();
    let mut num = 0.0;
    for j in 1..m {
        num += (x[0] * y[j] - x[j] * y[0]).norm_sqr();
    }
    for i in 1..m {
        for j in (i + 1)..m {
            num -= (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    let qx = form(Basis::Ball, x, x).re;
    let qy = form(Basis::Ball, y, y).re;
    minors_to_distance(num, qx * qy)
}

/// As [`ball_distance`] for lifts whose form values are already known; far
/// orbit points lose precision when `q` is recomputed from their entries.
pub(crate) fn ball_distance_known_q(x: &[Complex64], qx: f64, y: &[Complex64], qy: f64) -> f64 {
    let m = x.len();
    let mut num = 0.0;
    for j in 1..m {
        num += (x[0] * y[j] - x[j] * y[0]).norm_sqr();
    }
    for i in 1..m {
        for j in (i + 1)..m {
            num -= (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    minors_to_distance(num, qx * qy)
}

/// `q` of a ball-basis lift.
pub(crate) fn ball_q(v: &CVector) -> f64 {
    form(Basis::Ball, v, v).re
}

fn minors_to_distance(num: f64, qq: f64) -> f64 {
    let sinh2 = (num / qq).max(0.0);
    sinh2.sqrt().asinh()
}

/// Ball-basis boost taking the origin to `[1 : z]`, `|z| < 1`.
pub(crate) fn ball_boost(z: &[Complex64]) -> CMatrix {
    let n = z.len();
    let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    let gamma = 1.0 / (1.0 - r2).sqrt();
    let mut b = CMatrix::identity(n + 1, n + 1);
    b[(0, 0)] = c(gamma, 0.0);
    for i in 0..n {
        b[(i + 1, 0)] = z[i] * gamma;
        b[(0, i + 1)] = z[i].conj() * gamma;
    }
    if r2 > 0.0 {
        let k = (gamma - 1.0) / r2;
        for i in 0..n {
            for j in 0..n {
                b[(i + 1, j + 1)] += z[i] * z[j].conj() * k;
            }
        }
    }
    b
}

/// `b(a, u) = ½ ln(−2 / (2 Re a + ‖u‖²))`, the Busemann function of `[f1]`
/// normalized to vanish at `(−1, 0)`.
pub fn busemann_siegel(p: &SiegelPoint) -> Result<f64> {
    let h = p.height();
    if h.is_nan() || h >= 0.0 {
        return Err(Error::NotInterior(h));
    }
    Ok(0.5 * (-2.0 / h).ln())
}

/// The Siegel-basis map `L_t = Id + t E_{12}` with `t = e^{−2λ} − e^{−2μ}`,
/// taking the horoball `{b < λ}` at `[f1]` onto `{b < μ}`.
///
/// `L_t` is a biholomorphism of projective space but not an isometry, so
/// its form defect is not small.
pub fn horoball_translate(n: usize, lambda: f64, mu: f64) -> Result<Isometry> {
    let model = HermitianModel::siegel(n)?;
    let t = (-2.0 * lambda).exp() - (-2.0 * mu).exp();
    let mut m = CMatrix::identity(model.size(), model.size());
    m[(0, 1)] = c(t, 0.0);
    Ok(Isometry::from_matrix_unchecked(Basis::Siegel, m))
}

/// The Siegel-basis loxodromic `diag(e^t, e^{−t}, 1, …)` of translation length `t`.
pub fn siegel_dilation(n: usize, t: f64) -> Isometry {
    let mut m = CMatrix::identity(n + 1, n + 1);
    m[(0, 0)] = c(t.exp(), 0.0);
    m[(1, 1)] = c((-t).exp(), 0.0);
    Isometry::from_matrix_unchecked(Basis::Siegel, m)
}

/// The ball-basis hyperbolic boost of translation length `t` along the
/// complex line spanned by `e0` and `e_axis` (`axis ≥ 1`).
pub fn ball_axis_boost(n: usize, axis: usize, t: f64) -> Isometry {
    let mut m = CMatrix::identity(n + 1, n + 1);
    m[(0, 0)] = c(t.cosh(), 0.0);
    m[(axis, axis)] = c(t.cosh(), 0.0);
    m[(0, axis)] = c(t.sinh(), 0.0);
    m[(axis, 0)] = c(t.sinh(), 0.0);
    Isometry::from_matrix_unchecked(Basis::Ball, m)
}
