//! Finite atomic Patterson–Sullivan densities.
//!
//! Atoms sit at the orbit points `γo` of an [`OrbitCloud`] with weights
//! `e^{−s d(o, γo)} / Φ(s)`. The mass seen from `x` is
//! `‖μ_x‖ = Σ e^{−s d(x, γo)} / Φ(s)` and `f = −ln ‖μ_x‖` is the log-mass
//! function whose complex Hessian is probed by finite differences along
//! geodesics.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponent::OrbitCloud;
use crate::geometry::{ball_distance_known_q, ball_q, HermitianModel, Isometry, ProjectivePoint};
use crate::linalg::{c, vec_norm, CVector, I};

/// Offset added to the exponent estimate to build the density.
pub const EXPONENT_OFFSET: f64 = 0.05;
/// Default finite-difference step, in length units.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Tolerance subtracted from the Levi threshold in grid checks.
pub const LEVI_TOLERANCE: f64 = 0.15;

#[derive(Clone, Debug)]
pub struct DensityApprox {
    model: HermitianModel,
    exponent: f64,
    normalization: f64,
    /// Ball-basis atoms with `q = −1`, flat.
    atoms: Vec<Complex64>,
    weights: Vec<f64>,
    outer: Vec<bool>,
}

impl DensityApprox {
    pub fn new(cloud: &OrbitCloud, exponent: f64) -> Result<Self> {
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponent {exponent}")));
        }
        let raw: Vec<f64> = cloud
            .records()
            .iter()
            .map(|r| (-exponent * r.displacement).exp())
            .collect();
        let normalization: f64 = raw.iter().sum();
        Ok(Self {
            model: *cloud.model(),
            exponent,
            normalization,
            atoms: cloud.raw_points().to_vec(),
            weights: raw.iter().map(|w| w / normalization).collect(),
            outer: cloud.records().iter().map(|r| r.outer).collect(),
        })
    }

    /// Density at exponent `delta_estimate + EXPONENT_OFFSET`.
    pub fn from_estimate(cloud: &OrbitCloud, delta_estimate: f64) -> Result<Self> {
        Self::new(cloud, delta_estimate.max(0.0) + EXPONENT_OFFSET)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn model(&self) -> &HermitianModel {
        &self.model
    }

    pub fn atom_count(&self) -> usize {
        self.weights.len()
    }

    fn ball_lift(&self, x: &ProjectivePoint) -> Result<(CVector, f64)> {
        self.model.check_interior(x)?;
        let xb = self.model.to_ball_coords(&x.coords);
        let q = ball_q(&xb);
        Ok((xb, q))
    }

    fn sums(&self, x: &ProjectivePoint) -> Result<(f64, f64)> {
        let (xb, qx) = self.ball_lift(x)?;
        let m = self.model.size();
        let mut total = 0.0;
        let mut outer = 0.0;
        for (i, atom) in self.atoms.chunks_exact(m).enumerate() {
            let d = ball_distance_known_q(xb.as_slice(), qx, atom, -1.0);
            let w = (-self.exponent * d).exp();
            total += w;
            if self.outer[i] {
                outer += w;
            }
        }
        Ok((total / self.normalization, outer / self.normalization))
    }

    /// `‖μ_x‖ = Σ e^{−s d(x, γo)} / Φ(s)`.
    pub fn mass_at(&self, x: &ProjectivePoint) -> Result<f64> {
        Ok(self.sums(x)?.0)
    }

    /// `f(x) = −ln ‖μ_x‖`.
    pub fn log_mass(&self, x: &ProjectivePoint) -> Result<f64> {
        Ok(-self.mass_at(x)?.ln())
    }

    /// Bound on `|f(y) − f(x)|` for `y = γx`, `γ` a generator, coming from
    /// atoms whose translates may fall outside the cloud.
    pub fn invariance_bound(&self, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
        let (mx, ox) = self.sums(x)?;
        let (my, oy) = self.sums(y)?;
        Ok((ox + oy) / mx.min(my))
    }
}

/// Moves `x` by arclength `t` along the geodesic toward `toward`.
///
/// `x` is carried to the ball origin by a transvection, where geodesics are
/// the straight lines `r ↦ tanh(r) u`, and carried back.
pub fn geodesic_step(
    model: &HermitianModel,
    x: &ProjectivePoint,
    toward: &ProjectivePoint,
    t: f64,
) -> Result<ProjectivePoint> {
    let frame = Frame::at(model, x)?;
    let u = frame.direction_to(toward)?;
    frame.point(&u, t)
}

/// Transvection frame at an interior point.
struct Frame<'a> {
    model: &'a HermitianModel,
    boost: Isometry,
}

impl<'a> Frame<'a> {
    fn at(model: &'a HermitianModel, x: &ProjectivePoint) -> Result<Self> {
        Ok(Self {
            model,
            boost: model.transvection_to(x)?,
        })
    }

    /// Unit vector at the origin pointing toward the pulled-back `toward`.
    fn direction_to(&self, toward: &ProjectivePoint) -> Result<CVector> {
        self.model.check_interior(toward)?;
        let back = self.boost.inverse().apply(toward);
        let yb = self.model.to_ball_coords(&back.coords);
        let w = CVector::from_iterator(yb.len() - 1, yb.iter().skip(1).map(|z| z / yb[0]));
        let r = vec_norm(&w);
        if r < 1e-14 {
            return Err(Error::DegenerateDirection);
        }
        Ok(w / c(r, 0.0))
    }

    fn point(&self, u: &CVector, t: f64) -> Result<ProjectivePoint> {
        let mut v = CVector::zeros(u.len() + 1);
        v[0] = c(1.0, 0.0);
        let r = t.tanh();
        for i in 0..u.len() {
            v[i + 1] = u[i] * r;
        }
        let local = ProjectivePoint::new(self.model.from_ball_coords(&v));
        let p = self.boost.apply(&local);
        self.model.check_interior(&p)?;
        Ok(p)
    }
}

/// A finite-difference stencil at `x` for the unit tangent `v` (a unit
/// vector of the origin frame after transvection) and its partner `Jv`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeviProbe {
    pub x: ProjectivePoint,
    pub direction: CVector,
    pub step: f64,
}

impl LeviProbe {
    /// The direction is that of the geodesic from `x` toward `toward`.
    pub fn new(
        model: &HermitianModel,
        x: &ProjectivePoint,
        toward: &ProjectivePoint,
        step: f64,
    ) -> Result<Self> {
        let u = Frame::at(model, x)?.direction_to(toward)?;
        Self::from_tangent(model, x, u, step)
    }

    pub fn from_tangent(
        model: &HermitianModel,
        x: &ProjectivePoint,
        direction: CVector,
        step: f64,
    ) -> Result<Self> {
        model.check_interior(x)?;
        if direction.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: direction.len(),
            });
        }
        if !(step > 0.0 && step < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "stencil step {step} outside (0, 0.5)"
            )));
        }
        let r = vec_norm(&direction);
        if r < 1e-14 {
            return Err(Error::DegenerateDirection);
        }
        Ok(Self {
            x: x.clone(),
            direction: direction / c(r, 0.0),
            step,
        })
    }

    /// `[x, exp(hv), exp(−hv), exp(hJv), exp(−hJv)]`.
    pub fn stencil(&self, model: &HermitianModel) -> Result<[ProjectivePoint; 5]> {
        let frame = Frame::at(model, &self.x)?;
        let h = self.step;
        let jv = &self.direction * I;
        Ok([
            self.x.clone(),
            frame.point(&self.direction, h)?,
            frame.point(&self.direction, -h)?,
            frame.point(&jv, h)?,
            frame.point(&jv, -h)?,
        ])
    }
}

/// `[φ(hv) − 2φ + φ(−hv) + φ(hJv) − 2φ + φ(−hJv)] / (2h²)` for any function.
pub fn levi_estimate(
    model: &HermitianModel,
    probe: &LeviProbe,
    f: impl Fn(&ProjectivePoint) -> Result<f64>,
) -> Result<f64> {
    let [x, pv, mv, pj, mj] = probe.stencil(model)?;
    let f0 = f(&x)?;
    let second = f(&pv)? - 2.0 * f0 + f(&mv)? + f(&pj)? - 2.0 * f0 + f(&mj)?;
    Ok(second / (2.0 * probe.step * probe.step))
}

/// Finite-difference estimate of the Levi form of `f = −ln ‖μ_x‖` on `(v, Jv)`.
pub fn levi_lower_bound(density: &DensityApprox, probe: &LeviProbe) -> Result<f64> {
    levi_estimate(density.model(), probe, |p| density.log_mass(p))
}

/// `s (1 − s/2)`, the lower bound expected for the Levi form of the log-mass.
pub fn levi_threshold(s: f64) -> f64 {
    s * (1.0 - s / 2.0)
}

/// Random probe points around a center, each with several unit directions.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeGrid {
    pub points: Vec<ProjectivePoint>,
    pub directions: Vec<Vec<CVector>>,
    pub seed: u64,
}

impl ProbeGrid {
    /// `points` points at distance at most `spread` from `center`, each with
    /// `directions` random unit tangents.
    pub fn random(
        model: &HermitianModel,
        center: &ProjectivePoint,
        points: usize,
        directions: usize,
        spread: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = Frame::at(model, center)?;
        let n = model.dim();
        let mut pts = Vec::with_capacity(points);
        let mut dirs = Vec::with_capacity(points);
        for _ in 0..points {
            let u = random_unit(&mut rng, n);
            let t = spread * rng.random::<f64>();
            pts.push(frame.point(&u, t)?);
            dirs.push((0..directions).map(|_| random_unit(&mut rng, n)).collect());
        }
        Ok(Self {
            points: pts,
            directions: dirs,
            seed,
        })
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let r = vec_norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v / c(r, 0.0);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub point_index: usize,
    pub direction_index: usize,
    /// Ball-chart coordinates of the probe point.
    pub chart: Vec<Complex64>,
    pub estimate: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub threshold: f64,
    pub min_estimate: f64,
    pub pass: bool,
}

impl ProbeReport {
    /// Runs every probe of the grid; passes when each estimate reaches `threshold`.
    pub fn run(
        density: &DensityApprox,
        grid: &ProbeGrid,
        step: f64,
        threshold: f64,
    ) -> Result<Self> {
        let model = *density.model();
        let jobs: Vec<(usize, usize)> = grid
            .directions
            .iter()
            .enumerate()
            .flat_map(|(i, ds)| (0..ds.len()).map(move |j| (i, j)))
            .collect();
        let rows = jobs
            .par_iter()
            .map(|&(i, j)| {
                let probe = LeviProbe::from_tangent(
                    &model,
                    &grid.points[i],
                    grid.directions[i][j].clone(),
                    step,
                )?;
                let estimate = levi_lower_bound(density, &probe)?;
                let xb = model.to_ball_coords(&grid.points[i].coords);
                let chart = xb.iter().skip(1).map(|z| z / xb[0]).collect();
                Ok(ProbeRow {
                    point_index: i,
                    direction_index: j,
                    chart,
                    estimate,
                    threshold,
                    pass: estimate >= threshold,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let min_estimate = rows.iter().map(|r| r.estimate).fold(f64::INFINITY, f64::min);
        Ok(Self {
            pass: rows.iter().all(|r| r.pass),
            rows,
            threshold,
            min_estimate,
        })
    }

    /// CSV with columns `point_index,point,direction_index,levi_estimate,threshold,pass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "point_index,point,direction_index,levi_estimate,threshold,pass")?;
        for r in &self.rows {
            let point: Vec<String> = r
                .chart
                .iter()
                .map(|z| format!("[{}, {}]", z.re, z.im))
                .collect();
            writeln!(
                w,
                "{},\"{}\",{},{},{},{}",
                r.point_index,
                point.join(" "),
                r.direction_index,
                r.estimate,
                r.threshold,
                r.pass
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{enumerate_orbit, estimate_delta, GroupSpec};
    use crate::geometry::{ball_axis_boost, siegel_dilation, Basis};

    fn ball(z: &[(f64, f64)]) -> ProjectivePoint {
        let v: Vec<Complex64> = z.iter().map(|&(a, b)| c(a, b)).collect();
        ProjectivePoint::ball(&v)
    }

    fn single_atom(model: HermitianModel, s: f64) -> DensityApprox {
        let spec = GroupSpec::new(model, vec![siegel_dilation(2, 1.0).to_basis(model.basis())], None).unwrap();
        let cloud = enumerate_orbit(&spec, 0, 10).unwrap();
        DensityApprox::new(&cloud, s).unwrap()
    }

    fn schottky() -> GroupSpec {
        let model = HermitianModel::ball(2).unwrap();
        GroupSpec::new(
            model,
            vec![ball_axis_boost(2, 1, 3.0), ball_axis_boost(2, 2, 3.0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn geodesic_step_examples() {
        let model = HermitianModel::ball(2).unwrap();
        let o = model.origin();
        assert_eq!(geodesic_step(&model, &o, &ball(&[(0.9, 0.0), (0.0, 0.0)]), 0.0).unwrap(), o);
        let p = geodesic_step(&model, &o, &ball(&[(0.9, 0.0), (0.0, 0.0)]), 0.5f64.atanh()).unwrap();
        let z = p.coords[1] / p.coords[0];
        assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(
            geodesic_step(&model, &o, &o, 1.0),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn geodesic_step_moves_by_arclength_and_adds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for basis in [Basis::Ball, Basis::Siegel] {
            let model = HermitianModel::new(2, basis).unwrap();
            for _ in 0..50 {
                let lift = |v: ProjectivePoint| ProjectivePoint::new(model.from_ball_coords(&v.coords));
                let x = lift(ball(&[(rng.random_range(-0.5..0.5), 0.1), (0.2, rng.random_range(-0.5..0.5))]));
                let y = lift(ball(&[(0.6, rng.random_range(-0.3..0.3)), (-0.3, 0.1)]));
                let t = rng.random_range(0.0..0.3);
                let t2 = rng.random_range(0.0..0.3);
                let p = geodesic_step(&model, &x, &y, t).unwrap();
                assert!((model.distance(&x, &p).unwrap() - t).abs() < 1e-10);
                let pp = geodesic_step(&model, &p, &y, t2).unwrap();
                let direct = geodesic_step(&model, &x, &y, t + t2).unwrap();
                assert!(model.distance(&pp, &direct).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn mass_examples() {
        let model = HermitianModel::ball(2).unwrap();
        let d = single_atom(model, 1.3);
        let o = model.origin();
        assert!((d.mass_at(&o).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(d.log_mass(&o).unwrap(), 0.0);
        let x = ball(&[(0.3, 0.2), (-0.1, 0.4)]);
        let dist = model.distance(&o, &x).unwrap();
        assert!((d.mass_at(&x).unwrap() - (-1.3 * dist).exp()).abs() < 1e-14);
        assert!((d.log_mass(&x).unwrap() - 1.3 * dist).abs() < 1e-12);
        assert!(d.mass_at(&ball(&[(1.0, 0.0), (0.0, 0.0)])).is_err());
    }

    #[test]
    fn weights_are_normalized_at_the_basepoint() {
        let cloud = enumerate_orbit(&schottky(), 4, 10_000).unwrap();
        let d = DensityApprox::new(&cloud, 0.45).unwrap();
        assert!(d.weights().iter().all(|&w| w > 0.0));
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d.mass_at(&cloud.model().origin()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stencil_self_test_on_squared_distance() {
        let model = HermitianModel::ball(2).unwrap();
        let o = model.origin();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let probe = LeviProbe::from_tangent(&model, &o, random_unit(&mut rng, 2), 1e-3).unwrap();
            let v = levi_estimate(&model, &probe, |p| Ok(model.distance(&o, p)?.powi(2))).unwrap();
            assert!((v - 2.0).abs() < 1e-2, "{v}");
        }
        assert!(LeviProbe::from_tangent(&model, &o, random_unit(&mut rng, 2), 0.6).is_err());
    }

    #[test]
    fn single_atom_levi_is_positive_and_converges() {
        let model = HermitianModel::ball(2).unwrap();
        let d = single_atom(model, 1.0);
        let x = ball(&[(1f64.tanh(), 0.0), (0.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unit(&mut rng, 2);
        let probe = LeviProbe::from_tangent(&model, &x, u.clone(), DEFAULT_STEP).unwrap();
        assert!(levi_lower_bound(&d, &probe).unwrap() > 0.0);

        let est: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let p = LeviProbe::from_tangent(&model, &x, u.clone(), h).unwrap();
                levi_lower_bound(&d, &p).unwrap()
            })
            .collect();
        let ratio = (est[1] - est[0]) / (est[2] - est[1]);
        let ratio2 = (est[2] - est[1]) / (est[3] - est[2]);
        assert!((2.5..=5.5).contains(&ratio), "{ratio}");
        assert!((2.5..=5.5).contains(&ratio2), "{ratio2}");
    }

    #[test]
    fn partner_direction_is_orthogonal_with_equal_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = HermitianModel::siegel(3).unwrap();
        for _ in 0..20 {
            let xb = ball(&[(rng.random_range(-0.5..0.5), 0.2), (0.1, -0.3), (0.0, rng.random_range(-0.4..0.4))]);
            let x = ProjectivePoint::new(model.from_ball_coords(&xb.coords));
            let h = 1e-4;
            let probe = LeviProbe::from_tangent(&model, &x, random_unit(&mut rng, 3), h).unwrap();
            let [x0, pv, _, pj, _] = probe.stencil(&model).unwrap();
            let dv = model.distance(&x0, &pv).unwrap();
            let dj = model.distance(&x0, &pj).unwrap();
            assert!((dv - dj).abs() / h < 1e-6);
            let cross = model.distance(&pv, &pj).unwrap();
            // |hv − hJv|² = 2h² exactly when ⟨v, Jv⟩ = 0
            assert!((cross * cross / (h * h) - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn far_atom_ratio_follows_busemann_cocycle() {
        let model = HermitianModel::ball(2).unwrap();
        let spec = GroupSpec::new(model, vec![ball_axis_boost(2, 1, 6.0)], None).unwrap();
        let cloud = enumerate_orbit(&spec, 1, 10).unwrap();
        let s = 0.7;
        let far = cloud
            .records()
            .iter()
            .position(|r| r.displacement > 5.0)
            .unwrap();
        let atom = ProjectivePoint::new(cloud.point(far));
        let x = ball(&[(0.1, 0.2), (0.3, -0.1)]);
        let y = ball(&[(-0.2, 0.0), (0.1, 0.4)]);
        let diff = model.distance(&x, &atom).unwrap() - model.distance(&y, &atom).unwrap();
        // the ray from o through the atom, followed much further
        let o = model.origin();
        let z = geodesic_step(&model, &o, &atom, 10.0).unwrap();
        let busemann = model.distance(&x, &z).unwrap() - model.distance(&y, &z).unwrap();
        assert!((diff - busemann).abs() < 1e-2);
        let ratio = ((-s * model.distance(&x, &atom).unwrap()).exp()
            / (-s * model.distance(&y, &atom).unwrap()).exp())
        .ln();
        assert!((ratio + s * diff).abs() < 1e-12);
    }

    #[test]
    fn generator_invariance_within_reported_bound() {
        let spec = schottky();
        let cloud = enumerate_orbit(&spec, 5, 100_000).unwrap();
        let est = estimate_delta(&cloud).unwrap();
        let d = DensityApprox::from_estimate(&cloud, est.point).unwrap();
        let model = *spec.model();
        for x in [ball(&[(0.1, 0.1), (0.0, -0.2)]), ball(&[(-0.3, 0.0), (0.2, 0.1)])] {
            for (g, _) in spec.letters() {
                let gx = g.apply(&x);
                let gap = (d.log_mass(&gx).unwrap() - d.log_mass(&x).unwrap()).abs();
                let bound = d.invariance_bound(&x, &gx).unwrap();
                assert!(gap <= bound, "{gap} > {bound}");
            }
        }
        let _ = model;
    }

    #[test]
    fn enlarging_the_cloud_adds_at_most_the_new_weight() {
        let spec = schottky();
        let small = enumerate_orbit(&spec, 3, 100_000).unwrap();
        let large = enumerate_orbit(&spec, 4, 100_000).unwrap();
        let s = 0.5;
        let a = DensityApprox::new(&small, s).unwrap();
        let b = DensityApprox::new(&large, s).unwrap();
        let x = ball(&[(0.2, -0.1), (0.1, 0.1)]);
        let raw_a = a.mass_at(&x).unwrap() * a.normalization();
        let raw_b = b.mass_at(&x).unwrap() * b.normalization();
        assert!(raw_b >= raw_a);
        // far atoms sit within the boundary tolerance of the public distance
        let qx = crate::geometry::ball_q(&x.coords);
        let added: f64 = (small.len()..large.len())
            .map(|i| {
                let p = large.point(i);
                let d = crate::geometry::ball_distance_known_q(x.coords.as_slice(), qx, p.as_slice(), -1.0);
                (-s * d).exp()
            })
            .sum();
        assert!((raw_b - raw_a - added).abs() < 1e-9 * raw_b);
    }

    #[test]
    fn schottky_grid_meets_levi_bound() {
        let spec = schottky();
        let cloud = enumerate_orbit(&spec, 7, 200_000).unwrap();
        let est = estimate_delta(&cloud).unwrap();
        let d = DensityApprox::from_estimate(&cloud, est.point).unwrap();
        let grid = ProbeGrid::random(spec.model(), spec.basepoint(), 4, 2, 1.0, 9).unwrap();
        let threshold = levi_threshold(est.point) - LEVI_TOLERANCE;
        let report = ProbeReport::run(&d, &grid, DEFAULT_STEP, threshold).unwrap();
        assert_eq!(report.rows.len(), 8);
        assert!(report.pass, "{report:?}");
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 9);
    }
}
