//! Orbit enumeration and numerical critical exponents.
//!
//! [`enumerate_orbit`] runs a breadth-first closure over generator
//! multiplication, merging elements that agree up to a unit scalar. Layers
//! are indexed by word length; an optional displacement cap prunes the
//! search. [`estimate_delta`] then reads off the exponential growth rate of
//! `N(R) = #{γ : d(o, γo) ≤ R}`.

use std::collections::HashMap;
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    ball_distance, ball_distance_known_q, Basis, HermitianModel, Isometry, ProjectivePoint, FORM_TOL,
};
use crate::heisenberg::Word;
use crate::linalg::{c, CMatrix, CVector};

/// Fixed series threshold for [`BisectionTarget::Threshold`].
pub const SERIES_THRESHOLD: f64 = 1e6;
/// Share of the radius range excluded from the growth fit.
pub const OUTER_EXCLUSION: f64 = 0.2;
/// Minimum orbit size accepted by the estimators.
pub const MIN_POINTS: usize = 50;

/// Hash-grid spacing for orbit keys.
const KEY_GRID: f64 = 1e-9;
/// Coordinates closer than this to a grid boundary also probe the neighbor cell.
const KEY_SLACK: f64 = 1e-11;
/// Relative, phase-invariant distance below which two matrices are merged.
const MERGE_TOL: f64 = 1e-7;

/// Phase-invariant relative distance `min_θ ‖A − e^{iθ}B‖ / max(‖A‖, ‖B‖)`.
pub fn projective_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let inner: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
    let d2 = (na + nb - 2.0 * inner.norm()).max(0.0);
    d2.sqrt() / na.max(nb).sqrt().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug)]
pub struct GroupSpec {
    model: HermitianModel,
    generators: Vec<Isometry>,
    /// Generators closed under inverses, with labels `±k` (1-based).
    letters: Vec<(Isometry, i32)>,
    basepoint: ProjectivePoint,
}

impl GroupSpec {
    /// Normalizes each generator to unit determinant modulus, checks form
    /// preservation and closes the set under inverses.
    pub fn new(
        model: HermitianModel,
        generators: Vec<Isometry>,
        basepoint: Option<ProjectivePoint>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("empty generator list".into()));
        }
        let m = model.size();
        let mut normalized = Vec::with_capacity(generators.len());
        for g in generators {
            model.check_isometry(&g)?;
            let g = g.to_basis(model.basis());
            let det = g.matrix().determinant().norm();
            if !(det.is_finite() && det > 0.0) {
                return Err(Error::NotFormPreserving(f64::INFINITY));
            }
            let g = Isometry::from_matrix_unchecked(
                model.basis(),
                g.matrix() / c(det.powf(1.0 / m as f64), 0.0),
            );
            let defect = g.form_defect();
            if defect > FORM_TOL {
                return Err(Error::NotFormPreserving(defect));
            }
            normalized.push(g);
        }
        let mut letters: Vec<(Isometry, i32)> = normalized
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i as i32 + 1))
            .collect();
        for (i, g) in normalized.iter().enumerate() {
            let inv = g.inverse();
            let known = letters
                .iter()
                .any(|(h, _)| projective_distance(h.matrix(), inv.matrix()) <= MERGE_TOL);
            if !known {
                letters.push((inv, -(i as i32 + 1)));
            }
        }
        let basepoint = basepoint.unwrap_or_else(|| model.origin());
        model.check_interior(&basepoint)?;
        Ok(Self {
            model,
            generators: normalized,
            letters,
            basepoint,
        })
    }

    pub fn model(&self) -> &HermitianModel {
        &self.model
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn letters(&self) -> &[(Isometry, i32)] {
        &self.letters
    }

    pub fn basepoint(&self) -> &ProjectivePoint {
        &self.basepoint
    }

    pub fn with_basepoint(mut self, basepoint: ProjectivePoint) -> Result<Self> {
        self.model.check_interior(&basepoint)?;
        self.basepoint = basepoint;
        Ok(self)
    }

    /// The matrix of a word in the generators (`±k` letters, 1-based).
    pub fn evaluate(&self, word: &Word) -> Result<Isometry> {
        let mut acc = Isometry::identity(&self.model);
        for &letter in word.letters() {
            let idx = letter.unsigned_abs() as usize;
            if letter == 0 || idx > self.generators.len() {
                return Err(Error::InvalidArgument(format!("letter {letter} out of range")));
            }
            let g = &self.generators[idx - 1];
            acc = if letter > 0 {
                acc.compose(g)
            } else {
                acc.compose(&g.inverse())
            };
        }
        Ok(acc)
    }

    /// Heuristic torsion detection: generators and products of two
    /// generators that have finite order at most 12.
    pub fn torsion_warnings(&self) -> Vec<String> {
        let m = self.model.size();
        let identity = CMatrix::identity(m, m);
        let mut short: Vec<(String, &CMatrix, Option<CMatrix>)> = Vec::new();
        for (g, label) in &self.letters {
            if *label > 0 {
                short.push((format!("g{label}"), g.matrix(), None));
            }
        }
        let pos: Vec<&(Isometry, i32)> = self.letters.iter().collect();
        for i in 0..pos.len() {
            for j in (i + 1)..pos.len() {
                if pos[i].1 + pos[j].1 == 0 {
                    continue;
                }
                let p = pos[i].0.matrix() * pos[j].0.matrix();
                short.push((format!("{}*{}", letter_name(pos[i].1), letter_name(pos[j].1)), pos[i].0.matrix(), Some(p)));
            }
        }
        let mut out = Vec::new();
        for (name, g, prod) in &short {
            let g = prod.as_ref().unwrap_or(g);
            if projective_distance(g, &identity) <= MERGE_TOL {
                continue;
            }
            let mut power = g.clone();
            for k in 2..=12 {
                power = &power * g;
                if projective_distance(&power, &identity) <= 1e-8 {
                    out.push(format!("{name} appears to have finite order {k}"));
                    break;
                }
            }
        }
        out
    }
}

fn letter_name(label: i32) -> String {
    if label > 0 {
        format!("g{label}")
    } else {
        format!("g{}^-1", -label)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitLimits {
    pub max_word_length: usize,
    pub max_points: usize,
    /// Keep only elements with `d(o, γo) ≤ R`; the search is pruned beyond
    /// `R + prune_margin`.
    pub max_displacement: Option<f64>,
    /// Defaults to the largest generator displacement, and at least 0.5.
    pub prune_margin: Option<f64>,
}

impl OrbitLimits {
    pub fn new(max_word_length: usize, max_points: usize) -> Self {
        Self {
            max_word_length,
            max_points,
            max_displacement: None,
            prune_margin: None,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.max_displacement = Some(radius);
        self
    }
}

impl Default for OrbitLimits {
    fn default() -> Self {
        Self::new(12, 1_000_000)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No new elements within the displacement bound.
    Exhausted,
    DepthLimit,
    PointCap,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Exhausted => "exhausted",
            StopReason::DepthLimit => "depth-limit",
            StopReason::PointCap => "point-cap",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    /// Hash of the quantized scalar-free key.
    pub key_hash: u64,
    node: u32,
    pub word_length: u32,
    pub displacement: f64,
    /// Set for records whose neighbors under a generator may be missing
    /// from the cloud.
    pub outer: bool,
}

#[derive(Clone, Debug)]
pub struct OrbitCloud {
    model: HermitianModel,
    limits: OrbitLimits,
    records: Vec<OrbitRecord>,
    /// Orbit points `γo` in ball coordinates, normalized to `q = −1`, flat.
    points: Vec<Complex64>,
    /// Search tree: (parent node, letter label); node 0 is the identity.
    nodes: Vec<(u32, i32)>,
    pub stop: StopReason,
    /// Last word length whose layer was expanded completely.
    pub complete_depth: usize,
    pub truncation_radius: f64,
    pub warnings: Vec<String>,
}

impl OrbitCloud {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[OrbitRecord] {
        &self.records
    }

    pub fn limits(&self) -> &OrbitLimits {
        &self.limits
    }

    pub fn model(&self) -> &HermitianModel {
        &self.model
    }

    /// Ball-basis lift of `γo` with `q = −1`.
    pub fn point(&self, i: usize) -> CVector {
        let m = self.model.size();
        CVector::from_column_slice(&self.points[i * m..(i + 1) * m])
    }

    pub(crate) fn raw_points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.displacement).collect()
    }

    /// A geodesic representative word of record `i`.
    pub fn word(&self, i: usize) -> Word {
        let mut letters = Vec::new();
        let mut node = self.records[i].node;
        while node != 0 {
            let (parent, label) = self.nodes[node as usize];
            letters.push(label);
            node = parent;
        }
        letters.reverse();
        Word(letters)
    }

    /// Keeps the records with `d ≤ radius`; word-tree data is shared.
    pub fn restrict(&self, radius: f64) -> OrbitCloud {
        let m = self.model.size();
        let mut out = self.clone();
        out.records.clear();
        out.points.clear();
        for (i, r) in self.records.iter().enumerate() {
            if r.displacement <= radius {
                out.records.push(r.clone());
                out.points.extend_from_slice(&self.points[i * m..(i + 1) * m]);
            }
        }
        out.truncation_radius = self.truncation_radius.min(radius);
        out
    }

    /// CSV with columns `key_hash,word,word_length,displacement`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "key_hash,word,word_length,displacement")?;
        for (i, r) in self.records.iter().enumerate() {
            let word: Vec<String> = self.word(i).0.iter().map(|l| l.to_string()).collect();
            writeln!(
                w,
                "{:016x},{},{},{}",
                r.key_hash,
                word.join(" "),
                r.word_length,
                r.displacement
            )?;
        }
        Ok(())
    }
}

/// Pass-through hasher for keys that are already well mixed.
#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = mix(self.0 ^ b as u64);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = x;
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type KeyMap = HashMap<u64, u32, BuildHasherDefault<KeyHasher>>;

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Elements of one BFS layer, matrices stored flat (column-major).
struct Layer {
    stride: usize,
    nodes: Vec<u32>,
    matrices: Vec<Complex64>,
    last_letter: Vec<u32>,
    /// First slot per key; further slots with the same key are chained.
    heads: KeyMap,
    chain: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

impl Layer {
    fn new(stride: usize) -> Self {
        Self {
            stride,
            nodes: Vec::new(),
            matrices: Vec::new(),
            last_letter: Vec::new(),
            heads: KeyMap::default(),
            chain: Vec::new(),
        }
    }

    fn matrix(&self, slot: usize) -> &[Complex64] {
        &self.matrices[slot * self.stride..(slot + 1) * self.stride]
    }

    fn contains(&self, key: &GridKey, matrix: &[Complex64]) -> bool {
        std::iter::once(&key.primary).chain(&key.neighbors).any(|k| {
            let mut slot = self.heads.get(k).copied().unwrap_or(NO_SLOT);
            while slot != NO_SLOT {
                if flat_projective_distance(self.matrix(slot as usize), matrix) <= MERGE_TOL {
                    return true;
                }
                slot = self.chain[slot as usize];
            }
            false
        })
    }

    fn push(&mut self, node: u32, matrix: &[Complex64], letter: u32, primary: u64) {
        let slot = self.nodes.len() as u32;
        self.nodes.push(node);
        self.matrices.extend_from_slice(matrix);
        self.last_letter.push(letter);
        let previous = self.heads.insert(primary, slot).unwrap_or(NO_SLOT);
        self.chain.push(previous);
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }
}

fn flat_projective_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut na = 0.0;
    let mut nb = 0.0;
    let mut inner = c(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        na += x.norm_sqr();
        nb += y.norm_sqr();
        inner += x * y.conj();
    }
    let d2 = (na + nb - 2.0 * inner.norm()).max(0.0);
    d2.sqrt() / f64::max(na, nb).sqrt().max(f64::MIN_POSITIVE)
}

struct GridKey {
    primary: u64,
    /// Neighbor cells, only for coordinates lying near a cell boundary.
    neighbors: Vec<u64>,
}

/// Hash keys of the entry moduli relative to the largest one, quantized on
/// the key grid.
fn grid_key(matrix: &[Complex64]) -> GridKey {
    let top = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = if top > 0.0 { 1.0 / (top * KEY_GRID) } else { 0.0 };
    // nearest-cell rounding keeps exact values (zeros, simple ratios) at
    // cell centers, away from the edges that need probing
    let mut primary = 0u64;
    let mut near_edge = false;
    for z in matrix {
        let x = z.norm() * scale;
        let cell = x.round();
        near_edge |= (x - cell).abs() >= 0.5 - KEY_SLACK / KEY_GRID;
        primary = mix(primary ^ cell as i64 as u64);
    }
    if !near_edge {
        return GridKey {
            primary,
            neighbors: Vec::new(),
        };
    }
    let scaled: Vec<f64> = matrix.iter().map(|z| z.norm() * scale).collect();
    let cells: Vec<i64> = scaled.iter().map(|x| x.round() as i64).collect();
    let mut variants: Vec<Vec<i64>> = vec![cells];
    for (i, x) in scaled.iter().enumerate() {
        let offset = x - x.round();
        if offset.abs() < 0.5 - KEY_SLACK / KEY_GRID {
            continue;
        }
        let shift = if offset > 0.0 { 1 } else { -1 };
        let extra: Vec<Vec<i64>> = variants
            .iter()
            .map(|v| {
                let mut w = v.clone();
                w[i] += shift;
                w
            })
            .collect();
        variants.extend(extra);
        if variants.len() >= 64 {
            break;
        }
    }
    let neighbors = variants[1..]
        .iter()
        .map(|v| v.iter().fold(0u64, |h, &cell| mix(h ^ cell as u64)))
        .collect();
    GridKey { primary, neighbors }
}

/// `a · b` for column-major `m × m` matrices.
fn mul_into(a: &[Complex64], b: &[Complex64], m: usize, out: &mut [Complex64]) {
    for j in 0..m {
        for i in 0..m {
            let mut acc = c(0.0, 0.0);
            for k in 0..m {
                acc += a[k * m + i] * b[j * m + k];
            }
            out[j * m + i] = acc;
        }
    }
}

/// Rotates the phase so that the first entry within a relative `1e-6` of
/// the largest modulus is real-positive.
fn canonicalize(matrix: &mut [Complex64]) {
    let top = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return;
    }
    if let Some(pivot) = matrix.iter().find(|z| z.norm() >= (1.0 - 1e-6) * top).copied() {
        let phase = pivot.conj() / pivot.norm();
        for z in matrix.iter_mut() {
            *z *= phase;
        }
    }
}

struct Candidate {
    parent_slot: u32,
    letter: u32,
    key: GridKey,
    displacement: f64,
    /// The matrix (`m²` entries) followed by the ball-basis orbit point.
    data: Vec<Complex64>,
}

/// Breadth-first orbit enumeration with word-length and point caps.
pub fn enumerate_orbit(
    spec: &GroupSpec,
    max_word_length: usize,
    max_points: usize,
) -> Result<OrbitCloud> {
    enumerate_orbit_with(spec, &OrbitLimits::new(max_word_length, max_points))
}

/// Breadth-first orbit enumeration under `limits`.
///
/// Candidates of a layer are formed in parallel and merged serially in a
/// fixed order, so the output does not depend on the thread count. Merging
/// only compares against the previous, current and next layers: for
/// `g` at depth `k` and a letter `s`, `gs` has depth `k − 1`, `k` or `k + 1`.
pub fn enumerate_orbit_with(spec: &GroupSpec, limits: &OrbitLimits) -> Result<OrbitCloud> {
    if limits.max_points == 0 {
        return Err(Error::InvalidArgument("max_points must be at least 1".into()));
    }
    if let Some(r) = limits.max_displacement {
        if r.is_nan() || r < 0.0 {
            return Err(Error::InvalidArgument("radius must be nonnegative".into()));
        }
    }
    let model = *spec.model();
    let m = model.size();
    let mm = m * m;
    let base = &spec.basepoint().coords;
    let base = base / c((-model.q(base)).sqrt(), 0.0);
    let base_ball = model.to_ball_coords(&base);
    let siegel = model.basis() == Basis::Siegel;

    let letters: Vec<&CMatrix> = spec.letters().iter().map(|(g, _)| g.matrix()).collect();
    let labels: Vec<i32> = spec.letters().iter().map(|(_, l)| *l).collect();
    let inverse_of: Vec<u32> = (0..letters.len())
        .map(|i| {
            let inv = spec.letters()[i].0.inverse();
            (0..letters.len())
                .min_by(|&a, &b| {
                    projective_distance(letters[a], inv.matrix())
                        .total_cmp(&projective_distance(letters[b], inv.matrix()))
                })
                .unwrap_or(i) as u32
        })
        .collect();
    let letter_disp: Vec<f64> = letters
        .iter()
        .map(|g| ball_distance(&base_ball, &model.to_ball_coords(&(*g * &base))))
        .collect();
    let max_letter_disp = letter_disp.iter().copied().fold(0.0, f64::max);
    let radius = limits.max_displacement;
    let margin = limits.prune_margin.unwrap_or(max_letter_disp.max(0.5));
    let bound = radius.map(|r| r + margin);
    let flat_letters: Vec<&[Complex64]> = letters.iter().map(|g| g.as_slice()).collect();

    let identity = CMatrix::identity(m, m);
    let mut nodes: Vec<(u32, i32)> = vec![(u32::MAX, 0)];
    let id_key = grid_key(identity.as_slice());
    let mut records = vec![OrbitRecord {
        key_hash: id_key.primary,
        node: 0,
        word_length: 0,
        displacement: 0.0,
        outer: false,
    }];
    let mut points: Vec<Complex64> = base_ball.iter().copied().collect();
    let mut layer_min: Vec<f64> = vec![0.0];

    let mut prev = Layer::new(mm);
    let mut cur = Layer::new(mm);
    cur.push(0, identity.as_slice(), NO_SLOT, id_key.primary);

    let expand = |cur: &Layer, slot: usize, li: usize| -> Option<Candidate> {
        if cur.last_letter[slot] != NO_SLOT && inverse_of[cur.last_letter[slot] as usize] == li as u32 {
            return None;
        }
        let mut data = vec![c(0.0, 0.0); mm + m];
        let (matrix, point) = data.split_at_mut(mm);
        mul_into(cur.matrix(slot), flat_letters[li], m, matrix);
        for i in 0..m {
            point[i] = (0..m).map(|j| matrix[j * m + i] * base[j]).sum();
        }
        if siegel {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let (a, b) = (point[0], point[1]);
            point[0] = (a - b) * r;
            point[1] = (a + b) * r;
        }
        let displacement = ball_distance_known_q(base_ball.as_slice(), -1.0, point, -1.0);
        if bound.is_some_and(|b| displacement > b) {
            return None;
        }
        canonicalize(matrix);
        let key = grid_key(matrix);
        Some(Candidate {
            parent_slot: slot as u32,
            letter: li as u32,
            key,
            displacement,
            data,
        })
    };

    let mut stop = StopReason::DepthLimit;
    let mut complete_depth = 0;
    if records.len() >= limits.max_points && limits.max_word_length > 0 {
        stop = StopReason::PointCap;
    } else {
        for depth in 1..=limits.max_word_length {
            let candidates: Vec<Candidate> = (0..cur.len())
                .into_par_iter()
                .flat_map_iter(|slot| {
                    let cur = &cur;
                    let expand = &expand;
                    (0..letters.len()).filter_map(move |li| expand(cur, slot, li))
                })
                .collect();

            let mut next = Layer::new(mm);
            let mut capped = false;
            let mut min_disp = f64::INFINITY;
            for cand in candidates {
                let matrix = &cand.data[..mm];
                if prev.contains(&cand.key, matrix)
                    || cur.contains(&cand.key, matrix)
                    || next.contains(&cand.key, matrix)
                {
                    continue;
                }
                let node = nodes.len() as u32;
                nodes.push((cur.nodes[cand.parent_slot as usize], labels[cand.letter as usize]));
                min_disp = min_disp.min(cand.displacement);
                if radius.is_none_or(|r| cand.displacement <= r) {
                    records.push(OrbitRecord {
                        key_hash: cand.key.primary,
                        node,
                        word_length: depth as u32,
                        displacement: cand.displacement,
                        outer: false,
                    });
                    points.extend_from_slice(&cand.data[mm..]);
                }
                next.push(node, matrix, cand.letter, cand.key.primary);
                if records.len() >= limits.max_points {
                    capped = true;
                    break;
                }
            }
            layer_min.push(min_disp);
            if capped {
                stop = StopReason::PointCap;
                complete_depth = depth - 1;
                break;
            }
            complete_depth = depth;
            if next.len() == 0 {
                stop = StopReason::Exhausted;
                break;
            }
            prev = std::mem::replace(&mut cur, next);
        }
    }

    let max_disp = records.iter().map(|r| r.displacement).fold(0.0, f64::max);
    let truncation_radius = match stop {
        StopReason::Exhausted => radius.unwrap_or(max_disp),
        _ => {
            let tail = layer_min
                .iter()
                .skip(complete_depth.max(1))
                .copied()
                .fold(f64::INFINITY, f64::min);
            let tail = if tail.is_finite() { tail } else { max_disp };
            radius.map_or(tail, |r| r.min(tail))
        }
    };
    let word_bounded = stop != StopReason::Exhausted;
    for r in &mut records {
        let by_word = word_bounded && r.word_length as usize >= complete_depth;
        let by_radius = radius.is_some_and(|rad| r.displacement > rad - max_letter_disp);
        r.outer = by_word || by_radius;
    }

    let mut warnings = spec.torsion_warnings();
    if stop == StopReason::PointCap {
        warnings.push(format!(
            "point cap {} reached inside word length {}",
            limits.max_points,
            complete_depth + 1
        ));
    }

    Ok(OrbitCloud {
        model,
        limits: limits.clone(),
        records,
        points,
        nodes,
        stop,
        complete_depth,
        truncation_radius,
        warnings,
    })
}

/// `Σ e^{−s d(o, γo)}` over the cloud, summed in record order.
pub fn poincare_partial_sum(cloud: &OrbitCloud, s: f64) -> f64 {
    cloud
        .records
        .iter()
        .map(|r| (-s * r.displacement).exp())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BisectionTarget {
    /// Share of the truncated series carried by the outermost shell
    /// `[(1 − OUTER_EXCLUSION) R, R]`; equals the shell's share of radii
    /// exactly when `s` matches the growth rate.
    TailShare(f64),
    /// The series over the whole cloud equals this value.
    Threshold(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorOptions {
    pub outer_exclusion: f64,
    /// Radius of the ball used by both estimators; defaults to the cloud's
    /// truncation radius.
    pub radius: Option<f64>,
    pub bisection: BisectionTarget,
    pub shells: usize,
    pub min_points: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            outer_exclusion: OUTER_EXCLUSION,
            radius: None,
            bisection: BisectionTarget::TailShare(OUTER_EXCLUSION),
            shells: 20,
            min_points: MIN_POINTS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ShellCount,
    Bisection,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ShellCount => "shell-count",
            Method::Bisection => "bisection",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Shell {
    pub inner: f64,
    pub outer: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Counts of the whole cloud per radius shell.
    pub shells: Vec<Shell>,
    /// Root-mean-square residual of the growth fit.
    pub residual: f64,
    pub truncation_radius: f64,
    /// Largest radius entering the growth fit.
    pub fit_radius: f64,
    pub fit_points: usize,
    pub orbit_size: usize,
    /// `inf{s : Σ e^{−sd} < SERIES_THRESHOLD}` over the cloud.
    pub threshold_crossing: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaEstimate {
    pub point: f64,
    pub method: Method,
    pub shell_count: f64,
    pub bisection: f64,
    pub diagnostics: Diagnostics,
}

pub fn estimate_delta(cloud: &OrbitCloud) -> Result<DeltaEstimate> {
    estimate_delta_with(cloud, &EstimatorOptions::default())
}

/// Both estimators on the ball `d ≤ R`: the least-squares slope of
/// `ln N(r)` against `r` for `r ≤ (1 − outer_exclusion) R`, and the
/// bisection of the truncated series.
pub fn estimate_delta_with(cloud: &OrbitCloud, opts: &EstimatorOptions) -> Result<DeltaEstimate> {
    if cloud.len() < opts.min_points {
        return Err(Error::InsufficientData {
            found: cloud.len(),
            needed: opts.min_points,
        });
    }
    let radius = opts.radius.unwrap_or(cloud.truncation_radius);
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::DegenerateRegression("truncation radius is zero".into()));
    }
    let mut disp: Vec<f64> = cloud
        .records
        .iter()
        .map(|r| r.displacement)
        .filter(|&d| d <= radius)
        .collect();
    disp.sort_by(f64::total_cmp);

    let fit_radius = (1.0 - opts.outer_exclusion) * radius;
    // ln N(d_i), counting near-ties together
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = 0;
    while i < disp.len() && disp[i] <= fit_radius {
        let mut j = i;
        while j + 1 < disp.len() && disp[j + 1] - disp[i] <= 1e-9 {
            j += 1;
        }
        let ln_n = ((j + 1) as f64).ln();
        for &d in &disp[i..=j] {
            if d <= fit_radius {
                xs.push(d);
                ys.push(ln_n);
            }
        }
        i = j + 1;
    }
    let (slope, residual) = least_squares(&xs, &ys)?;

    let bisection = match opts.bisection {
        BisectionTarget::TailShare(share) => {
            tail_share_root(&disp, radius, opts.outer_exclusion, share)
        }
        BisectionTarget::Threshold(t) => threshold_root(cloud, t),
    };

    let max_d = cloud.records.iter().map(|r| r.displacement).fold(0.0, f64::max);
    let shells = shell_histogram(cloud, max_d, opts.shells.max(1));

    Ok(DeltaEstimate {
        point: slope.max(0.0),
        method: Method::ShellCount,
        shell_count: slope.max(0.0),
        bisection,
        diagnostics: Diagnostics {
            shells,
            residual,
            truncation_radius: radius,
            fit_radius,
            fit_points: xs.len(),
            orbit_size: cloud.len(),
            threshold_crossing: threshold_root(cloud, SERIES_THRESHOLD),
        },
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::DegenerateRegression(format!(
            "{} points inside the fit range",
            xs.len()
        )));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-12 * n {
        return Err(Error::DegenerateRegression(
            "all displacements in the fit range are equal".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    Ok((slope, (rss / n).sqrt()))
}

fn bisect(mut lo: f64, mut hi: f64, above: impl Fn(f64) -> bool) -> f64 {
    // `above(lo)` holds and `above(hi)` fails
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn tail_share_root(sorted: &[f64], radius: f64, exclusion: f64, target: f64) -> f64 {
    let inner = (1.0 - exclusion) * radius;
    let share = |s: f64| {
        let mut tail = 0.0;
        let mut total = 0.0;
        for &d in sorted {
            let w = (-s * d).exp();
            total += w;
            if d > inner {
                tail += w;
            }
        }
        tail / total
    };
    if share(0.0) <= target {
        return 0.0;
    }
    let mut hi = 1.0;
    while share(hi) > target && hi < 1e3 {
        hi *= 2.0;
    }
    bisect(0.0, hi, |s| share(s) > target)
}

fn threshold_root(cloud: &OrbitCloud, threshold: f64) -> f64 {
    let sum = |s: f64| poincare_partial_sum(cloud, s);
    if sum(0.0) <= threshold {
        return 0.0;
    }
    let mut hi = 1.0;
    while sum(hi) > threshold && hi < 1e3 {
        hi *= 2.0;
    }
    bisect(0.0, hi, |s| sum(s) > threshold)
}

fn shell_histogram(cloud: &OrbitCloud, max_d: f64, bins: usize) -> Vec<Shell> {
    let width = if max_d > 0.0 { max_d / bins as f64 } else { 1.0 };
    let mut shells: Vec<Shell> = (0..bins)
        .map(|k| Shell {
            inner: k as f64 * width,
            outer: (k + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for r in &cloud.records {
        let k = ((r.displacement / width) as usize).min(bins - 1);
        shells[k].count += 1;
    }
    shells
}
