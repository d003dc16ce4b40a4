//! Built-in groups, available by name from the CLI and used by tests and
//! benchmarks.

use crate::geometry::{ball_axis_boost, siegel_dilation, Basis};
use crate::groupfile::GroupFile;
use crate::heisenberg::{HeisenbergElement, Word};
use crate::linalg::{c, CMatrix, CVector};

pub const NAMES: &[&str] = &[
    "example-1",
    "example-1-far",
    "example-2",
    "single-translation",
    "mixed-elliptic",
    "commuting-translations",
    "cyclic-loxodromic",
    "schottky",
];

fn unit(m: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(m);
    v[i] = c(1.0, 0.0);
    v
}

fn translation(b: CVector) -> HeisenbergElement {
    HeisenbergElement::unipotent(b, 0.0)
}

/// The lattice generated by the translations by `e1` and `i e1` in dimension 2.
pub fn example1() -> GroupFile {
    GroupFile::from_heisenberg(
        2,
        &[translation(unit(1, 0)), translation(unit(1, 0) * c(0.0, 1.0))],
        None,
    )
}

/// [`example1`] seen from the chart point `(−8, 0)`, deeper inside the
/// horoball at `[f1]`, where short orbit points are more evenly spread.
pub fn example1_far() -> GroupFile {
    let mut g = example1();
    g.basepoint = Some(vec![c(-8.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    g
}

/// Three translations in dimension 3 whose translation span is all of `C²`
/// but not totally real.
pub fn example2() -> GroupFile {
    let v3 = CVector::from_vec(vec![c(2f64.sqrt(), 1.0), c(0.0, 1.0)]);
    GroupFile::from_heisenberg(
        3,
        &[translation(unit(2, 0)), translation(unit(2, 1)), translation(v3)],
        None,
    )
}

pub fn single_translation() -> GroupFile {
    GroupFile::from_heisenberg(2, &[translation(unit(1, 0))], None)
}

/// `(−1, 1, 1)` in dimension 2: a screw motion whose square is central.
pub fn mixed_elliptic() -> GroupFile {
    let g = HeisenbergElement::new(
        CMatrix::from_element(1, 1, c(-1.0, 0.0)),
        unit(1, 0),
        1.0,
    )
    .expect("unitary rotation part");
    GroupFile::from_heisenberg(2, &[g], None)
}

/// `{(Id, e1, 0), (Id, e2, 0)}` in dimension 3; the two translations commute.
pub fn commuting_translations() -> GroupFile {
    GroupFile::from_heisenberg(3, &[translation(unit(2, 0)), translation(unit(2, 1))], None)
}

/// Cyclic group generated by a loxodromic of translation length 2.
pub fn cyclic_loxodromic() -> GroupFile {
    GroupFile::from_matrices(2, Basis::Siegel, &[siegel_dilation(2, 2.0).into_matrix()])
}

/// Two loxodromics of translation length 3 along orthogonal complex lines
/// through the origin, far enough apart to play ping-pong.
pub fn schottky() -> GroupFile {
    GroupFile::from_matrices(
        2,
        Basis::Ball,
        &[
            ball_axis_boost(2, 1, 3.0).into_matrix(),
            ball_axis_boost(2, 2, 3.0).into_matrix(),
        ],
    )
}

/// [`example1`] with a redundant generating set: the substitution words
/// `g1`, `g2`, `g1 g2` and `g2^-1 g1^-1 g2`.
pub fn example1_with_substitution() -> GroupFile {
    let mut g = example1();
    g.substitution = Some(vec![
        Word(vec![1]),
        Word(vec![2]),
        Word(vec![1, 2]),
        Word(vec![-2, -1, 2]),
    ]);
    g
}

pub fn by_name(name: &str) -> Option<GroupFile> {
    Some(match name {
        "example-1" => example1(),
        "example-1-far" => example1_far(),
        "example-2" => example2(),
        "single-translation" => single_translation(),
        "mixed-elliptic" => mixed_elliptic(),
        "commuting-translations" => commuting_translations(),
        "cyclic-loxodromic" => cyclic_loxodromic(),
        "schottky" => schottky(),
        _ => return None,
    })
}
