//! Line-oriented text format for group descriptions.
//!
//! ```text
//! # Heisenberg lattice in dimension 2
//! dimension 2
//! basis siegel
//! basepoint [-1, 0] [1, 0] [0, 0]
//! generator heisenberg
//!   t [1, 0]
//!   b [1, 0]
//!   c 0
//! end
//! generator matrix
//!   row [1, 0] [0, 0] [0, 0]
//!   row [0, 0] [1, 0] [0, 0]
//!   row [0, 0] [0, 0] [1, 0]
//! end
//! substitute 1 -2
//! ```
//!
//! Complex numbers are `[re, im]` pairs; a bare real is accepted as well.
//! `t` lines give the rows of the rotation part, `b` its translation and `c`
//! the central coordinate. Matrix generators are written in the declared
//! basis; Heisenberg generators always refer to the Siegel basis. Each
//! `substitute` line is one word (`k` or `-k`, 1-based) in the generators.
//! Blank lines and `#` comments are ignored.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exponent::GroupSpec;
use crate::geometry::{Basis, HermitianModel, Isometry, ProjectivePoint};
use crate::heisenberg::{HeisenbergElement, ParabolicGroupInput, Word};
use crate::linalg::{c, CMatrix, CVector};

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorEntry {
    /// `(T, b, c)`, not yet validated.
    Heisenberg { t: CMatrix, b: CVector, c: f64 },
    Matrix(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupFile {
    pub dimension: usize,
    pub basis: Basis,
    pub basepoint: Option<Vec<Complex64>>,
    pub generators: Vec<GeneratorEntry>,
    pub substitution: Option<Vec<Word>>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(line, format!("invalid number '{}'", tok.trim())))
}

/// Reads a sequence of `[re, im]` pairs or bare reals.
fn parse_complex_list(text: &str, line: usize) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix('[') {
            let close = after
                .find(']')
                .ok_or_else(|| parse_err(line, "unclosed '['"))?;
            let inner = &after[..close];
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 2 {
                return Err(parse_err(line, format!("expected [re, im], found [{inner}]")));
            }
            out.push(c(parse_real(parts[0], line)?, parse_real(parts[1], line)?));
            rest = after[close + 1..].trim_start();
        } else {
            let end = rest
                .find(|ch: char| ch.is_whitespace() || ch == '[')
                .unwrap_or(rest.len());
            out.push(c(parse_real(&rest[..end], line)?, 0.0));
            rest = rest[end..].trim_start();
        }
    }
    Ok(out)
}

impl GroupFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut dimension: Option<usize> = None;
        let mut basis = Basis::Siegel;
        let mut basepoint = None;
        let mut generators = Vec::new();
        let mut substitution: Option<Vec<Word>> = None;

        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        while let Some((no, line)) = lines.next() {
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "dimension" => {
                    let n: usize = rest
                        .parse()
                        .map_err(|_| parse_err(no, format!("invalid dimension '{rest}'")))?;
                    if n == 0 {
                        return Err(parse_err(no, "dimension must be at least 1"));
                    }
                    dimension = Some(n);
                }
                "basis" => {
                    basis = match rest {
                        "ball" => Basis::Ball,
                        "siegel" => Basis::Siegel,
                        _ => return Err(parse_err(no, format!("unknown basis '{rest}'"))),
                    }
                }
                "basepoint" => basepoint = Some(parse_complex_list(rest, no)?),
                "substitute" => {
                    let word: Vec<i32> = rest
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<i32>()
                                .ok()
                                .filter(|&k| k != 0)
                                .ok_or_else(|| parse_err(no, format!("invalid letter '{t}'")))
                        })
                        .collect::<Result<_>>()?;
                    substitution.get_or_insert_with(Vec::new).push(Word(word));
                }
                "generator" => {
                    let n = dimension
                        .ok_or_else(|| parse_err(no, "'dimension' must precede generators"))?;
                    let entry = match rest {
                        "heisenberg" => parse_heisenberg(&mut lines, n, no)?,
                        "matrix" => parse_matrix(&mut lines, n, no)?,
                        _ => return Err(parse_err(no, format!("unknown generator kind '{rest}'"))),
                    };
                    generators.push(entry);
                }
                _ => return Err(parse_err(no, format!("unknown keyword '{key}'"))),
            }
        }

        let dimension = dimension.ok_or_else(|| parse_err(0, "missing 'dimension'"))?;
        if let Some(p) = &basepoint {
            if p.len() != dimension + 1 {
                return Err(parse_err(
                    0,
                    format!("basepoint needs {} coordinates, found {}", dimension + 1, p.len()),
                ));
            }
        }
        if generators.is_empty() {
            return Err(parse_err(0, "no generators"));
        }
        if let Some(words) = &substitution {
            for w in words {
                if let Some(&bad) = w.0.iter().find(|l| l.unsigned_abs() as usize > generators.len()) {
                    return Err(parse_err(0, format!("substitution letter {bad} out of range")));
                }
            }
        }
        Ok(Self {
            dimension,
            basis,
            basepoint,
            generators,
            substitution,
        })
    }

    pub fn model(&self) -> Result<HermitianModel> {
        HermitianModel::new(self.dimension, self.basis)
    }

    pub fn basepoint_point(&self) -> Option<ProjectivePoint> {
        self.basepoint.as_ref().map(|p| ProjectivePoint::from_slice(p))
    }

    /// Generators as isometries in the file's basis.
    pub fn isometries(&self) -> Result<Vec<Isometry>> {
        let size = self.dimension + 1;
        self.generators
            .iter()
            .map(|g| match g {
                GeneratorEntry::Heisenberg { t, b, c } => Ok(HeisenbergElement::new(
                    t.clone(),
                    b.clone(),
                    *c,
                )?
                .embed()
                .to_basis(self.basis)),
                GeneratorEntry::Matrix(m) => {
                    debug_assert_eq!(m.nrows(), size);
                    Ok(Isometry::from_matrix_unchecked(self.basis, m.clone()))
                }
            })
            .collect()
    }

    pub fn group_spec(&self) -> Result<GroupSpec> {
        GroupSpec::new(self.model()?, self.isometries()?, self.basepoint_point())
    }

    /// Heisenberg coordinates of every generator; matrix generators must fix `[f1]`.
    pub fn parabolic_input(&self) -> Result<ParabolicGroupInput> {
        if self.dimension < 2 {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        let gens = self
            .generators
            .iter()
            .map(|g| match g {
                GeneratorEntry::Heisenberg { t, b, c } => {
                    HeisenbergElement::new(t.clone(), b.clone(), *c)
                }
                GeneratorEntry::Matrix(m) => HeisenbergElement::from_isometry(
                    &Isometry::from_matrix_unchecked(self.basis, m.clone()),
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        ParabolicGroupInput::with_substitution(gens, self.substitution.clone())
    }

    pub fn from_heisenberg(
        dimension: usize,
        generators: &[HeisenbergElement],
        substitution: Option<Vec<Word>>,
    ) -> Self {
        Self {
            dimension,
            basis: Basis::Siegel,
            basepoint: None,
            generators: generators
                .iter()
                .map(|g| GeneratorEntry::Heisenberg {
                    t: g.t.clone(),
                    b: g.b.clone(),
                    c: g.c,
                })
                .collect(),
            substitution,
        }
    }

    pub fn from_matrices(dimension: usize, basis: Basis, generators: &[CMatrix]) -> Self {
        Self {
            dimension,
            basis,
            basepoint: None,
            generators: generators.iter().cloned().map(GeneratorEntry::Matrix).collect(),
            substitution: None,
        }
    }
}

type Lines<'a, I> = &'a mut I;

fn block_lines<'a, I>(lines: Lines<'_, I>, start: usize) -> Result<Vec<(usize, &'a str)>>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let mut out = Vec::new();
    for (no, line) in lines.by_ref() {
        if line == "end" {
            return Ok(out);
        }
        out.push((no, line));
    }
    Err(parse_err(start, "generator block without 'end'"))
}

fn parse_heisenberg<'a, I>(lines: Lines<'_, I>, n: usize, start: usize) -> Result<GeneratorEntry>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    if n < 2 {
        return Err(parse_err(start, "Heisenberg generators need dimension at least 2"));
    }
    let m = n - 1;
    let mut rows = Vec::new();
    let mut b = None;
    let mut cval = None;
    for (no, line) in block_lines(lines, start)? {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match key {
            "t" => {
                let row = parse_complex_list(rest, no)?;
                if row.len() != m {
                    return Err(parse_err(no, format!("rotation row needs {m} entries")));
                }
                rows.push(row);
            }
            "b" => {
                let v = parse_complex_list(rest, no)?;
                if v.len() != m {
                    return Err(parse_err(no, format!("translation needs {m} entries")));
                }
                b = Some(CVector::from_vec(v));
            }
            "c" => cval = Some(parse_real(rest, no)?),
            _ => return Err(parse_err(no, format!("unexpected '{key}' in Heisenberg block"))),
        }
    }
    let t = if rows.is_empty() {
        CMatrix::identity(m, m)
    } else if rows.len() == m {
        CMatrix::from_fn(m, m, |i, j| rows[i][j])
    } else {
        return Err(parse_err(start, format!("rotation part needs {m} rows")));
    };
    Ok(GeneratorEntry::Heisenberg {
        t,
        b: b.unwrap_or_else(|| CVector::zeros(m)),
        c: cval.unwrap_or(0.0),
    })
}

fn parse_matrix<'a, I>(lines: Lines<'_, I>, n: usize, start: usize) -> Result<GeneratorEntry>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let size = n + 1;
    let mut rows = Vec::new();
    for (no, line) in block_lines(lines, start)? {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if key != "row" {
            return Err(parse_err(no, format!("unexpected '{key}' in matrix block")));
        }
        let row = parse_complex_list(rest, no)?;
        if row.len() != size {
            return Err(parse_err(no, format!("matrix row needs {size} entries")));
        }
        rows.push(row);
    }
    if rows.len() != size {
        return Err(parse_err(start, format!("matrix needs {size} rows")));
    }
    Ok(GeneratorEntry::Matrix(CMatrix::from_fn(size, size, |i, j| rows[i][j])))
}

fn write_complex(f: &mut fmt::Formatter<'_>, values: impl Iterator<Item = Complex64>) -> fmt::Result {
    let parts: Vec<String> = values.map(|z| format!("[{:?}, {:?}]", z.re, z.im)).collect();
    f.write_str(&parts.join(" "))
}

/// The canonical serialization; parsing it back yields the same value.
impl fmt::Display for GroupFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dimension {}", self.dimension)?;
        writeln!(f, "basis {}", self.basis)?;
        if let Some(p) = &self.basepoint {
            f.write_str("basepoint ")?;
            write_complex(f, p.iter().copied())?;
            writeln!(f)?;
        }
        for g in &self.generators {
            match g {
                GeneratorEntry::Heisenberg { t, b, c } => {
                    writeln!(f, "generator heisenberg")?;
                    for i in 0..t.nrows() {
                        f.write_str("  t ")?;
                        write_complex(f, t.row(i).iter().copied())?;
                        writeln!(f)?;
                    }
                    f.write_str("  b ")?;
                    write_complex(f, b.iter().copied())?;
                    writeln!(f)?;
                    writeln!(f, "  c {c:?}")?;
                }
                GeneratorEntry::Matrix(m) => {
                    writeln!(f, "generator matrix")?;
                    for i in 0..m.nrows() {
                        f.write_str("  row ")?;
                        write_complex(f, m.row(i).iter().copied())?;
                        writeln!(f)?;
                    }
                }
            }
            writeln!(f, "end")?;
        }
        if let Some(words) = &self.substitution {
            for w in words {
                let letters: Vec<String> = w.0.iter().map(|l| l.to_string()).collect();
                writeln!(f, "substitute {}", letters.join(" "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# two translations
dimension 2
basis siegel

generator heisenberg
  t [1, 0]
  b [ 1 , 0 ]
  c 0
end
generator heisenberg
  b [0,1]
end
substitute 1 -2
";

    #[test]
    fn parses_sample() {
        let g = GroupFile::parse(SAMPLE).unwrap();
        assert_eq!(g.dimension, 2);
        assert_eq!(g.generators.len(), 2);
        let input = g.parabolic_input().unwrap();
        assert_eq!(input.generators[1].b[0], c(0.0, 1.0));
        assert_eq!(g.substitution, Some(vec![Word(vec![1, -2])]));
    }

    #[test]
    fn canonical_round_trip() {
        let g = GroupFile::parse(SAMPLE).unwrap();
        let text = g.to_string();
        let again = GroupFile::parse(&text).unwrap();
        assert_eq!(again, g);
        assert_eq!(again.to_string(), text);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "dimension 2\ngenerator heisenberg\n  b [1, 0\nend\n";
        assert!(matches!(GroupFile::parse(bad), Err(Error::Parse { line: 3, .. })));
        let bad = "dimension 2\nfrobnicate\n";
        assert!(matches!(GroupFile::parse(bad), Err(Error::Parse { line: 2, .. })));
        let bad = "generator matrix\nend\n";
        assert!(matches!(GroupFile::parse(bad), Err(Error::Parse { line: 1, .. })));
        let bad = "dimension 1\ngenerator matrix\n  row [1, 0] [0, 0]\nend\n";
        assert!(matches!(GroupFile::parse(bad), Err(Error::Parse { line: 2, .. })));
        let bad = "dimension 2\ngenerator heisenberg\n  b [1, 0]\n";
        assert!(matches!(GroupFile::parse(bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_rotation_is_not_a_parse_error() {
        let text = "dimension 2\ngenerator heisenberg\n  t [2, 0]\nend\n";
        let g = GroupFile::parse(text).unwrap();
        assert!(matches!(g.parabolic_input(), Err(Error::NotHeisenberg(_))));
    }

    proptest! {
        #[test]
        fn matrix_files_round_trip(entries in proptest::collection::vec(-1e6f64..1e6, 18), n_sub in 0usize..3) {
            let m = CMatrix::from_fn(3, 3, |i, j| c(entries[2 * (3 * i + j)], entries[2 * (3 * i + j) + 1]));
            let mut g = GroupFile::from_matrices(2, Basis::Ball, &[m]);
            g.basepoint = Some(vec![c(1.0, 0.0), c(entries[0] * 1e-7, 0.1), c(0.0, -0.0)]);
            if n_sub > 0 {
                g.substitution = Some((0..n_sub).map(|k| Word(vec![1; k + 1])).collect());
            }
            let text = g.to_string();
            let back = GroupFile::parse(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
