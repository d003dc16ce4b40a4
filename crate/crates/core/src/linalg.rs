//! Small dense linear-algebra helpers over `Complex64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Standard Hermitian product on `C^m`, linear in the first argument.
pub fn herm(x: &CVector, y: &CVector) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Singular values of a complex matrix, in no particular order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// Rank counting singular values above `max(rel * sigma_max, abs)`.
pub fn numerical_rank(m: &CMatrix, rel: f64, abs: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.iter().copied().fold(0.0, f64::max);
    let cut = (rel * top).max(abs);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Real dimension of `Span_R(vectors)`, each vector of `C^m` read as `R^{2m}`.
pub fn real_rank(vectors: &[CVector], rel: f64, abs: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = vectors[0].len();
    let real = DMatrix::<f64>::from_fn(2 * m, vectors.len(), |r, j| {
        let z = vectors[j][r % m];
        if r < m {
            z.re
        } else {
            z.im
        }
    });
    if real.nrows() == 0 {
        return 0;
    }
    let sv = real.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    let cut = (rel * top).max(abs);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, unitary eigenvectors).
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(a.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Eigenvalues of a general complex matrix through its Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let schur = nalgebra::Schur::try_new(a.clone(), 1e-15, 10_000).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

pub fn is_unitary(t: &CMatrix, tol: f64) -> bool {
    let n = t.nrows();
    t.ncols() == n && frobenius(&(t.adjoint() * t - CMatrix::identity(n, n))) <= tol
}

/// Group close values: indices `i, j` land in the same cluster when a chain of
/// values closer than `tol` connects them.
pub fn cluster_indices(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_rank_sees_complex_multiples_as_independent() {
        let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let ie1 = CVector::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0)]);
        let two_e1 = CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(real_rank(&[e1.clone(), two_e1], 1e-9, 1e-10), 1);
        assert_eq!(real_rank(&[e1, ie1], 1e-9, 1e-10), 2);
        assert_eq!(real_rank(&[], 1e-9, 1e-10), 0);
    }

    #[test]
    fn clusters_chain_together() {
        let v = [c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0), c(5.0, 0.0)];
        let g = cluster_indices(&v, 0.6);
        assert_eq!(g, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn schur_eigenvalues_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 1.0)]));
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((ev[1] - c(2.0, 0.0)).norm() < 1e-12);
    }
}
