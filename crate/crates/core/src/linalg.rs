//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<CMatrix> {
    let n = rows.len();
    for r in rows {
        if r.len() != n {
            return Err(Error::NonSquare {
                rows: n,
                cols: r.len(),
            });
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| real(rows[i][j])))
}

/// Largest singular value, i.e. the induced 2-norm.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() == 1 || m.nrows() == 1 {
        return m.norm();
    }
    if m.is_square() && is_diagonal(m) {
        return m.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    m.singular_values().max()
}

/// Largest singular value together with the corresponding right singular vector.
pub fn top_singular_pair(m: &CMatrix) -> (f64, CVector) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let v = v_t.row(idx).adjoint();
    (sigma, v)
}

pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("matrix is singular".into()))
}

/// Solves `a x = b` by LU.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular system".into()))
}

pub fn matrix_power(m: &CMatrix, n: u32) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..n {
        out = &out * m;
    }
    out
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, v)| k % m.nrows() == k / m.nrows() || *v == C64::new(0.0, 0.0))
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Columns are unit-norm right eigenvectors.
    pub vectors: CMatrix,
    /// `vectors^{-1}`; rows are the matching left eigenvectors.
    pub inverse: Option<CMatrix>,
    pub condition: f64,
}

impl Eigen {
    pub fn of_diagonal(diag: &CVector) -> Self {
        let n = diag.len();
        Self {
            values: diag.iter().copied().collect(),
            vectors: identity(n),
            inverse: Some(identity(n)),
            condition: 1.0,
        }
    }

    /// Complex Schur form followed by triangular back-substitution
    /// (the same scheme as LAPACK's `trevc`).
    pub fn general(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
        let (q, t) = schur.unpack();
        let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

        let scale = t.norm().max(f64::MIN_POSITIVE);
        let smin = (f64::EPSILON * scale).max(f64::MIN_POSITIVE * 1e3);
        let mut x = CMatrix::zeros(n, n);
        for k in 0..n {
            x[(k, k)] = real(1.0);
            for j in (0..k).rev() {
                let mut acc = C64::new(0.0, 0.0);
                for l in (j + 1)..=k {
                    acc += t[(j, l)] * x[(l, k)];
                }
                let mut d = t[(j, j)] - t[(k, k)];
                if d.norm() < smin {
                    d = real(smin);
                }
                x[(j, k)] = -acc / d;
            }
        }
        let mut vectors = q * x;
        for mut col in vectors.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= real(norm);
            }
        }
        let condition = condition_number(&vectors);
        let inverse = if condition.is_finite() && condition < 1e14 {
            vectors.clone().try_inverse()
        } else {
            None
        };
        Ok(Self {
            values,
            vectors,
            inverse,
            condition,
        })
    }
}

/// Hermitian positive-definite square root and its inverse.
pub fn hermitian_sqrt_pair(h: &CMatrix) -> (CMatrix, CMatrix) {
    let eig = SymmetricEigen::new(h.clone());
    let u = &eig.eigenvectors;
    let sqrt = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| real(v.max(0.0).sqrt())),
    );
    let inv_sqrt = sqrt.map(|v| C64::new(1.0, 0.0) / v);
    let s = u * CMatrix::from_diagonal(&sqrt) * u.adjoint();
    let s_inv = u * CMatrix::from_diagonal(&inv_sqrt) * u.adjoint();
    (s, s_inv)
}

/// Groups eigenvalues closer than `tol` (single linkage) and returns
/// `(mean, count)` per cluster, sorted by decreasing real part.
pub fn cluster_eigenvalues(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
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
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    let mut out: Vec<(C64, usize)> = groups
        .into_iter()
        .map(|(_, sum, k)| (sum / real(k as f64), k))
        .collect();
    out.sort_by(|a, b| {
        b.0.re
            .partial_cmp(&a.0.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.im.partial_cmp(&b.0.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_upper_triangular_recovers_diagonal() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[real(-0.1), real(2.0), real(0.0), real(-2.0)],
        );
        let e = Eigen::general(&m).unwrap();
        let mut vals: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] + 2.0).abs() < 1e-14 && (vals[1] + 0.1).abs() < 1e-14);
        let inv = e.inverse.unwrap();
        let d = CMatrix::from_diagonal(&CVector::from_vec(e.values.clone()));
        assert!((&e.vectors * d * inv - m).norm() < 1e-13);
    }

    #[test]
    fn jordan_block_is_flagged_ill_conditioned() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[real(-0.1), real(1.0), real(0.0), real(-0.1)],
        );
        let e = Eigen::general(&m).unwrap();
        assert!(e.condition > 1e6);
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), real(2.0), real(0.5), c(0.0, -1.0)]);
        let h = identity(2) + z.adjoint() * &z;
        let (s, s_inv) = hermitian_sqrt_pair(&h);
        assert!((&s * &s - &h).norm() < 1e-12);
        assert!((&s * &s_inv - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn clustering_merges_close_values() {
        let v = [real(-1.0), real(-1.0 + 1e-9), c(0.0, 2.0)];
        let cl = cluster_eigenvalues(&v, 1e-6);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].1, 1);
        assert_eq!(cl[1].1, 2);
    }
}
