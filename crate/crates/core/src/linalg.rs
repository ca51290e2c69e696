//! Thin wrappers over `faer` used throughout the crate.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn from_diag(d: &[c64]) -> CMat {
    Mat::from_fn(
        d.len(),
        d.len(),
        |i, j| if i == j { d[i] } else { c64::ZERO },
    )
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

/// c·A.
pub fn scaled(a: MatRef<'_, c64>, c: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * c)
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn fro_norm(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut s: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s = s.max(a[(i, j)].norm());
        }
    }
    s
}

pub fn hermitian_defect(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut s: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            s = s.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    s
}

pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn herm_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = hermitian_part(a);
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn herm_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(a);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S();
    let vals = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// f(A) for Hermitian A through its eigendecomposition.
pub fn herm_apply(a: MatRef<'_, c64>, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, u) = herm_eigen(a)?;
    let n = vals.len();
    let fd: Vec<f64> = vals.iter().map(|&v| f(v)).collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| u[(i, k)] * fd[k] * u[(j, k)].conj()).sum()
    }))
}

/// Square root of a Hermitian positive semidefinite matrix; round-off
/// negative eigenvalues are clamped to zero.
pub fn psd_sqrt(a: MatRef<'_, c64>) -> Result<CMat> {
    herm_apply(a, |v| v.max(0.0).sqrt())
}

/// Orthogonal projection onto the eigenspaces with eigenvalue above `tol`.
pub fn range_projector(a: MatRef<'_, c64>, tol: f64) -> Result<CMat> {
    herm_apply(a, |v| if v > tol { 1.0 } else { 0.0 })
}

pub fn eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

pub fn op_norm(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Schatten q-norm from singular values.
pub fn schatten_norm(a: MatRef<'_, c64>, q: f64) -> Result<f64> {
    let s = singular_values(a)?;
    if q.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    Ok(s.iter().map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q))
}

fn perm_parity(fwd: &[usize]) -> bool {
    let mut seen = vec![false; fwd.len()];
    let mut odd = false;
    for start in 0..fwd.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = fwd[i];
            len += 1;
        }
        if len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}

/// Natural log of the determinant, `ln|det| + i arg det`, from a partially
/// pivoted LU factorization. Returns `Singular` on an exactly zero pivot.
pub fn log_det(a: MatRef<'_, c64>) -> Result<c64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(c64::ZERO);
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let mut acc = c64::ZERO;
    for i in 0..n {
        let d = u[(i, i)];
        if d == c64::ZERO {
            return Err(Error::Singular(format!("zero pivot at {i}")));
        }
        acc += d.ln();
    }
    let (fwd, _) = lu.P().arrays();
    let fwd: Vec<usize> = fwd.to_vec();
    if perm_parity(&fwd) {
        acc += c64::new(0.0, std::f64::consts::PI);
    }
    Ok(acc)
}

/// Solve `a x = b` by partially pivoted LU.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn inverse(a: MatRef<'_, c64>) -> CMat {
    solve(a, identity(a.nrows()).as_ref())
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Mat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}
