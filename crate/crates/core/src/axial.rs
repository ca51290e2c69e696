//! One-dimensional structure along the field: grid, spectral derivative,
//! free resolvent kernels and the threshold decomposition pieces.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::Threshold;
use crate::quadrature::{self, Rule};

/// Square root with Im > 0, i.e. the argument taken in (0, 2π) and halved.
/// Undefined on [0, ∞).
pub fn branch_sqrt(z: c64) -> Result<c64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::BranchCut {
            value: format!("{z}"),
            cut: "[0, +inf)",
        });
    }
    Ok(upper_sqrt(z))
}

/// Same branch without the cut check; on [0, ∞) returns the nonnegative root.
pub fn upper_sqrt(z: c64) -> c64 {
    let s = z.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// φ1(u) = (e^u − 1)/u, accurate near u = 0.
pub fn phi1(u: c64) -> c64 {
    if u.norm() < 1e-4 {
        return c64::ONE + u * (0.5 + u * (1.0 / 6.0 + u / 24.0));
    }
    let (x, y) = (u.re, u.im);
    let s = (0.5 * y).sin();
    let em1 = c64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin());
    em1 / u
}

/// Kernel of (−∂² − w²)^{-1} at separation d, for Im w ≥ 0, w ≠ 0.
pub fn resolvent_kernel_w(w: c64, d: f64) -> c64 {
    let i = c64::new(0.0, 1.0);
    i * (i * w * d.abs()).exp() / (2.0 * w)
}

/// Kernel of (−i∂)(−∂² − w²)^{-1}: (i/2)·sgn(Δ)·e^{iw|Δ|}, zero on the diagonal.
pub fn derivative_kernel_w(w: c64, delta: f64) -> c64 {
    if delta == 0.0 {
        return c64::ZERO;
    }
    let i = c64::new(0.0, 1.0);
    i * 0.5 * delta.signum() * (i * w * delta.abs()).exp()
}

/// Kernel of (−∂² − z)^{-1}, z off [0, ∞).
pub fn resolvent_kernel(z: c64, x: f64, y: f64) -> Result<c64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::BranchCut {
            value: format!("{z}"),
            cut: "[0, +inf) (use limiting_kernel for boundary values)",
        });
    }
    Ok(resolvent_kernel_w(upper_sqrt(z), x - y))
}

/// Boundary value lim_{δ↓0} of the resolvent kernel at λ + iδ.
pub fn limiting_kernel(lambda: f64, x: f64, y: f64) -> Result<c64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "limiting kernel needs λ > 0, got {lambda}"
        )));
    }
    Ok(resolvent_kernel_w(c64::new(lambda.sqrt(), 0.0), x - y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    GaussLegendre,
}

/// Quadrature nodes on [−L, L].
#[derive(Debug, Clone)]
pub struct AxialGrid {
    pub half_width: f64,
    pub kind: GridKind,
    pub rule: Rule,
}

impl AxialGrid {
    /// Uniform periodic midpoint grid (the default operator grid).
    pub fn uniform(half_width: f64, n: usize) -> Result<Self> {
        Ok(Self {
            half_width,
            kind: GridKind::Uniform,
            rule: quadrature::uniform_midpoint(half_width, n)?,
        })
    }

    /// Composite Gauss–Legendre grid, for profile integrals.
    pub fn gauss_legendre(half_width: f64, panels: usize, order: usize) -> Result<Self> {
        Ok(Self {
            half_width,
            kind: GridKind::GaussLegendre,
            rule: quadrature::composite_gauss_legendre(-half_width, half_width, panels, order)?,
        })
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.len() as f64
    }

    fn require_uniform(&self) -> Result<()> {
        if self.kind != GridKind::Uniform {
            return Err(Error::InvalidParameter(
                "operation needs the uniform axial grid".into(),
            ));
        }
        Ok(())
    }

    /// Frequencies of the spectral derivative: π k / L for
    /// k = −N/2+1, …, N/2 (the Nyquist mode carries +π/h).
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        self.require_uniform()?;
        let n = self.len() as i64;
        let lo = -(n - 1) / 2;
        Ok((lo..lo + n)
            .map(|k| PI * k as f64 / self.half_width)
            .collect())
    }

    /// Circulant matrix with symbol `sym(ξ)` in the grid ℓ² basis.
    fn circulant(&self, sym: impl Fn(f64) -> c64) -> Result<CMat> {
        let xi = self.frequencies()?;
        let n = self.len();
        let h = self.spacing();
        let vals: Vec<c64> = xi.iter().map(|&x| sym(x)).collect();
        let col: Vec<c64> = (0..n)
            .map(|d| {
                let delta = d as f64 * h;
                xi.iter()
                    .zip(&vals)
                    .map(|(&x, &v)| v * c64::new((x * delta).cos(), (x * delta).sin()))
                    .sum::<c64>()
                    / n as f64
            })
            .collect();
        // Entry (j, l) depends on (j − l) mod N.
        Ok(Mat::from_fn(n, n, |j, l| col[(j + n - l) % n]))
    }

    /// Hermitian matrix of −i d/dx (Fourier spectral).
    pub fn derivative_matrix(&self) -> Result<CMat> {
        self.circulant(|x| c64::new(x, 0.0))
    }

    /// Nyström matrix √w_j k(x_j, x_l) √w_l of a translation-invariant kernel.
    pub fn nystrom(&self, kernel: impl Fn(f64) -> c64) -> CMat {
        let x = self.nodes();
        let w = self.weights();
        let n = self.len();
        Mat::from_fn(n, n, |j, l| kernel(x[j] - x[l]) * (w[j] * w[l]).sqrt())
    }

    /// Diagonal entries √g(x_j).
    pub fn sqrt_profile(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().iter().map(|&x| g(x).sqrt()).collect()
    }
}

/// Realization of (−∂² − w²)^{-1} and (−i∂)(−∂² − w²)^{-1} on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxialResolvent {
    /// Exact inverses of the spectral-derivative model (matrix model).
    Discrete,
    /// Nyström matrices of the whole-line kernels.
    Continuum,
}

impl AxialResolvent {
    /// Returns (R, D·R) for the root w (Im w ≥ 0).
    pub fn matrices(&self, grid: &AxialGrid, w: c64) -> Result<(CMat, CMat)> {
        match self {
            AxialResolvent::Discrete => {
                let zeta = w * w;
                let r = grid.circulant(|x| c64::ONE / (x * x - zeta))?;
                let dr = grid.circulant(|x| c64::new(x, 0.0) / (x * x - zeta))?;
                Ok((r, dr))
            }
            AxialResolvent::Continuum => {
                if w == c64::ZERO {
                    return Err(Error::Singular("continuum resolvent at zero energy".into()));
                }
                Ok((
                    grid.nystrom(|d| resolvent_kernel_w(w, d)),
                    grid.nystrom(|d| derivative_kernel_w(w, d)),
                ))
            }
        }
    }
}

/// Rank-one operator a = (i/2)|G₊⟩⟨G₊| with G₊ = √g, and its factor
/// c : u ↦ ⟨u, G₊⟩, as matrices on the weighted grid.
#[derive(Debug, Clone)]
pub struct RankOne {
    pub a: CMat,
    pub c: CMat,
}

pub fn rank_one_a(grid: &AxialGrid, g: impl Fn(f64) -> f64) -> RankOne {
    let n = grid.len();
    let v: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(&x, &w)| (w * g(x)).sqrt())
        .collect();
    let c = Mat::from_fn(1, n, |_, l| c64::new(v[l], 0.0));
    let a = Mat::from_fn(n, n, |j, l| c64::new(0.0, 0.5 * v[j] * v[l]));
    RankOne { a, c }
}

/// Sign σ of √(z² − m²) = σ·k·(z ± m) on the half-disc of k.
/// Real k is taken as the limit from the upper half-disc.
pub fn half_plane_sign(k: c64, threshold: Threshold) -> f64 {
    let s = if k.im >= 0.0 { 1.0 } else { -1.0 };
    match threshold {
        Threshold::Upper => s,
        Threshold::Lower => -s,
    }
}

/// The root w = √(z² − m²) (Im ≥ 0) at z = z_{±m}(k), written as σ·k·(z ± m).
pub fn threshold_root(k: c64, mass: f64, threshold: Threshold) -> c64 {
    let z = crate::localization::z_of_k(k, mass, threshold);
    let s = half_plane_sign(k, threshold);
    match threshold {
        Threshold::Upper => k * (z + mass) * s,
        Threshold::Lower => k * (z - mass) * s,
    }
}

/// Value of s_{±m}(k) at separation d: the regular remainder
/// I_w(d) − i/(2w) = −(d/2)·φ1(i w d). Its k → 0 limit is −d/2.
pub fn s_value(k: c64, mass: f64, threshold: Threshold, d: f64) -> c64 {
    let d = d.abs();
    if k == c64::ZERO {
        return c64::new(-0.5 * d, 0.0);
    }
    let w = threshold_root(k, mass, threshold);
    -phi1(c64::new(0.0, 1.0) * w * d) * (0.5 * d)
}

/// Nyström matrix of s_{±m}(k) on the grid.
pub fn s_kernel(k: c64, mass: f64, threshold: Threshold, grid: &AxialGrid) -> CMat {
    grid.nystrom(|d| s_value(k, mass, threshold, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn sqrt_branch() {
        assert!((branch_sqrt(c64::new(-4.0, 0.0)).unwrap() - c64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((branch_sqrt(c64::new(0.0, 2.0)).unwrap() - c64::new(1.0, 1.0)).norm() < 1e-15);
        assert!(branch_sqrt(c64::new(3.0, 0.0)).is_err());
        assert!(branch_sqrt(c64::new(3.0, -1e-300)).unwrap().im > 0.0);
    }

    #[test]
    fn kernel_values() {
        let k0 = resolvent_kernel(c64::new(-1.0, 0.0), 0.3, 0.3).unwrap();
        assert!((k0 - c64::new(0.5, 0.0)).norm() < 1e-15);
        let k1 = resolvent_kernel(c64::new(-1.0, 0.0), 1.0, 0.0).unwrap();
        assert!((k1.re - (-1f64).exp() / 2.0).abs() < 1e-15);
        assert!(resolvent_kernel(c64::new(1.0, 0.0), 0.0, 0.0).is_err());
        let l0 = limiting_kernel(1.0, 0.0, 0.0).unwrap();
        assert!((l0 - c64::new(0.0, 0.5)).norm() < 1e-15);
        let lp = limiting_kernel(1.0, PI, 0.0).unwrap();
        assert!((lp - c64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn limiting_is_the_boundary_value() {
        let l = limiting_kernel(2.0, 0.7, -0.4).unwrap();
        let mut prev = f64::INFINITY;
        for e in [1e-2, 1e-3, 1e-4] {
            let r = resolvent_kernel(c64::new(2.0, e), 0.7, -0.4).unwrap();
            let err = (r - l).norm();
            assert!(err < prev && err < 10.0 * e);
            prev = err;
        }
    }

    #[test]
    fn phi1_small_and_large() {
        for u in [
            c64::new(1e-6, 2e-6),
            c64::new(0.3, -0.2),
            c64::new(-2.0, 5.0),
        ] {
            let direct = if u.norm() > 1e-3 {
                (u.exp() - 1.0) / u
            } else {
                c64::ONE + u / 2.0
            };
            assert!((phi1(u) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_is_hermitian_with_symmetric_spectrum() {
        let g = AxialGrid::uniform(3.0, 16).unwrap();
        let d = g.derivative_matrix().unwrap();
        assert!(linalg::hermitian_defect(d.as_ref()) < 1e-13);
        let ev = linalg::herm_eigenvalues(d.as_ref()).unwrap();
        let mut f = g.frequencies().unwrap();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_resolvent_inverts() {
        let g = AxialGrid::uniform(4.0, 20).unwrap();
        let d = g.derivative_matrix().unwrap();
        let w = c64::new(0.3, 0.8);
        let (r, dr) = AxialResolvent::Discrete.matrices(&g, w).unwrap();
        let d2 = &d * &d;
        let n = g.len();
        let shifted = Mat::from_fn(n, n, |i, j| {
            d2[(i, j)] - if i == j { w * w } else { c64::ZERO }
        });
        let prod = &shifted * &r;
        let id = linalg::identity(n);
        assert!(linalg::fro_norm((&prod - &id).as_ref()) < 1e-12);
        assert!(linalg::fro_norm((&(&d * &r) - &dr).as_ref()) < 1e-12);
    }

    #[test]
    fn rank_one_factorization() {
        let g = AxialGrid::uniform(6.0, 96).unwrap();
        let ro = rank_one_a(&g, |x| (-x * x).exp());
        let ctc = ro.c.adjoint() * &ro.c;
        let lhs = crate::linalg::scaled(ro.a.as_ref(), c64::new(0.0, -2.0));
        assert!(linalg::fro_norm((&lhs - &ctc).as_ref()) < 1e-12);
        let sv = linalg::singular_values(ro.a.as_ref()).unwrap();
        assert!((sv[0] - 0.5 * PI.sqrt()).abs() < 1e-12);
        assert!(sv[1] < 1e-12);
    }

    #[test]
    fn s_value_limit() {
        assert_eq!(
            s_value(c64::ZERO, 1.0, Threshold::Upper, 1.0),
            c64::new(-0.5, 0.0)
        );
        let v = s_value(c64::new(1e-7, 1e-7), 1.0, Threshold::Upper, 1.0);
        assert!((v - c64::new(-0.5, 0.0)).norm() < 1e-6);
        assert_eq!(
            s_value(c64::new(0.01, 0.02), 1.0, Threshold::Upper, 0.0),
            c64::ZERO
        );
    }
}
