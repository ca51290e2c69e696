//! Landau-level states of the constant field in symmetric gauge, their
//! polar quadrature, Toeplitz compressions and gap radii.
//!
//! With u = √(b/2)(x1 + i x2) the states are polynomials in (u, ū) times
//! e^{−|u|²/2}. The ladder operators act on the polynomial part as
//! a† : P ↦ −i(∂_u P − ū P) and a : P ↦ −i ∂_ū P, matching
//! Π1 − iΠ2 = √(2b)·a† for A = (b/2)(−x2, x1).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{Potential, Threshold};
use crate::quadrature::{self, Rule};

/// Largest angular index plus level the quadrature is sized for.
pub const MAX_INDEX: usize = 120;

/// Polynomial in (u, ū): (p, q) ↦ coefficient of u^p ū^q.
#[derive(Debug, Clone, Default)]
struct Poly(BTreeMap<(u32, u32), c64>);

impl Poly {
    fn raise(&self) -> Poly {
        let mut out = BTreeMap::new();
        let mi = c64::new(0.0, -1.0);
        for (&(p, q), &c) in &self.0 {
            if p > 0 {
                *out.entry((p - 1, q)).or_insert(c64::ZERO) += mi * c * p as f64;
            }
            *out.entry((p, q + 1)).or_insert(c64::ZERO) -= mi * c;
        }
        Poly(out)
    }

    fn scale(&mut self, s: f64) {
        for c in self.0.values_mut() {
            *c *= s;
        }
    }
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Label of a transverse Landau state: level n, angular index a.
/// Its angular momentum is a − n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LandauLabel {
    pub level: usize,
    pub index: usize,
}

impl LandauLabel {
    pub fn angular_momentum(&self) -> i64 {
        self.index as i64 - self.level as i64
    }
}

/// Polar product rule in (t, θ) with t = |u|² = b r²/2; d²x = dt dθ / b.
#[derive(Debug, Clone)]
pub struct PolarQuadrature {
    pub field: f64,
    pub t: Rule,
    pub n_theta: usize,
}

impl PolarQuadrature {
    pub fn for_indices(field: f64, max_index: usize) -> Result<Self> {
        let t_max = (3 * max_index) as f64 + 40.0;
        let panels = (t_max / 2.0).ceil() as usize;
        let t = quadrature::composite_gauss_legendre(0.0, 2.0 * panels as f64, panels, 20)?;
        Ok(Self {
            field,
            t,
            n_theta: 4 * max_index + 32,
        })
    }

    pub fn theta(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_theta as f64
    }

    pub fn point(&self, i: usize, k: usize) -> (f64, f64) {
        let r = (2.0 * self.t.nodes[i] / self.field).sqrt();
        let th = self.theta(k);
        (r * th.cos(), r * th.sin())
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Landau states (level < `levels`, index < `count`) sampled on a polar rule.
#[derive(Debug, Clone)]
pub struct LandauBasis {
    pub field: f64,
    pub levels: usize,
    pub count: usize,
    pub quad: PolarQuadrature,
    labels: Vec<LandauLabel>,
    /// Radial factor at each t-node, so ψ = e^{i(a−n)θ}·radial(t).
    radial: Vec<Vec<c64>>,
}

/// The lowest-Landau-level basis with `count` angular states.
pub fn lll_basis(field: f64, count: usize) -> Result<LandauBasis> {
    LandauBasis::new(field, 1, count)
}

impl LandauBasis {
    pub fn new(field: f64, levels: usize, count: usize) -> Result<Self> {
        if !(field > 0.0) || levels == 0 || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "Landau basis needs b0 > 0 and positive sizes, got b0 = {field}, levels = {levels}, M = {count}"
            )));
        }
        let max_index = levels + count;
        if max_index > MAX_INDEX {
            return Err(Error::Quadrature(format!(
                "levels + M = {max_index} exceeds the resolvable index {MAX_INDEX}"
            )));
        }
        let quad = PolarQuadrature::for_indices(field, max_index)?;
        let mut labels = Vec::new();
        let mut radial = Vec::new();
        for a in 0..count {
            let mut poly = Poly::default();
            let norm = (field / (2.0 * PI)).sqrt() * (-0.5 * ln_factorial(a as u32)).exp();
            poly.0.insert((a as u32, 0), c64::new(norm, 0.0));
            for n in 0..levels {
                labels.push(LandauLabel { level: n, index: a });
                radial.push(eval_radial(&poly, &quad.t.nodes));
                poly = poly.raise();
                poly.scale(1.0 / ((n + 1) as f64).sqrt());
            }
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&i| (labels[i].level, labels[i].index));
        let labels = order.iter().map(|&i| labels[i]).collect();
        let radial = order.iter().map(|&i| radial[i].clone()).collect();
        Ok(Self {
            field,
            levels,
            count,
            quad,
            labels,
            radial,
        })
    }

    pub fn labels(&self) -> &[LandauLabel] {
        &self.labels
    }

    pub fn position(&self, label: LandauLabel) -> Option<usize> {
        if label.level < self.levels && label.index < self.count {
            Some(label.level * self.count + label.index)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// ψ_label at the node (t_i, θ_k).
    pub fn value(&self, s: usize, i: usize, k: usize) -> c64 {
        let l = self.labels[s].angular_momentum() as f64;
        let th = self.quad.theta(k);
        self.radial[s][i] * c64::new((l * th).cos(), (l * th).sin())
    }

    /// Matrix ⟨ψ_i, f ψ_j⟩ over all states of the basis.
    pub fn matrix_elements(&self, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> CMat {
        let q = &self.quad;
        let nt = q.t.len();
        let nth = q.n_theta;
        let samples: Vec<f64> = (0..nt * nth)
            .map(|idx| {
                let (x1, x2) = q.point(idx / nth, idx % nth);
                f(x1, x2)
            })
            .collect();
        let radial_profile = samples.chunks(nth).all(|row| {
            row.iter()
                .all(|&v| (v - row[0]).abs() <= 1e-12 * row[0].abs().max(1e-300))
        });
        // Angular Fourier coefficients of f at each t-node, keyed by the
        // angular-momentum difference.
        let mut coeffs: BTreeMap<i64, Vec<c64>> = BTreeMap::new();
        let n = self.len();
        let mut out = Mat::<c64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let d = self.labels[j].angular_momentum() - self.labels[i].angular_momentum();
                if radial_profile && d != 0 {
                    continue;
                }
                let fh = coeffs.entry(d).or_insert_with(|| {
                    (0..nt)
                        .map(|it| {
                            let mut s = c64::ZERO;
                            for k in 0..nth {
                                let th = q.theta(k) * d as f64;
                                s += c64::new(th.cos(), th.sin()) * samples[it * nth + k];
                            }
                            s * (2.0 * PI / nth as f64)
                        })
                        .collect()
                });
                let acc: c64 = (0..nt)
                    .map(|it| {
                        self.radial[i][it].conj() * self.radial[j][it] * fh[it] * q.t.weights[it]
                    })
                    .sum();
                out[(i, j)] = acc / self.field;
            }
        }
        out
    }

    pub fn gram(&self) -> CMat {
        self.matrix_elements(&|_, _| 1.0)
    }
}

fn eval_radial(poly: &Poly, t_nodes: &[f64]) -> Vec<c64> {
    t_nodes
        .iter()
        .map(|&t| {
            let ln_rho = 0.5 * t.ln();
            poly.0
                .iter()
                .map(|(&(p, q), &c)| {
                    let deg = (p + q) as f64;
                    let mag = if deg == 0.0 {
                        (-0.5 * t).exp()
                    } else {
                        (deg * ln_rho - 0.5 * t).exp()
                    };
                    c * mag
                })
                .sum()
        })
        .collect()
}

/// Transverse function x⊥ ↦ ½∫ |V|_{cc}(x⊥, x3) dx3 with c the LLL spinor
/// component of the threshold.
#[derive(Debug, Clone)]
pub struct ThresholdProfile {
    potential: Potential,
    weight: f64,
}

impl ThresholdProfile {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.weight * self.potential.spec().transverse.eval(x1, x2)
    }
}

/// |M| = (M*M)^{1/2} of a 4×4 matrix through its Hermitian eigendecomposition.
pub fn abs_matrix(v: &crate::model::Spinor4) -> Result<CMat> {
    let m = crate::model::spinor_to_mat(v);
    let vv = m.adjoint() * &m;
    linalg::psd_sqrt(vv.as_ref())
}

/// Since V(x) = (ε w⊥ g)(x)·ΦS with a nonnegative scalar factor,
/// |V(x)| = ε w⊥ g · |ΦS|, so the x3 integral factorizes.
pub fn vm_profile(potential: &Potential, threshold: Threshold) -> Result<ThresholdProfile> {
    let spec = potential.spec();
    let mut phis = spec.spinor;
    for row in phis.iter_mut() {
        for e in row.iter_mut() {
            *e *= spec.phi;
        }
    }
    let abs = abs_matrix(&phis)?;
    let c = threshold.lll_component();
    let axial = spec.axial.integral();
    if !axial.is_finite() {
        return Err(Error::Quadrature("axial integral diverged".into()));
    }
    Ok(ThresholdProfile {
        potential: potential.clone(),
        weight: 0.5 * spec.coupling * axial * abs[(c, c)].re,
    })
}

/// ⟨ψ_i, f ψ_j⟩ over the states of the basis.
pub fn toeplitz_matrix(profile: &(dyn Fn(f64, f64) -> f64 + Sync), basis: &LandauBasis) -> CMat {
    basis.matrix_elements(profile)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub upper: f64,
    pub lower: f64,
    pub qualifies: bool,
    pub radius: f64,
    pub distance_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToeplitzSpectrum {
    pub mu: Vec<f64>,
    pub radii: Vec<f64>,
    pub nu_gap: f64,
    pub gaps: Vec<GapReport>,
    pub warning: Option<String>,
}

impl ToeplitzSpectrum {
    /// Tr 1_{(lo, hi)} of the operator whose spectrum is `mu`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.mu.iter().filter(|&&m| m > lo && m < hi).count()
    }

    /// Tr 1_{(r, ∞)}.
    pub fn count_above(&self, r: f64) -> usize {
        self.mu.iter().filter(|&&m| m > r).count()
    }
}

/// Decreasing eigenvalues of a Hermitian Toeplitz matrix, dropping those
/// below `tol` times the largest.
pub fn toeplitz_spectrum(mat: &CMat, tol: f64) -> Result<Vec<f64>> {
    let mut ev = linalg::herm_eigenvalues(mat.as_ref())?;
    ev.reverse();
    let top = ev.first().copied().unwrap_or(0.0).max(0.0);
    Ok(ev
        .into_iter()
        .filter(|&v| v > tol * top && v > 0.0)
        .collect())
}

fn distance_to(r: f64, mu: &[f64]) -> f64 {
    mu.iter()
        .map(|m| (m - r).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Radii r_ℓ placed in relative gaps μ_j − μ_{j+1} > ν μ_j. The geometric
/// mean of the flanking eigenvalues is tried first, then the arithmetic
/// mean; a radius is kept only if dist(r, {μ}) ≥ ν r / 2.
pub fn gap_radii(mu: &[f64], nu_gap: f64, count: usize) -> Result<ToeplitzSpectrum> {
    if !(nu_gap > 0.0 && nu_gap < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nu_gap must lie in (0, 1), got {nu_gap}"
        )));
    }
    if mu.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "eigenvalue list must be decreasing".into(),
        ));
    }
    let positive: Vec<f64> = mu.iter().copied().filter(|&m| m > 0.0).collect();
    let mut distinct = positive.clone();
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    let mut out = ToeplitzSpectrum {
        mu: mu.to_vec(),
        radii: Vec::new(),
        nu_gap,
        gaps: Vec::new(),
        warning: None,
    };
    if distinct.len() < 2 {
        out.warning = Some("fewer than two distinct positive eigenvalues; no gap radii".into());
        return Ok(out);
    }
    for w in positive.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let qualifies = hi - lo > nu_gap * hi;
        let mut radius = (hi * lo).sqrt();
        let mut ok = qualifies && distance_to(radius, &positive) >= 0.5 * nu_gap * radius;
        if qualifies && !ok {
            let alt = 0.5 * (hi + lo);
            if distance_to(alt, &positive) >= 0.5 * nu_gap * alt {
                radius = alt;
                ok = true;
            }
        }
        out.gaps.push(GapReport {
            upper: hi,
            lower: lo,
            qualifies,
            radius,
            distance_ok: ok,
        });
        if ok && out.radii.len() < count {
            out.radii.push(radius);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lll_orthonormal() {
        let b = lll_basis(2.0, 4).unwrap();
        let g = b.gram();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).norm() < 1e-10, "{i} {j} {:?}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn higher_levels_orthonormal() {
        let b = LandauBasis::new(1.3, 3, 5).unwrap();
        let g = b.gram();
        let n = b.len();
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn ground_state_peaks_at_origin() {
        let b = lll_basis(2.0, 1).unwrap();
        let first = b.value(0, 0, 0).norm();
        let later = b.value(0, b.quad.t.len() / 2, 0).norm();
        assert!(first > later);
        // |ψ_0| = √(b/2π)·e^{−t/2}
        let t0 = b.quad.t.nodes[0];
        assert!((first - (2.0 / (2.0 * PI)).sqrt() * (-0.5 * t0).exp()).abs() < 1e-13);
    }

    #[test]
    fn gaussian_toeplitz_is_geometric() {
        let b = lll_basis(2.0, 6).unwrap();
        let t = toeplitz_matrix(&|x, y| (-(x * x + y * y)).exp(), &b);
        for i in 0..6 {
            assert!((t[(i, i)].re - 0.5f64.powi(i as i32 + 1)).abs() < 1e-13);
        }
        assert!(linalg::hermitian_defect(t.as_ref()) < 1e-12);
    }

    #[test]
    fn geometric_gap_radii() {
        let s = gap_radii(&[0.5, 0.25, 0.125], 0.3, 5).unwrap();
        assert_eq!(s.radii.len(), 2);
        assert!((s.radii[0] - 0.125f64.sqrt()).abs() < 1e-12);
        assert!((s.radii[1] - (0.25f64 * 0.125).sqrt()).abs() < 1e-12);
        for &r in &s.radii {
            assert!(distance_to(r, &s.mu) >= 0.15 * r);
        }
        assert!(gap_radii(&[0.7], 0.3, 5).unwrap().radii.is_empty());
    }
}
