//! Node/weight rules shared by the transverse and axial discretizations.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Composite Gauss–Legendre rule with `panels` equal panels of `order` nodes.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> Result<Rule> {
    if !(b > a) || panels == 0 || order == 0 {
        return Err(Error::InvalidParameter(format!(
            "composite rule needs a < b and positive sizes, got [{a}, {b}], {panels}x{order}"
        )));
    }
    let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in gl.as_node_weight_pairs() {
            nodes.push(lo + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    Ok(Rule { nodes, weights })
}

/// Midpoint nodes of `n` equal cells on [−half, half] with equal weights.
pub fn uniform_midpoint(half: f64, n: usize) -> Result<Rule> {
    if !(half > 0.0) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "uniform grid needs half-width > 0 and n > 0, got {half}, {n}"
        )));
    }
    let h = 2.0 * half / n as f64;
    let nodes = (0..n).map(|j| -half + (j as f64 + 0.5) * h).collect();
    Ok(Rule {
        nodes,
        weights: vec![h; n],
    })
}

/// Integral over [0, ∞) of a smooth integrand with Gaussian or integrable
/// power-law decay. Uses x = s·t/(1−t) with panels graded geometrically
/// towards t = 1.
pub fn half_line(f: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let s = scale.max(1e-6);
    let gl = GaussLegendre::new(NonZeroUsize::new(20).expect("nonzero"));
    let g = |t: f64| {
        let d = 1.0 - t;
        s * f(s * t / d) / (d * d)
    };
    let mut total = 0.0;
    let inner = 32;
    for p in 0..inner {
        let lo = 0.5 * p as f64 / inner as f64;
        let hi = 0.5 * (p + 1) as f64 / inner as f64;
        total += gl.integrate(lo, hi, g);
    }
    let mut lo = 0.5;
    for _ in 0..50 {
        let hi = 1.0 - 0.5 * (1.0 - lo);
        let mid = 0.5 * (lo + hi);
        total += gl.integrate(lo, mid, g) + gl.integrate(mid, hi, g);
        lo = hi;
    }
    total
}
