//! Regularized determinants, the Lipschitz bound, winding indices along
//! contours and the Jensen zero-count bound.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::quadrature;

/// det_q(I − T) = Π (1 − μ)·exp(Σ_{k<q} μ^k/k) over the eigenvalues μ of T.
pub fn det_reg(t: MatRef<'_, c64>, q: u32) -> Result<c64> {
    check_q(q)?;
    let mut prod = c64::ONE;
    for mu in linalg::eigenvalues(t)? {
        let mut corr = c64::ZERO;
        let mut p = c64::ONE;
        for k in 1..q {
            p *= mu;
            corr += p / k as f64;
        }
        prod *= (c64::ONE - mu) * corr.exp();
    }
    Ok(prod)
}

/// ln det_q(I − T) through an LU factorization and traces of powers; the
/// imaginary part is determined modulo 2π.
pub fn log_det_reg(t: MatRef<'_, c64>, q: u32) -> Result<c64> {
    check_q(q)?;
    let n = t.nrows();
    let i_minus = Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::ONE - t[(i, j)]
        } else {
            -t[(i, j)]
        }
    });
    let mut out = linalg::log_det(i_minus.as_ref())?;
    let mut p = linalg::identity(n);
    for k in 1..q {
        p = &p * t;
        out += linalg::trace(p.as_ref()) / k as f64;
    }
    Ok(out)
}

fn check_q(q: u32) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidParameter(
            "regularization order q must be at least 1".into(),
        ));
    }
    Ok(())
}

/// (det_q(I − AB), det_q(I − BA)).
pub fn det_commute_check(a: MatRef<'_, c64>, b: MatRef<'_, c64>, q: u32) -> Result<(c64, c64)> {
    if a.ncols() != b.nrows() || b.ncols() != a.nrows() {
        return Err(Error::InvalidParameter(
            "AB and BA must both be square".into(),
        ));
    }
    Ok((det_reg((a * b).as_ref(), q)?, det_reg((b * a).as_ref(), q)?))
}

/// ‖T1 − T2‖_q·exp(Γ_q(‖T1‖_q + ‖T2‖_q + 1)^q).
pub fn lipschitz_bound(
    t1: MatRef<'_, c64>,
    t2: MatRef<'_, c64>,
    q: u32,
    gamma_q: f64,
) -> Result<f64> {
    check_q(q)?;
    let qf = q as f64;
    let diff = linalg::schatten_norm((t1 - t2).as_ref(), qf)?;
    if diff == 0.0 {
        return Ok(0.0);
    }
    let s = linalg::schatten_norm(t1, qf)? + linalg::schatten_norm(t2, qf)? + 1.0;
    Ok(diff * (gamma_q * s.powi(q as i32)).exp())
}

/// Closed positively oriented contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contour {
    Circle {
        center: c64,
        radius: f64,
    },
    Rectangle {
        lo: c64,
        hi: c64,
    },
    /// Vertices in counterclockwise order; the closing edge is implied.
    Polyline {
        vertices: Vec<c64>,
    },
    /// Consecutive line and arc pieces forming a closed loop.
    Path {
        pieces: Vec<PathPiece>,
    },
}

impl Contour {
    pub fn circle(center: c64, radius: f64) -> Self {
        Contour::Circle { center, radius }
    }

    pub fn rectangle(lo: c64, hi: c64) -> Self {
        Contour::Rectangle { lo, hi }
    }

    /// Pieces parametrized on s ∈ [0, 1].
    pub fn pieces(&self) -> Vec<PathPiece> {
        match self {
            Contour::Circle { center, radius } => {
                vec![PathPiece::Arc {
                    center: *center,
                    radius: *radius,
                    start: 0.0,
                    end: 2.0 * PI,
                }]
            }
            Contour::Rectangle { lo, hi } => {
                let v = [*lo, c64::new(hi.re, lo.im), *hi, c64::new(lo.re, hi.im)];
                (0..4)
                    .map(|i| PathPiece::Line {
                        from: v[i],
                        to: v[(i + 1) % 4],
                    })
                    .collect()
            }
            Contour::Polyline { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| PathPiece::Line {
                        from: vertices[i],
                        to: vertices[(i + 1) % n],
                    })
                    .collect()
            }
            Contour::Path { pieces } => pieces.clone(),
        }
    }

    /// Points along the contour, `per_piece` samples on each piece.
    pub fn polyline(&self, per_piece: usize) -> Vec<c64> {
        let n = per_piece.max(1);
        self.pieces()
            .iter()
            .flat_map(|p| (0..n).map(move |i| p.at(i as f64 / n as f64)))
            .collect()
    }

    /// Characteristic length used for derivative steps and vanishing tests.
    pub fn size(&self) -> f64 {
        match self {
            Contour::Circle { radius, .. } => *radius,
            Contour::Rectangle { lo, hi } => (hi - lo).norm(),
            Contour::Polyline { .. } | Contour::Path { .. } => {
                let pts = self.polyline(8);
                let c = pts.iter().copied().sum::<c64>() / pts.len() as f64;
                pts.iter().map(|v| (v - c).norm()).fold(0.0, f64::max)
            }
        }
    }

    pub fn point(&self, piece: usize, s: f64) -> c64 {
        self.pieces()[piece].at(s)
    }

    pub fn contains(&self, z: c64) -> bool {
        match self {
            Contour::Circle { center, radius } => (z - center).norm() < *radius,
            Contour::Rectangle { lo, hi } => {
                z.re > lo.re && z.re < hi.re && z.im > lo.im && z.im < hi.im
            }
            Contour::Polyline { .. } | Contour::Path { .. } => {
                let pts = self.polyline(64);
                let n = pts.len();
                let mut wind = 0.0;
                for i in 0..n {
                    wind += ((pts[(i + 1) % n] - z) / (pts[i] - z)).arg();
                }
                (wind / (2.0 * PI)).round() as i64 != 0
            }
        }
    }
}

/// A line segment or a circular arc from angle `start` to `end`
/// (counterclockwise when end > start).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathPiece {
    Line {
        from: c64,
        to: c64,
    },
    Arc {
        center: c64,
        radius: f64,
        start: f64,
        end: f64,
    },
}

impl PathPiece {
    pub fn at(&self, s: f64) -> c64 {
        match *self {
            PathPiece::Line { from, to } => from + (to - from) * s,
            PathPiece::Arc {
                center,
                radius,
                start,
                end,
            } => center + c64::cis(start + (end - start) * s) * radius,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathPiece::Line { from, to } => (to - from).norm(),
            PathPiece::Arc {
                radius, start, end, ..
            } => radius * (end - start).abs(),
        }
    }

    pub fn tangent(&self, s: f64) -> c64 {
        match *self {
            PathPiece::Line { from, to } => to - from,
            PathPiece::Arc {
                radius, start, end, ..
            } => {
                let th = start + (end - start) * s;
                c64::new(0.0, (end - start) * radius) * c64::cis(th)
            }
        }
    }
}

/// Settings of the adaptive phase tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexOptions {
    /// Initial samples per contour piece.
    pub initial: usize,
    /// Smallest parameter step before giving up.
    pub min_step: f64,
    /// |f| below this (relative to the largest sample) counts as vanishing.
    pub vanish_tol: f64,
    /// Allowed distance of the raw winding from an integer.
    pub integer_tol: f64,
    /// Largest initial sample spacing in arclength. Bisection only refines
    /// where the sampled phase moves, so a contour passing within d of a
    /// pole or zero needs spacing below d to see it.
    pub max_step: Option<f64>,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            initial: 32,
            min_step: 1e-10,
            vanish_tol: 1e-13,
            integer_tol: 1e-3,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexResult {
    pub index: i64,
    pub raw: f64,
    pub evaluations: usize,
}

/// Winding of a nonvanishing function given as a log-branch: `log_f` may
/// return any branch of ln f, only its imaginary part modulo 2π is used.
/// A zero on the contour shows up as a phase jump that survives bisection
/// down to `min_step`.
pub fn scalar_index_log(
    log_f: &dyn Fn(c64) -> Result<c64>,
    contour: &Contour,
    opts: IndexOptions,
) -> Result<IndexResult> {
    let mut total = 0.0;
    let mut evals = 0usize;
    for piece in contour.pieces() {
        let eval = |s: f64| -> Result<c64> { log_f(piece.at(s)) };
        let by_length = opts
            .max_step
            .map_or(0, |h| (piece.length() / h).ceil() as usize);
        let n = opts.initial.max(4).max(by_length);
        let mut prev_s = 0.0;
        let mut prev = eval(0.0)?;
        evals += 1;
        for i in 1..=n {
            let s = i as f64 / n as f64;
            let cur = eval(s)?;
            evals += 1;
            total += track(&eval, prev_s, prev, s, cur, opts, &mut evals, 0)?;
            prev_s = s;
            prev = cur;
        }
    }
    let raw = total / (2.0 * PI);
    let index = raw.round();
    if (raw - index).abs() > opts.integer_tol {
        return Err(Error::NonIntegerIndex {
            value: raw,
            residual: (raw - index).abs(),
        });
    }
    Ok(IndexResult {
        index: index as i64,
        raw,
        evaluations: evals,
    })
}

#[allow(clippy::too_many_arguments)]
fn track(
    eval: &dyn Fn(f64) -> Result<c64>,
    s0: f64,
    f0: c64,
    s1: f64,
    f1: c64,
    opts: IndexOptions,
    evals: &mut usize,
    depth: u32,
) -> Result<f64> {
    let d = linalg::wrap_angle(f1.im - f0.im);
    if s1 - s0 < opts.min_step || depth > 60 {
        if d.abs() > PI / 2.0 {
            return Err(Error::ContourUnsafe(format!(
                "phase jump {d:.3} unresolved near s = {s0:.3e}"
            )));
        }
        return Ok(d);
    }
    let sm = 0.5 * (s0 + s1);
    let fm = eval(sm)?;
    *evals += 1;
    let d1 = linalg::wrap_angle(fm.im - f0.im);
    let d2 = linalg::wrap_angle(f1.im - fm.im);
    // ln f is analytic, so a large swing of ln|f| also flags a fast phase
    // that the wrapped differences could alias.
    let calm = (fm.re - f0.re).abs() < PI / 2.0 && (f1.re - fm.re).abs() < PI / 2.0;
    let consistent =
        (d1 + d2 - d).abs() < 1e-6 && d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 && calm;
    if d.abs() <= PI / 2.0 && consistent {
        return Ok(d1 + d2);
    }
    Ok(track(eval, s0, f0, sm, fm, opts, evals, depth + 1)?
        + track(eval, sm, fm, s1, f1, opts, evals, depth + 1)?)
}

/// Winding number of f along the contour.
pub fn scalar_index(
    f: &dyn Fn(c64) -> c64,
    contour: &Contour,
    opts: IndexOptions,
) -> Result<IndexResult> {
    let scale = std::cell::Cell::new(0.0f64);
    let log_f = |z: c64| -> Result<c64> {
        let v = f(z);
        let a = v.norm();
        if !a.is_finite() {
            return Err(Error::ContourUnsafe(format!("f is not finite at {z}")));
        }
        scale.set(scale.get().max(a));
        if a == 0.0 || a < opts.vanish_tol * scale.get() {
            return Err(Error::ContourUnsafe(format!(
                "f vanishes on the contour near {z}"
            )));
        }
        Ok(c64::new(a.ln(), v.arg()))
    };
    scalar_index_log(&log_f, contour, opts)
}

/// (1/2πi)·Tr ∮ A'(z)A(z)^{-1} dz with Richardson-extrapolated central
/// differences and adaptive Gauss–Legendre panels.
pub fn operator_index(
    a_of_z: &dyn Fn(c64) -> CMat,
    contour: &Contour,
    opts: IndexOptions,
) -> Result<IndexResult> {
    let h0 = 1e-3 * contour.size();
    let mut evals = 0usize;
    let mut integrand = |z: c64, dz: c64| -> Result<c64> {
        let a = a_of_z(z);
        let diff = |h: f64| {
            let hc = dz / dz.norm() * h;
            linalg::scaled(
                (a_of_z(z + hc) - a_of_z(z - hc)).as_ref(),
                c64::ONE / (hc * 2.0),
            )
        };
        let d1 = diff(h0);
        let d2 = diff(0.5 * h0);
        let da = linalg::scaled(d2.as_ref(), c64::new(4.0 / 3.0, 0.0))
            - linalg::scaled(d1.as_ref(), c64::new(1.0 / 3.0, 0.0));
        evals += 5;
        let sv = linalg::singular_values(a.as_ref())?;
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        if smin <= opts.vanish_tol * smax.max(1.0) {
            return Err(Error::ContourUnsafe(format!(
                "A(z) singular on the contour near {z}"
            )));
        }
        let x = linalg::solve(a.as_ref(), da.as_ref());
        Ok(linalg::trace(x.as_ref()) * dz)
    };
    let mut total = c64::ZERO;
    for piece in contour.pieces() {
        total += adaptive_gl(
            &mut |s| integrand(piece.at(s), piece.tangent(s)),
            0.0,
            1.0,
            0,
        )?;
    }
    let raw_c = total / c64::new(0.0, 2.0 * PI);
    let raw = raw_c.re;
    let index = raw.round();
    let residual = (raw_c - index).norm();
    if residual > opts.integer_tol {
        return Err(Error::NonIntegerIndex {
            value: raw,
            residual,
        });
    }
    Ok(IndexResult {
        index: index as i64,
        raw,
        evaluations: evals,
    })
}

fn adaptive_gl(f: &mut dyn FnMut(f64) -> Result<c64>, a: f64, b: f64, depth: u32) -> Result<c64> {
    let coarse = gl_panel(f, a, b)?;
    let m = 0.5 * (a + b);
    let fine = gl_panel(f, a, m)? + gl_panel(f, m, b)?;
    if (fine - coarse).norm() < 1e-9 || depth > 14 {
        return Ok(fine);
    }
    Ok(adaptive_gl(f, a, m, depth + 1)? + adaptive_gl(f, m, b, depth + 1)?)
}

fn gl_panel(f: &mut dyn FnMut(f64) -> Result<c64>, a: f64, b: f64) -> Result<c64> {
    let rule = quadrature::composite_gauss_legendre(a, b, 1, 10)?;
    let mut s = c64::ZERO;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        s += f(*x)? * *w;
    }
    Ok(s)
}

/// Disc D(center, outer) with counting disc D(center, inner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenDomain {
    pub center: c64,
    pub outer: f64,
    pub inner: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenBound {
    pub bound: f64,
    pub constant: f64,
    pub mean_log_boundary: f64,
    pub log_center: f64,
}

/// Zeros of g in D(λ0, r) ≤ C'·(mean of ln|g| on ∂D(λ0, R) − ln|g(λ0)|)
/// with C' = 1/ln(R/r).
pub fn jensen_count_bound(
    g: &dyn Fn(c64) -> c64,
    domain: JensenDomain,
    samples: usize,
) -> Result<JensenBound> {
    if !(domain.inner > 0.0 && domain.outer > domain.inner) {
        return Err(Error::InvalidParameter(
            "Jensen domain needs 0 < inner < outer".into(),
        ));
    }
    let g0 = g(domain.center).norm();
    if !(g0 > 1e-300) {
        return Err(Error::ContourUnsafe(
            "g vanishes at the interior point".into(),
        ));
    }
    let n = samples.max(16);
    let mut mean = 0.0;
    for i in 0..n {
        let th = 2.0 * PI * (i as f64 + 0.5) / n as f64;
        let v = g(domain.center + c64::cis(th) * domain.outer).norm();
        if !(v > 0.0) {
            return Err(Error::ContourUnsafe(
                "g vanishes on the outer circle".into(),
            ));
        }
        mean += v.ln();
    }
    mean /= n as f64;
    let constant = 1.0 / (domain.outer / domain.inner).ln();
    Ok(JensenBound {
        bound: constant * (mean - g0.ln()),
        constant,
        mean_log_boundary: mean,
        log_center: g0.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[c64]) -> CMat {
        linalg::from_diag(d)
    }

    #[test]
    fn single_eigenvalue_half() {
        let t = diag(&[c64::new(0.5, 0.0), c64::ZERO]);
        let d = det_reg(t.as_ref(), 2).unwrap();
        assert!((d.re - 0.5 * 0.5f64.exp()).abs() < 1e-14);
        let l = log_det_reg(t.as_ref(), 2).unwrap();
        assert!((l.exp() - d).norm() < 1e-13);
    }

    #[test]
    fn zero_operator() {
        for q in 1..5 {
            assert_eq!(det_reg(linalg::zeros(3, 3).as_ref(), q).unwrap(), c64::ONE);
        }
        assert!(det_reg(linalg::zeros(1, 1).as_ref(), 0).is_err());
    }

    #[test]
    fn windings() {
        let o = IndexOptions::default();
        let unit = Contour::circle(c64::ZERO, 1.0);
        assert_eq!(scalar_index(&|k| k * k * k, &unit, o).unwrap().index, 3);
        let f = |k: c64| (k - 0.2) * (k - 0.3) * (k - 0.3);
        assert_eq!(scalar_index(&f, &unit, o).unwrap().index, 3);
        assert_eq!(
            scalar_index(&f, &Contour::circle(c64::ZERO, 0.25), o)
                .unwrap()
                .index,
            1
        );
        assert_eq!(
            scalar_index(&|k: c64| (k * k).exp(), &unit, o)
                .unwrap()
                .index,
            0
        );
        let rect = Contour::rectangle(c64::new(-1.0, -1.0), c64::new(0.25, 1.0));
        assert_eq!(scalar_index(&f, &rect, o).unwrap().index, 1);
    }

    #[test]
    fn vanishing_on_contour_is_unsafe() {
        let r = scalar_index(
            &|k| k - 1.0,
            &Contour::circle(c64::ZERO, 1.0),
            IndexOptions::default(),
        );
        assert!(matches!(r, Err(Error::ContourUnsafe(_))));
    }

    #[test]
    fn operator_diag() {
        let a = |z: c64| diag(&[z, c64::ONE, c64::ONE]);
        let r = operator_index(
            &a,
            &Contour::circle(c64::ZERO, 1.0),
            IndexOptions::default(),
        )
        .unwrap();
        assert_eq!(r.index, 1);
    }

    #[test]
    fn jensen_polynomial() {
        let g = |k: c64| (k - 0.1) * (k + c64::new(0.0, 0.2));
        let b = jensen_count_bound(
            &g,
            JensenDomain {
                center: c64::new(0.05, 0.05),
                outer: 1.0,
                inner: 0.4,
            },
            256,
        )
        .unwrap();
        assert!(b.bound >= 2.0, "{b:?}");
    }
}
