//! Direct eigenvalues of the truncated operator against zeros of the
//! Birman–Schwinger determinant, in both directions.
//!
//! On the matrix model the free poles of k ↦ det(I + T(z(k))) sit on the
//! coordinate axes of the k-plane (real free spectrum). Each eigenvalue is
//! checked on a box whose size is set by its distance to the axes and to
//! its neighbours; the converse search runs on a guard rectangle that keeps
//! a strip of width g around the axes, sampled finely enough not to alias
//! the poles.

use faer::c64;
use serde::Serialize;

use crate::birman_schwinger::{Backend, BirmanSchwinger};
use crate::det_index::IndexOptions;
use crate::dirac_op::{assemble_free_on, assemble_potential, cluster, Discretization};
use crate::error::{Error, Result};
use crate::linalg;
use crate::localization::k_of_z;
use crate::localization::zeros::{channel_log_det, find_zeros, ZeroSearch};
use crate::model::Threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenMatch {
    pub channel: usize,
    pub z: c64,
    pub k: c64,
    pub multiplicity: usize,
    /// Zero of the determinant closest to k, if one was found.
    pub zero: Option<c64>,
    pub winding: Option<i64>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub threshold: Threshold,
    pub eta: f64,
    pub forward: Vec<EigenMatch>,
    /// The converse search covers g < |Im k| < extent, 0.1g < Re k < extent.
    pub guard_height: f64,
    /// (channel, zero, multiplicity, matched eigenvalue).
    pub converse: Vec<(usize, c64, i64, Option<c64>)>,
    /// Eigenvalues (with multiplicity) whose k lies in the guard rectangles.
    pub expected_in_guard: i64,
    pub winding_in_guard: i64,
    pub max_forward_distance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceOptions {
    pub eta: f64,
    /// Eigenvalues with |Im z| below this count as real.
    pub real_tol: f64,
    /// Allowed |k_zero − k_of_z(z)|.
    pub match_tol: f64,
    /// Bound on |Re k| and |Im k| of the guard rectangles.
    pub guard_extent: f64,
    pub search: ZeroSearch,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self {
            eta: 0.5,
            real_tol: 1e-10,
            match_tol: 1e-6,
            guard_extent: 0.5,
            search: ZeroSearch::default(),
        }
    }
}

struct ChannelEigen {
    channel: usize,
    z: c64,
    k: c64,
    multiplicity: usize,
}

fn box_around(k: c64, h: f64) -> (c64, c64) {
    (k - c64::new(h, h), k + c64::new(h, h))
}

/// Height inside the lowest gap of ratio ≥ 3 among the values above
/// 1e−3·extent (geometric mean of the gap ends; the floor counts as a
/// value), else inside the largest gap.
fn guard_height(mut ims: Vec<f64>, extent: f64) -> f64 {
    let floor = 1e-3 * extent;
    ims.retain(|v| *v > floor && *v < extent);
    ims.push(floor);
    ims.push(extent);
    ims.sort_by(f64::total_cmp);
    let mut best = (0.0, floor);
    for w in ims.windows(2) {
        let ratio = w[1] / w[0];
        if ratio >= 3.0 {
            return (w[0] * w[1]).sqrt();
        }
        if ratio > best.0 {
            best = (ratio, (w[0] * w[1]).sqrt());
        }
    }
    best.1
}

/// Checks that non-real eigenvalues of D + V with |z ∓ m| < η are exactly the
/// zeros of det(I + T_V(z)) on a finite-dimensional backend.
pub fn check_equivalence(
    disc: &Discretization,
    threshold: Threshold,
    backend: Backend,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport> {
    if matches!(
        backend,
        Backend::Kernel(crate::axial::AxialResolvent::Continuum)
    ) {
        return Err(Error::InvalidParameter(
            "the continuum kernel is not the resolvent of the truncated matrix; use a discrete backend".into(),
        ));
    }
    let mass = disc.params.mass;
    let centre = threshold.sign() * mass;
    let op = assemble_free_on(disc)?.add(&assemble_potential(disc))?;
    let bs = BirmanSchwinger::new(disc)?;

    let mut eigen = Vec::new();
    for (channel, block) in op.blocks.iter().enumerate() {
        let zs = linalg::eigenvalues(block.mat.as_ref())?;
        for p in cluster(zs, 1e-8 * mass) {
            if p.z.im.abs() <= opts.real_tol {
                continue;
            }
            let k = k_of_z(p.z, mass, threshold)?;
            eigen.push(ChannelEigen {
                channel,
                z: p.z,
                k,
                multiplicity: p.multiplicity,
            });
        }
    }

    // Forward: a box around each eigenvalue inside the η-disc.
    let mut forward = Vec::new();
    for e in eigen.iter().filter(|e| (e.z - centre).norm() < opts.eta) {
        let neighbour = eigen
            .iter()
            .filter(|o| o.channel == e.channel && (o.k - e.k).norm() > 0.0)
            .map(|o| (o.k - e.k).norm())
            .fold(f64::INFINITY, f64::min);
        let room = neighbour
            .min(e.k.im.abs())
            .min(e.k.re.abs())
            .min(e.k.norm());
        let h = 0.3 * room;
        let f = channel_log_det(&bs, e.channel, threshold, backend, opts.search.q);
        let (lo, hi) = box_around(e.k, h);
        let search = ZeroSearch {
            min_box: 1e-9 * h.max(1e-300),
            ..opts.search
        };
        let (zero, winding) = match find_zeros(&f, lo, hi, search, mass, threshold) {
            Ok(out) => {
                let nearest = out
                    .zeros
                    .iter()
                    .map(|z| z.point.k)
                    .min_by(|a, b| (a - e.k).norm().total_cmp(&(b - e.k).norm()));
                (nearest, Some(out.total_winding))
            }
            Err(Error::ContourUnsafe(_)) | Err(Error::NonIntegerIndex { .. }) => (None, None),
            Err(err) => return Err(err),
        };
        let ok = zero.is_some_and(|z| (z - e.k).norm() <= opts.match_tol)
            && winding == Some(e.multiplicity as i64);
        forward.push(EigenMatch {
            channel: e.channel,
            z: e.z,
            k: e.k,
            multiplicity: e.multiplicity,
            zero,
            winding,
            ok,
        });
    }

    // Converse: every zero in the guard rectangles is an eigenvalue.
    let ext = opts.guard_extent;
    let g = guard_height(
        eigen
            .iter()
            .filter(|e| e.k.re < ext)
            .map(|e| e.k.im.abs())
            .collect(),
        ext,
    );
    let guards = [
        (c64::new(0.1 * g, g), c64::new(ext, ext)),
        (c64::new(0.1 * g, -ext), c64::new(ext, -g)),
    ];
    let in_guard = |k: c64| {
        guards
            .iter()
            .any(|(lo, hi)| k.re > lo.re && k.re < hi.re && k.im > lo.im && k.im < hi.im)
    };
    let expected_in_guard: i64 = eigen
        .iter()
        .filter(|e| in_guard(e.k))
        .map(|e| e.multiplicity as i64)
        .sum();
    let search = ZeroSearch {
        index: IndexOptions {
            max_step: Some(0.5 * g),
            ..opts.search.index
        },
        ..opts.search
    };
    let mut converse = Vec::new();
    let mut winding_in_guard = 0;
    let mut converse_ok = true;
    for channel in 0..bs.factors.len() {
        let f = channel_log_det(&bs, channel, threshold, backend, opts.search.q);
        for &(lo, hi) in &guards {
            let out = find_zeros(&f, lo, hi, search, mass, threshold)?;
            converse_ok &= out.is_resolved();
            winding_in_guard += out.total_winding;
            for z in out.zeros {
                let matched = eigen
                    .iter()
                    .filter(|e| e.channel == channel && (e.k - z.point.k).norm() <= opts.match_tol)
                    .map(|e| e.z)
                    .next();
                converse_ok &= matched.is_some();
                converse.push((channel, z.point.k, z.multiplicity, matched));
            }
        }
    }
    let found: i64 = converse.iter().map(|c| c.2).sum();
    let max_forward_distance = forward
        .iter()
        .map(|m| m.zero.map_or(f64::INFINITY, |z| (z - m.k).norm()))
        .fold(0.0, f64::max);
    let pass = forward.iter().all(|m| m.ok)
        && converse_ok
        && found == expected_in_guard
        && winding_in_guard == expected_in_guard;
    Ok(EquivalenceReport {
        threshold,
        eta: opts.eta,
        forward,
        guard_height: g,
        converse,
        expected_in_guard,
        winding_in_guard,
        max_forward_distance,
        pass,
    })
}
