//! Numerical check pipelines: counting bounds on annuli, sector emptiness and
//! lower bounds on cluster bands.

use std::f64::consts::PI;

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axial::AxialResolvent;
use crate::birman_schwinger::{Backend, BirmanSchwinger};
use crate::det_index::{self, Contour};
use crate::dirac_op::{Discretization, TruncationScheme};
use crate::error::{Error, Result};
use crate::landau::{self, ToeplitzSpectrum};
use crate::linalg;
use crate::localization::sector::{
    annular_sector, delta_annulus_contour, gamma_contour, QuarterDisc,
};
use crate::localization::zeros::{channel_log_det, find_zeros_bs, ZeroRecord, ZeroSearch};
use crate::localization::{HalfPlane, Region, SectorSpec};
use crate::model::{
    validate_potential, KDomainParams, ModelParams, Potential, PotentialSpec, Threshold,
    TransverseProfile,
};

const BACKEND: Backend = Backend::Kernel(AxialResolvent::Continuum);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub domain: KDomainParams,
    pub search: ZeroSearch,
    /// Inner exclusion radius around k = 0 as a fraction of ε_k.
    pub inner_fraction: f64,
    /// Largest coupling tried when bisecting for ε0.
    pub coupling_max: f64,
    pub bisect_steps: usize,
}

impl CheckOptions {
    pub fn new(domain: KDomainParams) -> Self {
        Self {
            domain,
            search: ZeroSearch::default(),
            inner_fraction: 1e-3,
            coupling_max: 0.5,
            bisect_steps: 6,
        }
    }

    fn inner(&self) -> f64 {
        self.inner_fraction * self.domain.eps_k
    }
}

/// Model pieces shared by the pipelines.
#[derive(Debug, Clone)]
pub struct CheckModel {
    pub params: ModelParams,
    pub trunc: TruncationScheme,
}

impl CheckModel {
    fn discretize(&self, pot: &Potential) -> Result<Discretization> {
        Discretization::new(self.params, self.trunc.clone(), Some(pot))
    }
}

/// Σ over channels of the winding of det_q(I + T) along `contour`.
pub fn determinant_winding(
    bs: &BirmanSchwinger<'_>,
    threshold: Threshold,
    contour: &Contour,
    opts: &CheckOptions,
) -> Result<i64> {
    let windings: Vec<i64> = (0..bs.factors.len())
        .into_par_iter()
        .map(|c| {
            let f = channel_log_det(bs, c, threshold, BACKEND, opts.search.q);
            Ok(det_index::scalar_index_log(&f, contour, opts.search.index)?.index)
        })
        .collect::<Result<_>>()?;
    Ok(windings.iter().sum())
}

fn quarter_for(threshold: Threshold, upper_sign: bool) -> HalfPlane {
    match (threshold, upper_sign) {
        (Threshold::Upper, true) | (Threshold::Lower, false) => HalfPlane::Upper,
        _ => HalfPlane::Lower,
    }
}

/// The truncated Toeplitz spectrum of p W_{±m} p (without ε|Φ|) and its
/// closed form for Gaussian transverse profiles.
#[derive(Debug, Clone, Serialize)]
pub struct BandSpectrum {
    pub numeric: Vec<f64>,
    pub closed_form: Option<Vec<f64>>,
    pub gaps: ToeplitzSpectrum,
}

pub fn band_spectrum(
    params: &ModelParams,
    spec: &PotentialSpec,
    threshold: Threshold,
    m_count: usize,
    nu_gap: f64,
    radii: usize,
) -> Result<BandSpectrum> {
    let unit = PotentialSpec {
        phi: c64::ONE,
        coupling: 1.0,
        ..spec.clone()
    };
    let pot = validate_potential(&unit)?;
    let basis = landau::lll_basis(params.field, m_count)?;
    let profile = landau::vm_profile(&pot, threshold)?;
    let mat = landau::toeplitz_matrix(&move |x, y| profile.eval(x, y), &basis);
    let numeric = landau::toeplitz_spectrum(&mat, 1e-14)?;
    let closed_form = match spec.transverse {
        TransverseProfile::Gaussian { c } => {
            let lead = landau::vm_profile(&pot, threshold)?.eval(0.0, 0.0);
            let kappa = params.field / (params.field + 2.0 * c);
            Some(
                (0..m_count)
                    .map(|a| lead * kappa.powi(a as i32 + 1))
                    .collect(),
            )
        }
        _ => None,
    };
    let mu = closed_form.clone().unwrap_or_else(|| numeric.clone());
    let gaps = landau::gap_radii(&mu, nu_gap, radii)?;
    Ok(BandSpectrum {
        numeric,
        closed_form,
        gaps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CountRow {
    pub r: f64,
    pub nu: f64,
    pub count: Option<i64>,
    pub trace: usize,
    pub trace_log: f64,
    pub bound: f64,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountScanReport {
    pub threshold: Threshold,
    pub c_fit: f64,
    pub rows: Vec<CountRow>,
}

/// Counts in Δ_± annuli against Tr 1_{(r,∞)}(pV_{±m}p)·|ln r|, r decreasing.
/// ν = r²/100. The constant is fitted at the largest r (with a floor of
/// one zero) and held fixed.
pub fn scan_counts(
    model: &CheckModel,
    spec: &PotentialSpec,
    threshold: Threshold,
    half: HalfPlane,
    r_values: &[f64],
    opts: &CheckOptions,
) -> Result<CountScanReport> {
    let pot = validate_potential(spec)?;
    if pot.sup_norm() >= model.params.mass {
        return Err(Error::InvalidParameter(format!(
            "need ‖V‖ < m, got ‖V‖ = {}",
            pot.sup_norm()
        )));
    }
    let disc = model.discretize(&pot)?;
    let bs = BirmanSchwinger::new(&disc)?;
    let basis = landau::lll_basis(model.params.field, model.trunc.m_count)?;
    let profile = landau::vm_profile(&pot, threshold)?;
    let mat = landau::toeplitz_matrix(&move |x, y| profile.eval(x, y), &basis);
    let mu = landau::toeplitz_spectrum(&mat, 1e-14)?;
    let mut rs = r_values.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &r in &rs {
        let nu = r * r / 100.0;
        let contour = delta_annulus_contour(r, nu, half)?;
        let count = determinant_winding(&bs, threshold, &contour, opts).ok();
        let trace = mu.iter().filter(|&&m| m > r).count();
        rows.push(CountRow {
            r,
            nu,
            count,
            trace,
            trace_log: trace as f64 * r.ln().abs(),
            bound: 0.0,
            holds: None,
        });
    }
    let c_fit = rows
        .first()
        .map(|row| row.count.unwrap_or(0).max(1) as f64 / (row.trace_log + 1.0))
        .unwrap_or(0.0);
    for row in &mut rows {
        row.bound = c_fit * (row.trace_log + 1.0);
        row.holds = row.count.map(|c| c as f64 <= row.bound + 1e-12);
    }
    Ok(CountScanReport {
        threshold,
        c_fit,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorReport {
    pub threshold: Threshold,
    pub arg_phi: f64,
    pub half: HalfPlane,
    /// Angular intervals of the sector inside the quarter disc.
    pub intervals: Vec<(f64, f64)>,
    /// (coupling, zero count or None when inconclusive) for every probe.
    pub probes: Vec<(f64, Option<i64>)>,
    pub eps0: f64,
    pub coupling_tested: f64,
    pub count: Option<i64>,
    pub pass: bool,
}

/// Zero count of det(I + T) on ±ΦC_δ(J) ∩ D*(ε) for a given coupling.
fn sector_count(
    model: &CheckModel,
    spec: &PotentialSpec,
    threshold: Threshold,
    intervals: &[(f64, f64)],
    opts: &CheckOptions,
) -> Result<Option<i64>> {
    let pot = validate_potential(spec)?;
    if pot.is_zero() {
        return Ok(Some(0));
    }
    let disc = model.discretize(&pot)?;
    let bs = BirmanSchwinger::new(&disc)?;
    let mut total = 0;
    for &(a, b) in intervals {
        let contour = annular_sector(opts.inner(), opts.domain.eps_k, a, b);
        match determinant_winding(&bs, threshold, &contour, opts) {
            Ok(w) => total += w,
            Err(Error::ContourUnsafe(_)) | Err(Error::NonIntegerIndex { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(total))
}

/// Absence of zeros in the rotated cone: ε0 is bisected on the coupling and
/// the sector is checked at ε0/2.
pub fn check_sectors(
    model: &CheckModel,
    spec: &PotentialSpec,
    threshold: Threshold,
    opts: &CheckOptions,
) -> Result<SectorReport> {
    let pot = validate_potential(spec)?;
    let arg = spec.phi.arg();
    if arg == 0.0 || arg.abs() == PI || spec.phi == c64::ZERO {
        return Err(Error::InvalidParameter("Φ must be non-real".into()));
    }
    opts.domain.validate(&model.params)?;
    let upper = arg > 0.0;
    let rotation = if upper { spec.phi } else { -spec.phi };
    let half = quarter_for(threshold, upper);
    let quarter = QuarterDisc {
        half,
        radius: opts.domain.eps_k,
    };
    let cone = SectorSpec::CDelta {
        delta: opts.domain.delta,
        j: pot.sign_j(),
        rotation,
    };
    let (lo, hi) = quarter.angles();
    let intervals = cone.cone_intervals(lo, hi)?;
    let mut probes = Vec::new();
    let mut probe = |eps: f64| -> Result<Option<i64>> {
        let c = sector_count(model, &spec.with_coupling(eps), threshold, &intervals, opts)?;
        probes.push((eps, c));
        Ok(c)
    };
    let passes = |c: Option<i64>| c == Some(0);
    let eps0 = if passes(probe(opts.coupling_max)?) {
        opts.coupling_max
    } else {
        let (mut lo_e, mut hi_e) = (0.0, opts.coupling_max);
        for _ in 0..opts.bisect_steps {
            let mid = 0.5 * (lo_e + hi_e);
            if passes(probe(mid)?) {
                lo_e = mid;
            } else {
                hi_e = mid;
            }
        }
        lo_e
    };
    let coupling_tested = 0.5 * eps0;
    let count = probe(coupling_tested)?;
    Ok(SectorReport {
        threshold,
        arg_phi: arg,
        half,
        intervals,
        probes,
        eps0,
        coupling_tested,
        count,
        pass: passes(count),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterBand {
    pub ell: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub trace: usize,
    /// Winding on the band boundary.
    pub count: Option<i64>,
    /// Multiplicities of located zeros inside the band.
    pub located: i64,
    pub inside_domain: bool,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub threshold: Threshold,
    pub arg_phi: f64,
    pub coupling: f64,
    pub spectrum: BandSpectrum,
    pub bands: Vec<ClusterBand>,
    pub zeros: Vec<ZeroRecord>,
    pub axis_angle: f64,
    pub median_angle: Option<f64>,
    pub angle_ok: bool,
    pub unresolved: usize,
    pub pass: bool,
}

/// Lower bounds on cluster bands −iJεΦΓ^δ(r_{ℓ+1}, r_ℓ) ∩ D*(ε) and the
/// direction of the zero cloud.
pub fn check_clusters(
    model: &CheckModel,
    spec: &PotentialSpec,
    threshold: Threshold,
    ell_max: usize,
    opts: &CheckOptions,
) -> Result<ClusterReport> {
    let pot = validate_potential(spec)?;
    opts.domain.validate(&model.params)?;
    let arg = spec.phi.arg();
    let (lo_range, hi_range) = match threshold {
        Threshold::Upper => (PI / 2.0, PI),
        Threshold::Lower => (0.0, PI / 2.0),
    };
    let mirrored = if arg > lo_range && arg < hi_range {
        false
    } else if -arg > lo_range && -arg < hi_range {
        true
    } else {
        return Err(Error::InvalidParameter(format!(
            "Arg Φ = {arg} is outside the accumulation ranges for this threshold"
        )));
    };
    let spectrum = band_spectrum(
        &model.params,
        spec,
        threshold,
        model.trunc.m_count,
        opts.domain.nu_gap,
        ell_max + 1,
    )?;
    let radii = spectrum.gaps.radii.clone();
    if radii.len() < ell_max + 1 {
        return Err(Error::InvalidParameter(format!(
            "only {} gap radii available, {} bands need {}; increase M",
            radii.len(),
            ell_max,
            ell_max + 1
        )));
    }
    let mu = spectrum
        .closed_form
        .clone()
        .unwrap_or_else(|| spectrum.numeric.clone());
    let j = pot.sign_j() as f64;
    let i = c64::new(0.0, 1.0);
    let base = -i * j * spec.phi * spec.coupling;
    let rotation = if mirrored { -base } else { base };
    let upper = !mirrored;
    let half = quarter_for(threshold, upper);
    let quarter = QuarterDisc {
        half,
        radius: opts.domain.eps_k,
    };
    let delta = opts.domain.delta;

    let disc = model.discretize(&pot)?;
    let bs = BirmanSchwinger::new(&disc)?;

    // Locate the cloud in the bounding box of the bands.
    let corners: Vec<c64> = [radii[0], radii[ell_max]]
        .iter()
        .flat_map(|&r| [c64::new(r, -delta * r), c64::new(r, delta * r)])
        .map(|v| v * rotation)
        .collect();
    let pad = 0.05 * radii[0] * rotation.norm();
    let lo = c64::new(
        corners.iter().map(|c| c.re).fold(f64::INFINITY, f64::min) - pad,
        corners.iter().map(|c| c.im).fold(f64::INFINITY, f64::min) - pad,
    );
    let hi = c64::new(
        corners
            .iter()
            .map(|c| c.re)
            .fold(f64::NEG_INFINITY, f64::max)
            + pad,
        corners
            .iter()
            .map(|c| c.im)
            .fold(f64::NEG_INFINITY, f64::max)
            + pad,
    );
    let search = ZeroSearch {
        min_box: 1e-6 * radii[ell_max] * rotation.norm(),
        ..opts.search
    };
    let found = find_zeros_bs(&bs, threshold, BACKEND, lo, hi, search)?;

    let mut bands = Vec::new();
    for ell in 0..ell_max {
        let (r_hi, r_lo) = (radii[ell], radii[ell + 1]);
        let trace = mu.iter().filter(|&&m| m > r_lo && m < r_hi).count();
        let contour = gamma_contour(delta, r_lo, r_hi, rotation);
        let inside_domain = contour.polyline(1).iter().all(|&v| quarter.contains(v));
        let count = if inside_domain {
            determinant_winding(&bs, threshold, &contour, opts).ok()
        } else {
            None
        };
        let band = Region::All(vec![
            Region::Sector(SectorSpec::Gamma {
                delta,
                r: r_lo,
                r0: r_hi,
                rotation,
            }),
            Region::Quarter(quarter),
        ]);
        let located = super::counting_function(&found.zeros, &band);
        bands.push(ClusterBand {
            ell,
            r_lo,
            r_hi,
            trace,
            count,
            located,
            inside_domain,
            holds: count.map(|c| c >= trace as i64),
        });
    }
    let sign = threshold.sign();
    let axis_angle = if mirrored {
        (c64::cis(2.0 * arg + PI) * sign).arg()
    } else {
        (c64::cis(2.0 * arg - PI) * sign).arg()
    };
    let in_bands: Vec<&ZeroRecord> = found
        .zeros
        .iter()
        .filter(|z| {
            (0..ell_max).any(|ell| {
                SectorSpec::Gamma {
                    delta,
                    r: radii[ell + 1],
                    r0: radii[ell],
                    rotation,
                }
                .contains(z.point.k)
            })
        })
        .collect();
    let mut angles: Vec<f64> = in_bands
        .iter()
        .map(|z| {
            axis_angle
                + linalg::wrap_angle((z.point.z - sign * model.params.mass).arg() - axis_angle)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let median_angle = if angles.is_empty() {
        None
    } else if angles.len() % 2 == 1 {
        Some(angles[angles.len() / 2])
    } else {
        Some(0.5 * (angles[angles.len() / 2 - 1] + angles[angles.len() / 2]))
    };
    let angle_ok = median_angle.is_some_and(|a| (a - axis_angle).abs() <= 2.0 * delta);
    let pass = angle_ok && bands.iter().all(|b| b.holds == Some(true));
    Ok(ClusterReport {
        threshold,
        arg_phi: arg,
        coupling: spec.coupling,
        spectrum,
        bands,
        zeros: found.zeros,
        axis_angle,
        median_angle,
        angle_ok,
        unresolved: found.unresolved.len(),
        pass,
    })
}
