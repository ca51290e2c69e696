use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use diracloc::birman_schwinger::{schatten_diagnostics, BirmanSchwinger};
use diracloc::config::RunConfig;
use diracloc::det_index::Contour;
use diracloc::dirac_op::{assemble_free_on, assemble_potential, cluster, Discretization};
use diracloc::linalg;
use diracloc::localization::checks::band_spectrum;
use diracloc::localization::{
    check_clusters, check_equivalence, check_sectors, find_zeros_bs, scan_counts,
    EquivalenceOptions, HalfPlane,
};
use diracloc::{c64, Error};

use crate::error::{CliError, CliResult};
use crate::manifest::{CheckSummary, Status};

/// State shared by the commands of one run.
pub struct Run {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub tol: f64,
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckSummary>,
    pub timings: Vec<(String, f64)>,
}

impl Run {
    pub fn new(cfg: RunConfig, out: PathBuf, tol: f64) -> Self {
        Self {
            cfg,
            out,
            tol,
            files: Vec::new(),
            checks: Vec::new(),
            timings: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, status: Status, detail: impl Into<String>) {
        self.checks.push(CheckSummary {
            name: name.into(),
            status,
            detail: detail.into(),
        });
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
        let t = Instant::now();
        let v = f()?;
        self.timings.push((phase.into(), t.elapsed().as_secs_f64()));
        Ok(v)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_csv<T: Serialize>(
        &mut self,
        name: &str,
        rows: &[T],
        header: &[&str],
    ) -> CliResult<()> {
        let path = self.path(name);
        let fail = |e: &dyn std::fmt::Display, p: &Path| CliError::Output {
            path: p.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .map_err(|e| fail(&e, &path))?;
        // Explicit header so that empty tables still name their columns.
        w.write_record(header).map_err(|e| fail(&e, &path))?;
        for r in rows {
            w.serialize(r).map_err(|e| fail(&e, &path))?;
        }
        w.flush().map_err(|e| fail(&e, &path))?;
        self.files.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.path(name);
        let json = serde_json::to_string_pretty(value).map_err(|e| CliError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        fs::write(&path, json).map_err(|e| CliError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        self.files.push(path);
        Ok(())
    }

    /// Numerical-range inclusion |Im z| ≤ ‖V‖ + tol for computed eigenvalues.
    fn numerical_range(&mut self, zs: impl Iterator<Item = c64>) -> CliResult<()> {
        let bound = self.cfg.potential()?.sup_norm();
        let worst = zs.map(|z| z.im.abs()).fold(0.0, f64::max);
        let ok = worst <= bound + self.tol;
        let status = if ok { Status::Pass } else { Status::Fail };
        self.check(
            "numerical_range",
            status,
            format!("max |Im z| = {worst:.3e}, bound {bound:.3e}"),
        );
        Ok(())
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    channel: usize,
    re: f64,
    im: f64,
    multiplicity: usize,
    non_real: bool,
}

pub fn spectrum(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    let disc = run.timed("discretize", || run_disc(&cfg))?;
    let op = assemble_free_on(&disc)?.add(&assemble_potential(&disc))?;
    let centre = run.cfg.threshold.sign() * run.cfg.mass;
    let eta = run.cfg.eta;
    let tol = run.tol;
    let (rows, all) = run.timed("eigensolve", || {
        let mut rows = Vec::new();
        let mut all = Vec::new();
        for (channel, b) in op.blocks.iter().enumerate() {
            let zs = linalg::eigenvalues(b.mat.as_ref())?;
            all.extend(zs.iter().copied());
            for p in cluster(zs, 1e-8 * disc.params.mass) {
                if (p.z - centre).norm() < eta {
                    let non_real = p.z.im.abs() > tol;
                    rows.push(SpectrumRow {
                        channel,
                        re: p.z.re,
                        im: p.z.im,
                        multiplicity: p.multiplicity,
                        non_real,
                    });
                }
            }
        }
        Ok((rows, all))
    })?;
    let non_real = rows
        .iter()
        .filter(|r| r.non_real)
        .map(|r| r.multiplicity)
        .sum::<usize>();
    run.write_csv(
        "spectrum.csv",
        &rows,
        &["channel", "re", "im", "multiplicity", "non_real"],
    )?;
    run.check(
        "spectrum",
        Status::Pass,
        format!("{} eigenvalues within η, {non_real} non-real", rows.len()),
    );
    run.numerical_range(all.into_iter())
}

fn run_disc(cfg: &RunConfig) -> CliResult<Discretization> {
    cfg.validate()?;
    Ok(cfg.discretization()?)
}

const ZERO_HEADER: [&str; 7] = [
    "channel",
    "k_re",
    "k_im",
    "z_re",
    "z_im",
    "multiplicity",
    "residual",
];

#[derive(Serialize)]
struct ZeroRow {
    channel: Option<usize>,
    k_re: f64,
    k_im: f64,
    z_re: f64,
    z_im: f64,
    multiplicity: i64,
    residual: f64,
}

#[derive(Serialize)]
struct Boundary {
    winding: i64,
    polyline: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct ZeroPlot {
    region: Vec<[f64; 2]>,
    zeros_k: Vec<[f64; 2]>,
    zeros_z: Vec<[f64; 2]>,
    unresolved: Vec<Boundary>,
}

fn polyline(c: &Contour) -> Vec<[f64; 2]> {
    c.polyline(16).into_iter().map(|p| [p.re, p.im]).collect()
}

pub fn zeros(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    let disc = run.timed("discretize", || run_disc(&cfg))?;
    let (lo, hi) = run.cfg.search_region()?;
    let searched = run.timed("search", || {
        let bs = BirmanSchwinger::new(&disc)?;
        Ok(find_zeros_bs(
            &bs,
            cfg.threshold,
            cfg.backend(),
            lo,
            hi,
            cfg.search,
        ))
    })?;
    let out = match searched {
        Ok(out) => out,
        // The outer boundary itself could not be certified: the whole
        // rectangle is unresolved.
        Err(e @ (Error::ContourUnsafe(_) | Error::NonIntegerIndex { .. })) => {
            run.write_csv("zeros.csv", &Vec::<ZeroRow>::new(), &ZERO_HEADER)?;
            let boundary = Contour::rectangle(lo, hi);
            let plot = ZeroPlot {
                region: polyline(&boundary),
                zeros_k: Vec::new(),
                zeros_z: Vec::new(),
                unresolved: vec![Boundary {
                    winding: 0,
                    polyline: polyline(&boundary),
                }],
            };
            run.write_json("zeros_plot.json", &plot)?;
            run.check(
                "zeros",
                Status::Inconclusive,
                format!("unresolved regions: [{lo:.3e}, {hi:.3e}] ({e})"),
            );
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<ZeroRow> = out
        .zeros
        .iter()
        .map(|z| ZeroRow {
            channel: z.channel,
            k_re: z.point.k.re,
            k_im: z.point.k.im,
            z_re: z.point.z.re,
            z_im: z.point.z.im,
            multiplicity: z.multiplicity,
            residual: z.residual,
        })
        .collect();
    run.write_csv("zeros.csv", &rows, &ZERO_HEADER)?;
    let plot = ZeroPlot {
        region: polyline(&Contour::rectangle(lo, hi)),
        zeros_k: out
            .zeros
            .iter()
            .map(|z| [z.point.k.re, z.point.k.im])
            .collect(),
        zeros_z: out
            .zeros
            .iter()
            .map(|z| [z.point.z.re, z.point.z.im])
            .collect(),
        unresolved: out
            .unresolved
            .iter()
            .map(|(c, w)| Boundary {
                winding: *w,
                polyline: polyline(c),
            })
            .collect(),
    };
    run.write_json("zeros_plot.json", &plot)?;
    let found: i64 = out.zeros.iter().map(|z| z.multiplicity).sum();
    if out.is_resolved() {
        run.check(
            "zeros",
            Status::Pass,
            format!("{found} zeros, total winding {}", out.total_winding),
        );
    } else {
        let listing: Vec<String> = out
            .unresolved
            .iter()
            .map(|(c, w)| {
                let pts = c.polyline(1);
                format!(
                    "winding {w} around {:.3e}",
                    pts.iter().sum::<c64>() / pts.len() as f64
                )
            })
            .collect();
        run.check(
            "zeros",
            Status::Inconclusive,
            format!("unresolved regions: {}", listing.join("; ")),
        );
    }
    run.numerical_range(out.zeros.iter().map(|z| z.point.z))
}

#[derive(Serialize)]
struct ToeplitzRow {
    index: usize,
    mu: f64,
    closed_form: Option<f64>,
}

pub fn toeplitz(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    cfg.validate()?;
    let spec = cfg.potential_spec()?;
    let params = cfg.params()?;
    let bands = run.timed("toeplitz", || {
        Ok(band_spectrum(
            &params,
            &spec,
            cfg.threshold,
            cfg.truncation.m_count,
            cfg.nu_gap,
            cfg.truncation.m_count,
        )?)
    })?;
    let rows: Vec<ToeplitzRow> = bands
        .numeric
        .iter()
        .enumerate()
        .map(|(i, &mu)| ToeplitzRow {
            index: i,
            mu,
            closed_form: bands.closed_form.as_ref().and_then(|c| c.get(i).copied()),
        })
        .collect();
    run.write_csv("toeplitz.csv", &rows, &["index", "mu", "closed_form"])?;
    let radii: Vec<(usize, f64)> = bands.gaps.radii.iter().copied().enumerate().collect();
    run.write_csv("gap_radii.csv", &radii, &["index", "radius"])?;
    run.write_json("gaps.json", &bands.gaps)?;
    match &bands.closed_form {
        Some(closed) => {
            let worst = rows
                .iter()
                .zip(closed)
                .map(|(r, c)| (r.mu - c).abs() / c.abs())
                .fold(0.0, f64::max);
            let status = if worst <= 1e-8 {
                Status::Pass
            } else {
                Status::Fail
            };
            run.check(
                "toeplitz_closed_form",
                status,
                format!("max relative deviation {worst:.2e}"),
            );
        }
        None => run.check(
            "toeplitz",
            Status::Pass,
            format!("{} eigenvalues, no closed form", rows.len()),
        ),
    }
    Ok(())
}

pub fn sector_check(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    cfg.validate()?;
    let model = cfg.check_model()?;
    let spec = cfg.potential_spec()?;
    let report = run.timed("sector", || {
        Ok(check_sectors(
            &model,
            &spec,
            cfg.threshold,
            &cfg.check_options(),
        )?)
    })?;
    run.write_json("sector_report.json", &report)?;
    let status = match report.count {
        None => Status::Inconclusive,
        Some(_) if report.pass => Status::Pass,
        Some(_) => Status::Fail,
    };
    run.check(
        "sector_emptiness",
        status,
        format!(
            "ε0 = {:.4}, tested at {:.4}, count {:?}",
            report.eps0, report.coupling_tested, report.count
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct BandRow {
    ell: usize,
    r_lo: f64,
    r_hi: f64,
    trace: usize,
    count: Option<i64>,
    located: i64,
    holds: Option<bool>,
}

pub fn cluster_check(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    cfg.validate()?;
    let model = cfg.check_model()?;
    let spec = cfg.potential_spec()?;
    let report = run.timed("clusters", || {
        Ok(check_clusters(
            &model,
            &spec,
            cfg.threshold,
            cfg.checks.bands,
            &cfg.check_options(),
        )?)
    })?;
    run.write_json("cluster_report.json", &report)?;
    let rows: Vec<BandRow> = report
        .bands
        .iter()
        .map(|b| BandRow {
            ell: b.ell,
            r_lo: b.r_lo,
            r_hi: b.r_hi,
            trace: b.trace,
            count: b.count,
            located: b.located,
            holds: b.holds,
        })
        .collect();
    run.write_csv(
        "bands.csv",
        &rows,
        &["ell", "r_lo", "r_hi", "trace", "count", "located", "holds"],
    )?;
    let inconclusive = report.bands.iter().any(|b| b.count.is_none()) || report.unresolved > 0;
    let status = if report.pass {
        Status::Pass
    } else if inconclusive {
        Status::Inconclusive
    } else {
        Status::Fail
    };
    run.check(
        "cluster_bands",
        status,
        format!(
            "median angle {:?} vs axis {:.4}",
            report.median_angle, report.axis_angle
        ),
    );
    Ok(())
}

pub fn count_scan(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    cfg.validate()?;
    let model = cfg.check_model()?;
    let spec = cfg.potential_spec()?;
    let (lo, _) = cfg.search_region()?;
    let half = if lo.im >= 0.0 {
        HalfPlane::Upper
    } else {
        HalfPlane::Lower
    };
    let radii = cfg.checks.scan_radii;
    let report = run.timed("scan", || {
        Ok(scan_counts(
            &model,
            &spec,
            cfg.threshold,
            half,
            &radii,
            &cfg.check_options(),
        )?)
    })?;
    run.write_json("count_scan.json", &report)?;
    let status = if report.rows.iter().any(|r| r.holds.is_none()) {
        Status::Inconclusive
    } else if report.rows.iter().all(|r| r.holds == Some(true)) {
        Status::Pass
    } else {
        Status::Fail
    };
    run.check(
        "count_bound",
        status,
        format!("fitted constant {:.3}", report.c_fit),
    );
    Ok(())
}

pub fn bounds(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    let disc = run.timed("discretize", || run_disc(&cfg))?;
    let centre = cfg.threshold.sign() * cfg.mass;
    let reports = run.timed("diagnostics", || {
        (0..cfg.checks.bounds_points)
            .map(|j| {
                let rho = 0.5 * cfg.eta * 0.7f64.powi(j as i32);
                let z = c64::new(centre, 0.0)
                    + c64::from_polar(rho, std::f64::consts::FRAC_PI_3 + 0.2 * j as f64);
                Ok(schatten_diagnostics(
                    &disc,
                    z,
                    cfg.checks.bounds_q,
                    cfg.checks.bounds_tau,
                )?)
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    run.write_json("bounds.json", &reports)?;
    let finite = reports
        .iter()
        .all(|r| r.fitted_p.is_finite() && r.fitted_q.is_finite());
    let status = if finite {
        Status::Pass
    } else {
        Status::Inconclusive
    };
    let worst = reports
        .iter()
        .map(|r| r.fitted_p.max(r.fitted_q))
        .fold(0.0, f64::max);
    run.check(
        "schatten_constants",
        status,
        format!("largest fitted constant {worst:.3e}"),
    );
    Ok(())
}

pub fn equivalence(run: &mut Run) -> CliResult<()> {
    let cfg = run.cfg.clone();
    let disc = run.timed("discretize", || run_disc(&cfg))?;
    let opts = EquivalenceOptions {
        eta: cfg.eta,
        search: cfg.search,
        ..EquivalenceOptions::default()
    };
    let report = run.timed("equivalence", || {
        Ok(check_equivalence(
            &disc,
            cfg.threshold,
            cfg.backend(),
            &opts,
        )?)
    })?;
    run.write_json("equivalence.json", &report)?;
    let status = if report.pass {
        Status::Pass
    } else {
        Status::Fail
    };
    run.check(
        "direct_vs_determinant",
        status,
        format!(
            "{} eigenvalues matched (max distance {:.2e}), {} of {} zeros in the guard region",
            report.forward.len(),
            report.max_forward_distance,
            report.winding_in_guard,
            report.expected_in_guard
        ),
    );
    run.numerical_range(report.forward.iter().map(|m| m.z))
}
