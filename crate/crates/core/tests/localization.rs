use std::f64::consts::PI;

use diracloc::axial::{AxialGrid, AxialResolvent};
use diracloc::birman_schwinger::{Backend, BirmanSchwinger};
use diracloc::c64;
use diracloc::dirac_op::{Discretization, TruncationScheme};
use diracloc::localization::{
    check_clusters, counting_function, find_zeros_bs, scan_counts, CheckModel, CheckOptions,
    HalfPlane, Region, SectorSpec, ZeroSearch,
};
use diracloc::model::{validate_potential, KDomainParams, ModelParams, PotentialSpec, Threshold};

fn params() -> ModelParams {
    ModelParams::new(1.0, 2.0).unwrap()
}

fn model(m: usize) -> CheckModel {
    CheckModel {
        params: params(),
        trunc: TruncationScheme::new(1, m, AxialGrid::uniform(6.0, 64).unwrap()).unwrap(),
    }
}

fn options() -> CheckOptions {
    CheckOptions::new(KDomainParams {
        eta: 0.5,
        gamma: 0.5,
        eps_k: 0.12,
        delta: 0.2,
        nu_gap: 0.25,
    })
}

fn search(eps: f64, backend: Backend) -> diracloc::localization::SearchOutcome {
    let pot = validate_potential(&PotentialSpec::gaussian(c64::cis(0.75 * PI), eps, 1.0)).unwrap();
    let trunc = TruncationScheme::new(1, 3, AxialGrid::uniform(6.0, 48).unwrap()).unwrap();
    let disc = Discretization::new(params(), trunc, Some(&pot)).unwrap();
    let bs = BirmanSchwinger::new(&disc).unwrap();
    find_zeros_bs(
        &bs,
        Threshold::Upper,
        backend,
        c64::new(1e-3, 1e-3),
        c64::new(0.12, 0.12),
        ZeroSearch::default(),
    )
    .unwrap()
}

#[test]
fn no_coupling_no_zeros() {
    let out = search(0.0, Backend::Kernel(AxialResolvent::Continuum));
    assert!(out.zeros.is_empty() && out.is_resolved());
    assert_eq!(out.total_winding, 0);
}

#[test]
fn counting_function_is_consistent() {
    let out = search(0.1, Backend::Kernel(AxialResolvent::Continuum));
    assert!(out.is_resolved());
    let total: i64 = out.zeros.iter().map(|z| z.multiplicity).sum();
    assert_eq!(total, out.total_winding);
    assert!(total > 0);
    let whole = Region::Rect {
        lo: c64::new(1e-3, 1e-3),
        hi: c64::new(0.12, 0.12),
    };
    assert_eq!(counting_function(&out.zeros, &whole), total);
    let far = Region::Disc {
        center: c64::new(0.5, -0.5),
        radius: 0.1,
    };
    assert_eq!(counting_function(&out.zeros, &far), 0);
    let mut last = 0;
    for r in [0.01, 0.03, 0.06, 0.2] {
        let n = counting_function(
            &out.zeros,
            &Region::Disc {
                center: c64::ZERO,
                radius: r,
            },
        );
        assert!(n >= last);
        last = n;
    }
}

#[test]
fn count_scan_trends() {
    let spec = PotentialSpec::gaussian(c64::cis(0.75 * PI), 0.1, 1.0);
    let r = scan_counts(
        &model(6),
        &spec,
        Threshold::Upper,
        HalfPlane::Upper,
        &[0.02, 0.08, 0.04],
        &options(),
    )
    .unwrap();
    let rs: Vec<f64> = r.rows.iter().map(|row| row.r).collect();
    assert_eq!(rs, [0.08, 0.04, 0.02]);
    // Geometric spectrum lead·κ^{m+1}: the trace is a logarithmic count.
    let lead = 0.1 * PI.sqrt() / 2.0;
    for row in &r.rows {
        let want = (0..6)
            .filter(|&m| lead * 0.5f64.powi(m + 1) > row.r)
            .count();
        assert_eq!(row.trace, want);
        assert!(row.count.is_some_and(|c| c >= 0));
    }
    let traces: Vec<usize> = r.rows.iter().map(|row| row.trace).collect();
    assert!(traces.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn cluster_zeros_avoid_the_excluded_cone() {
    // At Arg Φ = 3π/4 the cone ΦC_δ(J) leaves a wedge around the accumulation
    // axis, and the zeros must all sit in that wedge.
    let phi = c64::cis(0.75 * PI);
    let spec = PotentialSpec::gaussian(phi, 0.1, 1.0);
    let r = check_clusters(&model(6), &spec, Threshold::Upper, 3, &options()).unwrap();
    assert!(r.pass);
    assert!(!r.zeros.is_empty());
    let cone = SectorSpec::CDelta {
        delta: 0.2,
        j: 1,
        rotation: phi,
    };
    for z in &r.zeros {
        assert!(
            !cone.contains(z.point.k),
            "zero {} inside the cone",
            z.point.k
        );
    }
    // Band radii come from the unit-coupling profile.
    for b in &r.bands {
        let lead = PI.sqrt() / 2.0;
        let want = (0..6)
            .map(|m| lead * 0.5f64.powi(m + 1))
            .filter(|&mu| b.r_lo < mu && mu < b.r_hi)
            .count();
        assert_eq!(b.trace, want);
    }
}
