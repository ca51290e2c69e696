use faer::Mat;
use proptest::prelude::*;

use diracloc::axial::branch_sqrt;
use diracloc::c64;
use diracloc::det_index::{det_commute_check, det_reg, log_det_reg};
use diracloc::dirac_op::cluster;
use diracloc::localization::{k_of_z, z_of_k, SectorSpec};
use diracloc::model::Threshold;

fn complex() -> impl Strategy<Value = c64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| c64::new(a, b))
}

fn matrix(n: usize, m: usize, scale: f64) -> impl Strategy<Value = Mat<c64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * m).prop_map(move |v| {
        Mat::from_fn(n, m, |i, j| {
            c64::new(v[i * m + j].0, v[i * m + j].1) * scale
        })
    })
}

proptest! {
    #[test]
    fn square_root_branch(z in complex()) {
        prop_assume!(!(z.im.abs() < 1e-9 && z.re >= 0.0));
        let w = branch_sqrt(z).unwrap();
        prop_assert!(w.im > 0.0);
        prop_assert!((w * w - z).norm() < 1e-14 * z.norm().max(1.0));
    }

    #[test]
    fn k_parametrization_round_trip(r in 1e-3..0.9f64, a in -1.5..1.5f64, upper in any::<bool>()) {
        let th = if upper { Threshold::Upper } else { Threshold::Lower };
        let k = c64::from_polar(r, a);
        prop_assume!(k.im.abs() > 1e-6);
        let z = z_of_k(k, 1.0, th);
        let back = k_of_z(z, 1.0, th).unwrap();
        prop_assert!((back - k).norm() < 1e-12);
    }

    #[test]
    fn log_det_is_consistent(t in matrix(4, 4, 0.4), q in 1u32..4) {
        let d = det_reg(t.as_ref(), q).unwrap();
        let l = log_det_reg(t.as_ref(), q).unwrap();
        prop_assert!((l.exp() - d).norm() < 1e-10 * d.norm().max(1.0));
    }

    #[test]
    fn determinant_commutes(a in matrix(5, 3, 0.5), b in matrix(3, 5, 0.5), q in 1u32..4) {
        let (x, y) = det_commute_check(a.as_ref(), b.as_ref(), q).unwrap();
        prop_assert!((x - y).norm() < 1e-10 * x.norm().max(1.0));
    }

    #[test]
    fn cone_is_closed_under_scaling(k in complex(), s in 0.01..10.0f64, delta in 0.0..1.0f64, a in -3.0..3.0f64) {
        let cone = SectorSpec::CDelta { delta, j: 1, rotation: c64::cis(a) };
        prop_assume!(cone.boundary_margin(k) > 1e-9 * k.norm());
        prop_assert_eq!(cone.contains(k), cone.contains(k * s));
    }

    #[test]
    fn clustering_preserves_count(zs in prop::collection::vec(complex(), 0..30)) {
        let total: usize = cluster(zs.clone(), 1e-8).iter().map(|p| p.multiplicity).sum();
        prop_assert_eq!(total, zs.len());
    }
}
