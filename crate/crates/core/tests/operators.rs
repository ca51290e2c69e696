use std::f64::consts::PI;

use diracloc::axial::{AxialGrid, AxialResolvent};
use diracloc::birman_schwinger::{
    kk_star_check, schatten_diagnostics, Backend, BirmanSchwinger, EvalPoint,
};
use diracloc::c64;
use diracloc::dirac_op::{
    all_eigenvalues, assemble_free, assemble_free_on, assemble_potential, direct_spectrum,
    Discretization, TruncationScheme,
};
use diracloc::landau::{gap_radii, lll_basis, toeplitz_matrix, toeplitz_spectrum, vm_profile};
use diracloc::linalg;
use diracloc::model::{
    validate_potential, ModelParams, PotentialSpec, Threshold, TransverseProfile,
};

fn params() -> ModelParams {
    ModelParams::new(1.0, 2.0).unwrap()
}

fn disc_with(spec: &PotentialSpec, levels: usize, m: usize, n: usize) -> Discretization {
    let trunc = TruncationScheme::new(levels, m, AxialGrid::uniform(6.0, n).unwrap()).unwrap();
    let pot = validate_potential(spec).unwrap();
    Discretization::new(params(), trunc, Some(&pot)).unwrap()
}

#[test]
fn lll_reproducing_kernel_diagonal() {
    // Σ_m |ψ_m(x)|² = b0/(2π) near the origin once enough states are summed.
    let basis = lll_basis(2.0, 100).unwrap();
    let sum: f64 = (0..basis.len())
        .map(|s| basis.value(s, 0, 0).norm_sqr())
        .sum();
    assert!((sum - 1.0 / PI).abs() < 1e-6, "{sum}");
}

#[test]
fn threshold_profile_of_gaussian() {
    let phi = c64::from_polar(1.7, 0.75 * PI);
    let pot = validate_potential(&PotentialSpec::gaussian(phi, 1.0, 1.0)).unwrap();
    let p = vm_profile(&pot, Threshold::Upper).unwrap();
    for (x, y) in [(0.0f64, 0.0f64), (0.3, -0.4), (1.0, 1.5)] {
        let want = 1.7 * PI.sqrt() / 2.0 * (-(x * x + y * y)).exp();
        assert!((p.eval(x, y) - want).abs() < 1e-12);
    }
    let zero = validate_potential(&PotentialSpec::gaussian(phi, 0.0, 1.0)).unwrap();
    assert_eq!(
        vm_profile(&zero, Threshold::Lower).unwrap().eval(0.1, 0.2),
        0.0
    );
}

#[test]
fn spinor_without_lower_component_has_no_lower_profile() {
    let mut s = [[c64::ZERO; 4]; 4];
    s[0][0] = c64::ONE;
    let spec = PotentialSpec::gaussian(c64::ONE, 0.2, 1.0).with_spinor(s);
    let pot = validate_potential(&spec).unwrap();
    assert_eq!(
        vm_profile(&pot, Threshold::Lower).unwrap().eval(0.0, 0.0),
        0.0
    );
    assert!(vm_profile(&pot, Threshold::Upper).unwrap().eval(0.0, 0.0) > 0.0);
}

#[test]
fn toeplitz_of_constant_and_non_radial_profiles() {
    let basis = lll_basis(2.0, 6).unwrap();
    let c = toeplitz_matrix(&|_, _| 0.7, &basis);
    let id = linalg::scaled(linalg::identity(6).as_ref(), c64::new(0.7, 0.0));
    assert!(linalg::max_abs((&c - &id).as_ref()) < 1e-10);

    let aniso = TransverseProfile::Anisotropic { c1: 1.0, c2: 0.3 };
    let t = toeplitz_matrix(&move |x, y| aniso.eval(x, y), &basis);
    assert!(linalg::hermitian_defect(t.as_ref()) < 1e-12);
    let off = (0..6)
        .flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| t[(i, j)].norm())
        .fold(0.0, f64::max);
    assert!(off > 1e-3);
    let mu = toeplitz_spectrum(&t, 1e-14).unwrap();
    assert!(mu.windows(2).all(|w| w[0] >= w[1]) && mu.iter().all(|&m| m > 0.0));
}

#[test]
fn gap_radii_examples() {
    let s = gap_radii(&[0.5, 0.25, 0.125], 0.3, 5).unwrap();
    assert_eq!(s.radii.len(), 2);
    assert!((s.radii[0] - (0.5f64 * 0.25).sqrt()).abs() < 1e-12);
    assert!((s.radii[1] - (0.25f64 * 0.125).sqrt()).abs() < 1e-12);
    for &r in &s.radii {
        let dist =
            s.mu.iter()
                .map(|m| (m - r).abs())
                .fold(f64::INFINITY, f64::min);
        assert!(dist >= 0.3 * r / 2.0);
    }
    assert!(gap_radii(&[0.4], 0.3, 5).unwrap().radii.is_empty());
    let geometric: Vec<f64> = (0..8).map(|m| 0.5f64.powi(m + 1)).collect();
    assert!(gap_radii(&geometric, 0.25, 10)
        .unwrap()
        .gaps
        .iter()
        .all(|g| g.qualifies));
}

#[test]
fn free_spectrum_is_symmetric_and_gapped() {
    let trunc = TruncationScheme::new(2, 2, AxialGrid::uniform(6.0, 32).unwrap()).unwrap();
    let (_, op) = assemble_free(params(), &trunc).unwrap();
    let mut ev: Vec<f64> = all_eigenvalues(&op).unwrap().iter().map(|z| z.re).collect();
    ev.sort_by(f64::total_cmp);
    let n = ev.len();
    for i in 0..n {
        assert!((ev[i] + ev[n - 1 - i]).abs() < 1e-8);
        assert!(ev[i].abs() > 1.0 - 1e-6);
    }
}

#[test]
fn lll_only_free_spectrum_follows_axial_frequencies() {
    let grid = AxialGrid::uniform(6.0, 32).unwrap();
    let xi = grid.frequencies().unwrap();
    let trunc = TruncationScheme::new(1, 1, grid).unwrap();
    let (_, op) = assemble_free(params(), &trunc).unwrap();
    let mut ev: Vec<f64> = all_eigenvalues(&op)
        .unwrap()
        .iter()
        .map(|z| z.re)
        .filter(|&x| x > 0.0)
        .collect();
    let mut want: Vec<f64> = xi.iter().map(|x| (1.0 + x * x).sqrt()).collect();
    ev.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    assert_eq!(ev.len(), want.len());
    for (a, b) in ev.iter().zip(&want) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn potential_matrix_properties() {
    let zero = disc_with(&PotentialSpec::gaussian(c64::ONE, 0.0, 1.0), 2, 2, 16);
    assert_eq!(assemble_potential(&zero).norm().unwrap(), 0.0);

    let spec = PotentialSpec::gaussian(c64::new(0.8, 0.0), 0.3, 1.0);
    let d = disc_with(&spec, 2, 2, 16);
    let v = assemble_potential(&d);
    for b in &v.blocks {
        assert!(linalg::hermitian_defect(b.mat.as_ref()) < 1e-14);
        assert!(linalg::herm_eigenvalues(b.mat.as_ref())
            .unwrap()
            .iter()
            .all(|&l| l > -1e-12));
    }
    let bound = validate_potential(&spec).unwrap().sup_norm();
    assert!(v.norm().unwrap() <= bound * (1.0 + 1e-8));
}

#[test]
fn dissipative_eigenvalues_lie_in_the_upper_half_plane() {
    let d = disc_with(
        &PotentialSpec::gaussian(c64::new(0.0, 1.0), 0.1, 1.0),
        2,
        2,
        32,
    );
    let op = assemble_free_on(&d)
        .unwrap()
        .add(&assemble_potential(&d))
        .unwrap();
    let near = direct_spectrum(&op, c64::new(1.0, 0.0), 0.5, 1.0).unwrap();
    assert!(!near.is_empty());
    assert!(near.iter().all(|p| p.z.im > 0.0));

    let h = disc_with(&PotentialSpec::gaussian(c64::ONE, 0.1, 1.0), 2, 2, 32);
    let op = assemble_free_on(&h)
        .unwrap()
        .add(&assemble_potential(&h))
        .unwrap();
    assert!(all_eigenvalues(&op)
        .unwrap()
        .iter()
        .all(|z| z.im.abs() < 1e-8));
}

#[test]
fn bs_operator_is_linear_in_the_coupling() {
    let at = EvalPoint::K {
        k: c64::new(0.1, 0.05),
        threshold: Threshold::Upper,
    };
    let norm = |eps: f64| {
        let d = disc_with(
            &PotentialSpec::gaussian(c64::cis(0.75 * PI), eps, 1.0),
            2,
            2,
            24,
        );
        let bs = BirmanSchwinger::new(&d).unwrap();
        bs.operator(at, Backend::Kernel(AxialResolvent::Continuum))
            .unwrap()
            .fro_norm()
    };
    assert_eq!(norm(0.0), 0.0);
    let (a, b) = (norm(0.05), norm(0.1));
    assert!((b - 2.0 * a).abs() < 1e-12 * b);
}

#[test]
fn split_pieces_are_well_behaved() {
    let d = disc_with(
        &PotentialSpec::gaussian(c64::cis(0.75 * PI), 0.1, 1.0),
        1,
        3,
        32,
    );
    let bs = BirmanSchwinger::new(&d).unwrap();
    let mut norms = Vec::new();
    for r in [1e-4, 1e-3, 1e-2, 0.12] {
        let k = c64::from_polar(r, 0.9);
        for c in d.threshold_channels(Threshold::Upper) {
            let s = bs.singular_split(c, k, Threshold::Upper).unwrap();
            assert!(linalg::hermitian_defect(s.b.as_ref()) < 1e-12);
            let ev = linalg::herm_eigenvalues(s.b.as_ref()).unwrap();
            let top = ev.last().copied().unwrap();
            assert!(ev.iter().all(|&l| l > -1e-12 * top));
            assert!(ev.iter().filter(|&&l| l > 1e-10 * top).count() <= 3);
            norms.push(linalg::fro_norm(s.a_of_k.as_ref()));
        }
    }
    let (lo, hi) = norms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi < 10.0 * lo, "A(k) norms {norms:?}");
}

#[test]
fn kk_star_matches_the_gaussian_closed_form() {
    let eps = 0.1;
    let d = disc_with(
        &PotentialSpec::gaussian(c64::cis(0.75 * PI), eps, 1.0),
        1,
        5,
        64,
    );
    let bs = BirmanSchwinger::new(&d).unwrap();
    let r = kk_star_check(&bs, Threshold::Upper).unwrap();
    for (m, got) in r.kk_eigs.iter().enumerate() {
        let want = eps * PI.sqrt() / 2.0 * 0.5f64.powi(m as i32 + 1);
        assert!((got - want).abs() < 1e-8 * want, "{m}: {got} vs {want}");
    }
}

#[test]
fn schatten_diagnostics_trends() {
    let d = disc_with(
        &PotentialSpec::gaussian(c64::cis(0.75 * PI), 0.1, 1.0),
        2,
        2,
        32,
    );
    let ms: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&s| {
            schatten_diagnostics(&d, c64::new(1.0, s), 4.0, 1.0)
                .unwrap()
                .m_value
        })
        .collect();
    assert!(ms[0] < ms[1] && ms[1] < ms[2], "{ms:?}");

    let bs = BirmanSchwinger::new(&d).unwrap();
    let t = bs
        .channel_operator(0, EvalPoint::Z(c64::new(1.0, 0.1)), Backend::Matrix)
        .unwrap();
    let norms: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 8.0]
        .iter()
        .map(|&q| linalg::schatten_norm(t.as_ref(), q).unwrap())
        .collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}
