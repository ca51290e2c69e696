//! Physical parameters, Dirac matrices, the potential family and the
//! k-plane domain parameters.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type Spinor4 = [[c64; 4]; 4];

const Z: c64 = c64 { re: 0.0, im: 0.0 };
const O: c64 = c64 { re: 1.0, im: 0.0 };
const I: c64 = c64 { re: 0.0, im: 1.0 };

fn neg(x: c64) -> c64 {
    c64::new(-x.re, -x.im)
}

/// Standard (Pauli–Dirac) representation: β = diag(1,1,−1,−1),
/// α_j = [[0, σ_j], [σ_j, 0]].
#[derive(Debug, Clone, PartialEq)]
pub struct DiracAlgebra {
    pub alpha1: Spinor4,
    pub alpha2: Spinor4,
    pub alpha3: Spinor4,
    pub beta: Spinor4,
}

fn off_diag(s: [[c64; 2]; 2]) -> Spinor4 {
    let mut a = [[Z; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j + 2] = s[i][j];
            a[i + 2][j] = s[i][j];
        }
    }
    a
}

pub fn dirac_matrices() -> DiracAlgebra {
    DiracAlgebra {
        alpha1: off_diag([[Z, O], [O, Z]]),
        alpha2: off_diag([[Z, neg(I)], [I, Z]]),
        alpha3: off_diag([[O, Z], [Z, neg(O)]]),
        beta: [
            [O, Z, Z, Z],
            [Z, O, Z, Z],
            [Z, Z, neg(O), Z],
            [Z, Z, Z, neg(O)],
        ],
    }
}

pub fn mul4(a: &Spinor4, b: &Spinor4) -> Spinor4 {
    let mut c = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn anticommutator(a: &Spinor4, b: &Spinor4) -> Spinor4 {
    let ab = mul4(a, b);
    let ba = mul4(b, a);
    let mut c = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = ab[i][j] + ba[i][j];
        }
    }
    c
}

pub fn identity4() -> Spinor4 {
    let mut a = [[Z; 4]; 4];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = O;
    }
    a
}

pub fn spinor_to_mat(a: &Spinor4) -> Mat<c64> {
    Mat::from_fn(4, 4, |i, j| a[i][j])
}

/// Largest entrywise deviation of all anticommutation relations from
/// 2δ_jk·I, {α_j, β} = 0 and β² = I. Zero for an exact representation.
pub fn algebra_defect(alg: &DiracAlgebra) -> f64 {
    let alphas = [&alg.alpha1, &alg.alpha2, &alg.alpha3];
    let id = identity4();
    let mut worst: f64 = 0.0;
    let mut check = |m: Spinor4, scale: f64| {
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((m[i][j] - id[i][j] * scale).norm());
            }
        }
    };
    for (j, aj) in alphas.iter().enumerate() {
        for (k, ak) in alphas.iter().enumerate() {
            check(anticommutator(aj, ak), if j == k { 2.0 } else { 0.0 });
        }
        check(anticommutator(aj, &alg.beta), 0.0);
    }
    check(mul4(&alg.beta, &alg.beta), 1.0);
    worst
}

/// Which end of the spectral gap is being studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    Upper,
    Lower,
}

impl Threshold {
    pub fn sign(self) -> f64 {
        match self {
            Threshold::Upper => 1.0,
            Threshold::Lower => -1.0,
        }
    }

    /// Spinor component carrying the lowest Landau level at this threshold:
    /// upper spin-up for +m, lower spin-up for −m.
    pub fn lll_component(self) -> usize {
        match self {
            Threshold::Upper => 0,
            Threshold::Lower => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mass: f64,
    pub field: f64,
}

impl ModelParams {
    pub fn new(mass: f64, field: f64) -> Result<Self> {
        if !(mass > 0.0) || !(field > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass and field must be positive, got m = {mass}, b0 = {field}"
            )));
        }
        Ok(Self { mass, field })
    }

    /// Bottom of the spectrum of H⊥⁺ (first nonzero transverse level).
    pub fn zeta(&self) -> f64 {
        2.0 * self.field
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransverseProfile {
    /// e^{−c|x⊥|²}
    Gaussian { c: f64 },
    /// e^{−c1 x1² − c2 x2²}
    Anisotropic { c1: f64, c2: f64 },
    /// exp(1 − 1/(1 − |x⊥|²/R²)) on |x⊥| < R, zero outside.
    Bump { radius: f64 },
}

impl TransverseProfile {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match *self {
            TransverseProfile::Gaussian { c } => (-c * (x1 * x1 + x2 * x2)).exp(),
            TransverseProfile::Anisotropic { c1, c2 } => (-c1 * x1 * x1 - c2 * x2 * x2).exp(),
            TransverseProfile::Bump { radius } => {
                let s = (x1 * x1 + x2 * x2) / (radius * radius);
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_radial(&self) -> bool {
        match *self {
            TransverseProfile::Anisotropic { c1, c2 } => c1 == c2,
            _ => true,
        }
    }

    pub fn sup(&self) -> f64 {
        1.0
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            TransverseProfile::Gaussian { c } => c > 0.0,
            TransverseProfile::Anisotropic { c1, c2 } => c1 > 0.0 && c2 > 0.0,
            TransverseProfile::Bump { radius } => radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::PotentialRejected(format!(
                "transverse profile {self:?} must have positive parameters (w⊥ ≥ 0 with decay)"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxialProfile {
    /// e^{−x3²}
    Gaussian,
    /// ⟨x3⟩^{−β} = (1 + x3²)^{−β/2}
    Polynomial { beta: f64 },
}

impl AxialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            AxialProfile::Gaussian => (-x * x).exp(),
            AxialProfile::Polynomial { beta } => (1.0 + x * x).powf(-0.5 * beta),
        }
    }

    pub fn sup(&self) -> f64 {
        1.0
    }

    /// ∫_R g.
    pub fn integral(&self) -> f64 {
        2.0 * crate::quadrature::half_line(|x| self.eval(x), 1.0)
    }

    /// Smallest half-width beyond which g (Gaussian) or its tail integral
    /// (polynomial) falls below `tol`.
    pub fn support_halfwidth(&self, tol: f64) -> f64 {
        match *self {
            AxialProfile::Gaussian => (-tol.ln()).sqrt(),
            AxialProfile::Polynomial { beta } => {
                // ∫_L^∞ x^{−β} = L^{1−β}/(β−1)
                (tol * (beta - 1.0)).powf(1.0 / (1.0 - beta))
            }
        }
    }
}

/// V = ε·Φ·w⊥(x⊥)·g(x3)·S with S a constant 4×4 Hermitian PSD matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub phi: c64,
    pub coupling: f64,
    pub transverse: TransverseProfile,
    pub axial: AxialProfile,
    pub spinor: Spinor4,
}

impl PotentialSpec {
    pub fn gaussian(phi: c64, coupling: f64, c: f64) -> Self {
        Self {
            phi,
            coupling,
            transverse: TransverseProfile::Gaussian { c },
            axial: AxialProfile::Gaussian,
            spinor: identity4(),
        }
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self {
            coupling,
            ..self.clone()
        }
    }

    pub fn with_spinor(&self, spinor: Spinor4) -> Self {
        Self {
            spinor,
            ..self.clone()
        }
    }

    pub fn arg_phi(&self) -> f64 {
        self.phi.arg()
    }
}

/// A potential that passed [`validate_potential`].
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    spec: PotentialSpec,
    sign_j: i8,
    spinor_max_eig: f64,
}

impl Potential {
    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// Sign J of the Hermitian factor W (+1 for the W ≥ 0 family).
    pub fn sign_j(&self) -> i8 {
        self.sign_j
    }

    pub fn phase(&self) -> c64 {
        let a = self.spec.phi.arg();
        c64::new(a.cos(), a.sin())
    }

    /// sup_x ‖W(x)‖ · ε|Φ|, an upper bound for ‖V‖.
    pub fn sup_norm(&self) -> f64 {
        self.spec.coupling
            * self.spec.phi.norm()
            * self.spec.transverse.sup()
            * self.spec.axial.sup()
            * self.spinor_max_eig
    }

    pub fn is_zero(&self) -> bool {
        self.spec.coupling == 0.0 || self.spinor_max_eig == 0.0
    }

    /// Pointwise V(x) as a 4×4 matrix.
    pub fn matrix_at(&self, x1: f64, x2: f64, x3: f64) -> Spinor4 {
        let s = self.spec.coupling * self.spec.transverse.eval(x1, x2) * self.spec.axial.eval(x3);
        let mut v = self.spec.spinor;
        for row in v.iter_mut() {
            for e in row.iter_mut() {
                *e *= self.spec.phi * s;
            }
        }
        v
    }
}

pub fn validate_potential(spec: &PotentialSpec) -> Result<Potential> {
    if spec.phi == c64::ZERO || !spec.phi.re.is_finite() || !spec.phi.im.is_finite() {
        return Err(Error::PotentialRejected(
            "Assumption 2.1 violated: the phase factor must be a nonzero complex number".into(),
        ));
    }
    if !(spec.coupling >= 0.0) || !spec.coupling.is_finite() {
        return Err(Error::PotentialRejected(format!(
            "coupling must be finite and ≥ 0, got {}",
            spec.coupling
        )));
    }
    spec.transverse.check()?;
    if let AxialProfile::Polynomial { beta } = spec.axial {
        if !(beta > 3.0) {
            return Err(Error::PotentialRejected(format!(
                "Assumption 1.1 violated: axial decay exponent must exceed 3, got {beta}"
            )));
        }
    }
    let s = spinor_to_mat(&spec.spinor);
    let defect = linalg::hermitian_defect(s.as_ref());
    if defect > 1e-12 {
        return Err(Error::PotentialRejected(format!(
            "Assumption 2.1 violated: spinor factor is not Hermitian (defect {defect:e})"
        )));
    }
    let eig = linalg::herm_eigenvalues(s.as_ref())?;
    let lo = eig.first().copied().unwrap_or(0.0);
    let hi = eig.last().copied().unwrap_or(0.0);
    if lo < -1e-12 {
        return Err(Error::PotentialRejected(format!(
            "Assumption 2.1 violated: spinor factor is indefinite (eigenvalues {eig:?})"
        )));
    }
    Ok(Potential {
        spec: spec.clone(),
        sign_j: 1,
        spinor_max_eig: hi.max(0.0),
    })
}

/// Radii and apertures of the k-plane domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KDomainParams {
    pub eta: f64,
    pub gamma: f64,
    pub eps_k: f64,
    pub delta: f64,
    pub nu_gap: f64,
}

impl KDomainParams {
    pub fn validate(&self, model: &ModelParams) -> Result<()> {
        let m = model.mass;
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.eta > 0.0 && self.eta < m) {
            return bad("eta must lie in (0, m)");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        let cap = self.gamma.min(self.eta * (1.0 - self.gamma) / (2.0 * m));
        if !(self.eps_k > 0.0 && self.eps_k < cap) {
            return Err(Error::InvalidParameter(format!(
                "eps_k must lie in (0, {cap}), got {}",
                self.eps_k
            )));
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.nu_gap > 0.0 && self.nu_gap < 1.0) {
            return bad("nu_gap must lie in (0, 1)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_is_exact() {
        let alg = dirac_matrices();
        assert_eq!(algebra_defect(&alg), 0.0);
        let ac = anticommutator(&alg.alpha1, &alg.alpha2);
        assert!(ac.iter().flatten().all(|&x| x == Z));
        assert_eq!(mul4(&alg.beta, &alg.beta), identity4());
    }

    #[test]
    fn alphas_are_traceless() {
        let alg = dirac_matrices();
        for a in [&alg.alpha1, &alg.alpha2, &alg.alpha3] {
            let tr: c64 = (0..4).map(|i| a[i][i]).sum();
            assert_eq!(tr, Z);
        }
    }

    #[test]
    fn gaussian_family_is_accepted() {
        let p = validate_potential(&PotentialSpec::gaussian(c64::new(0.0, 1.0), 0.1, 1.0)).unwrap();
        assert_eq!(p.sign_j(), 1);
    }

    #[test]
    fn slow_axial_decay_is_rejected() {
        let mut s = PotentialSpec::gaussian(c64::ONE, 0.1, 1.0);
        s.axial = AxialProfile::Polynomial { beta: 2.5 };
        let err = validate_potential(&s).unwrap_err().to_string();
        assert!(err.contains("Assumption 1.1 violated"), "{err}");
    }

    #[test]
    fn indefinite_spinor_is_rejected() {
        let mut sp = [[Z; 4]; 4];
        sp[0][0] = O;
        sp[1][1] = neg(O);
        let s = PotentialSpec::gaussian(c64::ONE, 0.1, 1.0).with_spinor(sp);
        let err = validate_potential(&s).unwrap_err().to_string();
        assert!(err.contains("indefinite"), "{err}");
    }

    #[test]
    fn validation_is_idempotent() {
        let s = PotentialSpec::gaussian(c64::new(0.3, 0.4), 0.2, 0.5);
        let p1 = validate_potential(&s).unwrap();
        let p2 = validate_potential(p1.spec()).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn domain_radius_bound() {
        let model = ModelParams::new(1.0, 2.0).unwrap();
        let ok = KDomainParams {
            eta: 0.5,
            gamma: 0.5,
            eps_k: 0.1,
            delta: 0.2,
            nu_gap: 0.3,
        };
        ok.validate(&model).unwrap();
        let bad = KDomainParams { eps_k: 0.2, ..ok };
        assert!(bad.validate(&model).is_err());
    }

    #[test]
    fn polynomial_axial_integral() {
        // ∫(1+x²)^{-2} dx = π/2
        let g = AxialProfile::Polynomial { beta: 4.0 };
        assert!((g.integral() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        assert!((AxialProfile::Gaussian.integral() - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
