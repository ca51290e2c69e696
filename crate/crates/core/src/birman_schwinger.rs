//! Sandwiched resolvents T_V(z) = J̃|V|^{1/2}(D − z)^{-1}|V|^{1/2}, their
//! threshold split and Schatten-norm diagnostics.

use faer::{c64, Mat};
use serde::Serialize;

use crate::axial::{self, AxialResolvent};
use crate::dirac_op::Discretization;
use crate::error::{Error, Result};
use crate::landau::{self, abs_matrix};
use crate::linalg::{self, CMat};
use crate::localization::z_of_k;
use crate::model::{spinor_to_mat, Potential, Spinor4, Threshold};

/// Pointwise polar data of V(x): V = J̃|V|, with J̃ = 0 on ker |V|.
#[derive(Debug, Clone)]
pub struct PointPolar {
    pub v: CMat,
    pub abs_v: CMat,
    pub j_tilde: CMat,
    pub sqrt_abs_v: CMat,
}

pub fn polar_at(v: &Spinor4) -> Result<PointPolar> {
    let vm = spinor_to_mat(v);
    let abs_v = abs_matrix(v)?;
    let top = linalg::herm_eigenvalues(abs_v.as_ref())?
        .last()
        .copied()
        .unwrap_or(0.0);
    let pinv = linalg::herm_apply(abs_v.as_ref(), |s| {
        if s > 1e-12 * top.max(1e-300) {
            1.0 / s
        } else {
            0.0
        }
    })?;
    let j_tilde = &vm * &pinv;
    let sqrt_abs_v = linalg::psd_sqrt(abs_v.as_ref())?;
    Ok(PointPolar {
        v: vm,
        abs_v,
        j_tilde,
        sqrt_abs_v,
    })
}

/// Polar factors at sample points x = (x1, x2, x3).
pub fn polar_factors(potential: &Potential, points: &[[f64; 3]]) -> Result<Vec<PointPolar>> {
    points
        .iter()
        .map(|p| polar_at(&potential.matrix_at(p[0], p[1], p[2])))
        .collect()
}

/// Transverse factors of the truncated potential on one channel:
/// |V_L|^{1/2} = √(ε|Φ|)·W_t^{1/2} ⊗ √g and J̃ = e^{i arg Φ}·(projection on ran W_t).
#[derive(Debug, Clone)]
pub struct ChannelFactors {
    pub states: Vec<usize>,
    pub sqrt_abs: CMat,
    pub j_tilde: CMat,
    pub left: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Backend {
    /// Dense solve with the assembled free operator.
    Matrix,
    /// Assembly from (D + z)(D² − z²)^{-1} with axial kernels.
    Kernel(AxialResolvent),
}

/// Where the resolvent is evaluated. The k form pins the exact threshold
/// root σ·k·(z ± m) for states with zero transverse energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EvalPoint {
    Z(c64),
    K { k: c64, threshold: Threshold },
}

impl EvalPoint {
    pub fn z(&self, mass: f64) -> c64 {
        match *self {
            EvalPoint::Z(z) => z,
            EvalPoint::K { k, threshold } => z_of_k(k, mass, threshold),
        }
    }
}

/// The assembled operator on every channel.
#[derive(Debug, Clone)]
pub struct BSOperator {
    pub z: c64,
    pub at: EvalPoint,
    pub blocks: Vec<CMat>,
}

impl BSOperator {
    pub fn fro_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::fro_norm(b.as_ref()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &BSOperator) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| linalg::fro_norm((a - b).as_ref()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

pub struct BirmanSchwinger<'a> {
    pub disc: &'a Discretization,
    pub factors: Vec<ChannelFactors>,
    /// √g at the axial nodes.
    pub sqrt_g: Vec<f64>,
    dax: CMat,
}

impl<'a> BirmanSchwinger<'a> {
    pub fn new(disc: &'a Discretization) -> Result<Self> {
        let Some(pot) = &disc.potential else {
            return Err(Error::InvalidParameter(
                "Birman–Schwinger assembly needs a potential".into(),
            ));
        };
        let spec = pot.spec();
        let amp = spec.coupling * spec.phi.norm();
        let phase = pot.phase();
        let mut factors = Vec::new();
        for ch in &disc.channels {
            let wt = disc.sub(&disc.transverse_weight, ch);
            let root = linalg::psd_sqrt(wt.as_ref())?;
            let sqrt_abs = linalg::scaled(root.as_ref(), c64::new(amp.sqrt(), 0.0));
            let top = linalg::herm_eigenvalues(wt.as_ref())?
                .last()
                .copied()
                .unwrap_or(0.0);
            let proj = linalg::range_projector(wt.as_ref(), 1e-13 * top.max(1e-300))?;
            let j_tilde = linalg::scaled(proj.as_ref(), phase);
            let left = &j_tilde * &sqrt_abs;
            factors.push(ChannelFactors {
                states: ch.clone(),
                sqrt_abs,
                j_tilde,
                left,
            });
        }
        let sqrt_g = disc.trunc.grid.sqrt_profile(|x| spec.axial.eval(x));
        let dax = disc.trunc.grid.derivative_matrix()?;
        Ok(Self {
            disc,
            factors,
            sqrt_g,
            dax,
        })
    }

    fn mass(&self) -> f64 {
        self.disc.params.mass
    }

    fn check_point(&self, at: EvalPoint, backend: Backend) -> Result<c64> {
        let m = self.mass();
        let z = at.z(m);
        let on_ray = z.im.abs() < 1e-10 && z.re.abs() >= m - 1e-10;
        let allowed = matches!(
            (at, backend),
            (
                EvalPoint::K { .. },
                Backend::Kernel(AxialResolvent::Continuum)
            )
        );
        if on_ray && !allowed {
            return Err(Error::BranchCut {
                value: format!("{z}"),
                cut: "essential spectrum rays |Re z| ≥ m",
            });
        }
        Ok(z)
    }

    /// Root w = √(z² − m² − Λ) with Im w ≥ 0 for a state of transverse energy Λ.
    fn root(&self, at: EvalPoint, lambda: f64) -> c64 {
        let m = self.mass();
        match at {
            EvalPoint::K { k, threshold } if lambda == 0.0 => {
                axial::threshold_root(k, m, threshold)
            }
            _ => {
                let z = at.z(m);
                axial::upper_sqrt(z * z - m * m - lambda)
            }
        }
    }

    fn sandwich(&self, ch: usize, mut t: CMat) -> CMat {
        let n = self.disc.axial_len();
        let sg = &self.sqrt_g;
        for j in 0..t.ncols() {
            for i in 0..t.nrows() {
                t[(i, j)] *= sg[i % n] * sg[j % n];
            }
        }
        let _ = ch;
        t
    }

    /// Σ_σ (A1[τ,σ]·St[σ,τ']) R_σ + (A2[τ,σ]·St[σ,τ']) DR_σ assembled blockwise,
    /// where R_σ, DR_σ come from `axial_pair(σ)`.
    fn assemble_blocks(
        &self,
        ch: usize,
        z: c64,
        axial_pair: &dyn Fn(usize) -> Result<(CMat, CMat)>,
    ) -> Result<CMat> {
        let f = &self.factors[ch];
        let states = &f.states;
        let ns = states.len();
        let n = self.disc.axial_len();
        let td = self.disc.sub(&self.disc.transverse_dirac, states);
        let a3 = self.disc.sub(&self.disc.alpha3, states);
        let c1 = Mat::from_fn(ns, ns, |i, j| {
            td[(i, j)] + if i == j { z } else { c64::ZERO }
        });
        let a1 = &f.left * &c1;
        let a2 = &f.left * &a3;
        let mut t = Mat::<c64>::zeros(ns * n, ns * n);
        for s in 0..ns {
            let (r, dr) = axial_pair(s)?;
            for tau in 0..ns {
                for tau2 in 0..ns {
                    let c_r = a1[(tau, s)] * f.sqrt_abs[(s, tau2)];
                    let c_d = a2[(tau, s)] * f.sqrt_abs[(s, tau2)];
                    if c_r == c64::ZERO && c_d == c64::ZERO {
                        continue;
                    }
                    for q in 0..n {
                        for p in 0..n {
                            t[(tau * n + p, tau2 * n + q)] += c_r * r[(p, q)] + c_d * dr[(p, q)];
                        }
                    }
                }
            }
        }
        Ok(self.sandwich(ch, t))
    }

    /// T on channel `ch`.
    pub fn channel_operator(&self, ch: usize, at: EvalPoint, backend: Backend) -> Result<CMat> {
        let z = self.check_point(at, backend)?;
        let f = &self.factors[ch];
        let states = &f.states;
        let n = self.disc.axial_len();
        let ns = states.len();
        match backend {
            Backend::Matrix => {
                let d = self.disc.free_block(states, &self.dax);
                let shifted = Mat::from_fn(ns * n, ns * n, |i, j| {
                    d[(i, j)] - if i == j { z } else { c64::ZERO }
                });
                let rhs = Mat::from_fn(ns * n, ns * n, |i, j| {
                    if i % n == j % n {
                        f.sqrt_abs[(i / n, j / n)] * self.sqrt_g[i % n]
                    } else {
                        c64::ZERO
                    }
                });
                let x = linalg::solve(shifted.as_ref(), rhs.as_ref());
                Ok(Mat::from_fn(ns * n, ns * n, |i, j| {
                    (0..ns)
                        .map(|s| f.left[(i / n, s)] * x[(s * n + i % n, j)])
                        .sum::<c64>()
                        * self.sqrt_g[i % n]
                }))
            }
            Backend::Kernel(real) => {
                let grid = &self.disc.trunc.grid;
                let field = self.disc.params.field;
                let pair = |s: usize| {
                    let lambda = self.disc.states[states[s]].transverse_energy(field);
                    real.matrices(grid, self.root(at, lambda))
                };
                self.assemble_blocks(ch, z, &pair)
            }
        }
    }

    pub fn operator(&self, at: EvalPoint, backend: Backend) -> Result<BSOperator> {
        let blocks = (0..self.factors.len())
            .map(|c| self.channel_operator(c, at, backend))
            .collect::<Result<Vec<_>>>()?;
        Ok(BSOperator {
            z: at.z(self.mass()),
            at,
            blocks,
        })
    }

    /// K_{±m} on channel `ch`: rows are the lowest-level states of the
    /// threshold component in the channel.
    pub fn k_factor(&self, ch: usize, threshold: Threshold) -> CMat {
        self.k_factor_component(ch, threshold.lll_component())
    }

    fn k_factor_component(&self, ch: usize, component: usize) -> CMat {
        let f = &self.factors[ch];
        let n = self.disc.axial_len();
        let w = self.disc.trunc.grid.weights();
        let rows: Vec<usize> = f
            .states
            .iter()
            .enumerate()
            .filter(|(_, &s)| {
                let st = self.disc.states[s];
                st.component == component && st.label.level == 0
            })
            .map(|(i, _)| i)
            .collect();
        let ns = f.states.len();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Mat::from_fn(rows.len(), ns * n, |a, col| {
            let (tau, j) = (col / n, col % n);
            f.sqrt_abs[(rows[a], tau)] * (r * w[j].sqrt() * self.sqrt_g[j])
        })
    }

    /// Singular decomposition T = (iσ/k)·J̃B + A(k) on channel `ch` (continuum
    /// kernels). σ is the sign of the threshold root on the half-disc of k.
    pub fn singular_split(&self, ch: usize, k: c64, threshold: Threshold) -> Result<SplitOperator> {
        if k == c64::ZERO {
            return Err(Error::InvalidParameter(
                "singular split is undefined at k = 0".into(),
            ));
        }
        let m = self.mass();
        let at = EvalPoint::K { k, threshold };
        let z = at.z(m);
        let sigma = axial::half_plane_sign(k, threshold);
        let flagged = k.im == 0.0 || k.re == 0.0;
        let full = self.channel_operator(ch, at, Backend::Kernel(AxialResolvent::Continuum))?;
        let grid = &self.disc.trunc.grid;
        let field = self.disc.params.field;
        let states = &self.factors[ch].states;
        let pair = |s: usize| -> Result<(CMat, CMat)> {
            let lambda = self.disc.states[states[s]].transverse_energy(field);
            let w = self.root(at, lambda);
            if lambda == 0.0 {
                let reg = grid
                    .nystrom(|d| -axial::phi1(c64::new(0.0, 1.0) * w * d.abs()) * (0.5 * d.abs()));
                let dr = grid.nystrom(|d| axial::derivative_kernel_w(w, d));
                Ok((reg, dr))
            } else {
                AxialResolvent::Continuum.matrices(grid, w)
            }
        };
        let regular = self.assemble_blocks(ch, z, &pair)?;
        let other = match threshold {
            Threshold::Upper => 2,
            Threshold::Lower => 0,
        };
        let kf = self.k_factor(ch, threshold);
        let ko = self.k_factor_component(ch, other);
        let b = kf.adjoint() * &kf;
        let b_other = ko.adjoint() * &ko;
        let jt = self.jtilde_full(ch);
        let jb = &jt * &b;
        let jb_other = &jt * &b_other;
        let i = c64::new(0.0, 1.0);
        let singular_coef = i * sigma / k;
        let a_of_k = &regular + linalg::scaled(jb_other.as_ref(), i * sigma * k);
        let recon = linalg::scaled(jb.as_ref(), singular_coef) + &a_of_k;
        let residual = linalg::fro_norm((&full - &recon).as_ref())
            / linalg::fro_norm(full.as_ref()).max(1e-300);
        Ok(SplitOperator {
            k,
            threshold,
            z,
            sigma,
            full,
            b,
            jb,
            a_of_k,
            residual,
            flagged,
        })
    }

    fn jtilde_full(&self, ch: usize) -> CMat {
        let n = self.disc.axial_len();
        let jt = &self.factors[ch].j_tilde;
        let ns = jt.nrows();
        Mat::from_fn(ns * n, ns * n, |i, j| {
            if i % n == j % n {
                jt[(i / n, j / n)]
            } else {
                c64::ZERO
            }
        })
    }

    /// J̃|V|^{1/2}(D + V − z)^{-1}|V|^{1/2} on channel `ch` (matrix model).
    pub fn perturbed_sandwich(&self, ch: usize, z: c64) -> Result<CMat> {
        let f = &self.factors[ch];
        let n = self.disc.axial_len();
        let ns = f.states.len();
        let d = self.disc.free_block(&f.states, &self.dax);
        let v = self.disc.potential_block(&f.states);
        let shifted = Mat::from_fn(ns * n, ns * n, |i, j| {
            d[(i, j)] + v[(i, j)] - if i == j { z } else { c64::ZERO }
        });
        let s_full = Mat::from_fn(ns * n, ns * n, |i, j| {
            if i % n == j % n {
                f.sqrt_abs[(i / n, j / n)] * self.sqrt_g[i % n]
            } else {
                c64::ZERO
            }
        });
        let x = linalg::solve(shifted.as_ref(), s_full.as_ref());
        let jt = self.jtilde_full(ch);
        Ok(&jt * &s_full * &x)
    }
}

#[derive(Debug, Clone)]
pub struct SplitOperator {
    pub k: c64,
    pub threshold: Threshold,
    pub z: c64,
    pub sigma: f64,
    pub full: CMat,
    /// B = K*K.
    pub b: CMat,
    /// J̃·B.
    pub jb: CMat,
    pub a_of_k: CMat,
    pub residual: f64,
    /// k on a half-disc boundary axis (branch-sensitive).
    pub flagged: bool,
}

/// K K* assembled over all channels (indexed by the angular index of the
/// lowest level) and the Toeplitz matrix of the threshold profile.
#[derive(Debug, Clone)]
pub struct KkStarReport {
    pub kk_star: CMat,
    pub toeplitz: CMat,
    pub kk_eigs: Vec<f64>,
    pub toeplitz_eigs: Vec<f64>,
    pub max_difference: f64,
}

pub fn kk_star_check(bs: &BirmanSchwinger<'_>, threshold: Threshold) -> Result<KkStarReport> {
    let disc = bs.disc;
    let mcount = disc.trunc.m_count;
    let mut kk = Mat::<c64>::zeros(mcount, mcount);
    for (c, f) in bs.factors.iter().enumerate() {
        let rows: Vec<usize> = f
            .states
            .iter()
            .filter(|&&s| disc.states[s].is_lowest_level(threshold))
            .map(|&s| disc.states[s].label.index)
            .collect();
        let kf = bs.k_factor(c, threshold);
        let block = &kf * kf.adjoint();
        for (i, &a) in rows.iter().enumerate() {
            for (j, &b) in rows.iter().enumerate() {
                kk[(a, b)] = block[(i, j)];
            }
        }
    }
    let pot = disc.potential.as_ref().expect("assembler has a potential");
    let basis = landau::lll_basis(disc.params.field, mcount)?;
    let profile = landau::vm_profile(pot, threshold)?;
    let toeplitz = landau::toeplitz_matrix(&move |x, y| profile.eval(x, y), &basis);
    let mut kk_eigs = linalg::herm_eigenvalues(kk.as_ref())?;
    let mut toeplitz_eigs = linalg::herm_eigenvalues(toeplitz.as_ref())?;
    kk_eigs.reverse();
    toeplitz_eigs.reverse();
    let max_difference = kk_eigs
        .iter()
        .zip(&toeplitz_eigs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(KkStarReport {
        kk_star: kk,
        toeplitz,
        kk_eigs,
        toeplitz_eigs,
        max_difference,
    })
}

/// sup_{s ≥ s0} |(s + 1)/(s − c)|.
pub fn rational_sup(c: c64, s0: f64) -> f64 {
    let f = |s: f64| (s + 1.0).abs() / (c64::new(s, 0.0) - c).norm();
    let mut best = f(s0).max(1.0);
    let (a, b) = (c.re, c.im);
    if (a + 1.0).abs() > 1e-300 {
        let s = a + b * b / (a + 1.0);
        if s >= s0 {
            best = best.max(f(s));
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct SchattenReport {
    pub z: c64,
    pub q: f64,
    pub tau: f64,
    pub lhs_p: f64,
    pub m_value: f64,
    pub lhs_q: f64,
    pub m_tilde_value: f64,
    pub fitted_p: f64,
    pub fitted_q: f64,
}

fn lq_norm(f: impl Fn(f64) -> f64, q: f64) -> f64 {
    (2.0 * crate::quadrature::half_line(|x| f(x).abs().powf(q), 1.0)).powf(1.0 / q)
}

/// Schatten norms of U⟨x3⟩^{−τ}(D − z)^{-1}P and U⟨x3⟩^{−τ}(D − z)^{-1}Q on the
/// matrix model, with U = w⊥ of the potential, and the majorants M, M̃.
pub fn schatten_diagnostics(
    disc: &Discretization,
    z: c64,
    q: f64,
    tau: f64,
) -> Result<SchattenReport> {
    if !(q >= 2.0) || !(tau > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "need q ≥ 2 and τ > 1/2, got q = {q}, τ = {tau}"
        )));
    }
    let m = disc.params.mass;
    let zeta = disc.params.zeta();
    let dax = disc.trunc.grid.derivative_matrix()?;
    let n = disc.axial_len();
    let pot = disc
        .potential
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("diagnostics need a potential for U".into()))?;
    let basis =
        landau::LandauBasis::new(disc.params.field, disc.trunc.n_levels, disc.trunc.m_count)?;
    let tr = pot.spec().transverse;
    let u_elems = basis.matrix_elements(&move |x, y| tr.eval(x, y));
    let weight: Vec<f64> = disc
        .trunc
        .grid
        .nodes()
        .iter()
        .map(|&x| (1.0 + x * x).powf(-0.5 * tau))
        .collect();
    let (mut sum_p, mut sum_q) = (0.0, 0.0);
    for ch in &disc.channels {
        let ns = ch.len();
        let d = disc.free_block(ch, &dax);
        let shifted = Mat::from_fn(ns * n, ns * n, |i, j| {
            d[(i, j)] - if i == j { z } else { c64::ZERO }
        });
        let u = Mat::from_fn(ns * n, ns * n, |i, j| {
            let (si, sj) = (disc.states[ch[i / n]], disc.states[ch[j / n]]);
            if i % n != j % n || si.component != sj.component {
                return c64::ZERO;
            }
            let bi = basis.position(si.label).expect("in basis");
            let bj = basis.position(sj.label).expect("in basis");
            u_elems[(bi, bj)] * weight[i % n]
        });
        let res = linalg::inverse(shifted.as_ref());
        let is_p = |i: usize| {
            let s = disc.states[ch[i / n]];
            s.label.level == 0 && s.spin_up()
        };
        let rp = Mat::from_fn(ns * n, ns * n, |i, j| {
            if is_p(j) {
                res[(i, j)]
            } else {
                c64::ZERO
            }
        });
        let rq = Mat::from_fn(ns * n, ns * n, |i, j| {
            if is_p(j) {
                c64::ZERO
            } else {
                res[(i, j)]
            }
        });
        let sp = linalg::singular_values((&u * &rp).as_ref())?;
        let sq = linalg::singular_values((&u * &rq).as_ref())?;
        sum_p += sp.iter().map(|s| s.powf(q)).sum::<f64>();
        sum_q += sq.iter().map(|s| s.powf(q)).sum::<f64>();
    }
    let lhs_p = sum_p.powf(1.0 / q);
    let lhs_q = sum_q.powf(1.0 / q);
    let c = z * z - m * m;
    let weight_q = lq_norm(|x| (1.0 + x * x).powf(-0.5 * tau), q);
    let weight_2 = lq_norm(|x| (1.0 + x * x).powf(-0.5 * tau), 2.0);
    let im_root = axial::upper_sqrt(c).im;
    let m_value = weight_q * ((z + m).norm() + (z - m).norm()) * rational_sup(c, 0.0)
        + weight_2 / im_root.sqrt();
    let first = ((zeta + 1.0) / (zeta + m * m)).max(1.0).sqrt();
    let m_tilde_value = first + (z.norm() + z.norm_sqr()) * rational_sup(c, zeta);
    let u_norm = {
        let r = landau::PolarQuadrature::for_indices(disc.params.field, 4)?;
        let mut s = 0.0;
        for (i, w) in r.t.weights.iter().enumerate() {
            for k in 0..r.n_theta {
                let (x1, x2) = r.point(i, k);
                s += w * tr.eval(x1, x2).powf(q) * 2.0 * std::f64::consts::PI / r.n_theta as f64;
            }
        }
        (s / disc.params.field).powf(1.0 / q)
    };
    Ok(SchattenReport {
        z,
        q,
        tau,
        lhs_p,
        m_value,
        lhs_q,
        m_tilde_value,
        fitted_p: lhs_p / (u_norm * m_value),
        fitted_q: lhs_q / (u_norm * m_tilde_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axial::AxialGrid;
    use crate::dirac_op::TruncationScheme;
    use crate::model::{validate_potential, ModelParams, PotentialSpec};

    fn disc(levels: usize, m_count: usize, n: usize, eps: f64) -> Discretization {
        let params = ModelParams::new(1.0, 2.0).unwrap();
        let grid = AxialGrid::uniform(6.0, n).unwrap();
        let trunc = TruncationScheme::new(levels, m_count, grid).unwrap();
        let pot =
            validate_potential(&PotentialSpec::gaussian(c64::new(0.6, 0.8), eps, 1.0)).unwrap();
        Discretization::new(params, trunc, Some(&pot)).unwrap()
    }

    #[test]
    fn polar_reconstruction() {
        let d = disc(1, 2, 16, 0.1);
        let pot = d.potential.as_ref().unwrap();
        let pts: Vec<[f64; 3]> = (0..20)
            .map(|i| [0.1 * i as f64, -0.05 * i as f64, 0.2 - 0.03 * i as f64])
            .collect();
        for p in polar_factors(pot, &pts).unwrap() {
            let rec = &p.j_tilde * &p.abs_v;
            assert!(linalg::fro_norm((&rec - &p.v).as_ref()) < 1e-10);
        }
    }

    #[test]
    fn backends_agree() {
        let d = disc(2, 2, 24, 0.1);
        let bs = BirmanSchwinger::new(&d).unwrap();
        let at = EvalPoint::K {
            k: c64::new(0.1, 0.05),
            threshold: Threshold::Upper,
        };
        let a = bs.operator(at, Backend::Matrix).unwrap();
        let b = bs
            .operator(at, Backend::Kernel(AxialResolvent::Discrete))
            .unwrap();
        assert!(
            a.distance(&b) <= 1e-9 * a.fro_norm(),
            "{}",
            a.distance(&b) / a.fro_norm()
        );
    }

    #[test]
    fn resolvent_identity() {
        let d = disc(2, 2, 16, 0.3);
        let bs = BirmanSchwinger::new(&d).unwrap();
        let z = c64::new(0.7, 0.4);
        for c in 0..d.channels.len() {
            let t = bs
                .channel_operator(c, EvalPoint::Z(z), Backend::Matrix)
                .unwrap();
            let s = bs.perturbed_sandwich(c, z).unwrap();
            let n = t.nrows();
            let prod = (linalg::identity(n) + &t) * (linalg::identity(n) - &s);
            assert!(linalg::max_abs((&prod - linalg::identity(n)).as_ref()) < 1e-8);
        }
    }

    #[test]
    fn split_reconstructs() {
        let d = disc(2, 2, 24, 0.1);
        let bs = BirmanSchwinger::new(&d).unwrap();
        for th in [Threshold::Upper, Threshold::Lower] {
            for k in [c64::new(0.08, 0.03), c64::new(0.05, -0.07)] {
                for c in d.threshold_channels(th) {
                    let s = bs.singular_split(c, k, th).unwrap();
                    assert!(s.residual < 1e-8, "{th:?} {k} {}", s.residual);
                    assert!(linalg::hermitian_defect(s.b.as_ref()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kk_star_matches_toeplitz() {
        let d = disc(1, 4, 64, 0.1);
        let bs = BirmanSchwinger::new(&d).unwrap();
        let r = kk_star_check(&bs, Threshold::Upper).unwrap();
        let top = r.toeplitz_eigs[0];
        assert!(
            r.max_difference < 1e-8 * top,
            "{:?} {:?}",
            r.kk_eigs,
            r.toeplitz_eigs
        );
    }

    #[test]
    fn rational_sup_cases() {
        // c = −1: |(s+1)/(s+1)| = 1
        assert!((rational_sup(c64::new(-1.0, 0.0), 0.0) - 1.0).abs() < 1e-14);
        let c = c64::new(2.0, 0.1);
        let brute = (0..200_000)
            .map(|i| i as f64 * 1e-4)
            .map(|s| (s + 1.0) / (c64::new(s, 0.0) - c).norm())
            .fold(0.0, f64::max);
        assert!((rational_sup(c, 0.0) - brute).abs() < 1e-3 * brute);
    }
}
