//! The discretized operator D_m(b0, V) on spinor ⊗ Landau ⊗ axial grid,
//! split into independent coupling channels.

use faer::{c64, Mat};
use serde::Serialize;

use crate::axial::AxialGrid;
use crate::error::{Error, Result};
use crate::landau::{LandauBasis, LandauLabel};
use crate::linalg::{self, CMat};
use crate::model::{ModelParams, Potential, Threshold};

pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Basis truncation. Spin-up components keep levels 0..n_levels−1, spin-down
/// components keep levels 0..n_levels−2 so every spin-down level has its
/// ladder partner; all levels keep angular indices 0..m_count−1.
#[derive(Debug, Clone)]
pub struct TruncationScheme {
    pub n_levels: usize,
    pub m_count: usize,
    pub grid: AxialGrid,
    pub dimension_cap: usize,
}

impl TruncationScheme {
    pub fn new(n_levels: usize, m_count: usize, grid: AxialGrid) -> Result<Self> {
        if n_levels == 0 || m_count == 0 {
            return Err(Error::InvalidParameter(
                "n_levels and M must be positive".into(),
            ));
        }
        Ok(Self {
            n_levels,
            m_count,
            grid,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        })
    }

    pub fn transverse_dimension(&self) -> usize {
        2 * (2 * self.n_levels - 1) * self.m_count
    }

    pub fn dimension(&self) -> usize {
        self.transverse_dimension() * self.grid.len()
    }
}

/// A spinor component together with a Landau state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransverseState {
    pub component: usize,
    pub label: LandauLabel,
}

impl TransverseState {
    pub fn spin_up(&self) -> bool {
        self.component.is_multiple_of(2)
    }

    /// Eigenvalue of D⊥² on this state: 2b·n (H⊥⁻) or 2b·(n+1) (H⊥⁺).
    pub fn transverse_energy(&self, field: f64) -> f64 {
        let n = self.label.level as f64;
        if self.spin_up() {
            2.0 * field * n
        } else {
            2.0 * field * (n + 1.0)
        }
    }

    pub fn is_lowest_level(&self, threshold: Threshold) -> bool {
        self.component == threshold.lll_component() && self.label.level == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Free,
    Potential,
    Perturbed,
    Projector,
}

/// Square block acting on one channel: rows/cols are (state, axial node)
/// with the state index major.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub states: Vec<usize>,
    pub mat: CMat,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub role: Role,
    pub axial_len: usize,
    pub blocks: Vec<ChannelMatrix>,
}

impl OperatorMatrix {
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.mat.nrows()).sum()
    }

    pub fn combine(
        &self,
        other: &OperatorMatrix,
        role: Role,
        f: impl Fn(c64, c64) -> c64,
    ) -> Result<OperatorMatrix> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::InvalidParameter(
                "operators live on different channel splits".into(),
            ));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let n = a.mat.nrows();
                ChannelMatrix {
                    states: a.states.clone(),
                    mat: Mat::from_fn(n, n, |i, j| f(a.mat[(i, j)], b.mat[(i, j)])),
                }
            })
            .collect();
        Ok(OperatorMatrix {
            role,
            axial_len: self.axial_len,
            blocks,
        })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.combine(other, Role::Perturbed, |a, b| a + b)
    }

    /// Dense matrix over the global ordering (state index major, axial minor).
    pub fn to_dense(&self, n_states: usize) -> CMat {
        let n = self.axial_len;
        let mut out = Mat::<c64>::zeros(n_states * n, n_states * n);
        for b in &self.blocks {
            for (li, &si) in b.states.iter().enumerate() {
                for (lj, &sj) in b.states.iter().enumerate() {
                    for p in 0..n {
                        for q in 0..n {
                            out[(si * n + p, sj * n + q)] = b.mat[(li * n + p, lj * n + q)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest operator norm over blocks.
    pub fn norm(&self) -> Result<f64> {
        let mut s: f64 = 0.0;
        for b in &self.blocks {
            s = s.max(linalg::op_norm(b.mat.as_ref())?);
        }
        Ok(s)
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Transverse structure of the truncated model together with the channel
/// split induced by the free operator and the potential couplings.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub params: ModelParams,
    pub trunc: TruncationScheme,
    pub states: Vec<TransverseState>,
    pub channels: Vec<Vec<usize>>,
    /// D⊥ + mβ on transverse states.
    pub transverse_dirac: CMat,
    /// α3 on transverse states.
    pub alpha3: CMat,
    /// Compression S ⊗ ⟨ψ|w⊥|ψ'⟩ of the transverse potential factor; zero
    /// without potential.
    pub transverse_weight: CMat,
    pub potential: Option<Potential>,
}

impl Discretization {
    pub fn new(
        params: ModelParams,
        trunc: TruncationScheme,
        potential: Option<&Potential>,
    ) -> Result<Self> {
        let dim = trunc.dimension();
        if dim > trunc.dimension_cap {
            return Err(Error::DimensionCap {
                dim,
                cap: trunc.dimension_cap,
            });
        }
        let l = trunc.n_levels;
        let mut states = Vec::new();
        for a in 0..trunc.m_count {
            for n in 0..l {
                for comp in 0..4 {
                    let spin_up = comp % 2 == 0;
                    if spin_up || n + 1 < l {
                        states.push(TransverseState {
                            component: comp,
                            label: LandauLabel { level: n, index: a },
                        });
                    }
                }
            }
        }
        let nt = states.len();
        let idx = |comp: usize, level: usize, index: usize| {
            states
                .iter()
                .position(|s| s.component == comp && s.label == LandauLabel { level, index })
        };
        let m = params.mass;
        let mut td = Mat::<c64>::zeros(nt, nt);
        let mut a3 = Mat::<c64>::zeros(nt, nt);
        for (i, s) in states.iter().enumerate() {
            td[(i, i)] = c64::new(if s.component < 2 { m } else { -m }, 0.0);
            let (n, a) = (s.label.level, s.label.index);
            if n >= 1 {
                let c = (2.0 * params.field * n as f64).sqrt();
                let partner = match s.component {
                    0 => idx(3, n - 1, a),
                    2 => idx(1, n - 1, a),
                    _ => None,
                };
                if let Some(j) = partner {
                    td[(i, j)] = c64::new(c, 0.0);
                    td[(j, i)] = c64::new(c, 0.0);
                }
            }
            let (other, sign) = match s.component {
                0 => (2, 1.0),
                2 => (0, 1.0),
                1 => (3, -1.0),
                _ => (1, -1.0),
            };
            if let Some(j) = idx(other, n, a) {
                a3[(i, j)] = c64::new(sign, 0.0);
            }
        }
        let mut wt = Mat::<c64>::zeros(nt, nt);
        if let Some(p) = potential {
            let basis = LandauBasis::new(params.field, l, trunc.m_count)?;
            let tr = p.spec().transverse;
            let elems = basis.matrix_elements(&move |x, y| tr.eval(x, y));
            let spinor = p.spec().spinor;
            for (i, si) in states.iter().enumerate() {
                let bi = basis.position(si.label).expect("label inside basis");
                for (j, sj) in states.iter().enumerate() {
                    let bj = basis.position(sj.label).expect("label inside basis");
                    wt[(i, j)] = spinor[si.component][sj.component] * elems[(bi, bj)];
                }
            }
        }
        // Channels: connected components of the coupling graph.
        let scale = linalg::max_abs(wt.as_ref());
        let mut parent: Vec<usize> = (0..nt).collect();
        for i in 0..nt {
            for j in 0..nt {
                let coupled = td[(i, j)] != c64::ZERO && i != j
                    || a3[(i, j)] != c64::ZERO
                    || wt[(i, j)].norm() > 1e-14 * scale && i != j;
                if coupled {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut channels: Vec<Vec<usize>> = Vec::new();
        let mut root_of: Vec<Option<usize>> = vec![None; nt];
        for i in 0..nt {
            let r = find(&mut parent, i);
            match root_of[r] {
                Some(c) => channels[c].push(i),
                None => {
                    root_of[r] = Some(channels.len());
                    channels.push(vec![i]);
                }
            }
        }
        Ok(Self {
            params,
            trunc,
            states,
            channels,
            transverse_dirac: td,
            alpha3: a3,
            transverse_weight: wt,
            potential: potential.cloned(),
        })
    }

    pub fn axial_len(&self) -> usize {
        self.trunc.grid.len()
    }

    pub fn sub(&self, mat: &CMat, ch: &[usize]) -> CMat {
        Mat::from_fn(ch.len(), ch.len(), |i, j| mat[(ch[i], ch[j])])
    }

    /// Channel indices containing the lowest Landau level of the threshold.
    pub fn threshold_channels(&self, threshold: Threshold) -> Vec<usize> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, ch)| {
                ch.iter()
                    .any(|&s| self.states[s].is_lowest_level(threshold))
            })
            .map(|(c, _)| c)
            .collect()
    }

    pub fn free_block(&self, ch: &[usize], dax: &CMat) -> CMat {
        let td = self.sub(&self.transverse_dirac, ch);
        let a3 = self.sub(&self.alpha3, ch);
        let n = self.axial_len();
        Mat::from_fn(ch.len() * n, ch.len() * n, |i, j| {
            let (si, p) = (i / n, i % n);
            let (sj, q) = (j / n, j % n);
            let mut v = a3[(si, sj)] * dax[(p, q)];
            if p == q {
                v += td[(si, sj)];
            }
            v
        })
    }

    pub fn potential_block(&self, ch: &[usize]) -> CMat {
        let n = self.axial_len();
        let size = ch.len() * n;
        let Some(p) = &self.potential else {
            return Mat::zeros(size, size);
        };
        let spec = p.spec();
        let wt = self.sub(&self.transverse_weight, ch);
        let g: Vec<f64> = self
            .trunc
            .grid
            .nodes()
            .iter()
            .map(|&x| spec.axial.eval(x))
            .collect();
        let s = spec.phi * spec.coupling;
        Mat::from_fn(size, size, |i, j| {
            let (si, p) = (i / n, i % n);
            let (sj, q) = (j / n, j % n);
            if p == q {
                s * wt[(si, sj)] * g[p]
            } else {
                c64::ZERO
            }
        })
    }
}

/// Matrix of D_m(b0, 0) on every channel.
pub fn assemble_free_on(disc: &Discretization) -> Result<OperatorMatrix> {
    let dax = disc.trunc.grid.derivative_matrix()?;
    let blocks = disc
        .channels
        .iter()
        .map(|ch| ChannelMatrix {
            states: ch.clone(),
            mat: disc.free_block(ch, &dax),
        })
        .collect();
    Ok(OperatorMatrix {
        role: Role::Free,
        axial_len: disc.axial_len(),
        blocks,
    })
}

/// Matrix of D_m(b0, 0) for a truncation, with channels from the free
/// couplings alone.
pub fn assemble_free(
    params: ModelParams,
    trunc: &TruncationScheme,
) -> Result<(Discretization, OperatorMatrix)> {
    let disc = Discretization::new(params, trunc.clone(), None)?;
    let op = assemble_free_on(&disc)?;
    Ok((disc, op))
}

/// Matrix of V = εΦ·W on every channel of `disc`.
pub fn assemble_potential(disc: &Discretization) -> OperatorMatrix {
    let blocks = disc
        .channels
        .iter()
        .map(|ch| ChannelMatrix {
            states: ch.clone(),
            mat: disc.potential_block(ch),
        })
        .collect();
    OperatorMatrix {
        role: Role::Potential,
        axial_len: disc.axial_len(),
        blocks,
    }
}

/// P = lowest level of components 0 and 2 (⊗ axial identity), Q = I − P.
pub fn projectors(disc: &Discretization) -> (OperatorMatrix, OperatorMatrix) {
    let n = disc.axial_len();
    let mut p_blocks = Vec::new();
    let mut q_blocks = Vec::new();
    for ch in &disc.channels {
        let size = ch.len() * n;
        let p = Mat::from_fn(size, size, |i, j| {
            let st = disc.states[ch[i / n]];
            if i == j && st.label.level == 0 && st.spin_up() {
                c64::ONE
            } else {
                c64::ZERO
            }
        });
        let q = Mat::from_fn(size, size, |i, j| {
            if i == j {
                c64::ONE - p[(i, j)]
            } else {
                c64::ZERO
            }
        });
        p_blocks.push(ChannelMatrix {
            states: ch.clone(),
            mat: p,
        });
        q_blocks.push(ChannelMatrix {
            states: ch.clone(),
            mat: q,
        });
    }
    (
        OperatorMatrix {
            role: Role::Projector,
            axial_len: n,
            blocks: p_blocks,
        },
        OperatorMatrix {
            role: Role::Projector,
            axial_len: n,
            blocks: q_blocks,
        },
    )
}

/// Largest ‖PD − DP‖ entry; a mismatch of the threshold projector with the
/// chosen representation is a hard error.
pub fn check_projector_commutes(p: &OperatorMatrix, d: &OperatorMatrix) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (pb, db) in p.blocks.iter().zip(&d.blocks) {
        let c = &pb.mat * &db.mat - &db.mat * &pb.mat;
        worst = worst.max(linalg::max_abs(c.as_ref()));
    }
    if worst > 1e-8 {
        return Err(Error::Representation(format!(
            "threshold projector does not commute with the free operator (defect {worst:e})"
        )));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub z: c64,
    pub multiplicity: usize,
}

/// All eigenvalues of every block, unclustered.
pub fn all_eigenvalues(op: &OperatorMatrix) -> Result<Vec<c64>> {
    let mut out = Vec::new();
    for b in &op.blocks {
        out.extend(linalg::eigenvalues(b.mat.as_ref())?);
    }
    Ok(out)
}

/// Group eigenvalues closer than `tol` into clusters with multiplicity.
pub fn cluster(mut zs: Vec<c64>, tol: f64) -> Vec<SpectralPoint> {
    zs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(c64, usize)> = Vec::new();
    'outer: for z in zs {
        for (c, m) in out.iter_mut() {
            if (*c - z).norm() <= tol {
                *c = (*c * *m as f64 + z) / (*m as f64 + 1.0);
                *m += 1;
                continue 'outer;
            }
        }
        out.push((z, 1));
    }
    out.into_iter()
        .map(|(z, multiplicity)| SpectralPoint { z, multiplicity })
        .collect()
}

/// Eigenvalues of `op` inside the disc |z − centre| < radius, clustered at
/// 1e−8·m.
pub fn direct_spectrum(
    op: &OperatorMatrix,
    centre: c64,
    radius: f64,
    mass: f64,
) -> Result<Vec<SpectralPoint>> {
    let inside: Vec<c64> = all_eigenvalues(op)?
        .into_iter()
        .filter(|z| (z - centre).norm() < radius)
        .collect();
    Ok(cluster(inside, 1e-8 * mass))
}

fn support_gap(a: &CMat, z: c64, theta: f64) -> Result<f64> {
    let n = a.nrows();
    let e = c64::new(theta.cos(), theta.sin());
    let shifted = Mat::from_fn(n, n, |i, j| {
        e * (a[(i, j)] - if i == j { z } else { c64::ZERO })
    });
    let ev = linalg::herm_eigenvalues(shifted.as_ref())?;
    Ok(-ev.last().copied().unwrap_or(0.0))
}

/// Lower bound on dist(z, closure of the numerical range of `a`): the best
/// half-plane separation max_θ −λ_max(Re e^{iθ}(a − z)), clamped at 0.
pub fn numerical_range_distance(a: &CMat, z: c64) -> Result<f64> {
    let grid = 72;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..grid {
        let th = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
        let v = support_gap(a, z, th)?;
        if v > best.0 {
            best = (v, th);
        }
    }
    // Golden-section refinement around the best angle.
    let step = 2.0 * std::f64::consts::PI / grid as f64;
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = support_gap(a, z, x1)?;
    let mut f2 = support_gap(a, z, x2)?;
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = support_gap(a, z, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = support_gap(a, z, x2)?;
        }
    }
    Ok(best.0.max(f1).max(f2).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (ModelParams, TruncationScheme) {
        let p = ModelParams::new(1.0, 2.0).unwrap();
        let t = TruncationScheme::new(2, 2, AxialGrid::uniform(4.0, 8).unwrap()).unwrap();
        (p, t)
    }

    #[test]
    fn dimension_count() {
        let (p, t) = small();
        let disc = Discretization::new(p, t.clone(), None).unwrap();
        assert_eq!(disc.states.len(), t.transverse_dimension());
        let total: usize = disc.channels.iter().map(|c| c.len()).sum();
        assert_eq!(total, disc.states.len());
    }

    #[test]
    fn free_operator_is_hermitian() {
        let (p, t) = small();
        let (_, d) = assemble_free(p, &t).unwrap();
        for b in &d.blocks {
            assert!(linalg::hermitian_defect(b.mat.as_ref()) < 1e-12);
        }
    }

    #[test]
    fn transverse_square_is_diagonal() {
        let (p, t) = small();
        let disc = Discretization::new(p, t, None).unwrap();
        let td = &disc.transverse_dirac;
        let sq = td * td;
        for (i, s) in disc.states.iter().enumerate() {
            for j in 0..disc.states.len() {
                let expect = if i == j {
                    p.mass * p.mass + s.transverse_energy(p.field)
                } else {
                    0.0
                };
                assert!((sq[(i, j)] - c64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn projector_properties() {
        let (p, t) = small();
        let (disc, d) = assemble_free(p, &t).unwrap();
        let (pp, qq) = projectors(&disc);
        check_projector_commutes(&pp, &d).unwrap();
        let mut rank = 0.0;
        for (b, q) in pp.blocks.iter().zip(&qq.blocks) {
            let sq = &b.mat * &b.mat;
            assert!(linalg::max_abs((&sq - &b.mat).as_ref()) < 1e-12);
            rank += linalg::trace(b.mat.as_ref()).re;
            let sum = &b.mat + &q.mat;
            assert!(linalg::max_abs((&sum - linalg::identity(sum.nrows())).as_ref()) < 1e-15);
        }
        assert_eq!(rank as usize, 2 * t.m_count * t.grid.len());
    }

    #[test]
    fn numerical_range_examples() {
        let a = linalg::from_diag(&[c64::new(1.0, 0.0), c64::new(3.0, 0.0)]);
        let d = numerical_range_distance(&a, c64::new(0.0, 1.0)).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-8);
        assert_eq!(
            numerical_range_distance(&a, c64::new(2.0, 0.0)).unwrap(),
            0.0
        );
        let d2 = numerical_range_distance(&a, c64::new(3.5, 0.0)).unwrap();
        assert!((d2 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn clustering_counts_multiplicity() {
        let c = cluster(
            vec![
                c64::new(1.0, 0.0),
                c64::new(1.0 + 1e-12, 0.0),
                c64::new(2.0, 0.0),
            ],
            1e-8,
        );
        assert_eq!(c.len(), 2);
        assert_eq!(c.iter().map(|p| p.multiplicity).max(), Some(2));
    }
}
