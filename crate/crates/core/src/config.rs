//! Run configuration: plain serde structs mirroring the documented keys,
//! plus builders for the model objects. File parsing lives in the CLI.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::axial::{AxialGrid, AxialResolvent};
use crate::birman_schwinger::Backend;
use crate::dirac_op::{Discretization, TruncationScheme};
use crate::error::{Error, Result};
use crate::localization::checks::{CheckModel, CheckOptions};
use crate::localization::ZeroSearch;
use crate::model::{
    identity4, validate_potential, AxialProfile, KDomainParams, ModelParams, Potential,
    PotentialSpec, Spinor4, Threshold, TransverseProfile,
};

fn default_abs_phi() -> f64 {
    1.0
}

/// `potential` section. `arg_phi` is in radians; `spinor` lists the rows of
/// the 4×4 factor as real numbers (identity when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub arg_phi: f64,
    #[serde(default = "default_abs_phi")]
    pub abs_phi: f64,
    pub epsilon: f64,
    pub transverse: TransverseProfile,
    pub axial: AxialProfile,
    #[serde(default)]
    pub spinor: Option<Vec<Vec<f64>>>,
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec> {
        let spinor = match &self.spinor {
            None => identity4(),
            Some(rows) => {
                if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
                    return Err(Error::InvalidParameter(
                        "spinor must have 4 rows of 4 entries".into(),
                    ));
                }
                let mut s: Spinor4 = [[c64::ZERO; 4]; 4];
                for (i, row) in rows.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        s[i][j] = c64::new(*v, 0.0);
                    }
                }
                s
            }
        };
        Ok(PotentialSpec {
            phi: c64::from_polar(self.abs_phi, self.arg_phi),
            coupling: self.epsilon,
            transverse: self.transverse,
            axial: self.axial,
            spinor,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Uniform {
        half_width: f64,
        nodes: usize,
    },
    GaussLegendre {
        half_width: f64,
        panels: usize,
        order: usize,
    },
}

impl GridConfig {
    pub fn build(&self) -> Result<AxialGrid> {
        match *self {
            GridConfig::Uniform { half_width, nodes } => AxialGrid::uniform(half_width, nodes),
            GridConfig::GaussLegendre {
                half_width,
                panels,
                order,
            } => AxialGrid::gauss_legendre(half_width, panels, order),
        }
    }
}

fn default_cap() -> usize {
    crate::dirac_op::DEFAULT_DIMENSION_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    /// Landau levels kept on spin-up components (1 = lowest level only).
    pub levels: usize,
    /// Angular indices per level (M).
    pub m_count: usize,
    pub grid: GridConfig,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendConfig {
    /// Dense (D − z)⁻¹ of the truncated matrix.
    Matrix,
    /// Axial kernels of the circulant model.
    Discrete,
    /// Whole-line axial kernels on the grid.
    #[default]
    Continuum,
}

impl From<BackendConfig> for Backend {
    fn from(b: BackendConfig) -> Self {
        match b {
            BackendConfig::Matrix => Backend::Matrix,
            BackendConfig::Discrete => Backend::Kernel(AxialResolvent::Discrete),
            BackendConfig::Continuum => Backend::Kernel(AxialResolvent::Continuum),
        }
    }
}

/// Rectangle of the k-plane for the zero search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    /// Bands for the cluster check.
    pub bands: usize,
    pub inner_fraction: f64,
    pub coupling_max: f64,
    pub bisect_steps: usize,
    /// Radii of the counting scan.
    pub scan_radii: [f64; 3],
    /// Spectral parameters of the Schatten diagnostics, as offsets z − (±m).
    pub bounds_points: usize,
    pub bounds_q: f64,
    pub bounds_tau: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            bands: 3,
            inner_fraction: 1e-3,
            coupling_max: 0.5,
            bisect_steps: 6,
            scan_radii: [0.08, 0.04, 0.02],
            bounds_points: 10,
            bounds_q: 4.0,
            bounds_tau: 1.0,
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mass: f64,
    pub b0: f64,
    pub eta: f64,
    pub gamma: f64,
    pub eps_k: f64,
    pub delta: f64,
    pub nu_gap: f64,
    #[serde(default = "default_threshold")]
    pub threshold: Threshold,
    pub potential: PotentialConfig,
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub search: ZeroSearch,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub checks: ChecksConfig,
}

fn default_threshold() -> Threshold {
    Threshold::Upper
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.mass, self.b0)
    }

    pub fn domain(&self) -> KDomainParams {
        KDomainParams {
            eta: self.eta,
            gamma: self.gamma,
            eps_k: self.eps_k,
            delta: self.delta,
            nu_gap: self.nu_gap,
        }
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        self.potential.spec()
    }

    pub fn potential(&self) -> Result<Potential> {
        validate_potential(&self.potential_spec()?)
    }

    pub fn truncation(&self) -> Result<TruncationScheme> {
        let t = &self.truncation;
        let mut scheme = TruncationScheme::new(t.levels, t.m_count, t.grid.build()?)?;
        scheme.dimension_cap = t.dimension_cap;
        Ok(scheme)
    }

    pub fn discretization(&self) -> Result<Discretization> {
        let pot = self.potential()?;
        let disc = Discretization::new(self.params()?, self.truncation()?, Some(&pot))?;
        Ok(disc)
    }

    pub fn backend(&self) -> Backend {
        self.backend.into()
    }

    pub fn check_model(&self) -> Result<CheckModel> {
        Ok(CheckModel {
            params: self.params()?,
            trunc: self.truncation()?,
        })
    }

    pub fn check_options(&self) -> CheckOptions {
        CheckOptions {
            domain: self.domain(),
            search: self.search,
            inner_fraction: self.checks.inner_fraction,
            coupling_max: self.checks.coupling_max,
            bisect_steps: self.checks.bisect_steps,
        }
    }

    /// Search rectangle: the configured one, else the quarter square of side
    /// ε_k on the side where the numerical range puts the eigenvalues
    /// (sign of J·Im Φ, flipped at −m).
    pub fn search_region(&self) -> Result<(c64, c64)> {
        if !(self.checks.bounds_q >= 2.0 && self.checks.bounds_tau > 0.5) {
            return Err(Error::InvalidParameter(
                "checks.bounds_q must be ≥ 2 and checks.bounds_tau > 1/2".into(),
            ));
        }
        if let Some(r) = self.region {
            return Ok((c64::new(r.re[0], r.im[0]), c64::new(r.re[1], r.im[1])));
        }
        let inner = self.checks.inner_fraction * self.eps_k;
        let im_sign = self.potential()?.sign_j() as f64 * self.potential.arg_phi.sin();
        let upper = (im_sign >= 0.0) == (self.threshold == Threshold::Upper);
        Ok(if upper {
            (c64::new(inner, inner), c64::new(self.eps_k, self.eps_k))
        } else {
            (c64::new(inner, -self.eps_k), c64::new(self.eps_k, -inner))
        })
    }

    /// Checks everything that can be checked without numerics.
    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        self.domain().validate(&params)?;
        self.potential()?;
        let t = self.truncation()?;
        if t.dimension() > t.dimension_cap {
            return Err(Error::DimensionCap {
                dim: t.dimension(),
                cap: t.dimension_cap,
            });
        }
        if !(self.checks.bounds_q >= 2.0 && self.checks.bounds_tau > 0.5) {
            return Err(Error::InvalidParameter(
                "checks.bounds_q must be ≥ 2 and checks.bounds_tau > 1/2".into(),
            ));
        }
        if let Some(r) = self.region {
            if !(r.re[1] > r.re[0] && r.im[1] > r.im[0]) {
                return Err(Error::InvalidParameter(
                    "region bounds must be increasing".into(),
                ));
            }
        }
        Ok(())
    }
}
