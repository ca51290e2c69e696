//! Sector and domain geometry in the k-plane.

use std::f64::consts::{FRAC_PI_2, PI};

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::det_index::{Contour, PathPiece};
use crate::error::{Error, Result};
use crate::localization::HalfPlane;

/// Sets of the k-plane. `rotation` multiplies the base set (ΦC_δ(J),
/// −iJεΦΓ^δ, ...); for cones only its argument matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectorSpec {
    /// rotation·{k : −δJ Im k ≤ |Re k|}
    CDelta { delta: f64, j: i8, rotation: c64 },
    /// rotation·{x + iy : r < x < r0, −δx < y < δx}
    Gamma {
        delta: f64,
        r: f64,
        r0: f64,
        rotation: c64,
    },
    /// rotation·{k̃ : lo ≤ Re k̃ ≤ hi}
    Lambda { lo: f64, hi: f64, rotation: c64 },
    /// {r < |k| < 2r, |Re k| > √ν, |Im k| > √ν}
    Annulus { r: f64, nu: f64 },
}

impl SectorSpec {
    fn unrotate(rotation: c64, k: c64) -> c64 {
        k / rotation
    }

    pub fn contains(&self, k: c64) -> bool {
        match *self {
            SectorSpec::CDelta { delta, j, rotation } => {
                let w = Self::unrotate(rotation, k);
                -delta * j as f64 * w.im <= w.re.abs()
            }
            SectorSpec::Gamma {
                delta,
                r,
                r0,
                rotation,
            } => {
                let w = Self::unrotate(rotation, k);
                r < w.re && w.re < r0 && -delta * w.re < w.im && w.im < delta * w.re
            }
            SectorSpec::Lambda { lo, hi, rotation } => {
                let w = Self::unrotate(rotation, k);
                lo <= w.re && w.re <= hi
            }
            SectorSpec::Annulus { r, nu } => {
                let a = k.norm();
                let s = nu.sqrt();
                r < a && a < 2.0 * r && k.re.abs() > s && k.im.abs() > s
            }
        }
    }

    /// Distance-like margin to the boundary of the defining inequality (only
    /// the cone is reported; others return +∞).
    pub fn boundary_margin(&self, k: c64) -> f64 {
        match *self {
            SectorSpec::CDelta { delta, j, rotation } => {
                let w = Self::unrotate(rotation, k) * rotation.norm();
                (w.re.abs() + delta * j as f64 * w.im).abs() / (1.0 + delta * delta).sqrt()
            }
            _ => f64::INFINITY,
        }
    }

    /// Angular intervals (within [lo, hi]) occupied by a cone.
    pub fn cone_intervals(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        let SectorSpec::CDelta { delta, j, rotation } = *self else {
            return Err(Error::InvalidParameter(
                "angular intervals exist only for the cone".into(),
            ));
        };
        // The complement of C_δ(J) is the open wedge of half-angle atan δ
        // around −J·π/2.
        let beta = delta.atan();
        let centre = rotation.arg() - j as f64 * FRAC_PI_2;
        let mut out = vec![(lo, hi)];
        for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
            let (a, b) = (centre + shift - beta, centre + shift + beta);
            out = out
                .into_iter()
                .flat_map(|(x, y)| {
                    let mut parts = Vec::new();
                    if a > x {
                        parts.push((x, a.min(y)));
                    }
                    if b < y {
                        parts.push((b.max(x), y));
                    }
                    parts
                })
                .filter(|(x, y)| y > x)
                .collect();
        }
        Ok(out)
    }
}

/// The pointed quarter disc D_±*(ε) = {0 < |k| < ε, Re k > 0, ±Im k > 0}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterDisc {
    pub half: HalfPlane,
    pub radius: f64,
}

impl QuarterDisc {
    pub fn contains(&self, k: c64) -> bool {
        let side = match self.half {
            HalfPlane::Upper => k.im > 0.0,
            HalfPlane::Lower => k.im < 0.0,
        };
        side && k.re > 0.0 && k.norm() < self.radius && k.norm() > 0.0
    }

    /// Angular range of the quarter.
    pub fn angles(&self) -> (f64, f64) {
        match self.half {
            HalfPlane::Upper => (0.0, FRAC_PI_2),
            HalfPlane::Lower => (-FRAC_PI_2, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Sector(SectorSpec),
    Quarter(QuarterDisc),
    Disc { center: c64, radius: f64 },
    Rect { lo: c64, hi: c64 },
    All(Vec<Region>),
}

impl Region {
    pub fn contains(&self, k: c64) -> bool {
        match self {
            Region::Sector(s) => s.contains(k),
            Region::Quarter(q) => q.contains(k),
            Region::Disc { center, radius } => (k - center).norm() < *radius,
            Region::Rect { lo, hi } => k.re > lo.re && k.re < hi.re && k.im > lo.im && k.im < hi.im,
            Region::All(parts) => parts.iter().all(|p| p.contains(k)),
        }
    }
}

pub fn sector_contains(spec: &SectorSpec, k: c64) -> bool {
    spec.contains(k)
}

/// Boundary of {r_in < |k| < r_out, θ1 < arg k < θ2}, counterclockwise.
pub fn annular_sector(r_in: f64, r_out: f64, theta1: f64, theta2: f64) -> Contour {
    let p = |r: f64, t: f64| c64::cis(t) * r;
    Contour::Path {
        pieces: vec![
            PathPiece::Line {
                from: p(r_in, theta1),
                to: p(r_out, theta1),
            },
            PathPiece::Arc {
                center: c64::ZERO,
                radius: r_out,
                start: theta1,
                end: theta2,
            },
            PathPiece::Line {
                from: p(r_out, theta2),
                to: p(r_in, theta2),
            },
            PathPiece::Arc {
                center: c64::ZERO,
                radius: r_in,
                start: theta2,
                end: theta1,
            },
        ],
    }
}

/// Boundary of rotation·Γ^δ(r, r0): a trapezoid, counterclockwise.
pub fn gamma_contour(delta: f64, r: f64, r0: f64, rotation: c64) -> Contour {
    let v = [
        c64::new(r, -delta * r),
        c64::new(r0, -delta * r0),
        c64::new(r0, delta * r0),
        c64::new(r, delta * r),
    ];
    Contour::Polyline {
        vertices: v.iter().map(|&x| x * rotation).collect(),
    }
}

/// Boundary of Δ_± = {r < |k| < 2r, Re k > √ν, ±Im k > √ν}.
pub fn delta_annulus_contour(r: f64, nu: f64, half: HalfPlane) -> Result<Contour> {
    let s = nu.sqrt();
    if !(s < r / 2f64.sqrt()) {
        return Err(Error::InvalidParameter(format!(
            "√ν = {s} leaves no room in the annulus of radius {r}"
        )));
    }
    let (a_in, a_out) = ((s / r).asin(), (s / (2.0 * r)).asin());
    let upper = annular_path(
        r,
        2.0 * r,
        (a_in, FRAC_PI_2 - a_in),
        (a_out, FRAC_PI_2 - a_out),
    );
    Ok(match half {
        HalfPlane::Upper => upper,
        HalfPlane::Lower => mirror(&upper),
    })
}

fn annular_path(r_in: f64, r_out: f64, inner: (f64, f64), outer: (f64, f64)) -> Contour {
    let p = |r: f64, t: f64| c64::cis(t) * r;
    Contour::Path {
        pieces: vec![
            PathPiece::Line {
                from: p(r_in, inner.0),
                to: p(r_out, outer.0),
            },
            PathPiece::Arc {
                center: c64::ZERO,
                radius: r_out,
                start: outer.0,
                end: outer.1,
            },
            PathPiece::Line {
                from: p(r_out, outer.1),
                to: p(r_in, inner.1),
            },
            PathPiece::Arc {
                center: c64::ZERO,
                radius: r_in,
                start: inner.1,
                end: inner.0,
            },
        ],
    }
}

/// Complex conjugate of a contour, reversed so it stays counterclockwise.
pub fn mirror(c: &Contour) -> Contour {
    let pieces: Vec<PathPiece> = c
        .pieces()
        .iter()
        .rev()
        .map(|p| match *p {
            PathPiece::Line { from, to } => PathPiece::Line {
                from: to.conj(),
                to: from.conj(),
            },
            PathPiece::Arc {
                center,
                radius,
                start,
                end,
            } => PathPiece::Arc {
                center: center.conj(),
                radius,
                start: -end,
                end: -start,
            },
        })
        .collect();
    Contour::Path { pieces }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_examples() {
        let c = SectorSpec::CDelta {
            delta: 0.5,
            j: 1,
            rotation: c64::ONE,
        };
        assert!(c.contains(c64::new(1.0, 0.0)));
        // −0.5·1 ≤ 0 holds literally
        assert!(c.contains(c64::new(0.0, 1.0)));
        assert!(!c.contains(c64::new(0.0, -1.0)));
        assert!(c.contains(c64::new(0.6, -1.0)));
    }

    #[test]
    fn gamma_example() {
        let g = SectorSpec::Gamma {
            delta: 0.5,
            r: 0.1,
            r0: 0.5,
            rotation: c64::ONE,
        };
        assert!(g.contains(c64::new(0.3, 0.1)));
        assert!(!g.contains(c64::new(0.3, 0.2)));
        assert!(!g.contains(c64::new(0.05, 0.0)));
    }

    #[test]
    fn cone_intervals_cover_quarter() {
        let phi = c64::cis(PI / 4.0);
        let c = SectorSpec::CDelta {
            delta: 0.2,
            j: 1,
            rotation: phi,
        };
        assert_eq!(
            c.cone_intervals(0.0, FRAC_PI_2).unwrap(),
            vec![(0.0, FRAC_PI_2)]
        );
        let phi = c64::cis(3.0 * PI / 4.0);
        let c = SectorSpec::CDelta {
            delta: 0.2,
            j: 1,
            rotation: phi,
        };
        let iv = c.cone_intervals(0.0, FRAC_PI_2).unwrap();
        assert_eq!(iv.len(), 2);
        for t in [0.1, 1.4, PI / 4.0] {
            let k = c64::cis(t) * 0.1;
            let inside = iv.iter().any(|&(a, b)| t > a && t < b);
            assert_eq!(inside, c.contains(k), "{t}");
        }
    }

    #[test]
    fn contours_enclose_members() {
        let ctr = gamma_contour(0.3, 0.1, 0.4, c64::cis(0.7));
        assert!(ctr.contains(c64::cis(0.7) * 0.25));
        let d = delta_annulus_contour(0.1, 1e-4, HalfPlane::Lower).unwrap();
        let s = SectorSpec::Annulus { r: 0.1, nu: 1e-4 };
        let k = c64::new(0.1, -0.1);
        assert!(d.contains(k) && s.contains(k));
        let a = annular_sector(0.01, 0.1, 0.0, FRAC_PI_2);
        assert!(a.contains(c64::new(0.03, 0.03)));
        assert!(!a.contains(c64::new(0.03, -0.03)));
    }
}
