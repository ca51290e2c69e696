use faer::c64;
use serde::{Deserialize, Serialize};

use crate::axial::branch_sqrt;
use crate::error::{Error, Result};
use crate::model::Threshold;

/// z_{±m}(k) = ±m(1 + k²)/(1 − k²).
pub fn z_of_k(k: c64, mass: f64, threshold: Threshold) -> c64 {
    let k2 = k * k;
    (c64::ONE + k2) / (c64::ONE - k2) * (threshold.sign() * mass)
}

/// Inverse of [`z_of_k`] with Re k > 0: k² = (z ∓ m)/(z ± m).
pub fn k_of_z(z: c64, mass: f64, threshold: Threshold) -> Result<c64> {
    let m = mass;
    let k2 = match threshold {
        Threshold::Upper => (z - m) / (z + m),
        Threshold::Lower => (z + m) / (z - m),
    };
    if !k2.re.is_finite() || !k2.im.is_finite() {
        return Err(Error::BranchCut {
            value: format!("{z}"),
            cut: "z = ∓m",
        });
    }
    let k = branch_sqrt(k2).map_err(|_| Error::BranchCut {
        value: format!("{z}"),
        cut: "essential spectrum ray beyond the threshold",
    })?;
    Ok(if k.re < 0.0 { -k } else { k })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KPoint {
    pub k: c64,
    pub threshold: Threshold,
    pub z: c64,
    pub half_plane: HalfPlane,
}

impl KPoint {
    pub fn new(k: c64, mass: f64, threshold: Threshold) -> Self {
        let half_plane = if k.im >= 0.0 {
            HalfPlane::Upper
        } else {
            HalfPlane::Lower
        };
        Self {
            k,
            threshold,
            z: z_of_k(k, mass, threshold),
            half_plane,
        }
    }

    /// Im z = ±2m Im(k²)/|1 − k²|²; its sign must match the half-disc of k.
    pub fn sign_consistent(&self) -> bool {
        let s = self.threshold.sign() * (self.k * self.k).im;
        s == 0.0 || (s > 0.0) == (self.z.im > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_example() {
        let z = z_of_k(c64::new(0.5, 0.5), 1.0, Threshold::Upper);
        assert!((z - c64::new(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(
            z_of_k(c64::ZERO, 2.0, Threshold::Lower),
            c64::new(-2.0, 0.0)
        );
    }

    #[test]
    fn round_trip() {
        for th in [Threshold::Upper, Threshold::Lower] {
            for k in [
                c64::new(0.1, 0.05),
                c64::new(0.03, -0.2),
                c64::new(0.4, 0.01),
            ] {
                let z = z_of_k(k, 1.3, th);
                let back = k_of_z(z, 1.3, th).unwrap();
                assert!((back - k).norm() < 1e-12, "{k} {back}");
                assert!(KPoint::new(k, 1.3, th).sign_consistent());
            }
        }
    }

    #[test]
    fn ray_is_rejected() {
        assert!(k_of_z(c64::new(1.5, 0.0), 1.0, Threshold::Upper).is_err());
    }
}
