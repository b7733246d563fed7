//! Symmetric 2x2 tensors for conductivity and dispersion in the x-z plane.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tensor2 {
    pub xx: f64,
    pub xz: f64,
    pub zz: f64,
}

impl Tensor2 {
    pub fn diag(xx: f64, zz: f64) -> Self {
        Tensor2 { xx, xz: 0.0, zz }
    }

    pub fn isotropic(v: f64) -> Self {
        Tensor2::diag(v, v)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.zz
    }

    pub fn det(&self) -> f64 {
        self.xx * self.zz - self.xz * self.xz
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half = 0.5 * (self.xx - self.zz);
        let r = (half * half + self.xz * self.xz).sqrt();
        let m = 0.5 * self.trace();
        (m + r, m - r)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xz * v[1], self.xz * v[0] + self.zz * v[1]]
    }

    pub fn scale(&self, s: f64) -> Self {
        Tensor2 {
            xx: self.xx * s,
            xz: self.xz * s,
            zz: self.zz * s,
        }
    }
}

/// `R^T diag(k_x, k_z) R` with `R = [[cos, sin], [-sin, cos]]` and the angle in degrees.
pub fn rotate_tensor(k_x: f64, k_z: f64, theta_deg: f64) -> Tensor2 {
    let (s, c) = theta_deg.to_radians().sin_cos();
    Tensor2 {
        xx: c * c * k_x + s * s * k_z,
        xz: (k_x - k_z) * s * c,
        zz: s * s * k_x + c * c * k_z,
    }
}

/// Porosity-weighted dispersion tensor
/// `phi D = (a_L - a_T) q q^T / |q| + a_T |q| I + phi D_m I`.
pub fn dispersion_tensor(q: [f64; 2], phi: f64, alpha_l: f64, alpha_t: f64, d_m: f64) -> Tensor2 {
    let norm = q[0].hypot(q[1]);
    let base = alpha_t * norm + phi * d_m;
    if norm == 0.0 {
        return Tensor2::isotropic(base);
    }
    let a = (alpha_l - alpha_t) / norm;
    Tensor2 {
        xx: a * q[0] * q[0] + base,
        xz: a * q[0] * q[1],
        zz: a * q[1] * q[1] + base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rotation_examples() {
        let t = rotate_tensor(1.0, 0.1, 0.0);
        assert_eq!(t, Tensor2::diag(1.0, 0.1));
        let t = rotate_tensor(1.0, 0.1, 90.0);
        assert_relative_eq!(t.xx, 0.1, epsilon = 1e-15);
        assert_relative_eq!(t.zz, 1.0, epsilon = 1e-15);
        assert!(t.xz.abs() < 1e-15);
        let t = rotate_tensor(1.0, 0.1, 30.0);
        assert_relative_eq!(t.xx, 0.775, epsilon = 1e-15);
    }

    #[test]
    fn dispersion_examples() {
        let d = dispersion_tensor([0.0, 0.0], 0.2, 15.0, 1.5, 2.3e-9);
        assert_eq!(d, Tensor2::isotropic(0.2 * 2.3e-9));
        let d = dispersion_tensor([2.0, 0.0], 0.2, 15.0, 1.5, 0.0);
        assert_relative_eq!(d.xx, 30.0);
        assert_relative_eq!(d.zz, 3.0);
        assert_eq!(d.xz, 0.0);
    }

    proptest! {
        #[test]
        fn rotation_preserves_spectrum(kx in 1e-12f64..1e-3, ratio in 0.01f64..1.0, theta in -90.0f64..90.0) {
            let kz = kx * ratio;
            let t = rotate_tensor(kx, kz, theta);
            let (l1, l2) = t.eigenvalues();
            prop_assert!((l1 - kx).abs() <= 1e-12 * kx);
            prop_assert!((l2 - kz).abs() <= 1e-10 * kx);
            prop_assert!((t.det() - kx * kz).abs() <= 1e-12 * kx * kx);
        }

        #[test]
        fn dispersion_eigenvalues(qx in -1e-6f64..1e-6, qz in -1e-6f64..1e-6, phi in 0.01f64..0.3,
                                  al in 5.0f64..25.0, ratio in 0.01f64..1.0) {
            let at = al * ratio;
            let dm = 2.3e-9;
            let t = dispersion_tensor([qx, qz], phi, al, at, dm);
            let n = qx.hypot(qz);
            // Eigenvalues of phi D: a_L |q| + phi D_m along q, a_T |q| + phi D_m across it.
            let (l1, l2) = t.eigenvalues();
            let scale = al * n + phi * dm;
            prop_assert!((l1 - (al * n + phi * dm)).abs() <= 1e-9 * scale);
            prop_assert!((l2 - (at * n + phi * dm)).abs() <= 1e-9 * scale);
            // Along the flux the tensor acts as a pure stretch.
            if n > 0.0 {
                let v = t.apply([qx, qz]);
                prop_assert!((v[0] - l1 * qx).abs() <= 1e-9 * scale * n);
                prop_assert!((v[1] - l1 * qz).abs() <= 1e-9 * scale * n);
            }
        }
    }
}
