//! Meyer frequency windows.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smooth transition `ν: [0,1] -> [0,1]` with `ν(x) + ν(1-x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionProfile {
    /// `x⁴(35 - 84x + 70x² - 20x³)`.
    #[default]
    Polynomial,
    /// `s(x) / (s(x) + s(1-x))` with `s(x) = exp(-1/x)`; infinitely smooth.
    Exponential,
}

impl TransitionProfile {
    pub fn nu(self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self {
            TransitionProfile::Polynomial => {
                x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
            }
            TransitionProfile::Exponential => {
                let a = (-1.0 / x).exp();
                let b = (-1.0 / (1.0 - x)).exp();
                a / (a + b)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeyerWindow {
    pub profile: TransitionProfile,
}

const TWO_THIRDS_PI: f64 = 2.0 * PI / 3.0;
const FOUR_THIRDS_PI: f64 = 4.0 * PI / 3.0;
const EIGHT_THIRDS_PI: f64 = 8.0 * PI / 3.0;

impl MeyerWindow {
    pub fn new(profile: TransitionProfile) -> Self {
        MeyerWindow { profile }
    }

    /// Scaling window `Ψ⁰`: 1 on `|ξ| <= 2π/3`, 0 beyond `4π/3`.
    pub fn psi0(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= TWO_THIRDS_PI {
            1.0
        } else if a >= FOUR_THIRDS_PI {
            0.0
        } else {
            (0.5 * PI * self.profile.nu(a / TWO_THIRDS_PI - 1.0)).cos()
        }
    }

    /// Wavelet modulus `Ω = (Ψ⁰(ξ/2)² - Ψ⁰(ξ)²)^{1/2}`, supported in `2π/3 <= |ξ| <= 8π/3`.
    pub fn omega(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= TWO_THIRDS_PI || a >= EIGHT_THIRDS_PI {
            0.0
        } else if a <= FOUR_THIRDS_PI {
            (0.5 * PI * self.profile.nu(a / TWO_THIRDS_PI - 1.0)).sin()
        } else {
            (0.5 * PI * self.profile.nu(a / FOUR_THIRDS_PI - 1.0)).cos()
        }
    }

    /// `Ψ¹(ξ) = Ω(ξ) e^{-iξ/2}`.
    pub fn psi1(&self, xi: f64) -> Complex64 {
        Complex64::from_polar(self.omega(xi), -0.5 * xi)
    }

    /// Finest-level closure `(1 - Ψ⁰(ξ)²)^{1/2}` on `|ξ| <= 2π`: the orthogonal complement of
    /// the scaling space inside the full grid.
    pub fn omega_closure(&self, xi: f64) -> f64 {
        let s = self.psi0(xi);
        (1.0 - s * s).max(0.0).sqrt()
    }

    pub fn psi1_closure(&self, xi: f64) -> Complex64 {
        Complex64::from_polar(self.omega_closure(xi), -0.5 * xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_symmetry() {
        for profile in [TransitionProfile::Polynomial, TransitionProfile::Exponential] {
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!((profile.nu(x) + profile.nu(1.0 - x) - 1.0).abs() < 1e-13);
            }
            assert_eq!(profile.nu(-0.5), 0.0);
            assert_eq!(profile.nu(1.5), 1.0);
        }
    }

    #[test]
    fn omega_matches_difference_of_squares() {
        let w = MeyerWindow::default();
        for i in 0..2000 {
            let xi = -10.0 + 20.0 * i as f64 / 1999.0;
            let d = w.psi0(xi / 2.0).powi(2) - w.psi0(xi).powi(2);
            assert!((w.omega(xi).powi(2) - d).abs() < 1e-12, "xi={xi}");
        }
    }
}
