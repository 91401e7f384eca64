//! Material parameters and the closed-form Minnaert quantities.

use crate::error::{FprError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Exterior density and bulk modulus, interior factors, and the contrast.
///
/// The interior density and modulus are `rho1 * tau` and `k1 * tau`, so the
/// interior wave speed `c1` does not depend on `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub rho0: f64,
    pub k0: f64,
    pub rho1: f64,
    pub k1: f64,
    pub tau: f64,
}

/// Capacitance, volume and the Minnaert pair derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinnaertData {
    pub capacitance: f64,
    pub volume: f64,
    pub omega_m: f64,
    pub z_plus: Complex64,
    pub z_minus: Complex64,
}

pub fn make_medium(rho0: f64, k0: f64, rho1: f64, k1: f64, tau: f64) -> Result<Medium> {
    for (name, v) in [("rho0", rho0), ("k0", k0), ("rho1", rho1), ("k1", k1), ("tau", tau)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(FprError::InvalidMaterial(format!("{name} = {v} must be positive and finite")));
        }
    }
    if tau > 1.0 {
        return Err(FprError::InvalidMaterial(format!("tau = {tau} exceeds 1")));
    }
    Ok(Medium { rho0, k0, rho1, k1, tau })
}

impl Medium {
    /// All-ones parameters with contrast `tau`.
    pub fn unit(tau: f64) -> Result<Self> {
        make_medium(1.0, 1.0, 1.0, 1.0, tau)
    }

    pub fn validate(&self) -> Result<()> {
        make_medium(self.rho0, self.k0, self.rho1, self.k1, self.tau).map(|_| ())
    }

    pub fn c0(&self) -> f64 {
        (self.k0 / self.rho0).sqrt()
    }

    pub fn c1(&self) -> f64 {
        (self.k1 / self.rho1).sqrt()
    }

    /// Same material with a different contrast.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        make_medium(self.rho0, self.k0, self.rho1, self.k1, tau)
    }

    /// `tau * rho1 / rho0`, the coupling strength of the exterior.
    pub fn coupling(&self) -> f64 {
        self.tau * self.rho1 / self.rho0
    }
}

fn check_geometry(capacitance: f64, volume: f64) -> Result<()> {
    if !(capacitance > 0.0) || !(volume > 0.0) {
        return Err(FprError::InvalidMaterial(format!(
            "capacitance {capacitance} and volume {volume} must be positive"
        )));
    }
    Ok(())
}

/// `omega_M = sqrt(C k1 / (|Omega| rho0)) * sqrt(tau)`.
pub fn minnaert_frequency(m: &Medium, capacitance: f64, volume: f64) -> Result<f64> {
    m.validate()?;
    check_geometry(capacitance, volume)?;
    Ok((capacitance * m.k1 / (volume * m.rho0)).sqrt() * m.tau.sqrt())
}

/// Leading-order Minnaert pair `+-omega_M - i omega_M^2 C / (8 pi c0)`.
pub fn minnaert_pair_asymptotic(m: &Medium, capacitance: f64, volume: f64) -> Result<MinnaertData> {
    let omega_m = minnaert_frequency(m, capacitance, volume)?;
    let im = -omega_m * omega_m * capacitance / (8.0 * PI * m.c0());
    Ok(MinnaertData {
        capacitance,
        volume,
        omega_m,
        z_plus: Complex64::new(omega_m, im),
        z_minus: Complex64::new(-omega_m, im),
    })
}

/// Capacitance and volume of the ball of radius `r`.
pub fn ball_geometry(r: f64) -> (f64, f64) {
    (4.0 * PI * r, 4.0 * PI * r.powi(3) / 3.0)
}
