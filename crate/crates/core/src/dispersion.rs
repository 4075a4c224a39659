//! Nearest-neighbour tight-binding dispersion of a lossy CROW.
//!
//! The Bloch-mode complex frequency is
//!
//!   ω̃(k) = ω̃_F [1 − β̃₁ cos(kD)] = ω(k) − iγ(k)
//!
//! with complex single-cavity frequency ω̃_F and complex coupling β̃₁.
//! Frequencies are dimensionless in units of 4πc/D, wavevectors are carried
//! as the phase kD, and times in units of D/(4πc). Group velocities are
//! therefore in units of 4πc.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowParams {
    /// Complex single-cavity frequency, units of 4πc/D.
    pub omega_f: Complex64,
    /// Complex nearest-neighbour coupling (dimensionless).
    pub beta1: Complex64,
    /// CROW period D in meters. Only used for SI conversions.
    pub period_m: f64,
    /// Time unit override in units of D/(4πc). `None` selects the
    /// one-cavity transit time 1/(Re β̃₁ · Re ω̃_F).
    pub tau_def: Option<f64>,
}

impl CrowParams {
    /// Photonic-crystal CROW with FDTD-derived tight-binding constants,
    /// period chosen so that Re ω̃_F sits at 1550 nm.
    pub fn reference() -> Self {
        let omega_f = Complex64::new(0.305, -7.71e-6);
        Self {
            omega_f,
            beta1: Complex64::new(9.87e-3, -1.97e-5),
            period_m: 2.0 * omega_f.re * 1550e-9,
            tau_def: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_f.re > 0.0) || !self.omega_f.re.is_finite() {
            return Err(Error::config("crow.omega_F_re", "must be positive"));
        }
        if !(self.omega_f.im <= 0.0) {
            return Err(Error::config(
                "crow.omega_F_im",
                "must be <= 0 (loss, never gain)",
            ));
        }
        if !(self.beta1.norm() < 0.1) {
            return Err(Error::config(
                "crow.beta1_re",
                "|beta1| must be < 0.1 (weak coupling)",
            ));
        }
        if !(self.period_m > 0.0) || !self.period_m.is_finite() {
            return Err(Error::config("crow.D_um", "period must be positive"));
        }
        if let Some(t) = self.tau_def {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::config("crow.tau_def", "must be positive"));
            }
        }
        Ok(())
    }

    /// Same structure with all loss removed (Im ω̃_F = Im β̃₁ = 0).
    pub fn lossless(&self) -> Self {
        Self {
            omega_f: Complex64::new(self.omega_f.re, 0.0),
            beta1: Complex64::new(self.beta1.re, 0.0),
            ..*self
        }
    }

    /// Time unit τ in units of D/(4πc).
    pub fn tau(&self) -> f64 {
        self.tau_def
            .unwrap_or(1.0 / (self.beta1.re * self.omega_f.re))
    }

    /// Angular frequency unit 4πc/D in rad/s.
    pub fn frequency_unit_si(&self) -> f64 {
        4.0 * PI * SPEED_OF_LIGHT / self.period_m
    }

    /// Real band-centre frequency ω_F in rad/s.
    pub fn omega_f_si(&self) -> f64 {
        self.omega_f.re * self.frequency_unit_si()
    }

    /// Lower and upper band edges of Re ω̃(k), units of 4πc/D.
    pub fn band(&self) -> (f64, f64) {
        let a = complex_frequency_unchecked(self, 0.0).re;
        let b = complex_frequency_unchecked(self, PI).re;
        (a.min(b), a.max(b))
    }
}

fn check_zone(kd: f64) -> Result<()> {
    if !kd.is_finite() || kd.abs() > PI * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "kD = {kd} outside the first Brillouin zone [-pi, pi]"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn complex_frequency_unchecked(params: &CrowParams, kd: f64) -> Complex64 {
    params.omega_f * (1.0 - params.beta1 * kd.cos())
}

/// ω̃(k) = ω̃_F (1 − β̃₁ cos kD).
pub fn complex_frequency(params: &CrowParams, kd: f64) -> Result<Complex64> {
    check_zone(kd)?;
    Ok(complex_frequency_unchecked(params, kd))
}

/// Q_k = ω(k) / 2γ(k). Lossless modes return `f64::INFINITY`.
pub fn quality_factor(params: &CrowParams, kd: f64) -> Result<f64> {
    let w = complex_frequency(params, kd)?;
    let gamma = -w.im;
    if gamma <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(w.re / (2.0 * gamma))
}

/// d Re ω̃ / dk = Re(ω̃_F β̃₁) D sin(kD), units of 4πc.
pub fn group_velocity(params: &CrowParams, kd: f64) -> Result<f64> {
    check_zone(kd)?;
    Ok((params.omega_f * params.beta1).re * kd.sin())
}

/// Invert ω_P = 2ω_F − 2β₁ω_F cos(k₀D) for k₀D ∈ (0, π).
///
/// `omega_p` is in units of 4πc/D. Only the real parts of ω̃_F, β̃₁ enter.
pub fn k0_from_pump(params: &CrowParams, omega_p: f64) -> Result<f64> {
    let wf = params.omega_f.re;
    let b1 = params.beta1.re;
    let c = (2.0 * wf - omega_p) / (2.0 * b1 * wf);
    if !c.is_finite() || c.abs() > 1.0 {
        return Err(Error::OutOfBand(c));
    }
    let kd = c.acos();
    if kd <= 0.0 || kd >= PI {
        return Err(Error::OutOfBand(c));
    }
    Ok(kd)
}

/// Pump frequency (units of 4πc/D) that phase-matches pairs at ±k₀.
pub fn pump_frequency(params: &CrowParams, k0d: f64) -> f64 {
    2.0 * params.omega_f.re * (1.0 - params.beta1.re * k0d.cos())
}

/// One row of the dispersion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSample {
    pub kd_over_pi: f64,
    pub omega_re: f64,
    pub gamma: f64,
    pub q: f64,
    /// Group velocity in units of c.
    pub vg_c: f64,
}

/// Sample the band on `points` equally spaced kD values spanning [0, π].
pub fn scan(params: &CrowParams, points: usize) -> Result<Vec<DispersionSample>> {
    if points < 2 {
        return Err(Error::config("points", "need at least 2 points"));
    }
    (0..points)
        .map(|i| {
            let kd = PI * i as f64 / (points - 1) as f64;
            let w = complex_frequency(params, kd)?;
            Ok(DispersionSample {
                kd_over_pi: kd / PI,
                omega_re: w.re,
                gamma: -w.im,
                q: quality_factor(params, kd)?,
                vg_c: 4.0 * PI * group_velocity(params, kd)?,
            })
        })
        .collect()
}
