//! Discretized biphoton wave function of counterpropagating pairs.
//!
//! For a pump that is Gaussian in time and space the joint amplitude on the
//! (k₁ > 0, k₂ < 0) quadrant is
//!
//!   Φ(k₁,k₂) = Q₀ exp(−(k₁+k₂)²/2ℰ₊²) exp(−(cos k₁D + cos k₂D − 2cos k₀D)²/2ℰ₋²)
//!
//! with ℰ₊ = σ₊ and ℰ₋ = σ₋ D sin(k₀D). The matrix stored here is always
//! unit-normalized, Σ|Φ|²dk² = 1; the physical strength lives in β.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{CrowParams, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Optional physical pump data for photon-count and energy estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPump {
    /// Pump vacuum wavelength, meters.
    pub lambda_p_m: f64,
    /// Bulk second-order susceptibility χ₂, m/V.
    pub chi2_m_per_v: f64,
    /// Refractive index at the generated frequency.
    pub n_index: f64,
}

impl PhysicalPump {
    /// Al₀.₃₅Ga₀.₆₅As pumped at 775 nm.
    pub fn algaas_775nm() -> Self {
        Self {
            lambda_p_m: 775e-9,
            chi2_m_per_v: 100e-12,
            n_index: 3.4,
        }
    }

    /// Effective susceptibility χ̄₂ = χ₂ / n².
    pub fn chi2_eff(&self) -> f64 {
        self.chi2_m_per_v / (self.n_index * self.n_index)
    }

    pub fn omega_p_si(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_p_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// Phase-matched Bloch phase k₀D, in (0, π).
    pub k0d: f64,
    pub sigma_plus_d: f64,
    pub sigma_minus_d: f64,
    /// Global squeezing strength β (r_λ = β√p_λ).
    pub beta: f64,
    pub physical: Option<PhysicalPump>,
}

impl PumpConfig {
    pub fn new(k0d: f64, sigma_plus_d: f64, sigma_minus_d: f64, beta: f64) -> Self {
        Self {
            k0d,
            sigma_plus_d,
            sigma_minus_d,
            beta,
            physical: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_plus_d > 0.0) || !self.sigma_plus_d.is_finite() {
            return Err(Error::config("pump.sigma_plus_D", "must be positive"));
        }
        if !(self.sigma_minus_d > 0.0) || !self.sigma_minus_d.is_finite() {
            return Err(Error::config("pump.sigma_minus_D", "must be positive"));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::config("pump.beta", "must be positive"));
        }
        if !(self.k0d > 0.0 && self.k0d < PI) {
            return Err(Error::config("pump.k0D_over_pi", "k0 D must lie in (0, pi)"));
        }
        if let Some(ph) = &self.physical {
            for (key, v) in [
                ("pump.lambda_P_nm", ph.lambda_p_m),
                ("physical.chi2_pm_per_V", ph.chi2_m_per_v),
                ("physical.n_index", ph.n_index),
            ] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::config(key, "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Width ℰ₊ of the (k₁+k₂) Gaussian, units of 1/D.
    pub fn e_plus(&self) -> f64 {
        self.sigma_plus_d
    }

    /// Width ℰ₋ of the energy-matching Gaussian (dimensionless).
    pub fn e_minus(&self) -> f64 {
        self.sigma_minus_d * self.k0d.sin()
    }

    /// Q₀ = √(2/(π σ₋ σ₊)), units of D.
    pub fn q0(&self) -> f64 {
        (2.0 / (PI * self.sigma_minus_d * self.sigma_plus_d)).sqrt()
    }
}

/// Midpoint grid over the two half-zones: k₁ ∈ (0, π/D), k₂ ∈ (−π/D, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    pub n_half: usize,
    /// Spacing dk·D = π/n_half.
    pub dk: f64,
    /// k₁D samples, all positive.
    pub k1: Vec<f64>,
    /// k₂D samples, all negative; k2[j] = −k1[j].
    pub k2: Vec<f64>,
}

pub fn build_grid(n_half: usize) -> Result<KGrid> {
    if n_half < 2 {
        return Err(Error::config("grid.n_half", "need at least 2 points per half-zone"));
    }
    let dk = PI / n_half as f64;
    let k1: Vec<f64> = (0..n_half).map(|i| (i as f64 + 0.5) * dk).collect();
    let k2 = k1.iter().map(|k| -k).collect();
    Ok(KGrid { n_half, dk, k1, k2 })
}

#[derive(Debug, Clone)]
pub struct BiphotonMatrix {
    pub grid: KGrid,
    /// Φ(k1[i], k2[j]), unit-normalized.
    pub values: Array2<Complex64>,
    /// Analytic Q₀ = √(2/(π σ₋ σ₊)) in units of D, before normalization.
    pub q0_raw: f64,
}

impl BiphotonMatrix {
    /// Σ|Φ|² dk².
    pub fn norm_sq(&self) -> f64 {
        let dk2 = self.grid.dk * self.grid.dk;
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dk2
    }

    /// Scale so that Σ|Φ|² dk² = 1. Returns the factor applied.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sq();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numeric(format!("cannot normalize biphoton with norm {n}")));
        }
        let s = 1.0 / n.sqrt();
        self.values.mapv_inplace(|v| v * s);
        Ok(s)
    }
}

/// Pump widths: W_S (spot size) and W_T (temporal width parameter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpWidths {
    pub w_s_m: f64,
    pub w_t_s: f64,
}

const FWHM_PER_WIDTH: f64 = 1.177_410_022_515_474_6; // √(2 ln 2)

impl PumpWidths {
    /// Intensity FWHM of a field amplitude ∝ exp(−x²/W_S²).
    pub fn spatial_fwhm_m(&self) -> f64 {
        FWHM_PER_WIDTH * self.w_s_m
    }

    pub fn temporal_fwhm_s(&self) -> f64 {
        FWHM_PER_WIDTH * self.w_t_s
    }
}

/// W_S = √2/σ₊ and W_T = √2/(β₁ ω_F ℰ₋) with ω_F in rad/s.
pub fn widths_from_sigma(params: &CrowParams, pump: &PumpConfig) -> Result<PumpWidths> {
    let s = pump.k0d.sin();
    if !(pump.k0d > 0.0 && pump.k0d < PI) || s.abs() < 1e-12 {
        return Err(Error::Domain(format!(
            "k0 D = {} at the band edge, widths are undefined",
            pump.k0d
        )));
    }
    let sigma_plus = pump.sigma_plus_d / params.period_m;
    let w_s_m = 2f64.sqrt() / sigma_plus;
    let w_t_s = 2f64.sqrt() / (params.beta1.re * params.omega_f_si() * pump.e_minus());
    Ok(PumpWidths { w_s_m, w_t_s })
}

/// Unnormalized Φ at (k₁D, k₂D) with the full cosine dispersion.
pub fn full_amplitude(pump: &PumpConfig, k1d: f64, k2d: f64) -> f64 {
    gaussian_kernel(pump, k1d + k2d, k1d.cos() + k2d.cos())
}

/// Unnormalized Φ with each cosine expanded to first order about its own
/// ±k₀: cos k₁D ≈ cos k₀D − (k₁−k₀)D sin k₀D, cos k₂D ≈ cos k₀D + (k₂+k₀)D sin k₀D.
pub fn linearized_amplitude(pump: &PumpConfig, k1d: f64, k2d: f64) -> f64 {
    let (k0, c, s) = (pump.k0d, pump.k0d.cos(), pump.k0d.sin());
    gaussian_kernel(pump, k1d + k2d, (c - (k1d - k0) * s) + (c + (k2d + k0) * s))
}

#[inline]
fn gaussian_kernel(pump: &PumpConfig, k_sum: f64, cos_sum: f64) -> f64 {
    let ep = pump.e_plus();
    let em = pump.e_minus();
    let e = cos_sum - 2.0 * pump.k0d.cos();
    (-k_sum * k_sum / (2.0 * ep * ep) - e * e / (2.0 * em * em)).exp()
}

fn fill(
    grid: &KGrid,
    pump: &PumpConfig,
    amplitude: impl Fn(&PumpConfig, f64, f64) -> f64,
) -> Result<BiphotonMatrix> {
    pump.validate()?;
    let n = grid.n_half;
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        Complex64::new(amplitude(pump, grid.k1[i], grid.k2[j]), 0.0)
    });
    let mut m = BiphotonMatrix {
        grid: grid.clone(),
        values,
        q0_raw: pump.q0(),
    };
    m.normalize()?;
    Ok(m)
}

/// Φ with the full cosine dispersion, unit-normalized on the grid.
pub fn biphoton_full(grid: &KGrid, pump: &PumpConfig) -> Result<BiphotonMatrix> {
    fill(grid, pump, full_amplitude)
}

/// Φ with linearized cosines, unit-normalized on the grid.
pub fn biphoton_linearized(grid: &KGrid, pump: &PumpConfig) -> Result<BiphotonMatrix> {
    fill(grid, pump, linearized_amplitude)
}

/// Pump photon number and pulse energy needed for the configured β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpEnergy {
    pub alpha_sq: f64,
    pub pulse_energy_j: f64,
}

/// Invert Q₀ = (iαχ̄₂/βc) √(ħ ω_F² ω_P (cW_T) / (ε₀ (2π)^{3/2})) for |α|².
pub fn pump_photon_number(params: &CrowParams, pump: &PumpConfig) -> Result<PumpEnergy> {
    let phys = pump
        .physical
        .ok_or_else(|| Error::config("physical", "physical pump parameters are required"))?;
    let widths = widths_from_sigma(params, pump)?;
    let c = SPEED_OF_LIGHT;
    let d = params.period_m;
    let sigma_plus = pump.sigma_plus_d / d;
    let sigma_minus = pump.sigma_minus_d / d;
    let q0_sq = 2.0 / (PI * sigma_minus * sigma_plus);
    let chi = phys.chi2_eff();
    let wf = params.omega_f_si();
    let wp = phys.omega_p_si();
    let w_t_len = c * widths.w_t_s;
    let alpha_sq = q0_sq * pump.beta * pump.beta * c * c * EPSILON_0 * (2.0 * PI).powf(1.5)
        / (chi * chi * HBAR * wf * wf * wp * w_t_len);
    Ok(PumpEnergy {
        alpha_sq,
        pulse_energy_j: alpha_sq * HBAR * wp,
    })
}
