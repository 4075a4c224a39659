//! Numerical Schmidt decomposition of the biphoton amplitude.
//!
//! On the midpoint grid Φ_ij = Σ_λ √p_λ μ_λ(k₁ᵢ) ν_λ(k₂ⱼ). With the SVD
//! Φ = U diag(d) Vᴴ and the dk-weighted normalization Σ|Φ|²dk² = 1 this gives
//! p_λ = d_λ² dk², μ_λ = U[:,λ]/√dk and ν_λ = V̄[:,λ]/√dk, so that
//! Σ_i μ_λ μ*_λ' dk = δ_λλ'. Each Schmidt pair is an independent two-mode
//! squeezer with r_λ = β√p_λ.

use ndarray::Array2;
use num_complex::Complex64;

use crate::biphoton::BiphotonMatrix;
use crate::error::{Error, Result};
use crate::svd::svd;

/// Default truncation: drop modes with √(p_λ/p₁) below this.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Schmidt weights, nonincreasing, all positive.
    pub p: Vec<f64>,
    /// Column λ holds μ_λ sampled on the k₁ grid.
    pub mu: Array2<Complex64>,
    /// Column λ holds ν_λ sampled on the k₂ grid.
    pub nu: Array2<Complex64>,
    /// Squeezing parameters r_λ = β√p_λ.
    pub r: Vec<f64>,
    pub dk: f64,
    pub trunc_tol: f64,
    /// Σp_λ over all modes returned by the SVD, before truncation.
    pub total_weight: f64,
}

impl SchmidtDecomposition {
    pub fn n_modes(&self) -> usize {
        self.p.len()
    }

    /// Schmidt number K = 1/Σp².
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.p.iter().map(|p| p * p).sum::<f64>()
    }

    /// Σ_λ sinh²(r_λ): mean photon number in each arm.
    pub fn photons_per_arm(&self) -> f64 {
        self.r.iter().map(|r| r.sinh().powi(2)).sum()
    }

    /// Keep only the listed modes (in the given order).
    pub fn select(&self, modes: &[usize]) -> Self {
        let pick = |m: &Array2<Complex64>| {
            Array2::from_shape_fn((m.nrows(), modes.len()), |(i, l)| m[[i, modes[l]]])
        };
        Self {
            p: modes.iter().map(|&l| self.p[l]).collect(),
            mu: pick(&self.mu),
            nu: pick(&self.nu),
            r: modes.iter().map(|&l| self.r[l]).collect(),
            ..self.clone()
        }
    }

    /// Same modes with squeezing rescaled to a new β.
    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            r: self.p.iter().map(|p| beta * p.sqrt()).collect(),
            ..self.clone()
        }
    }
}

pub fn schmidt_decompose(phi: &BiphotonMatrix, beta: f64) -> Result<SchmidtDecomposition> {
    schmidt_decompose_with(phi, beta, DEFAULT_TRUNC_TOL)
}

pub fn schmidt_decompose_with(
    phi: &BiphotonMatrix,
    beta: f64,
    trunc_tol: f64,
) -> Result<SchmidtDecomposition> {
    let norm = phi.norm_sq();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Contract(format!(
            "biphoton matrix is not normalized: sum |phi|^2 dk^2 = {norm}"
        )));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta = {beta} must be non-negative")));
    }
    let dk = phi.grid.dk;
    let s = svd(&phi.values)?;
    let p_all: Vec<f64> = s.d.iter().map(|d| d * d * dk * dk).collect();
    let total_weight = p_all.iter().sum();
    let d1 = s.d.first().copied().unwrap_or(0.0);
    let keep = s.d.iter().take_while(|&&d| d >= trunc_tol * d1 && d > 0.0).count();

    let inv = 1.0 / dk.sqrt();
    let (m, n) = (s.u.nrows(), s.v.nrows());
    let mu = Array2::from_shape_fn((m, keep), |(i, l)| s.u[[i, l]] * inv);
    let nu = Array2::from_shape_fn((n, keep), |(j, l)| s.v[[j, l]].conj() * inv);
    let p: Vec<f64> = p_all[..keep].to_vec();
    let r = p.iter().map(|p| beta * p.sqrt()).collect();
    Ok(SchmidtDecomposition {
        p,
        mu,
        nu,
        r,
        dk,
        trunc_tol,
        total_weight,
    })
}

/// Σ_λ √p_λ μ_λ(k₁ᵢ) ν_λ(k₂ⱼ) on the grid.
pub fn reconstruct(dec: &SchmidtDecomposition) -> Array2<Complex64> {
    let (m, n) = (dec.mu.nrows(), dec.nu.nrows());
    let mut out = Array2::zeros((m, n));
    for (l, p) in dec.p.iter().enumerate() {
        let w = p.sqrt();
        for i in 0..m {
            let a = dec.mu[[i, l]] * w;
            for j in 0..n {
                out[[i, j]] += a * dec.nu[[j, l]];
            }
        }
    }
    out
}
