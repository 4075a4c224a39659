//! Lossy propagation of Bloch-mode correlators to cavity observables.
//!
//! With b_k(t) = b_k e^{−iω̃_k t} and a_p = √(D/2π) ∫ b_k e^{ikpD} dk, every
//! cavity moment is a bilinear form of a Bloch-mode correlator with the
//! phase vector u_p(k, t) = e^{ikpD} e^{−iω̃_k t}:
//!
//!   ⟨a_p† a_p⟩ = (dk²/2π) Σ ū_p N u_p          (both half-zones)
//!   ⟨a_p a_p'⟩ = (dk²/2π) [u_p₊ᵀ M u_p'₋ + u_p'₊ᵀ M u_p₋]
//!
//! where N₊ = Σ_λ μ̄_λ μ_λᵀ sinh²r_λ, N₋ likewise with ν, and
//! M = s Σ_λ μ_λ ν_λᵀ cosh r_λ sinh r_λ. The cross (+,−) normal block
//! vanishes identically. The sign s of the anomalous block is fixed by the
//! Fock-space oracle.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biphoton::{biphoton_full, biphoton_linearized, build_grid, KGrid, PumpConfig};
use crate::dispersion::{complex_frequency_unchecked, CrowParams};
use crate::error::{Error, Result};
use crate::schmidt::{schmidt_decompose, SchmidtDecomposition};

/// Overall sign s of ⟨b_{k,+} b_{k',−}⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnomalousSign {
    Plus,
    Minus,
}

impl AnomalousSign {
    pub fn value(self) -> f64 {
        match self {
            AnomalousSign::Plus => 1.0,
            AnomalousSign::Minus => -1.0,
        }
    }
}

/// N₊(k,k') = Σ_λ μ*_λ(k) μ_λ(k') sinh²r_λ and N₋ likewise with ν.
pub fn normal_correlator(dec: &SchmidtDecomposition) -> (Array2<Complex64>, Array2<Complex64>) {
    let s2: Vec<f64> = dec.r.iter().map(|r| r.sinh().powi(2)).collect();
    let build = |x: &Array2<Complex64>| {
        let n = x.nrows();
        let mut out = Array2::zeros((n, n));
        for (l, &w) in s2.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = x[[i, l]].conj() * w;
                for j in 0..n {
                    out[[i, j]] += a * x[[j, l]];
                }
            }
        }
        out
    };
    (build(&dec.mu), build(&dec.nu))
}

/// M(k,k') = s Σ_λ μ_λ(k) ν_λ(k') cosh r_λ sinh r_λ.
pub fn anomalous_correlator(dec: &SchmidtDecomposition, sign: AnomalousSign) -> Array2<Complex64> {
    let (m, n) = (dec.mu.nrows(), dec.nu.nrows());
    let mut out = Array2::zeros((m, n));
    for (l, &r) in dec.r.iter().enumerate() {
        let w = sign.value() * r.cosh() * r.sinh();
        if w == 0.0 {
            continue;
        }
        for i in 0..m {
            let a = dec.mu[[i, l]] * w;
            for j in 0..n {
                out[[i, j]] += a * dec.nu[[j, l]];
            }
        }
    }
    out
}

/// Bloch-mode correlators at t = 0.
#[derive(Debug, Clone)]
pub struct CorrelatorSet {
    pub n_plus: Array2<Complex64>,
    pub n_minus: Array2<Complex64>,
    pub m: Array2<Complex64>,
    pub dk: f64,
    pub grid: KGrid,
    pub sign: AnomalousSign,
}

impl CorrelatorSet {
    pub fn assemble(dec: &SchmidtDecomposition, sign: AnomalousSign) -> Result<Self> {
        let grid = build_grid(dec.mu.nrows())?;
        if (grid.dk - dec.dk).abs() > 1e-15 * dec.dk {
            return Err(Error::Contract("decomposition does not live on a midpoint half-grid".into()));
        }
        let (n_plus, n_minus) = normal_correlator(dec);
        Ok(Self {
            n_plus,
            n_minus,
            m: anomalous_correlator(dec, sign),
            dk: dec.dk,
            grid,
            sign,
        })
    }

    /// Σ_λ sinh²r_λ recovered from trace(N₊)·dk.
    pub fn signal_photons(&self) -> f64 {
        self.n_plus.diag().iter().map(|z| z.re).sum::<f64>() * self.dk
    }

    pub fn idler_photons(&self) -> f64 {
        self.n_minus.diag().iter().map(|z| z.re).sum::<f64>() * self.dk
    }

    /// Total photons in the CROW at time t (τ units), dk Σ_k N(k,k) e^{−2γ_k t}.
    pub fn total_photons(&self, params: &CrowParams, t_tau: f64) -> Result<f64> {
        let t = internal_time(params, t_tau)?;
        let sum = |n: &Array2<Complex64>, ks: &[f64]| -> f64 {
            ks.iter()
                .enumerate()
                .map(|(i, &k)| {
                    let g = -complex_frequency_unchecked(params, k).im;
                    n[[i, i]].re * (-2.0 * g * t).exp()
                })
                .sum()
        };
        Ok((sum(&self.n_plus, &self.grid.k1) + sum(&self.n_minus, &self.grid.k2)) * self.dk)
    }
}

fn internal_time(params: &CrowParams, t_tau: f64) -> Result<f64> {
    if !(t_tau >= 0.0) || !t_tau.is_finite() {
        return Err(Error::Domain(format!("time t = {t_tau} must be >= 0")));
    }
    Ok(t_tau * params.tau())
}

/// Propagation phases e^{−iω̃_k t} on both half-grids at one time.
struct Propagator {
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
}

impl Propagator {
    fn new(corr: &CorrelatorSet, params: &CrowParams, t: f64) -> Self {
        let f = |k: &f64| (Complex64::new(0.0, -t) * complex_frequency_unchecked(params, *k)).exp();
        Self {
            plus: corr.grid.k1.iter().map(f).collect(),
            minus: corr.grid.k2.iter().map(f).collect(),
        }
    }

    /// (u₊, u₋) for cavity p.
    fn cavity(&self, grid: &KGrid, p: i64) -> (Vec<Complex64>, Vec<Complex64>) {
        let ph = |k: f64, e: &Complex64| Complex64::from_polar(1.0, k * p as f64) * e;
        (
            grid.k1.iter().zip(&self.plus).map(|(&k, e)| ph(k, e)).collect(),
            grid.k2.iter().zip(&self.minus).map(|(&k, e)| ph(k, e)).collect(),
        )
    }
}

/// xᴴ A y, or xᵀ A y when `conj_left` is false.
fn bilinear(x: &[Complex64], a: &Array2<Complex64>, y: &[Complex64], conj_left: bool) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, row) in a.outer_iter().enumerate() {
        let row = row.as_slice().expect("row-major correlator");
        let mut s = Complex64::new(0.0, 0.0);
        for (aij, yj) in row.iter().zip(y) {
            s += aij * yj;
        }
        acc += if conj_left { x[i].conj() } else { x[i] } * s;
    }
    acc
}

/// Cavity moments at a single time for the pair (p, p').
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySample {
    pub n_p: f64,
    pub n_p_prime: f64,
    /// ⟨a_p a_p'⟩
    pub pair: Complex64,
}

impl CavitySample {
    /// Δ²(θ) = 4 + 4(n_p + n_p' − 2 Re(e^{iθ} A)).
    pub fn variance(&self, theta: f64) -> f64 {
        4.0 + 4.0 * (self.n_p + self.n_p_prime - 2.0 * (Complex64::from_polar(1.0, theta) * self.pair).re)
    }

    /// Minimum of Δ²(θ) over the optical phase.
    pub fn envelope(&self) -> f64 {
        4.0 + 4.0 * (self.n_p + self.n_p_prime - 2.0 * self.pair.norm())
    }
}

fn photon_number_at(corr: &CorrelatorSet, up: &[Complex64], um: &[Complex64]) -> Result<f64> {
    let scale = corr.dk * corr.dk / (2.0 * PI);
    let z = (bilinear(up, &corr.n_plus, up, true) + bilinear(um, &corr.n_minus, um, true)) * scale;
    if z.im.abs() > 1e-9 * z.re.abs() + 1e-13 {
        return Err(Error::Numeric(format!(
            "photon number has imaginary residue {:e} (real part {:e})",
            z.im, z.re
        )));
    }
    Ok(z.re)
}

fn pair_at(
    corr: &CorrelatorSet,
    (up, um): (&[Complex64], &[Complex64]),
    (vp, vm): (&[Complex64], &[Complex64]),
) -> Complex64 {
    let scale = corr.dk * corr.dk / (2.0 * PI);
    (bilinear(up, &corr.m, vm, false) + bilinear(vp, &corr.m, um, false)) * scale
}

/// n_p(t) = ⟨a_p†(t) a_p(t)⟩ with t in units of τ.
pub fn photon_number(corr: &CorrelatorSet, params: &CrowParams, p: i64, t_tau: f64) -> Result<f64> {
    let prop = Propagator::new(corr, params, internal_time(params, t_tau)?);
    let (up, um) = prop.cavity(&corr.grid, p);
    photon_number_at(corr, &up, &um)
}

/// A(t) = ⟨a_p(t) a_p'(t)⟩.
pub fn pair_correlator(
    corr: &CorrelatorSet,
    params: &CrowParams,
    p: i64,
    p_prime: i64,
    t_tau: f64,
) -> Result<Complex64> {
    let prop = Propagator::new(corr, params, internal_time(params, t_tau)?);
    let (up, um) = prop.cavity(&corr.grid, p);
    let (vp, vm) = prop.cavity(&corr.grid, p_prime);
    Ok(pair_at(corr, (&up, &um), (&vp, &vm)))
}

/// All moments needed for the Duan sum of cavities (p, p') at time t.
pub fn cavity_sample(
    corr: &CorrelatorSet,
    params: &CrowParams,
    p: i64,
    p_prime: i64,
    t_tau: f64,
) -> Result<CavitySample> {
    let prop = Propagator::new(corr, params, internal_time(params, t_tau)?);
    let (up, um) = prop.cavity(&corr.grid, p);
    let (vp, vm) = prop.cavity(&corr.grid, p_prime);
    Ok(CavitySample {
        n_p: photon_number_at(corr, &up, &um)?,
        n_p_prime: photon_number_at(corr, &vp, &vm)?,
        pair: pair_at(corr, (&up, &um), (&vp, &vm)),
    })
}

/// Duan sum Δ² = ⟨[Δ(X_p − X_p')]²⟩ + ⟨[Δ(Y_p + Y_p')]²⟩.
pub fn correlation_variance(
    corr: &CorrelatorSet,
    params: &CrowParams,
    p: i64,
    p_prime: i64,
    t_tau: f64,
) -> Result<f64> {
    correlation_variance_theta(corr, params, p, p_prime, t_tau, 0.0)
}

/// Δ² for quadratures rotated by θ.
pub fn correlation_variance_theta(
    corr: &CorrelatorSet,
    params: &CrowParams,
    p: i64,
    p_prime: i64,
    t_tau: f64,
    theta: f64,
) -> Result<f64> {
    Ok(cavity_sample(corr, params, p, p_prime, t_tau)?.variance(theta))
}

/// Lower envelope of Δ²(t): 4 + 4(n_p + n_p' − 2|A|).
pub fn variance_envelope(
    corr: &CorrelatorSet,
    params: &CrowParams,
    p: i64,
    p_prime: i64,
    t_tau: f64,
) -> Result<f64> {
    Ok(cavity_sample(corr, params, p, p_prime, t_tau)?.envelope())
}

/// Σ_p n_p(t) over the 2·n_half cavities of the grid's periodic supercell.
/// Equals the total photon number in the CROW.
pub fn supercell_photon_sum(corr: &CorrelatorSet, params: &CrowParams, t_tau: f64) -> Result<f64> {
    let prop = Propagator::new(corr, params, internal_time(params, t_tau)?);
    let n = corr.grid.n_half as i64;
    let parts = (-n..n)
        .into_par_iter()
        .map(|p| {
            let (up, um) = prop.cavity(&corr.grid, p);
            photon_number_at(corr, &up, &um)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

/// Uniform time samples in units of τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max_tau: f64,
    pub n_steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max_tau: 80.0,
            n_steps: 2048,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max_tau > 0.0) || !self.t_max_tau.is_finite() {
            return Err(Error::config("time.t_max_tau", "must be positive"));
        }
        if self.n_steps < 3 {
            return Err(Error::config("time.n_steps", "need at least 3 samples"));
        }
        Ok(())
    }

    pub fn samples(&self) -> Vec<f64> {
        let n = self.n_steps;
        (0..n)
            .map(|i| self.t_max_tau * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub p: i64,
    pub p_prime: i64,
    pub k0d: f64,
    pub sigma_plus_d: f64,
    pub sigma_minus_d: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Sample times in units of τ, strictly increasing.
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
}

/// Cavity moments sampled on a time grid.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub t: Vec<f64>,
    pub samples: Vec<CavitySample>,
    pub meta: SeriesMeta,
}

impl Evolution {
    fn series(&self, f: impl Fn(&CavitySample) -> f64) -> TimeSeries {
        TimeSeries {
            t: self.t.clone(),
            values: self.samples.iter().map(f).collect(),
            meta: self.meta,
        }
    }

    pub fn photon_series(&self) -> TimeSeries {
        self.series(|s| s.n_p)
    }

    pub fn photon_series_prime(&self) -> TimeSeries {
        self.series(|s| s.n_p_prime)
    }

    pub fn envelope_series(&self) -> TimeSeries {
        self.series(CavitySample::envelope)
    }

    pub fn variance_series(&self, theta: f64) -> TimeSeries {
        self.series(|s| s.variance(theta))
    }

    pub fn pair_magnitude_series(&self) -> TimeSeries {
        self.series(|s| s.pair.norm())
    }

    pub fn metrics(&self) -> Result<EntanglementMetrics> {
        metrics(&self.photon_series(), &self.envelope_series())
    }
}

/// Evaluate cavity moments at every sample time. Samples are independent,
/// so the result does not depend on scheduling.
pub fn evolve(
    corr: &CorrelatorSet,
    params: &CrowParams,
    meta: SeriesMeta,
    times: &[f64],
) -> Result<Evolution> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("sample times must be strictly increasing".into()));
    }
    let samples = times
        .par_iter()
        .map(|&t| cavity_sample(corr, params, meta.p, meta.p_prime, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evolution {
        t: times.to_vec(),
        samples,
        meta,
    })
}

/// Summary numbers of one photon-number / envelope pair of series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementMetrics {
    pub n_max: f64,
    pub fwhm_tau: f64,
    /// 4 − min(envelope).
    pub dev: f64,
    /// Arrival time of the photon-number peak (parabolic refinement).
    pub t_peak: f64,
}

pub fn metrics(n_series: &TimeSeries, env_series: &TimeSeries) -> Result<EntanglementMetrics> {
    let (t, y) = (&n_series.t, &n_series.values);
    if y.len() < 3 || y.len() != t.len() {
        return Err(Error::NoPeak("need at least 3 samples".into()));
    }
    if env_series.values.is_empty() || env_series.meta != n_series.meta {
        return Err(Error::Contract("envelope series does not match photon series".into()));
    }
    let (imax, n_max) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let n_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(n_max > n_min) {
        return Err(Error::NoPeak("series is flat".into()));
    }
    let half = n_max / 2.0;
    let cross = |i: usize, j: usize| t[i] + (half - y[i]) * (t[j] - t[i]) / (y[j] - y[i]);
    let left = (0..imax)
        .rev()
        .find(|&i| y[i] < half)
        .map(|i| cross(i, i + 1))
        .ok_or_else(|| Error::NoPeak("half maximum not reached before the peak".into()))?;
    let right = (imax + 1..y.len())
        .find(|&i| y[i] < half)
        .map(|i| cross(i - 1, i))
        .ok_or_else(|| Error::NoPeak("half maximum not reached after the peak".into()))?;

    let t_peak = if imax > 0 && imax + 1 < y.len() {
        let (a, b, c) = (y[imax - 1], y[imax], y[imax + 1]);
        let denom = a - 2.0 * b + c;
        let off = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        t[imax] + off * (t[imax + 1] - t[imax - 1]) / 2.0
    } else {
        t[imax]
    };
    let env_min = env_series.values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EntanglementMetrics {
        n_max,
        fwhm_tau: right - left,
        dev: 4.0 - env_min,
        t_peak,
    })
}

/// Pump width configurations of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PumpPreset {
    /// σ₋D = σ₊D = 0.28
    A,
    /// σ₋D = 2σ₊D = 0.28
    B,
    /// 2σ₋D = σ₊D = 0.28
    C,
}

impl PumpPreset {
    pub const ALL: [PumpPreset; 3] = [PumpPreset::A, PumpPreset::B, PumpPreset::C];

    /// (σ₊D, σ₋D)
    pub fn sigmas(self) -> (f64, f64) {
        match self {
            PumpPreset::A => (0.28, 0.28),
            PumpPreset::B => (0.14, 0.28),
            PumpPreset::C => (0.28, 0.14),
        }
    }

    pub fn pump(self, k0d: f64, beta: f64) -> PumpConfig {
        let (sp, sm) = self.sigmas();
        PumpConfig::new(k0d, sp, sm, beta)
    }

    pub fn name(self) -> &'static str {
        match self {
            PumpPreset::A => "A",
            PumpPreset::B => "B",
            PumpPreset::C => "C",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "A" | "a" => Some(PumpPreset::A),
            "B" | "b" => Some(PumpPreset::B),
            "C" | "c" => Some(PumpPreset::C),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BiphotonModel {
    Full,
    Linearized,
}

/// Everything needed to evolve one pump configuration.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec {
    pub pump: PumpConfig,
    pub model: BiphotonModel,
    pub n_half: usize,
    pub p: i64,
    pub p_prime: i64,
    pub time: TimeGrid,
    pub sign: AnomalousSign,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub decomposition: SchmidtDecomposition,
    pub correlators: CorrelatorSet,
    pub evolution: Evolution,
}

pub fn simulate(params: &CrowParams, spec: &RunSpec) -> Result<Simulation> {
    params.validate()?;
    spec.time.validate()?;
    let grid = build_grid(spec.n_half)?;
    let phi = match spec.model {
        BiphotonModel::Full => biphoton_full(&grid, &spec.pump)?,
        BiphotonModel::Linearized => biphoton_linearized(&grid, &spec.pump)?,
    };
    let dec = schmidt_decompose(&phi, spec.pump.beta)?;
    let corr = CorrelatorSet::assemble(&dec, spec.sign)?;
    let meta = SeriesMeta {
        p: spec.p,
        p_prime: spec.p_prime,
        k0d: spec.pump.k0d,
        sigma_plus_d: spec.pump.sigma_plus_d,
        sigma_minus_d: spec.pump.sigma_minus_d,
        beta: spec.pump.beta,
    };
    let evolution = evolve(&corr, params, meta, &spec.time.samples())?;
    Ok(Simulation {
        decomposition: dec,
        correlators: corr,
        evolution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub config: PumpPreset,
    pub k0d_over_pi: f64,
    pub metrics: EntanglementMetrics,
}

/// One metrics row per (k₀, configuration), k₀ outermost, cavities (p, −p).
#[allow(clippy::too_many_arguments)]
pub fn table_sweep(
    params: &CrowParams,
    configs: &[PumpPreset],
    k0_over_pi: &[f64],
    beta: f64,
    p: i64,
    n_half: usize,
    time: TimeGrid,
    sign: AnomalousSign,
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::with_capacity(configs.len() * k0_over_pi.len());
    for &k0 in k0_over_pi {
        for &config in configs {
            let spec = RunSpec {
                pump: config.pump(k0 * PI, beta),
                model: BiphotonModel::Full,
                n_half,
                p,
                p_prime: -p,
                time,
                sign,
            };
            let sim = simulate(params, &spec)?;
            rows.push(TableRow {
                config,
                k0d_over_pi: k0,
                metrics: sim.evolution.metrics()?,
            });
        }
    }
    Ok(rows)
}
