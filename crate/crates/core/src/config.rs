//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::biphoton::{PhysicalPump, PumpConfig};
use crate::dispersion::{k0_from_pump, pump_frequency, CrowParams, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::evolution::TimeGrid;

/// Reference configuration shipped with the crate.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.conf");

pub const DEFAULT_N_HALF: usize = 512;

const KNOWN_KEYS: &[&str] = &[
    "crow.omega_F_re",
    "crow.omega_F_im",
    "crow.beta1_re",
    "crow.beta1_im",
    "crow.D_um",
    "crow.tau_def",
    "pump.k0D_over_pi",
    "pump.lambda_P_nm",
    "pump.sigma_plus_D",
    "pump.sigma_minus_D",
    "pump.beta",
    "physical.chi2_pm_per_V",
    "physical.n_index",
    "grid.n_half",
    "time.t_max_tau",
    "time.n_steps",
    "cavities.p",
    "cavities.p_prime",
    "output.dir",
];

/// How the phase-matched k₀ was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K0Source {
    OverPi(f64),
    PumpWavelengthNm(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub crow: CrowParams,
    pub pump: PumpConfig,
    pub k0_source: K0Source,
    pub n_half: usize,
    pub time: TimeGrid,
    pub p: i64,
    pub p_prime: i64,
    pub output_dir: Option<PathBuf>,
    /// Keys that were absent and received their default value.
    pub defaults_applied: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("empty config resolves to defaults")
    }
}

struct Entries {
    values: HashMap<String, (String, usize)>,
    defaulted: Vec<String>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(&str, usize)> {
        match self.values.get(key) {
            Some((v, l)) => Some((v.as_str(), *l)),
            None => {
                self.defaulted.push(key.to_string());
                None
            }
        }
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(_, l)| *l)
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Config {
                    key: key.into(),
                    line: Some(line),
                    msg: format!("expected a finite number, got `{v}`"),
                }),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn int_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<T>().map_err(|_| Error::Config {
                key: key.into(),
                line: Some(line),
                msg: format!("expected an integer, got `{v}`"),
            }),
        }
    }
}

fn tokenize(text: &str) -> Result<HashMap<String, (String, usize)>> {
    let mut values = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            key: content.to_string(),
            line: Some(line),
            msg: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config {
                key: key.into(),
                line: Some(line),
                msg: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                key: key.into(),
                line: Some(line),
                msg: "missing value".into(),
            });
        }
        if let Some((_, first)) = values.insert(key.to_string(), (value.to_string(), line)) {
            return Err(Error::Config {
                key: key.into(),
                line: Some(line),
                msg: format!("duplicate key (first set on line {first})"),
            });
        }
    }
    Ok(values)
}

/// Parse and fully validate a configuration. Absent keys take the reference
/// values; see [`RunConfig::defaults_applied`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut e = Entries {
        values: tokenize(text)?,
        defaulted: Vec::new(),
    };
    let cfg = resolve(&mut e);
    // Attach the source line to validation errors raised by the modules.
    cfg.map_err(|err| match err {
        Error::Config { key, line: None, msg } => {
            let line = e.line(&key);
            Error::Config { key, line, msg }
        }
        other => other,
    })
}

fn resolve(e: &mut Entries) -> Result<RunConfig> {
    let reference = CrowParams::reference();
    let omega_f = Complex64::new(
        e.f64_or("crow.omega_F_re", reference.omega_f.re)?,
        e.f64_or("crow.omega_F_im", reference.omega_f.im)?,
    );
    let beta1 = Complex64::new(
        e.f64_or("crow.beta1_re", reference.beta1.re)?,
        e.f64_or("crow.beta1_im", reference.beta1.im)?,
    );
    // Default period puts Re ω_F at 1550 nm.
    let period_m = e.f64_or("crow.D_um", 2.0 * omega_f.re * 1.55)? * 1e-6;
    let tau_def = e.f64_opt("crow.tau_def")?;
    let crow = CrowParams {
        omega_f,
        beta1,
        period_m,
        tau_def,
    };
    crow.validate()?;

    let k0_source = match (e.has("pump.k0D_over_pi"), e.has("pump.lambda_P_nm")) {
        (true, true) => {
            return Err(Error::Config {
                key: "pump.lambda_P_nm".into(),
                line: e.line("pump.lambda_P_nm"),
                msg: "set either pump.k0D_over_pi or pump.lambda_P_nm, not both".into(),
            })
        }
        (false, true) => K0Source::PumpWavelengthNm(e.f64_or("pump.lambda_P_nm", 0.0)?),
        _ => K0Source::OverPi(e.f64_or("pump.k0D_over_pi", 0.5)?),
    };
    let (k0d, lambda_p_m) = match k0_source {
        K0Source::OverPi(x) => {
            let k0d = x * PI;
            // λ = 2πc/ω with ω in units of 4πc/D
            (k0d, period_m / (2.0 * pump_frequency(&crow, k0d)))
        }
        K0Source::PumpWavelengthNm(nm) => {
            if !(nm > 0.0) {
                return Err(Error::config("pump.lambda_P_nm", "must be positive"));
            }
            let omega_p = period_m / (2.0 * nm * 1e-9);
            let k0d = k0_from_pump(&crow, omega_p).map_err(|err| {
                Error::config("pump.lambda_P_nm", format!("{err}"))
            })?;
            (k0d, nm * 1e-9)
        }
    };

    let chi2 = e.f64_opt("physical.chi2_pm_per_V")?;
    let n_index = e.f64_opt("physical.n_index")?;
    let physical = match (chi2, n_index) {
        (None, None) => None,
        (Some(c), Some(n)) => Some(PhysicalPump {
            lambda_p_m,
            chi2_m_per_v: c * 1e-12,
            n_index: n,
        }),
        (Some(_), None) => {
            return Err(Error::config("physical.n_index", "required with physical.chi2_pm_per_V"))
        }
        (None, Some(_)) => {
            return Err(Error::config("physical.chi2_pm_per_V", "required with physical.n_index"))
        }
    };
    let pump = PumpConfig {
        k0d,
        sigma_plus_d: e.f64_or("pump.sigma_plus_D", 0.28)?,
        sigma_minus_d: e.f64_or("pump.sigma_minus_D", 0.28)?,
        beta: e.f64_or("pump.beta", 2.2)?,
        physical,
    };
    pump.validate()?;

    let n_half = e.int_or("grid.n_half", DEFAULT_N_HALF)?;
    if n_half < 2 {
        return Err(Error::config("grid.n_half", "must be >= 2"));
    }
    let defaults = TimeGrid::default();
    let time = TimeGrid {
        t_max_tau: e.f64_or("time.t_max_tau", defaults.t_max_tau)?,
        n_steps: e.int_or("time.n_steps", defaults.n_steps)?,
    };
    time.validate()?;

    let p = e.int_or("cavities.p", 40i64)?;
    let p_prime = e.int_or("cavities.p_prime", -40i64)?;
    if p == p_prime {
        return Err(Error::config("cavities.p_prime", "must differ from cavities.p"));
    }
    let output_dir = e.raw("output.dir").map(|(v, _)| PathBuf::from(v));

    let mut defaults_applied = std::mem::take(&mut e.defaulted);
    defaults_applied.sort();
    defaults_applied.dedup();
    Ok(RunConfig {
        crow,
        pump,
        k0_source,
        n_half,
        time,
        p,
        p_prime,
        output_dir,
        defaults_applied,
    })
}

impl RunConfig {
    pub fn reference() -> Self {
        parse_config(REFERENCE_CONFIG).expect("reference config is valid")
    }

    /// Every key with its resolved value, for run manifests.
    pub fn resolved(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("crow.omega_F_re", json!(self.crow.omega_f.re));
        put("crow.omega_F_im", json!(self.crow.omega_f.im));
        put("crow.beta1_re", json!(self.crow.beta1.re));
        put("crow.beta1_im", json!(self.crow.beta1.im));
        put("crow.D_um", json!(self.crow.period_m * 1e6));
        put("crow.tau_def", json!(self.crow.tau()));
        match self.k0_source {
            K0Source::OverPi(x) => put("pump.k0D_over_pi", json!(x)),
            K0Source::PumpWavelengthNm(nm) => {
                put("pump.lambda_P_nm", json!(nm));
                put("pump.k0D_over_pi", json!(self.pump.k0d / PI));
            }
        }
        put("pump.sigma_plus_D", json!(self.pump.sigma_plus_d));
        put("pump.sigma_minus_D", json!(self.pump.sigma_minus_d));
        put("pump.beta", json!(self.pump.beta));
        if let Some(ph) = &self.pump.physical {
            put("physical.chi2_pm_per_V", json!(ph.chi2_m_per_v * 1e12));
            put("physical.n_index", json!(ph.n_index));
            put("physical.lambda_P_nm", json!(ph.lambda_p_m * 1e9));
        }
        put("grid.n_half", json!(self.n_half));
        put("time.t_max_tau", json!(self.time.t_max_tau));
        put("time.n_steps", json!(self.time.n_steps));
        put("cavities.p", json!(self.p));
        put("cavities.p_prime", json!(self.p_prime));
        if let Some(d) = &self.output_dir {
            put("output.dir", json!(d.display().to_string()));
        }
        m
    }

    /// Pump wavelength implied by the configuration, meters.
    pub fn pump_wavelength_m(&self) -> f64 {
        let omega = pump_frequency(&self.crow, self.pump.k0d) * self.crow.frequency_unit_si();
        2.0 * PI * SPEED_OF_LIGHT / omega
    }
}
