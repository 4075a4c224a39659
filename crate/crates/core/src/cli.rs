//! Subcommand drivers. Every output is rendered in memory first and written
//! only after all validation and computation succeeded, together with a
//! manifest that hashes each emitted file.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::biphoton::{biphoton_full, build_grid, pump_photon_number, widths_from_sigma};
use crate::config::{parse_config, RunConfig};
use crate::dispersion::scan;
use crate::error::{Error, Result};
use crate::evolution::{
    simulate, table_sweep, AnomalousSign, BiphotonModel, PumpPreset, RunSpec,
};
use crate::oracle::{calibrate_anomalous_sign, standard_suite};
use crate::schmidt::schmidt_decompose;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Table k₀ values in units of π/D, in table order.
pub const TABLE_K0: [f64; 3] = [0.5, 0.65, 0.35];

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Dispersion { points: usize },
    Decompose { dump_phi: bool, modes: bool },
    Evolve,
    Sweep {
        configs: Vec<PumpPreset>,
        k0_over_pi: Vec<f64>,
    },
    Oracle,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dispersion { .. } => "dispersion",
            Command::Decompose { .. } => "decompose",
            Command::Evolve => "evolve",
            Command::Sweep { .. } => "sweep",
            Command::Oracle => "oracle",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Command::Dispersion { points } if *points < 2 => {
                Err(Error::config("--points", "need at least 2 points"))
            }
            Command::Sweep { configs, k0_over_pi } => {
                if configs.is_empty() {
                    return Err(Error::config("--configs", "empty configuration list"));
                }
                if k0_over_pi.is_empty() {
                    return Err(Error::config("--k0", "empty k0 list"));
                }
                if let Some(k) = k0_over_pi.iter().find(|k| !(**k > 0.0 && **k < 1.0)) {
                    return Err(Error::config("--k0", format!("{k} outside (0, 1)")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parse a comma-separated preset list such as `A,B,C`.
pub fn parse_presets(s: &str) -> Result<Vec<PumpPreset>> {
    s.split(',')
        .map(|t| {
            PumpPreset::parse(t)
                .ok_or_else(|| Error::config("--configs", format!("unknown configuration `{t}`")))
        })
        .collect()
}

pub fn parse_k0_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("--k0", format!("not a number: `{t}`")))
        })
        .collect()
}

/// One file destined for the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: &str, text: String) -> Self {
        Self {
            name: name.to_string(),
            bytes: text.into_bytes(),
        }
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Vec<Artifact>,
    /// False when the oracle suite reported a failing case.
    pub success: bool,
    /// Short human-readable summary for stdout.
    pub summary: String,
}

/// 12 significant digits, scientific.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn sign_json(sign: AnomalousSign) -> Value {
    json!(sign.value())
}

/// Load, parse and validate a config file (or the built-in defaults).
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => parse_config(""),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_config(&text)
        }
    }
}

/// Compute all artifacts for `cmd` without touching the filesystem.
pub fn render(cmd: &Command, cfg: &RunConfig) -> Result<(Vec<Artifact>, bool, String)> {
    cmd.validate()?;
    let cal = calibrate_anomalous_sign()?;
    let sign = cal.sign;
    let mut arts = Vec::new();
    let mut grid_info = json!({ "n_half": cfg.n_half, "dk": PI / cfg.n_half as f64 });
    let mut success = true;
    let summary;

    match cmd {
        Command::Dispersion { points } => {
            let rows = scan(&cfg.crow, *points)?;
            arts.push(Artifact::new(
                "dispersion.csv",
                csv(
                    ["kD_over_pi", "omega_re", "gamma", "Q", "vg"],
                    rows.iter().map(|r| {
                        [r.kd_over_pi, r.omega_re, r.gamma, r.q, r.vg_c].map(fmt_num)
                    }),
                ),
            ));
            grid_info = json!({ "points": points });
            summary = format!("{} dispersion samples", rows.len());
        }
        Command::Decompose { dump_phi, modes } => {
            let grid = build_grid(cfg.n_half)?;
            let phi = biphoton_full(&grid, &cfg.pump)?;
            let dec = schmidt_decompose(&phi, cfg.pump.beta)?;
            arts.push(Artifact::new(
                "schmidt.csv",
                csv(
                    ["lambda", "p", "r"],
                    dec.p.iter().zip(&dec.r).enumerate().map(|(i, (p, r))| {
                        [(i + 1).to_string(), fmt_num(*p), fmt_num(*r)]
                    }),
                ),
            ));
            if *dump_phi {
                let n = cfg.n_half;
                let mut s = (0..n).map(|j| format!("c{j}")).collect::<Vec<_>>().join(",");
                s.push('\n');
                for i in 0..n {
                    let row: Vec<String> =
                        (0..n).map(|j| fmt_num(phi.values[[i, j]].norm())).collect();
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
                arts.push(Artifact::new("phi.csv", s));
                arts.push(Artifact::new(
                    "phi.json",
                    to_json(&json!({
                        "n_half": n,
                        "dk": grid.dk,
                        "k0D": cfg.pump.k0d,
                        "sigma_plus_D": cfg.pump.sigma_plus_d,
                        "sigma_minus_D": cfg.pump.sigma_minus_d,
                    })),
                ));
            }
            if *modes {
                for (name, m, ks) in [("modes_mu.csv", &dec.mu, &grid.k1), ("modes_nu.csv", &dec.nu, &grid.k2)] {
                    let mut s = String::from("kD");
                    for l in 1..=m.ncols() {
                        let _ = write!(s, ",re{l},im{l}");
                    }
                    s.push('\n');
                    for (i, k) in ks.iter().enumerate() {
                        s.push_str(&fmt_num(*k));
                        for l in 0..m.ncols() {
                            let z = m[[i, l]];
                            let _ = write!(s, ",{},{}", fmt_num(z.re), fmt_num(z.im));
                        }
                        s.push('\n');
                    }
                    arts.push(Artifact::new(name, s));
                }
            }
            let mut extra = json!({
                "n_modes": dec.n_modes(),
                "schmidt_number": dec.schmidt_number(),
                "photons_per_arm": dec.photons_per_arm(),
                "q0_D": cfg.pump.q0(),
            });
            let widths = widths_from_sigma(&cfg.crow, &cfg.pump)?;
            extra["pump_spatial_fwhm_m"] = json!(widths.spatial_fwhm_m());
            extra["pump_temporal_fwhm_s"] = json!(widths.temporal_fwhm_s());
            if cfg.pump.physical.is_some() {
                let e = pump_photon_number(&cfg.crow, &cfg.pump)?;
                extra["pump_alpha_sq"] = json!(e.alpha_sq);
                extra["pump_energy_j"] = json!(e.pulse_energy_j);
            }
            arts.push(Artifact::new("decomposition.json", to_json(&extra)));
            summary = format!(
                "{} Schmidt modes, K = {:.4}, p1 = {:.6}",
                dec.n_modes(),
                dec.schmidt_number(),
                dec.p[0]
            );
        }
        Command::Evolve => {
            let spec = RunSpec {
                pump: cfg.pump,
                model: BiphotonModel::Full,
                n_half: cfg.n_half,
                p: cfg.p,
                p_prime: cfg.p_prime,
                time: cfg.time,
                sign,
            };
            let sim = simulate(&cfg.crow, &spec)?;
            let ev = &sim.evolution;
            arts.push(Artifact::new(
                "photons.csv",
                csv(
                    ["t_tau", "n_p"],
                    ev.t.iter().zip(&ev.samples).map(|(t, s)| [fmt_num(*t), fmt_num(s.n_p)]),
                ),
            ));
            arts.push(Artifact::new(
                "variance.csv",
                csv(
                    ["t_tau", "delta2_env", "delta2_theta0"],
                    ev.t.iter().zip(&ev.samples).map(|(t, s)| {
                        [fmt_num(*t), fmt_num(s.envelope()), fmt_num(s.variance(0.0))]
                    }),
                ),
            ));
            let m = ev.metrics()?;
            arts.push(Artifact::new("metrics.json", to_json(&m)));
            grid_info["n_modes"] = json!(sim.decomposition.n_modes());
            grid_info["n_steps"] = json!(cfg.time.n_steps);
            summary = format!(
                "n_max = {:.4}, dev = {:.4}, fwhm = {:.3} tau, peak at {:.3} tau",
                m.n_max, m.dev, m.fwhm_tau, m.t_peak
            );
        }
        Command::Sweep { configs, k0_over_pi } => {
            let p = cfg.p;
            if cfg.p_prime != -p {
                return Err(Error::config("cavities.p_prime", "sweep uses mirror cavities p' = -p"));
            }
            let rows = table_sweep(
                &cfg.crow,
                configs,
                k0_over_pi,
                cfg.pump.beta,
                p,
                cfg.n_half,
                cfg.time,
                sign,
            )?;
            arts.push(Artifact::new(
                "table1.csv",
                csv(
                    ["config", "k0D_over_pi", "n_max", "dev", "fwhm_tau"],
                    rows.iter().map(|r| {
                        [
                            r.config.name().to_string(),
                            fmt_num(r.k0d_over_pi),
                            fmt_num(r.metrics.n_max),
                            fmt_num(r.metrics.dev),
                            fmt_num(r.metrics.fwhm_tau),
                        ]
                    }),
                ),
            ));
            grid_info["n_steps"] = json!(cfg.time.n_steps);
            summary = format!("{} rows", rows.len());
        }
        Command::Oracle => {
            let (cal, cases) = standard_suite(&cfg.crow)?;
            success = cases.iter().all(|c| c.pass);
            arts.push(Artifact::new(
                "oracle.json",
                to_json(&json!({ "sign_calibration": cal, "cases": cases })),
            ));
            let failed = cases.iter().filter(|c| !c.pass).count();
            summary = format!("{} oracle cases, {} failed", cases.len(), failed);
        }
    }

    let files: serde_json::Map<String, Value> = arts
        .iter()
        .map(|a| (a.name.clone(), json!(a.sha256())))
        .collect();
    let manifest = json!({
        "tool": "crowsim",
        "version": TOOL_VERSION,
        "command": cmd.name(),
        "arguments": command_args(cmd),
        "config": cfg.resolved(),
        "defaults_applied": cfg.defaults_applied,
        "grid": grid_info,
        "anomalous_sign": sign_json(sign),
        "files": files,
    });
    arts.push(Artifact::new("manifest.json", to_json(&manifest)));
    Ok((arts, success, summary))
}

fn command_args(cmd: &Command) -> Value {
    match cmd {
        Command::Dispersion { points } => json!({ "points": points }),
        Command::Decompose { dump_phi, modes } => json!({ "dump_phi": dump_phi, "modes": modes }),
        Command::Evolve | Command::Oracle => json!({}),
        Command::Sweep { configs, k0_over_pi } => json!({
            "configs": configs.iter().map(|c| c.name()).collect::<Vec<_>>(),
            "k0D_over_pi": k0_over_pi,
        }),
    }
}

pub fn write_artifacts(dir: &Path, arts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for a in arts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Full pipeline: config, validation, computation, then file emission.
/// `out` overrides `output.dir`, which defaults to `out`.
pub fn run(cmd: &Command, config: Option<&Path>, out: Option<&Path>) -> Result<RunOutcome> {
    let cfg = load_config(config)?;
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let (artifacts, success, summary) = render(cmd, &cfg)?;
    write_artifacts(&out_dir, &artifacts)?;
    Ok(RunOutcome {
        out_dir,
        artifacts,
        success,
        summary,
    })
}

/// Process exit status for a finished run.
pub fn exit_code(res: &Result<RunOutcome>) -> i32 {
    match res {
        Ok(o) if o.success => 0,
        Ok(_) => 1,
        Err(e) if e.is_validation() => 2,
        Err(_) => 1,
    }
}
