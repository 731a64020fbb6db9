//! Harness configuration: a strict TOML schema (unknown keys are errors)
//! resolved together with CLI flags and `NLGATE_*` environment overrides
//! into one deterministic run description.
//!
//! Frequencies in the file are linear MHz and are multiplied by 2π
//! internally; times are µs. The full schema is documented in
//! `docs/config-schema.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nlgate::imperfections::{EnableFlags, ImperfectionParams};
use nlgate::optics::CavityParams;
use nlgate::protocol::{
    DetectionBasis, ModuleConfig, ProtocolConfig, Source, Timings,
};

/// Current schema version; bumped on breaking key changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: u32,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub protocol: ProtocolSection,
    pub imperfections: ImperfectionsSection,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Heralded events per truth-table input, and Monte Carlo draws per
    /// budget cell.
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Heralded events per Bell input.
    #[serde(default = "default_heralds")]
    pub heralds_target: u64,
    #[serde(default)]
    pub analytic: bool,
    #[serde(default = "default_attempts_cap")]
    pub attempts_cap: u64,
    /// Shot-parameter draws for the phase audit.
    #[serde(default = "default_audit_draws")]
    pub audit_draws: u64,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}
fn default_shots() -> u64 {
    500
}
fn default_heralds() -> u64 {
    3000
}
fn default_attempts_cap() -> u64 {
    100_000_000
}
fn default_audit_draws() -> u64 {
    3000
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub grid: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// "single-photon" or "coherent".
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_n: Option<f64>,
    #[serde(default = "default_fock_cutoff")]
    pub fock_cutoff: usize,
    pub eta_pre: f64,
    pub eta_link: f64,
    pub eta_det: f64,
    /// Only "a-d" is defined: the protocol heralds in the A/D linear basis.
    #[serde(default = "default_detection_basis")]
    pub detection_basis: String,
    #[serde(default = "default_true")]
    pub feedback_enabled: bool,
    pub gate_duration_us: f64,
    #[serde(default)]
    pub feedback_wait_us: f64,
    pub module_a: ModuleSection,
    pub module_b: ModuleSection,
}

fn default_fock_cutoff() -> usize {
    12
}
fn default_detection_basis() -> String {
    "a-d".into()
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModuleSection {
    pub g_mhz: f64,
    pub kappa_mhz: f64,
    pub kappa_r_mhz: f64,
    pub gamma_mhz: f64,
    #[serde(default)]
    pub delta_c_mhz: f64,
    #[serde(default)]
    pub delta_a_mhz: f64,
    #[serde(default = "default_mode_match")]
    pub mode_match: f64,
}

fn default_mode_match() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImperfectionsSection {
    pub spam_error: f64,
    pub pol_misalign_theta: f64,
    pub delta_lock_sigma_mhz: f64,
    pub t2_a_us: f64,
    pub t2_b_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephase_window_a_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephase_window_b_us: Option<f64>,
    pub dark_click_prob: f64,
    #[serde(default = "default_true")]
    pub gaussian_dephasing: bool,
    pub enable: EnableSection,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnableSection {
    pub weak_coherent: bool,
    pub spam: bool,
    pub polarization: bool,
    pub mode_matching: bool,
    pub detuning_jitter: bool,
    pub decoherence: bool,
    pub dark_counts: bool,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: FileConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return cfg_err(format!(
                "schema_version {} is not the supported version {SCHEMA_VERSION}",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialization (also the hashing input).
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_protocol_config(&self) -> Result<ProtocolConfig, ConfigError> {
        let p = &self.protocol;
        let source = match p.source.as_str() {
            "single-photon" => {
                if p.mean_n.is_some() {
                    return cfg_err("protocol.mean_n is only valid with source = \"coherent\"");
                }
                Source::SinglePhoton
            }
            "coherent" => Source::Coherent {
                mean_n: p
                    .mean_n
                    .ok_or(ConfigError("protocol.mean_n required for a coherent source".into()))?,
            },
            other => return cfg_err(format!("protocol.source '{other}' (expected \"single-photon\" or \"coherent\")")),
        };
        if p.detection_basis != "a-d" {
            return cfg_err(format!(
                "protocol.detection_basis '{}' (the protocol heralds in the A/D basis; use \"a-d\")",
                p.detection_basis
            ));
        }
        let module = |m: &ModuleSection, which: &str| -> Result<ModuleConfig, ConfigError> {
            let cavity = CavityParams::from_linear_mhz(
                m.g_mhz, m.kappa_mhz, m.kappa_r_mhz, m.gamma_mhz, m.delta_c_mhz, m.delta_a_mhz,
            )
            .map_err(|e| ConfigError(format!("protocol.{which}: {e}")))?;
            Ok(ModuleConfig {
                cavity,
                mode_match: m.mode_match,
            })
        };
        let cfg = ProtocolConfig {
            source,
            fock_cutoff: p.fock_cutoff,
            module_a: module(&p.module_a, "module_a")?,
            module_b: module(&p.module_b, "module_b")?,
            eta_pre: p.eta_pre,
            eta_link: p.eta_link,
            eta_det: p.eta_det,
            detection_basis: DetectionBasis::LinearAD,
            feedback_enabled: p.feedback_enabled,
            timings: Timings {
                gate_duration_us: p.gate_duration_us,
                feedback_wait_us: p.feedback_wait_us,
            },
        };
        cfg.validate().map_err(|e| ConfigError(format!("protocol: {e}")))?;
        Ok(cfg)
    }

    pub fn to_imperfections(&self) -> Result<ImperfectionParams, ConfigError> {
        let i = &self.imperfections;
        let imp = ImperfectionParams {
            enable: EnableFlags {
                weak_coherent: i.enable.weak_coherent,
                spam: i.enable.spam,
                polarization: i.enable.polarization,
                mode_matching: i.enable.mode_matching,
                detuning_jitter: i.enable.detuning_jitter,
                decoherence: i.enable.decoherence,
                dark_counts: i.enable.dark_counts,
            },
            spam_error: i.spam_error,
            pol_misalign_theta: i.pol_misalign_theta,
            delta_lock_sigma: std::f64::consts::TAU * i.delta_lock_sigma_mhz,
            t2_a_us: i.t2_a_us,
            t2_b_us: i.t2_b_us,
            dephase_window_a_us: i.dephase_window_a_us,
            dephase_window_b_us: i.dephase_window_b_us,
            dark_click_prob: i.dark_click_prob,
            gaussian_dephasing: i.gaussian_dephasing,
        };
        imp.validate()
            .map_err(|e| ConfigError(format!("imperfections: {e}")))?;
        Ok(imp)
    }
}

/// Environment overrides with the `NLGATE_` prefix (between file and CLI
/// precedence): SEED, OUT, SHOTS, HERALDS, ANALYTIC, FORMAT.
pub fn apply_env_overrides(cfg: &mut FileConfig) -> Result<(), ConfigError> {
    let get = |k: &str| std::env::var(format!("NLGATE_{k}")).ok();
    if let Some(v) = get("SEED") {
        cfg.run.seed = v
            .parse()
            .map_err(|_| ConfigError(format!("NLGATE_SEED '{v}' is not a u64")))?;
    }
    if let Some(v) = get("OUT") {
        cfg.run.out_dir = PathBuf::from(v);
    }
    if let Some(v) = get("SHOTS") {
        cfg.run.shots = v
            .parse()
            .map_err(|_| ConfigError(format!("NLGATE_SHOTS '{v}' is not a u64")))?;
    }
    if let Some(v) = get("HERALDS") {
        cfg.run.heralds_target = v
            .parse()
            .map_err(|_| ConfigError(format!("NLGATE_HERALDS '{v}' is not a u64")))?;
    }
    if let Some(v) = get("ANALYTIC") {
        cfg.run.analytic = match v.as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            _ => return cfg_err(format!("NLGATE_ANALYTIC '{v}' is not a bool")),
        };
    }
    if let Some(v) = get("FORMAT") {
        let mut formats = Vec::new();
        for part in v.split(',') {
            formats.push(match part.trim() {
                "json" => Format::Json,
                "csv" => Format::Csv,
                other => return cfg_err(format!("NLGATE_FORMAT '{other}' (expected json or csv)")),
            });
        }
        cfg.run.formats = formats;
    }
    Ok(())
}

/// SHA-256 over the canonical resolved-config serialization.
pub fn config_hash(canonical: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Numeric sweep parameters: name → setter. Unknown names are config
/// errors.
pub fn apply_sweep_parameter(
    cfg: &mut FileConfig,
    parameter: &str,
    value: f64,
) -> Result<(), ConfigError> {
    match parameter {
        "mean_n" => {
            if cfg.protocol.source != "coherent" {
                return cfg_err("sweeping mean_n requires a coherent source");
            }
            cfg.protocol.mean_n = Some(value);
        }
        "eta_pre" => cfg.protocol.eta_pre = value,
        "eta_link" => cfg.protocol.eta_link = value,
        "eta_det" => cfg.protocol.eta_det = value,
        "mode_match_a" => cfg.protocol.module_a.mode_match = value,
        "mode_match_b" => cfg.protocol.module_b.mode_match = value,
        "delta_c_a_mhz" => cfg.protocol.module_a.delta_c_mhz = value,
        "delta_c_b_mhz" => cfg.protocol.module_b.delta_c_mhz = value,
        "spam_error" => cfg.imperfections.spam_error = value,
        "pol_misalign_theta" => cfg.imperfections.pol_misalign_theta = value,
        "delta_lock_sigma_mhz" => cfg.imperfections.delta_lock_sigma_mhz = value,
        "t2_a_us" => cfg.imperfections.t2_a_us = value,
        "t2_b_us" => cfg.imperfections.t2_b_us = value,
        "t2_us" => {
            cfg.imperfections.t2_a_us = value;
            cfg.imperfections.t2_b_us = value;
        }
        "dephase_window_a_us" => cfg.imperfections.dephase_window_a_us = Some(value),
        "dephase_window_b_us" => cfg.imperfections.dephase_window_b_us = Some(value),
        "dark_click_prob" => cfg.imperfections.dark_click_prob = value,
        other => {
            return cfg_err(format!(
                "unknown sweep parameter '{other}' (see docs/config-schema.md for the registry)"
            ))
        }
    }
    Ok(())
}
