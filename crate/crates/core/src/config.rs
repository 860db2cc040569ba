//! Flat TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{defaults, Orientation, SolverSettings, TailoredCoupling};

pub const EXPERIMENTS: [&str; 8] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "custom"];

/// One-line description of each experiment, for `--list`.
pub fn describe(experiment: &str) -> Option<&'static str> {
    Some(match experiment {
        "fig3" => "de-excitation distribution |s|^2 rho / N at the inverting pulse",
        "fig4" => "probability of no second ASE emission against depth and time",
        "fig5" => "mode-matched RASE efficiency against depth",
        "fig6" => "separation probability against mode-matched efficiency",
        "fig7" => "flat-state RASE efficiency against rephasing depth",
        "fig8" => "excitation per unit length during flat-state RASE at high depth",
        "fig9" => "RASE efficiency of a tailored density",
        "custom" => "single run with separate ASE and RASE depths",
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: String,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub n_z: usize,
    pub n_delta: usize,
    pub delta_halfspan: f64,
    pub dt: f64,
    pub sample_interval: f64,
    pub t_s: f64,
    pub t_end: f64,
    /// Time range of the survival surface.
    pub t_max: f64,
    pub n_atoms: f64,
    /// Overrides the experiment's default depth list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_l: Option<Vec<f64>>,
    pub alpha_l_ase: f64,
    pub alpha_l_rase: f64,
    pub mode_match: Orientation,
    pub tailored_coupling: TailoredCoupling,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            experiment: "custom".into(),
            out_dir: PathBuf::from("out"),
            jobs: 0,
            n_z: s.n_z,
            n_delta: s.n_delta,
            delta_halfspan: s.delta_halfspan,
            dt: s.dt,
            sample_interval: s.sample_interval,
            t_s: s.t_s,
            t_end: s.t_end,
            t_max: defaults::SEPARATION_T_MAX,
            n_atoms: s.n_atoms,
            alpha_l: None,
            alpha_l_ase: 0.05,
            alpha_l_rase: 1.0,
            mode_match: s.mode_match,
            tailored_coupling: s.tailored_coupling,
        }
    }
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = message
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
                .map(str::to_string)
                .or_else(|| {
                    let start = e.span()?.start;
                    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
                    let line = text[line_start..].lines().next()?;
                    line.split_once('=').map(|(k, _)| k.trim().to_string())
                })
                .unwrap_or_else(|| "<document>".into());
            config_error(&key, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(config_error(
                "experiment",
                format!("unknown experiment `{}`; expected one of {}", self.experiment, EXPERIMENTS.join(", ")),
            ));
        }
        if self.n_z < 2 {
            return Err(config_error("n_z", "must be at least 2"));
        }
        if self.n_delta < 3 || self.n_delta.is_multiple_of(2) {
            return Err(config_error("n_delta", "must be odd and at least 3"));
        }
        for (key, v) in [
            ("delta_halfspan", self.delta_halfspan),
            ("dt", self.dt),
            ("sample_interval", self.sample_interval),
            ("t_s", self.t_s),
            ("t_end", self.t_end),
            ("t_max", self.t_max),
            ("n_atoms", self.n_atoms),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(key, format!("{v} must be positive")));
            }
        }
        if self.dt > self.sample_interval {
            return Err(config_error("dt", "must not exceed sample_interval"));
        }
        for (key, v) in [("alpha_l_ase", self.alpha_l_ase), ("alpha_l_rase", self.alpha_l_rase)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_error(key, format!("{v} must be finite and >= 0")));
            }
        }
        if let Some(list) = &self.alpha_l {
            if list.is_empty() {
                return Err(config_error("alpha_l", "must not be empty"));
            }
            if let Some(v) = list.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(config_error("alpha_l", format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            n_z: self.n_z,
            n_delta: self.n_delta,
            delta_halfspan: self.delta_halfspan,
            dt: self.dt,
            sample_interval: self.sample_interval,
            t_s: self.t_s,
            t_end: self.t_end,
            n_atoms: self.n_atoms,
            mode_match: self.mode_match,
            tailored_coupling: self.tailored_coupling,
        }
    }

    /// Depths scanned by the configured experiment.
    pub fn depths(&self) -> Vec<f64> {
        if let Some(list) = &self.alpha_l {
            return list.clone();
        }
        match self.experiment.as_str() {
            "fig3" => defaults::shape_depths(),
            "fig4" => defaults::separation_depths(),
            "fig5" | "fig6" => defaults::mode_matched_depths(),
            "fig7" => defaults::flat_depths(),
            "fig8" => vec![defaults::HIGHDEPTH_ALPHA_L],
            "fig9" => defaults::tailored_depths(),
            _ => vec![self.alpha_l_rase],
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, as lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
