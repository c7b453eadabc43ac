//! TOML run configuration with unit-suffixed keys. Every physical quantity
//! carries its unit in the key name; unknown or mis-suffixed keys are
//! rejected with the offending key path.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use bell_core::decoherence::{DecoherenceParams, Timeline};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value at `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    Onoff,
    Parity,
    ParityReal,
    Indirect,
    Decohered,
}

impl std::fmt::Display for FamilyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FamilyId::Onoff => "onoff",
            FamilyId::Parity => "parity",
            FamilyId::ParityReal => "parity-real",
            FamilyId::Indirect => "indirect",
            FamilyId::Decohered => "decohered",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub family: FamilyId,
    pub seed: u64,
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub alpha_start: f64,
    pub alpha_stop: f64,
    pub alpha_step: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_values: Vec<f64>,
}

impl GridSection {
    pub fn alphas(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut a = self.alpha_start;
        while a <= self.alpha_stop + 1e-12 {
            out.push(a);
            a += self.alpha_step;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub chi_rad_per_s: f64,
    pub kappa_per_s: f64,
    pub gamma0_per_s: f64,
    pub gammac_per_s: f64,
    pub gammap_per_s: f64,
}

impl PhysicsSection {
    pub fn to_params(&self) -> Result<DecoherenceParams, ConfigError> {
        DecoherenceParams::new(
            self.kappa_per_s,
            self.gamma0_per_s,
            self.gammac_per_s,
            self.gammap_per_s,
            self.chi_rad_per_s,
        )
        .map_err(|e| invalid("physics", e.to_string()))
    }

    pub fn defaults() -> Self {
        let p = DecoherenceParams::rydberg_microwave_defaults();
        Self {
            chi_rad_per_s: p.chi,
            kappa_per_s: p.kappa,
            gamma0_per_s: p.gamma0,
            gammac_per_s: p.gammac,
            gammap_per_s: p.gammap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSection {
    pub t1_us: f64,
    pub t2_us: f64,
    pub t3_us: f64,
    pub t6_us: f64,
    pub v_m_per_s: f64,
    /// Separations l = v (t4 + t5) to sweep for the decohered family.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub separations_m: Vec<f64>,
    /// When set, t5 is pinned to this value and t4 = l/v - t5; otherwise the
    /// cylinder transit is split evenly, t4 = t5 = l/(2v).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t5_pin_us: Option<f64>,
}

impl TimelineSection {
    pub fn defaults() -> Self {
        Self {
            t1_us: 80.0,
            t2_us: 166.5,
            t3_us: 27.1,
            t6_us: 20.0,
            v_m_per_s: 250.0,
            separations_m: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            t5_pin_us: None,
        }
    }

    pub fn to_timeline(&self, separation_m: f64) -> Result<Timeline, ConfigError> {
        let us = 1e-6;
        let (t4, t5) = match self.t5_pin_us {
            Some(t5_us) => {
                let t5 = t5_us * us;
                (separation_m / self.v_m_per_s - t5, t5)
            }
            None => {
                let half = separation_m / (2.0 * self.v_m_per_s);
                (half, half)
            }
        };
        Timeline::new(
            self.t1_us * us,
            self.t2_us * us,
            self.t3_us * us,
            t4,
            t5,
            self.t6_us * us,
            self.v_m_per_s,
        )
        .map_err(|e| invalid("timeline", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSection {
    pub tc_min_s: f64,
    pub tc_max_s: f64,
    pub tc_points: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
    /// Atomic lifetime in the cylinder; omit for complete inhibition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_atom_s: Option<f64>,
    /// Cylinder transit before the displacement, in seconds.
    pub t4_s: f64,
    pub t5_us: f64,
}

impl ContourSection {
    pub fn defaults() -> Self {
        Self {
            tc_min_s: 200.0,
            tc_max_s: 2000.0,
            tc_points: 20,
            alpha_min: 0.05,
            alpha_max: 1.0,
            alpha_points: 20,
            t_atom_s: Some(2000.0),
            t4_s: 236.0,
            t5_us: 96.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physics: Option<PhysicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeline: Option<TimelineSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourSection>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl RunConfig {
    pub fn minimal(family: FamilyId, seed: u64, restarts: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            run: RunSection { family, seed, restarts, tol: default_tol() },
            grid: None,
            physics: None,
            timeline: None,
            contour: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.run.restarts == 0 {
            return Err(invalid("run.restarts", "must be at least 1"));
        }
        if self.run.tol <= 0.0 || self.run.tol.is_nan() {
            return Err(invalid("run.tol", "must be positive"));
        }
        if let Some(grid) = &self.grid {
            if grid.alpha_step <= 0.0 || grid.alpha_step.is_nan() {
                return Err(invalid("grid.alpha_step", "must be positive"));
            }
            if grid.alpha_stop < grid.alpha_start {
                return Err(invalid("grid.alpha_stop", "below grid.alpha_start"));
            }
            if grid.alphas().is_empty() {
                return Err(invalid("grid.alpha_start", "empty amplitude grid"));
            }
            for (i, eta) in grid.eta_values.iter().enumerate() {
                if !(0.0..=1.0).contains(eta) {
                    return Err(ConfigError::Invalid {
                        key: "grid.eta_values",
                        message: format!("eta[{i}] = {eta} outside [0, 1]"),
                    });
                }
            }
        }
        if let Some(p) = &self.physics {
            p.to_params()?;
        }
        if let Some(tl) = &self.timeline {
            if tl.v_m_per_s <= 0.0 {
                return Err(invalid("timeline.v_m_per_s", "must be positive"));
            }
            for (i, l) in tl.separations_m.iter().enumerate() {
                if *l < 0.0 {
                    return Err(ConfigError::Invalid {
                        key: "timeline.separations_m",
                        message: format!("separation[{i}] = {l} is negative"),
                    });
                }
                tl.to_timeline(*l)?;
            }
        }
        if let Some(c) = &self.contour {
            if c.tc_points < 2 || c.alpha_points < 2 {
                return Err(invalid("contour.tc_points", "need at least 2 points per axis"));
            }
            if c.tc_min_s <= 0.0 || c.tc_max_s <= c.tc_min_s {
                return Err(invalid("contour.tc_min_s", "need 0 < tc_min_s < tc_max_s"));
            }
            if let Some(t_atom) = c.t_atom_s {
                if t_atom <= 0.0 {
                    return Err(invalid("contour.t_atom_s", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_roundtrips_bitwise() {
        let mut cfg = RunConfig::minimal(FamilyId::Onoff, 42, 16);
        cfg.grid = Some(GridSection {
            alpha_start: 0.1,
            alpha_stop: 1.0,
            alpha_step: 0.1,
            eta_values: vec![1.0],
        });
        let s1 = cfg.to_toml();
        let cfg2: RunConfig = toml::from_str(&s1).unwrap();
        let s2 = cfg2.to_toml();
        assert_eq!(s1, s2);
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn rejects_out_of_range_eta_naming_the_key() {
        let mut cfg = RunConfig::minimal(FamilyId::Onoff, 1, 4);
        cfg.grid = Some(GridSection {
            alpha_start: 0.1,
            alpha_stop: 0.5,
            alpha_step: 0.1,
            eta_values: vec![1.2],
        });
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eta") && msg.contains("1.2"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
schema_version = 1
[run]
family = "parity"
seed = 1
restarts = 4
t1_ms = 3.0
"#;
        let err = toml::from_str::<RunConfig>(text).unwrap_err().to_string();
        assert!(err.contains("t1_ms"), "{err}");
    }

    #[test]
    fn alpha_grid_is_inclusive() {
        let grid = GridSection {
            alpha_start: 0.05,
            alpha_stop: 1.5,
            alpha_step: 0.05,
            eta_values: vec![],
        };
        let alphas = grid.alphas();
        assert_eq!(alphas.len(), 30);
        assert!((alphas[29] - 1.5).abs() < 1e-9);
    }
}
