//! Experiment configuration: TOML ingestion, parameter presets, and unit
//! conversion.
//!
//! Config keys carry their units in the name (`omega_l_2pi_mhz`, `gap_ns`,
//! `gamma_ro_per_s`); everything is converted to rad/s and seconds once, at
//! resolution time.

use crate::analysis::{Estimator, MeasurementPolicy};
use crate::error::{Error, Result};
use crate::hilbert::{RegisterConfig, Scheme};
use crate::model::{InteractionSpec, ModelContext, RelaxationRates};
use crate::schedule::PulseParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

/// Drive parameters with explicit units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    /// |Ω_mw| / 2π in kHz.
    pub omega_mw_2pi_khz: f64,
    /// Δ_mw as a multiple of |Ω_mw|.
    pub delta_mw_over_omega_mw: f64,
    /// |Ω_l| / 2π in MHz (register and ancilla lasers).
    pub omega_l_2pi_mhz: f64,
    /// Inter-gate gap δt in ns.
    pub gap_ns: f64,
}

/// Relaxation rates with explicit units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub gamma_0_per_s: f64,
    pub gamma_1_per_s: f64,
    pub gamma_r0_per_s: f64,
    pub gamma_r1_per_s: f64,
    pub gamma_ro_per_s: f64,
    pub deph_z_per_s: f64,
    pub deph_r_per_s: f64,
}

impl RatesConfig {
    pub fn zero() -> Self {
        RatesConfig {
            gamma_0_per_s: 0.0,
            gamma_1_per_s: 0.0,
            gamma_r0_per_s: 0.0,
            gamma_r1_per_s: 0.0,
            gamma_ro_per_s: 0.0,
            deph_z_per_s: 0.0,
            deph_r_per_s: 0.0,
        }
    }

    pub fn to_rates(self) -> RelaxationRates {
        RelaxationRates {
            gamma_0: self.gamma_0_per_s,
            gamma_1: self.gamma_1_per_s,
            gamma_r0: self.gamma_r0_per_s,
            gamma_r1: self.gamma_r1_per_s,
            gamma_ro: self.gamma_ro_per_s,
            deph_z: self.deph_z_per_s,
            deph_r: self.deph_r_per_s,
        }
    }
}

/// Blockade-shift specification. Exactly one of the three modes may be set;
/// the default is `v_over_w = 50`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    /// V_aa as a multiple of the excitation linewidth w.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_over_w: Option<f64>,
    /// Explicit uniform shift in rad/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_rad_per_s: Option<f64>,
    /// Register atom positions in metres (with `c_p` and `p`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions_m: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla_position_m: Option<[f64; 3]>,
    /// Interaction coefficient C_p in rad·m^p/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_p_rad_mp_per_s: Option<f64>,
    /// Power-law exponent, 3 (dipole-dipole) or 6 (van der Waals).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<i32>,
}

impl InteractionConfig {
    pub fn to_spec(&self) -> Result<InteractionSpec> {
        let modes = [
            self.v_over_w.is_some(),
            self.v_rad_per_s.is_some(),
            self.positions_m.is_some(),
        ];
        match modes.iter().filter(|m| **m).count() {
            0 => Ok(InteractionSpec::default()),
            1 => {
                if let Some(f) = self.v_over_w {
                    Ok(InteractionSpec::ScaledLinewidth { factor: f })
                } else if let Some(v) = self.v_rad_per_s {
                    Ok(InteractionSpec::Uniform { v })
                } else {
                    let register_m = self.positions_m.clone().unwrap();
                    let c_p = self.c_p_rad_mp_per_s.ok_or_else(|| {
                        Error::Config("positions_m requires c_p_rad_mp_per_s".into())
                    })?;
                    let p = self
                        .p
                        .ok_or_else(|| Error::Config("positions_m requires p".into()))?;
                    Ok(InteractionSpec::Positions {
                        register_m,
                        ancilla_m: self.ancilla_position_m,
                        c_p,
                        p,
                    })
                }
            }
            _ => Err(Error::Config(
                "choose exactly one of v_over_w, v_rad_per_s, positions_m".into(),
            )),
        }
    }
}

fn default_iterations() -> usize {
    1
}

fn default_trajectories() -> usize {
    200
}

fn default_estimator() -> Estimator {
    Estimator::Expectation
}

/// Full experiment description, loadable from a TOML file. Explicit sections
/// override the named preset wholesale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub scheme: Scheme,
    pub marked: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Master seed; mandatory (there is no wall-clock default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default)]
    pub count_rydberg_as_nonzero: bool,
    /// Worker count; 0 means one per core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionConfig>,
    /// Experimental: nonzero ancilla relaxation (ancilla scheme only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla_rates: Option<RatesConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::TomlParse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parameter-set table from the reference experiment: rows a/b/c set
/// (Γ_r, γ_r) = (1, 4.76, 100)×10³ s⁻¹ paired with (1, 10, 100)×10³ s⁻¹;
/// suffix 1/2 sets |Ω_l| = 2π×0.5 / 2π×2 MHz. The extra `ideal` preset turns
/// all relaxation off, detunes by 10⁴|Ω_mw|, and sizes V_aa = 10³ w.
pub fn preset(name: &str) -> Result<(DriveConfig, RatesConfig, InteractionConfig)> {
    let common_drive = DriveConfig {
        omega_mw_2pi_khz: 20.0,
        delta_mw_over_omega_mw: 25.0,
        omega_l_2pi_mhz: 0.5,
        gap_ns: 50.0,
    };
    let rates = |gamma_r: f64, deph_r: f64| RatesConfig {
        gamma_0_per_s: 2.0,
        gamma_1_per_s: 2.0,
        gamma_r0_per_s: gamma_r / 16.0,
        gamma_r1_per_s: gamma_r / 16.0,
        gamma_ro_per_s: 7.0 / 8.0 * gamma_r,
        deph_z_per_s: 100.0,
        deph_r_per_s: deph_r,
    };
    let inter = |factor: f64| InteractionConfig {
        v_over_w: Some(factor),
        ..InteractionConfig::default()
    };
    let (row, fast) = match name {
        "a1" => ('a', false),
        "b1" => ('b', false),
        "c1" => ('c', false),
        "a2" => ('a', true),
        "b2" => ('b', true),
        "c2" => ('c', true),
        "ideal" => {
            let drive = DriveConfig {
                delta_mw_over_omega_mw: 1.0e4,
                ..common_drive
            };
            return Ok((drive, RatesConfig::zero(), inter(1.0e3)));
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?} (expected a1, b1, c1, a2, b2, c2, or ideal)"
            )))
        }
    };
    let (gamma_r, deph_r) = match row {
        'a' => (1.0e3, 1.0e3),
        'b' => (4.76e3, 1.0e4),
        _ => (1.0e5, 1.0e5),
    };
    let drive = DriveConfig {
        omega_l_2pi_mhz: if fast { 2.0 } else { 0.5 },
        ..common_drive
    };
    Ok((drive, rates(gamma_r, deph_r), inter(50.0)))
}

pub const PRESET_NAMES: [&str; 6] = ["a1", "b1", "c1", "a2", "b2", "c2"];

/// Everything needed to run: register, model, pulse parameters, and
/// execution settings, with units resolved.
pub struct ResolvedExperiment {
    pub register: RegisterConfig,
    pub model: ModelContext,
    pub params: PulseParams,
    pub iterations: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub policy: MeasurementPolicy,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

pub fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedExperiment> {
    let register = RegisterConfig::new(cfg.k, cfg.scheme, &cfg.marked)?;
    let seed = cfg
        .seed
        .ok_or_else(|| Error::Config("seed is mandatory (no wall-clock default)".into()))?;
    if cfg.trajectories < 1 {
        return Err(Error::Config("trajectories must be >= 1".into()));
    }
    if cfg.iterations < 1 {
        return Err(Error::NoIterations);
    }

    let (preset_drive, preset_rates, preset_inter) = match &cfg.preset {
        Some(name) => {
            let (d, r, i) = preset(name)?;
            (Some(d), Some(r), Some(i))
        }
        None => (None, None, None),
    };
    let drive = cfg.drive.or(preset_drive).ok_or_else(|| {
        Error::Config("drive parameters required: give a preset or a [drive] section".into())
    })?;
    let rates = cfg.rates.or(preset_rates).ok_or_else(|| {
        Error::Config("relaxation rates required: give a preset or a [rates] section".into())
    })?;
    let inter_cfg = cfg
        .interaction
        .clone()
        .or(preset_inter)
        .unwrap_or_default();

    let omega_mw = 2.0 * PI * drive.omega_mw_2pi_khz * 1.0e3;
    let params = PulseParams {
        omega_mw,
        delta_mw: drive.delta_mw_over_omega_mw * omega_mw,
        omega_l: 2.0 * PI * drive.omega_l_2pi_mhz * 1.0e6,
        gap: drive.gap_ns * 1.0e-9,
    };
    params.validate()?;

    let spec = inter_cfg.to_spec()?;
    let relax = rates.to_rates();
    relax.validate()?;
    let ancilla_relax = cfg.ancilla_rates.map(|r| r.to_rates());
    let model = ModelContext::new(
        register.clone(),
        vec![relax; register.k()],
        ancilla_relax,
        &spec,
        params.omega_l,
    )?;

    Ok(ResolvedExperiment {
        register,
        model,
        params,
        iterations: cfg.iterations,
        trajectories: cfg.trajectories,
        seed,
        estimator: cfg.estimator,
        policy: MeasurementPolicy {
            count_ryd_as_nonzero: cfg.count_rydberg_as_nonzero,
        },
        threads: cfg.threads,
        out: cfg.out.clone(),
    })
}
