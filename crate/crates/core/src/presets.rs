//! Named scenarios and the sector-count report derived from a sweep.

use serde::Serialize;

use crate::channel::{
    AntennaModel, Environment, EnvironmentParams, GainPlacement, LosMode, RadioParams,
};
use crate::geometry::{expected_users, Beamwidth, CellGeometry};
use crate::simulation::{ScenarioConfig, SolverChoice, SweepResult};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ScenarioConfig,
    /// Densities studied with this geometry; `config.lambda` is the first.
    pub lambda_options: Vec<f64>,
    /// UAV heights studied with this geometry; `config` uses the first.
    pub height_options: Vec<f64>,
}

/// B = 1 GHz over 30 subcarriers, −174 dBm/Hz noise, 28 GHz carrier, 8 dB Rician.
pub fn default_radio() -> RadioParams {
    RadioParams {
        bandwidth_hz: 1e9,
        num_subcarriers: 30,
        noise_psd_dbm_per_hz: -174.0,
        carrier_hz: 28e9,
        rician_k_db: 8.0,
        rx_gain: 1.0,
        shadowing: true,
    }
}

/// Divisors of 360 between 2° and 120°.
pub fn default_theta_grid() -> Vec<Beamwidth> {
    Beamwidth::divisors_between(2, 120)
}

fn base(radius_m: f64, uav_height_m: f64, lambda: f64, env: Environment) -> ScenarioConfig {
    ScenarioConfig {
        geometry: CellGeometry {
            radius_m,
            uav_height_m,
        },
        lambda,
        env: EnvironmentParams::repo_default(env),
        radio: default_radio(),
        total_power_w: 10.0,
        min_rate_bps: 1e9,
        max_rate_bps: 50e9,
        theta_list: default_theta_grid(),
        mc_trials: 500,
        master_seed: 1,
        solver: SolverChoice::Auto,
        los_mode: LosMode::Blend,
        gain_placement: GainPlacement::Noise,
    }
}

pub fn catalog() -> Vec<Preset> {
    vec![
        Preset {
            name: "rural",
            description: "sub-urban cell, R=100 m, h=100 m, low user density",
            config: base(100.0, 100.0, 0.0005, Environment::SubUrban),
            lambda_options: vec![0.0005, 0.0008, 0.001, 0.002],
            height_options: vec![100.0],
        },
        Preset {
            name: "urban",
            description: "urban cell, R=10 m, h=20 m, high user density",
            config: base(10.0, 20.0, 0.05, Environment::Urban),
            lambda_options: vec![0.05, 0.08, 0.1],
            height_options: vec![20.0],
        },
        Preset {
            name: "height-sweep",
            description: "sub-urban cell, R=100 m, λ=0.0005, UAV height varied",
            config: base(100.0, 10.0, 0.0005, Environment::SubUrban),
            lambda_options: vec![0.0005],
            height_options: vec![10.0, 50.0, 100.0, 200.0],
        },
        Preset {
            name: "dense-urban",
            description: "config stub: urban geometry with dense-urban LoS coefficients",
            config: base(10.0, 20.0, 0.05, Environment::DenseUrban),
            lambda_options: vec![0.05],
            height_options: vec![20.0],
        },
        Preset {
            name: "high-rise-urban",
            description: "config stub: urban geometry with high-rise LoS coefficients",
            config: base(10.0, 20.0, 0.05, Environment::HighRiseUrban),
            lambda_options: vec![0.05],
            height_options: vec![20.0],
        },
    ]
}

pub fn preset_names() -> Vec<String> {
    catalog().iter().map(|p| p.name.to_string()).collect()
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    catalog()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| p.config)
        .ok_or_else(|| Error::UnknownPreset {
            name: name.to_string(),
            available: preset_names(),
        })
}

/// Quantities used to compare deployments at their optimal beamwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorCountReport {
    pub theta_opt: Beamwidth,
    /// `S = 360 / θ_opt`.
    pub sectors: usize,
    /// `M = π R² λ`.
    pub expected_users: f64,
    /// Array size used by the channel model, `ceil(2 / θ_opt)`.
    pub elements: u32,
    /// Unrounded `2 / θ_opt` (θ in radians).
    pub elements_exact: f64,
}

pub fn sector_count_report(sweep: &SweepResult, lambda: f64, radius_m: f64) -> Result<SectorCountReport> {
    report_for(sweep.theta_opt, lambda, radius_m)
}

pub fn report_for(theta_opt: Beamwidth, lambda: f64, radius_m: f64) -> Result<SectorCountReport> {
    Ok(SectorCountReport {
        theta_opt,
        sectors: theta_opt.sectors(),
        expected_users: expected_users(lambda, radius_m)?,
        elements: AntennaModel::for_beamwidth(theta_opt).num_elements,
        elements_exact: 2.0 / theta_opt.radians(),
    })
}
