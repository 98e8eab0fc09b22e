//! Air-to-ground millimeter-wave link model.
//!
//! The per-subcarrier SNR coefficient of a user blends a LoS and an NLoS
//! branch by the elevation-dependent LoS probability:
//!
//! ```text
//! γ[n] = A · ( |h_LoS[n]|² g_LoS P_r + |h_NLoS[n]|² g_NLoS (1 − P_r) ) / (N0 · B / Nc)
//! ```
//!
//! where `g = 10^(−PL/10)` is the linear path gain and `A` the antenna factor
//! (see [`GainPlacement`]). `P·γ` is the received SNR for transmit power `P`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Beamwidth, UserPosition};
use crate::units::{db_to_linear, dbm_per_hz_to_watt_per_hz, path_gain_from_loss_db};
use crate::{Error, Result};

/// LoS shadowing standard deviation, dB (variance 33.64 dB²).
pub const LOS_SHADOWING_STD_DB: f64 = 5.8;
/// NLoS shadowing standard deviation, dB (variance 75.69 dB²).
pub const NLOS_SHADOWING_STD_DB: f64 = 8.7;
/// Shortest slant distance accepted by the path-loss fits.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Propagation environment of the LoS-probability fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Environment {
    SubUrban,
    Urban,
    DenseUrban,
    HighRiseUrban,
}

impl Environment {
    pub const ALL: [Environment; 4] = [
        Environment::SubUrban,
        Environment::Urban,
        Environment::DenseUrban,
        Environment::HighRiseUrban,
    ];

    /// Repository default coefficients `[α1, α2, α3, α4]` (ψ in radians).
    ///
    /// These are NOT published fit values. They give a LoS probability that
    /// rises with elevation, from under 10% at ψ ≈ 27° to over 95% overhead in
    /// the sub-urban case, with the denser environments shifted towards
    /// blockage. Supply measured coefficients through the configuration for
    /// quantitative work.
    pub fn default_alphas(self) -> [f64; 4] {
        match self {
            Environment::SubUrban => [1.0, -2.0, -4.5, 5.0],
            Environment::Urban => [1.0, -2.0, -4.5, 6.0],
            Environment::DenseUrban => [1.0, -2.0, -4.5, 7.0],
            Environment::HighRiseUrban => [1.0, -2.0, -4.5, 8.0],
        }
    }
}

/// Coefficients of the LoS-probability sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    pub label: Environment,
    pub alphas: [f64; 4],
}

impl EnvironmentParams {
    pub fn repo_default(label: Environment) -> Self {
        EnvironmentParams {
            label,
            alphas: label.default_alphas(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.iter().all(|a| a.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("env.alphas", "coefficients must be finite"))
        }
    }
}

/// Radio parameters shared by all sectors. Human-facing units (dB, dBm/Hz)
/// are kept as configured; linear values come from the accessors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub noise_psd_dbm_per_hz: f64,
    pub carrier_hz: f64,
    pub rician_k_db: f64,
    pub rx_gain: f64,
    pub shadowing: bool,
}

impl RadioParams {
    pub fn subcarrier_bw(&self) -> f64 {
        self.bandwidth_hz / self.num_subcarriers as f64
    }

    pub fn noise_psd_watt_per_hz(&self) -> f64 {
        dbm_per_hz_to_watt_per_hz(self.noise_psd_dbm_per_hz)
    }

    /// `N0 · B / Nc`, watts.
    pub fn noise_power_per_subcarrier(&self) -> f64 {
        self.noise_psd_watt_per_hz() * self.subcarrier_bw()
    }

    pub fn rician_k_linear(&self) -> f64 {
        db_to_linear(self.rician_k_db)
    }

    pub fn validate(&self) -> Result<()> {
        crate::geometry::positive("radio.bandwidth_hz", self.bandwidth_hz)?;
        if self.num_subcarriers == 0 {
            return Err(Error::invalid("radio.num_subcarriers", "must be >= 1"));
        }
        if !self.noise_psd_dbm_per_hz.is_finite() {
            return Err(Error::invalid("radio.noise_psd_dbm_per_hz", "must be finite"));
        }
        crate::geometry::positive("radio.carrier_hz", self.carrier_hz)?;
        if !self.rician_k_db.is_finite() {
            return Err(Error::invalid("radio.rician_k_db", "must be finite"));
        }
        crate::geometry::positive("radio.rx_gain", self.rx_gain)
    }
}

/// Sector antenna: an array of `N = ceil(2/θ)` elements with gain `G = N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaModel {
    pub theta: Beamwidth,
    pub num_elements: u32,
    pub tx_gain: f64,
}

impl AntennaModel {
    pub fn for_beamwidth(theta: Beamwidth) -> Self {
        let num_elements = (2.0 / theta.radians()).ceil() as u32;
        AntennaModel {
            theta,
            num_elements,
            tx_gain: f64::from(num_elements),
        }
    }
}

/// Where the antenna gains `G·G_r` enter the SNR coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainPlacement {
    /// `G·G_r` multiplies the noise power in the denominator.
    #[default]
    Noise,
    /// `G·G_r` multiplies the received signal.
    Signal,
}

/// How the LoS and NLoS branches are combined per link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LosMode {
    /// Probability-weighted blend of both branches.
    #[default]
    Blend,
    /// One Bernoulli LoS/NLoS state per link.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelOptions {
    pub los_mode: LosMode,
    pub gain_placement: GainPlacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Los,
    Nlos,
}

/// SNR coefficients `γ[n][k]` of one sector, in 1/W.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    subcarriers: usize,
    users: usize,
    // user-major: data[k * subcarriers + n]
    data: Vec<f64>,
}

impl LinkGains {
    /// Builds the matrix from one coefficient vector per user.
    pub fn from_user_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let users = columns.len();
        let subcarriers = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(users * subcarriers);
        for (k, col) in columns.iter().enumerate() {
            if col.len() != subcarriers {
                return Err(Error::invalid(
                    "gains",
                    format!("user {k} has {} subcarriers, expected {subcarriers}", col.len()),
                ));
            }
            data.extend_from_slice(col);
        }
        Self::from_parts(subcarriers, users, data)
    }

    /// Builds the matrix from subcarrier-major rows (`rows[n][k]`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let subcarriers = rows.len();
        let users = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != users) {
            return Err(Error::invalid("gains", "ragged gain rows"));
        }
        let columns: Vec<Vec<f64>> = (0..users)
            .map(|k| rows.iter().map(|r| r[k]).collect())
            .collect();
        if users == 0 {
            return Self::from_parts(subcarriers, 0, Vec::new());
        }
        Self::from_user_columns(&columns)
    }

    /// A sector with no users still owns its subcarriers.
    pub fn empty(subcarriers: usize) -> Self {
        LinkGains {
            subcarriers,
            users: 0,
            data: Vec::new(),
        }
    }

    fn from_parts(subcarriers: usize, users: usize, data: Vec<f64>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::invalid(
                "gains",
                format!("every coefficient must be finite and > 0, found {bad}"),
            ));
        }
        Ok(LinkGains {
            subcarriers,
            users,
            data,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.data[k * self.subcarriers + n]
    }

    pub fn user_column(&self, k: usize) -> &[f64] {
        &self.data[k * self.subcarriers..(k + 1) * self.subcarriers]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_parts(
            self.subcarriers,
            self.users,
            self.data.iter().map(|g| g * factor).collect(),
        )
    }
}

/// Elevation angle `asin(h / l)` of the UAV seen from the user.
pub fn elevation_angle(height_m: f64, slant_m: f64) -> Result<f64> {
    if !(height_m > 0.0 && height_m <= slant_m) {
        return Err(Error::invalid(
            "slant distance",
            format!("need 0 < h <= l, got h={height_m}, l={slant_m}"),
        ));
    }
    Ok((height_m / slant_m).asin())
}

/// LoS probability `1 / (1 + exp(α1ψ³ + α2ψ² + α3ψ + α4))`.
pub fn los_probability(psi: f64, env: &EnvironmentParams) -> f64 {
    let [a1, a2, a3, a4] = env.alphas;
    let exponent = ((a1 * psi + a2) * psi + a3) * psi + a4;
    1.0 / (1.0 + exponent.exp())
}

pub fn los_path_loss_mean_db(l: f64) -> f64 {
    61.4 + 20.0 * l.log10()
}

pub fn nlos_path_loss_mean_db(l: f64) -> f64 {
    72.0 + 29.2 * l.log10()
}

fn check_link_distance(l: f64) -> Result<()> {
    if l >= MIN_LINK_DISTANCE_M && l.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "slant distance",
            format!("path-loss model needs l >= {MIN_LINK_DISTANCE_M} m, got {l}"),
        ))
    }
}

fn shadowing_db<R: Rng + ?Sized>(std_db: f64, rng: &mut R) -> f64 {
    Normal::new(0.0, std_db).expect("positive std").sample(rng)
}

/// LoS path loss in dB, with log-normal shadowing when `shadowing` is set.
pub fn path_loss_los_db<R: Rng + ?Sized>(l: f64, rng: &mut R, shadowing: bool) -> Result<f64> {
    check_link_distance(l)?;
    let x = if shadowing {
        shadowing_db(LOS_SHADOWING_STD_DB, rng)
    } else {
        0.0
    };
    Ok(los_path_loss_mean_db(l) + x)
}

/// NLoS path loss in dB, with log-normal shadowing when `shadowing` is set.
pub fn path_loss_nlos_db<R: Rng + ?Sized>(l: f64, rng: &mut R, shadowing: bool) -> Result<f64> {
    check_link_distance(l)?;
    let x = if shadowing {
        shadowing_db(NLOS_SHADOWING_STD_DB, rng)
    } else {
        0.0
    };
    Ok(nlos_path_loss_mean_db(l) + x)
}

/// `|h|²` of a unit-power fading coefficient: Rician with factor `rician_k`
/// for LoS, Rayleigh for NLoS.
pub fn small_scale_power_gain<R: Rng + ?Sized>(kind: PathKind, rician_k: f64, rng: &mut R) -> f64 {
    match kind {
        PathKind::Los => {
            let los = (rician_k / (rician_k + 1.0)).sqrt();
            let scatter = (0.5 / (rician_k + 1.0)).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let re = los + scatter * re;
            let im = scatter * im;
            re * re + im * im
        }
        PathKind::Nlos => rng.sample(Exp1),
    }
}

/// Per-subcarrier SNR coefficients of one user.
///
/// Shadowing is drawn once for the link; fading is redrawn on every subcarrier.
pub fn snr_coefficient<R: Rng + ?Sized>(
    user: &UserPosition,
    env: &EnvironmentParams,
    radio: &RadioParams,
    antenna: &AntennaModel,
    options: ChannelOptions,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let g_los = path_gain_from_loss_db(path_loss_los_db(user.l, rng, radio.shadowing)?);
    let g_nlos = path_gain_from_loss_db(path_loss_nlos_db(user.l, rng, radio.shadowing)?);
    let p_los = los_probability(user.psi, env);
    let (w_los, w_nlos) = match options.los_mode {
        LosMode::Blend => (p_los, 1.0 - p_los),
        LosMode::Bernoulli => {
            if rng.random::<f64>() < p_los {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
    };
    let antenna_gain = antenna.tx_gain * radio.rx_gain;
    let scale = match options.gain_placement {
        GainPlacement::Noise => 1.0 / (radio.noise_power_per_subcarrier() * antenna_gain),
        GainPlacement::Signal => antenna_gain / radio.noise_power_per_subcarrier(),
    };
    let k = radio.rician_k_linear();
    let gains = (0..radio.num_subcarriers)
        .map(|_| {
            let h_los = small_scale_power_gain(PathKind::Los, k, rng);
            let h_nlos = small_scale_power_gain(PathKind::Nlos, k, rng);
            let g = scale * (h_los * g_los * w_los + h_nlos * g_nlos * w_nlos);
            // A fading draw of exactly zero is a probability-zero event.
            g.max(f64::MIN_POSITIVE)
        })
        .collect();
    Ok(gains)
}
