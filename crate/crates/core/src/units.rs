//! Decibel and power-unit conversions. Every dB <-> linear conversion in the
//! crate goes through here.

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Power spectral density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watt_per_hz(dbm_per_hz: f64) -> f64 {
    db_to_linear(dbm_per_hz - 30.0)
}

/// Linear gain of a path whose loss is `loss_db`, i.e. `10^(-loss_db/10)`.
pub fn path_gain_from_loss_db(loss_db: f64) -> f64 {
    db_to_linear(-loss_db)
}
