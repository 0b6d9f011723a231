//! Decibel conversions.

/// dBm to watts: `10^((x - 30) / 10)`.
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// dBW to watts: `10^(x / 10)`.
pub fn dbw_to_w(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

/// Dimensionless ratio from decibels.
pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn w_to_dbw(w: f64) -> f64 {
    10.0 * w.log10()
}
