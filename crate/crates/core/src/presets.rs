//! Reference parameter set for the mixed RF-FSO and RF/RF experiments.

use crate::channel::{
    dbm_to_watts, rf_path_loss, AccessLink, BackhaulModel, FsoBackhaul, FsoLinkSpec, InterferenceProfile, NomaPair,
    RfBackhaul,
};
use crate::error::Result;
use crate::scenario::{ScenarioConfig, Thresholds};

pub const CARRIER_HZ: f64 = 3e9;
pub const REF_DISTANCE_M: f64 = 80.0;
pub const PATHLOSS_EXP: f64 = 3.5;
pub const ACCESS_GAINS_DBI: (f64, f64) = (5.0, 8.0);
pub const BACKHAUL_GAINS_DBI: (f64, f64) = (10.0, 15.0);
pub const NOISE_DBM: f64 = -80.0;
pub const FSO_DEST_NOISE: f64 = 1e-14;
pub const RESPONSIVITY: f64 = 0.5;
pub const CONVERSION_ETA: f64 = 1.0;
pub const APERTURE_M: f64 = 0.1;
pub const DIVERGENCE_RAD: f64 = 2e-3;
pub const FSO_LENGTH_M: f64 = 1200.0;
pub const RICIAN_OMEGA_DB: f64 = 6.0;
pub const INTERFERER_P0_W: f64 = 1e-3;
pub const CLEAR_AIR_ATTEN: f64 = 0.43e-3;

pub fn access_link(distance_m: f64) -> AccessLink {
    AccessLink {
        distance_m,
        tx_gain_dbi: ACCESS_GAINS_DBI.0,
        rx_gain_dbi: ACCESS_GAINS_DBI.1,
        ref_distance_m: REF_DISTANCE_M,
        pathloss_exp: PATHLOSS_EXP,
        carrier_hz: CARRIER_HZ,
    }
}

/// FSO backhaul with the given turbulence, attenuation and relay gain.
pub fn fso_backhaul(atten_per_m: f64, alpha: f64, beta: f64, xi: f64, relay_gain: f64) -> Result<FsoBackhaul> {
    FsoBackhaul::new(FsoLinkSpec {
        alpha,
        beta,
        xi,
        responsivity: RESPONSIVITY,
        atten_per_m,
        length_m: FSO_LENGTH_M,
        aperture_m: APERTURE_M,
        divergence_rad: DIVERGENCE_RAD,
        conversion_eta: CONVERSION_ETA,
        relay_gain,
        dest_noise: FSO_DEST_NOISE,
    })
}

/// RF backhaul whose path loss follows the access-link law with the backhaul antenna gains.
pub fn rf_backhaul(length_m: f64, relay_gain: f64) -> Result<RfBackhaul> {
    let link = AccessLink {
        distance_m: length_m,
        tx_gain_dbi: BACKHAUL_GAINS_DBI.0,
        rx_gain_dbi: BACKHAUL_GAINS_DBI.1,
        ..access_link(length_m)
    };
    RfBackhaul::new(RICIAN_OMEGA_DB, rf_path_loss(&link)?, relay_gain, dbm_to_watts(NOISE_DBM))
}

/// Full scenario with users at (d1, d2) and reference interference scaled by (K_IR, K_ID).
#[allow(clippy::too_many_arguments)]
pub fn scenario(
    d1_m: f64,
    d2_m: f64,
    tx_power_dbm: f64,
    backoff_db: f64,
    backhaul: BackhaulModel,
    k_relay: f64,
    k_dest: f64,
    thresholds: Thresholds,
) -> Result<ScenarioConfig> {
    let pair = NomaPair::from_links(&access_link(d1_m), &access_link(d2_m), dbm_to_watts(tx_power_dbm), backoff_db)?;
    let dest_scale = match backhaul {
        BackhaulModel::Rf(_) => k_dest,
        BackhaulModel::Fso(_) => 0.0,
    };
    let interference = InterferenceProfile::reference(k_relay, dest_scale, INTERFERER_P0_W, pair.l2)?;
    ScenarioConfig::new(pair, dbm_to_watts(NOISE_DBM), backhaul, interference, thresholds)
}

/// Clear-air FSO setup with α = 4, β = 2, ξ = 2, G = 100 and K_IR = 1.
pub fn fso_reference(tx_power_dbm: f64, backoff_db: f64, thresholds: Thresholds) -> Result<ScenarioConfig> {
    let fso = fso_backhaul(CLEAR_AIR_ATTEN, 4.0, 2.0, 2.0, 100.0)?;
    scenario(100.0, 200.0, tx_power_dbm, backoff_db, BackhaulModel::Fso(fso), 1.0, 0.0, thresholds)
}

/// RF/RF setup with d_RD = 500 m, G_b = 1000, K_IR = 1.
pub fn rf_reference(tx_power_dbm: f64, backoff_db: f64, k_dest: f64, thresholds: Thresholds) -> Result<ScenarioConfig> {
    let rf = rf_backhaul(500.0, 1000.0)?;
    scenario(100.0, 200.0, tx_power_dbm, backoff_db, BackhaulModel::Rf(rf), 1.0, k_dest, thresholds)
}
