//! TOML scenario documents. Every physical quantity carries its unit in the
//! key name; omitted keys take the reference parameter set.

use crate::error::CliError;
use noma_core::channel::{
    dbm_to_watts, rf_path_loss, AccessLink, BackhaulModel, FsoBackhaul, FsoLinkSpec, InterferenceProfile, NomaPair,
    RfBackhaul, REFERENCE_DEST_U, REFERENCE_RELAY_U,
};
use noma_core::mc::{OutageMetric, RateMetricMc};
use noma_core::presets;
use noma_core::scenario::{ScenarioConfig, Thresholds};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub users: Users,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backhaul: Option<Backhaul>,
    #[serde(default)]
    pub interference: Interference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdSection>,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Users {
    pub user1_distance_m: f64,
    pub user2_distance_m: f64,
    pub tx_power_dbm: f64,
    pub s_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub ref_distance_m: f64,
    pub pathloss_exponent: f64,
    pub carrier_hz: f64,
    pub relay_noise_dbm: f64,
}

impl Default for Users {
    fn default() -> Self {
        Self {
            user1_distance_m: 100.0,
            user2_distance_m: 200.0,
            tx_power_dbm: 30.0,
            s_db: 10.0,
            tx_gain_dbi: presets::ACCESS_GAINS_DBI.0,
            rx_gain_dbi: presets::ACCESS_GAINS_DBI.1,
            ref_distance_m: presets::REF_DISTANCE_M,
            pathloss_exponent: presets::PATHLOSS_EXP,
            carrier_hz: presets::CARRIER_HZ,
            relay_noise_dbm: presets::NOISE_DBM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backhaul {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fso: Option<FsoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf: Option<RfSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FsoSection {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub atten_db_per_m: f64,
    pub length_m: f64,
    pub responsivity_a_per_w: f64,
    pub aperture_m: f64,
    pub divergence_rad: f64,
    pub conversion_eta: f64,
    pub relay_gain: f64,
    pub dest_noise_w: f64,
}

impl Default for FsoSection {
    fn default() -> Self {
        Self {
            alpha: 4.0,
            beta: 2.0,
            xi: 2.0,
            atten_db_per_m: presets::CLEAR_AIR_ATTEN,
            length_m: presets::FSO_LENGTH_M,
            responsivity_a_per_w: presets::RESPONSIVITY,
            aperture_m: presets::APERTURE_M,
            divergence_rad: presets::DIVERGENCE_RAD,
            conversion_eta: presets::CONVERSION_ETA,
            relay_gain: 100.0,
            dest_noise_w: presets::FSO_DEST_NOISE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfSection {
    pub length_m: f64,
    pub relay_gain: f64,
    pub rician_k_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_dbm: f64,
}

impl Default for RfSection {
    fn default() -> Self {
        Self {
            length_m: 500.0,
            relay_gain: 1000.0,
            rician_k_db: presets::RICIAN_OMEGA_DB,
            tx_gain_dbi: presets::BACKHAUL_GAINS_DBI.0,
            rx_gain_dbi: presets::BACKHAUL_GAINS_DBI.1,
            noise_dbm: presets::NOISE_DBM,
        }
    }
}

/// Interference at the relay and (RF backhaul only) at the destination.
/// Explicit `relay_w`/`dest_w` lists replace the scaled reference draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Interference {
    pub relay_scale: f64,
    pub dest_scale: f64,
    pub interferer_power_dbm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_w: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dest_w: Option<Vec<f64>>,
    pub jitter_degenerate: bool,
}

impl Default for Interference {
    fn default() -> Self {
        Self {
            relay_scale: 1.0,
            dest_scale: 0.0,
            interferer_power_dbm: 0.0,
            relay_w: None,
            dest_w: None,
            jitter_degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub iterations: u64,
    pub seed: u64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            iterations: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Outage,
    Ergodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub kind: SweepKind,
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<String>>,
    #[serde(default = "yes")]
    pub achievable: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
}

fn yes() -> bool {
    true
}

/// One curve of a figure: a label plus parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    #[serde(flatten)]
    pub overrides: BTreeMap<String, f64>,
}

/// Keys accepted by sweep axes and series overrides.
pub const OVERRIDE_KEYS: [&str; 18] = [
    "tx_power_dbm",
    "s_db",
    "user1_distance_m",
    "user2_distance_m",
    "gamma1",
    "gamma2",
    "gamma_sum",
    "relay_scale",
    "dest_scale",
    "alpha",
    "beta",
    "xi",
    "atten_db_per_m",
    "fso_length_m",
    "fso_relay_gain",
    "rf_length_m",
    "rf_relay_gain",
    "rician_k_db",
];

/// A metric selectable in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Outage(OutageMetric),
    Rate(RateMetricMc),
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Outage(m) => m.name(),
            Metric::Rate(m) => m.name(),
        }
    }

    pub fn all(kind: SweepKind) -> Vec<Metric> {
        match kind {
            SweepKind::Outage => OutageMetric::ALL.iter().copied().map(Metric::Outage).collect(),
            SweepKind::Ergodic => RateMetricMc::ALL.iter().copied().map(Metric::Rate).collect(),
        }
    }

    pub fn parse(kind: SweepKind, name: &str) -> Option<Metric> {
        Self::all(kind).into_iter().find(|m| m.name() == name)
    }
}

/// Derived link-budget quantities shown to the user after loading.
pub type Derived = Vec<(&'static str, f64)>;

fn fso_only<'a>(b: &'a mut Option<Backhaul>, key: &str) -> Result<&'a mut FsoSection, CliError> {
    b.as_mut()
        .and_then(|b| b.fso.as_mut())
        .ok_or_else(|| CliError::schema(format!("`{key}` applies only to [backhaul.fso]")))
}

fn rf_only<'a>(b: &'a mut Option<Backhaul>, key: &str) -> Result<&'a mut RfSection, CliError> {
    b.as_mut()
        .and_then(|b| b.rf.as_mut())
        .ok_or_else(|| CliError::schema(format!("`{key}` applies only to [backhaul.rf]")))
}

fn th(t: &mut Option<ThresholdSection>) -> Result<&mut ThresholdSection, CliError> {
    t.as_mut().ok_or_else(|| CliError::schema("missing section [thresholds]"))
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::schema(e.message().to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn thresholds(&self) -> Result<Thresholds, CliError> {
        let t = self.thresholds.ok_or_else(|| CliError::schema("missing section [thresholds]"))?;
        Ok(Thresholds::new(t.gamma1, t.gamma2, t.gamma_sum)?)
    }

    fn backhaul_section(&self) -> Result<&Backhaul, CliError> {
        let b = self.backhaul.as_ref().ok_or_else(|| CliError::schema("missing section [backhaul]"))?;
        match (&b.fso, &b.rf) {
            (Some(_), None) | (None, Some(_)) => Ok(b),
            _ => Err(CliError::schema("[backhaul] needs exactly one of [backhaul.fso] or [backhaul.rf]")),
        }
    }

    /// Structural checks that need no numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        self.backhaul_section()?;
        self.thresholds()?;
        if self.users.s_db < 0.0 {
            return Err(CliError::schema(format!("[users] s_db = {}: power back-off must be ≥ 0 dB", self.users.s_db)));
        }
        if self.mc.iterations < noma_core::mc::MIN_ITERATIONS {
            return Err(CliError::schema(format!(
                "[mc] iterations must be ≥ {}",
                noma_core::mc::MIN_ITERATIONS
            )));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() || sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::schema("[sweep] values must be a non-empty list of finite numbers"));
            }
            let mut probe = self.clone();
            probe.apply(&sweep.axis, sweep.values[0])?;
            for s in &sweep.series {
                for (k, v) in &s.overrides {
                    probe.clone().apply(k, *v)?;
                }
            }
            for name in sweep.metrics.iter().flatten() {
                if Metric::parse(sweep.kind, name).is_none() {
                    return Err(CliError::schema(format!("[sweep] metrics: unknown metric `{name}`")));
                }
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> Vec<Metric> {
        match &self.sweep {
            None => Vec::new(),
            Some(s) => match &s.metrics {
                None => Metric::all(s.kind),
                Some(names) => names.iter().filter_map(|n| Metric::parse(s.kind, n)).collect(),
            },
        }
    }

    /// Sets one override key.
    pub fn apply(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        match key {
            "tx_power_dbm" => self.users.tx_power_dbm = value,
            "s_db" => {
                if value < 0.0 {
                    return Err(CliError::schema(format!("s_db = {value}: power back-off must be ≥ 0 dB")));
                }
                self.users.s_db = value
            }
            "user1_distance_m" => self.users.user1_distance_m = value,
            "user2_distance_m" => self.users.user2_distance_m = value,
            "gamma1" => th(&mut self.thresholds)?.gamma1 = value,
            "gamma2" => th(&mut self.thresholds)?.gamma2 = value,
            "gamma_sum" => th(&mut self.thresholds)?.gamma_sum = value,
            "relay_scale" => self.interference.relay_scale = value,
            "dest_scale" => self.interference.dest_scale = value,
            "alpha" => fso_only(&mut self.backhaul, key)?.alpha = value,
            "beta" => fso_only(&mut self.backhaul, key)?.beta = value,
            "xi" => fso_only(&mut self.backhaul, key)?.xi = value,
            "atten_db_per_m" => fso_only(&mut self.backhaul, key)?.atten_db_per_m = value,
            "fso_length_m" => fso_only(&mut self.backhaul, key)?.length_m = value,
            "fso_relay_gain" => fso_only(&mut self.backhaul, key)?.relay_gain = value,
            "rf_length_m" => rf_only(&mut self.backhaul, key)?.length_m = value,
            "rf_relay_gain" => rf_only(&mut self.backhaul, key)?.relay_gain = value,
            "rician_k_db" => rf_only(&mut self.backhaul, key)?.rician_k_db = value,
            _ => {
                return Err(CliError::schema(format!(
                    "unknown override key `{key}` (expected one of {})",
                    OVERRIDE_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Builds the validated engine configuration.
    pub fn build(&self) -> Result<ScenarioConfig, CliError> {
        let u = &self.users;
        let link = |distance_m, tx_gain_dbi, rx_gain_dbi| AccessLink {
            distance_m,
            tx_gain_dbi,
            rx_gain_dbi,
            ref_distance_m: u.ref_distance_m,
            pathloss_exp: u.pathloss_exponent,
            carrier_hz: u.carrier_hz,
        };
        if u.s_db < 0.0 {
            return Err(CliError::schema(format!("s_db = {}: power back-off must be ≥ 0 dB", u.s_db)));
        }
        let pair = NomaPair::from_links(
            &link(u.user1_distance_m, u.tx_gain_dbi, u.rx_gain_dbi),
            &link(u.user2_distance_m, u.tx_gain_dbi, u.rx_gain_dbi),
            dbm_to_watts(u.tx_power_dbm),
            u.s_db,
        )?;
        let b = self.backhaul_section()?;
        let backhaul = match (&b.fso, &b.rf) {
            (Some(f), None) => BackhaulModel::Fso(FsoBackhaul::new(FsoLinkSpec {
                alpha: f.alpha,
                beta: f.beta,
                xi: f.xi,
                responsivity: f.responsivity_a_per_w,
                atten_per_m: f.atten_db_per_m,
                length_m: f.length_m,
                aperture_m: f.aperture_m,
                divergence_rad: f.divergence_rad,
                conversion_eta: f.conversion_eta,
                relay_gain: f.relay_gain,
                dest_noise: f.dest_noise_w,
            })?),
            (None, Some(r)) => BackhaulModel::Rf(RfBackhaul::new(
                r.rician_k_db,
                rf_path_loss(&link(r.length_m, r.tx_gain_dbi, r.rx_gain_dbi))?,
                r.relay_gain,
                dbm_to_watts(r.noise_dbm),
            )?),
            _ => unreachable!("checked by backhaul_section"),
        };
        let i = &self.interference;
        let p0 = dbm_to_watts(i.interferer_power_dbm);
        let scaled = |k: f64, u: &[f64]| -> Vec<f64> {
            if k == 0.0 {
                Vec::new()
            } else {
                u.iter().map(|x| k * p0 * pair.l2 * x).collect()
            }
        };
        for (key, k) in [("relay_scale", i.relay_scale), ("dest_scale", i.dest_scale)] {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(CliError::schema(format!("[interference] {key} must be finite and ≥ 0")));
            }
        }
        let relay = i.relay_w.clone().unwrap_or_else(|| scaled(i.relay_scale, &REFERENCE_RELAY_U));
        let dest = match backhaul {
            BackhaulModel::Rf(_) => i.dest_w.clone().unwrap_or_else(|| scaled(i.dest_scale, &REFERENCE_DEST_U)),
            BackhaulModel::Fso(_) => Vec::new(),
        };
        let interference = InterferenceProfile::new(relay, dest, i.jitter_degenerate)?;
        Ok(ScenarioConfig::new(
            pair,
            dbm_to_watts(u.relay_noise_dbm),
            backhaul,
            interference,
            self.thresholds()?,
        )?)
    }
}

/// Link-budget values worth echoing for a built configuration.
pub fn derived_quantities(sc: &ScenarioConfig) -> Derived {
    let mut out = vec![
        ("L1", sc.pair.l1),
        ("L2", sc.pair.l2),
        ("a1", sc.pair.a1),
        ("a2", sc.pair.a2),
        ("tx_power_w", sc.pair.tx_power_w),
        ("relay_noise_w", sc.relay_noise),
    ];
    match &sc.backhaul {
        BackhaulModel::Fso(f) => out.extend([("g_l", f.g_l), ("A0", f.a0), ("C_D", f.c_d)]),
        BackhaulModel::Rf(r) => out.extend([("L_b", r.pathloss), ("C_RF", r.c_rf())]),
    }
    out.push(("relay_interferers", sc.interference.relay().len() as f64));
    out.push(("dest_interferers", sc.dest_terms().len() as f64));
    out
}

/// Reads, validates and builds a scenario file.
pub fn load_scenario(path: &Path) -> Result<(ScenarioFile, ScenarioConfig), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let file = ScenarioFile::from_toml_str(&text)?;
    let config = file.build()?;
    Ok((file, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[backhaul.fso]
[thresholds]
gamma1 = 0.8
gamma2 = 0.4
gamma_sum = 1.2
";

    #[test]
    fn minimal_file_uses_reference_values() {
        let f = ScenarioFile::from_toml_str(MINIMAL).unwrap();
        let sc = f.build().unwrap();
        let d = derived_quantities(&sc);
        let l1 = d.iter().find(|(k, _)| *k == "L1").unwrap().1;
        assert!((l1 - 9.04e-8).abs() < 5e-11);
        assert_eq!(sc.interference.relay().len(), 10);
    }

    #[test]
    fn missing_backhaul_names_the_section() {
        let err = ScenarioFile::from_toml_str("[thresholds]\ngamma1 = 1\ngamma2 = 1\ngamma_sum = 1\n").unwrap_err();
        assert!(err.to_string().contains("[backhaul]"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn two_backhauls_are_rejected() {
        let text = format!("{MINIMAL}\n[backhaul.rf]\n");
        assert!(ScenarioFile::from_toml_str(&text).is_err());
    }

    #[test]
    fn negative_backoff_is_rejected() {
        let text = format!("[users]\ns_db = -3\n{MINIMAL}");
        let err = ScenarioFile::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("s_db"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("[users]\ntx_power_watts = 1\n{MINIMAL}");
        let err = ScenarioFile::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("tx_power_watts"), "{err}");
    }

    #[test]
    fn duplicate_interference_is_rejected_unless_jittered() {
        let base = format!("{MINIMAL}\n[interference]\nrelay_w = [1e-12, 1e-12]\n");
        let err = ScenarioFile::from_toml_str(&base).unwrap().build().unwrap_err();
        assert!(matches!(err, CliError::Core(noma_core::Error::NotDistinct { .. })));
        let jittered = format!("{base}jitter_degenerate = true\n");
        let sc = ScenarioFile::from_toml_str(&jittered).unwrap().build().unwrap();
        assert_ne!(sc.interference.relay()[0], sc.interference.relay()[1]);
    }

    #[test]
    fn overrides_check_backhaul_kind() {
        let mut f = ScenarioFile::from_toml_str(MINIMAL).unwrap();
        f.apply("alpha", 2.5).unwrap();
        assert!(f.apply("rf_length_m", 900.0).is_err());
        assert!(f.apply("bogus", 1.0).is_err());
        assert!(f.apply("s_db", -1.0).is_err());
    }
}
