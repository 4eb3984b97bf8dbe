//! Link budget, power allocation, backhaul models and channel samplers.

use crate::error::{Error, Result};
use crate::specfun::{GgPointingLaw, MeijerGFsoParams, RicianPower};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use std::f64::consts::PI;
use std::sync::Arc;

pub const SPEED_OF_LIGHT: f64 = 3e8;

/// Relative gap below which two interference terms count as equal.
pub const DISTINCT_REL_GAP: f64 = 1e-9;

/// Relay-side uniform draws used by the reference experiments.
pub const REFERENCE_RELAY_U: [f64; 10] = [
    0.6957, 0.6279, 0.4504, 0.4736, 0.9497, 0.0835, 0.2798, 0.4470, 0.5876, 0.8776,
];

/// Destination-side uniform draws used by the reference experiments.
pub const REFERENCE_DEST_U: [f64; 10] = [
    0.5259, 0.9635, 0.5688, 0.2584, 0.2959, 0.7439, 0.9797, 0.3491, 0.8371, 0.5587,
];

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

fn require(key: &str, ok: bool, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(key, constraint))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessLink {
    pub distance_m: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub ref_distance_m: f64,
    pub pathloss_exp: f64,
    pub carrier_hz: f64,
}

impl AccessLink {
    pub fn validate(&self) -> Result<()> {
        require("ref_distance_m", self.ref_distance_m > 0.0, "must be > 0")?;
        require("pathloss_exp", self.pathloss_exp > 2.0, "must be > 2")?;
        require("carrier_hz", self.carrier_hz > 0.0, "must be > 0")?;
        require("tx_gain_dbi", self.tx_gain_dbi.is_finite(), "must be finite")?;
        require("rx_gain_dbi", self.rx_gain_dbi.is_finite(), "must be finite")?;
        if !(self.distance_m >= self.ref_distance_m) {
            return Err(Error::domain(
                "rf_path_loss",
                format!(
                    "distance {} m is inside the reference distance {} m",
                    self.distance_m, self.ref_distance_m
                ),
            ));
        }
        Ok(())
    }
}

/// L = G_t·G_r·(λ/(4π d_ref))²·(d_ref/d)^ν.
pub fn rf_path_loss(link: &AccessLink) -> Result<f64> {
    link.validate()?;
    let lambda = SPEED_OF_LIGHT / link.carrier_hz;
    let gains = db_to_linear(link.tx_gain_dbi + link.rx_gain_dbi);
    let far_field = (lambda / (4.0 * PI * link.ref_distance_m)).powi(2);
    Ok(gains * far_field * (link.ref_distance_m / link.distance_m).powf(link.pathloss_exp))
}

/// g_l = ρ·10^{−κd/10}.
pub fn fso_path_loss(responsivity: f64, atten_per_m: f64, length_m: f64) -> Result<f64> {
    require("responsivity", responsivity > 0.0, "must be > 0")?;
    require("atten_per_m", atten_per_m >= 0.0, "must be ≥ 0")?;
    require("length_m", length_m > 0.0, "must be > 0")?;
    Ok(responsivity * 10f64.powf(-atten_per_m * length_m / 10.0))
}

/// A₀ = erf(√π·r/(√2·φ·d))².
pub fn geometric_loss_a0(aperture_m: f64, divergence_rad: f64, length_m: f64) -> Result<f64> {
    require("aperture_m", aperture_m > 0.0, "must be > 0")?;
    require("divergence_rad", divergence_rad > 0.0, "must be > 0")?;
    require("length_m", length_m > 0.0, "must be > 0")?;
    let v = PI.sqrt() * aperture_m / (2f64.sqrt() * divergence_rad * length_m);
    Ok(statrs::function::erf::erf(v).powi(2))
}

/// (a₁, a₂) with a₁L₁ = a₂L₂·10^{s/10}.
pub fn power_allocation(l1: f64, l2: f64, s_db: f64) -> Result<(f64, f64)> {
    require("L2", l2 > 0.0, "path-loss gain must be > 0")?;
    if l1 < l2 {
        return Err(Error::validation(
            "users",
            format!("user 1 must have the larger path-loss gain (L1 = {l1:e} < L2 = {l2:e})"),
        ));
    }
    require("s_db", s_db >= 0.0, "power back-off must be ≥ 0 dB")?;
    let t = db_to_linear(s_db);
    if t.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let a1 = l2 * t / (l1 + l2 * t);
    Ok((a1, 1.0 - a1))
}

/// Two-user uplink NOMA pair after power allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaPair {
    pub l1: f64,
    pub l2: f64,
    pub tx_power_w: f64,
    pub backoff_db: f64,
    pub a1: f64,
    pub a2: f64,
}

impl NomaPair {
    pub fn new(l1: f64, l2: f64, tx_power_w: f64, backoff_db: f64) -> Result<Self> {
        require("tx_power", tx_power_w > 0.0 && tx_power_w.is_finite(), "must be finite and > 0")?;
        let (a1, a2) = power_allocation(l1, l2, backoff_db)?;
        Ok(Self {
            l1,
            l2,
            tx_power_w,
            backoff_db,
            a1,
            a2,
        })
    }

    pub fn from_links(user1: &AccessLink, user2: &AccessLink, tx_power_w: f64, backoff_db: f64) -> Result<Self> {
        Self::new(rf_path_loss(user1)?, rf_path_loss(user2)?, tx_power_w, backoff_db)
    }

    /// The same pair with the user roles exchanged (L₁ ↔ L₂, s → −s). The
    /// result deliberately bypasses the ordering checks of [`NomaPair::new`].
    pub fn mirrored(&self) -> Self {
        Self {
            l1: self.l2,
            l2: self.l1,
            tx_power_w: self.tx_power_w,
            backoff_db: -self.backoff_db,
            a1: self.a2,
            a2: self.a1,
        }
    }

    /// 10^{s/10}, the received-power ratio a₁L₁/(a₂L₂).
    pub fn ratio(&self) -> f64 {
        db_to_linear(self.backoff_db)
    }

    /// a₁L₁P for the allocation that would hold at power ratio `t` = 10^{s/10}.
    pub fn q1_at_ratio(&self, t: f64) -> f64 {
        let a1 = self.l2 * t / (self.l1 + self.l2 * t);
        a1 * self.l1 * self.tx_power_w
    }

    /// Mean received power of user 1, a₁L₁P.
    pub fn q1(&self) -> f64 {
        self.a1 * self.l1 * self.tx_power_w
    }

    /// Mean received power of user 2, a₂L₂P.
    pub fn q2(&self) -> f64 {
        self.a2 * self.l2 * self.tx_power_w
    }
}

/// Physical FSO backhaul description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoLinkSpec {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub responsivity: f64,
    pub atten_per_m: f64,
    pub length_m: f64,
    pub aperture_m: f64,
    pub divergence_rad: f64,
    pub conversion_eta: f64,
    pub relay_gain: f64,
    pub dest_noise: f64,
}

#[derive(Debug, Clone)]
pub struct FsoBackhaul {
    pub spec: FsoLinkSpec,
    pub g_l: f64,
    pub a0: f64,
    /// C_D = σ²_D/(η²g_l²G²).
    pub c_d: f64,
    law: Arc<GgPointingLaw>,
}

impl FsoBackhaul {
    pub fn new(spec: FsoLinkSpec) -> Result<Self> {
        let g_l = fso_path_loss(spec.responsivity, spec.atten_per_m, spec.length_m)?;
        let a0 = geometric_loss_a0(spec.aperture_m, spec.divergence_rad, spec.length_m)?;
        require("conversion_eta", spec.conversion_eta > 0.0, "must be > 0")?;
        require("relay_gain", spec.relay_gain > 0.0, "must be > 0")?;
        require("dest_noise", spec.dest_noise >= 0.0, "must be ≥ 0")?;
        let params = MeijerGFsoParams::new(spec.alpha, spec.beta, spec.xi, a0)?;
        let c_d = spec.dest_noise / (spec.conversion_eta * g_l * spec.relay_gain).powi(2);
        Ok(Self {
            spec,
            g_l,
            a0,
            c_d,
            law: Arc::new(GgPointingLaw::new(params)),
        })
    }

    pub fn params(&self) -> MeijerGFsoParams {
        self.law.params()
    }

    /// Shared, memoising distribution of g̃.
    pub fn law(&self) -> &GgPointingLaw {
        &self.law
    }

    /// g̃ = A₀U^{1/ξ²}·Gamma(α, 1/α)·Gamma(β, 1/β).
    pub fn sample_gain<R: Rng + ?Sized>(&self, rng: &mut R, sampler: &FsoSampler) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let gp = self.a0 * u.powf(sampler.inv_xi2);
        gp * sampler.large.sample(rng) * sampler.small.sample(rng)
    }

    pub fn sampler(&self) -> FsoSampler {
        let MeijerGFsoParams { alpha, beta, xi, .. } = self.params();
        FsoSampler {
            large: Gamma::new(alpha, 1.0 / alpha).expect("validated shape"),
            small: Gamma::new(beta, 1.0 / beta).expect("validated shape"),
            inv_xi2: 1.0 / (xi * xi),
        }
    }
}

/// Pre-built turbulence variate generators.
#[derive(Debug, Clone, Copy)]
pub struct FsoSampler {
    large: Gamma<f64>,
    small: Gamma<f64>,
    inv_xi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfBackhaul {
    pub rician: RicianPower,
    pub pathloss: f64,
    pub relay_gain: f64,
    pub noise: f64,
}

impl RfBackhaul {
    pub fn new(omega_db: f64, pathloss: f64, relay_gain: f64, noise: f64) -> Result<Self> {
        require("pathloss", pathloss > 0.0, "must be > 0")?;
        require("relay_gain", relay_gain > 0.0, "must be > 0")?;
        require("noise_w", noise >= 0.0, "must be ≥ 0")?;
        Ok(Self {
            rician: RicianPower::from_db(omega_db)?,
            pathloss,
            relay_gain,
            noise,
        })
    }

    /// L_b·G_b², the end-to-end gain multiplying κ_b.
    pub fn amplification(&self) -> f64 {
        self.pathloss * self.relay_gain * self.relay_gain
    }

    /// C_D^RF = N₀/(L_bG_b²).
    pub fn c_rf(&self) -> f64 {
        self.noise / self.amplification()
    }

    /// κ_b = |√(Ω/(1+Ω)) + CN(0, 1/(1+Ω))|².
    pub fn sample_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let o = self.rician.omega();
        let los = (o / (1.0 + o)).sqrt();
        let sd = (0.5 / (1.0 + o)).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        (los + sd * re).powi(2) + (sd * im).powi(2)
    }
}

#[derive(Debug, Clone)]
pub enum BackhaulModel {
    Fso(FsoBackhaul),
    Rf(RfBackhaul),
}

/// Interference powers L'_k p'_k at the relay and L''_j p''_j at the destination.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterferenceProfile {
    relay: Vec<f64>,
    dest: Vec<f64>,
}

fn check_list(name: &'static str, terms: &mut [f64], jitter: bool) -> Result<()> {
    for (i, &v) in terms.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::validation(format!("{name}[{i}]"), "interference power must be finite and > 0"));
        }
    }
    for j in 1..terms.len() {
        let mut step = 0;
        loop {
            let clash = (0..j).find(|&i| relative_gap(terms[i], terms[j]) < DISTINCT_REL_GAP);
            match clash {
                None => break,
                Some(i) if !jitter => {
                    return Err(Error::NotDistinct {
                        list: name,
                        first: i,
                        second: j,
                    })
                }
                Some(_) => {
                    step += 1;
                    terms[j] *= 1.0 + 2.0 * DISTINCT_REL_GAP;
                    debug_assert!(step < 1000);
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

impl InterferenceProfile {
    /// Validates positivity and pairwise distinctness; with `jitter` set, near-equal
    /// terms are nudged apart instead of rejected.
    pub fn new(mut relay: Vec<f64>, mut dest: Vec<f64>, jitter: bool) -> Result<Self> {
        check_list("relay", &mut relay, jitter)?;
        check_list("dest", &mut dest, jitter)?;
        Ok(Self { relay, dest })
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// K_{I,R}·P₀·L₂·u' and K_{I,D}·P₀·L₂·u'' over the reference draws; a zero
    /// scale yields an empty list.
    pub fn reference(k_relay: f64, k_dest: f64, p0_w: f64, l2: f64) -> Result<Self> {
        let scaled = |k: f64, u: &[f64]| -> Vec<f64> {
            if k == 0.0 {
                Vec::new()
            } else {
                u.iter().map(|x| k * p0_w * l2 * x).collect()
            }
        };
        Self::new(scaled(k_relay, &REFERENCE_RELAY_U), scaled(k_dest, &REFERENCE_DEST_U), false)
    }

    pub fn relay(&self) -> &[f64] {
        &self.relay
    }

    pub fn dest(&self) -> &[f64] {
        &self.dest
    }
}

/// One channel realization. Buffers are reused across draws.
#[derive(Debug, Clone, Default)]
pub struct ChannelDraw {
    pub h1: f64,
    pub h2: f64,
    pub relay: Vec<f64>,
    pub dest: Vec<f64>,
    /// g̃ for FSO or κ_b for RF.
    pub backhaul: f64,
}

/// Caller-owned sampler for one scenario.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    backhaul: BackhaulSampler,
    n_relay: usize,
    n_dest: usize,
}

#[derive(Debug, Clone)]
enum BackhaulSampler {
    Fso(FsoBackhaul, FsoSampler),
    Rf(RfBackhaul),
}

impl ChannelSampler {
    pub fn new(backhaul: &BackhaulModel, interference: &InterferenceProfile) -> Self {
        let backhaul = match backhaul {
            BackhaulModel::Fso(f) => BackhaulSampler::Fso(f.clone(), f.sampler()),
            BackhaulModel::Rf(r) => BackhaulSampler::Rf(*r),
        };
        let n_dest = match backhaul {
            BackhaulSampler::Fso(..) => 0,
            BackhaulSampler::Rf(_) => interference.dest().len(),
        };
        Self {
            backhaul,
            n_relay: interference.relay().len(),
            n_dest,
        }
    }

    /// Fills `draw` with |h̃₁|², |h̃₂|², the interferer fades and the backhaul gain.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, draw: &mut ChannelDraw) {
        draw.h1 = Exp1.sample(rng);
        draw.h2 = Exp1.sample(rng);
        draw.relay.clear();
        draw.relay.extend((0..self.n_relay).map(|_| -> f64 { Exp1.sample(rng) }));
        draw.dest.clear();
        draw.dest.extend((0..self.n_dest).map(|_| -> f64 { Exp1.sample(rng) }));
        draw.backhaul = match &self.backhaul {
            BackhaulSampler::Fso(f, s) => f.sample_gain(rng, s),
            BackhaulSampler::Rf(r) => r.sample_gain(rng),
        };
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        let mut d = ChannelDraw::default();
        self.sample_into(rng, &mut d);
        d
    }
}
