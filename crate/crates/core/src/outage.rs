//! Closed-form outage probabilities for the dynamic-order uplink NOMA pair.
//!
//! Every expression reduces to the Laplace transform E[exp(−b·D)] of the
//! effective noise D = Σₖ ℓₖ|h̃'ₖ|² + σ²_R + D_bh, where D_bh is C_D/g̃² for an
//! FSO backhaul and (N₀ + Σⱼ ℓ''ⱼ|h̃''ⱼ|²)/(L_bG_b²κ_b) for an RF backhaul.

use crate::channel::{db_to_linear, BackhaulModel, RfBackhaul};
pub use crate::diagnostics::{Diagnostic, Evaluated};
use crate::error::{Error, Result};
use crate::mc::{simulate_outage, McEstimate, McRun, OutageMetric};
use crate::quad::Tolerance;
use crate::scenario::ScenarioConfig;
use crate::specfun::{incomplete_g_expectation, IncompleteGArgs};
use std::cell::RefCell;
use std::collections::HashMap;

/// Half-width of the symmetric back-off perturbation used at s = 0.
pub const SYMMETRIC_DELTA_DB: f64 = 1e-3;

/// Excursions outside [0, 1] larger than this are reported.
pub const CLAMP_REPORT: f64 = 1e-12;

/// Largest tolerated cancellation factor in the partial-fraction sum.
pub const PARTIAL_FRACTION_MAX_CONDITION: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackhaulExpectationKind {
    FsoCalG,
    RfNoDestInterference,
    RfWithDestInterference,
}

impl BackhaulExpectationKind {
    pub fn of(backhaul: &BackhaulModel, dest_terms: &[f64]) -> Self {
        match backhaul {
            BackhaulModel::Fso(_) => Self::FsoCalG,
            BackhaulModel::Rf(_) if dest_terms.is_empty() => Self::RfNoDestInterference,
            BackhaulModel::Rf(_) => Self::RfWithDestInterference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackhaulPath {
    Exact,
    CalG,
    RicianSeries,
    PartialFraction,
    /// Partial fractions were ill-conditioned; direct quadrature over κ_b was used.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackhaulValue {
    pub value: f64,
    pub path: BackhaulPath,
    /// Σ|terms| / |Σ terms| of the partial-fraction sum, when it was formed.
    pub condition: Option<f64>,
}

/// How the user outage combines the decoding events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UserOutageForm {
    /// Exact joint probability of the first- and second-decoded successes.
    #[default]
    Joint,
    /// Composition through the conditional-independence product.
    Product,
}

/// (P(π₁), P(π₂)) for back-off s in dB.
pub fn decode_order_prob(s_db: f64) -> (f64, f64) {
    let p1 = 1.0 / (1.0 + db_to_linear(-s_db));
    (p1, 1.0 - p1)
}

/// (1 + γ)² − 1, the per-slot threshold of equal-time OMA.
pub fn oma_threshold(gamma: f64) -> f64 {
    (1.0 + gamma).powi(2) - 1.0
}

/// Closed-form counterpart of a simulated outage metric; `None` for the OMA
/// baselines, which have no closed form.
pub fn closed_form_for(sc: &ScenarioConfig, metric: OutageMetric) -> Result<Option<Evaluated>> {
    let th = sc.thresholds;
    let plain = |v: f64| {
        Some(Evaluated {
            value: v,
            diagnostics: Vec::new(),
        })
    };
    Ok(match metric {
        OutageMetric::User1 => Some(outage_user(sc, 1)?),
        OutageMetric::User2 => Some(outage_user(sc, 2)?),
        OutageMetric::Sum => Some(outage_sum(sc)?),
        OutageMetric::U1FirstJoint => plain(joint_u1_first(sc, th.gamma1)?),
        OutageMetric::U2FirstJoint => plain(joint_u2_first(sc, th.gamma2)?),
        OutageMetric::U1SecondCoverage => plain(joint_cov_second_decoded(sc, 1, th.gamma1)?),
        OutageMetric::U2SecondCoverage => plain(joint_cov_second_decoded(sc, 2, th.gamma2)?),
        OutageMetric::OrderPi1 => plain(decode_order_prob(sc.pair.backoff_db).0),
        OutageMetric::OmaUser1 | OutageMetric::OmaUser2 | OutageMetric::OmaSum => None,
    })
}

/// OMA baseline: per-slot thresholds and Monte Carlo outage estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmaReference {
    pub thresholds: [f64; 2],
    pub user1: McEstimate,
    pub user2: McEstimate,
    pub sum: McEstimate,
}

/// OMA with equal time split and full power per slot, simulated on the
/// same channel draws as the NOMA pair.
pub fn oma_reference(sc: &ScenarioConfig, iterations: u64, seed: u64) -> Result<OmaReference> {
    let th = sc.thresholds;
    let report = simulate_outage(&McRun::new(sc.clone(), iterations, seed)?);
    Ok(OmaReference {
        thresholds: [oma_threshold(th.gamma1), oma_threshold(th.gamma2)],
        user1: report.get(OutageMetric::OmaUser1),
        user2: report.get(OutageMetric::OmaUser2),
        sum: report.get(OutageMetric::OmaSum),
    })
}

/// E[exp(−b·D_bh)] for the backhaul term.
///
/// `b` multiplies the whole backhaul noise term: the FSO case returns
/// 𝒢(b·C_D), the RF case E[exp(−b(N₀ + I'')/(L_bG_b²κ_b))].
pub fn backhaul_expectation(b: f64, backhaul: &BackhaulModel, dest_terms: &[f64]) -> Result<BackhaulValue> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::domain("backhaul_expectation", format!("b = {b} must be finite and ≥ 0")));
    }
    let exact = |value| BackhaulValue {
        value,
        path: BackhaulPath::Exact,
        condition: None,
    };
    if b == 0.0 {
        return Ok(exact(1.0));
    }
    match backhaul {
        BackhaulModel::Fso(f) => {
            if f.c_d == 0.0 {
                return Ok(exact(1.0));
            }
            Ok(BackhaulValue {
                value: f.law().calg(b * f.c_d)?,
                path: BackhaulPath::CalG,
                condition: None,
            })
        }
        BackhaulModel::Rf(rf) if dest_terms.is_empty() => Ok(BackhaulValue {
            value: rf.rician.inverse_exp_series(b * rf.c_rf())?,
            path: BackhaulPath::RicianSeries,
            condition: None,
        }),
        BackhaulModel::Rf(rf) => {
            let (value, condition) = rf_dest_partial_fraction(b, rf, dest_terms)?;
            if condition <= PARTIAL_FRACTION_MAX_CONDITION {
                Ok(BackhaulValue {
                    value,
                    path: BackhaulPath::PartialFraction,
                    condition: Some(condition),
                })
            } else {
                Ok(BackhaulValue {
                    value: rf_dest_quadrature(b, rf, dest_terms)?,
                    path: BackhaulPath::Quadrature,
                    condition: Some(condition),
                })
            }
        }
    }
}

/// Σ_l A_l·(1+Ω)e^{−Ω}·J₁(K_d, 1+Ω, b·C_RF, c_l, 4Ω(1+Ω)) with c_l = bℓ''_l/(L_bG_b²)
/// and A_l = Π_{j≠l} 1/(c_j − c_l). Returns the value and the cancellation factor.
pub fn rf_dest_partial_fraction(b: f64, rf: &RfBackhaul, dest_terms: &[f64]) -> Result<(f64, f64)> {
    let m = rf.amplification();
    let o = rf.rician.omega();
    let cs: Vec<f64> = dest_terms.iter().map(|l| b * l / m).collect();
    let kd = cs.len() as u32;
    let pre = (1.0 + o) * (-o).exp();
    let (mut sum, mut abs_sum) = (0.0, 0.0);
    for (l, &cl) in cs.iter().enumerate() {
        let mut ln_abs = 0.0;
        let mut negative = false;
        for (j, &cj) in cs.iter().enumerate() {
            if j != l {
                let diff = cj - cl;
                if diff == 0.0 {
                    return Err(Error::NotDistinct {
                        list: "dest",
                        first: l.min(j),
                        second: l.max(j),
                    });
                }
                ln_abs -= diff.abs().ln();
                negative ^= diff < 0.0;
            }
        }
        let args = IncompleteGArgs::new(kd, 1.0 + o, b * rf.c_rf(), cl, 4.0 * o * (1.0 + o))?;
        let term = (ln_abs + incomplete_g_expectation(args)?.ln()).exp() * pre;
        let term = if negative { -term } else { term };
        sum += term;
        abs_sum += term.abs();
    }
    let condition = if sum == 0.0 { f64::INFINITY } else { abs_sum / sum.abs() };
    Ok((sum, condition))
}

/// Direct quadrature of E_κ[exp(−b·C_RF/κ)·Π_j κ/(κ + c_j)].
pub fn rf_dest_quadrature(b: f64, rf: &RfBackhaul, dest_terms: &[f64]) -> Result<f64> {
    let m = rf.amplification();
    let a = b * rf.c_rf();
    let cs: Vec<f64> = dest_terms.iter().map(|l| b * l / m).collect();
    rf.rician.expect(
        |k| {
            if k == 0.0 {
                return 0.0;
            }
            let prod: f64 = cs.iter().map(|c| k / (k + c)).product();
            (-a / k).exp() * prod
        },
        Tolerance::relative(1e-12).with_abs(1e-300),
    )
}

/// Closed-form evaluator for one scenario; caches Laplace-transform values and
/// collects diagnostics.
#[derive(Debug)]
pub struct OutageEvaluator<'a> {
    sc: &'a ScenarioConfig,
    cache: RefCell<HashMap<u64, f64>>,
    diagnostics: RefCell<Vec<Diagnostic>>,
}

impl<'a> OutageEvaluator<'a> {
    pub fn new(sc: &'a ScenarioConfig) -> Self {
        Self {
            sc,
            cache: RefCell::new(HashMap::new()),
            diagnostics: RefCell::new(Vec::new()),
        }
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        self.sc
    }

    fn note(&self, d: Diagnostic) {
        crate::diagnostics::push(&mut self.diagnostics.borrow_mut(), d);
    }

    pub fn take_diagnostics(&self) -> Vec<Diagnostic> {
        std::mem::take(&mut self.diagnostics.borrow_mut())
    }

    /// E[exp(−b·D)] = e^{−bσ²_R}·Πₖ 1/(1 + bℓₖ)·E[exp(−b·D_bh)].
    pub fn laplace(&self, b: f64) -> Result<f64> {
        if b == 0.0 {
            return Ok(1.0);
        }
        if let Some(&v) = self.cache.borrow().get(&b.to_bits()) {
            return Ok(v);
        }
        let sc = self.sc;
        let bh = backhaul_expectation(b, &sc.backhaul, sc.dest_terms())?;
        if let (BackhaulPath::Quadrature, Some(condition)) = (bh.path, bh.condition) {
            self.note(Diagnostic::BackhaulQuadratureFallback { condition });
        }
        let prod: f64 = sc.interference.relay().iter().map(|l| 1.0 / (1.0 + b * l)).product();
        let v = (-b * sc.relay_noise).exp() * prod * bh.value;
        self.cache.borrow_mut().insert(b.to_bits(), v);
        Ok(v)
    }

    fn ratio(&self) -> Result<f64> {
        let t = self.sc.pair.ratio();
        if self.sc.pair.a2 == 0.0 || !t.is_finite() {
            return Err(Error::DegenerateOrder {
                order: 2,
                backoff_db: self.sc.pair.backoff_db,
            });
        }
        Ok(t)
    }

    /// Pr(γ_first < γ, order) for the first-decoded user, whose normalised
    /// power ratio to the other user is `tt` and mean received power is `q`.
    fn joint_first(&self, gamma: f64, tt: f64, pp: f64, q: f64) -> Result<f64> {
        let e = |c: f64| self.laplace(c / q);
        if gamma < 1.0 {
            let j = tt * gamma / (1.0 - gamma);
            let j1 = j * (1.0 + 1.0 / tt);
            let j2 = gamma + j * (1.0 + gamma / tt);
            Ok(pp * (1.0 - e(j1)?) - tt / (gamma + tt) * (e(gamma)? - e(j2)?))
        } else {
            Ok(pp - tt / (gamma + tt) * e(gamma)?)
        }
    }

    /// Pr(γ^(1)_{π₁} < γ, π₁).
    pub fn joint_u1_first(&self, gamma: f64) -> Result<f64> {
        let t = self.ratio()?;
        let (p1, _) = decode_order_prob(self.sc.pair.backoff_db);
        self.joint_first(gamma, t, p1, self.sc.pair.q1())
    }

    /// Pr(γ^(2)_{π₂} < γ, π₂).
    pub fn joint_u2_first(&self, gamma: f64) -> Result<f64> {
        let t = self.ratio()?;
        let (_, p2) = decode_order_prob(self.sc.pair.backoff_db);
        self.joint_first(gamma, 1.0 / t, p2, self.sc.pair.q2())
    }

    /// Pr(γ^(u)_{π_{3−u}} > γ, π_{3−u}): coverage of user `u` when decoded second.
    pub fn joint_cov_second_decoded(&self, user: u8, gamma: f64) -> Result<f64> {
        let t = self.ratio()?;
        let (p1, p2) = decode_order_prob(self.sc.pair.backoff_db);
        match user {
            1 => Ok(p2 * self.laplace(gamma * (1.0 + t) / self.sc.pair.q1())?),
            2 => Ok(p1 * self.laplace(gamma * (1.0 + 1.0 / t) / self.sc.pair.q2())?),
            _ => Err(Error::validation("user", "must be 1 or 2")),
        }
    }

    /// Pr(first decoded clears γf, second decoded clears γs, order) where, in
    /// units of a₁L₁P, the first-decoded power is Exp(λf) and the second Exp(λs).
    fn joint_both(&self, gf: f64, gs: f64, lf: f64, ls: f64) -> Result<f64> {
        let q = self.sc.pair.q1();
        let e = |c: f64| self.laplace(c / q);
        if gf >= 1.0 {
            let s = ls + lf * gf;
            return Ok(ls / s * e(lf * gf + s * gs)?);
        }
        let k = gf / (1.0 - gf);
        if gs >= k {
            return Ok(ls / (ls + lf) * e((ls + lf) * gs)?);
        }
        let s = ls + lf * gf;
        Ok(ls / s * (e(lf * gf + s * gs)? - e(lf * gf + s * k)?) + ls / (ls + lf) * e((ls + lf) * k)?)
    }

    fn clamp(&self, v: f64) -> f64 {
        let c = v.clamp(0.0, 1.0);
        let excursion = (v - c).abs();
        if excursion > CLAMP_REPORT {
            self.note(Diagnostic::Clamped { excursion });
        }
        c
    }

    /// P^(u)_out.
    pub fn outage_user(&self, user: u8, form: UserOutageForm) -> Result<f64> {
        let th = self.sc.thresholds;
        let t = self.ratio()?;
        let (p1, p2) = decode_order_prob(self.sc.pair.backoff_db);
        if p2 == 0.0 {
            return Err(Error::DegenerateOrder {
                order: 2,
                backoff_db: self.sc.pair.backoff_db,
            });
        }
        let c11 = p1 - self.joint_u1_first(th.gamma1)?;
        let c22 = p2 - self.joint_u2_first(th.gamma2)?;
        let covered = match (user, form) {
            (1, UserOutageForm::Joint) => c11 + self.joint_both(th.gamma2, th.gamma1, t, 1.0)?,
            (2, UserOutageForm::Joint) => c22 + self.joint_both(th.gamma1, th.gamma2, 1.0, t)?,
            (1, UserOutageForm::Product) => c11 + c22 * self.joint_cov_second_decoded(1, th.gamma1)? / p2,
            (2, UserOutageForm::Product) => c22 + c11 * self.joint_cov_second_decoded(2, th.gamma2)? / p1,
            _ => return Err(Error::validation("user", "must be 1 or 2")),
        };
        Ok(self.clamp(1.0 - covered))
    }

    fn sum_at_ratio(&self, t: f64) -> Result<f64> {
        let q1 = self.sc.pair.q1_at_ratio(t);
        let g = self.sc.thresholds.gamma_sum;
        Ok(1.0 + self.laplace(g * t / q1)? / (t - 1.0) - t / (t - 1.0) * self.laplace(g / q1)?)
    }

    /// P^Σ_out; at |10^{s/10} − 1| < 10⁻⁶ the mean over s ± 10⁻³ dB is used.
    pub fn outage_sum(&self) -> Result<f64> {
        if self.sc.thresholds.gamma_sum == 0.0 {
            return Ok(0.0);
        }
        let s = self.sc.pair.backoff_db;
        let t = self.ratio()?;
        let v = if (t - 1.0).abs() < 1e-6 {
            self.note(Diagnostic::SymmetricPerturbation {
                delta_db: SYMMETRIC_DELTA_DB,
            });
            0.5 * (self.sum_at_ratio(db_to_linear(s + SYMMETRIC_DELTA_DB))?
                + self.sum_at_ratio(db_to_linear(s - SYMMETRIC_DELTA_DB))?)
        } else {
            self.sum_at_ratio(t)?
        };
        Ok(self.clamp(v))
    }
}

fn evaluated<F: FnOnce(&OutageEvaluator) -> Result<f64>>(sc: &ScenarioConfig, f: F) -> Result<Evaluated> {
    let ev = OutageEvaluator::new(sc);
    let value = f(&ev)?;
    Ok(Evaluated {
        value,
        diagnostics: ev.take_diagnostics(),
    })
}

pub fn joint_u1_first(sc: &ScenarioConfig, gamma: f64) -> Result<f64> {
    OutageEvaluator::new(sc).joint_u1_first(gamma)
}

pub fn joint_u2_first(sc: &ScenarioConfig, gamma: f64) -> Result<f64> {
    OutageEvaluator::new(sc).joint_u2_first(gamma)
}

pub fn joint_cov_second_decoded(sc: &ScenarioConfig, user: u8, gamma: f64) -> Result<f64> {
    OutageEvaluator::new(sc).joint_cov_second_decoded(user, gamma)
}

/// P^(u)_out with the exact joint composition.
pub fn outage_user(sc: &ScenarioConfig, user: u8) -> Result<Evaluated> {
    evaluated(sc, |ev| ev.outage_user(user, UserOutageForm::Joint))
}

pub fn outage_user_with(sc: &ScenarioConfig, user: u8, form: UserOutageForm) -> Result<Evaluated> {
    evaluated(sc, |ev| ev.outage_user(user, form))
}

pub fn outage_sum(sc: &ScenarioConfig) -> Result<Evaluated> {
    evaluated(sc, |ev| ev.outage_sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dbm_to_watts, FsoBackhaul, FsoLinkSpec, InterferenceProfile, NomaPair};
    use crate::presets;
    use crate::scenario::Thresholds;
    use approx::assert_relative_eq;

    fn quiet_fso() -> BackhaulModel {
        BackhaulModel::Fso(
            FsoBackhaul::new(FsoLinkSpec {
                alpha: 4.0,
                beta: 2.0,
                xi: 2.0,
                responsivity: 0.5,
                atten_per_m: 0.43e-3,
                length_m: 1200.0,
                aperture_m: 0.1,
                divergence_rad: 2e-3,
                conversion_eta: 1.0,
                relay_gain: 100.0,
                dest_noise: 0.0,
            })
            .unwrap(),
        )
    }

    fn noiseless(s_db: f64, th: Thresholds) -> ScenarioConfig {
        let pair = NomaPair::new(1e-7, 1e-7, 1.0, s_db).unwrap();
        ScenarioConfig::new(pair, 0.0, quiet_fso(), InterferenceProfile::none(), th).unwrap()
    }

    fn fig2(p_dbm: f64, s_db: f64) -> ScenarioConfig {
        presets::fso_reference(p_dbm, s_db, Thresholds::new(0.8, 0.4, 1.2).unwrap()).unwrap()
    }

    #[test]
    fn oma_reference_is_reproducible_across_seeds() {
        let sc = fig2(25.0, 10.0);
        let a = oma_reference(&sc, 200_000, 3).unwrap();
        let b = oma_reference(&sc, 200_000, 4).unwrap();
        assert!((a.thresholds[0] - 2.24).abs() < 1e-12);
        for (x, y) in [(a.user1, b.user1), (a.user2, b.user2), (a.sum, b.sum)] {
            let joint = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
            assert!((x.mean - y.mean).abs() <= 3.0 * joint, "{x:?} vs {y:?}");
            assert!(x.mean > 0.0 && x.mean < 1.0);
        }
    }

    #[test]
    fn decode_order_examples() {
        assert_eq!(decode_order_prob(0.0), (0.5, 0.5));
        let (p1, p2) = decode_order_prob(10.0);
        assert!((p1 - 0.909_09).abs() < 1e-5 && (p2 - 0.090_91).abs() < 1e-5);
        assert_eq!(p1 + p2, 1.0);
        assert_eq!(decode_order_prob(f64::INFINITY), (1.0, 0.0));
    }

    #[test]
    fn oma_thresholds() {
        assert!((oma_threshold(0.8) - 2.24).abs() < 1e-12);
        assert_eq!(oma_threshold(0.0), 0.0);
    }

    #[test]
    fn noiseless_ordering_event() {
        let sc = noiseless(0.0, Thresholds::new(1.0, 1.0, 1.0).unwrap());
        assert!(joint_u1_first(&sc, 1.0).unwrap().abs() < 1e-15);
        assert!(joint_u2_first(&sc, 1.0).unwrap().abs() < 1e-15);
        assert_eq!(
            joint_u1_first(&sc, 1.0).unwrap(),
            joint_u2_first(&sc, 1.0).unwrap()
        );
    }

    #[test]
    fn second_decoded_coverage_limits() {
        let sc = noiseless(10.0, Thresholds::new(0.8, 0.4, 1.2).unwrap());
        let (p1, p2) = decode_order_prob(10.0);
        assert_eq!(joint_cov_second_decoded(&sc, 1, 0.8).unwrap(), p2);
        let sc = fig2(30.0, 10.0);
        assert_eq!(joint_cov_second_decoded(&sc, 1, 0.0).unwrap(), p2);
        assert_eq!(joint_cov_second_decoded(&sc, 2, 0.0).unwrap(), p1);
        assert!(joint_cov_second_decoded(&sc, 3, 0.4).is_err());
    }

    #[test]
    fn noiseless_outages_vanish() {
        let sc = noiseless(5.0, Thresholds::new(0.0, 0.0, 0.0).unwrap());
        assert!(outage_user(&sc, 1).unwrap().value.abs() < 1e-15);
        assert!(outage_user(&sc, 2).unwrap().value.abs() < 1e-15);
        let sc = noiseless(10.0, Thresholds::new(0.8, 0.4, 1.2).unwrap());
        assert!(outage_sum(&sc).unwrap().value.abs() < 1e-14);
        let sc = noiseless(10.0, Thresholds::new(0.8, 0.4, 37.0).unwrap());
        assert!(outage_sum(&sc).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn branch_seam_is_continuous() {
        for s in [0.0, 5.0, 10.0] {
            let sc = fig2(30.0, s);
            let ev = OutageEvaluator::new(&sc);
            let left = ev.joint_u1_first(1.0 - 1e-6).unwrap();
            let right = ev.joint_u1_first(1.0).unwrap();
            assert!((left - right).abs() < 1e-5, "s = {s}: {left} vs {right}");
            let left = ev.joint_u2_first(1.0 - 1e-6).unwrap();
            let right = ev.joint_u2_first(1.0).unwrap();
            assert!((left - right).abs() < 1e-5, "s = {s}: {left} vs {right}");
        }
    }

    #[test]
    fn mirrored_pair_swaps_user_outages() {
        for s in [0.0, 4.0, 10.0] {
            let sc = fig2(25.0, s);
            let th = sc.thresholds;
            let mirror = ScenarioConfig {
                pair: sc.pair.mirrored(),
                thresholds: Thresholds::new(th.gamma2, th.gamma1, th.gamma_sum).unwrap(),
                ..sc.clone()
            };
            for form in [UserOutageForm::Joint, UserOutageForm::Product] {
                let a = outage_user_with(&sc, 1, form).unwrap().value;
                let b = outage_user_with(&mirror, 2, form).unwrap().value;
                assert_relative_eq!(a, b, max_relative = 1e-12);
                let a = outage_user_with(&sc, 2, form).unwrap().value;
                let b = outage_user_with(&mirror, 1, form).unwrap().value;
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn outages_non_increasing_in_power() {
        let base = fig2(0.0, 10.0);
        let mut prev = [1.0f64; 3];
        for i in 0..20 {
            let sc = base.with_tx_power(dbm_to_watts(3.0 * i as f64)).unwrap();
            let now = [
                outage_user(&sc, 1).unwrap().value,
                outage_user(&sc, 2).unwrap().value,
                outage_sum(&sc).unwrap().value,
            ];
            for (k, (&n, &p)) in now.iter().zip(&prev).enumerate() {
                assert!((0.0..=1.0).contains(&n));
                assert!(n <= p + 1e-12, "metric {k} rose at step {i}: {p} -> {n}");
            }
            prev = now;
        }
    }

    #[test]
    fn large_thresholds_saturate() {
        let th = Thresholds::new(1.5, 1.2, 1.2).unwrap();
        let at = |p| presets::fso_reference(p, 5.0, th).unwrap();
        for user in [1, 2] {
            let v: Vec<f64> = [50.0, 60.0, 70.0].iter().map(|&p| outage_user(&at(p), user).unwrap().value).collect();
            assert!(v[0] - v[1] < 5e-4, "user {user}: {v:?}");
            assert!(v[1] - v[2] < 1e-4, "user {user}: {v:?}");
            assert!(v[1] - v[2] < 0.2 * (v[0] - v[1]), "user {user}: {v:?}");
            assert!(v[2] > 0.1);
        }
    }

    #[test]
    fn small_thresholds_keep_improving() {
        let a = outage_user(&fig2(50.0, 10.0), 1).unwrap().value;
        let b = outage_user(&fig2(60.0, 10.0), 1).unwrap().value;
        assert!(b < 0.2 * a);
    }

    #[test]
    fn fallback_diagnostic_keeps_worst_condition() {
        let sc = presets::rf_reference(20.0, 10.0, 1.0, Thresholds::new(0.8, 0.4, 1.2).unwrap()).unwrap();
        let out = outage_user(&sc, 1).unwrap();
        let fallbacks: Vec<_> = out
            .diagnostics
            .iter()
            .filter(|d| matches!(d, Diagnostic::BackhaulQuadratureFallback { .. }))
            .collect();
        assert_eq!(fallbacks.len(), 1);
    }

    #[test]
    fn joint_and_product_forms_are_close() {
        let sc = fig2(30.0, 10.0);
        let joint = outage_user_with(&sc, 1, UserOutageForm::Joint).unwrap().value;
        let product = outage_user_with(&sc, 1, UserOutageForm::Product).unwrap().value;
        assert!((joint - product).abs() < 0.05, "{joint} vs {product}");
    }

    #[test]
    fn symmetric_backoff_uses_perturbation() {
        let sc = fig2(30.0, 0.0);
        let out = outage_sum(&sc).unwrap();
        assert!(out.diagnostics.contains(&Diagnostic::SymmetricPerturbation {
            delta_db: SYMMETRIC_DELTA_DB
        }));
        let near = outage_sum(&fig2(30.0, 0.01)).unwrap().value;
        assert!((out.value - near).abs() < 1e-3);
    }

    #[test]
    fn degenerate_order_is_reported() {
        let sc = fig2(30.0, 1000.0);
        assert!(matches!(
            outage_user(&sc, 1),
            Err(Error::DegenerateOrder { order: 2, .. })
        ));
    }

    #[test]
    fn backhaul_expectation_at_zero_is_one() {
        let fso = fig2(30.0, 10.0).backhaul;
        let rf = BackhaulModel::Rf(presets::rf_backhaul(500.0, 1000.0).unwrap());
        assert_eq!(backhaul_expectation(0.0, &fso, &[]).unwrap().value, 1.0);
        assert_eq!(backhaul_expectation(0.0, &rf, &[]).unwrap().value, 1.0);
        assert_eq!(backhaul_expectation(0.0, &rf, &[1e-12, 2e-12]).unwrap().value, 1.0);
        assert!(backhaul_expectation(-1.0, &rf, &[]).is_err());
    }

    #[test]
    fn rician_series_matches_quadrature() {
        let rf = RfBackhaul::new(6.0, 1e-9, 1.0, 1e-10).unwrap();
        assert!((rf.rician.omega() - 3.981).abs() < 1e-3);
        let b = 0.1 / rf.c_rf();
        let v = backhaul_expectation(b, &BackhaulModel::Rf(rf.clone()), &[]).unwrap();
        assert_eq!(v.path, BackhaulPath::RicianSeries);
        let q = rf
            .rician
            .expect(|k| if k == 0.0 { 0.0 } else { (-0.1 / k).exp() }, Tolerance::relative(1e-12))
            .unwrap();
        assert!((v.value - q).abs() < 1e-6);
    }

    #[test]
    fn partial_fractions_match_quadrature() {
        let rf = RfBackhaul::new(6.0, 1e-9, 1.0, 1e-10).unwrap();
        let m = rf.amplification();
        let dest = [0.4 * m, 1.3 * m];
        for b in [0.05, 0.5, 2.0] {
            let (pf, cond) = rf_dest_partial_fraction(b, &rf, &dest).unwrap();
            let q = rf_dest_quadrature(b, &rf, &dest).unwrap();
            assert!(cond < PARTIAL_FRACTION_MAX_CONDITION);
            assert_relative_eq!(pf, q, max_relative = 1e-8);
        }
    }

    #[test]
    fn reference_rf_destination_interference_is_consistent() {
        let sc = presets::rf_reference(30.0, 10.0, 1.0, Thresholds::new(0.8, 0.4, 1.2).unwrap()).unwrap();
        let BackhaulModel::Rf(rf) = &sc.backhaul else { unreachable!() };
        for b in [1e8, 1e10, 1e11] {
            let v = backhaul_expectation(b, &sc.backhaul, sc.dest_terms()).unwrap();
            let q = rf_dest_quadrature(b, rf, sc.dest_terms()).unwrap();
            assert_relative_eq!(v.value, q, max_relative = 1e-7);
        }
    }
}
