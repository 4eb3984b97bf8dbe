//! Average individual and sum rates.
//!
//! With W = D/(a₁L₁P) every rate is a fixed linear combination of
//! e(v) = E[eEi(v·W)]. Conditioned on the backhaul fade, W = B + Σₖ αₖxₖ with
//! xₖ ~ Exp(1), and E_x[eEi(v·W)] = β_v·eEi(vB) + Σᵢ β_αᵢ·eEi(B/αᵢ). The
//! remaining expectation over g̃ (or κ_b) is a one-dimensional quadrature.

use crate::channel::{db_to_linear, relative_gap, BackhaulModel, DISTINCT_REL_GAP};
use crate::diagnostics::{self, Diagnostic, Evaluated};
use crate::error::{Error, Result};
use crate::mc::RateMetricMc;
use crate::outage::SYMMETRIC_DELTA_DB;
use crate::quad::{integrate_whole_line, Tolerance};
use crate::scenario::ScenarioConfig;
use crate::specfun::eei;
use std::cell::{Cell, RefCell};

/// Relative tolerance of the outer quadrature over the backhaul fade.
pub const OUTER_REL_TOL: f64 = 1e-8;

/// Largest accepted Σ|terms|/|Σ| in the β-weighted eEi sum before the
/// integral representation is used instead.
pub const RECURSION_MAX_CONDITION: f64 = 1e6;

/// Relative jitter applied to degenerate destination coefficients at a κ_b node.
pub const NODE_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionInput {
    alphas: Vec<f64>,
    v: f64,
}

impl RecursionInput {
    /// Rejects αₖ ≤ 0, v ≤ 0, |αₖv − 1| < 10⁻⁹ and αₖ, αᵢ closer than 10⁻⁹ relative.
    pub fn new(alphas: Vec<f64>, v: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain("coeff_recursion", format!("v = {v} must be finite and > 0")));
        }
        for (k, &a) in alphas.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::domain("coeff_recursion", format!("alpha[{k}] = {a} must be finite and > 0")));
            }
            if (a * v - 1.0).abs() < DISTINCT_REL_GAP {
                return Err(Error::Degenerate {
                    detail: format!("alpha[{k}]·v = {} is within 1e-9 of 1", a * v),
                });
            }
            for (i, &b) in alphas[..k].iter().enumerate() {
                if relative_gap(a, b) < DISTINCT_REL_GAP {
                    return Err(Error::Degenerate {
                        detail: format!("alpha[{i}] and alpha[{k}] coincide"),
                    });
                }
            }
        }
        Ok(Self { alphas, v })
    }

    /// Like [`RecursionInput::new`] but nudges degenerate αₖ by ±10⁻⁹ relative
    /// until the input is admissible. Returns the number of nudged entries.
    pub fn jittered(mut alphas: Vec<f64>, v: f64) -> Result<(Self, usize)> {
        let mut nudged = 0;
        for k in 0..alphas.len() {
            let mut step = 0;
            while step < 16 && Self::conflicts(&alphas, k, v) {
                step += 1;
                let sign = if step % 2 == 1 { 1.0 } else { -1.0 };
                alphas[k] *= 1.0 + sign * 2.0 * step as f64 * NODE_JITTER;
            }
            nudged += usize::from(step > 0);
        }
        Ok((Self::new(alphas, v)?, nudged))
    }

    fn conflicts(alphas: &[f64], k: usize, v: f64) -> bool {
        let a = alphas[k];
        (a * v - 1.0).abs() < DISTINCT_REL_GAP || alphas[..k].iter().any(|&b| relative_gap(a, b) < DISTINCT_REL_GAP)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Final-level coefficients β^(K)_αᵢ and β^(K)_v.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    pub v: f64,
}

/// Builds the coefficients one interferer at a time, starting from
/// β^(1)_α₁ = −β^(1)_v = 1/(α₁v − 1).
pub fn coeff_recursion(input: &RecursionInput) -> Coefficients {
    let v = input.v;
    let mut beta_v = 1.0;
    let mut beta_a: Vec<f64> = Vec::with_capacity(input.alphas.len());
    for (k, &ak) in input.alphas.iter().enumerate() {
        let mut new_k = beta_v / (ak * v - 1.0);
        for (i, b) in beta_a.iter_mut().enumerate() {
            let r = ak / input.alphas[i] - 1.0;
            new_k += *b / r;
            *b = -*b / r;
        }
        beta_a.push(new_k);
        beta_v = -beta_v / (ak * v - 1.0);
        debug_assert_eq!(beta_a.len(), k + 1);
    }
    Coefficients { alpha: beta_a, v: beta_v }
}

/// Coefficients from the partial-fraction expansion of
/// 1/((1+s)·Πₖ(1 + αₖvs)): β_αₖ = Π_{j≠k}(1 − αⱼ/αₖ)⁻¹/(αₖv − 1), β_v as in
/// [`closed_product_v`]. Same values as [`coeff_recursion`] without its
/// cancellation when a small αₖ sits among larger ones.
pub fn partial_fraction_coefficients(input: &RecursionInput) -> Coefficients {
    let v = input.v;
    let alpha = input
        .alphas
        .iter()
        .enumerate()
        .map(|(k, &ak)| {
            let others: f64 = input
                .alphas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &aj)| 1.0 / (1.0 - aj / ak))
                .product();
            others / (ak * v - 1.0)
        })
        .collect();
    Coefficients {
        alpha,
        v: closed_product_v(&input.alphas, v),
    }
}

/// (−1)^K / Πᵢ(αᵢv − 1).
pub fn closed_product_v(alphas: &[f64], v: f64) -> f64 {
    alphas.iter().fold(1.0, |acc, &a| -acc / (a * v - 1.0))
}

/// β-weighted eEi sum at offset `b` and its cancellation factor.
pub fn weighted_eei_sum(input: &RecursionInput, coeffs: &Coefficients, b: f64) -> (f64, f64) {
    let head = coeffs.v * eei(input.v * b);
    let (mut sum, mut abs) = (head, head.abs());
    for (&a, &beta) in input.alphas.iter().zip(&coeffs.alpha) {
        let term = beta * eei(b / a);
        sum += term;
        abs += term.abs();
    }
    let condition = if sum == 0.0 { f64::INFINITY } else { abs / sum.abs() };
    (sum, condition)
}

/// E_x[eEi(v(B + Σαₖxₖ))] as −∫₀^∞ e^{−vBs}/(1+s)·Πₖ(1 + αₖvs)⁻¹ ds.
pub fn interference_eei_integral(alphas: &[f64], v: f64, b: f64) -> Result<f64> {
    let est = integrate_whole_line(
        |u| {
            let s = u.exp();
            let e = -v * b * s;
            if e < -745.0 {
                return 0.0;
            }
            let prod: f64 = alphas.iter().map(|a| 1.0 / (1.0 + a * v * s)).product();
            e.exp() * s / (1.0 + s) * prod
        },
        Tolerance::relative(1e-12).with_abs(1e-300),
    )?;
    Ok(-est.value)
}

/// E_x[eEi(v(B + Σαₖxₖ))] for a fixed offset B > 0.
pub fn interference_eei_expectation(input: &RecursionInput, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain("interference_eei_expectation", format!("B = {b} must be > 0")));
    }
    let coeffs = partial_fraction_coefficients(input);
    let (value, condition) = weighted_eei_sum(input, &coeffs, b);
    if condition <= RECURSION_MAX_CONDITION {
        Ok(value)
    } else {
        interference_eei_integral(&input.alphas, input.v, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErgodicOptions {
    /// Nudge relay-side αₖ with αₖv ≈ 1 instead of failing.
    pub jitter_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMetric {
    User1,
    User2,
    Sum,
}

impl RateMetric {
    /// (weight, v) pairs such that the rate in nats is Σ weight·e(v).
    fn combination(self, t: f64) -> Vec<(f64, f64)> {
        let h = 0.5 * (1.0 + t);
        match self {
            Self::User1 => vec![
                ((t - 1.0) / (t + 1.0), 1.0 + t),
                (2.0 * t / (t * t - 1.0), h),
                (-t / (t - 1.0), 1.0),
            ],
            Self::User2 => vec![
                ((1.0 - t) / (1.0 + t), 1.0 + t),
                (2.0 * t / (1.0 - t * t), h),
                (1.0 / (t - 1.0), t),
            ],
            Self::Sum => vec![(1.0 / (t - 1.0), t), (-t / (t - 1.0), 1.0)],
        }
    }
}

/// Per-node evaluator of Σ weight·E_x[eEi(v·W)].
struct NodeRate<'a> {
    relay: Vec<f64>,
    dest_scale: Vec<f64>,
    terms: Vec<(f64, f64)>,
    /// Coefficients for the fixed relay-only α set, one per v.
    fixed: Vec<Option<(RecursionInput, Coefficients)>>,
    diagnostics: &'a RefCell<Vec<Diagnostic>>,
}

impl<'a> NodeRate<'a> {
    fn new(
        relay: Vec<f64>,
        dest_scale: Vec<f64>,
        terms: Vec<(f64, f64)>,
        opts: ErgodicOptions,
        diagnostics: &'a RefCell<Vec<Diagnostic>>,
    ) -> Result<Self> {
        let mut fixed = Vec::with_capacity(terms.len());
        for &(_, v) in &terms {
            if dest_scale.is_empty() {
                let input = if opts.jitter_degenerate {
                    let (input, nudged) = RecursionInput::jittered(relay.clone(), v)?;
                    if nudged > 0 {
                        diagnostics::push(&mut diagnostics.borrow_mut(), Diagnostic::NodeJitter { nodes: 0 });
                    }
                    input
                } else {
                    RecursionInput::new(relay.clone(), v)?
                };
                let coeffs = partial_fraction_coefficients(&input);
                fixed.push(Some((input, coeffs)));
            } else {
                fixed.push(None);
            }
        }
        Ok(Self {
            relay,
            dest_scale,
            terms,
            fixed,
            diagnostics,
        })
    }

    fn note(&self, d: Diagnostic) {
        diagnostics::push(&mut self.diagnostics.borrow_mut(), d);
    }

    fn one(&self, input: &RecursionInput, coeffs: &Coefficients, b: f64) -> Result<f64> {
        let (value, condition) = weighted_eei_sum(input, coeffs, b);
        if condition <= RECURSION_MAX_CONDITION {
            return Ok(value);
        }
        self.note(Diagnostic::RecursionFallback { condition });
        interference_eei_integral(&input.alphas, input.v, b)
    }

    /// Rate integrand at offset `b`; `kappa` scales the destination terms.
    fn eval(&self, b: f64, kappa: f64) -> Result<f64> {
        let mut total = 0.0;
        for (&(w, v), fixed) in self.terms.iter().zip(&self.fixed) {
            let e = match fixed {
                Some((input, coeffs)) => self.one(input, coeffs, b)?,
                None => {
                    let mut alphas = self.relay.clone();
                    alphas.extend(self.dest_scale.iter().map(|d| d / kappa));
                    let (input, nudged) = match RecursionInput::new(alphas.clone(), v) {
                        Ok(input) => (input, 0),
                        Err(Error::Degenerate { .. }) => RecursionInput::jittered(alphas, v)?,
                        Err(e) => return Err(e),
                    };
                    if nudged > 0 {
                        self.note(Diagnostic::NodeJitter { nodes: 1 });
                    }
                    let coeffs = partial_fraction_coefficients(&input);
                    self.one(&input, &coeffs, b)?
                }
            };
            total += w * e;
        }
        Ok(total)
    }
}

/// E over the backhaul fade of Σ weight·E_x[eEi(v·D/q1)].
fn expect_combination(
    sc: &ScenarioConfig,
    q1: f64,
    terms: Vec<(f64, f64)>,
    opts: ErgodicOptions,
    diagnostics: &RefCell<Vec<Diagnostic>>,
) -> Result<f64> {
    let relay: Vec<f64> = sc.interference.relay().iter().map(|l| l / q1).collect();
    let base = sc.relay_noise / q1;
    let tol = Tolerance::relative(OUTER_REL_TOL).with_abs(1e-300);
    let failure = Cell::new(None);
    let guard = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            f64::NAN
        }
    };
    let value = match &sc.backhaul {
        BackhaulModel::Fso(f) => {
            let node = NodeRate::new(relay, Vec::new(), terms, opts, diagnostics)?;
            let c = f.c_d / q1;
            if c == 0.0 {
                if base == 0.0 {
                    return Err(Error::validation("relay_noise_w", "ergodic rates need nonzero noise"));
                }
                node.eval(base, 1.0)
            } else {
                f.law().expect(|g| guard(node.eval(base + c / (g * g), 1.0)), tol)
            }
        }
        BackhaulModel::Rf(rf) => {
            let m = rf.amplification();
            let dest: Vec<f64> = sc.dest_terms().iter().map(|l| l / (m * q1)).collect();
            let node = NodeRate::new(relay, dest, terms, opts, diagnostics)?;
            let c = rf.noise / (m * q1);
            if c == 0.0 && base == 0.0 {
                return Err(Error::validation("relay_noise_w", "ergodic rates need nonzero noise"));
            }
            rf.rician.expect(
                |k| {
                    if k == 0.0 {
                        return 0.0;
                    }
                    guard(node.eval(base + c / k, k))
                },
                tol,
            )
        }
    };
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let value = value?;
    if !value.is_finite() {
        return Err(Error::domain("ergodic", "non-finite rate"));
    }
    Ok(value)
}

/// E[eEi(v·D/(a₁L₁P))] over every random quantity of the scenario.
pub fn eei_expectation(sc: &ScenarioConfig, v: f64) -> Result<f64> {
    let diag = RefCell::new(Vec::new());
    expect_combination(sc, sc.pair.q1(), vec![(1.0, v)], ErgodicOptions::default(), &diag)
}

/// E[eEi(c_b·D/(a₁L₁P))] for an RF backhaul with destination interference:
/// the destination coefficients are rebuilt at every κ_b node.
pub fn eb_expectation(sc: &ScenarioConfig, c_b: f64) -> Result<f64> {
    if !matches!(sc.backhaul, BackhaulModel::Rf(_)) {
        return Err(Error::validation("backhaul", "eb_expectation needs an RF backhaul"));
    }
    if !(c_b > 0.0) {
        return Err(Error::domain("eb_expectation", format!("c_b = {c_b} must be > 0")));
    }
    eei_expectation(sc, c_b)
}

fn rate_at_ratio(
    sc: &ScenarioConfig,
    metric: RateMetric,
    t: f64,
    opts: ErgodicOptions,
    diag: &RefCell<Vec<Diagnostic>>,
) -> Result<f64> {
    let q1 = sc.pair.q1_at_ratio(t);
    let nats = expect_combination(sc, q1, metric.combination(t), opts, diag)?;
    Ok((nats / std::f64::consts::LN_2).max(0.0))
}

/// Average rate in bits/s/Hz; |10^{s/10} − 1| < 10⁻⁶ uses the mean over s ± 10⁻³ dB.
pub fn avg_rate(sc: &ScenarioConfig, metric: RateMetric, opts: ErgodicOptions) -> Result<Evaluated> {
    let t = sc.pair.ratio();
    if !t.is_finite() || sc.pair.a2 == 0.0 {
        return Err(Error::DegenerateOrder {
            order: 2,
            backoff_db: sc.pair.backoff_db,
        });
    }
    let diag = RefCell::new(Vec::new());
    let value = if (t - 1.0).abs() < 1e-6 {
        diagnostics::push(
            &mut diag.borrow_mut(),
            Diagnostic::SymmetricPerturbation {
                delta_db: SYMMETRIC_DELTA_DB,
            },
        );
        let s = sc.pair.backoff_db;
        let up = rate_at_ratio(sc, metric, db_to_linear(s + SYMMETRIC_DELTA_DB), opts, &diag)?;
        let down = rate_at_ratio(sc, metric, db_to_linear(s - SYMMETRIC_DELTA_DB), opts, &diag)?;
        0.5 * (up + down)
    } else {
        rate_at_ratio(sc, metric, t, opts, &diag)?
    };
    Ok(Evaluated {
        value,
        diagnostics: diag.into_inner(),
    })
}

pub fn avg_rate_user(sc: &ScenarioConfig, user: u8) -> Result<Evaluated> {
    let metric = match user {
        1 => RateMetric::User1,
        2 => RateMetric::User2,
        _ => return Err(Error::validation("user", "must be 1 or 2")),
    };
    avg_rate(sc, metric, ErgodicOptions::default())
}

pub fn avg_sum_rate(sc: &ScenarioConfig) -> Result<Evaluated> {
    avg_rate(sc, RateMetric::Sum, ErgodicOptions::default())
}

/// Closed-form counterpart of a simulated rate metric; `None` for OMA.
pub fn closed_form_for(sc: &ScenarioConfig, metric: RateMetricMc, opts: ErgodicOptions) -> Result<Option<Evaluated>> {
    Ok(match metric {
        RateMetricMc::User1 => Some(avg_rate(sc, RateMetric::User1, opts)?),
        RateMetricMc::User2 => Some(avg_rate(sc, RateMetric::User2, opts)?),
        RateMetricMc::Sum => Some(avg_rate(sc, RateMetric::Sum, opts)?),
        RateMetricMc::OmaUser1 | RateMetricMc::OmaUser2 | RateMetricMc::OmaSum => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dbm_to_watts, InterferenceProfile};
    use crate::presets;
    use crate::scenario::Thresholds;
    use crate::specfun::eei_scaled;
    use approx::assert_relative_eq;

    fn th() -> Thresholds {
        Thresholds::new(0.8, 0.4, 1.2).unwrap()
    }

    #[test]
    fn single_interferer_initial_values() {
        let input = RecursionInput::new(vec![0.3], 2.5).unwrap();
        let c = coeff_recursion(&input);
        let want = 1.0 / (0.3 * 2.5 - 1.0);
        assert_relative_eq!(c.alpha[0], want, max_relative = 1e-15);
        assert_relative_eq!(c.v, -want, max_relative = 1e-15);
    }

    #[test]
    fn three_interferer_product() {
        let input = RecursionInput::new(vec![1.0, 2.0, 3.0], 2.0).unwrap();
        assert_relative_eq!(coeff_recursion(&input).v, -1.0 / 15.0, max_relative = 1e-15);
    }

    #[test]
    fn two_interferer_coefficients() {
        let (a1, a2, v) = (0.2, 0.7, 1.3);
        let c = coeff_recursion(&RecursionInput::new(vec![a1, a2], v).unwrap());
        let b1 = -1.0 / ((a1 * v - 1.0) * (a2 / a1 - 1.0));
        let b2 = -1.0 / ((a1 * v - 1.0) * (a2 * v - 1.0)) + 1.0 / ((a1 * v - 1.0) * (a2 / a1 - 1.0));
        assert_relative_eq!(c.alpha[0], b1, max_relative = 1e-14);
        assert_relative_eq!(c.alpha[1], b2, max_relative = 1e-14);
        assert_relative_eq!(c.v, 1.0 / ((a1 * v - 1.0) * (a2 * v - 1.0)), max_relative = 1e-14);
    }

    #[test]
    fn coefficients_match_partial_fractions() {
        let alphas = vec![0.11, 0.5, 0.93, 1.7, 0.02];
        let v = 1.9;
        let input = RecursionInput::new(alphas.clone(), v).unwrap();
        let rec = coeff_recursion(&input);
        let pf = partial_fraction_coefficients(&input);
        for (r, p) in rec.alpha.iter().zip(&pf.alpha) {
            assert_relative_eq!(r, p, max_relative = 1e-8);
        }
        let well_spread = RecursionInput::new(vec![0.3, 0.6, 1.2], 0.7).unwrap();
        let (rec, pf) = (coeff_recursion(&well_spread), partial_fraction_coefficients(&well_spread));
        for (r, p) in rec.alpha.iter().zip(&pf.alpha) {
            assert_relative_eq!(r, p, max_relative = 1e-13);
        }
        assert_relative_eq!(rec.v, pf.v, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_inputs_rejected_or_jittered() {
        assert!(matches!(RecursionInput::new(vec![0.5], 2.0), Err(Error::Degenerate { .. })));
        assert!(matches!(RecursionInput::new(vec![0.5, 0.5], 1.0), Err(Error::Degenerate { .. })));
        let (input, nudged) = RecursionInput::jittered(vec![0.5, 0.5], 2.0).unwrap();
        assert_eq!(nudged, 2);
        assert!(input.alphas().iter().all(|a| (a / 0.5 - 1.0).abs() < 1e-7));
        assert!(RecursionInput::new(vec![-1.0], 2.0).is_err());
    }

    #[test]
    fn empty_interference_is_plain_eei() {
        let input = RecursionInput::new(vec![], 3.0).unwrap();
        assert_relative_eq!(
            interference_eei_expectation(&input, 0.2).unwrap(),
            eei_scaled(0.6).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn recursion_matches_integral_representation() {
        for (alphas, v, b) in [
            (vec![0.4], 2.0, 0.3),
            (vec![0.05, 0.3, 1.2], 11.0, 1e-3),
            (vec![0.006, 0.0051, 0.0072], 6.0, 2e-4),
        ] {
            let input = RecursionInput::new(alphas.clone(), v).unwrap();
            let r = interference_eei_expectation(&input, b).unwrap();
            let q = interference_eei_integral(&alphas, v, b).unwrap();
            assert_relative_eq!(r, q, max_relative = 1e-9);
        }
    }

    #[test]
    fn sum_rate_identity() {
        for s in [0.0, 3.0, 10.0, 30.0] {
            let sc = presets::fso_reference(20.0, s, th()).unwrap();
            let r1 = avg_rate_user(&sc, 1).unwrap().value;
            let r2 = avg_rate_user(&sc, 2).unwrap().value;
            let rs = avg_sum_rate(&sc).unwrap().value;
            assert_relative_eq!(r1 + r2, rs, max_relative = 1e-6);
        }
    }

    #[test]
    fn vanishing_power_gives_vanishing_rate() {
        let sc = presets::fso_reference(-60.0, 10.0, th()).unwrap();
        for user in [1, 2] {
            let r = avg_rate_user(&sc, user).unwrap().value;
            assert!((0.0..1e-4).contains(&r), "user {user}: {r}");
        }
    }

    #[test]
    fn sum_rate_non_decreasing_in_power() {
        let base = presets::fso_reference(0.0, 25.0, th()).unwrap();
        let mut prev = 0.0;
        for i in 0..20 {
            let sc = base.with_tx_power(dbm_to_watts(3.0 * i as f64)).unwrap();
            let r = avg_sum_rate(&sc).unwrap().value;
            assert!(r >= prev, "step {i}: {prev} -> {r}");
            prev = r;
        }
    }

    #[test]
    fn first_user_growth_tends_to_second_order_share() {
        use crate::outage::decode_order_prob;
        let rate = |p, s, user| avg_rate_user(&presets::fso_reference(p, s, th()).unwrap(), user).unwrap().value;
        let slope = decode_order_prob(10.0).1 * 10f64.log2();
        assert_relative_eq!(rate(80.0, 10.0, 1) - rate(70.0, 10.0, 1), slope, max_relative = 1e-3);
        let slope = decode_order_prob(25.0).1 * 10f64.log2();
        let grow1 = rate(80.0, 25.0, 1) - rate(70.0, 25.0, 1);
        assert_relative_eq!(grow1, slope, max_relative = 0.1);
        let grow2 = rate(60.0, 25.0, 2) - rate(50.0, 25.0, 2);
        assert!(grow2 > 3.0 && grow1 < 0.005 * grow2);
    }

    #[test]
    fn symmetric_backoff_is_smooth() {
        let at = |s| presets::fso_reference(20.0, s, th()).unwrap();
        let zero = avg_rate_user(&at(0.0), 1).unwrap();
        assert!(zero.diagnostics.contains(&Diagnostic::SymmetricPerturbation {
            delta_db: SYMMETRIC_DELTA_DB
        }));
        let near = avg_rate_user(&at(0.01), 1).unwrap().value;
        assert!((zero.value - near).abs() < 1e-3);
    }

    #[test]
    fn eb_without_destination_interference_is_plain_rician_average() {
        let mut sc = presets::rf_reference(20.0, 10.0, 0.0, th()).unwrap();
        sc.interference = InterferenceProfile::none();
        let BackhaulModel::Rf(rf) = &sc.backhaul else { unreachable!() };
        let q1 = sc.pair.q1();
        let (base, c) = (sc.relay_noise / q1, rf.noise / (rf.amplification() * q1));
        let want = rf
            .rician
            .expect(|k| if k == 0.0 { 0.0 } else { eei(0.7 * (base + c / k)) }, Tolerance::relative(1e-10))
            .unwrap();
        assert_relative_eq!(eb_expectation(&sc, 0.7).unwrap(), want, max_relative = 1e-8);
    }

    #[test]
    fn rf_destination_rates_are_finite() {
        let sc = presets::rf_reference(20.0, 8.0, 1.0, th()).unwrap();
        let r1 = avg_rate_user(&sc, 1).unwrap().value;
        let r2 = avg_rate_user(&sc, 2).unwrap().value;
        let rs = avg_sum_rate(&sc).unwrap().value;
        assert!(r1 > 0.0 && r2 > 0.0);
        assert_relative_eq!(r1 + r2, rs, max_relative = 1e-6);
    }
}
