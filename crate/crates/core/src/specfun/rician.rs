//! Unit-mean Rician power gain κ with K-factor Ω.

use super::bessel::{bessel_i0_scaled, bessel_kn_scaled};
use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity, Tolerance};
use std::cell::Cell;

pub const SERIES_TOL: f64 = 1e-12;
pub const SERIES_MAX_TERMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianPower {
    omega: f64,
}

impl RicianPower {
    /// `omega` is the linear K-factor.
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::validation("omega", "K-factor must be finite and ≥ 0"));
        }
        Ok(Self { omega })
    }

    pub fn from_db(omega_db: f64) -> Result<Self> {
        Self::new(10f64.powf(omega_db / 10.0))
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn variance(&self) -> f64 {
        let o = self.omega;
        (1.0 + 2.0 * o) / ((1.0 + o) * (1.0 + o))
    }

    /// f_κ(k) = (1+Ω)e^{−Ω−(1+Ω)k} I₀(2√(Ω(1+Ω)k)).
    pub fn pdf(&self, k: f64) -> Result<f64> {
        if !(k >= 0.0) {
            return Err(Error::domain("rician_pdf", format!("k = {k} must be ≥ 0")));
        }
        let o = self.omega;
        let z = 2.0 * (o * (1.0 + o) * k).sqrt();
        let i0s = bessel_i0_scaled(z)?;
        Ok((1.0 + o) * (-o - (1.0 + o) * k + z).exp() * i0s)
    }

    /// E[f(κ)]: adaptive quadrature on [0, μ + 10σ] plus the transformed tail.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F, tol: Tolerance) -> Result<f64> {
        let split = 1.0 + 10.0 * self.variance().sqrt();
        let failure = Cell::new(None);
        let mut weighted = |k: f64| match self.pdf(k) {
            Ok(p) if p > 0.0 => f(k) * p,
            Ok(_) => 0.0,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        };
        let body = integrate(&mut weighted, 0.0, split, tol);
        let tail = integrate_to_infinity(&mut weighted, split, tol.with_abs(1e-300));
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(body?.value + tail?.value)
    }

    /// E[exp(−A/κ)] from the Bessel-K series
    /// Σₙ 2e^{−Ω}Ωⁿ/(n!)²·(z/2)^{n+1}K_{n+1}(z), z = 2√(A(1+Ω)).
    pub fn inverse_exp_series(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::domain("rician_inverse_exp", format!("A = {a} must be finite and ≥ 0")));
        }
        if a == 0.0 {
            return Ok(1.0);
        }
        let o = self.omega;
        let z = 2.0 * (a * (1.0 + o)).sqrt();
        let h = 0.5 * z;
        // ln k̃ₙ with k̃ₙ = hⁿKₙ(z); ratios rₙ = k̃ₙ/k̃ₙ₋₁ obey r_{n+1} = h²/rₙ + n.
        let ln_k0 = bessel_kn_scaled(0, z)?.ln() - z;
        let ln_k1 = h.ln() + bessel_kn_scaled(1, z)?.ln() - z;
        let mut ratio = (ln_k1 - ln_k0).exp();
        let mut ln_kt = ln_k1;
        let ln_o = o.ln();
        let base = std::f64::consts::LN_2 - o;
        let (mut lmax, mut acc) = (f64::NEG_INFINITY, 0.0);
        let mut prev = f64::NEG_INFINITY;
        for n in 0..SERIES_MAX_TERMS {
            let nf = n as f64;
            let ln_term = if n == 0 {
                base + ln_kt
            } else {
                base + nf * ln_o - 2.0 * ln_gamma(nf + 1.0) + ln_kt
            };
            if ln_term > lmax {
                acc = acc * (lmax - ln_term).exp() + 1.0;
                lmax = ln_term;
            } else {
                acc += (ln_term - lmax).exp();
            }
            if o == 0.0 {
                return Ok((lmax.exp() * acc).min(1.0));
            }
            let total = lmax + acc.ln();
            if ln_term < prev && ln_term < total + SERIES_TOL.ln() {
                return Ok((total.exp()).min(1.0));
            }
            prev = ln_term;
            // advance k̃_{n+1} → k̃_{n+2}
            ratio = h * h / ratio + (nf + 1.0);
            ln_kt += ratio.ln();
        }
        Err(Error::Series {
            series: "Rician inverse-exponential",
            partial_sum: lmax.exp() * acc,
            terms: SERIES_MAX_TERMS,
        })
    }

    /// E[exp(−A/κ)] by direct quadrature.
    pub fn inverse_exp_quadrature(&self, a: f64) -> Result<f64> {
        if a == 0.0 {
            return Ok(1.0);
        }
        self.expect(
            |k| if k > 0.0 { (-a / k).exp() } else { 0.0 },
            Tolerance::relative(1e-12).with_abs(1e-300),
        )
    }
}
