//! Gamma-Gamma turbulence with pointing error: density of g̃ and the
//! expectation 𝒢(A) = E[exp(−A/g̃²)] by quadrature and by Mellin–Barnes contour.

use super::gamma::{ln_gamma, ln_gamma_complex, ln_upper_incomplete_gamma};
use crate::error::{Error, Result};
use crate::quad::{integrate_whole_line, Tolerance};
use num_complex::Complex64;
use std::cell::Cell;
use std::collections::HashMap;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeijerGFsoParams {
    /// Large-scale turbulence shape α.
    pub alpha: f64,
    /// Small-scale turbulence shape β.
    pub beta: f64,
    /// Pointing ratio ξ (equivalent beam radius over jitter).
    pub xi: f64,
    /// Geometric-loss ceiling A₀ ∈ (0, 1].
    pub a0: f64,
}

impl MeijerGFsoParams {
    pub fn new(alpha: f64, beta: f64, xi: f64, a0: f64) -> Result<Self> {
        let checks = [
            ("alpha", alpha > 0.0, "must be > 0"),
            ("beta", beta > 0.0, "must be > 0"),
            ("xi", xi > 0.0, "must be > 0"),
            ("a0", a0 > 0.0 && a0 <= 1.0, "must lie in (0, 1]"),
        ];
        for (key, ok, constraint) in checks {
            if !ok {
                return Err(Error::validation(key, constraint));
            }
        }
        Ok(Self {
            alpha,
            beta,
            xi,
            a0,
        })
    }
}

/// Which path produced a contour-requested 𝒢(A) value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalgPath {
    Contour,
    /// The contour did not converge and the quadrature value was returned.
    QuadratureFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalgValue {
    pub value: f64,
    pub path: CalgPath,
}

const CONTOUR_SHIFT: f64 = 0.25;
const CONTOUR_FLOOR: f64 = 1e-16;
const CONTOUR_REL_TOL: f64 = 1e-10;

/// Distribution of the composite FSO gain g̃ = g_p·g_f.
///
/// Density values are memoised per abscissa, so repeated expectations that
/// share quadrature nodes evaluate the inner integral only once.
#[derive(Debug)]
pub struct GgPointingLaw {
    params: MeijerGFsoParams,
    memo: Mutex<HashMap<u64, f64>>,
}

impl Clone for GgPointingLaw {
    fn clone(&self) -> Self {
        Self::new(self.params)
    }
}

impl GgPointingLaw {
    pub fn new(params: MeijerGFsoParams) -> Self {
        Self {
            params,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> MeijerGFsoParams {
        self.params
    }

    fn pdf_uncached(&self, g: f64) -> Result<f64> {
        let MeijerGFsoParams {
            alpha,
            beta,
            xi,
            a0,
        } = self.params;
        let x2 = xi * xi;
        let s = alpha - x2;
        let ln_pre = x2.ln() - x2 * a0.ln() + (x2 - 1.0) * g.ln() + x2 * alpha.ln() - ln_gamma(alpha);
        let ln_wb = beta * beta.ln() - ln_gamma(beta);
        let scale = alpha * g / a0;
        let failure = Cell::new(None);
        let inner = integrate_whole_line(
            |v| {
                let ln_w = ln_wb + (beta - x2) * v - beta * v.exp();
                let x = scale * (-v).exp();
                if !ln_w.is_finite() || !(x > 0.0) {
                    return 0.0;
                }
                match ln_upper_incomplete_gamma(s, x) {
                    Ok(lq) => (ln_pre + ln_w + lq).exp(),
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                }
            },
            Tolerance::relative(1e-12).with_abs(1e-300),
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(inner?.value)
    }

    /// Density f_g̃(g) for g > 0.
    pub fn pdf(&self, g: f64) -> Result<f64> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::domain("gg_pointing_pdf", format!("g = {g} must be finite and > 0")));
        }
        let key = g.to_bits();
        if let Some(&v) = self.memo.lock().expect("density memo poisoned").get(&key) {
            return Ok(v);
        }
        let v = self.pdf_uncached(g)?;
        self.memo.lock().expect("density memo poisoned").insert(key, v);
        Ok(v)
    }

    /// E[f(g̃)] by adaptive quadrature in ln(g̃/A₀).
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F, tol: Tolerance) -> Result<f64> {
        let a0 = self.params.a0;
        let failure = Cell::new(None);
        let est = integrate_whole_line(
            |w| {
                let g = a0 * w.exp();
                if g == 0.0 || !g.is_finite() {
                    return 0.0;
                }
                match self.pdf(g) {
                    Ok(p) if p > 0.0 => f(g) * p * g,
                    Ok(_) => 0.0,
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                }
            },
            tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(est?.value)
    }

    /// 𝒢(A) = E[exp(−A/g̃²)] by direct quadrature (production path).
    pub fn calg(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(Error::domain("calg", format!("A = {a} must be ≥ 0")));
        }
        if a == 0.0 {
            return Ok(1.0);
        }
        let v = self.expect(|g| (-a / (g * g)).exp(), Tolerance::relative(1e-10).with_abs(1e-300))?;
        Ok(v.clamp(0.0, 1.0))
    }

    fn mellin_integrand(&self, ln_arg: f64, y: f64) -> Complex64 {
        let MeijerGFsoParams { alpha, beta, xi, .. } = self.params;
        let x2 = xi * xi;
        let u = Complex64::new(CONTOUR_SHIFT, y);
        let ln_m = ln_gamma_complex(u) - u * ln_arg + ln_gamma_complex(alpha + 2.0 * u)
            + ln_gamma_complex(beta + 2.0 * u)
            - ln_gamma(alpha)
            - ln_gamma(beta);
        ln_m.exp() * x2 / (x2 + 2.0 * u)
    }

    fn contour_trapezoid(&self, ln_arg: f64, h: f64, peak: &mut f64) -> Result<f64> {
        let mut sum = 0.5 * self.mellin_integrand(ln_arg, 0.0).re;
        *peak = peak.max(self.mellin_integrand(ln_arg, 0.0).norm());
        let mut below = 0;
        let mut k = 1usize;
        while below < 3 {
            let m = self.mellin_integrand(ln_arg, k as f64 * h);
            let mag = m.norm();
            if !mag.is_finite() {
                return Err(Error::Contour {
                    detail: format!("non-finite integrand at Im u = {}", k as f64 * h),
                });
            }
            *peak = peak.max(mag);
            sum += m.re;
            below = if mag < CONTOUR_FLOOR * *peak { below + 1 } else { 0 };
            k += 1;
            if k > 2_000_000 {
                return Err(Error::Contour {
                    detail: "integrand did not decay".into(),
                });
            }
        }
        Ok(sum * h / std::f64::consts::PI)
    }

    /// 𝒢(A) from the Mellin–Barnes integral on Re u = 1/4.
    pub fn calg_contour_only(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(Error::domain("calg_contour", format!("A = {a} must be ≥ 0")));
        }
        if a == 0.0 {
            return Ok(1.0);
        }
        let MeijerGFsoParams { alpha, beta, a0, .. } = self.params;
        let ln_arg = a.ln() + 2.0 * (alpha * beta).ln() - 2.0 * a0.ln();
        let mut h = 0.5;
        let mut peak = 0.0;
        let mut prev = self.contour_trapezoid(ln_arg, h, &mut peak)?;
        for _ in 0..16 {
            h *= 0.5;
            let next = self.contour_trapezoid(ln_arg, h, &mut peak)?;
            if (next - prev).abs() <= CONTOUR_REL_TOL * next.abs() {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Contour {
            detail: format!("trapezoid refinement stalled at step {h}"),
        })
    }

    /// 𝒢(A) by contour, falling back to quadrature when the contour fails.
    pub fn calg_contour(&self, a: f64) -> Result<CalgValue> {
        match self.calg_contour_only(a) {
            Ok(value) => Ok(CalgValue {
                value,
                path: CalgPath::Contour,
            }),
            Err(Error::Contour { .. }) => Ok(CalgValue {
                value: self.calg(a)?,
                path: CalgPath::QuadratureFallback,
            }),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(alpha: f64, beta: f64, xi: f64, a0: f64) -> GgPointingLaw {
        GgPointingLaw::new(MeijerGFsoParams::new(alpha, beta, xi, a0).unwrap())
    }

    #[test]
    fn density_normalises() {
        for (a, b, x, a0) in [(4.0, 2.0, 2.0, 3.4659e-3), (2.5, 1.3, 1.1, 0.2), (8.0, 6.5, 4.0, 0.9)] {
            let l = law(a, b, x, a0);
            let total = l.expect(|_| 1.0, Tolerance::relative(1e-11)).unwrap();
            assert_relative_eq!(total, 1.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn calg_limits() {
        let l = law(4.0, 2.0, 2.0, 0.00692);
        assert_eq!(l.calg(0.0).unwrap(), 1.0);
        assert!(l.calg(1e9 * 0.00692f64.powi(2)).unwrap() < 1e-3);
        assert!(l.calg(-1.0).is_err());
    }

    #[test]
    fn contour_matches_quadrature_at_reference_point() {
        let l = law(4.0, 2.0, 2.0, 0.00692);
        let q = l.calg(1e-6).unwrap();
        let c = l.calg_contour(1e-6).unwrap();
        assert_eq!(c.path, CalgPath::Contour);
        assert_relative_eq!(q, c.value, max_relative = 1e-8);
    }

    #[test]
    fn matches_high_precision_reference() {
        let cases = [
            ((4.0, 2.0, 2.0, 3.4659e-3), 1e-7, 0.887_379_455_767_65),
            ((4.0, 2.0, 2.0, 3.4659e-3), 1e-6, 0.630_849_581_779_797),
            ((4.0, 2.0, 2.0, 3.4659e-3), 1e-5, 0.245_141_101_775_832),
            ((4.0, 2.0, 2.0, 3.4659e-3), 1e-4, 0.029_016_815_309_168_1),
            ((2.5, 1.3, 1.1, 0.2), 1e-3, 0.561_567_853_971_085),
            ((2.5, 1.3, 1.1, 0.2), 1e-2, 0.272_932_129_925_222),
            ((2.5, 1.3, 1.1, 0.2), 1e-1, 0.067_632_988_726_562_9),
        ];
        for ((a, b, x, a0), arg, want) in cases {
            let l = law(a, b, x, a0);
            assert_relative_eq!(l.calg(arg).unwrap(), want, max_relative = 1e-8);
            assert_relative_eq!(l.calg_contour_only(arg).unwrap(), want, max_relative = 1e-8);
        }
    }
}
