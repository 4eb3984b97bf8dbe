//! Incomplete-G expectation
//! J₁(n, a, b, c, d) = Σₖ (d/4)ᵏ/(k!)²·J₂(n+k), J₂(m) = ∫₀^∞ xᵐe^{−ax−b/x}/(x+c) dx.

use super::gamma::{ln_gamma, ln_gamma_complex, upper_incomplete_gamma_complex_scaled};
use crate::error::{Error, Result};
use crate::quad::{integrate_whole_line, Tolerance};
use num_complex::Complex64;

pub const SERIES_TOL: f64 = 1e-12;
pub const SERIES_MAX_TERMS: usize = 200;

const CONTOUR_SHIFT: f64 = -0.25;
const CONTOUR_FLOOR: f64 = 1e-16;
const CONTOUR_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompleteGArgs {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl IncompleteGArgs {
    pub fn new(n: u32, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let checks = [
            ("a", a > 0.0 && a.is_finite(), "must be finite and > 0"),
            ("b", b >= 0.0 && b.is_finite(), "must be finite and ≥ 0"),
            ("c", c > 0.0 && c.is_finite(), "must be finite and > 0"),
            ("d", d >= 0.0 && d.is_finite(), "must be finite and ≥ 0"),
        ];
        for (key, ok, constraint) in checks {
            if !ok {
                return Err(Error::Domain {
                    function: "incomplete_g",
                    detail: format!("{key} {constraint}"),
                });
            }
        }
        Ok(Self { n, a, b, c, d })
    }
}

/// ln J₂(m; a, b, c) by quadrature in ln x centred on the peak of xᵐ⁺¹e^{−ax−b/x}.
pub fn ln_j2_quadrature(m: u32, a: f64, b: f64, c: f64) -> Result<f64> {
    IncompleteGArgs::new(m, a, b, c, 0.0)?;
    let p = m as f64 + 1.0;
    let x_star = (p + (p * p + 4.0 * a * b).sqrt()) / (2.0 * a);
    let u_star = x_star.ln();
    let phi = |u: f64| p * u - a * u.exp() - b * (-u).exp();
    let peak = phi(u_star);
    let est = integrate_whole_line(
        |t| {
            let u = u_star + t;
            let e = phi(u) - peak;
            if !e.is_finite() || e < -745.0 {
                return 0.0;
            }
            e.exp() / (u.exp() + c)
        },
        Tolerance::relative(1e-13).with_abs(1e-300),
    )?;
    Ok(peak + est.value.ln())
}

pub fn j2_quadrature(m: u32, a: f64, b: f64, c: f64) -> Result<f64> {
    Ok(ln_j2_quadrature(m, a, b, c)?.exp())
}

/// J₂ from the Mellin–Barnes integral on Re s = −1/4:
/// cᵐ·(1/2πi)∫ Γ(−s)(b/c)ˢΓ(m+1−s)·e^{ac}Γ(s−m, ac) ds. Requires b > 0.
pub fn j2_contour(m: u32, a: f64, b: f64, c: f64) -> Result<f64> {
    IncompleteGArgs::new(m, a, b, c, 0.0)?;
    if b == 0.0 {
        return Err(Error::domain("j2_contour", "b must be > 0"));
    }
    let mf = m as f64;
    let ln_bc = (b / c).ln();
    let ac = a * c;
    let integrand = |y: f64| -> Result<Complex64> {
        let s = Complex64::new(CONTOUR_SHIFT, y);
        let ln_part = ln_gamma_complex(-s) + s * ln_bc + ln_gamma_complex(mf + 1.0 - s);
        Ok(ln_part.exp() * upper_incomplete_gamma_complex_scaled(s - mf, ac)?)
    };
    let trapezoid = |h: f64, peak: &mut f64| -> Result<f64> {
        let f0 = integrand(0.0)?;
        *peak = peak.max(f0.norm());
        let mut sum = 0.5 * f0.re;
        let mut below = 0;
        let mut k = 1usize;
        while below < 3 {
            let v = integrand(k as f64 * h)?;
            let mag = v.norm();
            if !mag.is_finite() {
                return Err(Error::Contour {
                    detail: format!("non-finite integrand at Im s = {}", k as f64 * h),
                });
            }
            *peak = peak.max(mag);
            sum += v.re;
            below = if mag < CONTOUR_FLOOR * *peak { below + 1 } else { 0 };
            k += 1;
            if k > 2_000_000 {
                return Err(Error::Contour {
                    detail: "integrand did not decay".into(),
                });
            }
        }
        Ok(sum * h / std::f64::consts::PI)
    };
    let scale = c.powi(m as i32);
    let mut h = 0.5;
    let mut peak = 0.0;
    let mut prev = trapezoid(h, &mut peak)?;
    for _ in 0..16 {
        h *= 0.5;
        let next = trapezoid(h, &mut peak)?;
        if (next - prev).abs() <= CONTOUR_REL_TOL * next.abs() {
            return Ok(scale * next);
        }
        prev = next;
    }
    Err(Error::Contour {
        detail: format!("trapezoid refinement stalled at step {h}"),
    })
}

/// J₁(n, a, b, c, d), summed in log space until a term falls below 10⁻¹² of the total.
pub fn incomplete_g_expectation(args: IncompleteGArgs) -> Result<f64> {
    let IncompleteGArgs { n, a, b, c, d } = args;
    let first = ln_j2_quadrature(n, a, b, c)?;
    if d == 0.0 {
        return Ok(first.exp());
    }
    let ln_q = (0.25 * d).ln();
    let (mut lmax, mut acc) = (first, 1.0);
    let mut prev = first;
    for k in 1..SERIES_MAX_TERMS as u32 {
        let kf = k as f64;
        let ln_term = kf * ln_q - 2.0 * ln_gamma(kf + 1.0) + ln_j2_quadrature(n + k, a, b, c)?;
        if ln_term > lmax {
            acc = acc * (lmax - ln_term).exp() + 1.0;
            lmax = ln_term;
        } else {
            acc += (ln_term - lmax).exp();
        }
        let total = lmax + acc.ln();
        if ln_term < prev && ln_term < total + SERIES_TOL.ln() {
            return Ok(total.exp());
        }
        prev = ln_term;
    }
    Err(Error::Series {
        series: "incomplete-G",
        partial_sum: lmax.exp() * acc,
        terms: SERIES_MAX_TERMS,
    })
}
