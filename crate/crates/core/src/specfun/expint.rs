//! Exponential integrals on the negative axis and the scaled form eEi(t) = eᵗ·Ei(−t).

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_431;

const SERIES_LIMIT: f64 = 1.0;

/// Power series of E₁(x) for 0 < x ≤ 1.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..60 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified-Lentz continued fraction for eˣ·E₁(x), x > 1.
fn e1_scaled_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// E₁(x) = ∫ₓ^∞ e^{−t}/t dt for x > 0.
pub fn e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("e1", format!("x = {x} must be > 0")));
    }
    Ok(if x <= SERIES_LIMIT {
        e1_series(x)
    } else {
        e1_scaled_cf(x) * (-x).exp()
    })
}

/// Ei(x) for x < 0, equal to −E₁(−x).
pub fn ei_negative(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::domain("ei_negative", format!("x = {x} must be < 0")));
    }
    Ok(-e1(-x)?)
}

/// eEi(t) = eᵗ·Ei(−t) for t > 0, without forming eᵗ on the continued-fraction branch.
pub fn eei_scaled(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("eei_scaled", format!("t = {t} must be > 0")));
    }
    if t.is_infinite() {
        return Ok(-0.0);
    }
    Ok(if t <= SERIES_LIMIT {
        -t.exp() * e1_series(t)
    } else {
        -e1_scaled_cf(t)
    })
}

/// Unchecked eEi for internal callers that guarantee t > 0.
pub(crate) fn eei(t: f64) -> f64 {
    debug_assert!(t > 0.0, "eEi argument must be positive, got {t}");
    if t <= SERIES_LIMIT {
        -t.exp() * e1_series(t)
    } else if t.is_infinite() {
        -0.0
    } else {
        -e1_scaled_cf(t)
    }
}

/// Antiderivative-style bracket e^{bt}·Ei(at) − Ei((a+b)t), continuous on [0, ∞].
fn exp_ei_bracket(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        -(b / a).ln_1p()
    } else if t.is_infinite() {
        0.0
    } else {
        let s = (a + b) * t;
        s.exp() * eei(-a * t) - s.exp() * eei(-s)
    }
}

/// ∫_{lower}^{upper} e^{bx}·Ei(ax) dx for a < 0, a + b < 0, b ≠ 0 and
/// 0 ≤ lower < upper ≤ ∞.
pub fn exp_ei_integral(a: f64, b: f64, lower: f64, upper: f64) -> Result<f64> {
    if !(a < 0.0) || !(a + b < 0.0) || b == 0.0 || !b.is_finite() {
        return Err(Error::domain(
            "exp_ei_integral",
            format!("need a < 0, a + b < 0, b ≠ 0; got a = {a}, b = {b}"),
        ));
    }
    if !(lower >= 0.0) || !(upper > lower) || lower.is_infinite() {
        return Err(Error::domain(
            "exp_ei_integral",
            format!("need 0 ≤ lower < upper; got [{lower}, {upper}]"),
        ));
    }
    Ok((exp_ei_bracket(a, b, upper) - exp_ei_bracket(a, b, lower)) / b)
}
