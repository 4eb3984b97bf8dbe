//! Brute-force reference evaluators for tests.
//!
//! Nothing here calls into `specfun`, `quad`, `outage` or `ergodic`: the
//! quadrature rule, Ei, I₀ and the channel densities are rebuilt from their
//! integral definitions. Only elementary functions and `statrs`' lnΓ are shared.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

const GL_ORDER: usize = 20;
pub const MAX_NESTED_DIMS: usize = 3;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on Pₙ.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
            return Err(Error::validation("oracle.tolerance", "rel_tol and abs_tol must be > 0"));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }

    pub fn tight() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_subdivisions: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    /// [a, ∞) mapped to [0, 1) by t = (x − a)/(1 + x − a).
    SemiInfinite(f64),
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn rule<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * gauss_legendre().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}

fn segment<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let m = 0.5 * (a + b);
    let whole = rule(f, a, b);
    let value = rule(f, a, m) + rule(f, m, b);
    Segment {
        a,
        b,
        value,
        error: (whole - value).abs(),
    }
}

fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: QuadSpec) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    heap.push(segment(&mut f, a, b));
    for _ in 0..spec.max_subdivisions {
        let (total, err) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !total.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error: err,
                subdivisions: heap.len(),
            });
        }
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(segment(&mut f, worst.a, m));
        heap.push(segment(&mut f, m, worst.b));
    }
    let (total, err) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Err(Error::Quadrature {
        estimate: total,
        error: err,
        subdivisions: spec.max_subdivisions,
    })
}

/// ∫ f over `domain`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, domain: Domain, spec: QuadSpec) -> Result<f64> {
    match domain {
        Domain::Finite(a, b) => adaptive(f, a, b, spec),
        Domain::SemiInfinite(a) => adaptive(
            |t| {
                let x = a + t / (1.0 - t);
                let v = f(x) / ((1.0 - t) * (1.0 - t));
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            spec,
        ),
    }
}

/// eᵗ·Ei(−t) = −∫₀^∞ e^{−ts}/(1+s) ds, t > 0.
pub fn eei(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("oracle::eei", format!("t = {t} must be > 0")));
    }
    // s = eᵘ keeps the slowly decaying 1/s stretch well resolved for small t.
    let spec = QuadSpec::tight();
    let upper = (800.0 / t).ln().max(1.0);
    let v = adaptive(
        |u| {
            let s = u.exp();
            (-t * s).exp() * s / (1.0 + s)
        },
        -40.0,
        upper,
        spec,
    )?;
    Ok(-v)
}

/// Ei(x) for x < 0.
pub fn ei_negative(x: f64) -> Result<f64> {
    Ok(x.exp() * eei(-x)?)
}

/// e^{−z}·I₀(z) = (1/π)∫₀^π e^{z(cos θ − 1)} dθ.
pub fn bessel_i0_scaled(z: f64) -> Result<f64> {
    let v = adaptive(|th| (z * (th.cos() - 1.0)).exp(), 0.0, PI, QuadSpec::tight())?;
    Ok(v / PI)
}

/// Unit-mean Gamma density with shape `k`.
pub fn gamma_pdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (k * k.ln() + (k - 1.0) * x.ln() - k * x - ln_gamma(k)).exp()
}

/// Non-central chi-square power density with unit mean and K-factor Ω.
pub fn rician_pdf(k: f64, omega: f64) -> Result<f64> {
    if k < 0.0 {
        return Ok(0.0);
    }
    let z = 2.0 * (omega * (1.0 + omega) * k).sqrt();
    Ok((1.0 + omega) * (-omega - (1.0 + omega) * k + z).exp() * bessel_i0_scaled(z)?)
}

/// Scalar weight of one dimension in [`nested_expectation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Exponential { rate: f64 },
    Gamma { shape: f64 },
    Rician { omega: f64 },
}

impl Weight {
    fn pdf(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            Weight::Exponential { rate } => rate * (-rate * x).exp(),
            Weight::Gamma { shape } => gamma_pdf(x, shape),
            Weight::Rician { omega } => rician_pdf(x, omega)?,
        })
    }
}

/// E[f(X)] = ∫ f·pdf over `domain`, after checking ∫ pdf = 1 to 10⁻⁶.
pub fn quad_expectation<P, F>(mut pdf: P, mut f: F, domain: Domain, spec: QuadSpec) -> Result<f64>
where
    P: FnMut(f64) -> f64,
    F: FnMut(f64) -> f64,
{
    let norm = integrate(&mut pdf, domain, spec)?;
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::validation("oracle.pdf", format!("density integrates to {norm}")));
    }
    integrate(|x| f(x) * pdf(x), domain, spec)
}

/// Tensor-product expectation over independent weights, at most three dimensions.
pub fn nested_expectation<F>(weights: &[Weight], f: F, spec: QuadSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if weights.len() > MAX_NESTED_DIMS {
        return Err(Error::CostGuard {
            detail: format!("{} dimensions requested, at most {MAX_NESTED_DIMS}", weights.len()),
        });
    }
    let mut point = vec![0.0; weights.len()];
    nested(weights, &f, spec, &mut point, 0)
}

fn nested<F: Fn(&[f64]) -> f64>(
    weights: &[Weight],
    f: &F,
    spec: QuadSpec,
    point: &mut Vec<f64>,
    depth: usize,
) -> Result<f64> {
    if depth == weights.len() {
        return Ok(f(point));
    }
    let mut failure = None;
    let inner_spec = QuadSpec {
        rel_tol: spec.rel_tol * 0.1,
        ..spec
    };
    let v = integrate(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            let pdf = match weights[depth].pdf(x) {
                Ok(p) => p,
                Err(e) => {
                    failure = Some(e);
                    return 0.0;
                }
            };
            if pdf == 0.0 {
                return 0.0;
            }
            point[depth] = x;
            match nested(weights, f, inner_spec, point, depth + 1) {
                Ok(v) => v * pdf,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        Domain::SemiInfinite(0.0),
        spec,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// E[f(g̃)] with g̃ = A₀·X·Y·e^{−E/ξ²}, X ~ Γ(α, 1/α), Y ~ Γ(β, 1/β), E ~ Exp(1).
pub fn gg_expectation<F: Fn(f64) -> f64>(f: F, alpha: f64, beta: f64, xi: f64, a0: f64, spec: QuadSpec) -> Result<f64> {
    let inv = 1.0 / (xi * xi);
    nested_expectation(
        &[
            Weight::Gamma { shape: alpha },
            Weight::Gamma { shape: beta },
            Weight::Exponential { rate: 1.0 },
        ],
        |p| f(a0 * p[0] * p[1] * (-p[2] * inv).exp()),
        spec,
    )
}

/// J₁ = ∫₀^∞ xⁿe^{−ax−b/x}·I₀(√(dx))/(x+c) dx from its defining integral.
pub fn incomplete_g_integral(n: u32, a: f64, b: f64, c: f64, d: f64, spec: QuadSpec) -> Result<f64> {
    let mut failure = None;
    let v = integrate(
        |x| {
            if x <= 0.0 {
                return 0.0;
            }
            let z = (d * x).sqrt();
            let e = n as f64 * x.ln() - a * x - b / x + z;
            if e < -745.0 {
                return 0.0;
            }
            match bessel_i0_scaled(z) {
                Ok(i0) => e.exp() * i0 / (x + c),
                Err(err) => {
                    failure = Some(err);
                    0.0
                }
            }
        },
        Domain::SemiInfinite(0.0),
        spec,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// ∫_{lower}^{upper} e^{bx}·Ei(ax) dx with Ei(ax) = −∫₁^∞ e^{axs}/s ds and the x
/// integral done first, leaving one quadrature over s.
pub fn exp_ei_integral(a: f64, b: f64, lower: f64, upper: f64, spec: QuadSpec) -> Result<f64> {
    if !(a < 0.0 && a + b < 0.0) {
        return Err(Error::domain("oracle::exp_ei_integral", "need a < 0 and a + b < 0"));
    }
    let inner = |s: f64| {
        let r = b + a * s;
        let at = |x: f64| if x.is_infinite() { 0.0 } else { (r * x).exp() };
        (at(upper) - at(lower)) / r
    };
    Ok(-integrate(|u| inner(1.0 + u) / (1.0 + u), Domain::SemiInfinite(0.0), spec)?)
}

/// The same integral by direct quadrature of the integrand, using [`ei_negative`].
pub fn exp_ei_integral_direct(a: f64, b: f64, lower: f64, upper: f64, spec: QuadSpec) -> Result<f64> {
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (b * x).exp() * ei_negative(a * x).unwrap_or(f64::NAN) };
    if upper.is_infinite() {
        integrate(f, Domain::SemiInfinite(lower), spec)
    } else {
        integrate(f, Domain::Finite(lower, upper), spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec {
        QuadSpec::new(1e-10, 1e-300, 10_000).unwrap()
    }

    #[test]
    fn rule_is_exact_for_polynomials() {
        let v = rule(&mut |x: f64| x.powi(39), 0.0, 1.0);
        assert!((v - 1.0 / 40.0).abs() < 1e-15);
        let w: f64 = gauss_legendre().iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_integral_reference() {
        assert!((ei_negative(-1.0).unwrap() + 0.219_383_934_395_520_27).abs() < 1e-13);
        assert!((eei(1e-6).unwrap() + 13.238_309_131_365_003).abs() < 1e-12);
        assert!((eei(1e-3).unwrap() + 6.337_874_070_325_488).abs() < 1e-12);
        assert!((eei(50.0).unwrap() + 0.019_615_109_930_114_87).abs() < 1e-13);
    }

    #[test]
    fn bessel_reference() {
        assert!((bessel_i0_scaled(1.0).unwrap() - 1.266_065_877_752_008_4 * (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn densities_normalise() {
        for omega in [0.0, 1.0, 3.981] {
            let v = quad_expectation(|k| rician_pdf(k, omega).unwrap(), |_| 1.0, Domain::SemiInfinite(0.0), spec());
            assert!((v.unwrap() - 1.0).abs() < 1e-9);
            let mean = quad_expectation(|k| rician_pdf(k, omega).unwrap(), |k| k, Domain::SemiInfinite(0.0), spec());
            assert!((mean.unwrap() - 1.0).abs() < 1e-9);
        }
        let g = gg_expectation(|_| 1.0, 4.0, 2.0, 2.0, 3.4659e-3, QuadSpec::new(1e-8, 1e-300, 4000).unwrap());
        assert!((g.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bad_density_is_rejected() {
        let r = quad_expectation(|x| 2.0 * (-x).exp(), |x| x, Domain::SemiInfinite(0.0), spec());
        assert!(r.is_err());
    }

    #[test]
    fn separable_integrand_factorises() {
        let w = [Weight::Exponential { rate: 1.0 }, Weight::Gamma { shape: 2.5 }];
        let joint = nested_expectation(&w, |p| (1.0 + p[0]).recip() * p[1].sqrt(), spec()).unwrap();
        let fx = nested_expectation(&w[..1], |p| (1.0 + p[0]).recip(), spec()).unwrap();
        let gy = nested_expectation(&w[1..], |p| p[0].sqrt(), spec()).unwrap();
        assert!((joint - fx * gy).abs() < 1e-9 * joint);
    }

    #[test]
    fn exponential_product_expectation() {
        let (q, c, l) = (1e-9, 0.7, [3e-11, 8e-11]);
        let w = [Weight::Exponential { rate: 1.0 }; 2];
        let v = nested_expectation(&w, |p| (-c * (l[0] * p[0] + l[1] * p[1]) / q).exp(), spec()).unwrap();
        let want: f64 = l.iter().map(|li| q / (q + c * li)).product();
        assert!((v - want).abs() < 1e-8 * want);
    }

    #[test]
    fn exp_ei_forms_agree() {
        let s = QuadSpec::new(1e-11, 1e-300, 4000).unwrap();
        for (a, b, lo, hi) in [(-1.0, -0.5, 0.0, 2.0), (-2.0, 1.5, 0.3, f64::INFINITY), (-0.2, -3.0, 1.0, 4.0)] {
            let x = exp_ei_integral(a, b, lo, hi, s).unwrap();
            let y = exp_ei_integral_direct(a, b, lo, hi, s).unwrap();
            assert!((x - y).abs() < 1e-9 * x.abs(), "{a} {b} {lo} {hi}: {x} vs {y}");
        }
    }

    #[test]
    fn cost_guard() {
        let w = [Weight::Exponential { rate: 1.0 }; 4];
        assert!(matches!(nested_expectation(&w, |_| 1.0, spec()), Err(Error::CostGuard { .. })));
    }
}
