//! Modified Bessel functions I₀, I₁ and Kₙ of integer order.

use super::expint::EULER_GAMMA;
use crate::error::{Error, Result};
use std::f64::consts::PI;

const I0_SERIES_LIMIT: f64 = 30.0;
const K_SERIES_LIMIT: f64 = 2.0;

/// e^{−z}·I₀(z) and e^{−z}·I₁(z) for z ≥ 0.
fn i01_scaled(z: f64) -> (f64, f64) {
    if z <= I0_SERIES_LIMIT {
        let q = 0.25 * z * z;
        let (mut t0, mut t1) = (1.0, 0.5 * z);
        let (mut s0, mut s1) = (t0, t1);
        for k in 1..200 {
            let kf = k as f64;
            t0 *= q / (kf * kf);
            t1 *= q / (kf * (kf + 1.0));
            s0 += t0;
            s1 += t1;
            if t0 < 1e-17 * s0 && t1 < 1e-17 * s1 {
                break;
            }
        }
        let e = (-z).exp();
        (s0 * e, s1 * e)
    } else {
        // Hankel expansion: Σ (−1)^k a_k(ν) / z^k with a_k = Π(4ν² − (2j−1)²) / (k! 8^k)
        let mut s0 = 1.0;
        let mut s1 = 1.0;
        let mut t0 = 1.0;
        let mut t1 = 1.0;
        for k in 1..40 {
            let odd = (2 * k - 1) as f64;
            let kf = k as f64;
            t0 *= -(0.0 - odd * odd) / (kf * 8.0 * z);
            t1 *= -(4.0 - odd * odd) / (kf * 8.0 * z);
            s0 += t0;
            s1 += t1;
            if t0.abs() < 1e-17 && t1.abs() < 1e-17 {
                break;
            }
        }
        let pre = 1.0 / (2.0 * PI * z).sqrt();
        (pre * s0, pre * s1)
    }
}

/// I₀(z) for z ≥ 0.
pub fn bessel_i0(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain("bessel_i0", format!("z = {z} must be ≥ 0")));
    }
    Ok(i01_scaled(z).0 * z.exp())
}

/// e^{−z}·I₀(z) for z ≥ 0.
pub fn bessel_i0_scaled(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain(
            "bessel_i0_scaled",
            format!("z = {z} must be ≥ 0"),
        ));
    }
    Ok(i01_scaled(z).0)
}

/// e^{z}·K₀(z) and e^{z}·K₁(z) for z > 0.
fn k01_scaled(z: f64) -> (f64, f64) {
    if z <= K_SERIES_LIMIT {
        k01_scaled_series(z)
    } else {
        k01_scaled_steed(z)
    }
}

fn k01_scaled_series(z: f64) -> (f64, f64) {
    {
        let q = 0.25 * z * z;
        let lnh = (0.5 * z).ln();
        let (i0s, i1s) = i01_scaled(z);
        let (i0, i1) = (i0s * z.exp(), i1s * z.exp());
        // ψ(k+1) = −γ + H_k
        let mut psi_k1 = -EULER_GAMMA;
        let mut psi_k2 = 1.0 - EULER_GAMMA;
        let mut t0 = 1.0;
        let mut t1 = 1.0;
        let mut s0 = psi_k1;
        let mut s1 = psi_k1 + psi_k2;
        for k in 1..100 {
            let kf = k as f64;
            psi_k1 += 1.0 / kf;
            psi_k2 += 1.0 / (kf + 1.0);
            t0 *= q / (kf * kf);
            t1 *= q / (kf * (kf + 1.0));
            let a0 = psi_k1 * t0;
            let a1 = (psi_k1 + psi_k2) * t1;
            s0 += a0;
            s1 += a1;
            if a0.abs() < 1e-17 * s0.abs() && a1.abs() < 1e-17 * s1.abs() {
                break;
            }
        }
        let k0 = -lnh * i0 + s0;
        let k1 = 1.0 / z + lnh * i1 - 0.25 * z * s1;
        let e = z.exp();
        (k0 * e, k1 * e)
    }
}

/// Steed's method (continued fraction CF2) at ν = 0.
fn k01_scaled_steed(z: f64) -> (f64, f64) {
    {
        let mut b = 2.0 * (1.0 + z);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..10_000 {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < 1e-17 {
                break;
            }
        }
        h *= a1;
        let k0 = (PI / (2.0 * z)).sqrt() / s;
        let k1 = k0 * (z + 0.5 - h) / z;
        (k0, k1)
    }
}

/// e^{z}·Kₙ(z) for z > 0.
pub fn bessel_kn_scaled(order: u32, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain("bessel_kn", format!("z = {z} must be > 0")));
    }
    let (k0, k1) = k01_scaled(z);
    if order == 0 {
        return Ok(k0);
    }
    let (mut km, mut k) = (k0, k1);
    for n in 1..order {
        let next = km + 2.0 * n as f64 / z * k;
        km = k;
        k = next;
    }
    Ok(k)
}

/// Kₙ(z) for integer n ≥ 0 and z > 0.
pub fn bessel_kn(order: u32, z: f64) -> Result<f64> {
    Ok(bessel_kn_scaled(order, z)? * (-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert_relative_eq!(
            bessel_kn(1, 2.0).unwrap(),
            0.139_865_881_816_522_43,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_kn(0, 2.0).unwrap(),
            0.113_893_872_749_533_44,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_kn(0, 0.1).unwrap(),
            2.427_069_024_702_016_7,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_kn(1, 0.1).unwrap(),
            9.853_844_780_870_606,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_kn(0, 5.0).unwrap(),
            3.691_098_334_042_594e-3,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_kn(5, 3.0).unwrap(),
            0.937_773_602_386_808_03,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_i0(10.0).unwrap(),
            2_815.716_628_466_254,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_i0(45.0).unwrap(),
            2.083_414_075_177_314_8e18,
            max_relative = 1e-13
        );
    }

    #[test]
    fn seams_are_continuous() {
        let lo = k01_scaled_series(K_SERIES_LIMIT);
        let hi = k01_scaled_steed(K_SERIES_LIMIT);
        assert_relative_eq!(lo.0, hi.0, max_relative = 1e-14);
        assert_relative_eq!(lo.1, hi.1, max_relative = 1e-14);
        let lo = i01_scaled(I0_SERIES_LIMIT);
        let hi = i01_scaled(I0_SERIES_LIMIT * (1.0 + 1e-12));
        assert_relative_eq!(lo.0, hi.0, max_relative = 1e-12);
    }

    #[test]
    fn product_asymptotic() {
        let z = 50.0;
        let p = bessel_i0_scaled(z).unwrap() * bessel_kn_scaled(0, z).unwrap();
        assert!((p * 2.0 * z - 1.0).abs() < 0.01);
    }

    #[test]
    fn kn_decreasing() {
        for n in 0..6 {
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let v = bessel_kn(n, i as f64 * 0.1).unwrap();
                assert!(v > 0.0 && v < prev);
                prev = v;
            }
        }
    }
}
