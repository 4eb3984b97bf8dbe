//! Special functions used by the closed forms: exponential integrals, Bessel
//! functions, incomplete gamma, and the two Meijer-G-class expectations.

mod bessel;
mod calg;
mod expint;
mod gamma;
mod incomplete_g;
mod rician;

pub use bessel::{bessel_i0, bessel_i0_scaled, bessel_kn, bessel_kn_scaled};
pub use calg::{CalgPath, CalgValue, GgPointingLaw, MeijerGFsoParams};
pub use incomplete_g::{
    incomplete_g_expectation, j2_contour, j2_quadrature, ln_j2_quadrature, IncompleteGArgs,
};
pub use rician::RicianPower;
pub use expint::{e1, eei_scaled, ei_negative, exp_ei_integral, EULER_GAMMA};
pub use gamma::{
    gamma, ln_gamma, ln_gamma_complex, ln_upper_incomplete_gamma, upper_incomplete_gamma,
    upper_incomplete_gamma_complex_scaled,
};

pub(crate) use expint::eei;
