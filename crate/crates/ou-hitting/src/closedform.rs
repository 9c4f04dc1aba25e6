//! Exact `b = 0` hitting-time formulas and the Leblanc-Renault-Scaillet
//! comparison baselines.
//!
//! With the barrier at the mean the method of images applies and the density
//! and cumulative probability have closed forms. The Leblanc formulas are the
//! published attempt at the general case; they are provably wrong for
//! `b != 0` (the would-be CDF exceeds 1 when `b (z - b) > 0`) and are kept
//! only so comparisons can demonstrate that failure.

use crate::{Error, Result};

/// Standard normal CDF via `erfc`; `N(0) = 1/2` exactly.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("z must be positive, got {z}")));
    }
    Ok(())
}

/// Hitting density for `b = 0`:
/// `g(t) = z exp(-e^{-t} z^2 / (2 sinh t) + t/2) / sqrt(2 pi sinh^3 t)`.
///
/// Evaluated as `(2 z / sqrt(pi)) exp(-t - z^2 e^{-2t}/w) / w^{3/2}` with
/// `w = 1 - e^{-2t}`, which keeps both the `t -> 0` essential limit and the
/// large-`t` tail inside `f64` range. The exponent is assembled before the
/// single `exp` call.
pub fn density_b0(t: f64, z: f64) -> Result<f64> {
    check_z(z)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let w = -(-2.0 * t).exp_m1(); // 1 - e^{-2t}, accurate for small t
    let expo = -t - z * z * (-2.0 * t).exp() / w;
    Ok(2.0 * z / std::f64::consts::PI.sqrt() * expo.exp() / (w * w.sqrt()))
}

/// Cumulative hitting probability for `b = 0`:
/// `G(t) = 2 N(-e^{-t/2} z / sqrt(sinh t))`, evaluated through the stable
/// argument `-z sqrt(2) e^{-t} / sqrt(1 - e^{-2t})`.
pub fn cdf_b0(t: f64, z: f64) -> Result<f64> {
    check_z(z)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let w = -(-2.0 * t).exp_m1();
    let arg = -z * std::f64::consts::SQRT_2 * (-t).exp() / w.sqrt();
    Ok(2.0 * norm_cdf(arg))
}

fn check_above(z: f64, b: f64) -> Result<()> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    Ok(())
}

/// Leblanc density, `g(t) = (z-b) exp(b(z-b) - e^{-t}(z-b)^2/(2 sinh t) + t/2)
/// / sqrt(2 pi sinh^3 t)`. Correct only for `b = 0`, where it reduces to
/// [`density_b0`]; retained as a comparison baseline.
pub fn leblanc_density(t: f64, z: f64, b: f64) -> Result<f64> {
    check_above(z, b)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let d = z - b;
    let w = -(-2.0 * t).exp_m1();
    let expo = b * d - t - d * d * (-2.0 * t).exp() / w;
    Ok(2.0 * d / std::f64::consts::PI.sqrt() * expo.exp() / (w * w.sqrt()))
}

/// Leblanc cumulative probability,
/// `G(t) = 2 e^{b(z-b)} N(-(z-b) e^{-t/2} / sqrt(sinh t))`.
/// Its `t -> inf` limit is `e^{b(z-b)}`, which exceeds 1 whenever
/// `b (z - b) > 0` -- the defect the comparison command exposes.
pub fn leblanc_cdf(t: f64, z: f64, b: f64) -> Result<f64> {
    check_above(z, b)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = z - b;
    let w = -(-2.0 * t).exp_m1();
    let arg = -d * std::f64::consts::SQRT_2 * (-t).exp() / w.sqrt();
    Ok(2.0 * (b * d).exp() * norm_cdf(arg))
}

/// Green's function of the canonical process,
/// `H(t, x; 0, z) = exp(-(e^t x - z)^2/(2 eta) + t) / sqrt(2 pi eta)` with
/// `eta = (e^{2t} - 1)/2`. Test helper for the image construction.
#[cfg(test)]
pub(crate) fn green_h(t: f64, x: f64, z: f64) -> f64 {
    let eta = 0.5 * (2.0 * t).exp_m1();
    let d = t.exp() * x - z;
    (-d * d / (2.0 * eta) + t).exp() / (2.0 * std::f64::consts::PI * eta).sqrt()
}

/// Image solution `H0 = H(t,x;0,z) - H(t,x;0,-z)`; vanishes on `x = 0`.
#[cfg(test)]
pub(crate) fn image_h0(t: f64, x: f64, z: f64) -> f64 {
    green_h(t, x, z) - green_h(t, x, -z)
}
