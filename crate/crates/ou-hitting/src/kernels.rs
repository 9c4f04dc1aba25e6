//! Heat-potential kernels and forcings for the forward and backward
//! reductions, posed as instances of the generic Volterra form
//! `f = g + ∫ K/sqrt(t-s) f ds`.
//!
//! Forward (theta coordinates, `theta = e^t - 1`):
//! `g(theta) = -forcing(theta)`, `K = -phi_forward`.
//! Backward (vartheta coordinates, `vartheta = 1 - e^{-t}`):
//! `g = 1`, `K = +phi_backward`. Both kernels collapse to the constant
//! `b/sqrt(2 pi)` as all coordinates go to zero, which is the Abel-equation
//! small-time regime.

use crate::volterra::KernelSpec;
use crate::{Error, Result};

const SQRT_PI: f64 = 1.7724538509055160272981674833411452;

/// Forward kernel
/// `phi(theta, theta', b) = (2b/sqrt(pi)) e^{-b^2 (theta-theta')/(2+theta+theta')}
///  (1+theta') / (2+theta+theta')^{3/2}`.
pub fn phi_forward(theta: f64, theta_prime: f64, b: f64) -> f64 {
    let s = 2.0 + theta + theta_prime;
    (2.0 * b / SQRT_PI) * (-b * b * (theta - theta_prime) / s).exp() * (1.0 + theta_prime) / (s * s.sqrt())
}

/// Backward kernel
/// `phi(vt, vt', b) = (2b/sqrt(pi)) e^{-b^2 (vt-vt')/(2-vt-vt')}
///  (1-vt') / (2-vt-vt')^{3/2}`; requires `vartheta < 1`.
pub fn phi_backward(vartheta: f64, vartheta_prime: f64, b: f64) -> Result<f64> {
    if vartheta >= 1.0 {
        return Err(Error::InfiniteTime);
    }
    Ok(phi_backward_raw(vartheta, vartheta_prime, b))
}

#[inline]
pub(crate) fn phi_backward_raw(vartheta: f64, vartheta_prime: f64, b: f64) -> f64 {
    let s = 2.0 - vartheta - vartheta_prime;
    (2.0 * b / SQRT_PI) * (-b * b * (vartheta - vartheta_prime) / s).exp() * (1.0 - vartheta_prime)
        / (s * s.sqrt())
}

/// Free term of the forward Volterra equation,
/// `exp(-((1+theta) b - z)^2 / ((1+theta)^2 - 1)) / sqrt(pi ((1+theta)^2-1))`,
/// with `(1+theta)^2 - 1` evaluated as `theta (2 + theta)`. The `theta -> 0`
/// limit is 0 for `z != b` and is returned exactly at `theta = 0`.
pub fn forward_forcing(theta: f64, z: f64, b: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    let den = theta * (2.0 + theta);
    let d = (1.0 + theta) * b - z;
    (-d * d / den).exp() / (std::f64::consts::PI * den).sqrt()
}

/// Forward problem as a generic Volterra spec on `[0, theta_end]`.
pub fn forward_spec(z: f64, b: f64, theta_end: f64) -> Result<KernelSpec<f64>> {
    if !(z > b) {
        return Err(Error::Domain(format!("forward spec needs z > b, got z = {z}, b = {b}")));
    }
    if !(theta_end > 0.0) {
        return Err(Error::Domain(format!("theta_end must be positive, got {theta_end}")));
    }
    Ok(KernelSpec {
        regular_kernel: Box::new(move |th, tp| -phi_forward(th, tp, b)),
        forcing: Box::new(move |th| -forward_forcing(th, z, b)),
        domain_end: theta_end,
        label: format!("forward(z={z}, b={b})"),
    })
}

/// Backward problem as a generic Volterra spec on `[0, vartheta_end]`,
/// `vartheta_end < 1`. The forcing is the constant 1, so the solution is
/// independent of the starting point.
pub fn backward_spec(b: f64, vartheta_end: f64) -> Result<KernelSpec<f64>> {
    if !(vartheta_end > 0.0 && vartheta_end < 1.0) {
        return Err(Error::Domain(format!("vartheta_end must lie in (0, 1), got {vartheta_end}")));
    }
    Ok(KernelSpec {
        regular_kernel: Box::new(move |vt, vp| phi_backward_raw(vt, vp, b)),
        forcing: Box::new(|_| 1.0),
        domain_end: vartheta_end,
        label: format!("backward(b={b})"),
    })
}

/// Backward problem rewritten in original time. Substituting
/// `vartheta = 1 - e^{-t}` into the vartheta-form equation gives a
/// convolution kernel in `s = t - t'`:
///
/// ```text
/// K(t, t') = (2b/sqrt(pi)) (1+e^{-s})^{-3/2} e^{-b^2 tanh(s/2)}
///            sqrt(s / (1 - e^{-s})) ,
/// ```
///
/// bounded for all lags, which lets the solve run to large horizons where
/// the compactified coordinate saturates at 1. Used by the asymptotic and
/// expected-hitting-time studies.
pub fn backward_spec_tform(b: f64, t_end: f64) -> Result<KernelSpec<f64>> {
    if !(t_end > 0.0) {
        return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
    }
    Ok(KernelSpec {
        regular_kernel: Box::new(move |t, tp| backward_kernel_tform(t - tp, b)),
        forcing: Box::new(|_| 1.0),
        domain_end: t_end,
        label: format!("backward-t(b={b})"),
    })
}

#[inline]
pub(crate) fn backward_kernel_tform(s: f64, b: f64) -> f64 {
    debug_assert!(s >= 0.0);
    let em = (-s).exp();
    let w = -(-s).exp_m1(); // 1 - e^{-s}
    let ratio = if s < 1e-12 { 1.0 + 0.5 * s } else { s / w };
    let base = 1.0 + em;
    (2.0 * b / SQRT_PI) * (-b * b * (s * 0.5).tanh()).exp() / (base * base.sqrt()) * ratio.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;
    use crate::volterra::{solve_block_quadratic, TimeGrid};
    use rand::{Rng, SeedableRng};

    const INV_SQRT_2PI: f64 = 0.3989422804014326779399460599343819;

    #[test]
    fn phi_zero_barrier_vanishes() {
        for &(a, b) in &[(0.0, 0.0), (0.7, 0.3), (3.0, 2.9)] {
            assert_eq!(phi_forward(a, b, 0.0), 0.0);
            assert_eq!(phi_backward(a.min(0.9), b.min(0.9), 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_origin_value() {
        // (2/sqrt(pi)) / 2^{3/2} = 1/sqrt(2 pi)
        assert!((phi_forward(0.0, 0.0, 1.0) - INV_SQRT_2PI).abs() < 1e-16);
        assert!((phi_backward(0.0, 0.0, 1.0).unwrap() - INV_SQRT_2PI).abs() < 1e-16);
    }

    #[test]
    fn phi_frozen_values() {
        // 50-digit direct evaluations at (0.5, 0.25, b = 1)
        let f = phi_forward(0.5, 0.25, 1.0);
        assert!(((f - 0.2824130200374549012104) / f).abs() < 1e-14, "{f}");
        let b = phi_backward(0.5, 0.25, 1.0).unwrap();
        assert!(((b - 0.4957838855685871874927) / b).abs() < 1e-14, "{b}");
    }

    #[test]
    fn phi_rejects_saturated_vartheta() {
        assert!(matches!(phi_backward(1.0, 0.5, 1.0), Err(Error::InfiniteTime)));
    }

    #[test]
    fn forcing_values() {
        assert_eq!(forward_forcing(0.0, 2.0, 1.0), 0.0);
        assert_eq!(forward_forcing(1e-280, 2.0, 1.0), 0.0, "essential zero");
        let v = forward_forcing(1.0, 2.0, 0.0);
        let expect = (-4.0f64 / 3.0).exp() / (3.0 * std::f64::consts::PI).sqrt();
        assert!((v - expect).abs() < 1e-16 && (v - 0.08586281587584334381892).abs() < 1e-15);
        let v = forward_forcing(0.5, 2.0, 1.0);
        assert!(((v - 0.4131532379738226562439) / v).abs() < 1e-14, "{v}");
    }

    #[test]
    fn forcing_small_theta_cancellation_free() {
        // (1+theta)^2 - 1 as theta(2+theta): relative agreement with the
        // exact rational value at tiny theta
        let theta: f64 = 1e-9;
        let den = theta * (2.0 + theta);
        assert!((den - 2.000000001e-9).abs() < 1e-24);
        assert!(forward_forcing(theta, 2.0, 1.9999).is_finite());
    }

    #[test]
    fn boundary_slope_identity() {
        // (b(tau) - b(tau'))/(tau - tau') = 2b/(sqrt(2tau+1) + sqrt(2tau'+1))
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let t1: f64 = rng.random_range(0.0..4.0);
            let t2: f64 = rng.random_range(0.0..4.0);
            if (t1 - t2).abs() < 1e-3 {
                continue;
            }
            let b: f64 = rng.random_range(-2.0..2.0);
            let (ta, tb) = (model::tau_of_t(t1.max(t2)).unwrap(), model::tau_of_t(t1.min(t2)).unwrap());
            let lhs = (b * (2.0 * ta + 1.0).sqrt() - b * (2.0 * tb + 1.0).sqrt()) / (ta - tb);
            let rhs = 2.0 * b / ((2.0 * ta + 1.0).sqrt() + (2.0 * tb + 1.0).sqrt());
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-12), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn kernel_diagonal_finite_and_decay_bound() {
        for &th in &[0.0, 0.5, 2.0, 6.0] {
            let d = phi_forward(th, th, 1.0);
            let expect = (2.0 / SQRT_PI) * (1.0 + th) / (2.0 + 2.0 * th).powf(1.5);
            assert!((d - expect).abs() < 1e-15 && d.is_finite());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let th: f64 = rng.random_range(0.0..6.0);
            let tp: f64 = rng.random_range(0.0..=th);
            let b: f64 = rng.random_range(-3.0..3.0);
            let s = 2.0 + th + tp;
            let bound = (2.0 * b.abs() / SQRT_PI) * (1.0 + tp) / (s * s.sqrt());
            assert!(phi_forward(th, tp, b).abs() <= bound * (1.0 + 1e-15));
        }
    }

    #[test]
    fn small_coordinate_abel_limit() {
        let b = 1.3;
        let eps = 1e-9;
        let lim = b * INV_SQRT_2PI;
        assert!((phi_forward(eps, eps / 2.0, b) - lim).abs() < 1e-8);
        assert!((phi_backward(eps, eps / 2.0, b).unwrap() - lim).abs() < 1e-8);
    }

    #[test]
    fn spec_wiring() {
        let spec = forward_spec(2.0, 1.0, 2.0).unwrap();
        let k = (spec.regular_kernel)(0.5, 0.25);
        assert_eq!(k, -phi_forward(0.5, 0.25, 1.0));
        let g = (spec.forcing)(0.5);
        assert_eq!(g, -forward_forcing(0.5, 2.0, 1.0));
        assert!(forward_spec(1.0, 1.0, 2.0).is_err());
        assert!(backward_spec(1.0, 1.0).is_err());
    }

    #[test]
    fn backward_b0_solution_is_one() {
        let spec = backward_spec(0.0, 0.8).unwrap();
        let wf = solve_block_quadratic(&spec, &TimeGrid::uniform(0.8, 64).unwrap()).unwrap();
        assert!(wf.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn forward_b0_solution_is_minus_forcing() {
        let spec = forward_spec(2.0, 0.0, 3.0).unwrap();
        let grid = TimeGrid::uniform(3.0, 128).unwrap();
        let wf = solve_block_quadratic(&spec, &grid).unwrap();
        for (i, &th) in grid.nodes.iter().enumerate() {
            let expect = -forward_forcing(th, 2.0, 0.0);
            assert!((wf.values[i] - expect).abs() <= 1e-15 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn tform_kernel_matches_vartheta_kernel() {
        // K_t(t, t') = phi_backward(vt(t), vt(t'), b) * vt'(t') *
        //              sqrt((t - t')/(vt(t) - vt(t')))
        let b = -0.8;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let t: f64 = rng.random_range(0.01..8.0);
            let tp: f64 = rng.random_range(0.0..t);
            let vt = model::vartheta_of_t(t).unwrap();
            let vp = model::vartheta_of_t(tp).unwrap();
            let expect = phi_backward(vt, vp, b).unwrap() * (-tp).exp() * ((t - tp) / (vt - vp)).sqrt();
            let got = backward_kernel_tform(t - tp, b);
            assert!(((got - expect) / expect).abs() < 1e-10, "t={t} tp={tp}: {got} vs {expect}");
        }
        // s -> 0 limit is the Abel constant b/sqrt(2 pi)
        assert!((backward_kernel_tform(0.0, b) - b * INV_SQRT_2PI).abs() < 1e-15);
    }
}
