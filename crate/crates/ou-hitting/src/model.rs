//! Process parameters, dimensionless normalization and coordinate maps.
//!
//! A raw process `dX = rate (mean - X) dt + sigma dW` hitting a constant
//! barrier is reduced to the canonical `dX = -X dt + dW` form by rescaling
//! space with `sqrt(rate)/sigma` and time with `rate`. All hitting-time
//! results downstream are stated in the canonical time `t = rate * t_phys`.
//!
//! Four auxiliary time coordinates appear in the reductions:
//! `tau = (e^{2t}-1)/2` and `theta = e^t - 1` for the forward problem,
//! `lambda = (1-e^{-2t})/2` and `vartheta = 1 - e^{-t}` for the backward one.
//! The backward pair compactifies `t in [0, inf)` into bounded intervals and
//! is the preferred route for large times; the forward pair overflows for
//! large `t` and is restricted to `t <= T_MAX`.

use crate::{Error, Result};

/// Largest canonical time accepted by the forward (`tau`/`theta`) maps.
/// `tau(t) = (e^{2t}-1)/2` stays comfortably inside `f64` range below this.
pub const T_MAX: f64 = 300.0;

/// Which side the start lies on relative to the barrier in the original
/// parameters. `FromBelow` inputs are reflected so that `z > b` always holds
/// after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    FromAbove,
    FromBelow,
}

/// Raw Ornstein-Uhlenbeck parameters before normalization.
#[derive(Debug, Clone, Copy)]
pub struct OUParams {
    /// Mean-reversion rate (1/time), must be positive.
    pub rate: f64,
    /// Long-run mean level.
    pub mean: f64,
    /// Volatility, must be positive.
    pub sigma: f64,
    /// Starting point.
    pub start: f64,
    /// Barrier level; `start != barrier`.
    pub barrier: f64,
}

/// Dimensionless problem: canonical start and barrier with `z > b`.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedProblem {
    pub z: f64,
    pub b: f64,
    pub orientation: Orientation,
}

/// Reduce raw parameters to the canonical problem.
///
/// Returns `z = sqrt(rate)/sigma * (start - mean)` and the analogous barrier;
/// when the start lies below the barrier both are negated so the canonical
/// problem is always hit from above. Times returned by the library are
/// canonical: `t = rate * t_phys`.
pub fn normalize(p: &OUParams) -> Result<NormalizedProblem> {
    if !(p.rate > 0.0) || !p.rate.is_finite() {
        return Err(Error::InvalidParams(format!("rate must be positive, got {}", p.rate)));
    }
    if !(p.sigma > 0.0) || !p.sigma.is_finite() {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {}", p.sigma)));
    }
    if p.start == p.barrier {
        return Err(Error::ImmediateHit);
    }
    let scale = p.rate.sqrt() / p.sigma;
    let z = scale * (p.start - p.mean);
    let b = scale * (p.barrier - p.mean);
    if z > b {
        Ok(NormalizedProblem { z, b, orientation: Orientation::FromAbove })
    } else {
        Ok(NormalizedProblem { z: -z, b: -b, orientation: Orientation::FromBelow })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(())
}

fn check_t_forward(t: f64) -> Result<()> {
    check_t(t)?;
    if t > T_MAX {
        return Err(Error::Domain(format!("t = {t} exceeds T_MAX = {T_MAX} for the forward coordinates")));
    }
    Ok(())
}

/// `theta = e^t - 1`.
pub fn theta_of_t(t: f64) -> Result<f64> {
    check_t_forward(t)?;
    Ok(t.exp_m1())
}

/// Inverse of [`theta_of_t`].
pub fn t_of_theta(theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("theta must be nonnegative, got {theta}")));
    }
    Ok(theta.ln_1p())
}

/// `tau = (e^{2t} - 1)/2`.
pub fn tau_of_t(t: f64) -> Result<f64> {
    check_t_forward(t)?;
    Ok(0.5 * (2.0 * t).exp_m1())
}

/// `vartheta = 1 - e^{-t}`, computed as `-expm1(-t)` so that small times keep
/// full precision (`vartheta ~ t` near zero).
pub fn vartheta_of_t(t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(-(-t).exp_m1())
}

/// Inverse of [`vartheta_of_t`]; `vartheta >= 1` corresponds to `t = inf`.
pub fn t_of_vartheta(vartheta: f64) -> Result<f64> {
    if !(vartheta >= 0.0) {
        return Err(Error::Domain(format!("vartheta must be nonnegative, got {vartheta}")));
    }
    if vartheta >= 1.0 {
        return Err(Error::InfiniteTime);
    }
    Ok(-(-vartheta).ln_1p())
}

/// `lambda = (1 - e^{-2t})/2`, the compactified backward time in `[0, 1/2)`.
pub fn lambda_of_t(t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(-0.5 * (-2.0 * t).exp_m1())
}

/// Forward-problem coordinates attached to one canonical time.
#[derive(Debug, Clone, Copy)]
pub struct ForwardCoords {
    pub t: f64,
    pub tau: f64,
    pub theta: f64,
    /// `xi = e^t x` when a space point is attached, otherwise `e^t z` is not
    /// stored; callers pass `x` explicitly.
    pub xi: f64,
}

impl ForwardCoords {
    pub fn from_t(t: f64, x: f64) -> Result<Self> {
        Ok(Self { t, tau: tau_of_t(t)?, theta: theta_of_t(t)?, xi: t.exp() * x })
    }
}

/// Backward-problem coordinates attached to one canonical time.
#[derive(Debug, Clone, Copy)]
pub struct BackwardCoords {
    pub t: f64,
    pub lambda_c: f64,
    pub mu: f64,
    pub vartheta: f64,
}

impl BackwardCoords {
    pub fn from_t(t: f64, z: f64) -> Result<Self> {
        Ok(Self { t, lambda_c: lambda_of_t(t)?, mu: (-t).exp() * z, vartheta: vartheta_of_t(t)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn normalize_identity() {
        let p = OUParams { rate: 1.0, mean: 0.0, sigma: 1.0, start: 2.0, barrier: 1.0 };
        let n = normalize(&p).unwrap();
        assert_eq!(n.z, 2.0);
        assert_eq!(n.b, 1.0);
        assert_eq!(n.orientation, Orientation::FromAbove);
    }

    #[test]
    fn normalize_substitution() {
        let p = OUParams { rate: 2.0, mean: 1.0, sigma: 0.5, start: 2.0, barrier: 1.0 };
        let n = normalize(&p).unwrap();
        assert!((n.z - 2.0 * 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(n.b, 0.0);
        assert_eq!(n.orientation, Orientation::FromAbove);
    }

    #[test]
    fn normalize_reflects_hit_from_below() {
        let p = OUParams { rate: 1.0, mean: 0.0, sigma: 1.0, start: -2.0, barrier: 0.0 };
        let n = normalize(&p).unwrap();
        assert_eq!(n.z, 2.0);
        assert_eq!(n.b, 0.0);
        assert_eq!(n.orientation, Orientation::FromBelow);
        assert!(n.z > n.b);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        let p = OUParams { rate: 1.0, mean: 0.0, sigma: 1.0, start: 1.0, barrier: 1.0 };
        assert!(matches!(normalize(&p), Err(Error::ImmediateHit)));
        let p = OUParams { rate: 0.0, mean: 0.0, sigma: 1.0, start: 2.0, barrier: 1.0 };
        assert!(matches!(normalize(&p), Err(Error::InvalidParams(_))));
        let p = OUParams { rate: 1.0, mean: 0.0, sigma: -1.0, start: 2.0, barrier: 1.0 };
        assert!(matches!(normalize(&p), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn normalize_idempotent_on_canonical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z: f64 = rng.random_range(-3.0..3.0);
            let b: f64 = rng.random_range(-3.0..3.0);
            if z == b {
                continue;
            }
            let p = OUParams { rate: 1.0, mean: 0.0, sigma: 1.0, start: z, barrier: b };
            let n = normalize(&p).unwrap();
            let (ze, be) = if z > b { (z, b) } else { (-z, -b) };
            assert_eq!(n.z, ze);
            assert_eq!(n.b, be);
            assert!(n.z > n.b);
        }
    }

    #[test]
    fn fixed_points_and_ln2() {
        assert_eq!(theta_of_t(0.0).unwrap(), 0.0);
        assert_eq!(vartheta_of_t(0.0).unwrap(), 0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((theta_of_t(ln2).unwrap() - 1.0).abs() < 1e-15);
        assert!((vartheta_of_t(ln2).unwrap() - 0.5).abs() < 1e-15);
        assert!((tau_of_t(ln2).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn round_trips() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let t: f64 = rng.random_range(0.0..20.0);
            let back = t_of_theta(theta_of_t(t).unwrap()).unwrap();
            assert!((back - t).abs() <= 1e-12 * t.max(1.0), "theta roundtrip {t} -> {back}");
            let vt = vartheta_of_t(t).unwrap();
            let back = t_of_vartheta(vt).unwrap();
            // rounding vartheta to f64 loses ~eps/(1-vartheta) of t, which
            // exceeds 1e-12 relative once t > ~13; allow for the conditioning
            let tol = 1e-12 * t.max(1.0) + 4.0 * f64::EPSILON / (1.0 - vt).max(f64::MIN_POSITIVE);
            assert!((back - t).abs() <= tol, "vartheta roundtrip {t} -> {back}");
        }
    }

    #[test]
    fn coordinate_consistency() {
        // tau = (e^{2t}-1)/2 and theta = sqrt(2 tau + 1) - 1 must agree.
        for &t in &[1e-8, 0.01, 0.5, 1.0, 5.0, 40.0] {
            let tau = tau_of_t(t).unwrap();
            let theta = theta_of_t(t).unwrap();
            let theta_from_tau = (2.0 * tau + 1.0).sqrt() - 1.0;
            assert!((theta_from_tau - theta).abs() <= 4.0 * f64::EPSILON * theta.max(1.0));
            let lam = lambda_of_t(t).unwrap();
            let vt = vartheta_of_t(t).unwrap();
            let vt_from_lam = 1.0 - (1.0 - 2.0 * lam).sqrt();
            assert!((vt_from_lam - vt).abs() <= 4.0 * f64::EPSILON);
            // strictly below 1/2 until the compactified coordinate saturates
            // at the f64 resolution (e^{-2t} < eps around t = 18)
            assert!(lam <= 0.5);
            if t <= 17.0 {
                assert!(lam < 0.5);
            }
        }
    }

    #[test]
    fn monotonicity() {
        let mut prev = [0.0f64; 5];
        let mut first = true;
        for i in 1..2000 {
            let t = i as f64 * 0.01;
            let vt = i as f64 * (0.999 / 2000.0);
            let cur = [
                theta_of_t(t).unwrap(),
                tau_of_t(t).unwrap(),
                vartheta_of_t(t).unwrap(),
                t_of_theta(t).unwrap(),
                t_of_vartheta(vt).unwrap(),
            ];
            if !first {
                assert!(cur[0] > prev[0] && cur[1] > prev[1] && cur[2] > prev[2] && cur[3] > prev[3] && cur[4] > prev[4]);
            }
            prev = cur;
            first = false;
        }
    }

    #[test]
    fn domain_rejections() {
        assert!(matches!(t_of_vartheta(1.0), Err(Error::InfiniteTime)));
        assert!(matches!(t_of_vartheta(1.5), Err(Error::InfiniteTime)));
        assert!(tau_of_t(T_MAX + 1.0).is_err());
        assert!(theta_of_t(-0.1).is_err());
        assert!(t_of_theta(-0.1).is_err());
        assert!(vartheta_of_t(f64::NAN).is_err());
    }
}
