//! Monte Carlo first-hitting oracle with exact Ornstein-Uhlenbeck
//! transitions, `X_{t+d} = X_t e^{-d} + sqrt((1 - e^{-2d})/2) xi`, so the
//! only bias left is discrete monitoring of the barrier.
//!
//! Paths are generated in fixed chunks, each chunk on its own counter-derived
//! ChaCha stream, so results are identical regardless of how the work is
//! scheduled across threads.

use crate::{Error, Result};
use rand::SeedableRng;
use rand_distr::Distribution;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct MCConfig {
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

/// Empirical hitting-time distribution: sorted grid-time hits plus the
/// 99% Dvoretzky-Kiefer-Wolfowitz band half-width.
#[derive(Debug, Clone)]
pub struct McCdf {
    pub hit_times: Vec<f64>,
    pub paths: usize,
    pub dkw99: f64,
}

impl McCdf {
    /// Empirical CDF at `t`: fraction of paths that hit at or before `t`.
    pub fn cdf_at(&self, t: f64) -> f64 {
        let idx = self.hit_times.partition_point(|&h| h <= t);
        idx as f64 / self.paths as f64
    }
}

const CHUNK: usize = 4096;

pub fn mc_hitting_cdf(z: f64, b: f64, cfg: &MCConfig) -> Result<McCdf> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    if cfg.paths < 1 || !(cfg.dt > 0.0) || cfg.dt > cfg.horizon {
        return Err(Error::InvalidParams("need paths >= 1 and 0 < dt <= horizon".into()));
    }
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let decay = (-cfg.dt).exp();
    let scale = (0.5 * -(-2.0 * cfg.dt).exp_m1()).sqrt();
    let n_chunks = cfg.paths.div_ceil(CHUNK);

    let mut hit_times: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let count = CHUNK.min(cfg.paths - chunk * CHUNK);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                cfg.seed ^ (chunk as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let normal = rand_distr::StandardNormal;
            let mut hits = Vec::new();
            for _ in 0..count {
                let mut x = z;
                for step in 1..=steps {
                    let xi: f64 = normal.sample(&mut rng);
                    x = x * decay + scale * xi;
                    if x <= b {
                        hits.push(step as f64 * cfg.dt);
                        break;
                    }
                }
            }
            hits
        })
        .collect();
    hit_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dkw99 = ((2.0f64 / 0.01).ln() / (2.0 * cfg.paths as f64)).sqrt();
    Ok(McCdf { hit_times, paths: cfg.paths, dkw99 })
}
