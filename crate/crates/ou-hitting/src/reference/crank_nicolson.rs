//! Crank-Nicolson finite-difference solver for the backward problem
//! `G_t = -z G_z + (1/2) G_zz`, `G(0, z) = 0`, `G(t, b) = 1`, with a
//! homogeneous far-field boundary at `z_max`.
//!
//! Central differences with theta-weight 1/2 and one tridiagonal solve per
//! step. When the drift cell Peclet number `z_max * h` exceeds 2 the
//! convection term switches to first-order upwinding instead of failing;
//! the table records that the fallback engaged.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CNConfig {
    pub h: f64,
    pub k: f64,
    pub z_max: f64,
    pub b: f64,
}

impl CNConfig {
    /// The comparison operating point: `h = k = 0.005`, far field at `z + 6`.
    pub fn standard(z: f64, b: f64) -> Self {
        Self { h: 0.005, k: 0.005, z_max: z + 6.0, b }
    }
}

/// `G(t, z)` sampled on the requested nodes (linear interpolation in both
/// coordinates from the internal grid).
#[derive(Debug, Clone)]
pub struct CnTable {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    /// row-major `[t][z]`
    pub g: Vec<Vec<f64>>,
    pub upwinded: bool,
}

impl CnTable {
    pub fn value(&self, ti: usize, zi: usize) -> f64 {
        self.g[ti][zi]
    }
}

struct Tridiag {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Thomas algorithm; overwrites `rhs` with the solution.
fn solve_tridiag(m: &Tridiag, rhs: &mut [f64]) {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut denom = m.diag[0];
    rhs[0] /= denom;
    for i in 1..n {
        c[i - 1] = m.upper[i - 1] / denom;
        denom = m.diag[i] - m.lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - m.lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Solve the backward PDE and return `G` at the requested space/time nodes.
pub fn crank_nicolson_cdf(z_request: &[f64], t_grid: &[f64], b: f64, cfg: &CNConfig) -> Result<CnTable> {
    if !(cfg.h > 0.0 && cfg.k > 0.0) {
        return Err(Error::InvalidParams("CN steps must be positive".into()));
    }
    let zr_max = z_request.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zr_min = z_request.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(zr_min > b) || !(cfg.z_max > zr_max + 4.0) {
        return Err(Error::InvalidParams(format!(
            "requested z in [{zr_min}, {zr_max}] must satisfy b < z and z_max > z + 4"
        )));
    }
    if t_grid.iter().any(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t grid must be nonnegative and increasing".into()));
    }
    let upwinded = cfg.z_max.abs() * cfg.h > 2.0;

    let nj = ((cfg.z_max - b) / cfg.h).round() as usize;
    if nj < 4 {
        return Err(Error::InvalidParams("space grid too coarse".into()));
    }
    let h = (cfg.z_max - b) / nj as f64;
    let k = cfg.k;
    let t_end = *t_grid.last().unwrap_or(&0.0);
    let steps = (t_end / k).ceil() as usize;

    // interior unknowns j = 1..nj-1
    let n_int = nj - 1;
    let mut lower = vec![0.0; n_int];
    let mut diag = vec![0.0; n_int];
    let mut upper = vec![0.0; n_int];
    // explicit-side coefficients
    let mut el = vec![0.0; n_int];
    let mut ed = vec![0.0; n_int];
    let mut eu = vec![0.0; n_int];
    for j in 1..nj {
        let z = b + j as f64 * h;
        // L G = conv + diff; diff: (G_{j+1} - 2 G_j + G_{j-1}) / (2 h^2)
        let (cl, cd, cu) = if upwinded {
            // advection velocity -z: backward difference when -z > 0
            if -z > 0.0 {
                (z / h, -z / h, 0.0)
            } else {
                (0.0, z / h, -z / h)
            }
        } else {
            (z / (2.0 * h), 0.0, -z / (2.0 * h))
        };
        let dl = 0.5 / (h * h);
        let i = j - 1;
        let (al, ad, au) = (cl + dl, cd - 1.0 / (h * h), cu + dl);
        lower[i] = -0.5 * k * al;
        diag[i] = 1.0 - 0.5 * k * ad;
        upper[i] = -0.5 * k * au;
        el[i] = 0.5 * k * al;
        ed[i] = 1.0 + 0.5 * k * ad;
        eu[i] = 0.5 * k * au;
    }
    let matrix = Tridiag { lower, diag, upper };

    let mut g_prev = vec![0.0; n_int];
    let mut rhs = vec![0.0; n_int];
    let interp_request = |interior: &[f64]| -> Vec<f64> {
        z_request
            .iter()
            .map(|&z| {
                let s = (z - b) / h;
                let j = (s.floor() as usize).min(nj - 1);
                let w = s - j as f64;
                let gj = if j == 0 {
                    1.0
                } else if j >= nj {
                    0.0
                } else {
                    interior[j - 1]
                };
                let gj1 = if j + 1 >= nj { 0.0 } else { interior[j] };
                gj * (1.0 - w) + gj1 * w
            })
            .collect()
    };

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(t_grid.len());
    let mut next_t = 0usize;
    // time 0 rows
    while next_t < t_grid.len() && t_grid[next_t] == 0.0 {
        out.push(interp_request(&g_prev));
        next_t += 1;
    }
    let mut prev_snapshot = g_prev.clone();
    for step in 1..=steps {
        for i in 0..n_int {
            rhs[i] = ed[i] * g_prev[i];
            if i > 0 {
                rhs[i] += el[i] * g_prev[i - 1];
            }
            if i + 1 < n_int {
                rhs[i] += eu[i] * g_prev[i + 1];
            }
        }
        // boundary G(t, b) = 1 contributes on both sides of the first row
        rhs[0] += el[0] * 1.0 - matrix.lower[0] * 1.0;
        solve_tridiag(&matrix, &mut rhs);
        std::mem::swap(&mut g_prev, &mut rhs);

        let t_now = step as f64 * k;
        while next_t < t_grid.len() && t_grid[next_t] <= t_now + 1e-12 {
            // linear interpolation in time between the two levels
            let frac = ((t_grid[next_t] - (t_now - k)) / k).clamp(0.0, 1.0);
            let row: Vec<f64> = prev_snapshot
                .iter()
                .zip(&g_prev)
                .map(|(&a, &c)| a * (1.0 - frac) + c * frac)
                .collect();
            out.push(interp_request(&row));
            next_t += 1;
        }
        prev_snapshot.copy_from_slice(&g_prev);
    }
    while next_t < t_grid.len() {
        out.push(interp_request(&g_prev));
        next_t += 1;
    }

    Ok(CnTable { t: t_grid.to_vec(), z: z_request.to_vec(), g: out, upwinded })
}
