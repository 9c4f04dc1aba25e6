//! Hitting densities and cumulative probabilities assembled from solved
//! weight functions.
//!
//! The forward route evaluates `g(t)` from `nu^f` through the regularized
//! boundary-limit formula in theta coordinates; the backward route evaluates
//! `G(t,z)` and `g(t,z)` from `nu^b` through single integrals in vartheta
//! coordinates. All the integrals here share one structure: a smooth density
//! times a Gaussian-type cutoff against a power kernel `(x - x')^{-p}`,
//! integrated up to the cutoff point. They are computed by product
//! integration (linear interpolant against exact kernel moments) on the
//! weight grid, with cells subdivided wherever the exponential factor moves
//! faster than the interpolant can follow, and skipped once it underflows.

use crate::kernels::{backward_spec_tform, forward_forcing, forward_spec};
use crate::volterra::{solve_block_quadratic, Scheme, TimeGrid, WeightFunction};
use crate::{model, Error, Result};

const SQRT_PI: f64 = 1.7724538509055160272981674833411452;
/// Exponent magnitude below which `exp` underflows to zero in `f64`.
const EXP_UNDERFLOW: f64 = 745.0;
/// Largest change of the exponential argument tolerated across one
/// product-integration leaf; the one-sided chord bias is ~cap^2/12.
const EXP_VAR_CAP: f64 = 0.025;
const MAX_DEPTH: u32 = 52;

/// Problem parameters attached to a computed curve.
#[derive(Debug, Clone, Copy)]
pub struct CurveMeta {
    pub z: f64,
    pub b: f64,
    pub scheme: Scheme,
    pub n: usize,
}

/// Paired arrays `(t, g, G)` for one problem instance. Pipelines that
/// produce only one of the two quantities leave the other vector empty.
#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    pub cdf: Vec<f64>,
    pub meta: CurveMeta,
}

/// Interpolate a weight function between its nodes: piecewise quadratic on
/// the solution blocks for the block scheme, piecewise linear otherwise.
pub fn interp_weight(wf: &WeightFunction<f64>, x: f64) -> f64 {
    interp_on(&wf.grid, &wf.values, wf.scheme, x)
}

fn interp_on(grid: &TimeGrid<f64>, values: &[f64], scheme: Scheme, x: f64) -> f64 {
    let nodes = &grid.nodes;
    let n = nodes.len() - 1;
    let x = x.clamp(nodes[0], nodes[n]);
    match scheme {
        Scheme::BlockQuadratic => {
            let h = grid.h();
            let j = ((x / h) as usize).min(n - 1);
            let blk = (j / 2 * 2).min(n - 2);
            // local coordinate s in [0, 2] over the block
            let s = (x - nodes[blk]) / h;
            let (f0, f1, f2) = (values[blk], values[blk + 1], values[blk + 2]);
            0.5 * (s - 1.0) * (s - 2.0) * f0 + s * (2.0 - s) * f1 + 0.5 * s * (s - 1.0) * f2
        }
        _ => {
            let j = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                Ok(j) => j.min(n - 1),
                Err(j) => j.saturating_sub(1).min(n - 1),
            };
            let w = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
            values[j] * (1.0 - w) + values[j + 1] * w
        }
    }
}

/// Kernel power of the weakly singular factor `(x_eval - x')^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Power {
    /// no kernel (plain integral)
    P0,
    P32,
    P52,
    P72,
}

/// Exact integral of the linear interpolant of `w` against `u^{-p}` over one
/// leaf, `u = x_eval - x'`, written in cancellation-free factored forms.
fn leaf_moment(p: Power, w_a: f64, w_c: f64, u_a: f64, u_c: f64) -> f64 {
    let a = u_a.sqrt();
    let c = u_c.sqrt();
    match p {
        Power::P0 => 0.5 * (w_a + w_c) * (u_a - u_c),
        Power::P32 => {
            let tc = if u_c > 0.0 { w_c / c } else { 0.0 };
            2.0 * (a - c) / (a + c) * (w_a / a + tc)
        }
        Power::P52 => {
            if u_c <= 0.0 {
                return 0.0; // reachable only after the exponential cutoff underflowed
            }
            2.0 / 3.0 * (a - c) / (a + c)
                * (w_a * (2.0 * a + c) / (a * a * a * c) + w_c * (a + 2.0 * c) / (a * c * c * c))
        }
        Power::P72 => {
            if u_c <= 0.0 {
                return 0.0;
            }
            let (a2, c2) = (a * a, c * c);
            let (a3, c3) = (a2 * a, c2 * c);
            2.0 / 15.0 * (a - c) / (a + c)
                * (w_a * (2.0 * a3 + 4.0 * a2 * c + 6.0 * a * c2 + 3.0 * c3) / (a3 * a2 * c3)
                    + w_c * (3.0 * a3 + 6.0 * a2 * c + 4.0 * a * c2 + 2.0 * c3) / (a3 * c3 * c2))
        }
    }
}

/// Integrand description for [`singular_product_integral`]: value and the
/// exponential argument used to steer subdivision.
struct Integrand<'a> {
    w: &'a dyn Fn(f64) -> f64,
    /// raw exponent of the Gaussian-type factor (goes to -inf at cutoffs)
    exponent: &'a dyn Fn(f64) -> f64,
}

/// `int_0^{x_eval} w(x') (x_eval - x')^{-p} dx'` by adaptive product
/// integration on the cells of `nodes` clipped to `[0, x_eval]`.
fn singular_product_integral(nodes: &[f64], x_eval: f64, p: Power, f: &Integrand) -> f64 {
    if x_eval <= 0.0 {
        return 0.0;
    }
    // reference exponent: variation more than ~50 below the chain maximum is
    // invisible in the result, so the proxy is clamped there
    let mut e_ref = (f.exponent)(x_eval * 0.5);
    for &x in nodes.iter().take_while(|&&x| x < x_eval) {
        let e = (f.exponent)(x);
        if e.is_finite() && e > e_ref {
            e_ref = e;
        }
    }
    let floor = if e_ref.is_finite() { e_ref - 50.0 } else { -EXP_UNDERFLOW };
    let eb = |x: f64| (f.exponent)(x).max(floor);

    let mut total = 0.0;
    for win in 0..nodes.len() - 1 {
        let a = nodes[win];
        if a >= x_eval {
            break;
        }
        let c = nodes[win + 1].min(x_eval);
        total += cell(f, &eb, x_eval, p, a, c, (f.w)(a), (f.w)(c), 0);
    }
    total
}

fn cell(
    f: &Integrand,
    eb: &dyn Fn(f64) -> f64,
    x_eval: f64,
    p: Power,
    a: f64,
    c: f64,
    w_a: f64,
    w_c: f64,
    depth: u32,
) -> f64 {
    let u_a = x_eval - a;
    let u_c = x_eval - c;
    // nothing left once the cutoff underflows across the whole cell
    if w_a == 0.0 && w_c == 0.0 {
        let m = 0.5 * (a + c);
        let w_m = (f.w)(m);
        if w_m == 0.0 {
            return 0.0;
        }
        if depth < MAX_DEPTH {
            return cell(f, eb, x_eval, p, a, m, w_a, w_m, depth + 1)
                + cell(f, eb, x_eval, p, m, c, w_m, w_c, depth + 1);
        }
    }
    let split = if depth >= MAX_DEPTH {
        false
    } else if u_c <= 0.0 && p != Power::P0 {
        // cell touches the singular point: refine geometrically until the
        // remaining sliver is negligible (w vanishes there by construction)
        u_a > 1e-12 * x_eval
    } else {
        (eb(a) - eb(c)).abs() > EXP_VAR_CAP
    };
    if split {
        let m = 0.5 * (a + c);
        let w_m = (f.w)(m);
        cell(f, eb, x_eval, p, a, m, w_a, w_m, depth + 1)
            + cell(f, eb, x_eval, p, m, c, w_m, w_c, depth + 1)
    } else {
        leaf_moment(p, w_a, w_c, u_a, u_c)
    }
}

/// Solve the forward Volterra problem on a uniform theta grid of `n` steps
/// covering `t in [0, t_end]` (`theta_end = e^{t_end} - 1`).
pub fn nu_forward(z: f64, b: f64, n: usize, theta_end: f64) -> Result<WeightFunction<f64>> {
    let spec = forward_spec(z, b, theta_end)?;
    let grid = TimeGrid::uniform(theta_end, n)?;
    solve_block_quadratic(&spec, &grid)
}

/// Solve the backward Volterra problem on a uniform vartheta grid. The
/// solution does not depend on the starting point.
pub fn nu_backward(b: f64, n: usize, vartheta_end: f64) -> Result<WeightFunction<f64>> {
    let spec = crate::kernels::backward_spec(b, vartheta_end)?;
    let grid = TimeGrid::uniform(vartheta_end, n)?;
    solve_block_quadratic(&spec, &grid)
}

/// Solve the backward problem in original time on `[0, t_end]`; the kernel
/// is the convolution form of [`backward_spec_tform`], usable for horizons
/// far beyond where the compactified coordinate saturates.
pub fn nu_backward_tform(b: f64, n: usize, t_end: f64) -> Result<WeightFunction<f64>> {
    let spec = backward_spec_tform(b, t_end)?;
    let grid = TimeGrid::uniform(t_end, n)?;
    solve_block_quadratic(&spec, &grid)
}

fn check_grid_resolution(t_grid: &[f64], to_coord: impl Fn(f64) -> Result<f64>, h: f64) -> Result<()> {
    for w in t_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain("t grid must be strictly increasing".into()));
        }
        let d = to_coord(w[1])? - to_coord(w[0])?;
        if d < h * (1.0 - 1e-9) {
            return Err(Error::RequiresDenseGrid { requested: d, available: h });
        }
    }
    Ok(())
}

/// Normalized weight values `rho_j = nu_j / (-forcing_j)`; the forcing
/// carries the essential small-theta behavior, so `rho` is smooth and safe
/// to interpolate where `nu` itself spans hundreds of orders of magnitude.
fn forcing_ratio(nu: &WeightFunction<f64>, z: f64, b: f64) -> Vec<f64> {
    nu.grid
        .nodes
        .iter()
        .zip(&nu.values)
        .map(|(&th, &v)| {
            let f = forward_forcing(th, z, b);
            let r = -v / f;
            if f == 0.0 || !r.is_finite() {
                1.0
            } else {
                r
            }
        })
        .collect()
}

/// Forward-route density `g(t)` evaluated from a solved `nu^f`.
///
/// `g = T1 + T2 + T3` with the direct heat-kernel term `T1`, the boundary
/// term `T2 = -(e^t b + e^{2t}/sqrt(pi(e^{2t}-1))) nu(theta)`, and the
/// regularized integral `T3` whose integrand carries the difference
/// `(1-2b^2 r) e^{-b^2 r} nu(theta') - nu(theta)` against
/// `(theta-theta')^{-3/2}`; the difference vanishes linearly at the upper
/// limit, which reduces the singularity to an integrable square root.
pub fn density_forward(nu: &WeightFunction<f64>, z: f64, b: f64, t_grid: &[f64]) -> Result<DensityCurve> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    let h = nu.grid.h();
    check_grid_resolution(t_grid, model::theta_of_t, h)?;
    let theta_end = nu.grid.end();
    let rho = forcing_ratio(nu, z, b);
    let nu_at = |x: f64| -forward_forcing(x, z, b) * interp_on(&nu.grid, &rho, nu.scheme, x);

    let mut g = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let theta = model::theta_of_t(t)?;
        if theta > theta_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} maps to theta = {theta} beyond the solved range {theta_end}"
            )));
        }
        if theta <= 0.0 {
            g.push(0.0);
            continue;
        }
        let theta = theta.min(theta_end);
        let e2t = (2.0 * t).exp_m1(); // e^{2t} - 1
        let et = t.exp();
        let d = et * b - z;
        let t1 = -d * (-d * d / e2t + 2.0 * t).exp() / (std::f64::consts::PI * e2t * e2t * e2t).sqrt();
        let nu_theta = nu_at(theta);
        let t2 = -(et * b + (e2t + 1.0) / (std::f64::consts::PI * e2t).sqrt()) * nu_theta;

        let w = |tp: f64| {
            let s = 2.0 + theta + tp;
            let r = (theta - tp) / s;
            let br = b * b * r;
            let bracket = (1.0 - 2.0 * br) * (-br).exp() * nu_at(tp) - nu_theta;
            bracket * (1.0 + tp) / (s * s.sqrt())
        };
        let expo = |tp: f64| {
            if tp <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let dd = (1.0 + tp) * b - z;
            -dd * dd / (tp * (2.0 + tp)) - b * b * (theta - tp) / (2.0 + theta + tp)
        };
        let integral = singular_product_integral(
            &nu.grid.nodes,
            theta,
            Power::P32,
            &Integrand { w: &w, exponent: &expo },
        );
        let t3 = (e2t + 1.0) / SQRT_PI * integral;
        g.push(t1 + t2 + t3);
    }
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        g,
        cdf: Vec::new(),
        meta: CurveMeta { z, b, scheme: nu.scheme, n: nu.grid.n_steps() },
    })
}

/// Shared pieces of the backward vartheta-form integrands at one evaluation
/// point: `m = z(1-vt) - b(1-vt')`, `v = 2 - vt - vt'`, `d = (vt - vt') v`.
struct BackwardPoint {
    vt: f64,
    z: f64,
    b: f64,
}

impl BackwardPoint {
    #[inline]
    fn parts(&self, tp: f64) -> (f64, f64, f64) {
        let m = self.z * (1.0 - self.vt) - self.b * (1.0 - tp);
        let v = 2.0 - self.vt - tp;
        (m, v, (self.vt - tp) * v)
    }

    #[inline]
    fn exponent(&self, tp: f64) -> f64 {
        let (m, _, d) = self.parts(tp);
        if d <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -m * m / d
        }
    }
}

/// Backward-route cumulative probability `G(t, z)` from a solved `nu^b`:
/// one integral of `2 m e^{-m^2/d} (1-vt') nu(vt')` against
/// `sqrt(pi (vt-vt')^3 (2-vt-vt')^3)`, where the exponential cutoff tames
/// the endpoint singularity.
pub fn cdf_backward(nu: &WeightFunction<f64>, z: f64, b: f64, t_grid: &[f64]) -> Result<DensityCurve> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    let h = nu.grid.h();
    check_grid_resolution(t_grid, model::vartheta_of_t, h)?;
    let vt_end = nu.grid.end();
    let mut cdf = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let vt = model::vartheta_of_t(t)?;
        if vt > vt_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} maps to vartheta = {vt} beyond the solved range {vt_end}"
            )));
        }
        let vt = vt.min(vt_end);
        if vt <= 0.0 {
            cdf.push(0.0);
            continue;
        }
        let pt = BackwardPoint { vt, z, b };
        let w = |tp: f64| {
            let (m, v, d) = pt.parts(tp);
            if d <= 0.0 {
                return 0.0;
            }
            2.0 * m * (-m * m / d).exp() * (1.0 - tp) * interp_weight(nu, tp) / (SQRT_PI * v * v.sqrt())
        };
        let expo = |tp: f64| pt.exponent(tp);
        let g_val = singular_product_integral(
            &nu.grid.nodes,
            vt,
            Power::P32,
            &Integrand { w: &w, exponent: &expo },
        );
        cdf.push(g_val);
    }
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        g: Vec::new(),
        cdf,
        meta: CurveMeta { z, b, scheme: nu.scheme, n: nu.grid.n_steps() },
    })
}

/// Backward-route density `g(t, z)`: the `(vt-vt')^{-7/2}` and
/// `(vt-vt')^{-5/2}` integrals with prefactors `4 e^{-2t}` and `4 e^{-t} z`.
///
/// The bracket factors are `m^2 - (3/2) d` and `m^2 - (1/2) d`, i.e. the
/// lambda-form brackets `m^2 - 3(lambda-lambda')` and `m^2 - (lambda-lambda')`
/// carried through `lambda - lambda' = d/2`.
pub fn density_backward(nu: &WeightFunction<f64>, z: f64, b: f64, t_grid: &[f64]) -> Result<DensityCurve> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    let h = nu.grid.h();
    check_grid_resolution(t_grid, model::vartheta_of_t, h)?;
    let vt_end = nu.grid.end();
    let mut g = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let vt = model::vartheta_of_t(t)?;
        if vt > vt_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} maps to vartheta = {vt} beyond the solved range {vt_end}"
            )));
        }
        let vt = vt.min(vt_end);
        if vt <= 0.0 {
            g.push(0.0);
            continue;
        }
        let pt = BackwardPoint { vt, z, b };
        let w7 = |tp: f64| {
            let (m, v, d) = pt.parts(tp);
            if d <= 0.0 {
                return 0.0;
            }
            let v2 = v * v;
            (m * m - 1.5 * d) * m * (-m * m / d).exp() * (1.0 - tp) * interp_weight(nu, tp)
                / (SQRT_PI * v2 * v * v.sqrt())
        };
        let w5 = |tp: f64| {
            let (m, v, d) = pt.parts(tp);
            if d <= 0.0 {
                return 0.0;
            }
            (m * m - 0.5 * d) * (-m * m / d).exp() * (1.0 - tp) * interp_weight(nu, tp)
                / (SQRT_PI * v * v * v.sqrt())
        };
        let expo = |tp: f64| pt.exponent(tp);
        let i7 = singular_product_integral(&nu.grid.nodes, vt, Power::P72, &Integrand { w: &w7, exponent: &expo });
        let i5 = singular_product_integral(&nu.grid.nodes, vt, Power::P52, &Integrand { w: &w5, exponent: &expo });
        g.push(4.0 * (-2.0 * t).exp() * i7 + 4.0 * (-t).exp() * z * i5);
    }
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        g,
        cdf: Vec::new(),
        meta: CurveMeta { z, b, scheme: nu.scheme, n: nu.grid.n_steps() },
    })
}

/// `G(t, z)` evaluated from the time-form weight function as a convolution,
///
/// `G(t) = (2/sqrt(pi)) int_0^t (z e^{-s} - b)
///         exp(-(z e^{-s} - b)^2/(1 - e^{-2s})) (1 - e^{-2s})^{-3/2}
///         nu(t - s) ds` ;
///
/// the integrand is bounded for all lags, so this route stays accurate at
/// horizons where the vartheta coordinate is saturated at 1.
pub fn cdf_backward_tform(nu_t: &WeightFunction<f64>, z: f64, b: f64, t_grid: &[f64]) -> Result<DensityCurve> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    let t_end = nu_t.grid.end();
    let mut cdf = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t > t_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("t = {t} beyond the solved horizon {t_end}")));
        }
        if t <= 0.0 {
            cdf.push(0.0);
            continue;
        }
        let t = t.min(t_end);
        let w = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let q = z * (-s).exp() - b;
            let wden = -(-2.0 * s).exp_m1(); // 1 - e^{-2s}
            2.0 / SQRT_PI * q * (-q * q / wden).exp() / (wden * wden.sqrt()) * interp_weight(nu_t, t - s)
        };
        let expo = |s: f64| {
            if s <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let q = z * (-s).exp() - b;
            -q * q / -(-2.0 * s).exp_m1()
        };
        cdf.push(singular_product_integral(
            &nu_t.grid.nodes,
            t,
            Power::P0,
            &Integrand { w: &w, exponent: &expo },
        ));
    }
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        g: Vec::new(),
        cdf,
        meta: CurveMeta { z, b, scheme: nu_t.scheme, n: nu_t.grid.n_steps() },
    })
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth > 42 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Expected hitting time `E[s] = int_0^{t_max} (1 - G(t)) dt` through the
/// time-form backward pipeline. The returned flag is set when
/// `1 - G(t_max) > tail_tol`, i.e. when the truncated integral understates
/// the mean.
pub fn expected_hitting_time(z: f64, b: f64, t_max: f64, tail_tol: f64) -> Result<(f64, bool)> {
    if !(z > b) {
        return Err(Error::Domain(format!("requires z > b, got z = {z}, b = {b}")));
    }
    if !(t_max > 0.0 && t_max <= model::T_MAX * 2.0) {
        return Err(Error::Domain(format!("t_max must lie in (0, {}], got {t_max}", model::T_MAX * 2.0)));
    }
    let n = ((t_max / 0.05).ceil() as usize).clamp(200, 20_000) / 2 * 2;
    let nu_t = nu_backward_tform(b, n, t_max)?;
    let survival = |t: f64| -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let curve = cdf_backward_tform(&nu_t, z, b, &[t]).expect("in range");
        (1.0 - curve.cdf[0]).max(0.0)
    };
    let e = adaptive_simpson(&|t| survival(t), 0.0, t_max, 1e-5);
    let tail = survival(t_max);
    Ok((e, tail > tail_tol))
}

/// Asymptotic helper: `nu` in the time form plus `G` at one large horizon
/// for a sweep of barriers. `kappa(s)` of the convolution kernel is bounded,
/// so horizons like `t = 500` pose no scale problems.
pub fn survival_at_horizon(z: f64, b: f64, horizon: f64, n: usize) -> Result<f64> {
    let nu_t = nu_backward_tform(b, n, horizon)?;
    let curve = cdf_backward_tform(&nu_t, z, b, &[horizon])?;
    Ok(curve.cdf[0])
}
