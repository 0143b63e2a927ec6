//! The homogeneous transform `v_rho(z) = int_0^inf u(z/t) t^{rho-1} dt` of a
//! normalized potential, and the angular objects it reduces to.
//!
//! For `0 < rho < 1`,
//!
//! ```text
//! int_0^inf log|1 - z/t| t^{rho-1} dt = c_rho r^rho cos rho(theta - pi),   c_rho = pi / (rho sin pi rho),
//! ```
//!
//! so `v_rho(r e^{i theta}) = r^rho h_rho(theta)` where `h_rho = phi_rho * nu_rho`
//! is the convolution of the periodic kernel `phi_rho` with the angular
//! measure `nu_rho(E) = c_rho int_{arg zeta in E} |zeta|^{-rho} dmu`.
//! The second difference `2 h_rho(0) - h_rho(a) - h_rho(-a)` is the pairing of
//! `nu_rho` with `J_rho(t) = 2 phi_rho(t) - phi_rho(t - a) - phi_rho(t + a)`,
//! and `J_rho / rho^2` tends to a multiple of the limit kernel `J` as `rho -> 0`.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::measure::{Component, LinearSegment, Measure};
use crate::obrechkoff::{kernel_j_unchecked, KernelParams};
use crate::potential::{log_abs_one_minus, normalized_potential};
use crate::quadrature::{integrate, integrate_points, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoParams {
    rho: f64,
}

impl RhoParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(domain("rho", rho));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `c_rho = pi / (rho sin(pi rho))`.
pub fn c_rho(p: RhoParams) -> f64 {
    PI / (p.rho * (PI * p.rho).sin())
}

/// Reduces `theta` into `[0, 2 pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// 2pi-periodic extension of `cos rho(theta - pi)` from `[0, 2pi)`.
pub fn phi_rho(theta: f64, p: RhoParams) -> f64 {
    (p.rho * (wrap_angle(theta) - PI)).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MellinMode {
    ClosedForm,
    Quadrature,
}

fn mellin_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 4000 }
}

/// `int_0^inf log|1 - z/t| t^{rho-1} dt`.
pub fn mellin_log_integral(z: Complex64, p: RhoParams, mode: MellinMode) -> Result<f64> {
    let r = z.norm();
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain("|z|", r));
    }
    let theta = wrap_angle(z.arg());
    let rho = p.rho;
    match mode {
        MellinMode::ClosedForm => Ok(c_rho(p) * r.powf(rho) * (rho * (theta - PI)).cos()),
        MellinMode::Quadrature => {
            // t = r x. On x < 1, log|1 - e^{i theta}/x| = log|1 - x e^{-i theta}| - log x
            // and x = y^{1/rho}; on x > 1, 1/x = y^k with k = 1/(1 - rho).
            let e = Complex64::from_polar(1.0, theta);
            let spec = mellin_spec();
            let inner = integrate(|y: f64| log_abs_one_minus(y.powf(1.0 / rho) * e.conj()), 0.0, 1.0, &spec)? / rho
                + 1.0 / (rho * rho);
            let k = 1.0 / (1.0 - rho);
            let outer = integrate(
                |y: f64| {
                    let w = y.powf(k);
                    if w == 0.0 {
                        -k * theta.cos()
                    } else {
                        k * log_abs_one_minus(w * e) / w
                    }
                },
                0.0,
                1.0,
                &spec,
            )?;
            Ok(r.powf(rho) * (inner + outer))
        }
    }
}

/// Angular measure on `[0, 2pi)`: atoms plus a piecewise-linear density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AngularMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub segments: Vec<LinearSegment>,
}

impl AngularMeasure {
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.segments.iter().map(LinearSegment::mass).sum::<f64>()
    }

    /// `int f d nu`; `kinks` are the points where `f` is not smooth.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, kinks: &[f64]) -> Result<f64> {
        let mut total: f64 = self.atoms.iter().map(|&(t, w)| w * f(t)).sum();
        let spec = QuadratureSpec::with_tol(1e-13);
        for s in &self.segments {
            let mut pts = vec![s.lo];
            pts.extend(kinks.iter().copied().filter(|&k| k > s.lo && k < s.hi));
            pts.push(s.hi);
            total += integrate_points(|t| f(t) * s.value(t), &pts, &spec)?.value;
        }
        Ok(total)
    }
}

/// Angular density of `int |zeta|^{-rho} d(tail)` per unit scale,
/// `(1/(2 alpha)) pi q / sin(pi q)` with `q = rho alpha / pi`.
fn tail_angular_density(alpha: f64, rho: f64) -> f64 {
    let q = rho * alpha / PI;
    PI * q / (PI * q).sin() / (2.0 * alpha)
}

/// `nu_rho(E) = c_rho int_{arg zeta in E} |zeta|^{-rho} dmu`.
pub fn nu_rho(m: &Measure, p: RhoParams) -> AngularMeasure {
    let c = c_rho(p);
    let mut out = AngularMeasure::default();
    for comp in m.components() {
        match comp {
            Component::Atom(a) if a.mass == 0.0 => {}
            Component::Atom(a) => {
                out.atoms.push((wrap_angle(a.location.arg()), c * a.mass * a.location.norm().powf(-p.rho)));
            }
            Component::UniformCircle(u) => {
                let v = c * u.mass * u.radius.powf(-p.rho) / TAU;
                out.segments.push(LinearSegment { lo: 0.0, hi: TAU, v_lo: v, v_hi: v });
            }
            Component::ExtremalTail(e) => {
                let v = c * e.mass_scale * tail_angular_density(e.alpha, p.rho);
                out.segments.push(LinearSegment { lo: 2.0 * e.alpha, hi: TAU - 2.0 * e.alpha, v_lo: v, v_hi: v });
            }
            Component::Tabulated(d) => {
                for s in d.angular_segments(2.0 - p.rho) {
                    let s = LinearSegment { v_lo: c * s.v_lo, v_hi: c * s.v_hi, ..s };
                    if s.hi <= 0.0 {
                        out.segments.push(LinearSegment { lo: s.lo + TAU, hi: s.hi + TAU, ..s });
                    } else if s.lo >= 0.0 {
                        out.segments.push(s);
                    } else {
                        let v0 = s.value(0.0);
                        out.segments.push(LinearSegment { lo: s.lo + TAU, hi: TAU, v_lo: s.v_lo, v_hi: v0 });
                        out.segments.push(LinearSegment { lo: 0.0, hi: s.hi, v_lo: v0, v_hi: s.v_hi });
                    }
                }
            }
        }
    }
    out
}

/// `h_rho(theta) = int phi_rho(theta - t) d nu_rho(t)`.
pub fn h_rho(m: &Measure, theta: f64, p: RhoParams) -> Result<f64> {
    h_rho_of(&nu_rho(m, p), theta, p)
}

pub fn h_rho_of(nu: &AngularMeasure, theta: f64, p: RhoParams) -> Result<f64> {
    nu.integrate(|t| phi_rho(theta - t, p), &[wrap_angle(theta)])
}

/// `v_rho(z)` by direct quadrature of the normalized potential.
///
/// The half-line is cut at `T_lo < |z|/R_max` and `T_hi > |z|/R_min`; the
/// ends are mapped by `t = T_lo y^{1/rho}` and `t = T_hi y^{-1/(1-rho)}`,
/// which turn the weight `t^{rho-1}` into a constant.
pub fn v_rho_numeric(m: &Measure, z: Complex64, p: RhoParams) -> Result<f64> {
    let rz = z.norm();
    if !(rz > 0.0 && rz.is_finite()) {
        return Err(domain("|z|", rz));
    }
    let Some((rmin, rmax)) = m.support_radii() else {
        return Ok(0.0);
    };
    let rho = p.rho;
    let t_lo = 0.5 * rz / rmax;
    let t_hi = 2.0 * rz / rmin;

    let failure = RefCell::new(None);
    let u = |w: Complex64| -> f64 {
        match normalized_potential(m, w) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => 0.0,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let spec = mellin_spec();

    let left = integrate(
        |y: f64| {
            let t = t_lo * y.powf(1.0 / rho);
            if t > 0.0 && t.is_finite() {
                u(z / t)
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        &spec,
    )? * t_lo.powf(rho)
        / rho;

    let mut pts = vec![t_lo, t_hi];
    for comp in m.components() {
        let radius = match comp {
            Component::Atom(a) => a.location.norm(),
            Component::UniformCircle(c) => c.radius,
            _ => continue,
        };
        let t = rz / radius;
        if t > t_lo && t < t_hi {
            pts.push(t);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let middle = integrate_points(|t: f64| u(z / t) * t.powf(rho - 1.0), &pts, &spec)?.value;

    let k = 1.0 / (1.0 - rho);
    let right = integrate(
        |y: f64| {
            let w = z * (y.powf(k) / t_hi);
            if w.norm() < 1e-250 {
                0.0
            } else {
                u(w) * y.powf(-k)
            }
        },
        0.0,
        1.0,
        &spec,
    )? * k
        * t_hi.powf(rho);

    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(left + middle + right)
}

/// `2 phi_rho(t) - phi_rho(t - a) - phi_rho(t + a)`, evaluated as a sum of
/// products of sines so that small `rho` loses no relative accuracy.
pub fn j_rho_kernel(t: f64, params: KernelParams, p: RhoParams) -> f64 {
    let a = params.a();
    let g = |s: f64| p.rho * (wrap_angle(s) - PI);
    let (x0, x1, x2) = (g(t), g(t - a), g(t + a));
    // cos A - cos B = -2 sin((A+B)/2) sin((A-B)/2)
    let diff = |x: f64, y: f64| -2.0 * (0.5 * (x + y)).sin() * (0.5 * (x - y)).sin();
    diff(x0, x1) + diff(x0, x2)
}

/// `2 h_rho(0) - h_rho(a) - h_rho(-a)`.
pub fn concavity_difference(m: &Measure, params: KernelParams, p: RhoParams) -> Result<f64> {
    let nu = nu_rho(m, p);
    let a = params.a();
    Ok(2.0 * h_rho_of(&nu, 0.0, p)? - h_rho_of(&nu, a, p)? - h_rho_of(&nu, -a, p)?)
}

/// `int J_rho d nu_rho`; equal to [`concavity_difference`] by evenness of `phi_rho`.
pub fn j_rho_pairing(m: &Measure, params: KernelParams, p: RhoParams) -> Result<f64> {
    let a = params.a();
    let kinks = [a, TAU - a, 0.0];
    nu_rho(m, p).integrate(|t| j_rho_kernel(t, params, p), &kinks)
}

/// Step sizes of the extrapolation sequence for `J_rho / rho^2`.
pub const RICHARDSON_RHOS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Limit of `J_rho(t) / rho^2` as `rho -> 0`, by two Richardson steps in `rho^2`.
pub fn kernel_limit(t: f64, params: KernelParams) -> Result<f64> {
    if !(t.abs() <= PI) {
        return Err(domain("t", t));
    }
    let g = RICHARDSON_RHOS.map(|rho| {
        let p = RhoParams { rho };
        j_rho_kernel(t, params, p) / (rho * rho)
    });
    let r1 = [(4.0 * g[1] - g[0]) / 3.0, (4.0 * g[2] - g[1]) / 3.0];
    Ok((16.0 * r1[1] - r1[0]) / 15.0)
}

/// Least-squares fit of `kernel_limit(t) ~ kappa J(t)` over a grid of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub a: f64,
    pub kappa: f64,
    /// `max_t |limit(t) - kappa J(t)|`.
    pub residual: f64,
    pub max_abs_j: f64,
    /// Signs of the limit and of `J` agree wherever `|J|` is not negligible.
    pub sign_match: bool,
    pub table: Vec<LimitRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub t: f64,
    pub limit: f64,
    pub j: f64,
}

/// Residual allowed relative to `max |J|`.
pub const LIMIT_FIT_TOL: f64 = 1e-3;

pub fn limit_factor_estimate(params: KernelParams, t_grid: &[f64]) -> Result<LimitFit> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInterval { lo: 0.0, hi: 0.0 });
    }
    let a = params.a();
    let table = t_grid
        .iter()
        .map(|&t| Ok(LimitRow { t, limit: kernel_limit(t, params)?, j: kernel_j_unchecked(t, a) }))
        .collect::<Result<Vec<_>>>()?;
    let jj: f64 = table.iter().map(|r| r.j * r.j).sum();
    let lj: f64 = table.iter().map(|r| r.limit * r.j).sum();
    let max_abs_j = table.iter().map(|r| r.j.abs()).fold(0.0, f64::max);
    if jj == 0.0 {
        return Err(Error::IllConditioned { residual: f64::INFINITY, bound: 0.0 });
    }
    let kappa = lj / jj;
    let residual = table.iter().map(|r| (r.limit - kappa * r.j).abs()).fold(0.0, f64::max);
    let bound = LIMIT_FIT_TOL * max_abs_j;
    if !(residual <= bound) {
        return Err(Error::IllConditioned { residual, bound });
    }
    let floor = 1e-6 * max_abs_j;
    let sign_match = table
        .iter()
        .filter(|r| r.j.abs() > floor)
        .all(|r| r.limit.signum() == r.j.signum());
    Ok(LimitFit { a, kappa, residual, max_abs_j, sign_match, table })
}

/// `n` equally spaced points on `[-pi, pi]`.
pub fn default_t_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * (2.0 * i as f64 / (n - 1) as f64 - 1.0)).collect(),
    }
}
